#pragma once

#include "wce/process.hpp"
#include "wce/rate.hpp"

namespace wce {

struct EventSpec {
    enum class Kind { SiteThreshold, SupBall };

    Kind kind = Kind::SiteThreshold;
    // site_threshold
    Index site = 0;
    double level = 0.0;
    bool upper = true; // X(site) >= level; false for <=
    // sup_ball: sup_z |X(z) - center(z)| <= radius
    Eigen::VectorXd center;
    double radius = 0.0;

    static EventSpec site_threshold(Index site, double level, bool upper = true);
    static EventSpec sup_ball(Eigen::VectorXd center, double radius);

    bool contains(const Eigen::VectorXd& x) const;
};

struct Estimate {
    double p_hat = 0.0;
    double std_err = 0.0;
    double log_p = 0.0;     // log of p_hat, carried in log space
    double ess = 0.0;       // effective sample size of the event-restricted weights
    long long hits = 0;
    bool reliable = true;   // untilted estimates with too few hits are flagged
};

// Plain or exponentially tilted Monte Carlo for P(X^eps in event). With a
// tilt u*, paths are shifted by u*/eps and each sample is reweighted by the
// Gaussian likelihood ratio exp(-<u*, dW>/eps - ||u*||^2/(2 eps^2)), computed
// in log space. A tilted run with event ESS below 50 throws estimator_error.
Estimate estimate_probability(const ChaosSpec& spec, const EventSpec& event, double eps,
                              long long n_samples, std::uint64_t seed,
                              const Control* tilt = nullptr);

enum class Speed { Eps, Eps2 };
double speed_value(Speed s, double eps);

struct ScanRow {
    double eps = 0.0;
    double estimate = 0.0;
    double std_err = 0.0;
    double empirical_rate = 0.0;
    double theory_rate = 0.0;
    double tilt_norm = 0.0;
    double ess = 0.0;
};

struct LdpReport {
    std::vector<ScanRow> rows; // sorted by eps descending
    double theory_lambda = 0.0;
    Speed speed = Speed::Eps2;
};

// Tilted scan across eps with the rate-solver control as the default tilt and
// the rate-function infimum in the theory column.
LdpReport ldp_scan(const ChaosSpec& spec, const EventSpec& event,
                   const std::vector<double>& eps_list, Speed speed, long long n_samples,
                   std::uint64_t seed, const Control* tilt_override = nullptr,
                   const RateOptions& rate_opts = {});

struct ProbeRow {
    double eps = 0.0;
    double rms = 0.0; // RMS over paths and sites of X^{eps,u} - X^u
};

std::vector<ProbeRow> convergence_probe(const ChaosSpec& spec, const Control& u,
                                        const std::vector<double>& eps_list, long long n_samples,
                                        std::uint64_t seed);

} // namespace wce
