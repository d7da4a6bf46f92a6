#include "wce/ldp.hpp"

#include "wce/errors.hpp"
#include "wce/parallel.hpp"
#include "wce/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wce {

namespace {
constexpr std::ptrdiff_t kChunk = 4096;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
} // namespace

EventSpec EventSpec::site_threshold(Index site, double level, bool upper) {
    EventSpec e;
    e.kind = Kind::SiteThreshold;
    e.site = site;
    e.level = level;
    e.upper = upper;
    return e;
}

EventSpec EventSpec::sup_ball(Eigen::VectorXd center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    EventSpec e;
    e.kind = Kind::SupBall;
    e.center = std::move(center);
    e.radius = radius;
    return e;
}

bool EventSpec::contains(const Eigen::VectorXd& x) const {
    switch (kind) {
    case Kind::SiteThreshold:
        return upper ? x[site] >= level : x[site] <= level;
    case Kind::SupBall:
        return (x - center).lpNorm<Eigen::Infinity>() <= radius;
    }
    return false;
}

double speed_value(Speed s, double eps) { return s == Speed::Eps ? eps : eps * eps; }

namespace {

struct MomentChunk {
    // Log-space accumulators of the weighted indicator: max log weight over
    // hits, then sum exp(lw - lmax) and sum exp(2(lw - lmax)).
    double lmax = kNegInf;
    double s1 = 0.0;
    double s2 = 0.0;
    long long hits = 0;
};

MomentChunk combine(const MomentChunk& a, const MomentChunk& b) {
    MomentChunk out;
    out.hits = a.hits + b.hits;
    out.lmax = std::max(a.lmax, b.lmax);
    if (out.lmax == kNegInf) return out;
    const double ra = a.lmax == kNegInf ? 0.0 : std::exp(a.lmax - out.lmax);
    const double rb = b.lmax == kNegInf ? 0.0 : std::exp(b.lmax - out.lmax);
    out.s1 = a.s1 * ra + b.s1 * rb;
    out.s2 = a.s2 * ra * ra + b.s2 * rb * rb;
    return out;
}

} // namespace

Estimate estimate_probability(const ChaosSpec& spec, const EventSpec& event, double eps,
                              long long n_samples, std::uint64_t seed, const Control* tilt) {
    if (n_samples < 100) throw std::invalid_argument("need at least 100 samples");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (event.kind == EventSpec::Kind::SiteThreshold &&
        (event.site < 0 || event.site >= spec.site_count()))
        throw std::invalid_argument("event site out of range");
    if (event.kind == EventSpec::Kind::SupBall && event.center.size() != spec.site_count())
        throw std::invalid_argument("ball center must cover every site");
    const GridPtr& grid = spec.grid();

    std::optional<Control> shift;
    double tilt_norm_sq = 0.0;
    if (tilt) {
        shift = tilt->scaled(1.0 / eps);
        tilt_norm_sq = tilt->norm_sq();
    }

    MomentChunk total;
    chunked_reduce<MomentChunk>(
        n_samples, kChunk,
        [&](std::ptrdiff_t b, std::ptrdiff_t e, std::ptrdiff_t) {
            MomentChunk acc;
            for (std::ptrdiff_t s = b; s < e; ++s) {
                const NoisePath path =
                    sample_white_noise(grid, derive_stream(seed, static_cast<std::uint64_t>(s)));
                double lw = 0.0;
                bool hit = false;
                if (shift) {
                    const NoisePath shifted = shift_noise(path, *shift, 1.0);
                    hit = event.contains(assemble(spec, shifted, eps).values);
                    if (hit)
                        lw = -tilt->values().dot(path.increments) / eps -
                             tilt_norm_sq / (2.0 * eps * eps);
                } else {
                    hit = event.contains(assemble(spec, path, eps).values);
                }
                if (!hit) continue;
                ++acc.hits;
                if (lw > acc.lmax) {
                    const double r = acc.lmax == kNegInf ? 0.0 : std::exp(acc.lmax - lw);
                    acc.s1 = acc.s1 * r + 1.0;
                    acc.s2 = acc.s2 * r * r + 1.0;
                    acc.lmax = lw;
                } else {
                    const double d = std::exp(lw - acc.lmax);
                    acc.s1 += d;
                    acc.s2 += d * d;
                }
            }
            return acc;
        },
        [&](const MomentChunk& c, std::ptrdiff_t) { total = combine(total, c); });

    Estimate est;
    est.hits = total.hits;
    const double n = static_cast<double>(n_samples);
    if (total.hits == 0) {
        est.p_hat = 0.0;
        est.std_err = 0.0;
        est.log_p = kNegInf;
        est.ess = 0.0;
        est.reliable = false;
    } else {
        est.log_p = total.lmax + std::log(total.s1) - std::log(n);
        est.p_hat = std::exp(est.log_p);
        // Sample variance of the weighted indicator.
        const double m2 = std::exp(2.0 * total.lmax + std::log(total.s2) - std::log(n));
        const double var = std::max(0.0, (m2 - est.p_hat * est.p_hat)) / std::max(1.0, n - 1.0);
        est.std_err = std::sqrt(var);
        est.ess = total.s1 * total.s1 / total.s2;
        est.reliable = tilt ? true : total.hits >= 16;
    }
    if (tilt && est.ess < 50.0)
        throw estimator_error("tilted estimator has effective sample size below 50", est.ess,
                              est.hits);
    return est;
}

LdpReport ldp_scan(const ChaosSpec& spec, const EventSpec& event,
                   const std::vector<double>& eps_list, Speed speed, long long n_samples,
                   std::uint64_t seed, const Control* tilt_override,
                   const RateOptions& rate_opts) {
    if (eps_list.empty()) throw std::invalid_argument("eps list is empty");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("eps list must be strictly decreasing");

    // Theory value and default tilt from the dominating point of the event.
    RateResult rate;
    if (event.kind == EventSpec::Kind::SiteThreshold)
        rate = rate_pointwise(spec, event.site, event.level, rate_opts);
    else
        rate = rate_path(spec, event.center, rate_opts);

    const Control* tilt = tilt_override;
    if (!tilt && rate.u_star && std::isfinite(rate.lambda)) tilt = &*rate.u_star;

    LdpReport report;
    report.speed = speed;
    report.theory_lambda = rate.lambda;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        const double eps = eps_list[i];
        const Estimate est = estimate_probability(
            spec, event, eps, n_samples, derive_stream(seed, 1000 + static_cast<std::uint64_t>(i)),
            tilt);
        ScanRow row;
        row.eps = eps;
        row.estimate = est.p_hat;
        row.std_err = est.std_err;
        row.empirical_rate = -speed_value(speed, eps) * est.log_p;
        row.theory_rate = rate.lambda;
        row.tilt_norm = tilt ? std::sqrt(tilt->norm_sq()) : 0.0;
        row.ess = est.ess;
        report.rows.push_back(row);
    }
    return report;
}

std::vector<ProbeRow> convergence_probe(const ChaosSpec& spec, const Control& u,
                                        const std::vector<double>& eps_list, long long n_samples,
                                        std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("need at least one sample");
    const PathValue limit = skeleton(spec, u);
    const GridPtr& grid = spec.grid();
    std::vector<ProbeRow> rows;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        const double eps = eps_list[i];
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
        double total_sq = 0.0;
        chunked_reduce<double>(
            n_samples, kChunk,
            [&](std::ptrdiff_t b, std::ptrdiff_t e, std::ptrdiff_t) {
                double acc = 0.0;
                for (std::ptrdiff_t s = b; s < e; ++s) {
                    const NoisePath path = sample_white_noise(
                        grid, derive_stream(seed, static_cast<std::uint64_t>(s) * 7919u +
                                                      static_cast<std::uint64_t>(i)));
                    const PathValue x = assemble_controlled(spec, path, u, eps);
                    acc += (x.values - limit.values).squaredNorm();
                }
                return acc;
            },
            [&](double c, std::ptrdiff_t) { total_sq += c; });
        ProbeRow row;
        row.eps = eps;
        row.rms = std::sqrt(total_sq /
                            (static_cast<double>(n_samples) * static_cast<double>(limit.values.size())));
        rows.push_back(row);
    }
    return rows;
}

} // namespace wce
