#pragma once

#include "wce/process.hpp"

#include <optional>

namespace wce {

struct RateResult {
    double lambda = 0.0;                 // +inf sentinel for certified infeasibility
    std::optional<Control> u_star;
    double residual = 0.0;               // constraint violation norm
    int iterations = 0;
    bool converged = false;
    bool infeasible_certified = false;
};

struct RateOptions {
    int starts = 8;              // multi-starts for nonconvex constraints
    int stages = 6;              // penalty continuation stages, weight x10 each
    double rho0 = 10.0;          // initial penalty weight
    double inner_tol = 1e-8;     // gradient norm tolerance of the inner solver
    int max_inner = 5000;
    double residual_tol = 1e-6;
    std::uint64_t seed = 0x5CE5EEDull;
};

// Lambda_R(r) = inf { ||u||^2/2 : X^u(z) = r }. First-chaos specs use the
// closed-form least-norm projection; single even-order rank-one specs carry a
// range certificate for infeasibility; everything else runs the penalty
// solver and reports the best feasible value found (an upper bound when not
// converged).
RateResult rate_pointwise(const ChaosSpec& spec, Index site, double r,
                          const RateOptions& opts = {});

// Lambda(psi) = inf { ||u||^2/2 : X^u = psi at every site }.
RateResult rate_path(const ChaosSpec& spec, const Eigen::VectorXd& psi,
                     const RateOptions& opts = {});

// Riesz gradient of the skeleton value at one site with respect to u, under
// the mu-weighted inner product.
GridFn skeleton_gradient(const ChaosSpec& spec, const Control& u, Index site);

} // namespace wce
