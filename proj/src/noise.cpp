#include "wce/noise.hpp"

#include "wce/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace wce {

Control::Control(GridFn u) : u_(std::move(u)), norm_sq_(l2_inner(u_, u_)) {
    if (!std::isfinite(norm_sq_)) throw std::invalid_argument("control has non-finite norm");
}

Control Control::zero(const GridPtr& grid) { return Control(constant_fn(grid, 0.0)); }

Control Control::scaled(double c) const {
    return Control(GridFn{u_.grid, u_.values * c});
}

NoisePath sample_white_noise(const GridPtr& grid, std::uint64_t seed) {
    GaussianStream gauss(seed);
    const Index n = grid->cell_count();
    Eigen::VectorXd inc(n);
    for (Index i = 0; i < n; ++i)
        inc[i] = gauss.next() * std::sqrt(grid->cell_measure()[i]);
    return NoisePath{grid, std::move(inc), seed};
}

NoisePath shift_noise(const NoisePath& path, const Control& u, double eps) {
    if (!path.grid->same_layout(*u.grid()))
        throw std::invalid_argument("control and path live on different grids");
    Eigen::VectorXd shifted =
        eps * path.increments + u.values().cwiseProduct(path.grid->cell_measure());
    return NoisePath{path.grid, std::move(shifted), path.seed};
}

double isonormal(const NoisePath& path, const GridFn& h) {
    if (!path.grid->same_layout(*h.grid))
        throw std::invalid_argument("integrand and path live on different grids");
    return path.increments.dot(h.values);
}

Eigen::MatrixXd fbm_covariance(const Eigen::VectorXd& times, double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw std::invalid_argument("Hurst exponent must lie in (0,1)");
    const Index n = times.size();
    const double two_h = 2.0 * hurst;
    Eigen::MatrixXd r(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j <= i; ++j) {
            const double t = times[i];
            const double s = times[j];
            r(i, j) = 0.5 * (std::pow(t, two_h) + std::pow(s, two_h) -
                             std::pow(std::abs(t - s), two_h));
            r(j, i) = r(i, j);
        }
    }
    return r;
}

Eigen::MatrixXd fbm_generator(const Eigen::VectorXd& times, double hurst) {
    Eigen::MatrixXd r = fbm_covariance(times, hurst);
    r.diagonal().array() += 1e-12;
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("fBm covariance is not positive definite after regularization");
    return llt.matrixL();
}

Eigen::VectorXd sample_fbm(const Eigen::VectorXd& times, double hurst, std::uint64_t seed) {
    const Eigen::MatrixXd gen = fbm_generator(times, hurst);
    GaussianStream gauss(seed);
    Eigen::VectorXd z(times.size());
    for (Index i = 0; i < z.size(); ++i) z[i] = gauss.next();
    return gen * z;
}

} // namespace wce
