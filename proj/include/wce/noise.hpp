#pragma once

#include "wce/grid.hpp"

#include <cstdint>

namespace wce {

// One realization of the white-noise cell increments. Under the base measure
// each increment is centered Gaussian with variance equal to the cell measure,
// independently across cells. After shift_noise the entries are the realized
// cell masses of the shifted measure instead.
struct NoisePath {
    GridPtr grid;
    Eigen::VectorXd increments;
    std::uint64_t seed = 0;
};

// Deterministic square-integrable control; induces the measure
// nu(cell) = u(cell) * cell_measure.
class Control {
public:
    explicit Control(GridFn u);
    static Control zero(const GridPtr& grid);

    const GridFn& fn() const { return u_; }
    const Eigen::VectorXd& values() const { return u_.values; }
    const GridPtr& grid() const { return u_.grid; }
    double norm_sq() const { return norm_sq_; }

    Control scaled(double c) const;

private:
    GridFn u_;
    double norm_sq_;
};

// (seed, grid) fully determines the path; identical seeds give bit-identical paths.
NoisePath sample_white_noise(const GridPtr& grid, std::uint64_t seed);

// Per-cell value eps * increment + u(cell) * cell_measure.
NoisePath shift_noise(const NoisePath& path, const Control& u, double eps);

// X(h) = sum_cells h * increment; W_t for h = 1_{[0,t]}.
double isonormal(const NoisePath& path, const GridFn& h);

// Fractional Brownian motion covariance R_H(t,s) = (t^2H + s^2H - |t-s|^2H)/2.
Eigen::MatrixXd fbm_covariance(const Eigen::VectorXd& times, double hurst);

// Lower-triangular factor of R_H + 1e-12 I; throws if the regularized matrix
// is not positive definite.
Eigen::MatrixXd fbm_generator(const Eigen::VectorXd& times, double hurst);

Eigen::VectorXd sample_fbm(const Eigen::VectorXd& times, double hurst, std::uint64_t seed);

} // namespace wce
