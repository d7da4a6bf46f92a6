#pragma once

#include "wce/integrals.hpp"

#include <functional>

namespace wce {

// Truncated chaos expansion over the family's site set. The exponential-type
// fit is computed once at construction and drives the truncation-tail
// diagnostics.
class ChaosSpec {
public:
    ChaosSpec(KernelFamily family, int n_max, double tail_tolerance = 1e-6);

    const KernelFamily& family() const { return family_; }
    int n_max() const { return n_max_; }
    double delta_fit() const { return delta_fit_; }
    double tail_tolerance() const { return tail_tolerance_; }
    const GridPtr& grid() const { return family_.grid(); }
    Index site_count() const { return family_.site_count(); }

    // Optional hook producing an eps-dependent family; the default keeps the
    // limit kernels for every eps.
    std::function<KernelFamily(double)> family_for_eps;

private:
    KernelFamily family_;
    int n_max_;
    double tail_tolerance_;
    double delta_fit_;
};

struct PathValue {
    Eigen::VectorXd values; // one per site
    bool tail_warning = false;
};

// X^eps at every site: f_0 + sum_{n>=1} eps^n I_n(f_n^z).
PathValue assemble(const ChaosSpec& spec, const NoisePath& path, double eps);

// X^{eps,u}: chaos orders evaluated on the shifted cell masses.
PathValue assemble_controlled(const ChaosSpec& spec, const NoisePath& path, const Control& u,
                              double eps);

// Deterministic skeleton X^u = sum_n J_n^u(f_n^z).
PathValue skeleton(const ChaosSpec& spec, const Control& u);

// Tail majorant sum_{n > n_max} (kappa * delta)^n / sqrt(n!); throws when the
// exponential-type fit gives no contracting bound at this kappa.
double truncation_tail(const ChaosSpec& spec, double kappa);

} // namespace wce
