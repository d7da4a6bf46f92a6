#include "wce/process.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace wce {

ChaosSpec::ChaosSpec(KernelFamily family, int n_max, double tail_tolerance)
    : family_(std::move(family)), n_max_(n_max), tail_tolerance_(tail_tolerance) {
    if (n_max_ < 0 || n_max_ > family_.max_order())
        throw std::invalid_argument("truncation order exceeds the family");
    const ExpTypeReport fit = check_exponential_type(family_);
    if (!fit.pass) throw std::invalid_argument("family fails the exponential-type check");
    delta_fit_ = fit.delta_fit;
}

namespace {

PathValue assemble_on(const ChaosSpec& spec, const Eigen::VectorXd& cell_values, double eps) {
    const KernelFamily* fam = &spec.family();
    std::optional<KernelFamily> eps_family;
    if (spec.family_for_eps) {
        eps_family = spec.family_for_eps(eps);
        fam = &*eps_family;
    }

    PathValue out;
    out.values.resize(fam->site_count());
    const int top = std::min(spec.n_max(), fam->max_order());
    for (Index z = 0; z < fam->site_count(); ++z) {
        double acc = fam->at(z, 0).constant_value();
        for (int n = 1; n <= top; ++n)
            acc += off_diagonal_sum(fam->at(z, n), cell_values);
        out.values[z] = acc;
    }
    if (eps > 0.0 && spec.delta_fit() > 0.0) {
        const double ratio =
            eps * spec.delta_fit() / std::sqrt(static_cast<double>(spec.n_max() + 2));
        out.tail_warning =
            ratio >= 1.0 ||
            series_tail_bound(spec.delta_fit(), eps, spec.n_max()) > spec.tail_tolerance();
    }
    return out;
}

} // namespace

PathValue assemble(const ChaosSpec& spec, const NoisePath& path, double eps) {
    return assemble_controlled(spec, path, Control::zero(path.grid), eps);
}

PathValue assemble_controlled(const ChaosSpec& spec, const NoisePath& path, const Control& u,
                              double eps) {
    if (spec.grid() && !spec.grid()->same_layout(*path.grid))
        throw std::invalid_argument("path grid does not match the family");
    const Eigen::VectorXd shifted =
        eps * path.increments + u.values().cwiseProduct(path.grid->cell_measure());
    return assemble_on(spec, shifted, eps);
}

PathValue skeleton(const ChaosSpec& spec, const Control& u) {
    const KernelFamily& fam = spec.family();
    PathValue out;
    out.values.resize(fam.site_count());
    for (Index z = 0; z < fam.site_count(); ++z) {
        double acc = fam.at(z, 0).constant_value();
        for (int n = 1; n <= spec.n_max(); ++n)
            acc += deterministic_integral(fam.at(z, n), u);
        out.values[z] = acc;
    }
    return out;
}

double truncation_tail(const ChaosSpec& spec, double kappa) {
    return series_tail_bound(spec.delta_fit(), kappa, spec.n_max());
}

} // namespace wce
