#include "wce/rate.hpp"

#include "wce/parallel.hpp"
#include "wce/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wce {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Order-1 kernels are grid functions; collect one per site.
GridFn first_order_fn(const Kernel& k, const GridPtr& grid) {
    if (k.order() != 1) throw std::logic_error("expected an order-1 kernel");
    if (k.rep() == Kernel::Rep::Dense) return GridFn{grid, k.orbit_values()};
    Eigen::VectorXd v = Eigen::VectorXd::Zero(grid->cell_count());
    for (const auto& t : k.terms()) v += t.coeff * t.factors[0].values;
    return GridFn{grid, std::move(v)};
}

bool is_first_chaos(const ChaosSpec& spec) {
    for (Index z = 0; z < spec.site_count(); ++z)
        for (int n = 2; n <= spec.n_max(); ++n)
            if (!spec.family().at(z, n).is_zero()) return false;
    return spec.n_max() >= 1;
}

struct RankOneEven {
    double coeff = 0.0;
    double factor_norm_sq = 0.0;
};

// Detects specs whose only stochastic order is a single even-order rank-one
// power term, so the skeleton range f0 + coeff * [0, inf) certifies
// infeasibility of targets on the wrong side.
std::optional<RankOneEven> single_even_rank_one(const ChaosSpec& spec, Index site) {
    std::optional<RankOneEven> found;
    for (int n = 1; n <= spec.n_max(); ++n) {
        const Kernel& k = spec.family().at(site, n);
        if (k.is_zero()) continue;
        if (found || n % 2 != 0) return std::nullopt;
        if (k.rep() != Kernel::Rep::Separable || k.terms().size() != 1 ||
            !k.terms()[0].uniform)
            return std::nullopt;
        RankOneEven r;
        r.coeff = k.terms()[0].coeff;
        const GridFn& g = k.terms()[0].factors[0];
        r.factor_norm_sq = l2_inner(g, g);
        found = r;
    }
    return found;
}

struct Constraint {
    Index site;
    double target;
};

struct SolveOutcome {
    Eigen::VectorXd u;
    double residual = kInf;
    int iterations = 0;
    bool converged = false;
};

double constraint_residual(const ChaosSpec& spec, const Control& u,
                           const std::vector<Constraint>& cons, Eigen::VectorXd& c) {
    const PathValue sk = skeleton(spec, u);
    double sq = 0.0;
    for (std::size_t j = 0; j < cons.size(); ++j) {
        c[static_cast<Index>(j)] = sk.values[cons[j].site] - cons[j].target;
        sq += c[static_cast<Index>(j)] * c[static_cast<Index>(j)];
    }
    return std::sqrt(sq);
}

// Augmented-Lagrangian value and Riesz gradient at u.
double al_value_grad(const ChaosSpec& spec, const Eigen::VectorXd& u_values,
                     const std::vector<Constraint>& cons, const Eigen::VectorXd& lambda,
                     double rho, Eigen::VectorXd& grad) {
    const GridPtr& grid = spec.grid();
    const Control u(GridFn{grid, u_values});
    Eigen::VectorXd c(static_cast<Index>(cons.size()));
    constraint_residual(spec, u, cons, c);

    double val = 0.5 * u.norm_sq();
    grad = u_values;
    for (std::size_t j = 0; j < cons.size(); ++j) {
        const Index jj = static_cast<Index>(j);
        val += lambda[jj] * c[jj] + 0.5 * rho * c[jj] * c[jj];
        const GridFn g = skeleton_gradient(spec, u, cons[j].site);
        grad += (lambda[jj] + rho * c[jj]) * g.values;
    }
    return val;
}

double weighted_dot(const GridPtr& grid, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a.array() * b.array() * grid->cell_measure().array()).sum();
}

SolveOutcome solve_from(const ChaosSpec& spec, const std::vector<Constraint>& cons,
                        Eigen::VectorXd u, const RateOptions& opts) {
    const GridPtr& grid = spec.grid();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<Index>(cons.size()));
    Eigen::VectorXd grad(u.size()), c(static_cast<Index>(cons.size()));
    double rho = opts.rho0;
    int total_its = 0;

    for (int stage = 0; stage < opts.stages; ++stage) {
        double val = al_value_grad(spec, u, cons, lambda, rho, grad);
        Eigen::VectorXd u_prev = u, g_prev = grad;
        double step = 1.0 / (1.0 + rho);
        for (int it = 0; it < opts.max_inner; ++it) {
            ++total_its;
            const double gnorm = std::sqrt(weighted_dot(grid, grad, grad));
            if (gnorm <= opts.inner_tol * (1.0 + std::abs(val))) break;

            // Armijo backtracking on the descent direction -grad.
            double t = step;
            Eigen::VectorXd u_try;
            double val_try = val;
            bool moved = false;
            for (int bt = 0; bt < 40; ++bt) {
                u_try = u - t * grad;
                Eigen::VectorXd g_try(u.size());
                val_try = al_value_grad(spec, u_try, cons, lambda, rho, g_try);
                if (val_try <= val - 1e-4 * t * gnorm * gnorm) {
                    u_prev = u;
                    g_prev = grad;
                    u = u_try;
                    grad = g_try;
                    val = val_try;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) break;

            // Barzilai-Borwein step for the next iteration.
            const Eigen::VectorXd du = u - u_prev;
            const Eigen::VectorXd dg = grad - g_prev;
            const double dgg = weighted_dot(grid, du, dg);
            if (dgg > 0.0) {
                step = weighted_dot(grid, du, du) / dgg;
                step = std::clamp(step, 1e-12, 1e8);
            } else {
                step = t * 2.0;
            }
        }
        const Control uc(GridFn{grid, u});
        constraint_residual(spec, uc, cons, c);
        lambda += rho * c;
        rho *= 10.0;
    }

    SolveOutcome out;
    out.u = u;
    const Control uc(GridFn{grid, u});
    out.residual = constraint_residual(spec, uc, cons, c);
    out.iterations = total_its;
    out.converged = out.residual <= opts.residual_tol;
    return out;
}

RateResult solve_constrained(const ChaosSpec& spec, const std::vector<Constraint>& cons,
                             const RateOptions& opts) {
    const GridPtr& grid = spec.grid();
    if (!grid) throw std::invalid_argument("spec has no stochastic orders to control");
    const Index m = grid->cell_count();

    std::vector<SolveOutcome> outcomes(static_cast<std::size_t>(opts.starts));
    chunked_reduce<int>(
        opts.starts, 1,
        [&](std::ptrdiff_t b, std::ptrdiff_t, std::ptrdiff_t chunk) {
            Eigen::VectorXd u0 = Eigen::VectorXd::Zero(m);
            if (b > 0) {
                GaussianStream gauss(derive_stream(opts.seed, static_cast<std::uint64_t>(b)));
                const double scale = 1.0 / std::sqrt(grid->total_measure());
                for (Index i = 0; i < m; ++i) u0[i] = scale * gauss.next();
            }
            outcomes[static_cast<std::size_t>(b)] = solve_from(spec, cons, std::move(u0), opts);
            return static_cast<int>(chunk);
        },
        [](int, std::ptrdiff_t) {});

    const SolveOutcome* best = nullptr;
    auto better = [&](const SolveOutcome& a, const SolveOutcome& b) {
        if (a.converged != b.converged) return a.converged;
        const double la = 0.5 * weighted_dot(grid, a.u, a.u);
        const double lb = 0.5 * weighted_dot(grid, b.u, b.u);
        if (a.converged) return la < lb;
        return a.residual < b.residual;
    };
    for (const auto& o : outcomes)
        if (!best || better(o, *best)) best = &o;

    RateResult res;
    Control u(GridFn{grid, best->u});
    res.lambda = 0.5 * u.norm_sq();
    res.u_star = std::move(u);
    res.residual = best->residual;
    res.converged = best->converged;
    for (const auto& o : outcomes) res.iterations += o.iterations;
    return res;
}

} // namespace

GridFn skeleton_gradient(const ChaosSpec& spec, const Control& u, Index site) {
    const GridPtr& grid = spec.grid();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(grid->cell_count());
    for (int n = 1; n <= spec.n_max(); ++n) {
        const Kernel& k = spec.family().at(site, n);
        switch (k.rep()) {
        case Kernel::Rep::Constant:
            break;
        case Kernel::Rep::Separable:
            for (const auto& term : k.terms()) {
                // d/du prod_a <g_a, u> = sum_a g_a prod_{b != a} <g_b, u>
                std::vector<double> dots(term.factors.size());
                for (std::size_t a = 0; a < term.factors.size(); ++a)
                    dots[a] = l2_inner(term.factors[a], u.fn());
                for (std::size_t a = 0; a < term.factors.size(); ++a) {
                    double prod = term.coeff;
                    for (std::size_t b = 0; b < term.factors.size(); ++b)
                        if (b != a) prod *= dots[b];
                    g += prod * term.factors[a].values;
                }
            }
            break;
        case Kernel::Rep::Dense: {
            // grad(t) = n * J_{n-1}(f(t, .)) for symmetric f; per orbit, each
            // slot drops one argument and keeps the rest.
            const Eigen::VectorXd w = u.values().cwiseProduct(grid->cell_measure());
            Index r = 0;
            for_each_orbit(grid->cell_count(), n, [&](std::span<const Index> t) {
                const double v = k.orbit_values()[r++];
                if (v == 0.0) return;
                const double mult = SymIndexer::orbit_multiplicity(t);
                for (std::size_t a = 0; a < t.size(); ++a) {
                    double prod = v * mult;
                    for (std::size_t b = 0; b < t.size(); ++b)
                        if (b != a) prod *= w[t[b]];
                    g[t[a]] += prod;
                }
            });
            break;
        }
        }
    }
    return GridFn{grid, std::move(g)};
}

RateResult rate_pointwise(const ChaosSpec& spec, Index site, double r, const RateOptions& opts) {
    if (site < 0 || site >= spec.site_count()) throw std::invalid_argument("site out of range");
    const double f0 = spec.family().at(site, 0).constant_value();

    if (is_first_chaos(spec)) {
        const GridFn f = first_order_fn(spec.family().at(site, 1), spec.grid());
        const double nf2 = l2_inner(f, f);
        RateResult res;
        if (nf2 == 0.0) {
            if (r == f0) {
                res.lambda = 0.0;
                res.u_star = Control::zero(spec.grid());
                res.converged = true;
            } else {
                res.lambda = kInf;
                res.infeasible_certified = true;
            }
            return res;
        }
        const double scale = (r - f0) / nf2;
        res.lambda = (r - f0) * (r - f0) / (2.0 * nf2);
        res.u_star = Control(GridFn{spec.grid(), scale * f.values});
        res.residual = 0.0;
        res.converged = true;
        return res;
    }

    if (const auto ro = single_even_rank_one(spec, site)) {
        const double gap = r - f0;
        const bool reachable = gap == 0.0 || (ro->coeff > 0.0 ? gap > 0.0 : gap < 0.0);
        if (!reachable || ro->factor_norm_sq == 0.0) {
            if (gap == 0.0) {
                RateResult res;
                res.lambda = 0.0;
                res.u_star = Control::zero(spec.grid());
                res.converged = true;
                return res;
            }
            RateResult res;
            res.lambda = kInf;
            res.infeasible_certified = true;
            return res;
        }
    }

    return solve_constrained(spec, {Constraint{site, r}}, opts);
}

RateResult rate_path(const ChaosSpec& spec, const Eigen::VectorXd& psi, const RateOptions& opts) {
    if (psi.size() != spec.site_count())
        throw std::invalid_argument("target path must cover every site");
    std::vector<Constraint> cons;
    cons.reserve(static_cast<std::size_t>(psi.size()));
    for (Index z = 0; z < psi.size(); ++z) cons.push_back(Constraint{z, psi[z]});
    return solve_constrained(spec, cons, opts);
}

} // namespace wce
