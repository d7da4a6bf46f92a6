#include "wce/applications.hpp"

#include <cmath>
#include <stdexcept>

namespace wce {

void validate_orthonormal(const BasisPair& basis, double tol) {
    if (basis.xi.empty()) throw std::invalid_argument("basis is empty");
    if (basis.m_xi.size() != basis.xi.size())
        throw std::invalid_argument("basis image count does not match");
    for (std::size_t i = 0; i < basis.xi.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double g = l2_inner(basis.xi[i], basis.xi[j]);
            const double target = (i == j) ? 1.0 : 0.0;
            if (std::abs(g - target) > tol)
                throw std::invalid_argument("basis is not orthonormal within tolerance");
        }
    }
}

BasisPair grid_indicator_basis(const GridPtr& grid) {
    BasisPair basis;
    const Index m = grid->cell_count();
    for (Index i = 0; i < m; ++i) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
        v[i] = 1.0 / std::sqrt(grid->cell_measure()[i]);
        basis.xi.push_back(GridFn{grid, v});
        basis.m_xi.push_back(GridFn{grid, std::move(v)});
    }
    return basis;
}

namespace {

bool is_constant_map(const std::function<GridFn(double)>& a, const GridPtr& grid,
                     const SiteSet& sites, double* value) {
    const Index m = grid->cell_count();
    double v0 = 0.0;
    bool first = true;
    auto probe = [&](double t) {
        const GridFn g = a(t);
        for (Index i = 0; i < m; ++i) {
            if (first) {
                v0 = g.values[i];
                first = false;
            } else if (g.values[i] != v0) {
                return false;
            }
        }
        return true;
    };
    for (Index c = 0; c < m; ++c)
        if (!probe(grid->cell_center(0, c))) return false;
    for (Index z = 0; z < sites.count(); ++z)
        if (!probe(sites.coord(z, 0))) return false;
    *value = v0;
    return true;
}

} // namespace

KernelFamily skorohod_equation_kernels(const std::function<GridFn(double)>& a,
                                       const std::function<double(double)>& x0,
                                       const SiteSet& sites, const GridPtr& grid, int n_max) {
    if (n_max < 0) throw std::invalid_argument("n_max must be nonnegative");

    double const_a = 0.0;
    if (is_constant_map(a, grid, sites, &const_a)) {
        // Chain collapses to a^n x0 with x0 constant along the first argument
        // only when x0 itself is constant; otherwise fall through to dense.
        bool x0_const = true;
        const double x00 = x0(grid->cell_center(0, 0));
        for (Index c = 1; c < grid->cell_count() && x0_const; ++c)
            x0_const = x0(grid->cell_center(0, c)) == x00;
        for (Index z = 0; z < sites.count() && x0_const; ++z)
            x0_const = x0(sites.coord(z, 0)) == x00;
        if (x0_const) {
            std::vector<std::vector<Kernel>> per_site;
            const GridFn one = constant_fn(grid, 1.0);
            for (Index z = 0; z < sites.count(); ++z) {
                std::vector<Kernel> orders;
                orders.push_back(Kernel::constant(x00));
                for (int n = 1; n <= n_max; ++n)
                    orders.push_back(
                        Kernel::rank_one_power(one, n, std::pow(const_a, n) * x00));
                per_site.push_back(std::move(orders));
            }
            return KernelFamily(sites, std::move(per_site));
        }
    }

    if (n_max > Kernel::dense_max_order)
        throw std::invalid_argument(
            "non-constant coefficients support orders up to 3 (dense storage)");

    const Index m = grid->cell_count();
    // Symmetrized kernels at every cell, so the recursion can read the
    // previous order through the grid coordinate.
    std::vector<Kernel> prev_cell;
    prev_cell.reserve(static_cast<std::size_t>(m));
    for (Index c = 0; c < m; ++c)
        prev_cell.push_back(Kernel::constant(x0(grid->cell_center(0, c))));

    std::vector<std::vector<Kernel>> per_site(static_cast<std::size_t>(sites.count()));
    for (Index z = 0; z < sites.count(); ++z)
        per_site[static_cast<std::size_t>(z)].push_back(
            Kernel::constant(x0(sites.coord(z, 0))));

    std::vector<GridFn> a_cell;
    a_cell.reserve(static_cast<std::size_t>(m));
    for (Index c = 0; c < m; ++c) a_cell.push_back(a(grid->cell_center(0, c)));

    for (int n = 1; n <= n_max; ++n) {
        auto step = [&](const GridFn& a_t) {
            // site map s -> a_t(s) * prev[s], then one symmetrization.
            std::vector<Kernel> site_map;
            site_map.reserve(static_cast<std::size_t>(m));
            for (Index s = 0; s < m; ++s)
                site_map.push_back(prev_cell[static_cast<std::size_t>(s)].scaled(a_t.values[s]));
            return symmetrize(grid, site_map);
        };
        for (Index z = 0; z < sites.count(); ++z)
            per_site[static_cast<std::size_t>(z)].push_back(step(a(sites.coord(z, 0))));
        if (n < n_max) {
            std::vector<Kernel> next_cell;
            next_cell.reserve(static_cast<std::size_t>(m));
            for (Index c = 0; c < m; ++c)
                next_cell.push_back(step(a_cell[static_cast<std::size_t>(c)]));
            prev_cell = std::move(next_cell);
        }
    }
    return KernelFamily(sites, std::move(per_site));
}

std::vector<Kernel> divergence_kernels(const GridPtr& grid,
                                       const std::vector<std::vector<Kernel>>& y_per_cell) {
    if (static_cast<Index>(y_per_cell.size()) != grid->cell_count())
        throw std::invalid_argument("integrand needs one kernel list per cell");
    const std::size_t orders = y_per_cell.front().size();
    for (const auto& list : y_per_cell)
        if (list.size() != orders)
            throw std::invalid_argument("integrand orders must agree across cells");

    std::vector<Kernel> out;
    out.push_back(Kernel::constant(0.0));
    for (std::size_t n = 0; n < orders; ++n) {
        bool separable = true;
        for (const auto& list : y_per_cell) {
            const Kernel& k = list[n];
            if (k.rep() == Kernel::Rep::Dense) separable = false;
        }
        if (separable) {
            // sym over the site argument as an exact separable sum:
            // each cell contributes its terms tensored with the cell indicator.
            std::vector<Kernel::SeparableTerm> terms;
            for (Index c = 0; c < grid->cell_count(); ++c) {
                Eigen::VectorXd ind = Eigen::VectorXd::Zero(grid->cell_count());
                ind[c] = 1.0;
                const GridFn cell_ind{grid, std::move(ind)};
                const Kernel& k = y_per_cell[static_cast<std::size_t>(c)][n];
                const Kernel lifted = k.append_factor(cell_ind);
                for (const auto& t : lifted.terms()) terms.push_back(t);
            }
            out.push_back(Kernel::separable(grid, static_cast<int>(n) + 1, std::move(terms)));
        } else {
            std::vector<Kernel> site_map;
            site_map.reserve(y_per_cell.size());
            for (const auto& list : y_per_cell) site_map.push_back(list[n]);
            out.push_back(symmetrize(grid, site_map));
        }
    }
    return out;
}

std::vector<Kernel> divergence_kernels_formal(const std::vector<Kernel>& y_orders, int k) {
    if (k < 1) throw std::invalid_argument("iteration count must be >= 1");
    std::vector<Kernel> out;
    for (int j = 0; j < k; ++j) out.push_back(Kernel::constant(0.0));
    for (const Kernel& y : y_orders) {
        if (y.rep() == Kernel::Rep::Dense && k > 1)
            throw std::invalid_argument(
                "k-fold divergence of dense integrands is not representable; use separable terms");
        // Separable storage already denotes the full symmetrization, so the
        // k extra slots re-read as chaos arguments.
        out.push_back(y);
    }
    return out;
}

std::vector<Kernel> wick_kernels(const GridPtr& grid,
                                 const std::vector<std::vector<Kernel>>& f_per_cell,
                                 const BasisPair& basis, int n_max) {
    if (basis.size() == 0) throw std::invalid_argument("basis is empty");
    validate_orthonormal(basis);
    if (static_cast<Index>(f_per_cell.size()) != grid->cell_count())
        throw std::invalid_argument("integrand needs one kernel list per cell");
    const Index m = grid->cell_count();
    const int in_orders = static_cast<int>(f_per_cell.front().size());

    std::vector<Kernel> out;
    out.push_back(Kernel::constant(0.0));
    for (int n = 1; n <= n_max; ++n) {
        if (n - 1 >= in_orders) {
            out.push_back(Kernel::separable(grid, n, {}));
            continue;
        }
        bool separable = true;
        for (const auto& list : f_per_cell)
            if (list[static_cast<std::size_t>(n - 1)].rep() == Kernel::Rep::Dense)
                separable = false;

        std::vector<Kernel::SeparableTerm> terms;
        std::vector<Kernel> dense_parts;
        for (int b = 0; b < basis.size(); ++b) {
            const GridFn& xi = basis.xi[static_cast<std::size_t>(b)];
            const GridFn& mxi = basis.m_xi[static_cast<std::size_t>(b)];
            if (separable) {
                // H_b = sum_s f_{n-1}^s M xi_b(s) m_s stays separable; appending
                // xi_b realizes sym(H_b (x) xi_b).
                for (Index s = 0; s < m; ++s) {
                    const double w = mxi.values[s] * grid->cell_measure()[s];
                    if (w == 0.0) continue;
                    const Kernel& f = f_per_cell[static_cast<std::size_t>(s)]
                                               [static_cast<std::size_t>(n - 1)];
                    const Kernel lifted = f.scaled(w).append_factor(xi);
                    for (const auto& t : lifted.terms()) terms.push_back(t);
                }
            } else {
                // Dense path: quadrature over s, then one symmetrization of
                // the site map s -> xi_b(s) * H_b.
                Kernel h = f_per_cell[0][static_cast<std::size_t>(n - 1)].to_dense().scaled(
                    mxi.values[0] * grid->cell_measure()[0]);
                for (Index s = 1; s < m; ++s) {
                    const double w = mxi.values[s] * grid->cell_measure()[s];
                    const Kernel part =
                        f_per_cell[static_cast<std::size_t>(s)][static_cast<std::size_t>(n - 1)]
                            .to_dense()
                            .scaled(w);
                    h = Kernel::dense(grid, n - 1, h.orbit_values() + part.orbit_values());
                }
                std::vector<Kernel> site_map;
                site_map.reserve(static_cast<std::size_t>(m));
                for (Index s = 0; s < m; ++s) site_map.push_back(h.scaled(xi.values[s]));
                dense_parts.push_back(symmetrize(grid, site_map));
            }
        }
        if (separable) {
            out.push_back(Kernel::separable(grid, n, std::move(terms)));
        } else {
            Kernel acc = dense_parts.front();
            for (std::size_t i = 1; i < dense_parts.size(); ++i)
                acc = Kernel::dense(grid, n, acc.orbit_values() + dense_parts[i].orbit_values());
            out.push_back(std::move(acc));
        }
    }
    return out;
}

KernelFamily adapted_kernels(const std::vector<Kernel>& base, const SiteSet& sites,
                             const GridPtr& grid) {
    if (sites.dim() > grid->axis_count())
        throw std::invalid_argument("site dimension exceeds the grid axes");
    std::vector<std::vector<Kernel>> per_site;
    per_site.reserve(static_cast<std::size_t>(sites.count()));
    for (Index z = 0; z < sites.count(); ++z) {
        Eigen::VectorXd upper(sites.dim());
        for (int a = 0; a < sites.dim(); ++a) upper[a] = sites.coord(z, a);
        const GridFn mask = box_indicator(grid, upper);
        std::vector<Kernel> orders;
        orders.reserve(base.size());
        for (const Kernel& k : base) {
            if (k.order() != static_cast<int>(orders.size()))
                throw std::invalid_argument("base kernels must be ordered 0,1,2,..");
            orders.push_back(k.order() == 0 ? k : k.masked(mask));
        }
        per_site.push_back(std::move(orders));
    }
    return KernelFamily(sites, std::move(per_site));
}

KernelFamily exponential_functional_kernels(const GridFn& h, int n_max) {
    if (l2_norm(h) == 0.0) throw std::invalid_argument("h must have positive norm");
    std::vector<Kernel> orders;
    orders.push_back(Kernel::constant(1.0));
    for (int n = 1; n <= n_max; ++n)
        orders.push_back(Kernel::rank_one_power(h, n, 1.0 / factorial(n)));
    Eigen::MatrixXd one_site(1, 1);
    one_site(0, 0) = 1.0;
    return KernelFamily(SiteSet(1, one_site), {std::move(orders)});
}

} // namespace wce
