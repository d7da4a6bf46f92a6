#pragma once

#include "wce/grid.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wce {

double factorial(int n);

// Ranks sorted (non-decreasing) multi-indices of length n over m cells, one
// slot per orbit of the symmetric group. Colex order.
class SymIndexer {
public:
    SymIndexer(Index cells, int order);

    Index size() const { return size_; }
    Index rank(std::span<const Index> sorted) const;
    // Number of distinct permutations of a sorted tuple: n! / prod(multiplicities!).
    static double orbit_multiplicity(std::span<const Index> sorted);

private:
    Index cells_;
    int order_;
    Index size_;
    std::vector<std::vector<Index>> binom_; // binom_[k][c] = C(c, k+1)
};

// Visit every sorted tuple (i_0 <= ... <= i_{n-1}) in colex order, i.e. in
// increasing SymIndexer rank.
template <class F>
void for_each_orbit(Index cells, int order, F&& f) {
    if (order == 0) return;
    std::vector<Index> idx(static_cast<std::size_t>(order), 0);
    for (;;) {
        f(std::span<const Index>(idx));
        int a = 0;
        while (a < order) {
            ++idx[static_cast<std::size_t>(a)];
            const Index limit =
                (a + 1 < order) ? idx[static_cast<std::size_t>(a + 1)] : cells - 1;
            if (idx[static_cast<std::size_t>(a)] <= limit) break;
            ++a;
        }
        if (a == order) return;
        for (int b = 0; b < a; ++b) idx[static_cast<std::size_t>(b)] = 0;
    }
}

// Symmetric order-n kernel on the grid. Three representations:
//   Constant   order 0, a single real.
//   Dense      one value per sorted multi-index orbit (order <= 3).
//   Separable  sum of terms c * g_1 (x) ... (x) g_n, always read with
//              symmetric semantics: the kernel denoted is the symmetrization
//              of the stored sum. Appending a factor therefore implements the
//              symmetrized tensor product exactly.
class Kernel {
public:
    enum class Rep { Constant, Dense, Separable };

    struct SeparableTerm {
        double coeff = 1.0;
        std::vector<GridFn> factors;
        bool uniform = false; // all factors identical (power term)
    };

    static constexpr int dense_max_order = 3;
    static constexpr Index dense_max_entries = 20'000'000;

    static Kernel constant(double value);
    static Kernel dense(GridPtr grid, int order, Eigen::VectorXd orbit_values);
    static Kernel dense_zero(GridPtr grid, int order);
    static Kernel separable(GridPtr grid, int order, std::vector<SeparableTerm> terms);
    static Kernel rank_one_power(const GridFn& factor, int order, double coeff = 1.0);

    int order() const { return order_; }
    Rep rep() const { return rep_; }
    const GridPtr& grid() const { return grid_; }
    double constant_value() const { return constant_; }
    const Eigen::VectorXd& orbit_values() const { return dense_values_; }
    const std::vector<SeparableTerm>& terms() const { return terms_; }
    const SymIndexer& indexer() const;

    // Permutation-invariant pointwise evaluation at a cell multi-index.
    double value_at(std::span<const Index> cells) const;

    bool is_zero() const;
    Kernel scaled(double c) const;
    // sym(f (x) g); Separable and Constant representations only.
    Kernel append_factor(const GridFn& g) const;
    // f * mask^{(x) n}: multiply every argument slot by a grid function.
    Kernel masked(const GridFn& mask) const;
    Kernel to_dense() const;

private:
    Kernel() = default;

    Rep rep_ = Rep::Constant;
    int order_ = 0;
    GridPtr grid_;
    double constant_ = 0.0;
    Eigen::VectorXd dense_values_;
    std::vector<SeparableTerm> terms_;
    std::shared_ptr<const SymIndexer> indexer_;
};

// L2(T^n, mu^(x)n) pairing of two kernels of equal order on the same grid.
double kernel_inner(const Kernel& a, const Kernel& b);
double kernel_norm(const Kernel& k);
// Lp norm; dense/densifiable kernels and uniform power terms only.
double kernel_lp_norm(const Kernel& k, double p);
double kernel_diff_norm(const Kernel& a, const Kernel& b);
double kernel_diff_lp_norm(const Kernel& a, const Kernel& b, double p);

// Symmetrization of a cell-indexed kernel map into one kernel of order n+1:
//   out(t_1..t_n, t) = (f^t(t_1..t_n) + sum_i f^{t_i}(.., t in slot i, ..)) / (n+1).
// `site_map` holds one order-n kernel per grid cell, read through the same
// grid coordinate as the new integration variable.
Kernel symmetrize(const GridPtr& grid, const std::vector<Kernel>& site_map);

// Dense kernel from rows (i_1 .. i_n, value); indices are cell numbers.
Kernel dense_from_rows(GridPtr grid, int order,
                       const std::vector<std::pair<std::vector<Index>, double>>& rows);
Kernel load_dense_csv(const GridPtr& grid, int order, const std::string& path);

// Site-indexed family of kernels, orders contiguous from 0, one grid.
class KernelFamily {
public:
    KernelFamily(SiteSet sites, std::vector<std::vector<Kernel>> per_site);

    const SiteSet& sites() const { return sites_; }
    int max_order() const { return max_order_; }
    Index site_count() const { return sites_.count(); }
    const Kernel& at(Index site, int order) const {
        return per_site_[static_cast<std::size_t>(site)][static_cast<std::size_t>(order)];
    }
    const GridPtr& grid() const { return grid_; }

private:
    SiteSet sites_;
    std::vector<std::vector<Kernel>> per_site_;
    int max_order_;
    GridPtr grid_;
};

// Concave modulus omega(s) = c * s^gamma with 0 < gamma < 1 and the Dini
// exponent alpha0 in (0, gamma).
struct ModulusSpec {
    double c = 1.0;
    double gamma = 0.5;
    double alpha0 = 0.25;

    double omega(double s) const;
    void validate() const;
};

struct ExpTypeReport {
    double delta_fit = 0.0; // max over n >= 1, sites of (n! * ||f_n^z||)^(1/n)
    bool pass = false;
};
ExpTypeReport check_exponential_type(const KernelFamily& family);

// sup_z sum_n sqrt(n!) kappa^n ||f_n^z|| plus a geometric tail majorant from
// the exponential-type fit; +inf when no convergent tail bound exists.
double series_bound(const KernelFamily& family, double kappa);

// Remainder bound sum_{n > n_max} (kappa*delta)^n / sqrt(n!); throws when the
// geometric majorant does not contract.
double series_tail_bound(double delta, double kappa, int n_max);

struct ModulusRow {
    Index site_a = 0;
    Index site_b = 0;
    double distance = 0.0;
    double lhs = 0.0;    // sum_n sqrt(n!) kappa^n ||f_n^za - f_n^zb||
    double omega = 0.0;
    double margin = 0.0; // omega - lhs
};

struct ModulusProfile {
    std::vector<ModulusRow> rows;
    double worst_margin = 0.0;
    double fitted_exponent = 0.0; // log-log regression slope of lhs vs distance
    bool pass = false;
};

// moment_order q > 2 switches the site-difference norms from L2 to
// L^{2q/(q-2)}; 0 keeps the plain L2 profile.
ModulusProfile modulus_profile(const KernelFamily& family, double kappa,
                               const ModulusSpec& spec, double moment_order = 0.0);

} // namespace wce
