#include "wce/integrals.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace wce {

int ThetaPattern::nu_count() const {
    int k = 0;
    for (Slot s : mask) k += (s == Slot::Nu) ? 1 : 0;
    return k;
}

ThetaPattern ThetaPattern::all_noise(int n) {
    return ThetaPattern{std::vector<Slot>(static_cast<std::size_t>(n), Slot::Noise)};
}

ThetaPattern ThetaPattern::all_nu(int n) {
    return ThetaPattern{std::vector<Slot>(static_cast<std::size_t>(n), Slot::Nu)};
}

std::vector<ThetaPattern> ThetaPattern::enumerate(int n) {
    std::vector<ThetaPattern> out;
    out.reserve(static_cast<std::size_t>(1) << n);
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        ThetaPattern p;
        p.mask.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j)
            p.mask[static_cast<std::size_t>(j)] = (bits >> j) & 1u ? Slot::Nu : Slot::Noise;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ThetaPattern> ThetaPattern::with_nu_count(int k, int n) {
    std::vector<ThetaPattern> out;
    for (ThetaPattern& p : enumerate(n))
        if (p.nu_count() == k) out.push_back(std::move(p));
    return out;
}

namespace {

// Elementary symmetric polynomial e_n of the entries of x, by the stable
// product recurrence; the ordered off-diagonal sum of a power term is n! e_n.
double elementary_symmetric(const Eigen::VectorXd& x, int n) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n + 1);
    e[0] = 1.0;
    for (Index i = 0; i < x.size(); ++i) {
        const int top = static_cast<int>(std::min<Index>(n, i + 1));
        for (int k = top; k >= 1; --k) e[k] += x[i] * e[k - 1];
    }
    return e[n];
}

// Moebius weight of a partition block of size s: (-1)^{s-1} (s-1)!.
double block_weight(int s) {
    double w = factorial(s - 1);
    return (s % 2 == 0) ? -w : w;
}

// Off-diagonal sum of a product kernel with per-slot cell arrays x_a via the
// partition formula: sum over set partitions P of the slots of
// prod_{B in P} (-1)^{|B|-1}(|B|-1)! M_B, with M_B = sum_i prod_{a in B} x_a(i).
double off_diagonal_product(const std::vector<Eigen::VectorXd>& x) {
    const int n = static_cast<int>(x.size());
    if (n > 8)
        throw std::invalid_argument(
            "off-diagonal evaluation of mixed-factor terms limited to order <= 8");
    const Index m = x[0].size();
    const std::uint32_t subsets = 1u << n;
    std::vector<double> block_sum(subsets, 0.0);
    std::vector<Eigen::VectorXd> prod(subsets);
    prod[0] = Eigen::VectorXd::Ones(m);
    for (std::uint32_t s = 1; s < subsets; ++s) {
        const int low = std::countr_zero(s);
        prod[s] = prod[s & (s - 1)].cwiseProduct(x[static_cast<std::size_t>(low)]);
        block_sum[s] = prod[s].sum();
    }

    // Enumerate set partitions by assigning each slot to the lowest admissible
    // block (restricted growth), accumulating the weighted block products.
    double total = 0.0;
    std::vector<std::uint32_t> blocks;
    auto recurse = [&](auto&& self, int slot, double acc) -> void {
        if (slot == n) {
            double term = acc;
            for (std::uint32_t b : blocks) {
                const int size = std::popcount(b);
                term *= block_weight(size) * block_sum[b];
            }
            total += term;
            return;
        }
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            blocks[b] |= (1u << slot);
            self(self, slot + 1, acc);
            blocks[b] &= ~(1u << slot);
        }
        blocks.push_back(1u << slot);
        self(self, slot + 1, acc);
        blocks.pop_back();
    };
    recurse(recurse, 0, 1.0);
    return total;
}

double off_diagonal_dense(const Kernel& f, const Eigen::VectorXd& v) {
    // Diagonal orbits never contribute; strictly increasing tuples carry the
    // full n! orderings of one symmetric value.
    const double perms = factorial(f.order());
    double total = 0.0;
    Index r = 0;
    for_each_orbit(f.grid()->cell_count(), f.order(), [&](std::span<const Index> t) {
        const Index rank = r++;
        for (std::size_t j = 1; j < t.size(); ++j)
            if (t[j] == t[j - 1]) return;
        double prod = f.orbit_values()[rank];
        for (Index c : t) prod *= v[c];
        total += prod;
    });
    return perms * total;
}

} // namespace

double off_diagonal_sum(const Kernel& f, const Eigen::VectorXd& cell_values) {
    switch (f.rep()) {
    case Kernel::Rep::Constant:
        return f.constant_value();
    case Kernel::Rep::Dense:
        return off_diagonal_dense(f, cell_values);
    case Kernel::Rep::Separable: {
        const int n = f.order();
        double total = 0.0;
        for (const auto& term : f.terms()) {
            if (term.coeff == 0.0) continue;
            if (term.uniform) {
                const Eigen::VectorXd x = term.factors[0].values.cwiseProduct(cell_values);
                total += term.coeff * factorial(n) * elementary_symmetric(x, n);
            } else {
                std::vector<Eigen::VectorXd> x;
                x.reserve(term.factors.size());
                for (const GridFn& g : term.factors)
                    x.push_back(g.values.cwiseProduct(cell_values));
                total += term.coeff * off_diagonal_product(x);
            }
        }
        return total;
    }
    }
    return 0.0;
}

double multiple_integral(const Kernel& f, const NoisePath& path) {
    if (f.order() > 0 && !f.grid()->same_layout(*path.grid))
        throw std::invalid_argument("kernel and path live on different grids");
    return off_diagonal_sum(f, path.increments);
}

double hermite_poly(int n, double x) {
    if (n < 0) throw std::invalid_argument("negative Hermite order");
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = x * cur - static_cast<double>(k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double hermite_value(int n, const GridFn& g, const NoisePath& path) {
    const double norm = l2_norm(g);
    if (norm == 0.0) return n == 0 ? 1.0 : 0.0;
    const double x = isonormal(path, g) / norm;
    return std::pow(norm, n) * hermite_poly(n, x);
}

double deterministic_integral(const Kernel& f, const Control& u) {
    switch (f.rep()) {
    case Kernel::Rep::Constant:
        return f.constant_value();
    case Kernel::Rep::Dense: {
        if (!f.grid()->same_layout(*u.grid()))
            throw std::invalid_argument("kernel and control live on different grids");
        const Eigen::VectorXd w = u.values().cwiseProduct(f.grid()->cell_measure());
        double total = 0.0;
        Index r = 0;
        for_each_orbit(f.grid()->cell_count(), f.order(), [&](std::span<const Index> t) {
            double prod = f.orbit_values()[r++] * SymIndexer::orbit_multiplicity(t);
            for (Index c : t) prod *= w[c];
            total += prod;
        });
        return total;
    }
    case Kernel::Rep::Separable: {
        double total = 0.0;
        for (const auto& term : f.terms()) {
            double prod = term.coeff;
            for (const GridFn& g : term.factors) prod *= l2_inner(g, u.fn());
            total += prod;
        }
        return total;
    }
    }
    return 0.0;
}

double shifted_multiple_integral(const Kernel& f, const NoisePath& path, const Control& u,
                                 double eps) {
    if (f.order() == 0) return f.constant_value();
    if (!f.grid()->same_layout(*path.grid) || !f.grid()->same_layout(*u.grid()))
        throw std::invalid_argument("kernel, path and control must share a grid");
    const Eigen::VectorXd shifted =
        eps * path.increments + u.values().cwiseProduct(path.grid->cell_measure());
    return off_diagonal_sum(f, shifted);
}

double mixed_integral(const Kernel& f, const ThetaPattern& theta, const NoisePath& path,
                      const Control& u, double eps) {
    const int n = f.order();
    if (theta.order() != n)
        throw std::invalid_argument("pattern order does not match kernel order");
    if (n == 0) return f.constant_value();
    const int k = theta.nu_count();
    if (k == n) return deterministic_integral(f, u);
    if (k == 0) return std::pow(eps, n) * multiple_integral(f, path);

    // General patterns are evaluated by direct enumeration on the dense form.
    const Kernel d = f.to_dense();
    const Index m = d.grid()->cell_count();
    double probe = 1.0;
    for (int j = 0; j < n; ++j) {
        probe *= static_cast<double>(m);
        if (probe > 2e7)
            throw std::invalid_argument("mixed pattern enumeration exceeds the dense limit");
    }
    const Eigen::VectorXd nu = u.values().cwiseProduct(d.grid()->cell_measure());
    const Eigen::VectorXd noise = eps * path.increments;

    std::vector<Index> idx(static_cast<std::size_t>(n), 0);
    std::vector<Index> sorted(static_cast<std::size_t>(n));
    double total = 0.0;
    for (;;) {
        bool admissible = true;
        for (int a = 0; a < n && admissible; ++a) {
            if (theta.mask[static_cast<std::size_t>(a)] != Slot::Noise) continue;
            for (int b = 0; b < n; ++b) {
                if (b != a && idx[static_cast<std::size_t>(a)] == idx[static_cast<std::size_t>(b)]) {
                    admissible = false;
                    break;
                }
            }
        }
        if (admissible) {
            std::copy(idx.begin(), idx.end(), sorted.begin());
            std::sort(sorted.begin(), sorted.end());
            double prod = d.orbit_values()[d.indexer().rank(sorted)];
            for (int a = 0; a < n; ++a) {
                const Index c = idx[static_cast<std::size_t>(a)];
                prod *= (theta.mask[static_cast<std::size_t>(a)] == Slot::Nu) ? nu[c] : noise[c];
            }
            total += prod;
        }
        int a = 0;
        while (a < n && ++idx[static_cast<std::size_t>(a)] == m) {
            idx[static_cast<std::size_t>(a)] = 0;
            ++a;
        }
        if (a == n) break;
    }
    return total;
}

double theoretical_bound(int n, int k, double control_budget, double p, double kernel_norm,
                         double eps) {
    if (p < 2.0) throw std::invalid_argument("moment order must be >= 2");
    if (control_budget < 0.0) throw std::invalid_argument("control budget must be >= 0");
    if (k < 0 || k > n) throw std::invalid_argument("nu count out of range");
    return std::pow(eps, n - k) * std::sqrt(factorial(n - k)) *
           std::pow(control_budget, 0.5 * k) * std::pow(p - 1.0, 0.5 * (n - k)) * kernel_norm;
}

double theoretical_bound_all(int n, double control_budget, double p, double kernel_norm) {
    if (p < 2.0) throw std::invalid_argument("moment order must be >= 2");
    if (control_budget < 0.0) throw std::invalid_argument("control budget must be >= 0");
    return std::sqrt(factorial(n)) *
           std::pow(4.0 * (control_budget + 1.0) * (p - 1.0), 0.5 * n) * kernel_norm;
}

} // namespace wce
