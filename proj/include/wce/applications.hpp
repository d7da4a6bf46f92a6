#pragma once

#include "wce/kernel.hpp"

#include <functional>

namespace wce {

// Discretized orthonormal system and its images under the fractional operator.
// The operator itself is external input; identity images reproduce the
// Brownian (H = 1/2) case.
struct BasisPair {
    std::vector<GridFn> xi;
    std::vector<GridFn> m_xi;

    int size() const { return static_cast<int>(xi.size()); }
};

// Throws unless the xi are orthonormal in L2 within the Gram tolerance.
void validate_orthonormal(const BasisPair& basis, double tol = 1e-8);

// Cell indicators normalized in L2, with identity images: the full grid basis.
BasisPair grid_indicator_basis(const GridPtr& grid);

// Kernels of the linear equation X(t) = x0(t) + delta(a^t X):
// the chain a^t(t_n) a^{t_n}(t_{n-1}) ... a^{t_2}(t_1) x0(t_1), symmetrized.
// General coefficient maps are supported up to order 3 (dense storage); a
// constant coefficient collapses the chain to a^n x0 and admits any order.
KernelFamily skorohod_equation_kernels(const std::function<GridFn(double)>& a,
                                       const std::function<double(double)>& x0,
                                       const SiteSet& sites, const GridPtr& grid, int n_max);

// One divergence step: the order-n kernels of the integrand, indexed by the
// grid cell of its argument, become one order-(n+1) symmetrized kernel each.
// Index [cell][order]; output index is the chaos order, entry 0 is zero.
std::vector<Kernel> divergence_kernels(const GridPtr& grid,
                                       const std::vector<std::vector<Kernel>>& y_per_cell);

// k-fold divergence for integrands whose extra arguments are already explicit
// kernel slots (separable or constant representations): the order-n input
// with k extra slots is re-read as the symmetric order-(n+k) kernel.
std::vector<Kernel> divergence_kernels_formal(const std::vector<Kernel>& y_orders, int k);

// Wick-integral kernels g_n = sym( int sum_k (f_{n-1}^s (x) xi_k) M xi_k(s) ds ),
// with the integrand family indexed by the grid cell of s.
std::vector<Kernel> wick_kernels(const GridPtr& grid,
                                 const std::vector<std::vector<Kernel>>& f_per_cell,
                                 const BasisPair& basis, int n_max);

// Conditioned family f_n^z = f_n * 1_{[0,z]}^{(x) n} over the given sites.
KernelFamily adapted_kernels(const std::vector<Kernel>& base, const SiteSet& sites,
                             const GridPtr& grid);

// Chaos kernels of the Wick exponential of W(h): f_n = h^{(x) n} / n!, f_0 = 1.
KernelFamily exponential_functional_kernels(const GridFn& h, int n_max);

} // namespace wce
