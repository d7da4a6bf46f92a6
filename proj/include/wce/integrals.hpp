#pragma once

#include "wce/kernel.hpp"
#include "wce/noise.hpp"

#include <cstdint>
#include <vector>

namespace wce {

enum class Slot : std::uint8_t { Nu, Noise };

// Assignment of each integral slot to either the control measure nu or the
// (scaled) noise. Theta(k, n) is the set of patterns with exactly k Nu slots.
struct ThetaPattern {
    std::vector<Slot> mask;

    int order() const { return static_cast<int>(mask.size()); }
    int nu_count() const;

    static ThetaPattern all_noise(int n);
    static ThetaPattern all_nu(int n);
    static std::vector<ThetaPattern> enumerate(int n);              // all 2^n
    static std::vector<ThetaPattern> with_nu_count(int k, int n);   // C(n,k) patterns
};

// Off-diagonal sum sum_{i_1 != ... != i_n} f(i_1..i_n) v_{i_1} ... v_{i_n}
// for arbitrary per-cell values v. Dense kernels use direct enumeration
// (order <= 3); separable power terms use an elementary-symmetric recurrence,
// mixed-factor terms a Moebius sum over set partitions (order <= 8).
double off_diagonal_sum(const Kernel& f, const Eigen::VectorXd& cell_values);

// I_n(f): off-diagonal sum against the path increments. Order 0 returns the
// stored constant.
double multiple_integral(const Kernel& f, const NoisePath& path);

// Probabilists' Hermite polynomial, h0 = 1, h1 = x, h_{n+1} = x h_n - n h_{n-1}.
double hermite_poly(int n, double x);

// Continuum oracle for rank-one kernels: ||g||^n h_n(X(g)/||g||).
double hermite_value(int n, const GridFn& g, const NoisePath& path);

// m_theta: Nu slots carry u * cell_measure (Lebesgue, unrestricted among
// themselves), Noise slots carry eps * increment and stay off-diagonal
// against every other slot. The all-Nu pattern is exactly J_n^u.
double mixed_integral(const Kernel& f, const ThetaPattern& theta, const NoisePath& path,
                      const Control& u, double eps);

// I_n^{eps,u}(f): off-diagonal sum over the shifted cell masses
// eps * increment + u * cell_measure.
double shifted_multiple_integral(const Kernel& f, const NoisePath& path, const Control& u,
                                 double eps);

// J_n^u(f): full tensor contraction against u d(mu), diagonals included.
double deterministic_integral(const Kernel& f, const Control& u);

// L^p bound for a fixed pattern class: eps^{n-k} sqrt((n-k)!) M^{k/2}
// (p-1)^{(n-k)/2} * norm.
double theoretical_bound(int n, int k, double control_budget, double p, double kernel_norm,
                         double eps = 1.0);

// L^p bound for the full shifted integral: sqrt(n!) (4(M+1)(p-1))^{n/2} * norm.
double theoretical_bound_all(int n, double control_budget, double p, double kernel_norm);

} // namespace wce
