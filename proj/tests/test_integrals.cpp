#include "wce/integrals.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace wce;

TEST_CASE("hermite recursion values") {
    CHECK(hermite_poly(0, 1.7) == 1.0);
    CHECK(hermite_poly(2, 1.7) == doctest::Approx(1.7 * 1.7 - 1.0));
    CHECK(hermite_poly(3, -0.4) == doctest::Approx(std::pow(-0.4, 3) + 3 * 0.4));
}

TEST_CASE("hermite value handles zero factors") {
    const GridPtr g = build_grid(8);
    const NoisePath p = sample_white_noise(g, 4);
    CHECK(hermite_value(0, constant_fn(g, 0.0), p) == 1.0);
    CHECK(hermite_value(2, constant_fn(g, 0.0), p) == 0.0);
    const GridFn one = constant_fn(g, 1.0);
    const double x = isonormal(p, one);
    CHECK(hermite_value(2, one, p) == doctest::Approx(x * x - 1.0));
    CHECK(hermite_value(3, one, p) == doctest::Approx(x * x * x - 3.0 * x));
}

TEST_CASE("first order integral is the isonormal pairing") {
    const GridPtr g = build_grid(32);
    const NoisePath p = sample_white_noise(g, 10);
    const GridFn one = constant_fn(g, 1.0);
    CHECK(multiple_integral(Kernel::rank_one_power(one, 1), p) ==
          doctest::Approx(isonormal(p, one)).epsilon(1e-14));
}

TEST_CASE("off-diagonal sums match brute force for dense and separable kernels") {
    SplitMix64 rng(23);
    for (int order = 1; order <= 3; ++order) {
        const GridPtr g = build_grid(6);
        const NoisePath p = sample_white_noise(g, 100 + static_cast<std::uint64_t>(order));

        const Kernel dense = oracles::random_dense_kernel(g, order, rng, false);
        CHECK(multiple_integral(dense, p) ==
              doctest::Approx(oracles::off_diagonal_brute(dense, p.increments))
                  .epsilon(1e-12));

        Kernel::SeparableTerm t1, t2;
        t1.coeff = 0.7;
        t2.coeff = -1.3;
        for (int a = 0; a < order; ++a) {
            t1.factors.push_back(GridFn{g, oracles::random_vector(6, rng)});
            t2.factors.push_back(GridFn{g, oracles::random_vector(6, rng)});
        }
        const Kernel sep = Kernel::separable(g, order, {t1, t2});
        CHECK(multiple_integral(sep, p) ==
              doctest::Approx(oracles::off_diagonal_brute(sep, p.increments)).epsilon(1e-12));

        const Kernel power =
            Kernel::rank_one_power(GridFn{g, oracles::random_vector(6, rng)}, order, 0.8);
        CHECK(multiple_integral(power, p) ==
              doctest::Approx(oracles::off_diagonal_brute(power, p.increments)).epsilon(1e-12));
    }
}

TEST_CASE("disjoint symmetric product factorizes exactly") {
    const GridPtr g = build_grid(16);
    const GridFn left = indicator_upto(g, 0.5);
    const GridFn right{g, Eigen::VectorXd::Ones(16) - left.values};
    Kernel::SeparableTerm t;
    t.coeff = 1.0;
    t.factors = {left, right};
    const Kernel k = Kernel::separable(g, 2, {t});
    const NoisePath p = sample_white_noise(g, 77);
    CHECK(multiple_integral(k, p) ==
          doctest::Approx(isonormal(p, left) * isonormal(p, right)).epsilon(1e-13));
}

TEST_CASE("deterministic integral contracts against the control") {
    const GridPtr g = build_grid(8);
    SplitMix64 rng(31);
    const GridFn uf{g, oracles::random_vector(8, rng)};
    const Control u(uf);

    CHECK(deterministic_integral(Kernel::rank_one_power(uf, 1), u) ==
          doctest::Approx(u.norm_sq()).epsilon(1e-13));

    const GridFn gfn{g, oracles::random_vector(8, rng)};
    CHECK(deterministic_integral(Kernel::rank_one_power(gfn, 2), u) ==
          doctest::Approx(std::pow(l2_inner(gfn, uf), 2)).epsilon(1e-12));

    const GridPtr g6 = build_grid(6);
    const Kernel dense = oracles::random_dense_kernel(g6, 3, rng, false);
    const Control u6(GridFn{g6, oracles::random_vector(6, rng)});
    const Eigen::VectorXd w = u6.values().cwiseProduct(g6->cell_measure());
    CHECK(deterministic_integral(dense, u6) ==
          doctest::Approx(oracles::contraction_brute(dense, w)).epsilon(1e-12));
}

TEST_CASE("theta pattern enumeration") {
    CHECK(ThetaPattern::enumerate(3).size() == 8);
    CHECK(ThetaPattern::with_nu_count(1, 3).size() == 3);
    CHECK(ThetaPattern::all_nu(2).nu_count() == 2);
    CHECK(ThetaPattern::all_noise(2).nu_count() == 0);
}

TEST_CASE("mixed integral semantics") {
    const GridPtr g = build_grid(7);
    SplitMix64 rng(41);
    const NoisePath p = sample_white_noise(g, 5);
    const Control u(GridFn{g, oracles::random_vector(7, rng)});
    const double eps = 0.6;
    const Eigen::VectorXd nu = u.values().cwiseProduct(g->cell_measure());
    const Eigen::VectorXd noise = eps * p.increments;

    for (int order = 1; order <= 3; ++order) {
        const Kernel k = oracles::random_dense_kernel(g, order, rng, false);
        for (const ThetaPattern& theta : ThetaPattern::enumerate(order)) {
            const double got = mixed_integral(k, theta, p, u, eps);
            const double want = oracles::mixed_brute(k, theta, nu, noise);
            CHECK(got == doctest::Approx(want).epsilon(1e-11));
        }
        // All-nu patterns. Any kernel, including diagonal values.
        CHECK(mixed_integral(k, ThetaPattern::all_nu(order), p, u, eps) ==
              doctest::Approx(deterministic_integral(k, u)).epsilon(1e-13));
        // All-noise reduces to the scaled multiple integral.
        CHECK(mixed_integral(k, ThetaPattern::all_noise(order), p, u, 1.0) ==
              doctest::Approx(multiple_integral(k, p)).epsilon(1e-13));
    }
}

TEST_CASE("mixed pattern with one nu slot carries the diagonal correction") {
    const GridPtr g = build_grid(9);
    SplitMix64 rng(51);
    const GridFn gf{g, oracles::random_vector(9, rng)};
    const GridFn hf{g, oracles::random_vector(9, rng)};
    Kernel::SeparableTerm t;
    t.factors = {gf, hf};
    const Kernel k = Kernel::separable(g, 2, {t}).to_dense();
    const NoisePath p = sample_white_noise(g, 6);
    const Control u(GridFn{g, oracles::random_vector(9, rng)});

    ThetaPattern theta{{Slot::Nu, Slot::Noise}};
    // sym(g x h) pairs (nu, noise) slots with both factor orders.
    double diag = 0.0;
    for (Index i = 0; i < 9; ++i)
        diag += 0.5 * (gf.values[i] * hf.values[i] + hf.values[i] * gf.values[i]) *
                u.values()[i] * g->cell_measure()[i] * p.increments[i];
    const double full = 0.5 * (l2_inner(gf, u.fn()) * isonormal(p, hf) +
                               l2_inner(hf, u.fn()) * isonormal(p, gf));
    CHECK(mixed_integral(k, theta, p, u, 1.0) == doctest::Approx(full - diag).epsilon(1e-11));
}

TEST_CASE("shifted integral expands linearly at first order") {
    const GridPtr g = build_grid(12);
    SplitMix64 rng(61);
    const GridFn f{g, oracles::random_vector(12, rng)};
    const Kernel k = Kernel::rank_one_power(f, 1);
    const NoisePath p = sample_white_noise(g, 8);
    const Control u(GridFn{g, oracles::random_vector(12, rng)});
    const double eps = 0.3;
    CHECK(shifted_multiple_integral(k, p, u, eps) ==
          doctest::Approx(eps * multiple_integral(k, p) + l2_inner(f, u.fn())).epsilon(1e-12));
}

TEST_CASE("shifted integral at eps zero is the deterministic integral") {
    const GridPtr g = build_grid(6);
    SplitMix64 rng(71);
    const NoisePath p = sample_white_noise(g, 9);
    const Control u(GridFn{g, oracles::random_vector(6, rng)});
    for (int order = 1; order <= 3; ++order) {
        const Kernel k = oracles::random_dense_kernel(g, order, rng, true);
        CHECK(shifted_multiple_integral(k, p, u, 0.0) ==
              doctest::Approx(deterministic_integral(k, u)).epsilon(1e-12));
    }
}

TEST_CASE("shifted route equals the pattern decomposition on diagonal-free kernels") {
    SplitMix64 rng(81);
    for (int rep = 0; rep < 6; ++rep) {
        const GridPtr g = build_grid(6);
        const int order = 1 + static_cast<int>(rng.next_u64() % 3);
        const Kernel k = oracles::random_dense_kernel(g, order, rng, true);
        const NoisePath p = sample_white_noise(g, 900 + static_cast<std::uint64_t>(rep));
        const Control u(GridFn{g, oracles::random_vector(6, rng)});
        const double eps = 0.2 + rng.next_uniform();

        const double route_a = shifted_multiple_integral(k, p, u, eps);
        double route_b = 0.0;
        for (const ThetaPattern& theta : ThetaPattern::enumerate(order))
            route_b += mixed_integral(k, theta, p, u, eps);
        CHECK(route_a == doctest::Approx(route_b).epsilon(1e-10));
    }
}

TEST_CASE("moment bound formulas") {
    CHECK(theoretical_bound(3, 0, 1.0, 2.0, 1.0) == doctest::Approx(std::sqrt(6.0)));
    CHECK(theoretical_bound_all(1, 0.0, 2.0, 1.0) == doctest::Approx(2.0));
    CHECK(theoretical_bound_all(2, 1.0, 4.0, 1.0) == doctest::Approx(std::sqrt(2.0) * 24.0));
    CHECK(theoretical_bound(2, 1, 4.0, 3.0, 0.5, 0.1) ==
          doctest::Approx(0.1 * 1.0 * 2.0 * std::sqrt(2.0) * 0.5));
    CHECK_THROWS_AS(theoretical_bound(2, 0, 1.0, 1.5, 1.0), std::invalid_argument);
}

TEST_CASE("order limits are enforced") {
    const GridPtr g = build_grid(4);
    const NoisePath p = sample_white_noise(g, 2);
    const Control u(constant_fn(g, 1.0));
    const Kernel k = Kernel::rank_one_power(constant_fn(g, 1.0), 2);
    ThetaPattern theta{{Slot::Nu, Slot::Noise, Slot::Noise}};
    CHECK_THROWS_AS(mixed_integral(k, theta, p, u, 1.0), std::invalid_argument);
}
