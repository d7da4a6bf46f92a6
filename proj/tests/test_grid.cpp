#include "wce/grid.hpp"
#include "wce/rng.hpp"

#include <doctest.h>

using namespace wce;

TEST_CASE("uniform time grid has equal cell measures") {
    const GridPtr g = build_grid(4);
    CHECK(g->cell_count() == 4);
    for (Index i = 0; i < 4; ++i) CHECK(g->cell_measure()[i] == doctest::Approx(0.25));
    CHECK(g->total_measure() == doctest::Approx(1.0));
}

TEST_CASE("product grid multiplies axis widths") {
    GridSpec spec;
    spec.time_cells = 2;
    spec.space.push_back(AxisSpec{2, 0.0, 1.0});
    const GridPtr g = build_grid(spec);
    CHECK(g->cell_count() == 4);
    for (Index i = 0; i < 4; ++i) CHECK(g->cell_measure()[i] == doctest::Approx(0.25));
}

TEST_CASE("weight rule rescales the measure") {
    GridSpec spec;
    spec.time_cells = 1;
    spec.weights = Eigen::VectorXd::Constant(1, 2.0);
    const GridPtr g = build_grid(spec);
    CHECK(g->cell_measure()[0] == doctest::Approx(2.0));
}

TEST_CASE("bad grid specs are rejected") {
    CHECK_THROWS_AS(build_grid(0), std::invalid_argument);
    GridSpec neg;
    neg.time_cells = 2;
    neg.weights = Eigen::VectorXd::Constant(2, -1.0);
    CHECK_THROWS_AS(build_grid(neg), std::invalid_argument);
}

TEST_CASE("l2 inner product on the unit grid") {
    const GridPtr g = build_grid(8);
    const GridFn one = constant_fn(g, 1.0);
    CHECK(l2_inner(one, one) == doctest::Approx(1.0));
    CHECK(l2_norm(one) == doctest::Approx(1.0));

    const GridFn left = indicator_upto(g, 0.5);
    const GridFn right{g, Eigen::VectorXd::Ones(8) - left.values};
    CHECK(l2_inner(left, right) == doctest::Approx(0.0));

    const GridFn two = constant_fn(g, 2.0);
    const GridFn three = constant_fn(g, 3.0);
    CHECK(l2_inner(two, three) == doctest::Approx(6.0));
}

TEST_CASE("inner product is symmetric bilinear and positive definite") {
    const GridPtr g = build_grid(6);
    SplitMix64 rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd av(6), bv(6);
        for (Index i = 0; i < 6; ++i) {
            av[i] = rng.next_uniform() - 0.5;
            bv[i] = rng.next_uniform() - 0.5;
        }
        const GridFn a{g, av}, b{g, bv};
        CHECK(l2_inner(a, b) == doctest::Approx(l2_inner(b, a)));
        const GridFn a2{g, 2.0 * av};
        CHECK(l2_inner(a2, b) == doctest::Approx(2.0 * l2_inner(a, b)));
        if (av.norm() > 0) CHECK(l2_inner(a, a) > 0.0);
    }
}

TEST_CASE("cell splitting preserves inner products of piecewise-constant functions") {
    const GridPtr coarse = build_grid(4);
    const GridPtr fine = build_grid(8);
    SplitMix64 rng(5);
    Eigen::VectorXd a(4), b(4);
    for (Index i = 0; i < 4; ++i) {
        a[i] = rng.next_uniform();
        b[i] = rng.next_uniform();
    }
    Eigen::VectorXd af(8), bf(8);
    for (Index i = 0; i < 8; ++i) {
        af[i] = a[i / 2];
        bf[i] = b[i / 2];
    }
    CHECK(l2_inner(GridFn{coarse, a}, GridFn{coarse, b}) ==
          l2_inner(GridFn{fine, af}, GridFn{fine, bf}));
}

TEST_CASE("mismatched grids are rejected") {
    const GridPtr a = build_grid(4);
    const GridPtr b = build_grid(5);
    CHECK_THROWS_AS(l2_inner(constant_fn(a, 1.0), constant_fn(b, 1.0)), std::invalid_argument);
}

TEST_CASE("site sets validate their points") {
    CHECK_THROWS_AS(SiteSet::line({0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(SiteSet::line({1.5}), std::invalid_argument);
    const SiteSet s = SiteSet::line({0.25, 1.0});
    CHECK(s.distance(0, 1) == doctest::Approx(0.75));
}
