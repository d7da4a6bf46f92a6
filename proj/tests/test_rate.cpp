#include "wce/rate.hpp"

#include "wce/applications.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace wce;

namespace {

ChaosSpec single_site_spec(std::vector<Kernel> orders) {
    Eigen::MatrixXd one(1, 1);
    one(0, 0) = 1.0;
    const int top = static_cast<int>(orders.size()) - 1;
    return ChaosSpec(KernelFamily(SiteSet(1, one), {std::move(orders)}), top);
}

ChaosSpec first_chaos(const GridPtr& g, const GridFn& f, double f0 = 0.0) {
    std::vector<Kernel> orders;
    orders.push_back(Kernel::constant(f0));
    orders.push_back(Kernel::rank_one_power(f, 1));
    return single_site_spec(std::move(orders));
}

ChaosSpec second_chaos(const GridPtr& g, double coeff = 1.0) {
    std::vector<Kernel> orders;
    orders.push_back(Kernel::constant(0.0));
    orders.push_back(Kernel::separable(g, 1, {}));
    orders.push_back(Kernel::rank_one_power(constant_fn(g, 1.0), 2, coeff));
    return single_site_spec(std::move(orders));
}

} // namespace

TEST_CASE("first-chaos pointwise rate in closed form") {
    const GridPtr g = build_grid(16);
    const ChaosSpec spec = first_chaos(g, constant_fn(g, 1.0));
    const RateResult r = rate_pointwise(spec, 0, 1.0);
    CHECK(r.converged);
    CHECK(r.lambda == doctest::Approx(0.5).epsilon(1e-12));
    for (Index i = 0; i < 16; ++i)
        CHECK(r.u_star->values()[i] == doctest::Approx(1.0).epsilon(1e-12));

    // Scaling: f -> c f rescales lambda by 1/c^2.
    for (double c : {0.5, 2.0}) {
        const ChaosSpec scaled = first_chaos(g, constant_fn(g, c));
        CHECK(rate_pointwise(scaled, 0, 1.0).lambda ==
              doctest::Approx(0.5 / (c * c)).epsilon(1e-12));
    }
}

TEST_CASE("first-chaos zero kernel is feasible only at the mean") {
    const GridPtr g = build_grid(8);
    const ChaosSpec spec = first_chaos(g, constant_fn(g, 0.0), 2.0);
    CHECK(rate_pointwise(spec, 0, 2.0).lambda == 0.0);
    const RateResult bad = rate_pointwise(spec, 0, 3.0);
    CHECK(std::isinf(bad.lambda));
    CHECK(bad.infeasible_certified);
}

TEST_CASE("exponential functional rate at the natural target") {
    const GridPtr g = build_grid(16);
    const ChaosSpec spec(exponential_functional_kernels(constant_fn(g, 1.0), 12), 12);
    const RateResult r = rate_pointwise(spec, 0, std::exp(1.0));
    CHECK(r.converged);
    CHECK(r.lambda == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(r.residual <= 1e-6);
}

TEST_CASE("second-chaos rate and infeasibility certificate") {
    const GridPtr g = build_grid(16);
    const ChaosSpec spec = second_chaos(g);
    const RateResult r = rate_pointwise(spec, 0, 1.0);
    CHECK(r.converged);
    CHECK(r.lambda == doctest::Approx(0.5).epsilon(1e-3));

    const RateResult inf = rate_pointwise(spec, 0, -1.0);
    CHECK(std::isinf(inf.lambda));
    CHECK(inf.infeasible_certified);
    CHECK_FALSE(inf.converged);
}

TEST_CASE("path rate for the conditioned first-chaos family") {
    const GridPtr g = build_grid(16);
    const std::vector<double> zs = {0.25, 0.5, 0.75, 1.0};
    std::vector<Kernel> base;
    base.push_back(Kernel::constant(0.0));
    base.push_back(Kernel::rank_one_power(constant_fn(g, 1.0), 1));
    const ChaosSpec spec(adapted_kernels(base, SiteSet::line(zs), g), 1);

    Eigen::VectorXd psi(4);
    for (Index i = 0; i < 4; ++i) psi[i] = zs[static_cast<std::size_t>(i)];
    const RateResult r = rate_path(spec, psi);
    CHECK(r.converged);
    CHECK(r.residual <= 1e-6);
    CHECK(r.lambda == doctest::Approx(0.5).epsilon(1e-5));
    for (Index i = 0; i < 16; ++i)
        CHECK(r.u_star->values()[i] == doctest::Approx(1.0).epsilon(1e-4));

    // Independent least-norm oracle.
    std::vector<GridFn> rows;
    for (double z : zs) rows.push_back(indicator_upto(g, z));
    const Eigen::VectorXd u_oracle = oracles::least_norm_control(rows, psi);
    const Control uo(GridFn{g, u_oracle});
    CHECK(r.lambda == doctest::Approx(0.5 * uo.norm_sq()).epsilon(1e-6));
}

TEST_CASE("feasible targets give upper bounds and zero targets vanish") {
    const GridPtr g = build_grid(8);
    SplitMix64 rng(77);
    const ChaosSpec spec = first_chaos(g, GridFn{g, oracles::random_vector(8, rng, 0.2, 1.0)});
    const Control u0(GridFn{g, oracles::random_vector(8, rng)});
    Eigen::VectorXd psi(1);
    psi[0] = skeleton(spec, u0).values[0];
    const RateResult r = rate_path(spec, psi);
    CHECK(r.converged);
    CHECK(r.lambda <= 0.5 * u0.norm_sq() + 1e-9);

    Eigen::VectorXd flat(1);
    flat[0] = 0.0; // f0 = 0 here
    const RateResult z = rate_path(spec, flat);
    CHECK(z.lambda <= 1e-10);
}

TEST_CASE("iterative solver agrees with the first-chaos closed form") {
    const GridPtr g = build_grid(12);
    SplitMix64 rng(88);
    const GridFn f{g, oracles::random_vector(12, rng, 0.3, 1.0)};
    const ChaosSpec spec = first_chaos(g, f, 0.2);
    const double target = 1.1;
    const RateResult closed = rate_pointwise(spec, 0, target);

    Eigen::VectorXd psi(1);
    psi[0] = target;
    const RateResult iter = rate_path(spec, psi); // forced through the penalty path
    CHECK(iter.converged);
    CHECK(std::abs(iter.lambda - closed.lambda) <= 1e-6 * (1.0 + closed.lambda));
}

TEST_CASE("skeleton gradient matches finite differences") {
    SplitMix64 rng(99);
    const GridPtr g = build_grid(6);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Kernel> orders;
        orders.push_back(Kernel::constant(rng.next_uniform()));
        orders.push_back(Kernel::rank_one_power(GridFn{g, oracles::random_vector(6, rng)}, 1));
        if (rep % 2 == 0) {
            orders.push_back(oracles::random_dense_kernel(g, 2, rng, false));
        } else {
            Kernel::SeparableTerm t;
            t.coeff = rng.next_uniform() + 0.5;
            t.factors = {GridFn{g, oracles::random_vector(6, rng)},
                         GridFn{g, oracles::random_vector(6, rng)}};
            orders.push_back(Kernel::separable(g, 2, {t}));
        }
        orders.push_back(Kernel::rank_one_power(GridFn{g, oracles::random_vector(6, rng)}, 3,
                                                0.25));
        const ChaosSpec spec = single_site_spec(std::move(orders));
        const Eigen::VectorXd uv = oracles::random_vector(6, rng);
        const GridFn grad = skeleton_gradient(spec, Control(GridFn{g, uv}), 0);

        const double h = 1e-5;
        for (Index i = 0; i < 6; ++i) {
            Eigen::VectorXd up = uv, dn = uv;
            up[i] += h;
            dn[i] -= h;
            const double fd = (skeleton(spec, Control(GridFn{g, up})).values[0] -
                               skeleton(spec, Control(GridFn{g, dn})).values[0]) /
                              (2.0 * h);
            // fd is the coordinate derivative; the Riesz form divides by the measure.
            const double got = grad.values[i] * g->cell_measure()[i];
            CHECK(got == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("first-chaos gradients are the kernel itself") {
    const GridPtr g = build_grid(8);
    const GridFn f = indicator_upto(g, 0.75);
    const ChaosSpec spec = first_chaos(g, f);
    const GridFn grad = skeleton_gradient(spec, Control::zero(g), 0);
    CHECK((grad.values - f.values).cwiseAbs().maxCoeff() <= 1e-14);

    // Quadratic term: gradient is 2 <g,u> g.
    const GridPtr g2 = build_grid(8);
    const GridFn gg = constant_fn(g2, 1.0);
    std::vector<Kernel> orders;
    orders.push_back(Kernel::constant(0.0));
    orders.push_back(Kernel::separable(g2, 1, {}));
    orders.push_back(Kernel::rank_one_power(gg, 2));
    const ChaosSpec spec2 = single_site_spec(std::move(orders));
    const Control u(constant_fn(g2, 0.7));
    const GridFn grad2 = skeleton_gradient(spec2, u, 0);
    for (Index i = 0; i < 8; ++i)
        CHECK(grad2.values[i] == doctest::Approx(2.0 * 0.7).epsilon(1e-12));
}
