#include "wce/noise.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace wce;

TEST_CASE("identical seeds give bit-identical paths") {
    const GridPtr g = build_grid(16);
    const NoisePath a = sample_white_noise(g, 42);
    const NoisePath b = sample_white_noise(g, 42);
    CHECK(a.increments == b.increments);
    const NoisePath c = sample_white_noise(g, 43);
    CHECK(a.increments != c.increments);
}

TEST_CASE("per-cell variance matches the cell measure") {
    const GridPtr g = build_grid(4);
    const long long n = 100'000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(4);
    double total = 0.0, total_sq = 0.0;
    for (long long s = 0; s < n; ++s) {
        const NoisePath p = sample_white_noise(g, derive_stream(7, s));
        sum += p.increments;
        sumsq += p.increments.cwiseProduct(p.increments);
        const double w1 = p.increments.sum();
        total += w1;
        total_sq += w1 * w1;
    }
    for (Index i = 0; i < 4; ++i) {
        const double var = sumsq[i] / n - std::pow(sum[i] / n, 2);
        // Var of the variance estimator of N(0, 1/4) is ~ 2 (1/4)^2 / n.
        const double se = std::sqrt(2.0 / n) * 0.25;
        CHECK(std::abs(var - 0.25) <= 5 * se);
    }
    const double var_sum = total_sq / n - std::pow(total / n, 2);
    CHECK(var_sum == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("single heavy cell keeps its variance") {
    GridSpec spec;
    spec.time_cells = 1;
    spec.weights = Eigen::VectorXd::Constant(1, 2.0);
    const GridPtr g = build_grid(spec);
    const long long n = 100'000;
    double sq = 0.0;
    for (long long s = 0; s < n; ++s)
        sq += std::pow(sample_white_noise(g, derive_stream(3, s)).increments[0], 2);
    CHECK(sq / n == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("shift adds the control cell mass") {
    const GridPtr g = build_grid(4);
    const NoisePath p = sample_white_noise(g, 1);

    const NoisePath shifted = shift_noise(p, Control(constant_fn(g, 1.0)), 1.0);
    for (Index i = 0; i < 4; ++i)
        CHECK(shifted.increments[i] == doctest::Approx(p.increments[i] + 0.25));

    const NoisePath det = shift_noise(p, Control(constant_fn(g, 2.0)), 0.0);
    for (Index i = 0; i < 4; ++i) CHECK(det.increments[i] == doctest::Approx(0.5));

    const NoisePath halved = shift_noise(p, Control::zero(g), 0.5);
    for (Index i = 0; i < 4; ++i) CHECK(halved.increments[i] == 0.5 * p.increments[i]);

    const NoisePath same = shift_noise(p, Control::zero(g), 1.0);
    CHECK(same.increments == p.increments);
}

TEST_CASE("isonormal pairing reproduces the covariance structure") {
    const GridPtr g = build_grid(16);
    const GridFn h = indicator_upto(g, 1.0);
    const GridFn left = indicator_upto(g, 0.5);
    const GridFn right{g, h.values - left.values};
    const long long n = 50'000;
    double var = 0.0, cross = 0.0, cov_hl = 0.0;
    for (long long s = 0; s < n; ++s) {
        const NoisePath p = sample_white_noise(g, derive_stream(11, s));
        const double w1 = isonormal(p, h);
        var += w1 * w1;
        cross += isonormal(p, left) * isonormal(p, right);
        cov_hl += w1 * isonormal(p, left);
    }
    CHECK(var / n == doctest::Approx(1.0).epsilon(0.03));
    CHECK(std::abs(cross / n) < 0.02);                       // disjoint supports
    CHECK(cov_hl / n == doctest::Approx(0.5).epsilon(0.05)); // <h, 1_[0,1/2]>
}

TEST_CASE("fbm covariance at H=1/2 is the Brownian one") {
    Eigen::VectorXd times(4);
    times << 0.25, 0.5, 0.75, 1.0;
    const Eigen::MatrixXd r = fbm_covariance(times, 0.5);
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j)
            CHECK(std::abs(r(i, j) - std::min(times[i], times[j])) <= 1e-15);
    const Eigen::MatrixXd gen_h = fbm_generator(times, 0.5);
    Eigen::MatrixXd brown = Eigen::MatrixXd::Zero(4, 4);
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) brown(i, j) = std::min(times[i], times[j]);
    brown.diagonal().array() += 1e-12;
    const Eigen::MatrixXd gen_b = Eigen::LLT<Eigen::MatrixXd>(brown).matrixL();
    CHECK((gen_h - gen_b).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fbm covariance value from the closed form") {
    Eigen::VectorXd times(2);
    times << 0.25, 1.0;
    const Eigen::MatrixXd r = fbm_covariance(times, 0.75);
    CHECK(r(0, 1) == doctest::Approx(0.2377405).epsilon(1e-6));
}

TEST_CASE("fbm sample covariance matches the kernel") {
    Eigen::VectorXd times(2);
    times << 0.5, 1.0;
    const long long n = 20'000;
    double acc = 0.0;
    for (long long s = 0; s < n; ++s) {
        const Eigen::VectorXd x = sample_fbm(times, 0.5, derive_stream(19, s));
        acc += x[0] * x[1];
    }
    // Var(X0 X1) = R00 R11 + R01^2.
    const double se = std::sqrt((0.5 * 1.0 + 0.25) / n);
    CHECK(std::abs(acc / n - 0.5) <= 5 * se);
}

TEST_CASE("hurst exponent outside (0,1) is rejected") {
    Eigen::VectorXd times(2);
    times << 0.5, 1.0;
    CHECK_THROWS_AS(fbm_covariance(times, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(fbm_covariance(times, 1.0), std::invalid_argument);
}
