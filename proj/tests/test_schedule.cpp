#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dislab/schedule.hpp"
#include "testutil.hpp"

using namespace dislab;
using namespace dislab::testutil;

TEST_CASE("karras ladder hits the configured endpoints") {
    const auto sch = make_schedule(ScheduleKind::karras, 0.002, 4.0, 100, 7.0);
    CHECK(sch.levels.front() == 4.0);
    CHECK(sch.levels.back() == 0.002);
    CHECK(sch.levels.size() == 100);
}

TEST_CASE("quadratic two-step ladder") {
    const auto sch = make_schedule(ScheduleKind::quadratic, 0.01, 1.0, 2);
    CHECK(sch.levels[0] == 1.0);
    CHECK(sch.levels[1] == 0.01);
}

TEST_CASE("rho = 1 degenerates to the linear grid") {
    const auto karras = make_schedule(ScheduleKind::karras, 0.05, 2.0, 37, 1.0);
    const auto linear = make_schedule(ScheduleKind::linear, 0.05, 2.0, 37);
    for (std::size_t i = 0; i < karras.levels.size(); ++i)
        CHECK(karras.levels[i] == doctest::Approx(linear.levels[i]).epsilon(1e-12));
}

TEST_CASE("ladders are strictly decreasing with positive sigma^2 gaps") {
    RngStream rng = make_stream(kTestSeed, 0, "sched-prop");
    for (int trial = 0; trial < 30; ++trial) {
        const double lo = rng.uniform(1e-4, 0.1);
        const double hi = lo + rng.uniform(0.5, 8.0);
        const std::size_t steps = 2 + rng.index(200);
        const auto kind = static_cast<ScheduleKind>(rng.index(3));
        const double rho = rng.uniform(1.0, 10.0);
        const auto sch = make_schedule(kind, lo, hi, steps, rho);
        for (std::size_t i = 0; i + 1 < sch.levels.size(); ++i) {
            CHECK(sch.levels[i] > sch.levels[i + 1]);
            CHECK(sch.levels[i] * sch.levels[i] - sch.levels[i + 1] * sch.levels[i + 1] > 0.0);
        }
        // discrete d(sigma^2)/dt is positive across the range
        for (double s : {lo * 1.01, 0.5 * (lo + hi), hi * 0.99}) CHECK(sch.dsigma2_dt(s) > 0.0);
    }
}

TEST_CASE("invalid ladder configurations are config errors") {
    CHECK_THROWS_AS(make_schedule(ScheduleKind::karras, 0.0, 4.0, 100), ConfigError);
    CHECK_THROWS_AS(make_schedule(ScheduleKind::karras, 2.0, 1.0, 100), ConfigError);
    CHECK_THROWS_AS(make_schedule(ScheduleKind::karras, 0.01, 1.0, 1), ConfigError);
}

TEST_CASE("quadratic d(sigma^2)/dt is approximately 2 sigma") {
    const auto sch = make_schedule(ScheduleKind::quadratic, 0.01, 2.0, 400);
    for (double s : {0.1, 0.7, 1.5})
        CHECK(sch.dsigma2_dt(s) == doctest::Approx(2.0 * s).epsilon(0.02));
}

TEST_CASE("forward perturbation: zero noise, determinism, variance") {
    RngStream rng = make_stream(kTestSeed, 1, "fp");
    const Vec x0{0.4, -1.2};
    CHECK(forward_perturb(x0, 0.0, rng) == x0);

    RngStream a = make_stream(kTestSeed, 2, "fp");
    RngStream b = make_stream(kTestSeed, 2, "fp");
    CHECK(forward_perturb(x0, 1.3, a) == forward_perturb(x0, 1.3, b));

    RngStream c = make_stream(kTestSeed, 3, "fp-var");
    std::vector<double> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i) draws.push_back(forward_perturb({0.0}, 2.0, c)[0]);
    const double var = variance_of(draws);
    CHECK(var >= 3.9);
    CHECK(var <= 4.1);
}

TEST_CASE("bridge: endpoint behavior") {
    RngStream rng = make_stream(kTestSeed, 4, "bridge");
    const Vec x_t{1.0, 2.0};
    const Vec x0{-0.5, 0.25};
    CHECK(bridge_sample(x_t, x0, 1.0, 0.0, rng) == x0);

    // sigma_prev -> sigma_t: mean -> x_t, variance -> 0
    const double st = 0.8;
    const double sp = st * (1.0 - 1e-9);
    Vec acc(2, 0.0);
    for (int i = 0; i < 200; ++i) {
        const Vec draw = bridge_sample(x_t, x0, st, sp, rng);
        CHECK(norm2(draw - x_t) < 1e-3);
        acc = acc + draw;
    }
    CHECK(norm2((1.0 / 200.0) * acc - x_t) < 1e-4);
}

TEST_CASE("bridge: ordering violations throw") {
    RngStream rng = make_stream(kTestSeed, 5, "bridge-err");
    CHECK_THROWS_AS(bridge_sample({0.0}, {0.0}, 1.0, 1.0, rng), OrderingError);
    CHECK_THROWS_AS(bridge_sample({0.0}, {0.0}, 1.0, 2.0, rng), OrderingError);
    CHECK_THROWS_AS(bridge_sample({0.0, 0.0}, {0.0}, 1.0, 0.5, rng), ShapeError);
}

TEST_CASE("bridge law: marginalizing over x_t reproduces the forward kernel") {
    // x_t ~ q(X_t|X_0), then bridge down to sigma_prev: composite law must be
    // q(X_prev|X_0) = N(x0, sigma_prev^2)
    RngStream rng = make_stream(kTestSeed, 6, "bridge-law");
    const double st = 1.7, sp = 0.9;
    const Vec x0{0.3};
    std::vector<double> draws;
    draws.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
        const Vec x_t = forward_perturb(x0, st, rng);
        draws.push_back(bridge_sample(x_t, x0, st, sp, rng)[0]);
    }
    CHECK(mean_of(draws) == doctest::Approx(0.3).epsilon(0.02));
    CHECK(variance_of(draws) == doctest::Approx(sp * sp).epsilon(0.02));
}

TEST_CASE("bridge chain down the full ladder reproduces the terminal kernel") {
    const auto sch = make_schedule(ScheduleKind::karras, 0.05, 3.0, 40);
    RngStream rng = make_stream(kTestSeed, 7, "bridge-chain");
    const Vec x0{-0.7};
    std::vector<double> finals;
    finals.reserve(100000);
    for (int i = 0; i < 100000; ++i) {
        Vec x = forward_perturb(x0, sch.sigma_max, rng);
        for (std::size_t k = 0; k + 1 < sch.levels.size(); ++k)
            x = bridge_sample(x, x0, sch.levels[k], sch.levels[k + 1], rng);
        finals.push_back(x[0]);
    }
    CHECK(mean_of(finals) == doctest::Approx(-0.7).epsilon(0.01));
    CHECK(variance_of(finals) ==
          doctest::Approx(sch.sigma_min * sch.sigma_min).epsilon(0.02));
}
