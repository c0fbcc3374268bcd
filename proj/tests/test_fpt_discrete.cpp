#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "switchq/errors.hpp"
#include "switchq/fpt_discrete.hpp"
#include "switchq/simulator.hpp"
#include "switchq/transient.hpp"

#include <cmath>
#include <limits>

using namespace switchq;
using model::QueueSpec;
using transient::MM1Kernel;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QueueSpec stable_spec(double eta1 = 0.3, double p = 0.4, long j = 1) {
    // lambda2 < mu2: emptying is certain
    QueueSpec q;
    q.lambda1 = 1.0;
    q.mu1 = 0.5;
    q.lambda2 = 1.0;
    q.mu2 = 2.0;
    q.eta1 = eta1;
    q.eta2 = 0.0;
    q.init_state = j;
    q.init_env_prob = p;
    return q;
}

QueueSpec transientward_spec(double eta1 = 0.3, double p = 0.4, long j = 1) {
    // lambda2 > mu2: emptying may never happen
    QueueSpec q = stable_spec(eta1, p, j);
    q.lambda2 = 1.2;
    q.mu2 = 1.0;
    return q;
}

} // namespace

TEST_CASE("laplace_roots: ordering and quadratic products") {
    const QueueSpec q = stable_spec();
    for (double s : {0.1, 0.5, 2.0, 10.0}) {
        const auto r = fpt_discrete::laplace_roots(q, s);
        CHECK(r.phi2 > 0.0);
        CHECK(r.phi2 < 1.0);
        CHECK(r.phi1 > 1.0);
        CHECK(r.psi2 > 0.0);
        CHECK(r.psi2 < 1.0);
        CHECK(r.psi1 > 1.0);
        CHECK(r.phi1 * r.phi2 * q.mu1 == doctest::Approx(q.lambda1).epsilon(1e-12));
        CHECK(r.psi1 * r.psi2 * q.mu2 == doctest::Approx(q.lambda2).epsilon(1e-12));
    }
}

TEST_CASE("avoiding_prob: dominated by the unconstrained transition") {
    const MM1Kernel k{1.0, 2.0};
    const double avoiding = fpt_discrete::avoiding_prob(k, 3, 2, 1.5);
    const double full = transient::mm1_transition(k, 3, 2, 1.5);
    CHECK(avoiding > 0.0);
    CHECK(avoiding <= full);
}

TEST_CASE("avoiding_prob: n = 1 closed form") {
    for (double lambda : {1.0, 0.7}) {
        const MM1Kernel k{lambda, 2.0};
        for (long j : {1L, 2L, 5L}) {
            const double t = 1.3;
            const double x = 2.0 * t * std::sqrt(k.lambda * k.mu);
            const double closed = static_cast<double>(j) / (k.mu * t) *
                                  std::exp(-t * (k.lambda + k.mu) + x) *
                                  std::pow(k.mu / k.lambda, 0.5 * static_cast<double>(j)) *
                                  numerics::bessel_i_scaled(static_cast<int>(j), x);
            CHECK(fpt_discrete::avoiding_prob(k, j, 1, t) ==
                  doctest::Approx(closed).epsilon(1e-12));
        }
    }
}

TEST_CASE("avoiding_prob: start-state delta as t -> 0") {
    const MM1Kernel k{1.0, 2.0};
    CHECK(fpt_discrete::avoiding_prob(k, 4, 4, 1e-9) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(fpt_discrete::avoiding_prob(k, 4, 3, 1e-9) < 1e-6);
}

TEST_CASE("mm1_fpt_density: identity with the avoiding probability to level 1") {
    const MM1Kernel k{1.0, 2.0};
    for (long j : {1L, 3L, 7L})
        for (double t : {0.4, 1.5, 6.0})
            CHECK(k.mu * fpt_discrete::avoiding_prob(k, j, 1, t) ==
                  doctest::Approx(fpt_discrete::mm1_fpt_density(k, j, t)).epsilon(1e-12));
}

TEST_CASE("mm1_fpt_density: total absorption mass") {
    const MM1Kernel stable{1.0, 2.0};
    const double certain = numerics::integrate(
        [&](double t) { return fpt_discrete::mm1_fpt_density(stable, 1, t); }, 1e-14, kInf);
    CHECK(certain == doctest::Approx(1.0).epsilon(1e-6));

    const MM1Kernel drifting{1.2, 1.0};
    const double partial = numerics::integrate(
        [&](double t) { return fpt_discrete::mm1_fpt_density(drifting, 1, t); }, 1e-14, kInf);
    CHECK(partial == doctest::Approx(1.0 / 1.2).epsilon(1e-6));
}

TEST_CASE("absorbed_state_prob: collapses without switching") {
    QueueSpec q = stable_spec(0.0, 1.0, 2);
    const MM1Kernel k1{q.lambda1, q.mu1};
    for (long n = 1; n <= 6; ++n) {
        CHECK(fpt_discrete::absorbed_state_prob(q, n, 1, 1.5) ==
              doctest::Approx(fpt_discrete::avoiding_prob(k1, 2, n, 1.5)).epsilon(1e-13));
        CHECK(fpt_discrete::absorbed_state_prob(q, n, 2, 1.5) == 0.0);
    }
}

TEST_CASE("absorbed_state_prob: dominated by the free transient") {
    QueueSpec q = stable_spec(0.5, 0.4, 2);
    for (long n = 1; n <= 8; ++n)
        for (int env : {1, 2})
            CHECK(fpt_discrete::absorbed_state_prob(q, n, env, 1.5) <=
                  transient::joint_transient(q, n, env, 1.5) + 1e-12);
}

TEST_CASE("absorbed_state_prob: taboo frequencies from the simulator") {
    QueueSpec q = stable_spec(0.5, 0.4, 2);
    const double t = 1.5;
    const long reps = 100000;
    simulator::SimConfig cfg;
    cfg.replications = reps;
    cfg.horizon = t;
    cfg.seed = 77001;
    std::map<std::pair<long, int>, long> counts;
    for (long r = 0; r < reps; ++r) {
        const auto path = simulator::simulate_ctmc_path(q, cfg, static_cast<std::uint64_t>(r));
        bool hit_zero = false;
        for (const auto& ev : path) hit_zero = hit_zero || ev.level == 0;
        if (!hit_zero) ++counts[{path.back().level, path.back().env}];
    }
    for (long n = 1; n <= 6; ++n) {
        for (int env : {1, 2}) {
            const double analytic = fpt_discrete::absorbed_state_prob(q, n, env, t);
            const auto it = counts.find({n, env});
            const double emp = it == counts.end()
                                   ? 0.0
                                   : static_cast<double>(it->second) / static_cast<double>(reps);
            const double se = std::sqrt(std::max(emp * (1.0 - emp), 1e-7) /
                                        static_cast<double>(reps));
            CHECK(std::abs(emp - analytic) < 3.0 * se);
        }
    }
}

TEST_CASE("fpt_density: boundary-flux identity") {
    const QueueSpec q = stable_spec(0.3, 0.4, 2);
    for (double t : {0.5, 1.5, 4.0}) {
        const double flux = q.mu1 * fpt_discrete::absorbed_state_prob(q, 1, 1, t) +
                            q.mu2 * fpt_discrete::absorbed_state_prob(q, 1, 2, t);
        CHECK(fpt_discrete::fpt_density(q, 2, t) == doctest::Approx(flux).epsilon(1e-9));
    }
}

TEST_CASE("fpt_density: p = 0 reduces to the environment-2 density") {
    const QueueSpec q = stable_spec(0.3, 0.0, 3);
    const MM1Kernel k2{q.lambda2, q.mu2};
    for (double t : {0.3, 1.0, 5.0})
        CHECK(fpt_discrete::fpt_density(q, 3, t) ==
              fpt_discrete::mm1_fpt_density(k2, 3, t));
}

TEST_CASE("fpt_density: nonnegative on a grid") {
    const QueueSpec q = stable_spec(0.3, 0.4, 1);
    for (double t = 0.05; t < 8.0; t += 0.212)
        CHECK(fpt_discrete::fpt_density(q, 1, t) >= 0.0);
}

TEST_CASE("fpt_density: integral matches the transform at s = 0") {
    QueueSpec q = transientward_spec(0.3, 0.4, 1);
    for (long j : {1L, 3L}) {
        const double integral = numerics::integrate(
            [&](double t) { return fpt_discrete::fpt_density(q, j, t); }, 1e-14, kInf,
            {1e-8, 1e-8, 60});
        CHECK(integral == doctest::Approx(fpt_discrete::fpt_laplace(q, j, 0.0)).epsilon(1e-5));
    }
}

TEST_CASE("fpt_laplace: transform behavior") {
    const QueueSpec q = stable_spec(0.3, 0.4, 1);
    // decreasing toward zero in s
    double prev = 1.0;
    for (double s : {0.5, 2.0, 8.0, 40.0}) {
        const double b = fpt_discrete::fpt_laplace(q, 2, s);
        CHECK(b < prev);
        CHECK(b > 0.0);
        prev = b;
    }
    CHECK(fpt_discrete::fpt_laplace(q, 2, 200.0) < 1e-3);
    // certain absorption when lambda2 <= mu2
    for (long j : {1L, 2L, 5L})
        CHECK(fpt_discrete::fpt_laplace(q, j, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fpt_laplace: quadrature of the density recovers the transform") {
    const QueueSpec q = stable_spec(0.3, 0.4, 2);
    const double s = 0.7;
    const double quad = numerics::integrate(
        [&](double t) { return std::exp(-s * t) * fpt_discrete::fpt_density(q, 2, t); }, 1e-14,
        kInf, {1e-8, 1e-8, 60});
    CHECK(quad == doctest::Approx(fpt_discrete::fpt_laplace(q, 2, s)).epsilon(1e-5));
}

TEST_CASE("absorption_probability: regimes") {
    CHECK(fpt_discrete::absorption_probability(stable_spec(0.3, 0.4, 1), 1) == 1.0);
    CHECK(fpt_discrete::absorption_probability(stable_spec(0.3, 0.4, 1), 4) == 1.0);

    const QueueSpec q0 = transientward_spec(0.5, 0.0, 2);
    for (long j : {1L, 2L, 6L})
        CHECK(fpt_discrete::absorption_probability(q0, j) ==
              doctest::Approx(std::pow(1.0 / 1.2, static_cast<double>(j))).epsilon(1e-12));
}

TEST_CASE("absorption_probability: nonincreasing in the starting level") {
    const QueueSpec q = transientward_spec(0.4, 0.4, 1);
    double prev = 1.0;
    for (long j = 1; j <= 10; ++j) {
        const double v = fpt_discrete::absorption_probability(q, j);
        CHECK(v <= prev + 1e-14);
        CHECK(v > 0.0);
        prev = v;
    }
}

TEST_CASE("absorption_probability: simulator fraction of emptied paths") {
    for (double eta1 : {0.2, 1.0}) {
        const QueueSpec q = transientward_spec(eta1, 0.4, 1);
        simulator::SimConfig cfg;
        cfg.replications = 40000;
        cfg.horizon = 10000.0;
        cfg.seed = 512 + static_cast<std::uint64_t>(eta1 * 10.0);
        const auto stats = simulator::sample_first_emptying(q, cfg);
        const double analytic = fpt_discrete::absorption_probability(q, 1);
        CHECK(std::abs(stats.completion.value - analytic) < 3.0 * stats.completion.std_error);
    }
}

TEST_CASE("fpt_mean: closed form against its own transform") {
    const QueueSpec q = stable_spec(0.0, 0.0, 2); // p = 0 short-circuit
    CHECK(fpt_discrete::fpt_mean(q, 2) == doctest::Approx(2.0 / (2.0 - 1.0)).epsilon(1e-14));

    for (double eta1 : {0.2, 0.5, 1.0}) {
        for (long j : {1L, 3L}) {
            const QueueSpec spec = stable_spec(eta1, 0.4, j);
            const double h = 1e-5;
            const double b0 = fpt_discrete::fpt_laplace(spec, j, 0.0);
            const double b1 = fpt_discrete::fpt_laplace(spec, j, h);
            const double b2 = fpt_discrete::fpt_laplace(spec, j, 2.0 * h);
            const double derivative = (-3.0 * b0 + 4.0 * b1 - b2) / (2.0 * h);
            CHECK(fpt_discrete::fpt_mean(spec, j) ==
                  doctest::Approx(-derivative).epsilon(1e-5));
        }
    }
}

TEST_CASE("fpt_mean: matches the simulator's first-emptying mean") {
    const QueueSpec q = stable_spec(0.5, 0.4, 1);
    simulator::SimConfig cfg;
    cfg.replications = 200000;
    cfg.horizon = 400.0;
    cfg.seed = 90210;
    const auto stats = simulator::sample_first_emptying(q, cfg);
    CHECK(stats.censored_fraction < 1e-4);
    CHECK(std::abs(stats.mean_uncensored.value - fpt_discrete::fpt_mean(q, 1)) <
          3.0 * stats.mean_uncensored.std_error);
}

TEST_CASE("fpt_mean: regime errors") {
    CHECK_THROWS_AS(fpt_discrete::fpt_mean(transientward_spec(), 1), RegimeError);
    QueueSpec boundary = stable_spec();
    boundary.lambda2 = boundary.mu2 = 1.0;
    CHECK_THROWS_AS(fpt_discrete::fpt_mean(boundary, 1), RegimeError);
    CHECK(fpt_discrete::absorption_probability(boundary, 1) == 1.0);
}

TEST_CASE("mass balance between absorbed states and the FPT cdf") {
    const QueueSpec q = stable_spec(0.3, 0.4, 2);
    for (double t : {1.0, 5.0}) {
        const double cdf = numerics::integrate(
            [&](double u) { return fpt_discrete::fpt_density(q, 2, u); }, 1e-14, t,
            {1e-8, 1e-8, 60});
        double interior = 0.0;
        for (long n = 1; n < 60; ++n)
            interior += fpt_discrete::absorbed_state_prob(q, n, 1, t) +
                        fpt_discrete::absorbed_state_prob(q, n, 2, t);
        CHECK(cdf + interior == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("input validation") {
    QueueSpec bad = stable_spec();
    bad.eta2 = 0.1;
    CHECK_THROWS_AS(fpt_discrete::fpt_density(bad, 1, 1.0), RegimeError);
    CHECK_THROWS_AS(fpt_discrete::fpt_density(stable_spec(), 0, 1.0), ValidationError);
    QueueSpec from_zero = stable_spec();
    from_zero.init_state = 0;
    CHECK_THROWS_AS(fpt_discrete::absorbed_state_prob(from_zero, 1, 1, 1.0), ValidationError);
}
