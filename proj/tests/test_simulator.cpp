#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "switchq/diffusion.hpp"
#include "switchq/errors.hpp"
#include "switchq/simulator.hpp"
#include "switchq/steady_state.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace switchq;
using model::QueueSpec;
using simulator::SimConfig;

namespace {

QueueSpec reference_spec() {
    QueueSpec q;
    q.lambda1 = 1.0;
    q.mu1 = 0.5;
    q.lambda2 = 1.0;
    q.mu2 = 2.0;
    q.eta1 = 0.1;
    q.eta2 = 0.08;
    q.init_state = 0;
    q.init_env_prob = 0.5;
    return q;
}

} // namespace

TEST_CASE("Rng: streams are reproducible and distinct") {
    simulator::Rng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    for (int i = 0; i < 32; ++i) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
        CHECK(va != d.next_u64());
    }
    simulator::Rng u(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("simulate_ctmc_path: level stays legal along the path") {
    QueueSpec q = reference_spec();
    q.init_state = 2;
    SimConfig cfg;
    cfg.horizon = 500.0;
    cfg.seed = 7;
    const auto path = simulator::simulate_ctmc_path(q, cfg, 3);
    REQUIRE(path.size() > 10);
    double prev_time = -1.0;
    for (size_t i = 1; i < path.size(); ++i) {
        const auto& ev = path[i];
        CHECK(ev.time > prev_time);
        prev_time = ev.time;
        CHECK(ev.level >= 0);
        if (ev.kind == simulator::EventKind::Service) CHECK(path[i - 1].level >= 1);
        const long diff = ev.level - path[i - 1].level;
        switch (ev.kind) {
            case simulator::EventKind::Arrival: CHECK(diff == 1); break;
            case simulator::EventKind::Service: CHECK(diff == -1); break;
            case simulator::EventKind::Switch:
                CHECK(diff == 0);
                CHECK(ev.env == 3 - path[i - 1].env);
                break;
        }
    }
}

TEST_CASE("holding_time: exponential with the state's total rate (KS)") {
    const QueueSpec q = reference_spec();
    const double rate = q.lambda1 + q.mu1 + q.eta1; // state (3, 1)
    simulator::Rng rng(1234, 0);
    std::vector<double> sample;
    sample.reserve(10000);
    for (int i = 0; i < 10000; ++i)
        sample.push_back(simulator::holding_time(q, 3, 1, rng));
    const double p = oracles::ks_p_value(
        std::move(sample), [rate](double x) { return 1.0 - std::exp(-rate * x); });
    CHECK(p > 0.01);
}

TEST_CASE("estimate_transient_pmf: t = 0 recovers the initial Bernoulli split") {
    QueueSpec q = reference_spec();
    q.init_state = 4;
    q.init_env_prob = 0.3;
    SimConfig cfg;
    cfg.replications = 20000;
    cfg.horizon = 1.0;
    cfg.seed = 99;
    const auto est = simulator::estimate_transient_pmf(q, 0.0, cfg);
    CHECK(est.size() == 2);
    const auto& e1 = est.at({4, 1});
    const auto& e2 = est.at({4, 2});
    CHECK(e1.value == doctest::Approx(0.3).epsilon(0.05));
    CHECK(e2.value == doctest::Approx(0.7).epsilon(0.05));
    double total = 0.0;
    for (const auto& [key, e] : est) total += e.value;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("estimate_transient_pmf: bit-identical across worker hints") {
    const QueueSpec q = reference_spec();
    SimConfig cfg;
    cfg.replications = 5000;
    cfg.horizon = 3.0;
    cfg.seed = 2024;
    cfg.worker_hint = 1;
    const auto serial = simulator::estimate_transient_pmf(q, 3.0, cfg);
    cfg.worker_hint = 4;
    const auto parallel = simulator::estimate_transient_pmf(q, 3.0, cfg);
    REQUIRE(serial.size() == parallel.size());
    for (const auto& [key, e] : serial) {
        const auto& other = parallel.at(key);
        CHECK(e.value == other.value);
        CHECK(e.std_error == other.std_error);
        CHECK(e.count == other.count);
    }
}

TEST_CASE("estimate_steady_pmf: matches the analytic steady state") {
    const QueueSpec q = reference_spec();
    const auto sol = steady_state::solve_steady(q);
    SimConfig cfg;
    cfg.horizon = 60000.0;
    cfg.burn_in = 500.0;
    cfg.seed = 31337;
    const auto est = simulator::estimate_steady_pmf(q, cfg);
    for (long n = 0; n <= 20; ++n) {
        for (int env : {1, 2}) {
            const double analytic = steady_state::joint_pmf(sol, n, env);
            const auto it = est.find({n, env});
            const double emp = it == est.end() ? 0.0 : it->second.value;
            const double se = it == est.end() ? 1e-4 : std::max(it->second.std_error, 1e-6);
            CHECK(std::abs(emp - analytic) < 3.0 * se);
        }
    }
}

TEST_CASE("estimate_steady_pmf: two seeds agree with each other") {
    const QueueSpec q = reference_spec();
    SimConfig cfg;
    cfg.horizon = 20000.0;
    cfg.burn_in = 200.0;
    cfg.seed = 1;
    const auto a = simulator::estimate_steady_pmf(q, cfg);
    cfg.seed = 2;
    const auto b = simulator::estimate_steady_pmf(q, cfg);
    for (long n = 0; n <= 10; ++n) {
        const auto ia = a.find({n, 2});
        const auto ib = b.find({n, 2});
        REQUIRE(ia != a.end());
        REQUIRE(ib != b.end());
        const double se = std::hypot(ia->second.std_error, ib->second.std_error);
        CHECK(std::abs(ia->second.value - ib->second.value) < 4.0 * se);
    }
}

TEST_CASE("estimate_steady_pmf: CaseI leaves no environment-1 occupancy") {
    QueueSpec q = reference_spec();
    q.eta2 = 0.0;
    SimConfig cfg;
    cfg.horizon = 5000.0;
    cfg.burn_in = 200.0;
    cfg.seed = 5;
    const auto est = simulator::estimate_steady_pmf(q, cfg);
    double env1 = 0.0;
    for (const auto& [key, e] : est)
        if (key.second == 1) env1 += e.value;
    CHECK(env1 < 1e-3);
}

TEST_CASE("estimate_steady_pmf: symmetric environments occupy evenly") {
    QueueSpec q;
    q.lambda1 = q.lambda2 = 0.7;
    q.mu1 = q.mu2 = 1.2;
    q.eta1 = q.eta2 = 0.5;
    SimConfig cfg;
    cfg.horizon = 30000.0;
    cfg.burn_in = 300.0;
    cfg.seed = 11;
    const auto est = simulator::estimate_steady_pmf(q, cfg);
    for (long n = 0; n <= 6; ++n) {
        const auto& e1 = est.at({n, 1});
        const auto& e2 = est.at({n, 2});
        const double se = std::hypot(e1.std_error, e2.std_error);
        CHECK(std::abs(e1.value - e2.value) < 3.0 * se);
    }
}

TEST_CASE("sample_first_emptying: plain busy period at p = 0") {
    QueueSpec q = reference_spec();
    q.eta2 = 0.0;
    q.init_state = 1;
    q.init_env_prob = 0.0; // start in environment 2: plain M/M/1 with rho = 1/2
    SimConfig cfg;
    cfg.replications = 100000;
    cfg.horizon = 500.0;
    cfg.seed = 8080;
    const auto stats = simulator::sample_first_emptying(q, cfg);
    CHECK(stats.censored_fraction < 1e-4);
    CHECK(std::abs(stats.mean_uncensored.value - 1.0 / (q.mu2 - q.lambda2)) <
          3.0 * stats.mean_uncensored.std_error);
}

TEST_CASE("simulate_diffusion_terminal: deterministic drift in the small-noise limit") {
    model::DiffusionSpec d;
    d.lambda1s = 0.5;
    d.mu1s = 1.0; // drift -0.5
    d.lambda2s = 1.0;
    d.mu2s = 2.0;
    d.omega1_sq = 1e-12;
    d.omega2_sq = 1e-12;
    d.eta1 = 0.0;
    d.eta2 = 0.3; // from env 1 no switch ever happens
    d.init_position = 3.0;
    d.init_env_prob = 1.0;
    SimConfig cfg;
    cfg.horizon = 4.0;
    cfg.seed = 3;
    const double x = simulator::simulate_diffusion_terminal(d, cfg, 1e-3, 0);
    CHECK(x == doctest::Approx(3.0 - 0.5 * 4.0).epsilon(1e-4));
    cfg.horizon = 20.0; // long past the boundary: parks near zero
    CHECK(simulator::simulate_diffusion_terminal(d, cfg, 1e-3, 0) < 1e-3);
}

TEST_CASE("estimate_diffusion_steady_density: histogram matches W(x)") {
    model::DiffusionSpec d;
    d.lambda1s = 1.0;
    d.mu1s = 0.5;
    d.lambda2s = 1.0;
    d.mu2s = 2.0;
    d.omega1_sq = 1.0;
    d.omega2_sq = 4.0;
    d.eta1 = 0.1;
    d.eta2 = 0.08;
    const auto sol = diffusion::solve_steady_density(d);
    // batch length must dwarf the ~22-unit environment cycle
    SimConfig cfg;
    cfg.horizon = 20000.0;
    cfg.burn_in = 500.0;
    cfg.seed = 1812;
    std::vector<double> edges;
    for (double e = 0.0; e <= 12.0; e += 1.5) edges.push_back(e);
    const auto hist = simulator::estimate_diffusion_steady_density(d, cfg, 5e-4, edges);
    for (size_t b = 0; b + 1 < edges.size(); ++b) {
        const double want = numerics::integrate(
                                [&](double x) { return diffusion::marginal_density(sol, x); },
                                edges[b], edges[b + 1]) /
                            (edges[b + 1] - edges[b]);
        const double se = std::max(hist.density[b].std_error, 1e-5);
        CHECK(std::abs(hist.density[b].value - want) < 3.0 * se);
    }
}

TEST_CASE("estimate_diffusion_fpt: determinism across worker hints") {
    model::DiffusionSpec d;
    d.lambda1s = 1.0;
    d.mu1s = 0.5;
    d.lambda2s = 1.0;
    d.mu2s = 2.0;
    d.omega1_sq = 1.0;
    d.omega2_sq = 4.0;
    d.eta1 = 0.5;
    d.eta2 = 0.0;
    d.init_position = 1.0;
    d.init_env_prob = 0.4;
    SimConfig cfg;
    cfg.replications = 2000;
    cfg.horizon = 50.0;
    cfg.seed = 999;
    cfg.worker_hint = 1;
    const auto serial = simulator::estimate_diffusion_fpt(d, cfg, 1e-3);
    cfg.worker_hint = 3;
    const auto parallel = simulator::estimate_diffusion_fpt(d, cfg, 1e-3);
    CHECK(serial.completion.value == parallel.completion.value);
    CHECK(serial.mean_uncensored.value == parallel.mean_uncensored.value);
    CHECK(serial.mean_uncensored.std_error == parallel.mean_uncensored.std_error);
}

TEST_CASE("SimConfig validation") {
    SimConfig cfg;
    cfg.replications = 0;
    cfg.horizon = 1.0;
    CHECK_THROWS_AS(cfg.check(), ValidationError);
    cfg.replications = 1;
    cfg.horizon = 0.0;
    CHECK_THROWS_AS(cfg.check(), ValidationError);
    cfg.horizon = 1.0;
    cfg.burn_in = 1.0;
    CHECK_THROWS_AS(cfg.check(), ValidationError);
}
