#include "switchq/steady_state.hpp"
#include "switchq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace switchq::steady_state {

namespace {

double geometric_pmf(double ratio, long n) {
    return (1.0 - ratio) * std::pow(ratio, static_cast<double>(n));
}

// eta1 (mu2 - lambda2) + eta2 (mu1 - lambda1); positive exactly in CaseIII
double drift_balance(const model::QueueSpec& s) {
    return s.eta1 * (s.mu2 - s.lambda2) + s.eta2 * (s.mu1 - s.lambda1);
}

void require_env(int env) {
    if (env != 1 && env != 2) throw ValidationError("environment index must be 1 or 2");
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

CubicRootsDiscrete classify_roots(const numerics::CubicRoots& raw) {
    std::array<double, 3> r{raw.r1, raw.r2, raw.r3};
    std::sort(r.begin(), r.end());
    if (!(r[0] > 0.0 && r[0] < 1.0 && r[1] > 1.0))
        throw ConvergenceError("steady_state: cubic roots do not split as xi1, xi2 > 1 > xi3 > 0");
    if (std::abs(r[2] - r[1]) < 1e-8)
        throw ConfluentRootsError("steady_state: confluent upper roots xi1 = xi2");
    return {r[2], r[1], r[0]};
}

} // namespace

SteadyStateSolution solve_steady(const model::QueueSpec& spec) {
    model::validate(spec);
    const auto stability = model::classify(spec);
    SteadyStateSolution sol;
    sol.stability = stability;
    sol.spec = spec;
    const double eta_sum = spec.eta1 + spec.eta2;
    sol.env_prob = {spec.eta2 / eta_sum, spec.eta1 / eta_sum};

    switch (stability) {
        case model::StabilityCase::NoSteadyState:
            throw RegimeError("solve_steady: no steady state for this spec");
        case model::StabilityCase::CaseI: {
            const double rho = spec.lambda2 / spec.mu2;
            sol.env_mixture = {GeneralizedMixture{1.0, 0.0, 0.0},
                               GeneralizedMixture{1.0, rho, rho}};
            sol.q0 = {0.0, 1.0 - rho};
            return sol;
        }
        case model::StabilityCase::CaseII: {
            const double rho = spec.lambda1 / spec.mu1;
            sol.env_mixture = {GeneralizedMixture{1.0, rho, rho},
                               GeneralizedMixture{1.0, 0.0, 0.0}};
            sol.q0 = {1.0 - rho, 0.0};
            return sol;
        }
        case model::StabilityCase::CaseIII:
            break;
    }

    const double l1 = spec.lambda1, m1 = spec.mu1, l2 = spec.lambda2, m2 = spec.mu2;
    const double c3 = l1 * l2;
    const double c2 = -(l1 * l2 + l1 * m2 + l1 * spec.eta2 + m1 * l2 + spec.eta1 * l2);
    const double c1 = l1 * m2 + m1 * l2 + m1 * m2 + m1 * spec.eta2 + spec.eta1 * m2;
    const double c0 = -m1 * m2;
    const auto roots = classify_roots(numerics::solve_cubic(c3, c2, c1, c0));
    sol.roots = roots;

    const double balance = drift_balance(spec);
    const double q01 = spec.eta2 * roots.xi3 /
                       (m1 * (1.0 - roots.xi3) * (m2 - l2 * roots.xi3)) * balance / eta_sum;
    const double q02 = spec.eta1 * roots.xi3 /
                       (m2 * (1.0 - roots.xi3) * (m1 - l1 * roots.xi3)) * balance / eta_sum;
    sol.q0 = {q01, q02};

    const double common = roots.xi1 * roots.xi3 * balance /
                          ((1.0 - roots.xi3) * (roots.xi1 - 1.0) * (roots.xi1 - roots.xi2));
    const double a1 = common / (l1 * m1) * (m1 - l1 * roots.xi2) / (m2 - l2 * roots.xi3);
    const double a2 = common / (l2 * m2) * (m2 - l2 * roots.xi2) / (m1 - l1 * roots.xi3);
    sol.env_mixture = {GeneralizedMixture{a1, 1.0 / roots.xi1, 1.0 / roots.xi2},
                       GeneralizedMixture{a2, 1.0 / roots.xi1, 1.0 / roots.xi2}};
    return sol;
}

double joint_pmf(const SteadyStateSolution& sol, long n, int env) {
    require_env(env);
    if (n < 0) return 0.0;
    const auto& mix = sol.env_mixture[static_cast<size_t>(env - 1)];
    const double p_env = sol.env_prob[static_cast<size_t>(env - 1)];
    if (p_env == 0.0) return 0.0;
    return p_env * (mix.weight * geometric_pmf(mix.param1, n) +
                    (1.0 - mix.weight) * geometric_pmf(mix.param2, n));
}

double marginal_pmf(const SteadyStateSolution& sol, long n) {
    return joint_pmf(sol, n, 1) + joint_pmf(sol, n, 2);
}

double conditional_mean(const SteadyStateSolution& sol, int env) {
    require_env(env);
    const auto& mix = sol.env_mixture[static_cast<size_t>(env - 1)];
    if (sol.env_prob[static_cast<size_t>(env - 1)] == 0.0) return 0.0;
    // geometric with ratio 1/xi has mean (1/xi)/(1-1/xi) = 1/(xi-1)
    const double mean1 = mix.param1 / (1.0 - mix.param1);
    const double mean2 = mix.param2 / (1.0 - mix.param2);
    return mix.weight * mean1 + (1.0 - mix.weight) * mean2;
}

double mean(const SteadyStateSolution& sol) {
    return sol.env_prob[0] * conditional_mean(sol, 1) +
           sol.env_prob[1] * conditional_mean(sol, 2);
}

double entropy_n_given_env(const SteadyStateSolution& sol, int env,
                           const numerics::SeriesSettings& series) {
    require_env(env);
    series.check();
    const double p_env = sol.env_prob[static_cast<size_t>(env - 1)];
    if (p_env == 0.0) return 0.0;
    double h = 0.0;
    for (long n = 0; n < series.max_terms; ++n) {
        const double q1 = joint_pmf(sol, n, 1);
        const double q2 = joint_pmf(sol, n, 2);
        h -= xlogx(joint_pmf(sol, n, env) / p_env);
        if (n > 10 && q1 < series.tail_tol && q2 < series.tail_tol) return h;
    }
    throw ConvergenceError("entropy_n_given_env: series truncation failed");
}

double entropy_n(const SteadyStateSolution& sol, const numerics::SeriesSettings& series) {
    series.check();
    double h = 0.0;
    for (long n = 0; n < series.max_terms; ++n) {
        const double q1 = joint_pmf(sol, n, 1);
        const double q2 = joint_pmf(sol, n, 2);
        h -= xlogx(q1 + q2);
        if (n > 10 && q1 < series.tail_tol && q2 < series.tail_tol) return h;
    }
    throw ConvergenceError("entropy_n: series truncation failed");
}

double entropy_env_given_n(const SteadyStateSolution& sol, long n) {
    const double qn = marginal_pmf(sol, n);
    if (qn <= 0.0) return 0.0;
    double h = 0.0;
    for (int env : {1, 2}) h -= xlogx(joint_pmf(sol, n, env) / qn);
    return h;
}

double entropy_env(const SteadyStateSolution& sol) {
    return -xlogx(sol.env_prob[0]) - xlogx(sol.env_prob[1]);
}

double entropy_env_limit(const SteadyStateSolution& sol) {
    if (sol.stability != model::StabilityCase::CaseIII) return 0.0;
    const double e1 = sol.spec.eta1, e2 = sol.spec.eta2;
    const double a1 = sol.env_mixture[0].weight, a2 = sol.env_mixture[1].weight;
    const double den = e1 * (1.0 - a2) + e2 * (1.0 - a1);
    const double w1 = e2 * (1.0 - a1) / den;
    const double w2 = e1 * (1.0 - a2) / den;
    return -xlogx(w1) - xlogx(w2);
}

double pgf(const SteadyStateSolution& sol, double z, int env) {
    require_env(env);
    if (!(z > 0.0 && z <= 1.0)) throw ValidationError("pgf: z must lie in (0, 1]");
    if (sol.stability != model::StabilityCase::CaseIII) {
        const double p_env = sol.env_prob[static_cast<size_t>(env - 1)];
        if (p_env == 0.0) return 0.0;
        const double rho = sol.env_mixture[static_cast<size_t>(env - 1)].param1;
        return p_env * (1.0 - rho) / (1.0 - rho * z);
    }
    const auto& r = *sol.roots;
    const auto& s = sol.spec;
    const double balance = drift_balance(s);
    const double eta_sum = s.eta1 + s.eta2;
    const double eta_num = env == 1 ? s.eta2 : s.eta1;
    const double mu_o = env == 1 ? s.mu2 : s.mu1;
    const double la_o = env == 1 ? s.lambda2 : s.lambda1;
    return eta_num * balance / ((1.0 - r.xi3) * (mu_o - la_o * r.xi3) * eta_sum) *
           (mu_o - la_o * r.xi3 * z) /
           (s.lambda1 * s.lambda2 * (z - r.xi1) * (z - r.xi2));
}

} // namespace switchq::steady_state
