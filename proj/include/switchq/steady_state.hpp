#pragma once

#include "switchq/model.hpp"
#include "switchq/numerics.hpp"

#include <array>
#include <optional>

namespace switchq::steady_state {

/// Roots of the characteristic cubic of the discrete model, classified:
/// xi1 >= xi2 > 1 > xi3 > 0.
struct CubicRootsDiscrete {
    double xi1;
    double xi2;
    double xi3;
};

/// Two-component signed mixture A * comp1 + (1 - A) * comp2.  The weight may
/// fall outside [0, 1]; the combination itself is a genuine distribution.
/// Components are geometric (param = ratio 1/xi) in the discrete model and
/// exponential (param = rate xi*) in the diffusion model.
struct GeneralizedMixture {
    double weight;
    double param1;
    double param2;
};

struct SteadyStateSolution {
    model::StabilityCase stability;
    std::optional<CubicRootsDiscrete> roots;        // CaseIII only
    std::array<GeneralizedMixture, 2> env_mixture;  // index 0 -> env 1
    std::array<double, 2> env_prob;                 // P(E = i)
    std::array<double, 2> q0;                       // boundary masses q_{0,i}
    model::QueueSpec spec;
};

/// Steady-state distribution of (N, E).  Throws RegimeError when the spec
/// admits no steady state, ConfluentRootsError when the two upper roots of
/// the cubic coincide to within 1e-8.
SteadyStateSolution solve_steady(const model::QueueSpec& spec);

/// q_{n,i}
double joint_pmf(const SteadyStateSolution& sol, long n, int env);
/// q_n = q_{n,1} + q_{n,2}
double marginal_pmf(const SteadyStateSolution& sol, long n);

/// E[N | E = i] and E[N]
double conditional_mean(const SteadyStateSolution& sol, int env);
double mean(const SteadyStateSolution& sol);

// Shannon entropies, natural log throughout.
double entropy_n_given_env(const SteadyStateSolution& sol, int env,
                           const numerics::SeriesSettings& series = {});
double entropy_n(const SteadyStateSolution& sol,
                 const numerics::SeriesSettings& series = {});
double entropy_env_given_n(const SteadyStateSolution& sol, long n);
double entropy_env(const SteadyStateSolution& sol);
/// Limit of entropy_env_given_n as n -> infinity.
double entropy_env_limit(const SteadyStateSolution& sol);

/// G_i(z) from the closed rational form (not the mixture), 0 < z <= 1.
double pgf(const SteadyStateSolution& sol, double z, int env);

} // namespace switchq::steady_state
