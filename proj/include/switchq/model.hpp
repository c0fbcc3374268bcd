#pragma once

#include <string>

namespace switchq::model {

/// M/M/1 queue alternating between two environments: arrival/service rates
/// (lambda_i, mu_i) active while the environment is i, switch rates eta1
/// (1 -> 2) and eta2 (2 -> 1), initial level j occupied under environment 1
/// with probability p and under environment 2 with probability 1 - p.
struct QueueSpec {
    double lambda1 = 0.0;
    double mu1 = 0.0;
    double lambda2 = 0.0;
    double mu2 = 0.0;
    double eta1 = 0.0;
    double eta2 = 0.0;
    long init_state = 0;        // j
    double init_env_prob = 1.0; // p
};

/// Heavy-traffic limit process: reflected Wiener process on [0, inf) whose
/// drift lambda_i* - mu_i* and variance omega_i^2 alternate with the
/// environment.
struct DiffusionSpec {
    double lambda1s = 0.0;
    double mu1s = 0.0;
    double lambda2s = 0.0;
    double mu2s = 0.0;
    double omega1_sq = 0.0;
    double omega2_sq = 0.0;
    double eta1 = 0.0;
    double eta2 = 0.0;
    double init_position = 0.0; // y
    double init_env_prob = 1.0; // p
};

enum class StabilityCase {
    CaseI,   // eta2 = 0 and environment 2 alone is stable
    CaseII,  // eta1 = 0 and environment 1 alone is stable
    CaseIII, // both switch rates positive, drift-balance condition holds
    NoSteadyState,
};

std::string to_string(StabilityCase c);

/// Throws ValidationError naming the first violated invariant; returns the
/// spec unchanged otherwise.
const QueueSpec& validate(const QueueSpec& spec);
const DiffusionSpec& validate(const DiffusionSpec& spec);

StabilityCase classify(const QueueSpec& spec);
StabilityCase classify(const DiffusionSpec& spec);

/// Inverse of the heavy-traffic scaling: lambda_i = lambda_i*/eps +
/// omega_i^2/(2 eps^2), mu_i likewise, j = round(y/eps); switch rates and p
/// carry over.
QueueSpec scale_to_discrete(const DiffusionSpec& spec, double epsilon);

/// Relabels the environments (1 <-> 2) and flips p accordingly.  Turns an
/// eta1 = 0 problem into the eta2 = 0 form handled by the transient and
/// first-passage modules.
QueueSpec swap_environments(const QueueSpec& spec);
DiffusionSpec swap_environments(const DiffusionSpec& spec);

} // namespace switchq::model
