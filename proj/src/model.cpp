#include "switchq/model.hpp"
#include "switchq/errors.hpp"

#include <cmath>

namespace switchq::model {

std::string to_string(StabilityCase c) {
    switch (c) {
        case StabilityCase::CaseI: return "CaseI";
        case StabilityCase::CaseII: return "CaseII";
        case StabilityCase::CaseIII: return "CaseIII";
        case StabilityCase::NoSteadyState: return "NoSteadyState";
    }
    return "?";
}

namespace {

void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("init_env_prob: p must lie in [0, 1]");
}

void check_switch_rates(double eta1, double eta2) {
    if (!(eta1 >= 0.0)) throw ValidationError("eta1: must be >= 0");
    if (!(eta2 >= 0.0)) throw ValidationError("eta2: must be >= 0");
    if (!(eta1 + eta2 > 0.0)) throw ValidationError("eta1+eta2: must be > 0");
}

} // namespace

const QueueSpec& validate(const QueueSpec& spec) {
    if (!(spec.lambda1 > 0.0)) throw ValidationError("lambda1: must be > 0");
    if (!(spec.mu1 > 0.0)) throw ValidationError("mu1: must be > 0");
    if (!(spec.lambda2 > 0.0)) throw ValidationError("lambda2: must be > 0");
    if (!(spec.mu2 > 0.0)) throw ValidationError("mu2: must be > 0");
    check_switch_rates(spec.eta1, spec.eta2);
    if (spec.init_state < 0) throw ValidationError("init_state: j must be >= 0");
    check_probability(spec.init_env_prob);
    return spec;
}

const DiffusionSpec& validate(const DiffusionSpec& spec) {
    if (!(spec.lambda1s > 0.0)) throw ValidationError("lambda1s: must be > 0");
    if (!(spec.mu1s > 0.0)) throw ValidationError("mu1s: must be > 0");
    if (!(spec.lambda2s > 0.0)) throw ValidationError("lambda2s: must be > 0");
    if (!(spec.mu2s > 0.0)) throw ValidationError("mu2s: must be > 0");
    if (!(spec.omega1_sq > 0.0)) throw ValidationError("omega1_sq: must be > 0");
    if (!(spec.omega2_sq > 0.0)) throw ValidationError("omega2_sq: must be > 0");
    check_switch_rates(spec.eta1, spec.eta2);
    if (!(spec.init_position >= 0.0)) throw ValidationError("init_position: y must be >= 0");
    check_probability(spec.init_env_prob);
    return spec;
}

namespace {

StabilityCase classify_drifts(double eta1, double eta2, double d1, double d2) {
    // d_i = mu_i - lambda_i (or the starred analogue)
    if (eta2 == 0.0) return d2 > 0.0 ? StabilityCase::CaseI : StabilityCase::NoSteadyState;
    if (eta1 == 0.0) return d1 > 0.0 ? StabilityCase::CaseII : StabilityCase::NoSteadyState;
    return eta1 * d2 + eta2 * d1 > 0.0 ? StabilityCase::CaseIII : StabilityCase::NoSteadyState;
}

} // namespace

StabilityCase classify(const QueueSpec& spec) {
    return classify_drifts(spec.eta1, spec.eta2, spec.mu1 - spec.lambda1, spec.mu2 - spec.lambda2);
}

StabilityCase classify(const DiffusionSpec& spec) {
    return classify_drifts(spec.eta1, spec.eta2, spec.mu1s - spec.lambda1s, spec.mu2s - spec.lambda2s);
}

QueueSpec scale_to_discrete(const DiffusionSpec& spec, double epsilon) {
    if (!(epsilon > 0.0)) throw ValidationError("scale_to_discrete: epsilon must be > 0");
    QueueSpec q;
    const double half1 = spec.omega1_sq / (2.0 * epsilon * epsilon);
    const double half2 = spec.omega2_sq / (2.0 * epsilon * epsilon);
    q.lambda1 = spec.lambda1s / epsilon + half1;
    q.mu1 = spec.mu1s / epsilon + half1;
    q.lambda2 = spec.lambda2s / epsilon + half2;
    q.mu2 = spec.mu2s / epsilon + half2;
    q.eta1 = spec.eta1;
    q.eta2 = spec.eta2;
    q.init_state = static_cast<long>(std::llround(spec.init_position / epsilon));
    q.init_env_prob = spec.init_env_prob;
    validate(q);
    return q;
}

QueueSpec swap_environments(const QueueSpec& spec) {
    QueueSpec s = spec;
    std::swap(s.lambda1, s.lambda2);
    std::swap(s.mu1, s.mu2);
    std::swap(s.eta1, s.eta2);
    s.init_env_prob = 1.0 - spec.init_env_prob;
    return s;
}

DiffusionSpec swap_environments(const DiffusionSpec& spec) {
    DiffusionSpec s = spec;
    std::swap(s.lambda1s, s.lambda2s);
    std::swap(s.mu1s, s.mu2s);
    std::swap(s.omega1_sq, s.omega2_sq);
    std::swap(s.eta1, s.eta2);
    s.init_env_prob = 1.0 - spec.init_env_prob;
    return s;
}

} // namespace switchq::model
