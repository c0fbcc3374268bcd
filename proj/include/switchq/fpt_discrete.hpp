#pragma once

#include "switchq/model.hpp"
#include "switchq/numerics.hpp"
#include "switchq/transient.hpp"

namespace switchq::fpt_discrete {

/// Roots of the per-environment quadratics behind the Laplace transform of
/// the first-emptying density: phi for environment 1 (switch rate folded
/// in), psi for environment 2.  For s > 0, 0 < phi2 < 1 < phi1 and
/// 0 < psi2 < 1 < psi1.
struct LaplaceRootsDiscrete {
    double phi1;
    double phi2;
    double psi1;
    double psi2;
    double s;
};

LaplaceRootsDiscrete laplace_roots(const model::QueueSpec& spec, double s);

/// Taboo transition probability of an M/M/1 queue: from j to n in time t
/// without visiting 0 in between.  Requires j, n >= 1.
double avoiding_prob(const transient::MM1Kernel& kernel, long j, long n, double t);

/// First-passage density of the M/M/1 queue from j >= 1 to 0.
double mm1_fpt_density(const transient::MM1Kernel& kernel, long j, double t);

/// State probabilities gamma_{n,i}(t) of the absorbed switching process
/// (transitions out of level 0 removed), for eta2 = 0 and spec.init_state
/// >= 1.  n >= 1.
double absorbed_state_prob(const model::QueueSpec& spec, long n, int env, double t,
                           const numerics::QuadratureSettings& quad = {},
                           const numerics::SeriesSettings& series = {});

/// First-emptying density b_j(t) of the switching queue, eta2 = 0.
double fpt_density(const model::QueueSpec& spec, long j, double t,
                   const numerics::QuadratureSettings& quad = {},
                   const numerics::SeriesSettings& series = {});

/// Laplace transform B_j(s) of b_j, closed form; s >= 0.
double fpt_laplace(const model::QueueSpec& spec, long j, double s);

/// P(T_j < infinity): 1 when lambda2 <= mu2, otherwise B_j(0) < 1.
double absorption_probability(const model::QueueSpec& spec, long j);

/// E(T_j), defined for lambda2 < mu2.  Throws RegimeError otherwise.
double fpt_mean(const model::QueueSpec& spec, long j);

} // namespace switchq::fpt_discrete
