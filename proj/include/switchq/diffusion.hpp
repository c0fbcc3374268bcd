#pragma once

#include "switchq/model.hpp"
#include "switchq/numerics.hpp"
#include "switchq/steady_state.hpp"

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace switchq::diffusion {

/// Roots of the characteristic cubic of the approximating process,
/// classified: xi1s >= xi2s > 0 > xi3s.
struct CubicRootsDiffusion {
    double xi1s;
    double xi2s;
    double xi3s;
};

/// One environment's Wiener dynamics: drift beta_i = lambda_i* - mu_i* and
/// infinitesimal variance omega_i^2.
struct WienerKernel {
    double drift;
    double variance;
};

/// Roots of the per-environment quadratics behind K(s|y): zeta for
/// environment 1 (switch rate folded in), theta for environment 2.
struct LaplaceRootsDiffusion {
    double zeta1;
    double zeta2;
    double theta1;
    double theta2;
    double s;
};

struct SteadyDensitySolution {
    model::StabilityCase stability;
    std::optional<CubicRootsDiffusion> roots;                  // CaseIII only
    std::array<steady_state::GeneralizedMixture, 2> env_mixture; // exponential rates
    std::array<double, 2> env_prob;
    std::array<double, 2> w0; // boundary limits W_i(0+)
    model::DiffusionSpec spec;
};

SteadyDensitySolution solve_steady_density(const model::DiffusionSpec& spec);

/// W_i(x) and W(x) = W_1 + W_2.
double steady_density(const SteadyDensitySolution& sol, double x, int env);
double marginal_density(const SteadyDensitySolution& sol, double x);

double conditional_mean(const SteadyDensitySolution& sol, int env);
double mean(const SteadyDensitySolution& sol);

/// M_i(z) from the closed rational form, z < smaller positive rate.
double mgf(const SteadyDensitySolution& sol, double z, int env);

/// Transition density of a Wiener process on [0, inf) with reflecting
/// boundary at 0, started at y.
double reflected_wiener_density(const WienerKernel& kernel, double x, double t, double y);
/// Same with absorbing boundary at 0.
double absorbed_wiener_density(const WienerKernel& kernel, double x, double t, double y);
/// First-passage density of the free Wiener process from y > 0 to 0.
double wiener_fpt_density(const WienerKernel& kernel, double t, double y);

/// f_i(x, t) of the switching process, eta2 = 0.
double transient_density(const model::DiffusionSpec& spec, double x, int env, double t,
                         const numerics::QuadratureSettings& quad = {});
/// h_i(x, t | y) of the absorbed switching process, eta2 = 0, y > 0.
double absorbed_transient_density(const model::DiffusionSpec& spec, double x, int env, double t,
                                  const numerics::QuadratureSettings& quad = {});
/// First-passage density k(0, t | y) of the switching process, eta2 = 0.
double fpt_density(const model::DiffusionSpec& spec, double t,
                   const numerics::QuadratureSettings& quad = {});

LaplaceRootsDiffusion laplace_roots(const model::DiffusionSpec& spec, double s);
/// Laplace transform K(s|y) of k(0, t|y), closed form.
double fpt_laplace(const model::DiffusionSpec& spec, double s);
/// P(T_y < infinity): 1 when lambda2* <= mu2*, otherwise K(0|y) < 1.
double absorption_probability(const model::DiffusionSpec& spec);
/// E(T_y), defined for lambda2* < mu2*.  Throws RegimeError otherwise.
double fpt_mean(const model::DiffusionSpec& spec);

struct ScaledComparisonRow {
    long n;
    double q_n1, q_n2, q_n;
    double w1, w2, w; // eps W_i(eps n), eps W(eps n)
};

struct ScaledComparison {
    std::vector<ScaledComparisonRow> rows;
    double sup_norm;      // max |q_n - eps W(eps n)| over the grid
    double sup_norm_env1;
    double sup_norm_env2;
};

/// Side-by-side discrete vs scaled-diffusion steady state over an n-grid.
ScaledComparison compare_scaled(const model::DiffusionSpec& spec, double epsilon,
                                std::span<const long> n_grid);

} // namespace switchq::diffusion
