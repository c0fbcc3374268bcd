#include "switchq/diffusion.hpp"
#include "switchq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace switchq::diffusion {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559005768;

void require_eta2_zero(const model::DiffusionSpec& spec) {
    if (spec.eta2 != 0.0)
        throw RegimeError("diffusion: requires eta2 = 0 "
                          "(relabel environments for the eta1 = 0 case)");
}

void require_env(int env) {
    if (env != 1 && env != 2) throw ValidationError("environment index must be 1 or 2");
}

WienerKernel env_kernel(const model::DiffusionSpec& spec, int env) {
    if (env == 1) return {spec.lambda1s - spec.mu1s, spec.omega1_sq};
    return {spec.lambda2s - spec.mu2s, spec.omega2_sq};
}

// eta1 (mu2* - lambda2*) + eta2 (mu1* - lambda1*)
double drift_balance(const model::DiffusionSpec& s) {
    return s.eta1 * (s.mu2s - s.lambda2s) + s.eta2 * (s.mu1s - s.lambda1s);
}

CubicRootsDiffusion classify_roots(const numerics::CubicRoots& raw) {
    std::array<double, 3> r{raw.r1, raw.r2, raw.r3};
    std::sort(r.begin(), r.end());
    if (!(r[0] < 0.0 && r[1] > 0.0))
        throw ConvergenceError("diffusion: cubic roots do not split as xi1*, xi2* > 0 > xi3*");
    if (std::abs(r[2] - r[1]) < 1e-8)
        throw ConfluentRootsError("diffusion: confluent positive roots xi1* = xi2*");
    return {r[2], r[1], r[0]};
}

double exponential_pdf(double rate, double x) { return rate * std::exp(-rate * x); }

// integration cutoff beyond which both kernels' z-mass is negligible
double z_reach(const model::DiffusionSpec& spec, double x, double t) {
    const double drift_reach =
        (std::abs(spec.lambda1s - spec.mu1s) + std::abs(spec.lambda2s - spec.mu2s)) * t;
    const double diffusive = 8.0 * std::sqrt((spec.omega1_sq + spec.omega2_sq) * t);
    return std::max(spec.init_position, x) + drift_reach + diffusive + 1.0;
}

// (e^{-y a} - e^{-y b}) / (a - b), stable through the removable a = b point
double exp_divided_difference(double a, double b, double y) {
    if (a == b) return -y * std::exp(-y * b);
    return std::exp(-y * b) * std::expm1(-y * (a - b)) / (a - b);
}

} // namespace

SteadyDensitySolution solve_steady_density(const model::DiffusionSpec& spec) {
    model::validate(spec);
    const auto stability = model::classify(spec);
    SteadyDensitySolution sol;
    sol.stability = stability;
    sol.spec = spec;
    const double eta_sum = spec.eta1 + spec.eta2;
    sol.env_prob = {spec.eta2 / eta_sum, spec.eta1 / eta_sum};

    switch (stability) {
        case model::StabilityCase::NoSteadyState:
            throw RegimeError("solve_steady_density: no steady state for this spec");
        case model::StabilityCase::CaseI: {
            const double rate = 2.0 * (spec.mu2s - spec.lambda2s) / spec.omega2_sq;
            sol.env_mixture = {steady_state::GeneralizedMixture{1.0, 0.0, 0.0},
                               steady_state::GeneralizedMixture{1.0, rate, rate}};
            sol.w0 = {0.0, rate};
            return sol;
        }
        case model::StabilityCase::CaseII: {
            const double rate = 2.0 * (spec.mu1s - spec.lambda1s) / spec.omega1_sq;
            sol.env_mixture = {steady_state::GeneralizedMixture{1.0, rate, rate},
                               steady_state::GeneralizedMixture{1.0, 0.0, 0.0}};
            sol.w0 = {rate, 0.0};
            return sol;
        }
        case model::StabilityCase::CaseIII:
            break;
    }

    const double w1 = spec.omega1_sq, w2 = spec.omega2_sq;
    const double b1 = spec.lambda1s - spec.mu1s, b2 = spec.lambda2s - spec.mu2s;
    const double c3 = w1 * w2;
    const double c2 = 2.0 * (w1 * b2 + w2 * b1);
    const double c1 = -2.0 * (w1 * spec.eta2 - 2.0 * b1 * b2 + w2 * spec.eta1);
    const double c0 = -4.0 * (spec.eta1 * b2 + spec.eta2 * b1);
    const auto roots = classify_roots(numerics::solve_cubic(c3, c2, c1, c0));
    sol.roots = roots;

    const double balance = drift_balance(spec);
    // boundary limits W_i(0+); the (mu*-lambda*) orientation keeps them
    // positive, as the steady-state existence condition demands
    sol.w0 = {4.0 * spec.eta2 /
                  (w1 * roots.xi3s * (w2 * roots.xi3s - 2.0 * (spec.mu2s - spec.lambda2s))) *
                  balance / eta_sum,
              4.0 * spec.eta1 /
                  (w2 * roots.xi3s * (w1 * roots.xi3s - 2.0 * (spec.mu1s - spec.lambda1s))) *
                  balance / eta_sum};

    const double common = 4.0 * balance / (w1 * w2 * roots.xi1s * roots.xi3s *
                                           (roots.xi1s - roots.xi2s));
    const double d1 = spec.mu1s - spec.lambda1s;
    const double d2 = spec.mu2s - spec.lambda2s;
    const double a1 = common * (w2 * (roots.xi1s + roots.xi3s) - 2.0 * d2) /
                      (w2 * roots.xi3s - 2.0 * d2);
    const double a2 = common * (w1 * (roots.xi1s + roots.xi3s) - 2.0 * d1) /
                      (w1 * roots.xi3s - 2.0 * d1);
    sol.env_mixture = {steady_state::GeneralizedMixture{a1, roots.xi1s, roots.xi2s},
                       steady_state::GeneralizedMixture{a2, roots.xi1s, roots.xi2s}};
    return sol;
}

double steady_density(const SteadyDensitySolution& sol, double x, int env) {
    require_env(env);
    if (x < 0.0) return 0.0;
    const double p_env = sol.env_prob[static_cast<size_t>(env - 1)];
    if (p_env == 0.0) return 0.0;
    const auto& mix = sol.env_mixture[static_cast<size_t>(env - 1)];
    return p_env * (mix.weight * exponential_pdf(mix.param1, x) +
                    (1.0 - mix.weight) * exponential_pdf(mix.param2, x));
}

double marginal_density(const SteadyDensitySolution& sol, double x) {
    return steady_density(sol, x, 1) + steady_density(sol, x, 2);
}

double conditional_mean(const SteadyDensitySolution& sol, int env) {
    require_env(env);
    if (sol.env_prob[static_cast<size_t>(env - 1)] == 0.0) return 0.0;
    const auto& mix = sol.env_mixture[static_cast<size_t>(env - 1)];
    return mix.weight / mix.param1 + (1.0 - mix.weight) / mix.param2;
}

double mean(const SteadyDensitySolution& sol) {
    return sol.env_prob[0] * conditional_mean(sol, 1) +
           sol.env_prob[1] * conditional_mean(sol, 2);
}

double mgf(const SteadyDensitySolution& sol, double z, int env) {
    require_env(env);
    if (sol.stability != model::StabilityCase::CaseIII) {
        const double p_env = sol.env_prob[static_cast<size_t>(env - 1)];
        if (p_env == 0.0) return 0.0;
        const double rate = sol.env_mixture[static_cast<size_t>(env - 1)].param1;
        if (!(z < rate)) throw ValidationError("mgf: z must be below the exponential rate");
        return p_env * rate / (rate - z);
    }
    const auto& r = *sol.roots;
    if (!(z < r.xi2s)) throw ValidationError("mgf: z must be below xi2*");
    const auto& s = sol.spec;
    const double balance = drift_balance(s);
    const double eta_sum = s.eta1 + s.eta2;
    const double eta_num = env == 1 ? s.eta2 : s.eta1;
    const double w_o = env == 1 ? s.omega2_sq : s.omega1_sq;
    const double d_o = env == 1 ? s.mu2s - s.lambda2s : s.mu1s - s.lambda1s;
    return 4.0 * eta_num / (s.omega1_sq * s.omega2_sq * r.xi3s) * balance / eta_sum /
           (w_o * r.xi3s - 2.0 * d_o) *
           (-w_o * z - w_o * r.xi3s + 2.0 * d_o) / ((z - r.xi1s) * (z - r.xi2s));
}

double reflected_wiener_density(const WienerKernel& kernel, double x, double t, double y) {
    if (!(kernel.variance > 0.0)) throw ValidationError("WienerKernel: variance must be > 0");
    if (x < 0.0 || y < 0.0) throw ValidationError("reflected_wiener_density: x, y must be >= 0");
    if (!(t > 0.0)) throw ValidationError("reflected_wiener_density: t must be > 0");
    const double b = kernel.drift, w = kernel.variance;
    const double e1 = -(x - y - b * t) * (x - y - b * t) / (2.0 * w * t);
    const double gauss = std::exp(e1) / std::sqrt(kTwoPi * w * t);
    const double image = gauss * std::exp(-2.0 * x * y / (w * t));
    double tail;
    const double u = (x + y + b * t) / std::sqrt(2.0 * w * t);
    if (u >= 0.0) {
        // exp(2bx/w) erfc(u) recast through erfcx; the combined exponent
        // -((x-y-bt)^2 + 4xy)/(2wt) never overflows
        tail = numerics::erfcx(u) * std::exp(e1 - 2.0 * x * y / (w * t));
    } else {
        tail = std::exp(2.0 * b * x / w) * numerics::erfc(u); // u < 0 forces b < 0
    }
    return gauss + image - b / w * tail;
}

double absorbed_wiener_density(const WienerKernel& kernel, double x, double t, double y) {
    if (!(kernel.variance > 0.0)) throw ValidationError("WienerKernel: variance must be > 0");
    if (x < 0.0 || !(y > 0.0)) throw ValidationError("absorbed_wiener_density: x >= 0, y > 0");
    if (!(t > 0.0)) throw ValidationError("absorbed_wiener_density: t must be > 0");
    const double b = kernel.drift, w = kernel.variance;
    const double e1 = -(x - y - b * t) * (x - y - b * t) / (2.0 * w * t);
    const double gauss = std::exp(e1) / std::sqrt(kTwoPi * w * t);
    return -gauss * std::expm1(-2.0 * x * y / (w * t));
}

double wiener_fpt_density(const WienerKernel& kernel, double t, double y) {
    if (!(kernel.variance > 0.0)) throw ValidationError("WienerKernel: variance must be > 0");
    if (!(y > 0.0)) throw ValidationError("wiener_fpt_density: y must be > 0");
    if (!(t > 0.0)) throw ValidationError("wiener_fpt_density: t must be > 0");
    const double b = kernel.drift, w = kernel.variance;
    return y / std::sqrt(kTwoPi * w * t * t * t) *
           std::exp(-(y + b * t) * (y + b * t) / (2.0 * w * t));
}

namespace {

// settings for an integral nested inside another adaptive integral: keep its
// noise well below the outer error estimates
numerics::QuadratureSettings nested(const numerics::QuadratureSettings& outer) {
    numerics::QuadratureSettings s = outer;
    s.abs_tol = std::max(outer.abs_tol * 1e-3, 1e-13);
    s.rel_tol = std::max(outer.rel_tol * 1e-3, 1e-13);
    return s;
}

struct Bump {
    double center;
    double sigma;
};

// breakpoints over [0, hi] bracketing each kernel's bump, so the adaptive
// pass cannot step over a feature narrower than a segment
std::vector<double> bump_breakpoints(double hi, std::initializer_list<Bump> bumps) {
    std::vector<double> pts{0.0, hi};
    for (const Bump& b : bumps) {
        for (double m : {-8.0, 0.0, 8.0}) {
            const double p = b.center + m * b.sigma;
            if (p > 0.0 && p < hi) pts.push_back(p);
        }
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

// graded breakpoints for the switch-time integral over [0, t]; the inner
// convolution develops boundary layers at both ends
std::vector<double> switch_time_breakpoints(double t) {
    std::vector<double> pts;
    for (double f : {0.0, 1e-6, 1e-3, 0.01, 0.05, 0.2, 0.5, 0.8, 0.95, 0.99, 1.0 - 1e-3,
                     1.0 - 1e-6, 1.0})
        pts.push_back(f * t);
    std::sort(pts.begin(), pts.end());
    return pts;
}

// shared shape of f_2 / h_2 / k: outer tau integral of an inner z integral
// of kernel1(z, tau | y) * kernel2(target, t - tau | z)
template <typename Inner, typename AtTauZero, typename AtTauT>
double switching_convolution(double t, double eta1, const numerics::QuadratureSettings& quad,
                             Inner inner, AtTauZero at_tau_zero, AtTauT at_tau_t) {
    const double eps = 1e-9 * std::max(t, 1.0);
    auto integrand = [&](double tau) {
        if (tau < eps) return std::exp(-eta1 * tau) * at_tau_zero(tau);
        if (t - tau < eps) return std::exp(-eta1 * tau) * at_tau_t(tau);
        return std::exp(-eta1 * tau) * inner(tau);
    };
    return numerics::integrate_segments(integrand, switch_time_breakpoints(t), quad);
}

} // namespace

double transient_density(const model::DiffusionSpec& spec, double x, int env, double t,
                         const numerics::QuadratureSettings& quad) {
    require_eta2_zero(spec);
    require_env(env);
    if (!(t > 0.0)) throw ValidationError("transient_density: t must be > 0");
    const double p = spec.init_env_prob;
    const double y = spec.init_position;
    const WienerKernel k1 = env_kernel(spec, 1);
    const WienerKernel k2 = env_kernel(spec, 2);
    if (env == 1)
        return p * std::exp(-spec.eta1 * t) * reflected_wiener_density(k1, x, t, y);

    double value = (1.0 - p) * reflected_wiener_density(k2, x, t, y);
    if (p > 0.0 && spec.eta1 > 0.0) {
        const double zmax = z_reach(spec, x, t);
        const auto inner_quad = nested(quad);
        auto inner = [&](double tau) {
            const double u = t - tau;
            const auto pts = bump_breakpoints(
                zmax, {Bump{y + k1.drift * tau, std::sqrt(k1.variance * tau)},
                       Bump{0.0, std::sqrt(k1.variance * tau)},
                       Bump{x - k2.drift * u, std::sqrt(k2.variance * u)},
                       Bump{0.0, std::sqrt(k2.variance * u)}});
            return numerics::integrate_segments(
                [&](double z) {
                    return reflected_wiener_density(k1, z, tau, y) *
                           reflected_wiener_density(k2, x, u, z);
                },
                pts, inner_quad);
        };
        value += p * spec.eta1 *
                 switching_convolution(
                     t, spec.eta1, quad, inner,
                     [&](double tau) { return reflected_wiener_density(k2, x, t - tau, y); },
                     [&](double tau) { return reflected_wiener_density(k1, x, tau, y); });
    }
    return value;
}

double absorbed_transient_density(const model::DiffusionSpec& spec, double x, int env, double t,
                                  const numerics::QuadratureSettings& quad) {
    require_eta2_zero(spec);
    require_env(env);
    if (!(spec.init_position > 0.0))
        throw ValidationError("absorbed_transient_density: init_position y must be > 0");
    if (!(t > 0.0)) throw ValidationError("absorbed_transient_density: t must be > 0");
    const double p = spec.init_env_prob;
    const double y = spec.init_position;
    const WienerKernel k1 = env_kernel(spec, 1);
    const WienerKernel k2 = env_kernel(spec, 2);
    if (env == 1)
        return p * std::exp(-spec.eta1 * t) * absorbed_wiener_density(k1, x, t, y);

    double value = (1.0 - p) * absorbed_wiener_density(k2, x, t, y);
    if (p > 0.0 && spec.eta1 > 0.0) {
        const double zmax = z_reach(spec, x, t);
        const auto inner_quad = nested(quad);
        auto inner = [&](double tau) {
            const double u = t - tau;
            const auto pts = bump_breakpoints(
                zmax, {Bump{y + k1.drift * tau, std::sqrt(k1.variance * tau)},
                       Bump{x - k2.drift * u, std::sqrt(k2.variance * u)}});
            return numerics::integrate_segments(
                [&](double z) {
                    return z > 0.0 ? absorbed_wiener_density(k1, z, tau, y) *
                                         absorbed_wiener_density(k2, x, u, z)
                                   : 0.0;
                },
                pts, inner_quad);
        };
        value += p * spec.eta1 *
                 switching_convolution(
                     t, spec.eta1, quad, inner,
                     [&](double tau) { return absorbed_wiener_density(k2, x, t - tau, y); },
                     [&](double tau) { return absorbed_wiener_density(k1, x, tau, y); });
    }
    return value;
}

double fpt_density(const model::DiffusionSpec& spec, double t,
                   const numerics::QuadratureSettings& quad) {
    require_eta2_zero(spec);
    if (!(spec.init_position > 0.0))
        throw ValidationError("fpt_density: init_position y must be > 0");
    if (!(t > 0.0)) throw ValidationError("fpt_density: t must be > 0");
    const double p = spec.init_env_prob;
    const double y = spec.init_position;
    const WienerKernel k1 = env_kernel(spec, 1);
    const WienerKernel k2 = env_kernel(spec, 2);
    double value = p * std::exp(-spec.eta1 * t) * wiener_fpt_density(k1, t, y) +
                   (1.0 - p) * wiener_fpt_density(k2, t, y);
    if (p > 0.0 && spec.eta1 > 0.0) {
        const double zmax = z_reach(spec, 0.0, t);
        const auto inner_quad = nested(quad);
        auto inner = [&](double tau) {
            const double u = t - tau;
            const auto pts = bump_breakpoints(
                zmax, {Bump{y + k1.drift * tau, std::sqrt(k1.variance * tau)},
                       Bump{-k2.drift * u, std::sqrt(k2.variance * u)},
                       Bump{0.0, std::sqrt(k2.variance * u)}});
            return numerics::integrate_segments(
                [&](double z) {
                    return z > 0.0 ? absorbed_wiener_density(k1, z, tau, y) *
                                         wiener_fpt_density(k2, u, z)
                                   : 0.0;
                },
                pts, inner_quad);
        };
        value += p * spec.eta1 *
                 switching_convolution(
                     t, spec.eta1, quad, inner,
                     [&](double tau) { return wiener_fpt_density(k2, t - tau, y); },
                     // z-integral collapses onto the boundary flux of kernel 1
                     [&](double tau) {
                         return spec.omega2_sq / spec.omega1_sq * wiener_fpt_density(k1, tau, y);
                     });
    }
    return value;
}

LaplaceRootsDiffusion laplace_roots(const model::DiffusionSpec& spec, double s) {
    if (s < 0.0) throw ValidationError("laplace_roots: s must be >= 0");
    const double b1 = spec.lambda1s - spec.mu1s;
    const double b2 = spec.lambda2s - spec.mu2s;
    const double d1 = std::sqrt(b1 * b1 + 2.0 * spec.omega1_sq * (s + spec.eta1));
    const double d2 = std::sqrt(b2 * b2 + 2.0 * spec.omega2_sq * s);
    return {(b1 + d1) / spec.omega1_sq, (b1 - d1) / spec.omega1_sq,
            (b2 + d2) / spec.omega2_sq, (b2 - d2) / spec.omega2_sq, s};
}

double fpt_laplace(const model::DiffusionSpec& spec, double s) {
    require_eta2_zero(spec);
    if (!(spec.init_position > 0.0))
        throw ValidationError("fpt_laplace: init_position y must be > 0");
    const auto roots = laplace_roots(spec, s);
    const double p = spec.init_env_prob;
    const double y = spec.init_position;
    const double base = p * std::exp(-y * roots.zeta1) + (1.0 - p) * std::exp(-y * roots.theta1);
    if (p == 0.0 || spec.eta1 == 0.0) return base;
    return base + 2.0 * spec.eta1 * p *
                      exp_divided_difference(roots.zeta1, roots.theta1, y) /
                      (spec.omega1_sq * (roots.zeta2 - roots.theta1));
}

double absorption_probability(const model::DiffusionSpec& spec) {
    require_eta2_zero(spec);
    if (spec.lambda2s <= spec.mu2s) return 1.0;
    return fpt_laplace(spec, 0.0);
}

double fpt_mean(const model::DiffusionSpec& spec) {
    require_eta2_zero(spec);
    if (!(spec.init_position > 0.0))
        throw ValidationError("fpt_mean: init_position y must be > 0");
    if (spec.lambda2s >= spec.mu2s)
        throw RegimeError("FPT mean undefined: lambda2* >= mu2*");
    const double p = spec.init_env_prob;
    const double base = spec.init_position / (spec.mu2s - spec.lambda2s);
    if (p == 0.0) return base;
    if (spec.eta1 <= 0.0)
        throw RegimeError("FPT mean undefined: eta1 must be > 0 when p > 0");
    const auto roots = laplace_roots(spec, 0.0);
    return base + p / spec.eta1 *
                      (1.0 - (spec.mu1s - spec.lambda1s) / (spec.mu2s - spec.lambda2s)) *
                      (-std::expm1(-spec.init_position * roots.zeta1));
}

ScaledComparison compare_scaled(const model::DiffusionSpec& spec, double epsilon,
                                std::span<const long> n_grid) {
    if (n_grid.empty()) throw ValidationError("compare_scaled: n_grid must be nonempty");
    const auto discrete = model::scale_to_discrete(spec, epsilon);
    const auto q = steady_state::solve_steady(discrete);
    const auto w = solve_steady_density(spec);
    ScaledComparison cmp;
    cmp.sup_norm = cmp.sup_norm_env1 = cmp.sup_norm_env2 = 0.0;
    cmp.rows.reserve(n_grid.size());
    for (long n : n_grid) {
        ScaledComparisonRow row;
        row.n = n;
        row.q_n1 = steady_state::joint_pmf(q, n, 1);
        row.q_n2 = steady_state::joint_pmf(q, n, 2);
        row.q_n = row.q_n1 + row.q_n2;
        const double x = epsilon * static_cast<double>(n);
        row.w1 = epsilon * steady_density(w, x, 1);
        row.w2 = epsilon * steady_density(w, x, 2);
        row.w = row.w1 + row.w2;
        cmp.sup_norm = std::max(cmp.sup_norm, std::abs(row.q_n - row.w));
        cmp.sup_norm_env1 = std::max(cmp.sup_norm_env1, std::abs(row.q_n1 - row.w1));
        cmp.sup_norm_env2 = std::max(cmp.sup_norm_env2, std::abs(row.q_n2 - row.w2));
        cmp.rows.push_back(row);
    }
    return cmp;
}

} // namespace switchq::diffusion
