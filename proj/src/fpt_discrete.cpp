#include "switchq/fpt_discrete.hpp"
#include "switchq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace switchq::fpt_discrete {

using transient::MM1Kernel;

namespace {

void require_eta2_zero(const model::QueueSpec& spec) {
    if (spec.eta2 != 0.0)
        throw RegimeError("fpt_discrete: requires eta2 = 0 "
                          "(relabel environments for the eta1 = 0 case)");
}

struct ScaledRow {
    double expo;      // -t (sqrt(lambda)-sqrt(mu))^2
    double x;
    std::vector<double> ibar;
};

ScaledRow scaled_row(const MM1Kernel& k, double t, int max_order) {
    ScaledRow row;
    const double root = std::sqrt(k.lambda) - std::sqrt(k.mu);
    row.expo = -t * root * root;
    row.x = 2.0 * t * std::sqrt(k.lambda * k.mu);
    if (row.expo >= -700.0) row.ibar = numerics::bessel_i_scaled_all(max_order, row.x);
    return row;
}

int absorbed_span(long j, long k_max, const MM1Kernel& k, double t) {
    // avoiding probabilities read orders up to k_max + j; add working room
    const double x = 2.0 * t * std::sqrt(k.lambda * k.mu);
    return static_cast<int>(static_cast<double>(j + k_max) + 10.0 * std::sqrt(x + 1.0)) + 48;
}

double fuse(double log_factor, double value) {
    if (value <= 0.0) return 0.0;
    const double e = log_factor + std::log(value);
    return e < -745.0 ? 0.0 : std::exp(e);
}

// alpha_{j,k}(t) for k = 0..k_max; entry 0 is zero by convention
std::vector<double> avoiding_row(const MM1Kernel& kern, long j, long k_max, double t) {
    std::vector<double> out(static_cast<size_t>(k_max) + 1, 0.0);
    if (t == 0.0) {
        if (j <= k_max) out[static_cast<size_t>(j)] = 1.0;
        return out;
    }
    ScaledRow row = scaled_row(kern, t, absorbed_span(j, k_max, kern, t));
    if (row.ibar.empty()) return out;
    const double pref = std::exp(row.expo);
    const double lnr = std::log(kern.lambda / kern.mu);
    for (long k = 1; k <= k_max; ++k) {
        const double diff = row.ibar[static_cast<size_t>(std::labs(k - j))] -
                            row.ibar[static_cast<size_t>(k + j)];
        const double scale = pref * std::exp(0.5 * static_cast<double>(k - j) * lnr);
        out[static_cast<size_t>(k)] =
            std::isfinite(scale) ? scale * diff
                                 : fuse(row.expo + 0.5 * static_cast<double>(k - j) * lnr, diff);
    }
    return out;
}

// alpha_{k,n}(t) for k = 0..k_max, via the reversal identity
// alpha_{k,n} = (lambda/mu)^{n-k} alpha_{n,k}
std::vector<double> avoiding_row_into(const MM1Kernel& kern, long n, long k_max, double t) {
    auto from_n = avoiding_row(kern, n, k_max, t);
    const double lnr = std::log(kern.lambda / kern.mu);
    for (long k = 0; k <= k_max; ++k) {
        double& v = from_n[static_cast<size_t>(k)];
        v = fuse(static_cast<double>(n - k) * lnr, v);
    }
    return from_n;
}

// g_{k,0}(t) for k = 0..k_max; entry 0 is zero
std::vector<double> fpt_density_row(const MM1Kernel& kern, long k_max, double t) {
    std::vector<double> out(static_cast<size_t>(k_max) + 1, 0.0);
    if (t == 0.0) return out;
    ScaledRow row = scaled_row(kern, t, static_cast<int>(k_max));
    if (row.ibar.empty()) return out;
    const double pref = std::exp(row.expo);
    const double sr = std::sqrt(kern.mu / kern.lambda);
    const double half_lnr = 0.5 * std::log(kern.mu / kern.lambda);
    double ratio = sr; // (mu/lambda)^{k/2}
    for (long k = 1; k <= k_max; ++k) {
        const double scale = pref * ratio;
        out[static_cast<size_t>(k)] =
            std::isfinite(scale)
                ? static_cast<double>(k) / t * scale * row.ibar[static_cast<size_t>(k)]
                : static_cast<double>(k) / t *
                      fuse(row.expo + half_lnr * static_cast<double>(k),
                           row.ibar[static_cast<size_t>(k)]);
        ratio *= sr;
    }
    return out;
}

// (a^j - b^j) / (a - b) as the homogeneous sum, exact at a = b
double power_divided_difference(double a, double b, long j) {
    double sum = 0.0;
    for (long m = 0; m < j; ++m)
        sum += std::pow(a, static_cast<double>(m)) * std::pow(b, static_cast<double>(j - 1 - m));
    return sum;
}

} // namespace

LaplaceRootsDiscrete laplace_roots(const model::QueueSpec& spec, double s) {
    if (s < 0.0) throw ValidationError("laplace_roots: s must be >= 0");
    const double a1 = s + spec.lambda1 + spec.mu1 + spec.eta1;
    const double d1 = std::sqrt(a1 * a1 - 4.0 * spec.lambda1 * spec.mu1);
    const double a2 = s + spec.lambda2 + spec.mu2;
    const double d2 = std::sqrt(a2 * a2 - 4.0 * spec.lambda2 * spec.mu2);
    return {(a1 + d1) / (2.0 * spec.mu1), (a1 - d1) / (2.0 * spec.mu1),
            (a2 + d2) / (2.0 * spec.mu2), (a2 - d2) / (2.0 * spec.mu2), s};
}

double avoiding_prob(const MM1Kernel& kernel, long j, long n, double t) {
    if (j < 1 || n < 1) throw ValidationError("avoiding_prob: j and n must be >= 1");
    if (!(t > 0.0)) throw ValidationError("avoiding_prob: t must be > 0");
    return avoiding_row(kernel, j, n, t)[static_cast<size_t>(n)];
}

double mm1_fpt_density(const MM1Kernel& kernel, long j, double t) {
    if (j < 1) throw ValidationError("mm1_fpt_density: j must be >= 1");
    if (!(t > 0.0)) throw ValidationError("mm1_fpt_density: t must be > 0");
    ScaledRow row = scaled_row(kernel, t, static_cast<int>(j));
    if (row.ibar.empty()) return 0.0;
    return static_cast<double>(j) / t * std::exp(row.expo) *
           std::pow(kernel.mu / kernel.lambda, 0.5 * static_cast<double>(j)) *
           row.ibar[static_cast<size_t>(j)];
}

double absorbed_state_prob(const model::QueueSpec& spec, long n, int env, double t,
                           const numerics::QuadratureSettings& quad,
                           const numerics::SeriesSettings& series) {
    require_eta2_zero(spec);
    if (env != 1 && env != 2) throw ValidationError("absorbed_state_prob: environment must be 1 or 2");
    const long j = spec.init_state;
    if (j < 1) throw ValidationError("absorbed_state_prob: init_state must be >= 1");
    if (n < 1) throw ValidationError("absorbed_state_prob: n must be >= 1");
    if (!(t > 0.0)) throw ValidationError("absorbed_state_prob: t must be > 0");
    const double p = spec.init_env_prob;
    const MM1Kernel k1{spec.lambda1, spec.mu1};
    const MM1Kernel k2{spec.lambda2, spec.mu2};
    if (env == 1)
        return p * std::exp(-spec.eta1 * t) * avoiding_prob(k1, j, n, t);

    double value = (1.0 - p) * avoiding_prob(k2, j, n, t);
    if (p > 0.0 && spec.eta1 > 0.0) {
        const long k_max = j + static_cast<long>(spec.lambda1 * t +
                                                 10.0 * std::sqrt(spec.lambda1 * t + 1.0)) + 48;
        const long k_peak = std::max(j, n);
        auto integrand = [&](double tau) {
            const auto go = avoiding_row(k1, j, k_max, tau);
            const auto come = avoiding_row_into(k2, n, k_max, t - tau);
            double sum = 0.0;
            int below = 0;
            for (long k = 1; k <= k_max; ++k) {
                const double term = go[static_cast<size_t>(k)] * come[static_cast<size_t>(k)];
                sum += term;
                below = term < series.tail_tol ? below + 1 : 0;
                if (below >= 5 && k > k_peak) break;
            }
            return std::exp(-spec.eta1 * tau) * sum;
        };
        value += p * spec.eta1 * numerics::integrate(integrand, 0.0, t, quad);
    }
    return value;
}

double fpt_density(const model::QueueSpec& spec, long j, double t,
                   const numerics::QuadratureSettings& quad,
                   const numerics::SeriesSettings& series) {
    require_eta2_zero(spec);
    if (j < 1) throw ValidationError("fpt_density: j must be >= 1");
    if (!(t > 0.0)) throw ValidationError("fpt_density: t must be > 0");
    const double p = spec.init_env_prob;
    const MM1Kernel k1{spec.lambda1, spec.mu1};
    const MM1Kernel k2{spec.lambda2, spec.mu2};
    double value = p * std::exp(-spec.eta1 * t) * mm1_fpt_density(k1, j, t) +
                   (1.0 - p) * mm1_fpt_density(k2, j, t);
    if (p > 0.0 && spec.eta1 > 0.0) {
        const long k_max = j + static_cast<long>(spec.lambda1 * t +
                                                 10.0 * std::sqrt(spec.lambda1 * t + 1.0)) + 48;
        // g_{k,0}(u) itself peaks near k = (mu2 - lambda2) u when stable
        const long k_peak =
            std::max(j, static_cast<long>(std::max(0.0, (spec.mu2 - spec.lambda2) * t)) + 1);
        auto integrand = [&](double tau) {
            const auto go = avoiding_row(k1, j, k_max, tau);
            const auto absorb = fpt_density_row(k2, k_max, t - tau);
            double sum = 0.0;
            int below = 0;
            for (long k = 1; k <= k_max; ++k) {
                const double term = go[static_cast<size_t>(k)] * absorb[static_cast<size_t>(k)];
                sum += term;
                below = term < series.tail_tol ? below + 1 : 0;
                if (below >= 5 && k > k_peak) break;
            }
            return std::exp(-spec.eta1 * tau) * sum;
        };
        value += p * spec.eta1 * numerics::integrate(integrand, 0.0, t, quad);
    }
    return value;
}

double fpt_laplace(const model::QueueSpec& spec, long j, double s) {
    require_eta2_zero(spec);
    if (j < 1) throw ValidationError("fpt_laplace: j must be >= 1");
    if (s < 0.0) throw ValidationError("fpt_laplace: s must be >= 0");
    const auto roots = laplace_roots(spec, s);
    const double p = spec.init_env_prob;
    const double base = p / std::pow(roots.phi1, static_cast<double>(j)) +
                        (1.0 - p) / std::pow(roots.psi1, static_cast<double>(j));
    if (p == 0.0 || spec.eta1 == 0.0) return base;
    // (psi1^j - phi1^j)/(psi1 - phi1) expanded as a homogeneous sum keeps the
    // removable psi1 = phi1 singularity out of the arithmetic entirely
    const double dd = power_divided_difference(roots.psi1, roots.phi1, j);
    const double third = spec.eta1 * p * roots.phi2 / spec.lambda1 * dd /
                         ((roots.psi1 - roots.phi2) *
                          std::pow(roots.phi1, static_cast<double>(j - 1)) *
                          std::pow(roots.psi1, static_cast<double>(j - 1)));
    return base + third;
}

double absorption_probability(const model::QueueSpec& spec, long j) {
    require_eta2_zero(spec);
    if (j < 1) throw ValidationError("absorption_probability: j must be >= 1");
    if (spec.lambda2 <= spec.mu2) return 1.0;
    return fpt_laplace(spec, j, 0.0);
}

double fpt_mean(const model::QueueSpec& spec, long j) {
    require_eta2_zero(spec);
    if (j < 1) throw ValidationError("fpt_mean: j must be >= 1");
    if (spec.lambda2 >= spec.mu2)
        throw RegimeError("FPT mean undefined: lambda2 >= mu2");
    const double p = spec.init_env_prob;
    const double base = static_cast<double>(j) / (spec.mu2 - spec.lambda2);
    if (p == 0.0) return base;
    if (spec.eta1 <= 0.0)
        throw RegimeError("FPT mean undefined: eta1 must be > 0 when p > 0");
    const auto roots = laplace_roots(spec, 0.0);
    const double dl = spec.lambda1 - spec.mu1;
    const double bracket =
        1.0 / ((dl + spec.eta1) * roots.phi1 - (dl - spec.eta1)) +
        1.0 / ((dl + spec.eta1) * roots.phi2 - (dl - spec.eta1)) -
        (spec.mu1 - spec.lambda1) / (spec.eta1 * (spec.mu2 - spec.lambda2));
    return base + p * (1.0 - 1.0 / std::pow(roots.phi1, static_cast<double>(j))) * bracket;
}

} // namespace switchq::fpt_discrete
