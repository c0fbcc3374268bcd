#include "switchq/transient.hpp"
#include "switchq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace switchq::transient {

namespace {

void check_kernel(const MM1Kernel& k) {
    if (!(k.lambda > 0.0) || !(k.mu > 0.0))
        throw ValidationError("MM1Kernel: rates must be > 0");
}

// e^{-(lambda+mu)t} I_k(2t sqrt(lambda mu)) = e^{expo} * ibar_k with
// expo = -t (sqrt(lambda)-sqrt(mu))^2 <= 0 and ibar the scaled Bessel value.
// expo is kept separate: ratio factors like (mu/lambda)^{k/2} can offset it
// by hundreds of e-folds, so every term is assembled in log space.
struct BesselRow {
    double x = 0.0;
    double expo = 0.0;
    std::vector<double> ibar;
};

BesselRow bessel_row(const MM1Kernel& k, double t, int max_order) {
    BesselRow row;
    const double root = std::sqrt(k.lambda) - std::sqrt(k.mu);
    row.expo = -t * root * root;
    row.x = 2.0 * t * std::sqrt(k.lambda * k.mu);
    row.ibar = numerics::bessel_i_scaled_all(max_order, row.x);
    return row;
}

double fuse(double log_factor, double value) {
    if (value <= 0.0) return 0.0;
    const double e = log_factor + std::log(value);
    return e < -745.0 ? 0.0 : std::exp(e);
}

// Bessel orders feeding p_{j,n}(t): the closed form reads orders up to
// n+j+2, and the suffix sum peaks near k = (mu-lambda) t when mu > lambda.
int row_span(const MM1Kernel& k, long j, long n, double t) {
    const double peak = std::max(0.0, (k.mu - k.lambda) * t);
    const double x = 2.0 * t * std::sqrt(k.lambda * k.mu);
    const double spread = 14.0 * std::sqrt((k.lambda + k.mu) * t + x + 1.0);
    return static_cast<int>(static_cast<double>(j + n) + 2.0 + peak + spread) + 64;
}

// levels of the M/M/1 queue still carrying visible mass at time t
long level_reach(const MM1Kernel& k, long j, double t) {
    return j + static_cast<long>(k.lambda * t + 10.0 * std::sqrt(k.lambda * t + 1.0)) + 48;
}

// suffix sums S_m = sum_{k >= m} (mu/lambda)^{k/2} ibar_k, log-assembled
std::vector<double> tail_suffix_sums(const MM1Kernel& kern, const BesselRow& row) {
    const double half_log_ratio = 0.5 * std::log(kern.mu / kern.lambda);
    std::vector<double> suffix(row.ibar.size() + 1, 0.0);
    for (size_t m = row.ibar.size(); m-- > 0;)
        suffix[m] = suffix[m + 1] +
                    fuse(half_log_ratio * static_cast<double>(m), row.ibar[m]);
    return suffix;
}

double assemble_general(const MM1Kernel& kern, const BesselRow& row,
                        const std::vector<double>& suffix, long j, long n) {
    const double lnr = std::log(kern.lambda / kern.mu);
    const long d = n - j;
    const double term1 =
        fuse(row.expo + 0.5 * static_cast<double>(d) * lnr, row.ibar[static_cast<size_t>(std::labs(d))]);
    const double term2 =
        fuse(row.expo + 0.5 * static_cast<double>(d - 1) * lnr, row.ibar[static_cast<size_t>(n + j + 1)]);
    const double term3 = (1.0 - kern.lambda / kern.mu) *
                         fuse(row.expo + static_cast<double>(n) * lnr,
                              suffix[static_cast<size_t>(n + j + 2)]);
    return term1 + term2 + term3;
}

} // namespace

double mm1_transition_general(const MM1Kernel& kernel, long j, long n, double t,
                              const numerics::SeriesSettings& series) {
    check_kernel(kernel);
    series.check();
    if (j < 0 || n < 0) throw ValidationError("mm1_transition: states must be >= 0");
    if (t < 0.0) throw ValidationError("mm1_transition: t must be >= 0");
    if (t == 0.0) return j == n ? 1.0 : 0.0;
    BesselRow row = bessel_row(kernel, t, row_span(kernel, j, n, t));
    return assemble_general(kernel, row, tail_suffix_sums(kernel, row), j, n);
}

double mm1_transition_from_empty(const MM1Kernel& kernel, long n, double t,
                                 const numerics::SeriesSettings& series) {
    check_kernel(kernel);
    series.check();
    if (n < 0) throw ValidationError("mm1_transition: states must be >= 0");
    if (t < 0.0) throw ValidationError("mm1_transition: t must be >= 0");
    if (t == 0.0) return n == 0 ? 1.0 : 0.0;
    BesselRow row = bessel_row(kernel, t, row_span(kernel, 0, n, t));
    // (1/(mu t)) sum_{k >= n+1} k (lambda/mu)^{n-k/2} ibar_k, with the
    // e^{expo} prefactor folded into each term
    const double lnr = std::log(kernel.lambda / kernel.mu);
    double sum = 0.0;
    int below = 0;
    for (long k = n + 1; k < static_cast<long>(row.ibar.size()); ++k) {
        const double term =
            static_cast<double>(k) *
            fuse(row.expo + (static_cast<double>(n) - 0.5 * static_cast<double>(k)) * lnr,
                 row.ibar[static_cast<size_t>(k)]);
        sum += term;
        below = term < series.tail_tol ? below + 1 : 0;
        if (below >= 5) break;
    }
    return sum / (kernel.mu * t);
}

double mm1_transition(const MM1Kernel& kernel, long j, long n, double t,
                      const numerics::SeriesSettings& series) {
    if (j == 0) return mm1_transition_from_empty(kernel, n, t, series);
    return mm1_transition_general(kernel, j, n, t, series);
}

std::vector<double> mm1_transition_row(const MM1Kernel& kernel, long j, long n_max, double t,
                                       const numerics::SeriesSettings& series) {
    check_kernel(kernel);
    series.check();
    if (j < 0 || n_max < 0) throw ValidationError("mm1_transition_row: states must be >= 0");
    if (t < 0.0) throw ValidationError("mm1_transition_row: t must be >= 0");
    std::vector<double> out(static_cast<size_t>(n_max) + 1, 0.0);
    if (t == 0.0) {
        if (j <= n_max) out[static_cast<size_t>(j)] = 1.0;
        return out;
    }
    BesselRow row = bessel_row(kernel, t, row_span(kernel, j, n_max, t));
    const auto suffix = tail_suffix_sums(kernel, row);
    for (long n = 0; n <= n_max; ++n)
        out[static_cast<size_t>(n)] = assemble_general(kernel, row, suffix, j, n);
    return out;
}

std::vector<double> mm1_transition_row_into(const MM1Kernel& kernel, long n, long k_max, double t,
                                            const numerics::SeriesSettings& series) {
    auto from_n = mm1_transition_row(kernel, n, k_max, t, series);
    const double lnr = std::log(kernel.lambda / kernel.mu);
    for (long k = 0; k <= k_max; ++k) {
        double& v = from_n[static_cast<size_t>(k)];
        v = fuse(static_cast<double>(n - k) * lnr, v);
    }
    return from_n;
}

double joint_transient(const model::QueueSpec& spec, long n, int env, double t,
                       const numerics::QuadratureSettings& quad,
                       const numerics::SeriesSettings& series) {
    if (env != 1 && env != 2) throw ValidationError("joint_transient: environment must be 1 or 2");
    if (spec.eta2 != 0.0)
        throw RegimeError("joint_transient: requires eta2 = 0 "
                          "(relabel environments for the eta1 = 0 case)");
    if (n < 0) throw ValidationError("joint_transient: n must be >= 0");
    if (t < 0.0) throw ValidationError("joint_transient: t must be >= 0");
    const double p = spec.init_env_prob;
    const long j = spec.init_state;
    if (t == 0.0) {
        const double delta = n == j ? 1.0 : 0.0;
        return env == 1 ? p * delta : (1.0 - p) * delta;
    }
    const MM1Kernel k1{spec.lambda1, spec.mu1};
    const MM1Kernel k2{spec.lambda2, spec.mu2};
    if (env == 1)
        return p * std::exp(-spec.eta1 * t) * mm1_transition(k1, j, n, t, series);

    double value = (1.0 - p) * mm1_transition(k2, j, n, t, series);
    if (p > 0.0 && spec.eta1 > 0.0) {
        const long k_max = level_reach(k1, j, t);
        // the summand has peaks near k = j + lambda1 tau (outgoing row) and
        // k = n (incoming row); the tail rule may only fire past both
        const long k_peak = std::max(j, n);
        auto integrand = [&](double tau) {
            const auto go = mm1_transition_row(k1, j, k_max, tau, series);
            const auto come = mm1_transition_row_into(k2, n, k_max, t - tau, series);
            double sum = 0.0;
            int below = 0;
            for (long k = 0; k <= k_max; ++k) {
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

} // namespace switchq::transient
