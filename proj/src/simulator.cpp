#include "switchq/simulator.hpp"
#include "switchq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

namespace switchq::simulator {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// Partition replications into contiguous chunks; results land in
// rep-indexed slots, so the reduction order (and therefore every output
// bit) is independent of the worker count.
template <typename Fn>
void for_each_replication(long replications, int worker_hint, Fn&& fn) {
    const int workers = std::clamp(worker_hint, 1, 64);
    if (workers == 1 || replications < 2 * workers) {
        for (long r = 0; r < replications; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const long chunk = (replications + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const long lo = w * chunk;
        const long hi = std::min(replications, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (long r = lo; r < hi; ++r) fn(r);
        });
    }
    for (auto& th : pool) th.join();
}

struct CtmcState {
    double t = 0.0;
    long level = 0;
    int env = 1;
};

CtmcState initial_state(const model::QueueSpec& spec, Rng& rng) {
    CtmcState s;
    s.level = spec.init_state;
    s.env = rng.uniform() < spec.init_env_prob ? 1 : 2;
    return s;
}

struct Rates {
    double arrival, service, sw, total;
};

Rates state_rates(const model::QueueSpec& spec, long level, int env) {
    Rates r;
    r.arrival = env == 1 ? spec.lambda1 : spec.lambda2;
    r.service = level > 0 ? (env == 1 ? spec.mu1 : spec.mu2) : 0.0;
    r.sw = env == 1 ? spec.eta1 : spec.eta2;
    r.total = r.arrival + r.service + r.sw;
    return r;
}

// advance one event; returns false when the holding time passes `until`
bool step_ctmc(const model::QueueSpec& spec, CtmcState& s, double until, Rng& rng,
               EventKind* kind_out = nullptr) {
    const Rates r = state_rates(spec, s.level, s.env);
    if (r.total <= 0.0) {
        s.t = until;
        return false;
    }
    const double hold = rng.exponential(r.total);
    if (s.t + hold >= until) {
        s.t = until;
        return false;
    }
    s.t += hold;
    const double u = rng.uniform() * r.total;
    EventKind kind;
    if (u < r.arrival) {
        kind = EventKind::Arrival;
        ++s.level;
    } else if (u < r.arrival + r.service) {
        kind = EventKind::Service;
        --s.level;
    } else {
        kind = EventKind::Switch;
        s.env = 3 - s.env;
    }
    if (kind_out) *kind_out = kind;
    return true;
}

double batch_mean_sd(const std::vector<double>& batch_means, double mean) {
    double ss = 0.0;
    for (double b : batch_means) ss += (b - mean) * (b - mean);
    const auto n = static_cast<double>(batch_means.size());
    return std::sqrt(ss / (n * (n - 1.0)));
}

struct DiffusionWalk {
    double x;
    int env;
    double t = 0.0;
    double next_switch;
};

DiffusionWalk initial_walk(const model::DiffusionSpec& spec, Rng& rng) {
    DiffusionWalk w;
    w.x = spec.init_position;
    w.env = rng.uniform() < spec.init_env_prob ? 1 : 2;
    const double eta = w.env == 1 ? spec.eta1 : spec.eta2;
    w.next_switch = eta > 0.0 ? rng.exponential(eta) : std::numeric_limits<double>::infinity();
    return w;
}

void maybe_switch(const model::DiffusionSpec& spec, DiffusionWalk& w, Rng& rng) {
    if (w.t >= w.next_switch) {
        w.env = 3 - w.env;
        const double eta = w.env == 1 ? spec.eta1 : spec.eta2;
        w.next_switch =
            w.t + (eta > 0.0 ? rng.exponential(eta) : std::numeric_limits<double>::infinity());
    }
}

} // namespace

void SimConfig::check() const {
    if (replications < 1) throw ValidationError("SimConfig: replications must be >= 1");
    if (!(horizon > 0.0)) throw ValidationError("SimConfig: horizon must be > 0");
    if (!(burn_in >= 0.0) || burn_in >= horizon)
        throw ValidationError("SimConfig: burn_in must lie in [0, horizon)");
    if (worker_hint < 1) throw ValidationError("SimConfig: worker_hint must be >= 1");
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t key = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
    for (auto& word : s_) word = splitmix64(key);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

double Rng::normal() {
    // polar Box-Muller, first variate only: keeps the stream layout simple
    while (true) {
        const double u = 2.0 * uniform() - 1.0;
        const double v = 2.0 * uniform() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

double holding_time(const model::QueueSpec& spec, long level, int env, Rng& rng) {
    const Rates r = state_rates(spec, level, env);
    if (r.total <= 0.0) throw RegimeError("holding_time: state has no outgoing transitions");
    return rng.exponential(r.total);
}

std::vector<PathEvent> simulate_ctmc_path(const model::QueueSpec& spec, const SimConfig& config,
                                          std::uint64_t replication_index) {
    model::validate(spec);
    config.check();
    Rng rng(config.seed, replication_index);
    CtmcState s = initial_state(spec, rng);
    std::vector<PathEvent> path;
    path.push_back({0.0, EventKind::Switch, s.level, s.env}); // initial snapshot
    EventKind kind;
    while (step_ctmc(spec, s, config.horizon, rng, &kind))
        path.push_back({s.t, kind, s.level, s.env});
    return path;
}

JointPmfEstimate estimate_transient_pmf(const model::QueueSpec& spec, double t,
                                        const SimConfig& config) {
    model::validate(spec);
    config.check();
    if (!(t >= 0.0)) throw ValidationError("estimate_transient_pmf: t must be >= 0");
    const long reps = config.replications;
    std::vector<std::pair<long, int>> outcome(static_cast<size_t>(reps));
    for_each_replication(reps, config.worker_hint, [&](long r) {
        Rng rng(config.seed, static_cast<std::uint64_t>(r));
        CtmcState s = initial_state(spec, rng);
        while (step_ctmc(spec, s, t, rng)) {
        }
        outcome[static_cast<size_t>(r)] = {s.level, s.env};
    });
    std::map<std::pair<long, int>, long> counts;
    for (const auto& o : outcome) ++counts[o];
    JointPmfEstimate est;
    const double n = static_cast<double>(reps);
    for (const auto& [key, c] : counts) {
        const double p = static_cast<double>(c) / n;
        est[key] = {p, std::sqrt(p * (1.0 - p) / n), c};
    }
    return est;
}

JointPmfEstimate estimate_steady_pmf(const model::QueueSpec& spec, const SimConfig& config) {
    model::validate(spec);
    config.check();
    if (model::classify(spec) == model::StabilityCase::NoSteadyState)
        throw RegimeError("estimate_steady_pmf: spec has no steady state");
    const double relax = std::min(spec.eta1 + spec.eta2,
                                  std::min(std::abs(spec.mu1 - spec.lambda1),
                                           std::abs(spec.mu2 - spec.lambda2)));
    if (relax > 0.0 && config.burn_in < 10.0 / relax)
        std::fprintf(stderr,
                     "switchq: warning: burn_in %.3g below suggested %.3g for this spec\n",
                     config.burn_in, 10.0 / relax);

    constexpr int kBatches = 20;
    const double span = config.horizon - config.burn_in;
    const double batch_len = span / kBatches;
    // occupancy[batch] keyed by (level, env)
    std::vector<std::map<std::pair<long, int>, double>> occupancy(kBatches);

    Rng rng(config.seed, 0);
    CtmcState s = initial_state(spec, rng);
    while (true) {
        const double t_prev = s.t;
        const long level = s.level;
        const int env = s.env;
        const bool more = step_ctmc(spec, s, config.horizon, rng);
        const double t_next = s.t;
        // credit the sojourn [t_prev, t_next] to the overlapped batches
        double lo = std::max(t_prev, config.burn_in);
        while (lo < t_next) {
            const int b = std::min(kBatches - 1,
                                   static_cast<int>((lo - config.burn_in) / batch_len));
            const double hi = std::min(t_next, config.burn_in + (b + 1) * batch_len);
            occupancy[static_cast<size_t>(b)][{level, env}] += hi - lo;
            lo = hi;
        }
        if (!more) break;
    }

    std::map<std::pair<long, int>, std::vector<double>> batch_means;
    for (int b = 0; b < kBatches; ++b)
        for (const auto& [key, time] : occupancy[static_cast<size_t>(b)])
            batch_means.try_emplace(key, kBatches, 0.0).first->second[static_cast<size_t>(b)] =
                time / batch_len;
    JointPmfEstimate est;
    for (const auto& [key, means] : batch_means) {
        double m = 0.0;
        for (double v : means) m += v;
        m /= kBatches;
        est[key] = {m, batch_mean_sd(means, m), kBatches};
    }
    return est;
}

FirstEmptyingStats sample_first_emptying(const model::QueueSpec& spec, const SimConfig& config) {
    model::validate(spec);
    config.check();
    if (spec.init_state < 1)
        throw ValidationError("sample_first_emptying: init_state must be >= 1");
    // point of no return: in environment 2 with eta2 = 0 and lambda2 > mu2,
    // ruin from level L has probability (mu2/lambda2)^L
    long no_return = -1;
    if (spec.eta2 == 0.0 && spec.lambda2 > spec.mu2) {
        const double per_level = std::log(spec.mu2 / spec.lambda2);
        no_return = static_cast<long>(std::ceil(-12.0 * std::log(10.0) / per_level)) + 1;
    }

    const long reps = config.replications;
    std::vector<double> sample(static_cast<size_t>(reps)); // <0 means censored
    for_each_replication(reps, config.worker_hint, [&](long r) {
        Rng rng(config.seed, static_cast<std::uint64_t>(r));
        CtmcState s = initial_state(spec, rng);
        double result = -1.0;
        while (true) {
            if (!step_ctmc(spec, s, config.horizon, rng)) break;
            if (s.level == 0) {
                result = s.t;
                break;
            }
            if (no_return > 0 && s.env == 2 && s.level >= no_return) break;
        }
        sample[static_cast<size_t>(r)] = result;
    });

    FirstEmptyingStats stats;
    double sum = 0.0;
    for (double v : sample)
        if (v >= 0.0) {
            ++stats.completed;
            sum += v;
        }
    const double n = static_cast<double>(reps);
    const double frac = static_cast<double>(stats.completed) / n;
    stats.completion = {frac, std::sqrt(frac * (1.0 - frac) / n), reps};
    stats.censored_fraction = 1.0 - frac;
    if (stats.completed > 1) {
        const double mean = sum / static_cast<double>(stats.completed);
        double ss = 0.0;
        for (double v : sample)
            if (v >= 0.0) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(stats.completed - 1));
        stats.mean_uncensored = {mean, sd / std::sqrt(static_cast<double>(stats.completed)),
                                 stats.completed};
    }
    return stats;
}

double simulate_diffusion_terminal(const model::DiffusionSpec& spec, const SimConfig& config,
                                   double dt, std::uint64_t replication_index) {
    model::validate(spec);
    config.check();
    if (!(dt > 0.0)) throw ValidationError("simulate_diffusion_terminal: dt must be > 0");
    Rng rng(config.seed, replication_index);
    DiffusionWalk w = initial_walk(spec, rng);
    while (w.t < config.horizon) {
        const double h = std::min({dt, w.next_switch - w.t, config.horizon - w.t});
        const double beta = w.env == 1 ? spec.lambda1s - spec.mu1s : spec.lambda2s - spec.mu2s;
        const double omega2 = w.env == 1 ? spec.omega1_sq : spec.omega2_sq;
        w.x = std::abs(w.x + beta * h + std::sqrt(omega2 * h) * rng.normal());
        w.t += h;
        maybe_switch(spec, w, rng);
    }
    return w.x;
}

std::optional<double> simulate_diffusion_first_hit(const model::DiffusionSpec& spec,
                                                   const SimConfig& config, double dt,
                                                   std::uint64_t replication_index) {
    model::validate(spec);
    config.check();
    if (!(dt > 0.0)) throw ValidationError("simulate_diffusion_first_hit: dt must be > 0");
    if (!(spec.init_position > 0.0))
        throw ValidationError("simulate_diffusion_first_hit: init_position must be > 0");
    Rng rng(config.seed, replication_index);
    DiffusionWalk w = initial_walk(spec, rng);
    while (w.t < config.horizon) {
        const double h = std::min({dt, w.next_switch - w.t, config.horizon - w.t});
        const double beta = w.env == 1 ? spec.lambda1s - spec.mu1s : spec.lambda2s - spec.mu2s;
        const double omega2 = w.env == 1 ? spec.omega1_sq : spec.omega2_sq;
        const double x0 = w.x;
        const double x1 = x0 + beta * h + std::sqrt(omega2 * h) * rng.normal();
        if (x1 <= 0.0) // crossed within the step; linear interpolation
            return w.t + h * x0 / (x0 - x1);
        // Brownian-bridge probability of an unseen excursion below 0
        const double p_cross = std::exp(-2.0 * x0 * x1 / (omega2 * h));
        if (rng.uniform() < p_cross) return w.t + 0.5 * h;
        w.x = x1;
        w.t += h;
        maybe_switch(spec, w, rng);
    }
    return std::nullopt;
}

BinnedDensity estimate_diffusion_steady_density(const model::DiffusionSpec& spec,
                                                const SimConfig& config, double dt,
                                                const std::vector<double>& edges) {
    model::validate(spec);
    config.check();
    if (!(dt > 0.0)) throw ValidationError("estimate_diffusion_steady_density: dt must be > 0");
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
        throw ValidationError("estimate_diffusion_steady_density: edges must be sorted, >= 2");
    constexpr int kBatches = 20;
    const size_t bins = edges.size() - 1;
    std::vector<std::vector<double>> occupancy(kBatches, std::vector<double>(bins, 0.0));
    const double span = config.horizon - config.burn_in;
    const double batch_len = span / kBatches;

    Rng rng(config.seed, 0);
    DiffusionWalk w = initial_walk(spec, rng);
    while (w.t < config.horizon) {
        const double h = std::min({dt, w.next_switch - w.t, config.horizon - w.t});
        const double beta = w.env == 1 ? spec.lambda1s - spec.mu1s : spec.lambda2s - spec.mu2s;
        const double omega2 = w.env == 1 ? spec.omega1_sq : spec.omega2_sq;
        if (w.t >= config.burn_in) {
            const auto it = std::upper_bound(edges.begin(), edges.end(), w.x);
            if (it != edges.begin() && it != edges.end()) {
                const size_t bin = static_cast<size_t>(it - edges.begin()) - 1;
                const int b = std::min(kBatches - 1,
                                       static_cast<int>((w.t - config.burn_in) / batch_len));
                occupancy[static_cast<size_t>(b)][bin] += h;
            }
        }
        w.x = std::abs(w.x + beta * h + std::sqrt(omega2 * h) * rng.normal());
        w.t += h;
        maybe_switch(spec, w, rng);
    }

    BinnedDensity out;
    out.edges = edges;
    out.density.resize(bins);
    for (size_t bin = 0; bin < bins; ++bin) {
        const double width = edges[bin + 1] - edges[bin];
        std::vector<double> means(kBatches);
        double m = 0.0;
        for (int b = 0; b < kBatches; ++b) {
            means[static_cast<size_t>(b)] =
                occupancy[static_cast<size_t>(b)][bin] / (batch_len * width);
            m += means[static_cast<size_t>(b)];
        }
        m /= kBatches;
        out.density[bin] = {m, batch_mean_sd(means, m), kBatches};
    }
    return out;
}

FirstEmptyingStats estimate_diffusion_fpt(const model::DiffusionSpec& spec,
                                          const SimConfig& config, double dt) {
    const long reps = config.replications;
    std::vector<double> sample(static_cast<size_t>(reps));
    for_each_replication(reps, config.worker_hint, [&](long r) {
        const auto hit = simulate_diffusion_first_hit(spec, config, dt,
                                                      static_cast<std::uint64_t>(r));
        sample[static_cast<size_t>(r)] = hit ? *hit : -1.0;
    });
    FirstEmptyingStats stats;
    double sum = 0.0;
    for (double v : sample)
        if (v >= 0.0) {
            ++stats.completed;
            sum += v;
        }
    const double n = static_cast<double>(reps);
    const double frac = static_cast<double>(stats.completed) / n;
    stats.completion = {frac, std::sqrt(frac * (1.0 - frac) / n), reps};
    stats.censored_fraction = 1.0 - frac;
    if (stats.completed > 1) {
        const double mean = sum / static_cast<double>(stats.completed);
        double ss = 0.0;
        for (double v : sample)
            if (v >= 0.0) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(stats.completed - 1));
        stats.mean_uncensored = {mean, sd / std::sqrt(static_cast<double>(stats.completed)),
                                 stats.completed};
    }
    return stats;
}

} // namespace switchq::simulator
