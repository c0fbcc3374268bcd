#pragma once

#include "switchq/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace switchq::simulator {

struct SimConfig {
    long replications = 1;
    double horizon = 0.0;
    double burn_in = 0.0;
    std::uint64_t seed = 1;
    int worker_hint = 1;

    void check() const;
};

/// Point estimate with its standard error; the simulator's universal return
/// value.  count is the number of contributing units (replications, batches
/// or uncensored samples depending on the estimator).
struct EmpiricalEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long count = 0;
};

enum class EventKind { Arrival, Service, Switch };

struct PathEvent {
    double time;
    EventKind kind;
    long level;
    int env;
};

/// Independent per-replication random stream: xoshiro256++ seeded by
/// splitmix64 expansion of (seed, stream).  Identical (seed, stream) gives
/// an identical stream on every platform; scheduling cannot perturb it.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream);
    std::uint64_t next_u64();
    double uniform();               // [0, 1)
    double exponential(double rate);
    double normal();
private:
    std::uint64_t s_[4];
};

/// One exponential holding time of the CTMC at state (level, env); exposed
/// so tests can check the sampled distribution directly.
double holding_time(const model::QueueSpec& spec, long level, int env, Rng& rng);

/// Exact event-driven CTMC path up to config.horizon.  The initial state is
/// (j, 1) with probability p, (j, 2) with probability 1 - p.
std::vector<PathEvent> simulate_ctmc_path(const model::QueueSpec& spec, const SimConfig& config,
                                          std::uint64_t replication_index);

using JointPmfEstimate = std::map<std::pair<long, int>, EmpiricalEstimate>;

/// Replication frequencies of {N(t) = n, E(t) = i}; binomial standard
/// errors.
JointPmfEstimate estimate_transient_pmf(const model::QueueSpec& spec, double t,
                                        const SimConfig& config);

/// Time-average occupancies over [burn_in, horizon] on one long path, with
/// batch-means standard errors (20 batches).  Warns on stderr when burn_in
/// looks too short for the spec's relaxation scale.
JointPmfEstimate estimate_steady_pmf(const model::QueueSpec& spec, const SimConfig& config);

struct FirstEmptyingStats {
    EmpiricalEstimate completion;      // fraction of paths that emptied
    EmpiricalEstimate mean_uncensored; // mean first-emptying time of those
    double censored_fraction = 0.0;
    long completed = 0;
};

/// Per-replication first time the level hits 0, censored at the horizon.
/// When eta2 = 0 and lambda2 > mu2, paths that climb beyond the point of no
/// return (ruin probability < 1e-12) are censored early.
FirstEmptyingStats sample_first_emptying(const model::QueueSpec& spec, const SimConfig& config);

/// Euler walk of the switching reflected Wiener process; terminal position
/// at the horizon.
double simulate_diffusion_terminal(const model::DiffusionSpec& spec, const SimConfig& config,
                                   double dt, std::uint64_t replication_index);

/// First hit of 0 (Euler steps, Brownian-bridge crossing test per step);
/// nullopt when censored at the horizon.
std::optional<double> simulate_diffusion_first_hit(const model::DiffusionSpec& spec,
                                                   const SimConfig& config, double dt,
                                                   std::uint64_t replication_index);

struct BinnedDensity {
    std::vector<double> edges;               // size m+1
    std::vector<EmpiricalEstimate> density;  // size m, occupancy / (time * width)
};

/// Stationary density histogram from one long path, batch-means errors.
BinnedDensity estimate_diffusion_steady_density(const model::DiffusionSpec& spec,
                                                const SimConfig& config, double dt,
                                                const std::vector<double>& edges);

/// First-hit-time statistics across replications.
FirstEmptyingStats estimate_diffusion_fpt(const model::DiffusionSpec& spec,
                                          const SimConfig& config, double dt);

} // namespace switchq::simulator
