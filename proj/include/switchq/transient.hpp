#pragma once

#include "switchq/model.hpp"
#include "switchq/numerics.hpp"

#include <vector>

namespace switchq::transient {

/// Plain M/M/1 queue; the per-environment building block of the switching
/// model.
struct MM1Kernel {
    double lambda;
    double mu;
};

/// Transition probability p_{j,n}(t) of the M/M/1 queue.  t = 0 returns the
/// Kronecker delta exactly.  Uses the single-series form when j = 0 and the
/// three-term Bessel form otherwise, both evaluated with scaled Bessel
/// functions so no intermediate overflows for large t.
double mm1_transition(const MM1Kernel& kernel, long j, long n, double t,
                      const numerics::SeriesSettings& series = {});

/// p_{j,n}(t) for n = 0..n_max from a single Bessel pass.
std::vector<double> mm1_transition_row(const MM1Kernel& kernel, long j, long n_max, double t,
                                       const numerics::SeriesSettings& series = {});

/// p_{k,n}(t) for k = 0..k_max (all starting states into a fixed target n),
/// obtained from mm1_transition_row through the reversal identity
/// p_{k,n}(t) = (lambda/mu)^{n-k} p_{n,k}(t).
std::vector<double> mm1_transition_row_into(const MM1Kernel& kernel, long n, long k_max, double t,
                                            const numerics::SeriesSettings& series = {});

/// The two published forms, exposed for cross-checking: the general
/// three-term expression at any j, and the j = 0 series form.
double mm1_transition_general(const MM1Kernel& kernel, long j, long n, double t,
                              const numerics::SeriesSettings& series = {});
double mm1_transition_from_empty(const MM1Kernel& kernel, long n, double t,
                                 const numerics::SeriesSettings& series = {});

/// Joint transient probability p_{n,i}(t) of the switching model, available
/// when eta2 = 0 (for eta1 = 0 relabel via model::swap_environments and flip
/// the environment index).  Throws RegimeError when eta2 != 0.
double joint_transient(const model::QueueSpec& spec, long n, int env, double t,
                       const numerics::QuadratureSettings& quad = {},
                       const numerics::SeriesSettings& series = {});

} // namespace switchq::transient
