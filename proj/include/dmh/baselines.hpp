#pragma once

// The three comparison schedulers, evaluated semi-analytically per channel
// realization: naive static HARQ-IR (equal sub-frames, one-shot IR bound),
// optimal static HARQ-IR (jointly optimized sub-frames, same bound), and
// listening-based cooperative ARQ (fixed slot grid, forward inheritance only).

#include <vector>

#include "dmh/channel.hpp"
#include "dmh/fbl.hpp"

namespace dmh::baselines {

struct StaticAllocation {
  std::vector<double> per_hop_blocklengths;  // real-valued, ideal-codebook bound
  std::vector<double> per_hop_error;
  double e2e_success = 0.0;
  double e2e_loss = 1.0;  // computed in log space; exact for tiny losses
};

/// Equal time split: m_i = (T_max/I - T_l)/T_b for every hop, one decode per
/// hop under the ideal-IR one-shot equivalence.
StaticAllocation naive_static_ir(const channel::ChainRealization& chain,
                                 const fbl::LinkConfig& cfg);

/// Jointly optimized real-valued sub-frame lengths maximizing
/// sum_i log(1 - eps_i(m_i)) under the total tick budget, with realized
/// per-hop gains. Solved by Lagrange bisection on the separable concave
/// program; budget slack below 1e-9 ticks.
StaticAllocation optimal_static_ir(const channel::ChainRealization& chain,
                                   const fbl::LinkConfig& cfg);

/// Delivery probability of listening-based cooperative ARQ on a fixed grid of
/// 2I slots of length T_max/(2I): hop i may (re)transmit in slots up to its own
/// window end 2i, inheriting any slots its predecessors left unused.
double listening_coop_arq(const channel::ChainRealization& chain, const fbl::LinkConfig& cfg);

/// Loss complement of listening_coop_arq, exact for tiny losses.
double listening_coop_arq_loss(const channel::ChainRealization& chain,
                               const fbl::LinkConfig& cfg);

// Fixed per-attempt parameters of the listening protocol (exposed for the
// stochastic-simulation oracle in tests and for bernoulli campaign mode).
struct ListeningSlots {
  int slot_count = 0;        // 2I
  int blocklength = 0;       // floor((T_max/(2I) - T_l)/T_b)
  std::vector<double> per_hop_error;
};
ListeningSlots listening_slots(const channel::ChainRealization& chain, const fbl::LinkConfig& cfg);

}  // namespace dmh::baselines
