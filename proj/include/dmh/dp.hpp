#pragma once

// Integer dynamic program for the blocklength-allocation policy, hop-by-hop
// execution with per-node CSI update, and the semi-analytic end-to-end
// reliability of that execution on a fixed channel realization.
//
// Policies are memoized by (remaining ticks, remaining hops) only; the error
// model of an attempt does not depend on the failure history, so the optimal
// decision cannot either. Tables store the packet LOSS (1 - utility): the
// Bellman recursion is linear in the leaf values, so minimizing loss is the
// same program as maximizing utility, but near-certain-delivery states keep
// full double resolution instead of saturating at utility 1.

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "dmh/channel.hpp"
#include "dmh/fbl.hpp"
#include "dmh/schedule.hpp"

namespace dmh::dp {

/// Process-wide count of DP state evaluations, for asserting that LUT-driven
/// execution performs table lookups only.
std::uint64_t states_evaluated();

enum class TableKind { local, successor };

struct PolicyEntry {
  double loss = 1.0;
  std::int32_t blocklength = 0;

  double utility() const { return 1.0 - loss; }
  bool operator==(const PolicyEntry&) const = default;
};

// Dense (ticks, hops) -> (loss, blocklength) table. A successor table covers
// hop layers 1..last_hop; a local table covers the single layer of the node
// that solved it.
class PolicyTable {
 public:
  PolicyTable() = default;
  PolicyTable(TableKind kind, int first_hop, int last_hop, int max_ticks, int tl_ticks,
              std::uint64_t fingerprint);

  const PolicyEntry& at(int ticks, int hops) const;
  PolicyEntry& at_mut(int ticks, int hops);
  bool covers(int ticks, int hops) const;

  TableKind kind = TableKind::successor;
  int first_hop = 1;
  int last_hop = 0;
  int max_ticks = -1;
  int tl_ticks = 0;
  int min_attempt_blocklength = 0;  // n_min of the error profile this table was solved with
  std::uint64_t fingerprint = 0;
  std::vector<std::vector<PolicyEntry>> layers;  // [hop - first_hop][ticks]
};

// Per-attempt error profile on the integer blocklength lattice: eps[n] for
// n = 1..max_ticks (eps[0] is a sentinel 1.0), plus the minimum blocklength.
struct ErrorProfile {
  std::vector<double> eps;
  int min_blocklength = 0;
};

ErrorProfile make_local_profile(const fbl::HopChannel& ch, const fbl::LinkConfig& cfg,
                                int max_ticks);
ErrorProfile make_successor_profile(const fbl::FadingDistribution& fading,
                                    const fbl::LinkConfig& cfg, int max_ticks);

/// Fingerprints tie a persisted table back to the inputs that produced it.
std::uint64_t fingerprint(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading);
std::uint64_t fingerprint(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                          double local_gain);

/// Statistical-CSI table for hop layers 1..max_hops and 0..max_ticks.
PolicyTable solve_successor(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                            int max_hops, int max_ticks);

/// Perfect-local-CSI table for one node at layer `hops`. The failure branch
/// stays in this table; the success branch reads succ at layer hops-1 (succ is
/// ignored for hops == 1).
PolicyTable solve_local(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                        const fbl::HopChannel& local, int hops, int max_ticks,
                        const PolicyTable& succ, const ErrorProfile* local_profile = nullptr);

// Memoization context for the spec-level best_local / best_succ entry points.
struct SolveCache {
  std::shared_ptr<const PolicyTable> succ;
  std::shared_ptr<const PolicyTable> local;  // for the last queried (gain, hops)
  std::uint64_t local_key = 0;
};

/// (utility, optimal blocklength) for a node holding perfect CSI of its own hop
/// and statistical CSI of the `hops - 1` successors.
std::pair<double, int> best_local(int ticks, int hops, const fbl::HopChannel& local,
                                  const fbl::FadingDistribution& fading,
                                  const fbl::LinkConfig& cfg, SolveCache& cache);

/// (utility, optimal blocklength) under statistical CSI for every hop.
std::pair<double, int> best_succ(int ticks, int hops, const fbl::FadingDistribution& fading,
                                 const fbl::LinkConfig& cfg, SolveCache& cache);

// Everything needed to execute one realization: the shared successor table and
// each node's local layer (node h, 0-based in chain order, transmits with
// I - h hops remaining), plus the true per-attempt error profiles.
struct ChainPolicies {
  std::shared_ptr<const PolicyTable> succ;
  std::vector<PolicyTable> node_local;     // node_local[h] = layer I-h of node h
  std::vector<ErrorProfile> node_profile;  // node_profile[h] = true eps of hop h+1
  int frame_ticks = 0;
  int tl_ticks = 0;
};

ChainPolicies solve_chain_policies(const channel::ChainRealization& chain,
                                   const fbl::FadingDistribution& fading,
                                   const fbl::LinkConfig& cfg);
ChainPolicies solve_chain_policies(const channel::ChainRealization& chain,
                                   const fbl::FadingDistribution& fading,
                                   const fbl::LinkConfig& cfg,
                                   std::shared_ptr<const PolicyTable> shared_succ);

/// Probability that hop-by-hop execution with per-node re-planning misses the
/// deadline, given this realization; attempt outcomes use the true per.
double exact_e2e_loss(const ChainPolicies& policies, const channel::ChainRealization& chain);
double exact_e2e_loss(const channel::ChainRealization& chain,
                      const fbl::FadingDistribution& fading, const fbl::LinkConfig& cfg);

/// 1 - exact_e2e_loss.
double exact_e2e_reliability(const channel::ChainRealization& chain,
                             const fbl::FadingDistribution& fading, const fbl::LinkConfig& cfg);

struct AttemptRecord {
  int hop_index = 0;  // 1-based chain position of the transmitting hop
  schedule::SystemState before;
  int blocklength = 0;
  double attempt_per = 0.0;
  bool success = false;
};

struct HopOutcomeLog {
  std::vector<AttemptRecord> attempts;
  bool delivered = false;
  schedule::SystemState final_state;

  bool operator==(const HopOutcomeLog&) const;
};

/// One stochastic execution of the hop-by-hop protocol: each node follows its
/// own solved policy; Bernoulli decode outcomes are drawn from the true per.
HopOutcomeLog run_hop_by_hop(const channel::ChainRealization& chain,
                             const fbl::FadingDistribution& fading, const fbl::LinkConfig& cfg,
                             channel::Rng& rng);

/// Same, driven entirely by pre-solved (or imported) tables: no DP runs.
HopOutcomeLog run_hop_by_hop(const channel::ChainRealization& chain,
                             const ChainPolicies& policies, channel::Rng& rng);

struct OptScheduleResult {
  schedule::ScheduleTree tree;
  PolicyTable local;
  PolicyTable succ;
};

// Thrown when materializing the schedule tree would exceed the node cap; the
// solved tables are still delivered on the exception.
struct TreeCapExceeded : std::runtime_error {
  TreeCapExceeded(std::string msg, PolicyTable local_, PolicyTable succ_)
      : std::runtime_error(std::move(msg)), local(std::move(local_)), succ(std::move(succ_)) {}
  PolicyTable local;
  PolicyTable succ;
};

/// Solve both tables for a node seeing `local_gain` on its own hop, then
/// materialize the planned schedule tree (shared sub-states appear once).
OptScheduleResult opt_schedule(const schedule::SystemState& root, double local_gain,
                               const fbl::FadingDistribution& fading, const fbl::LinkConfig& cfg,
                               std::size_t node_cap = 1'000'000);

}  // namespace dmh::dp
