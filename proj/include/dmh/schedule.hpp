#pragma once

// System-state lattice and the binary schedule tree: a node transmits with
// blocklength n; the left edge is the HARQ-failure branch (retry on the same
// hop), the right edge is the success branch (advance one hop). Leaves carry
// n == 0 and are either successful completions (no hops remaining) or
// timeouts (remaining time below the feasibility threshold).

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dmh/channel.hpp"
#include "dmh/fbl.hpp"

namespace dmh::schedule {

// All times in integer ticks of the bit-time T_b.
struct SystemState {
  int remaining_ticks = 0;   // t_s
  int remaining_hops = 0;    // i_s
  int failed_attempts = 0;   // k_s, failures on the current hop
  int spent_tx_ticks = 0;    // tau_s, transmit ticks burned by those failures

  bool operator==(const SystemState&) const = default;
};

struct SystemStateHash {
  std::size_t operator()(const SystemState& s) const noexcept;
};

/// Failure transition: (t - n - T_l, i, k + 1, tau + n). Requires n >= 1 and
/// enough remaining ticks for the attempt plus its feedback delay.
SystemState left_child(const SystemState& s, int n, int tl_ticks);

/// Success transition: (t - n - T_l, i - 1, 0, 0).
SystemState right_child(const SystemState& s, int n, int tl_ticks);

struct TreeNode;
using ScheduleTree = std::shared_ptr<const TreeNode>;

struct TreeNode {
  SystemState state;
  int blocklength = 0;     // 0 marks a leaf
  double attempt_per = 0;  // planning PER of this attempt (0 at leaves)
  ScheduleTree left;       // failure branch
  ScheduleTree right;      // success branch

  bool is_leaf() const { return blocklength == 0; }
  bool is_success_leaf() const { return is_leaf() && state.remaining_hops == 0; }
};

// Error model used when evaluating a tree: per of an attempt with blocklength n
// at a node with `hops_remaining` hops still to cross.
using PerModel = std::function<double(int hops_remaining, int n)>;

/// Recursive utility: empty/timeout -> 0, success leaf -> 1, otherwise
/// eps * xi(left) + (1 - eps) * xi(right). Shared sub-states evaluated once.
double tree_utility(const ScheduleTree& tree, const PerModel& per_model);

/// Same, with the attempt PER taken from the realized chain: a node with i hops
/// remaining transmits over chain hop I+1-i.
double tree_utility(const ScheduleTree& tree, const channel::ChainRealization& chain,
                    const fbl::LinkConfig& cfg);

// Feasibility data needed to validate a tree without re-solving it.
struct TreeBounds {
  int tl_ticks = 0;
  int root_hops = 0;            // layer whose attempts use local (perfect) CSI
  int local_min_blocklength = 0;
  int succ_min_blocklength = 0;

  int min_blocklength_at(int hops_remaining) const;
  int termination_threshold(int hops_remaining) const;
  int max_blocklength_at(int ticks, int hops_remaining) const;
};

/// Structural validation: child-state arithmetic, blocklength bounds, and the
/// leaf conditions. Returns human-readable violations; empty means valid.
std::vector<std::string> validate_tree(const ScheduleTree& tree, const TreeBounds& bounds);

/// Number of distinct nodes in the (DAG-shared) tree.
std::size_t tree_node_count(const ScheduleTree& tree);

/// Versioned JSON export; nodes keyed by their state 4-tuple.
std::string tree_to_json(const ScheduleTree& tree);

}  // namespace dmh::schedule
