#include "dmh/schedule.hpp"

#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace dmh::schedule {

namespace {

constexpr int kTreeSchemaVersion = 1;

std::string state_key(const SystemState& s) {
  return "t" + std::to_string(s.remaining_ticks) + "_i" + std::to_string(s.remaining_hops) +
         "_k" + std::to_string(s.failed_attempts) + "_x" + std::to_string(s.spent_tx_ticks);
}

}  // namespace

std::size_t SystemStateHash::operator()(const SystemState& s) const noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (int v : {s.remaining_ticks, s.remaining_hops, s.failed_attempts, s.spent_tx_ticks}) {
    h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
    h *= 0x100000001B3ULL;
  }
  return static_cast<std::size_t>(h);
}

SystemState left_child(const SystemState& s, int n, int tl_ticks) {
  if (n < 1) throw TransitionError("left_child: blocklength must be >= 1");
  if (s.remaining_ticks < n + tl_ticks)
    throw TransitionError("left_child: insufficient ticks for attempt plus feedback");
  return SystemState{s.remaining_ticks - n - tl_ticks, s.remaining_hops, s.failed_attempts + 1,
                     s.spent_tx_ticks + n};
}

SystemState right_child(const SystemState& s, int n, int tl_ticks) {
  if (n < 1) throw TransitionError("right_child: blocklength must be >= 1");
  if (s.remaining_ticks < n + tl_ticks)
    throw TransitionError("right_child: insufficient ticks for attempt plus feedback");
  if (s.remaining_hops < 1) throw TransitionError("right_child: no hop left to advance");
  return SystemState{s.remaining_ticks - n - tl_ticks, s.remaining_hops - 1, 0, 0};
}

namespace {

double utility_rec(const TreeNode* node, const PerModel& per_model,
                   std::unordered_map<const TreeNode*, double>& memo) {
  if (node == nullptr) return 0.0;
  if (node->is_leaf()) return node->state.remaining_hops == 0 ? 1.0 : 0.0;
  const auto it = memo.find(node);
  if (it != memo.end()) return it->second;
  const double eps = per_model(node->state.remaining_hops, node->blocklength);
  const double u = eps * utility_rec(node->left.get(), per_model, memo) +
                   (1.0 - eps) * utility_rec(node->right.get(), per_model, memo);
  memo.emplace(node, u);
  return u;
}

}  // namespace

double tree_utility(const ScheduleTree& tree, const PerModel& per_model) {
  std::unordered_map<const TreeNode*, double> memo;
  return utility_rec(tree.get(), per_model, memo);
}

double tree_utility(const ScheduleTree& tree, const channel::ChainRealization& chain,
                    const fbl::LinkConfig& cfg) {
  const int hops = chain.hop_count();
  PerModel realized = [&](int hops_remaining, int n) {
    if (hops_remaining < 1 || hops_remaining > hops)
      throw std::invalid_argument("tree_utility: node hop count outside the chain");
    const fbl::HopChannel& ch = chain.hops[hops - hops_remaining];
    return fbl::per(ch, n, cfg.payload_bits);
  };
  return tree_utility(tree, realized);
}

int TreeBounds::min_blocklength_at(int hops_remaining) const {
  return hops_remaining == root_hops ? local_min_blocklength : succ_min_blocklength;
}

int TreeBounds::termination_threshold(int hops_remaining) const {
  return (hops_remaining - 1) * succ_min_blocklength + min_blocklength_at(hops_remaining) +
         hops_remaining * tl_ticks;
}

int TreeBounds::max_blocklength_at(int ticks, int hops_remaining) const {
  return ticks - tl_ticks - (hops_remaining - 1) * (succ_min_blocklength + tl_ticks);
}

namespace {

void validate_rec(const TreeNode* node, const TreeBounds& b,
                  std::unordered_set<const TreeNode*>& seen, std::vector<std::string>& out) {
  if (node == nullptr || seen.count(node)) return;
  seen.insert(node);
  const SystemState& s = node->state;
  const std::string at = " at node " + state_key(s);

  if (s.remaining_hops == 0) {
    if (!node->is_leaf()) out.push_back("success state carries a transmission" + at);
    return;
  }
  if (node->is_leaf()) {
    if (s.remaining_ticks >= b.termination_threshold(s.remaining_hops))
      out.push_back("leaf with sufficient remaining time" + at);
    return;
  }
  if (s.remaining_ticks < b.termination_threshold(s.remaining_hops))
    out.push_back("transmission in a termination state" + at);
  const int n = node->blocklength;
  if (n < b.min_blocklength_at(s.remaining_hops))
    out.push_back("blocklength below the minimum" + at);
  if (n > b.max_blocklength_at(s.remaining_ticks, s.remaining_hops))
    out.push_back("blocklength above the feasibility bound" + at);

  if (!node->left || !node->right) {
    out.push_back("internal node missing a branch" + at);
    return;
  }
  const SystemState want_left{s.remaining_ticks - n - b.tl_ticks, s.remaining_hops,
                              s.failed_attempts + 1, s.spent_tx_ticks + n};
  const SystemState want_right{s.remaining_ticks - n - b.tl_ticks, s.remaining_hops - 1, 0, 0};
  if (!(node->left->state == want_left))
    out.push_back("left-child state mismatch" + at);
  if (!(node->right->state == want_right))
    out.push_back("right-child state mismatch" + at);
  validate_rec(node->left.get(), b, seen, out);
  validate_rec(node->right.get(), b, seen, out);
}

void count_rec(const TreeNode* node, std::unordered_set<const TreeNode*>& seen) {
  if (node == nullptr || seen.count(node)) return;
  seen.insert(node);
  count_rec(node->left.get(), seen);
  count_rec(node->right.get(), seen);
}

}  // namespace

std::vector<std::string> validate_tree(const ScheduleTree& tree, const TreeBounds& bounds) {
  std::vector<std::string> out;
  std::unordered_set<const TreeNode*> seen;
  validate_rec(tree.get(), bounds, seen, out);
  return out;
}

std::size_t tree_node_count(const ScheduleTree& tree) {
  std::unordered_set<const TreeNode*> seen;
  count_rec(tree.get(), seen);
  return seen.size();
}

std::string tree_to_json(const ScheduleTree& tree) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kTreeSchemaVersion;
  doc["kind"] = "schedule_tree";
  doc["root"] = tree ? state_key(tree->state) : nullptr;
  nlohmann::ordered_json nodes = nlohmann::ordered_json::object();
  std::unordered_set<const TreeNode*> seen;
  std::vector<const TreeNode*> stack;
  if (tree) stack.push_back(tree.get());
  while (!stack.empty()) {
    const TreeNode* node = stack.back();
    stack.pop_back();
    if (seen.count(node)) continue;
    seen.insert(node);
    nlohmann::ordered_json rec;
    rec["n"] = node->blocklength;
    rec["per"] = node->attempt_per;
    rec["left"] = node->left ? nlohmann::ordered_json(state_key(node->left->state))
                             : nlohmann::ordered_json(nullptr);
    rec["right"] = node->right ? nlohmann::ordered_json(state_key(node->right->state))
                               : nlohmann::ordered_json(nullptr);
    nodes[state_key(node->state)] = std::move(rec);
    if (node->left) stack.push_back(node->left.get());
    if (node->right) stack.push_back(node->right.get());
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2);
}

}  // namespace dmh::schedule
