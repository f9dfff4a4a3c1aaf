#include <doctest.h>

#include <json.hpp>

#include "dmh/dp.hpp"
#include "dmh/schedule.hpp"

using namespace dmh;
using schedule::ScheduleTree;
using schedule::SystemState;
using schedule::TreeNode;

namespace {
const fbl::LinkConfig kDefaults = fbl::LinkConfig::defaults();
}

TEST_CASE("state transitions follow the branch equations") {
  CHECK(schedule::left_child({500, 4, 0, 0}, 100, 6) == SystemState{394, 4, 1, 100});
  CHECK(schedule::left_child({40, 1, 2, 60}, 10, 6) == SystemState{24, 1, 3, 70});
  CHECK_THROWS_AS(schedule::left_child({10, 2, 0, 0}, 10, 6), TransitionError);

  CHECK(schedule::right_child({500, 4, 0, 0}, 100, 6) == SystemState{394, 3, 0, 0});
  CHECK(schedule::right_child({200, 1, 1, 50}, 194, 6) == SystemState{0, 0, 0, 0});
  CHECK_THROWS_AS(schedule::right_child({10, 2, 0, 0}, 10, 6), TransitionError);
  CHECK_THROWS_AS(schedule::left_child({100, 2, 0, 0}, 0, 6), TransitionError);
}

TEST_CASE("tree utility terminal cases") {
  const auto half = [](int, int) { return 0.5; };

  CHECK(schedule::tree_utility(nullptr, half) == 0.0);

  auto success = std::make_shared<TreeNode>();
  success->state = SystemState{10, 0, 0, 0};
  CHECK(schedule::tree_utility(success, half) == 1.0);

  auto timeout = std::make_shared<TreeNode>();
  timeout->state = SystemState{3, 2, 1, 40};
  CHECK(schedule::tree_utility(timeout, half) == 0.0);

  // Depth-1 last-hop tree with eps = 0.5: failure branch times out, success
  // branch completes, so the utility is exactly one half.
  auto root = std::make_shared<TreeNode>();
  root->state = SystemState{20, 1, 0, 0};
  root->blocklength = 14;
  auto fail = std::make_shared<TreeNode>();
  fail->state = schedule::left_child(root->state, 14, 6);
  auto ok = std::make_shared<TreeNode>();
  ok->state = schedule::right_child(root->state, 14, 6);
  root->left = fail;
  root->right = ok;
  CHECK(schedule::tree_utility(root, half) == 0.5);
}

TEST_CASE("generated tree validates cleanly; corrupted trees do not") {
  const auto fading = fbl::FadingDistribution::rician(0.5, 1.0);
  const auto res = dp::opt_schedule(SystemState{200, 2, 0, 0}, 1.0, fading, kDefaults);

  schedule::TreeBounds bounds;
  bounds.tl_ticks = kDefaults.feedback_delay_ticks();
  bounds.root_hops = 2;
  bounds.local_min_blocklength =
      fbl::min_blocklength(fbl::HopChannel::from_gain(1.0, kDefaults), 16, 0.5);
  bounds.succ_min_blocklength = fbl::min_blocklength_statistical(fading, kDefaults);
  CHECK(schedule::validate_tree(res.tree, bounds).empty());

  // Left-child ticks off by one.
  auto broken = std::make_shared<TreeNode>(*res.tree);
  auto bad_left = std::make_shared<TreeNode>(*res.tree->left);
  bad_left->state.remaining_ticks -= 1;
  broken->left = bad_left;
  const auto violations = schedule::validate_tree(broken, bounds);
  CHECK(!violations.empty());
  CHECK(violations.front().find("left-child") != std::string::npos);

  // Blocklength below the layer minimum.
  auto weak = std::make_shared<TreeNode>(*res.tree);
  weak->blocklength = bounds.local_min_blocklength - 1;
  bool found = false;
  for (const auto& v : schedule::validate_tree(weak, bounds))
    found = found || v.find("below the minimum") != std::string::npos;
  CHECK(found);
}

TEST_CASE("tick conservation along every root-to-leaf path") {
  const auto fading = fbl::FadingDistribution::rician(0.5, 1.0);
  const auto res = dp::opt_schedule(SystemState{300, 3, 0, 0}, 0.8, fading, kDefaults);
  const int tl = kDefaults.feedback_delay_ticks();

  struct Walk {
    int tl;
    int root_ticks;
    void visit(const TreeNode* node, int spent) {
      if (node == nullptr) return;
      if (node->is_leaf()) {
        CHECK(spent + node->state.remaining_ticks == root_ticks);
        return;
      }
      visit(node->left.get(), spent + node->blocklength + tl);
      visit(node->right.get(), spent + node->blocklength + tl);
    }
  } walk{tl, 300};
  walk.visit(res.tree.get(), 0);

  // Utility of a valid tree is a probability under any error model.
  for (double eps : {0.0, 0.2, 0.9, 1.0}) {
    const double u = schedule::tree_utility(res.tree, [eps](int, int) { return eps; });
    CHECK(u >= 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("tree JSON export is schema-stable") {
  const auto fading = fbl::FadingDistribution::point_mass(1.0);
  const auto res = dp::opt_schedule(SystemState{60, 1, 0, 0}, 1.0, fading, kDefaults);
  const auto doc = nlohmann::json::parse(schedule::tree_to_json(res.tree));
  CHECK(doc.at("schema_version") == 1);
  CHECK(doc.at("kind") == "schedule_tree");
  const std::string root_key = doc.at("root").get<std::string>();
  CHECK(root_key == "t60_i1_k0_x0");
  const auto& node = doc.at("nodes").at(root_key);
  CHECK(node.at("n") == 54);  // one-shot: 60 - 6 feedback ticks
  CHECK(node.contains("per"));
  CHECK(node.at("right") == "t0_i0_k0_x0");
  CHECK(doc.at("nodes").size() == schedule::tree_node_count(res.tree));
}
