#pragma once

// Monte-Carlo campaign engine: paired (common-random-number) evaluation of the
// dynamic scheduler against the static baselines, per sweep axis point, with
// deterministic results independent of the worker count.

#include <cstdint>
#include <string>
#include <vector>

#include "dmh/channel.hpp"
#include "dmh/fbl.hpp"

namespace dmh::sim {

enum class Method { dmh, naive_static, optimal_static, listening };
enum class EvalMode { exact, bernoulli };
enum class Axis { frame_length, hop_count, feedback_delay, mean_gain };

const char* method_name(Method m);
const char* mode_name(EvalMode m);
const char* axis_name(Axis a);
Method method_from_name(const std::string& name);
EvalMode mode_from_name(const std::string& name);
Axis axis_from_name(const std::string& name);

std::vector<Method> all_methods();

struct CampaignSpec {
  fbl::LinkConfig base;
  fbl::FadingDistribution fading;
  int hop_count = 4;
  Axis axis = Axis::frame_length;
  std::vector<double> axis_values;  // seconds / hop count / seconds / dB
  std::vector<Method> methods = all_methods();
  int mc_runs = 10'000;
  std::uint64_t seed = 1;
  EvalMode mode = EvalMode::exact;
  int threads = 0;  // 0 -> hardware concurrency
};

struct PointStats {
  double mean_loss = 1.0;
  double stderr_loss = 0.0;
  int runs = 0;
  bool infeasible = false;  // method cannot run at this point; loss pinned to 1
};

struct CampaignResult {
  std::string axis;
  std::vector<double> axis_values;
  std::vector<Method> methods;
  std::vector<std::vector<PointStats>> cells;  // [axis index][method index]
  EvalMode mode = EvalMode::exact;
  std::uint64_t seed = 0;
  int runs = 0;
  std::string rng_algorithm;
  std::string tool_version;
};

/// Apply one axis value to the base configuration (returns the adjusted config
/// and hop count). Mean gain is given in dB, times in seconds.
std::pair<fbl::LinkConfig, int> apply_axis(const fbl::LinkConfig& base, int base_hops, Axis axis,
                                           double value);

/// Evaluate every requested method on mc_runs common channel realizations.
std::vector<PointStats> run_point(const fbl::LinkConfig& cfg,
                                  const fbl::FadingDistribution& fading,
                                  const std::vector<Method>& methods, int hop_count, int mc_runs,
                                  std::uint64_t seed, EvalMode mode, int threads = 0);

CampaignResult run_sweep(const CampaignSpec& spec);

}  // namespace dmh::sim
