#include "dmh/sim.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <thread>

#include "dmh/baselines.hpp"
#include "dmh/dp.hpp"
#include "dmh/version.hpp"

namespace dmh::sim {

const char* method_name(Method m) {
  switch (m) {
    case Method::dmh: return "dmh";
    case Method::naive_static: return "naive_static";
    case Method::optimal_static: return "optimal_static";
    case Method::listening: return "listening";
  }
  return "?";
}

const char* mode_name(EvalMode m) { return m == EvalMode::exact ? "exact" : "bernoulli"; }

const char* axis_name(Axis a) {
  switch (a) {
    case Axis::frame_length: return "frame_length";
    case Axis::hop_count: return "hop_count";
    case Axis::feedback_delay: return "feedback_delay";
    case Axis::mean_gain: return "mean_gain";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  for (Method m : all_methods())
    if (name == method_name(m)) return m;
  throw ConfigError("unknown method '" + name + "'");
}

EvalMode mode_from_name(const std::string& name) {
  if (name == "exact") return EvalMode::exact;
  if (name == "bernoulli") return EvalMode::bernoulli;
  throw ConfigError("unknown mode '" + name + "' (expected exact|bernoulli)");
}

Axis axis_from_name(const std::string& name) {
  for (Axis a : {Axis::frame_length, Axis::hop_count, Axis::feedback_delay, Axis::mean_gain})
    if (name == axis_name(a)) return a;
  throw ConfigError("unknown axis '" + name + "'");
}

std::vector<Method> all_methods() {
  return {Method::dmh, Method::naive_static, Method::optimal_static, Method::listening};
}

std::pair<fbl::LinkConfig, int> apply_axis(const fbl::LinkConfig& base, int base_hops, Axis axis,
                                           double value) {
  fbl::LinkConfig cfg = base;
  int hops = base_hops;
  switch (axis) {
    case Axis::frame_length: cfg.frame_length_s = value; break;
    case Axis::hop_count: hops = static_cast<int>(std::llround(value)); break;
    case Axis::feedback_delay: cfg.feedback_delay_s = value; break;
    case Axis::mean_gain: cfg.mean_gain_linear = std::pow(10.0, value / 10.0); break;
  }
  cfg.validate();
  if (hops < 1) throw ConfigError("hop_count must be >= 1");
  return {cfg, hops};
}

namespace {

// Outcome streams are salted per method so Bernoulli draws stay independent
// across methods while every method sees the same ChainRealization.
std::uint64_t outcome_stream(Method m) {
  return channel::kStreamOutcome + static_cast<std::uint64_t>(m) * 64;
}

double bernoulli_static_loss(const baselines::StaticAllocation& alloc, channel::Rng& rng) {
  for (double e : alloc.per_hop_error)
    if (rng.next_double() < e) return 1.0;
  return 0.0;
}

double bernoulli_listening_loss(const baselines::ListeningSlots& slots, channel::Rng& rng) {
  const int hops = static_cast<int>(slots.per_hop_error.size());
  int slot = 1;
  for (int h = 1; h <= hops;) {
    if (slot > 2 * h) return 1.0;  // window of hop h exhausted
    const bool ok = rng.next_double() >= slots.per_hop_error[h - 1];
    ++slot;
    if (ok) ++h;
  }
  return 0.0;
}

struct MethodPlan {
  Method method;
  bool infeasible = false;
};

}  // namespace

std::vector<PointStats> run_point(const fbl::LinkConfig& cfg,
                                  const fbl::FadingDistribution& fading,
                                  const std::vector<Method>& methods, int hop_count, int mc_runs,
                                  std::uint64_t seed, EvalMode mode, int threads) {
  cfg.validate();
  fading.validate();
  if (hop_count < 1) throw ConfigError("run_point: hop_count must be >= 1");
  if (mc_runs < 1) throw ConfigError("run_point: mc_runs must be >= 1");

  const int n_methods = static_cast<int>(methods.size());
  std::vector<MethodPlan> plans;
  plans.reserve(n_methods);
  // Config-level feasibility; an infeasible method scores loss 1 on every run.
  for (Method m : methods) {
    MethodPlan plan{m};
    if (m == Method::naive_static || m == Method::optimal_static) {
      plan.infeasible = !(cfg.frame_length_s / hop_count > cfg.feedback_delay_s);
    } else if (m == Method::listening) {
      const double slot_s = cfg.frame_length_s / (2.0 * hop_count);
      plan.infeasible = !(slot_s > cfg.feedback_delay_s) ||
                        (slot_s - cfg.feedback_delay_s) / cfg.bit_time_s() < 1.0;
    }
    plans.push_back(plan);
  }

  const bool need_dmh =
      std::find(methods.begin(), methods.end(), Method::dmh) != methods.end();
  std::shared_ptr<const dp::PolicyTable> shared_succ;
  if (need_dmh && hop_count >= 2)
    shared_succ = std::make_shared<dp::PolicyTable>(
        dp::solve_successor(cfg, fading, hop_count - 1, cfg.frame_ticks()));

  std::vector<std::vector<double>> losses(n_methods, std::vector<double>(mc_runs, 1.0));

  const auto worker = [&](int worker_id, int stride) {
    for (int r = worker_id; r < mc_runs; r += stride) {
      const channel::ChainRealization chain =
          channel::realize_chain(cfg, fading, hop_count, seed, r);
      for (int mi = 0; mi < n_methods; ++mi) {
        const MethodPlan& plan = plans[mi];
        if (plan.infeasible) continue;  // stays at loss 1
        double loss = 1.0;
        switch (plan.method) {
          case Method::dmh: {
            const dp::ChainPolicies pol =
                dp::solve_chain_policies(chain, fading, cfg, shared_succ);
            if (mode == EvalMode::exact) {
              loss = dp::exact_e2e_loss(pol, chain);
            } else {
              channel::Rng rng(seed, r, outcome_stream(plan.method));
              loss = dp::run_hop_by_hop(chain, pol, rng).delivered ? 0.0 : 1.0;
            }
            break;
          }
          case Method::naive_static: {
            const auto alloc = baselines::naive_static_ir(chain, cfg);
            if (mode == EvalMode::exact) {
              loss = alloc.e2e_loss;
            } else {
              channel::Rng rng(seed, r, outcome_stream(plan.method));
              loss = bernoulli_static_loss(alloc, rng);
            }
            break;
          }
          case Method::optimal_static: {
            const auto alloc = baselines::optimal_static_ir(chain, cfg);
            if (mode == EvalMode::exact) {
              loss = alloc.e2e_loss;
            } else {
              channel::Rng rng(seed, r, outcome_stream(plan.method));
              loss = bernoulli_static_loss(alloc, rng);
            }
            break;
          }
          case Method::listening: {
            if (mode == EvalMode::exact) {
              loss = baselines::listening_coop_arq_loss(chain, cfg);
            } else {
              channel::Rng rng(seed, r, outcome_stream(plan.method));
              loss = bernoulli_listening_loss(baselines::listening_slots(chain, cfg), rng);
            }
            break;
          }
        }
        losses[mi][r] = loss;
      }
    }
  };

  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp(n_threads, 1, std::max(1, mc_runs));
  if (n_threads == 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker, k, n_threads);
    for (auto& t : pool) t.join();
  }

  // Sequential reduction in run order keeps results identical across thread counts.
  std::vector<PointStats> stats(n_methods);
  for (int mi = 0; mi < n_methods; ++mi) {
    double mean = 0.0;
    for (int r = 0; r < mc_runs; ++r) mean += losses[mi][r];
    mean /= mc_runs;
    double var = 0.0;
    for (int r = 0; r < mc_runs; ++r) {
      const double d = losses[mi][r] - mean;
      var += d * d;
    }
    var = mc_runs > 1 ? var / (mc_runs - 1) : 0.0;
    stats[mi] = PointStats{mean, std::sqrt(var / mc_runs), mc_runs, plans[mi].infeasible};
  }
  return stats;
}

CampaignResult run_sweep(const CampaignSpec& spec) {
  if (spec.axis_values.empty()) throw ConfigError("run_sweep: no axis values");
  CampaignResult result;
  result.axis = axis_name(spec.axis);
  result.axis_values = spec.axis_values;
  result.methods = spec.methods;
  result.mode = spec.mode;
  result.seed = spec.seed;
  result.runs = spec.mc_runs;
  result.rng_algorithm = channel::kRngAlgorithm;
  result.tool_version = kToolVersion;
  result.cells.reserve(spec.axis_values.size());
  for (double value : spec.axis_values) {
    const auto [cfg, hops] = apply_axis(spec.base, spec.hop_count, spec.axis, value);
    result.cells.push_back(run_point(cfg, spec.fading, spec.methods, hops, spec.mc_runs,
                                     spec.seed, spec.mode, spec.threads));
  }
  return result;
}

}  // namespace dmh::sim
