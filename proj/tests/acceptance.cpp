// Acceptance suite: one self-contained check per numbered criterion, each
// printing a PASS/FAIL line with its measured evidence and wall time.
// Usage: acceptance [N]   (runs criterion N only; default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dmh/baselines.hpp"
#include "dmh/dp.hpp"
#include "dmh/io.hpp"
#include "dmh/sim.hpp"
#include "oracles.hpp"

using namespace dmh;
namespace fs = std::filesystem;

namespace {

const fbl::LinkConfig kDefaults = fbl::LinkConfig::defaults();
const fbl::FadingDistribution kRice = fbl::FadingDistribution::rician(0.5, 1.0);

struct Criterion {
  int id;
  std::string summary;
  std::function<bool(std::string&)> run;
};

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// ---- 1: FBL kernel -----------------------------------------------------------

bool crit1(std::string& detail) {
  bool ok = fbl::per(fbl::HopChannel::from_snr(1.0), 16.0, 16) == 0.5;
  double worst = 0.0;
  int points = 0;
  // ~1e3-point grid over SNR x blocklength.
  for (int gi = 0; gi < 32; ++gi) {
    const double snr = std::pow(10.0, -1.2 + 2.4 * gi / 31.0);  // -12..+12 dB
    const auto ch = fbl::HopChannel::from_snr(snr);
    for (int mi = 0; mi < 32; ++mi) {
      const double m = 4.0 + 496.0 * mi / 31.0;
      const double got = fbl::per(ch, m, 16);
      const double want = static_cast<double>(
          oracle::per_ref(static_cast<long double>(snr), 16.0L, static_cast<long double>(m)));
      worst = std::max(worst, std::abs(got - want));
      ++points;
    }
  }
  ok = ok && worst <= 1e-9;
  detail = "zero-argument per = 0.5 exactly; max |per - oracle| = " +
           io::format_g12(worst) + " over " + std::to_string(points) + " grid points";
  return ok;
}

// ---- 2: Lemma 2 --------------------------------------------------------------

bool crit2(std::string& detail) {
  std::mt19937_64 rng(20250809);
  std::uniform_real_distribution<double> loss_dist(0.2, 3.0);
  bool ok = true;
  int checked = 0;
  dp::SolveCache succ_cache;
  for (int trial = 0; trial < 100; ++trial) {
    const double lf = loss_dist(rng);
    const auto ch = fbl::HopChannel::from_fading_loss(lf, kDefaults);
    const int nmin = fbl::min_blocklength(ch, kDefaults.payload_bits, kDefaults.per_cap);
    std::uniform_int_distribution<int> t_dist(nmin + 6, 500);
    const int t = t_dist(rng);
    dp::SolveCache cache;
    const auto [u, n] = dp::best_local(t, 1, ch, kRice, kDefaults, cache);
    (void)u;
    ok = ok && n == t - 6;
    // The statistical solver obeys the same one-shot rule on its last hop.
    const auto [us, ns] = dp::best_succ(t, 1, kRice, kDefaults, succ_cache);
    (void)us;
    const int nbar = fbl::min_blocklength_statistical(kRice, kDefaults);
    if (t >= nbar + 6) ok = ok && ns == t - 6;
    ++checked;
  }
  detail = std::to_string(checked) + " random feasible last-hop states: n_opt = t - T_l exactly";
  return ok;
}

// ---- 3: brute-force optimality ----------------------------------------------

bool crit3(std::string& detail) {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> gain_dist(0.4, 2.2);
  bool ok = true;
  int instances = 0, enumerated = 0;
  double worst_full = 0.0, worst_enum = 0.0;

  const auto run_instance = [&](int frame_ticks, int hops, const fbl::FadingDistribution& fading,
                                double gain, bool also_enumerate) {
    fbl::LinkConfig cfg;
    cfg.payload_bits = 4;
    cfg.feedback_delay_s = 8e-6;  // 4 ticks
    cfg.frame_length_s = frame_ticks * 2e-6;

    const int T = cfg.frame_ticks();
    oracle::MicroProblem p;
    p.tl = cfg.feedback_delay_ticks();
    p.local_eps.assign(T + 1, 1.0);
    p.succ_eps.assign(T + 1, 1.0);
    const auto ch = fbl::HopChannel::from_gain(gain, cfg);
    for (int n = 1; n <= T; ++n) {
      p.local_eps[n] = fbl::per(ch, n, cfg.payload_bits);
      p.succ_eps[n] = fbl::expected_per(fading, cfg, n);
    }
    p.nmin_local = 1;
    while (p.local_eps[p.nmin_local] > cfg.per_cap) ++p.nmin_local;
    p.nmin_succ = 1;
    while (p.succ_eps[p.nmin_succ] > cfg.per_cap) ++p.nmin_succ;

    dp::SolveCache cache;
    const auto [u, n] = dp::best_local(T, hops, ch, fading, cfg, cache);
    (void)n;
    const double full = oracle::best_utility_fullstate(p, T, hops);
    worst_full = std::max(worst_full, std::abs(u - full));
    ok = ok && std::abs(u - full) <= 1e-12;
    ++instances;
    if (also_enumerate) {
      const double brute = oracle::best_utility_unmemoized(p, T, hops, true);
      worst_enum = std::max(worst_enum, std::abs(u - brute));
      ok = ok && std::abs(u - brute) <= 1e-12;
      ++enumerated;
    }
  };

  const auto point = fbl::FadingDistribution::point_mass(0.9);
  const auto two_atom = fbl::FadingDistribution::discrete({{0.7, 0.4}, {1.5, 0.6}});
  std::uniform_int_distribution<int> frame_small(28, 44);
  std::uniform_int_distribution<int> frame_big(44, 60);
  for (int i = 0; i < 4; ++i) run_instance(frame_big(rng), 1, point, gain_dist(rng), true);
  for (int i = 0; i < 4; ++i) run_instance(frame_small(rng), 2, two_atom, gain_dist(rng), true);
  for (int i = 0; i < 3; ++i) run_instance(frame_small(rng), 3, point, gain_dist(rng), true);
  for (int i = 0; i < 4; ++i) run_instance(frame_big(rng), 2, point, gain_dist(rng), false);
  for (int i = 0; i < 3; ++i) run_instance(frame_big(rng), 2, two_atom, gain_dist(rng), false);
  for (int i = 0; i < 3; ++i) run_instance(frame_big(rng), 3, two_atom, gain_dist(rng), false);

  detail = std::to_string(instances) + " micro-instances vs the (t,i,k,tau)-keyed solver (max |d| = " +
           io::format_g12(worst_full) + "), " + std::to_string(enumerated) +
           " of them vs raw enumeration (max |d| = " + io::format_g12(worst_enum) + ")";
  return ok;
}

// ---- 4: Theorem 1 on the lattice ----------------------------------------------

bool crit4(std::string& detail) {
  bool ok = true;
  int plateau_zero = 0;
  for (int r = 0; r < 10; ++r) {
    const auto chain = channel::realize_chain(kDefaults, kRice, 4, 1234, r);
    const auto pol = dp::solve_chain_policies(chain, kRice, kDefaults);
    for (int h = 0; h < 4; ++h) {
      const auto& layer = pol.node_local[h].layers[0];
      for (int t = 1; t <= 500; ++t) ok = ok && layer[t].loss <= layer[t - 1].loss;
    }
    // Strict improvement on the last hop above feasibility; consecutive exact
    // zeros mean the per underflowed double and the utility saturated at 1.
    const auto& last = pol.node_local[3].layers[0];
    for (int t = 1; t <= 500; ++t) {
      if (last[t - 1].blocklength == 0) continue;
      if (last[t - 1].loss == 0.0 && last[t].loss == 0.0) {
        ++plateau_zero;
        continue;
      }
      ok = ok && last[t].loss < last[t - 1].loss;
    }
    for (int i = 1; i <= 3; ++i) {
      const auto& s = pol.succ->layers[i - 1];
      for (int t = 1; t <= 500; ++t) ok = ok && s[t].loss <= s[t - 1].loss;
    }
  }
  detail = "10 realizations x 4 layers nondecreasing over the 500-tick lattice; last hop strictly "
           "increasing (" +
           std::to_string(plateau_zero) + " tick(s) saturated below double underflow)";
  return ok;
}

// ---- 5 & 6: campaign orderings and trends --------------------------------------

struct PointSummary {
  std::vector<sim::PointStats> stats;  // dmh, naive, optimal, listening order of all_methods()
};

PointSummary measure_point(const fbl::LinkConfig& cfg, int hops, int runs, std::uint64_t seed) {
  PointSummary s;
  s.stats = sim::run_point(cfg, kRice, sim::all_methods(), hops, runs, seed,
                           sim::EvalMode::exact, 0);
  return s;
}

double separation(const sim::PointStats& a, const sim::PointStats& b) {
  // (mean_b - mean_a) in combined standard errors; positive = a below b.
  return (b.mean_loss - a.mean_loss) /
         std::sqrt(a.stderr_loss * a.stderr_loss + b.stderr_loss * b.stderr_loss + 1e-300);
}

bool crit5(std::string& detail) {
  struct Point {
    const char* label;
    fbl::LinkConfig cfg;
    int hops;
  };
  std::vector<Point> points;
  points.push_back({"defaults", kDefaults, 4});
  {
    fbl::LinkConfig c = kDefaults;
    c.frame_length_s = 0.6e-3;
    points.push_back({"T_max=0.6ms", c, 4});
  }
  points.push_back({"I=8", kDefaults, 8});
  {
    fbl::LinkConfig c = kDefaults;
    c.feedback_delay_s = 50e-6;
    points.push_back({"T_l=50us", c, 4});
  }
  {
    fbl::LinkConfig c = kDefaults;
    c.mean_gain_linear = std::pow(10.0, -0.6);
    points.push_back({"g_bar=-6dB", c, 4});
  }

  bool ok = true;
  detail = "pairwise separations in combined SEs (need >= 3):";
  for (const Point& p : points) {
    const PointSummary s = measure_point(p.cfg, p.hops, 10'000, 20250809);
    const auto& dmh = s.stats[0];
    const auto& naive = s.stats[1];
    const auto& opt = s.stats[2];
    const auto& listen = s.stats[3];
    const double d_opt = separation(dmh, opt);
    const double opt_naive = separation(opt, naive);
    const double naive_listen = separation(naive, listen);
    const bool point_ok = d_opt >= 3.0 && opt_naive >= 3.0 && naive_listen >= 3.0;
    ok = ok && point_ok;
    char buf[256];
    std::snprintf(buf, sizeof buf, "\n    %-12s dmh<opt %+7.1f  opt<naive %+7.1f  naive<listen %+7.1f  %s",
                  p.label, d_opt, opt_naive, naive_listen, point_ok ? "ok" : "VIOLATED");
    detail += buf;
  }
  return ok;
}

bool crit6(std::string& detail) {
  const int runs = 10'000;
  const std::uint64_t seed = 424242;
  bool ok = true;
  detail = "dmh mean-loss trends over the Table-1 sweep ranges:";

  const auto sweep_means = [&](sim::Axis axis, const std::vector<double>& values) {
    std::vector<double> means;
    for (double v : values) {
      const auto [cfg, hops] = sim::apply_axis(kDefaults, 4, axis, v);
      const auto stats =
          sim::run_point(cfg, kRice, {sim::Method::dmh}, hops, runs, seed, sim::EvalMode::exact, 0);
      means.push_back(stats[0].mean_loss);
    }
    return means;
  };

  const auto check_monotone = [&](const char* label, const std::vector<double>& means,
                                  bool nonincreasing) {
    bool good = true;
    for (std::size_t i = 1; i < means.size(); ++i) {
      if (nonincreasing)
        good = good && means[i] <= means[i - 1] + 1e-15;
      else
        good = good && means[i] >= means[i - 1] - 1e-15;
    }
    ok = ok && good;
    detail += std::string("\n    ") + label + ": " + (good ? "monotone ok" : "VIOLATED") + " [";
    for (std::size_t i = 0; i < means.size(); ++i)
      detail += (i ? " " : "") + io::format_g12(means[i]);
    detail += "]";
  };

  std::vector<double> frames;
  for (double t = 0.4e-3; t <= 1.0e-3 + 1e-9; t += 0.1e-3) frames.push_back(t);
  check_monotone("frame_length 0.4..1.0 ms", sweep_means(sim::Axis::frame_length, frames), true);

  std::vector<double> hops;
  for (int i = 2; i <= 10; ++i) hops.push_back(i);
  check_monotone("hop_count 2..10", sweep_means(sim::Axis::hop_count, hops), false);

  std::vector<double> delays;
  for (double tl = 10e-6; tl <= 100e-6 + 1e-12; tl += 10e-6) delays.push_back(tl);
  check_monotone("feedback_delay 10..100 us", sweep_means(sim::Axis::feedback_delay, delays),
                 false);

  std::vector<double> gains;
  for (double g = 0.0; g >= -10.0 - 1e-9; g -= 1.0) gains.push_back(g);  // decreasing g_bar
  check_monotone("mean_gain 0..-10 dB (decreasing)", sweep_means(sim::Axis::mean_gain, gains),
                 false);
  return ok;
}

// ---- 7: semi-analytic vs stochastic -------------------------------------------

bool crit7(std::string& detail) {
  bool ok = true;
  detail = "exact loss vs 1e5 Bernoulli trials:";
  fbl::LinkConfig harsh = kDefaults;
  harsh.mean_gain_linear = std::pow(10.0, -0.6);
  int idx = 0;
  const std::vector<const fbl::LinkConfig*> configs = {&kDefaults, &harsh};
  for (const fbl::LinkConfig* cfg : configs) {
    for (int r = 0; r < 5; ++r, ++idx) {
      const auto chain = channel::realize_chain(*cfg, kRice, 4, 999, r);
      const auto pol = dp::solve_chain_policies(chain, kRice, *cfg);
      const double exact = dp::exact_e2e_loss(pol, chain);
      const int trials = 100'000;
      int misses = 0;
      for (int t = 0; t < trials; ++t) {
        channel::Rng rng(999, 1000 + idx, channel::kStreamOutcome + t);
        if (!dp::run_hop_by_hop(chain, pol, rng).delivered) ++misses;
      }
      const double phat = static_cast<double>(misses) / trials;
      const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-13) / trials);
      const bool good = std::abs(phat - exact) <= 3.0 * se;
      ok = ok && good;
      if (!good)
        detail += "\n    realization " + std::to_string(idx) + ": exact " +
                  io::format_g12(exact) + " vs " + io::format_g12(phat) + " VIOLATED";
    }
  }
  detail += " 10/10 within 3 binomial SEs";
  return ok;
}

// ---- 8: LUT persistence --------------------------------------------------------

bool crit8(std::string& detail) {
  const auto chain = channel::realize_chain(kDefaults, kRice, 4, 31415, 0);
  const auto pol = dp::solve_chain_policies(chain, kRice, kDefaults);
  const std::string text = io::lut_to_json(kDefaults, kRice, chain, pol);

  const fs::path dir = fs::temp_directory_path() / "dmh_acceptance";
  fs::create_directories(dir);
  const fs::path path = dir / "tables.json";
  io::write_file(path.string(), text);
  const io::LutFile lut = io::lut_from_json(io::read_file(path.string()));

  bool exact = lut.policies.succ && lut.policies.succ->layers == pol.succ->layers;
  for (std::size_t h = 0; exact && h < pol.node_local.size(); ++h)
    exact = lut.policies.node_local[h].layers == pol.node_local[h].layers;

  channel::Rng rng_a(31415, 0, channel::kStreamOutcome);
  channel::Rng rng_b(31415, 0, channel::kStreamOutcome);
  const auto fresh_log = dp::run_hop_by_hop(chain, pol, rng_a);
  const std::uint64_t before = dp::states_evaluated();
  const auto replay_log = dp::run_hop_by_hop(lut.chain, lut.policies, rng_b);
  const std::uint64_t dp_work = dp::states_evaluated() - before;

  const bool ok = exact && fresh_log == replay_log && dp_work == 0;
  detail = std::string("round trip bit-exact: ") + (exact ? "yes" : "NO") +
           "; replay identical to fresh solve: " + (fresh_log == replay_log ? "yes" : "NO") +
           "; DP states evaluated during replay: " + std::to_string(dp_work);
  return ok;
}

// ---- 9: determinism ------------------------------------------------------------

bool crit9(std::string& detail) {
  sim::CampaignSpec spec;
  spec.base = kDefaults;
  spec.fading = kRice;
  spec.hop_count = 4;
  spec.axis = sim::Axis::frame_length;
  spec.axis_values = {0.4e-3, 0.7e-3, 1.0e-3};
  spec.mc_runs = 500;
  spec.seed = 20250809;
  spec.threads = 1;
  const std::string serial = io::campaign_csv(sim::run_sweep(spec));
  spec.threads = 2;
  const std::string parallel = io::campaign_csv(sim::run_sweep(spec));
  spec.threads = 2;
  const std::string rerun = io::campaign_csv(sim::run_sweep(spec));

  bool cli_ok = true;
  const fs::path dir = fs::temp_directory_path() / "dmh_acceptance_cli";
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "sweep.cfg";
  io::write_file(cfg_path.string(),
                 "f_s_hz = 250e3\nM = 2\nP_w = 1e-3\nN_w = 1e-3\nd_bits = 16\neps_max = 0.5\n"
                 "T_max_s = 1e-3\nI = 4\nT_l_s = 12e-6\ng_bar_db = 0\nrice_nu = 0.5\n"
                 "rice_sigma = 1\nn_mc = 200\nseed = 7\naxis = mean_gain\n"
                 "axis_values = -6, 0\n");
  const std::string base_cmd = std::string(DMH_CLI_PATH) + " --config " + cfg_path.string();
  const auto run_once = [&](const std::string& sub, int threads) {
    const fs::path out = dir / ("run_" + sub);
    const std::string cmd = base_cmd + " --out-dir " + out.string() + " --threads " +
                            std::to_string(threads) + " sweep > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) cli_ok = false;
    return io::read_file((out / "sweep_mean_gain.csv").string());
  };
  const std::string cli_a = run_once("a", 1);
  const std::string cli_b = run_once("b", 2);
  cli_ok = cli_ok && cli_a == cli_b && !cli_a.empty();

  const bool ok = serial == parallel && parallel == rerun && cli_ok;
  detail = std::string("in-process serial==parallel: ") + (serial == parallel ? "yes" : "NO") +
           "; rerun identical: " + (parallel == rerun ? "yes" : "NO") +
           "; CLI 1-thread vs 2-thread CSV byte-identical: " + (cli_ok ? "yes" : "NO");
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "FBL kernel vs high-precision oracle", crit1},
      {2, "last-hop one-shot optimality", crit2},
      {3, "integer DP vs brute-force enumeration", crit3},
      {4, "value monotonicity on the tick lattice", crit4},
      {5, "campaign ordering at five sweep points", crit5},
      {6, "mean-loss trends along all four sweeps", crit6},
      {7, "semi-analytic vs stochastic execution", crit7},
      {8, "policy-table persistence", crit8},
      {9, "campaign determinism", crit9},
  };
  int selected = 0;
  if (argc > 1) selected = std::atoi(argv[1]);

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (selected != 0 && c.id != selected) continue;
    const double t0 = now_s();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double dt = now_s() - t0;
    std::printf("[%s] criterion %d (%s): %s  [%.2f s]\n", ok ? "PASS" : "FAIL", c.id,
                c.summary.c_str(), detail.c_str(), dt);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
