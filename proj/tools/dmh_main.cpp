// Command-line front end: `solve` (one node's optimal schedule), `sweep`
// (Monte-Carlo sensitivity campaigns), and `lut export|import` (bit-exact
// policy-table persistence).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dmh/baselines.hpp"
#include "dmh/dp.hpp"
#include "dmh/io.hpp"
#include "dmh/sim.hpp"
#include "dmh/version.hpp"

namespace {

namespace fs = std::filesystem;
using dmh::io::format_g12;

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<std::string> mode;
  bool plot = false;
  std::string out_dir = ".";
  int threads = 0;
};

dmh::io::RunConfig load_config(const GlobalOpts& g) {
  if (g.config_path.empty()) throw dmh::ConfigError("no --config file given");
  dmh::io::RunConfig rc = dmh::io::parse_config_file(g.config_path);
  if (g.seed) rc.seed = *g.seed;
  if (g.runs) rc.mc_runs = *g.runs;
  if (g.mode) rc.mode = dmh::sim::mode_from_name(*g.mode);
  return rc;
}

int cmd_solve(const GlobalOpts& g, std::optional<double> gain_db, std::optional<double> gain_lin,
              std::optional<int> hops_opt, std::optional<int> ticks_opt,
              const std::string& out_name) {
  const dmh::io::RunConfig rc = load_config(g);
  const double gain = gain_lin ? *gain_lin
                               : gain_db ? std::pow(10.0, *gain_db / 10.0)
                                         : rc.link.mean_gain_linear;
  const int hops = hops_opt ? *hops_opt : rc.hop_count;
  const int ticks = ticks_opt ? *ticks_opt : rc.link.frame_ticks();
  if (hops < 1) throw dmh::ConfigError("--hops must be >= 1");
  if (ticks < 0 || ticks > rc.link.frame_ticks())
    throw dmh::ConfigError("--ticks must lie in [0, frame ticks]");

  const dmh::schedule::SystemState root{ticks, hops, 0, 0};
  const dmh::dp::OptScheduleResult res =
      dmh::dp::opt_schedule(root, gain, rc.fading, rc.link);
  const dmh::dp::PolicyEntry& e = res.local.at(ticks, hops);
  if (e.blocklength == 0) {
    std::cerr << "infeasible: " << ticks << " ticks cannot carry " << hops << " hop(s)\n";
    return 3;
  }
  fs::create_directories(g.out_dir);
  const fs::path out = fs::path(g.out_dir) / out_name;
  dmh::io::write_file(out.string(), dmh::schedule::tree_to_json(res.tree));
  std::cout << "n_opt=" << e.blocklength << " utility=" << format_g12(e.utility())
            << " loss=" << format_g12(e.loss) << " tree_nodes="
            << dmh::schedule::tree_node_count(res.tree) << " tree=" << out.string() << "\n";
  return 0;
}

int cmd_sweep(const GlobalOpts& g) {
  dmh::io::RunConfig rc = load_config(g);
  if (!rc.axis) throw dmh::ConfigError("sweep needs 'axis' and 'axis_values' in the config");
  dmh::sim::CampaignSpec spec;
  spec.base = rc.link;
  spec.fading = rc.fading;
  spec.hop_count = rc.hop_count;
  spec.axis = *rc.axis;
  spec.axis_values = rc.axis_values;
  spec.methods = rc.methods;
  spec.mc_runs = rc.mc_runs;
  spec.seed = rc.seed;
  spec.mode = rc.mode;
  spec.threads = g.threads;

  const dmh::sim::CampaignResult result = dmh::sim::run_sweep(spec);
  fs::create_directories(g.out_dir);
  std::vector<std::string> outputs;
  const fs::path csv_path = fs::path(g.out_dir) / ("sweep_" + result.axis + ".csv");
  dmh::io::write_file(csv_path.string(), dmh::io::campaign_csv(result));
  outputs.push_back(csv_path.string());
  if (g.plot) {
    const fs::path svg_path = fs::path(g.out_dir) / ("sweep_" + result.axis + ".svg");
    dmh::io::write_file(svg_path.string(),
                        dmh::io::campaign_svg(result, "mean E2E loss vs " + result.axis));
    outputs.push_back(svg_path.string());
  }
  const fs::path manifest_path = fs::path(g.out_dir) / ("manifest_" + result.axis + ".json");
  dmh::io::write_file(manifest_path.string(),
                      dmh::io::run_manifest_json(rc, outputs, "sweep"));

  for (std::size_t ai = 0; ai < result.axis_values.size(); ++ai) {
    std::cout << result.axis << "=" << format_g12(result.axis_values[ai]) << ":";
    for (std::size_t mi = 0; mi < result.methods.size(); ++mi) {
      const auto& cell = result.cells[ai][mi];
      std::cout << "  " << dmh::sim::method_name(result.methods[mi]) << "="
                << format_g12(cell.mean_loss) << "(se " << format_g12(cell.stderr_loss) << ")"
                << (cell.infeasible ? " [infeasible]" : "");
    }
    std::cout << "\n";
  }
  std::cout << "wrote " << csv_path.string() << "\n";
  return 0;
}

int cmd_lut_export(const GlobalOpts& g, std::uint64_t draw, const std::string& out_name) {
  const dmh::io::RunConfig rc = load_config(g);
  const dmh::channel::ChainRealization chain =
      dmh::channel::realize_chain(rc.link, rc.fading, rc.hop_count, rc.seed, draw);
  const dmh::dp::ChainPolicies pol = dmh::dp::solve_chain_policies(chain, rc.fading, rc.link);
  fs::create_directories(g.out_dir);
  const fs::path out = fs::path(g.out_dir) / out_name;
  dmh::io::write_file(out.string(), dmh::io::lut_to_json(rc.link, rc.fading, chain, pol));
  std::cout << "exported " << pol.node_local.size() << " local table(s)"
            << (pol.succ ? " + successor table" : "") << " to " << out.string() << "\n";
  return 0;
}

int cmd_lut_import(const std::string& in_path, bool selftest, std::optional<int> q_ticks,
                   std::optional<int> q_hops) {
  const dmh::io::LutFile lut = dmh::io::lut_from_json(dmh::io::read_file(in_path));
  std::cout << "loaded " << lut.policies.node_local.size() << " local table(s)"
            << (lut.policies.succ ? " + successor table" : "") << " for "
            << lut.chain.hop_count() << " hop(s), frame " << lut.policies.frame_ticks
            << " ticks\n";
  if (q_ticks && q_hops) {
    const int hops = *q_hops;
    const int node = lut.chain.hop_count() - hops;
    if (node < 0 || node >= lut.chain.hop_count())
      throw dmh::ConfigError("--hops outside the stored chain");
    const dmh::dp::PolicyEntry& e = lut.policies.node_local[node].at(*q_ticks, hops);
    std::cout << "lookup t=" << *q_ticks << " i=" << hops << ": n_opt=" << e.blocklength
              << " utility=" << format_g12(e.utility()) << "\n";
  }
  if (selftest) {
    const std::uint64_t before = dmh::dp::states_evaluated();
    dmh::channel::Rng rng(lut.chain.seed, lut.chain.draw_index, dmh::channel::kStreamOutcome);
    const dmh::dp::HopOutcomeLog from_lut =
        dmh::dp::run_hop_by_hop(lut.chain, lut.policies, rng);
    const std::uint64_t lut_states = dmh::dp::states_evaluated() - before;
    const dmh::dp::ChainPolicies fresh =
        dmh::dp::solve_chain_policies(lut.chain, lut.fading, lut.link);
    dmh::channel::Rng rng2(lut.chain.seed, lut.chain.draw_index, dmh::channel::kStreamOutcome);
    const dmh::dp::HopOutcomeLog from_fresh = dmh::dp::run_hop_by_hop(lut.chain, fresh, rng2);
    bool tables_equal = !fresh.succ == !lut.policies.succ;
    if (tables_equal && fresh.succ)
      tables_equal = fresh.succ->layers == lut.policies.succ->layers ? true : false;
    for (std::size_t h = 0; tables_equal && h < fresh.node_local.size(); ++h)
      tables_equal = fresh.node_local[h].layers == lut.policies.node_local[h].layers;
    std::cout << "selftest: replay_matches_fresh=" << (from_lut == from_fresh ? "yes" : "no")
              << " tables_bit_exact=" << (tables_equal ? "yes" : "no")
              << " dp_states_during_replay=" << lut_states << "\n";
    if (!(from_lut == from_fresh) || !tables_equal || lut_states != 0) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(dmh::kToolName) + " " + dmh::kToolVersion +
               " - finite-blocklength multi-hop HARQ scheduling toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "flat key=value configuration file");
  app.add_option("--seed", g.seed, "override the configured RNG seed");
  app.add_option("--runs", g.runs, "override the configured Monte-Carlo run count");
  app.add_option("--mode", g.mode, "exact|bernoulli evaluation mode")
      ->check(CLI::IsMember({"exact", "bernoulli"}));
  app.add_flag("--plot", g.plot, "emit an SVG chart next to each CSV");
  app.add_option("--out-dir", g.out_dir, "output directory (default .)");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");

  auto* solve = app.add_subcommand("solve", "solve one node's optimal schedule");
  std::optional<double> gain_db, gain_lin;
  std::optional<int> hops_opt, ticks_opt;
  std::string solve_out = "schedule.json";
  auto* gdb = solve->add_option("--gain-db", gain_db, "realized local channel gain [dB]");
  solve->add_option("--gain", gain_lin, "realized local channel gain (linear)")->excludes(gdb);
  solve->add_option("--hops", hops_opt, "remaining hops (default: config I)");
  solve->add_option("--ticks", ticks_opt, "remaining ticks (default: full frame)");
  solve->add_option("--out", solve_out, "schedule JSON filename");

  auto* sweep = app.add_subcommand("sweep", "run a sensitivity sweep campaign");

  auto* lut = app.add_subcommand("lut", "policy-table persistence");
  lut->require_subcommand(1);
  auto* lut_export = lut->add_subcommand("export", "solve and persist policy tables");
  std::uint64_t draw = 0;
  std::string lut_out = "policy_tables.json";
  lut_export->add_option("--draw", draw, "channel draw index (default 0)");
  lut_export->add_option("--out", lut_out, "output filename");
  auto* lut_import = lut->add_subcommand("import", "load persisted policy tables");
  std::string lut_in;
  bool selftest = false;
  std::optional<int> q_ticks, q_hops;
  lut_import->add_option("--in", lut_in, "policy-table file")->required();
  lut_import->add_flag("--selftest", selftest,
                       "replay against a fresh solve and check bit-exactness");
  lut_import->add_option("--ticks", q_ticks, "query: remaining ticks");
  lut_import->add_option("--hops", q_hops, "query: remaining hops");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return cmd_solve(g, gain_db, gain_lin, hops_opt, ticks_opt, solve_out);
    if (sweep->parsed()) return cmd_sweep(g);
    if (lut->parsed()) {
      if (lut_export->parsed()) return cmd_lut_export(g, draw, lut_out);
      return cmd_lut_import(lut_in, selftest, q_ticks, q_hops);
    }
  } catch (const dmh::ConfigError& e) {
    if (e.line > 0)
      std::cerr << g.config_path << ":" << e.line << ": " << e.what() << "\n";
    else
      std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const dmh::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const dmh::LutSchemaError& e) {
    std::cerr << "policy-table file error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
