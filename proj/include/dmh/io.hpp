#pragma once

// Configuration ingestion (flat key-value files), campaign CSV/SVG emission,
// run manifests, and bit-exact policy-table persistence.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dmh/dp.hpp"
#include "dmh/sim.hpp"

namespace dmh::io {

inline constexpr int kLutSchemaVersion = 1;

// Parsed run configuration; sweep-only fields stay empty for `solve` usage.
struct RunConfig {
  fbl::LinkConfig link;
  fbl::FadingDistribution fading;
  int hop_count = 4;
  int mc_runs = 10'000;
  std::uint64_t seed = 1;
  std::optional<sim::Axis> axis;
  std::vector<double> axis_values;
  std::vector<sim::Method> methods = sim::all_methods();
  sim::EvalMode mode = sim::EvalMode::exact;
};

/// Parse the flat key=value format; keys mirror the campaign symbol names
/// (f_s_hz, M, P_w, N_w, d_bits, eps_max, T_max_s, I, T_l_s, g_bar_db, rice_nu,
/// rice_sigma, ...). Throws ConfigError with a 1-based line number.
RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::string& path);

/// CSV columns: axis_name, axis_value, method, mean_loss, stderr, runs, mode,
/// seed. Numeric fields carry 12 significant digits.
std::string campaign_csv(const sim::CampaignResult& result);

/// Self-contained SVG line chart of mean loss per method (log-scale y).
std::string campaign_svg(const sim::CampaignResult& result, const std::string& title);

std::string run_manifest_json(const RunConfig& cfg, const std::vector<std::string>& outputs,
                              const std::string& command);

/// Format a double with 12 significant digits (the CSV/report convention).
std::string format_g12(double v);

// --- policy-table persistence -------------------------------------------------
//
// Versioned JSON with losses stored as hex-encoded IEEE-754 bit patterns, so a
// round trip is bit-exact by construction. A file carries the shared successor
// table plus the per-node local tables of one chain realization.

struct LutFile {
  fbl::LinkConfig link;
  fbl::FadingDistribution fading;
  channel::ChainRealization chain;
  dp::ChainPolicies policies;
};

std::string lut_to_json(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                        const channel::ChainRealization& chain,
                        const dp::ChainPolicies& policies);

/// Parse and verify a persisted table set. Throws LutSchemaError on version or
/// fingerprint mismatch. Per-attempt error profiles are rebuilt from the
/// stored (bit-exact) fading losses; no DP solve is involved.
LutFile lut_from_json(const std::string& text);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace dmh::io
