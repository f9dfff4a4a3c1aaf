#pragma once

// Seeded random generation of per-hop channel realizations for Monte-Carlo
// campaigns. Streams are counter-keyed by (seed, draw_index, stream) so that
// parallel workers reproduce the exact same realizations regardless of
// scheduling.

#include <cstdint>
#include <vector>

#include "dmh/fbl.hpp"

namespace dmh::channel {

// Generator algorithm name, pinned in output headers for reproducibility audits.
inline constexpr const char* kRngAlgorithm = "splitmix64";

// Stream ids keep the channel draws independent of outcome draws made on the
// same (seed, run) pair.
inline constexpr std::uint64_t kStreamChain = 0;
inline constexpr std::uint64_t kStreamOutcome = 1;

// Counter-keyed splitmix64 stream. Two generators built from the same
// (seed, sequence, stream) triple produce identical output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t sequence = 0, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  double next_double();       // uniform on [0,1)
  double next_unit_open();    // uniform on (0,1]
  double next_normal();       // standard normal, Box-Muller pair cached

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// One Rician variate  sqrt((nu + sigma*Z1)^2 + (sigma*Z2)^2); for a discrete
/// law, inverse-CDF sampling over the atoms.
double sample_fading(const fbl::FadingDistribution& fading, Rng& rng);

// A full I-hop realization, reproducible from (seed, draw_index).
struct ChainRealization {
  std::vector<fbl::HopChannel> hops;   // chain order: hops[0] transmits first
  std::vector<double> fading_losses;   // the raw L_f draws behind `hops`
  std::uint64_t seed = 0;
  std::uint64_t draw_index = 0;

  int hop_count() const { return static_cast<int>(hops.size()); }
};

ChainRealization realize_chain(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                               int hop_count, std::uint64_t seed, std::uint64_t draw_index);

/// Build a realization from explicit fading losses (tests and tooling).
ChainRealization chain_from_losses(const fbl::LinkConfig& cfg, std::vector<double> losses);

}  // namespace dmh::channel
