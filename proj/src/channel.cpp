#include "dmh/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dmh::channel {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t sequence, std::uint64_t stream) {
  state_ = mix64(seed + kGolden * (sequence + 1)) ^ mix64(0xD1B54A32D192ED03ULL * (stream + 1));
}

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_unit_open() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::next_normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  const double u1 = next_unit_open();
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

double sample_fading(const fbl::FadingDistribution& fading, Rng& rng) {
  if (fading.is_discrete()) {
    const auto atoms = fading.discrete_atoms();
    const double u = rng.next_double();
    double acc = 0.0;
    for (const auto& [v, p] : atoms) {
      acc += p;
      if (u < acc) return v;
    }
    return atoms.back().first;
  }
  const double z1 = rng.next_normal();
  const double z2 = rng.next_normal();
  const double a = fading.noncentrality + fading.scale * z1;
  const double b = fading.scale * z2;
  const double x = std::hypot(a, b);
  return std::max(x, std::numeric_limits<double>::min());
}

ChainRealization realize_chain(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                               int hop_count, std::uint64_t seed, std::uint64_t draw_index) {
  if (hop_count < 1) throw ConfigError("realize_chain: hop_count must be >= 1");
  ChainRealization chain;
  chain.seed = seed;
  chain.draw_index = draw_index;
  chain.hops.reserve(hop_count);
  chain.fading_losses.reserve(hop_count);
  Rng rng(seed, draw_index, kStreamChain);
  for (int i = 0; i < hop_count; ++i) {
    const double lf = sample_fading(fading, rng);
    chain.fading_losses.push_back(lf);
    chain.hops.push_back(fbl::HopChannel::from_fading_loss(lf, cfg));
  }
  return chain;
}

ChainRealization chain_from_losses(const fbl::LinkConfig& cfg, std::vector<double> losses) {
  if (losses.empty()) throw ConfigError("chain_from_losses: need at least one hop");
  ChainRealization chain;
  chain.fading_losses = std::move(losses);
  chain.hops.reserve(chain.fading_losses.size());
  for (double lf : chain.fading_losses)
    chain.hops.push_back(fbl::HopChannel::from_fading_loss(lf, cfg));
  return chain;
}

}  // namespace dmh::channel
