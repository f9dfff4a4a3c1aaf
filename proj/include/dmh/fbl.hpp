#pragma once

// Finite-blocklength link numerics: Gaussian Q-function, the normal-approximation
// packet error rate of a single decoding attempt, minimum-blocklength solvers, and
// the fading-averaged error rate used when only statistical CSI is available.

#include <cstdint>
#include <utility>
#include <vector>

#include "dmh/errors.hpp"

namespace dmh::fbl {

/// Gaussian tail probability Q(x) = 0.5*erfc(x/sqrt(2)). Throws on non-finite input.
double q_function(double x);

/// log(Q(x)), stable for arguments far beyond double underflow of Q itself.
double log_q(double x);

/// log(I0(x)) for x >= 0, accurate to ~1e-12 relative (series / asymptotic split).
double log_bessel_i0(double x);

// Physical and protocol parameters of one relay chain. Time quantities live on an
// integer lattice of bit-times T_b = 1/(M*f_s); the feedback delay and frame length
// must be exact multiples of T_b.
struct LinkConfig {
  double symbol_rate_hz = 250e3;   // f_s
  int modulation_order = 2;        // M
  double tx_power_w = 1e-3;        // P
  double noise_power_w = 1e-3;     // N
  int payload_bits = 16;           // d
  double per_cap = 0.5;            // eps_max, per-attempt PER ceiling
  double feedback_delay_s = 12e-6; // T_l, decode + ACK/NACK per attempt
  double frame_length_s = 1e-3;    // T_max, hard end-to-end deadline
  double mean_gain_linear = 1.0;   // g_bar

  double bit_time_s() const { return 1.0 / (modulation_order * symbol_rate_hz); }
  int feedback_delay_ticks() const;
  int frame_ticks() const;

  /// SNR seen through a realized fading loss: gamma = P*g_bar / (N*L_f).
  double snr_from_fading_loss(double fading_loss) const;

  void validate() const;  // throws ConfigError on any violated invariant
  static LinkConfig defaults() { return LinkConfig{}; }
};

// One hop's realized channel with the derived normal-approximation quantities.
struct HopChannel {
  double gain_linear = 1.0;           // g
  double snr_linear = 1.0;            // gamma = P*g/N
  double capacity_bits_per_use = 1.0; // C = log2(1+gamma)
  double dispersion = 0.75;           // V = 1 - (1+gamma)^-2

  static HopChannel from_snr(double snr_linear);
  static HopChannel from_gain(double gain_linear, const LinkConfig& cfg);
  static HopChannel from_fading_loss(double fading_loss, const LinkConfig& cfg);
};

// Fading law of the i.i.d. per-hop losses. Rician by default; scale == 0 encodes a
// point mass at `noncentrality`, and a non-empty `atoms` list encodes an arbitrary
// discrete law (used by degenerate-channel tests and micro-instance oracles).
struct FadingDistribution {
  double noncentrality = 0.5;  // Rician nu
  double scale = 1.0;          // Rician sigma; 0 -> delta at nu
  int quadrature_nodes = 2048;
  std::vector<std::pair<double, double>> atoms;  // (value, weight), weights sum to 1

  bool is_discrete() const { return !atoms.empty() || scale == 0.0; }
  std::vector<std::pair<double, double>> discrete_atoms() const;
  double upper_support() const { return noncentrality + 10.0 * scale; }
  void validate() const;

  static FadingDistribution rician(double nu, double sigma, int nodes = 2048);
  static FadingDistribution point_mass(double value);
  static FadingDistribution discrete(std::vector<std::pair<double, double>> atoms);
};

/// Rician pdf  x/s^2 * exp(-(x^2+nu^2)/(2 s^2)) * I0(x nu/s^2).
/// Defined only for a genuine Rician law (scale > 0); x < 0 is a domain error.
double rician_pdf(double x, const FadingDistribution& fading);

/// CDF of the fading law, evaluated by piecewise Gauss-Legendre integration of the pdf.
double fading_cdf(double x, const FadingDistribution& fading);

// Quadrature grid over the fading law: points x[j] with combined weights
// w[j] = pdf(x[j]) * GL-weight (or the atom weights for a discrete law), so that
// E[f(L)] ~= sum_j w[j] f(x[j]).
struct FadingGrid {
  std::vector<double> x;
  std::vector<double> w;

  static FadingGrid make(const FadingDistribution& fading, int nodes);
  double total_weight() const;  // ~1 for a proper law
  double mean() const;
};

/// Packet error rate of one decoding attempt:  Q( sqrt(m/V) (C - d/m) ln 2 ).
/// Real-valued blocklengths are accepted (the static-IR baselines need them).
double per(const HopChannel& channel, double blocklength, int payload_bits);

/// Smallest integer n with per(n) <= per_cap. Always exists (per decreases to 0).
int min_blocklength(const HopChannel& channel, int payload_bits, double per_cap);

/// Fading-averaged PER under statistical CSI: E_L[ per(gamma(L), m) ], evaluated by
/// deterministic quadrature and convergence-checked by node doubling.
double expected_per(const FadingDistribution& fading, const LinkConfig& cfg, double blocklength);

/// Smallest integer n with expected_per(n) <= cfg.per_cap.
int min_blocklength_statistical(const FadingDistribution& fading, const LinkConfig& cfg);

}  // namespace dmh::fbl
