#include "dmh/fbl.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace dmh::fbl {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLog2Pi = 1.8378770664093455;  // log(2*pi)

// 64-point Gauss-Legendre rule on [-1,1], nodes by Newton iteration on P_64.
struct GaussLegendre64 {
  std::array<double, 64> x{};
  std::array<double, 64> w{};
  GaussLegendre64() {
    const int n = 64;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (z * p0 - p1) / (z * z - 1.0);
        double z1 = z;
        z = z1 - p0 / pp;
        if (std::abs(z - z1) < 1e-15) break;
      }
      x[i] = -z;
      x[n - 1 - i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
      w[n - 1 - i] = w[i];
    }
  }
};

const GaussLegendre64& gl64() {
  static const GaussLegendre64 rule;
  return rule;
}

}  // namespace

double q_function(double x) {
  if (!std::isfinite(x)) throw std::domain_error("q_function: non-finite argument");
  return 0.5 * std::erfc(x / kSqrt2);
}

double log_q(double x) {
  if (!std::isfinite(x)) throw std::domain_error("log_q: non-finite argument");
  if (x <= 0.0) {
    // Q(x) >= 0.5 here; 1 - Q(-x) avoids cancellation.
    return std::log1p(-0.5 * std::erfc(-x / kSqrt2));
  }
  if (x <= 30.0) return std::log(0.5 * std::erfc(x / kSqrt2));
  // Asymptotic tail: Q(x) = phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)
  const double ix2 = 1.0 / (x * x);
  const double series = 1.0 + ix2 * (-1.0 + ix2 * (3.0 - 15.0 * ix2));
  return -0.5 * x * x - std::log(x) - 0.5 * kLog2Pi + std::log(series);
}

double log_bessel_i0(double x) {
  if (x < 0.0) throw std::domain_error("log_bessel_i0: negative argument");
  if (x <= 30.0) {
    // I0(x) = sum_k (x^2/4)^k / (k!)^2, all terms positive.
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= q / (static_cast<double>(k) * k);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return std::log(sum);
  }
  // I0(x) ~ e^x / sqrt(2 pi x) * sum_k mu_k / (k! (8x)^k), mu_k = prod (2j-1)^2.
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 12; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= odd * odd / (k * 8.0 * x);
    sum += term;
  }
  return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(sum);
}

int LinkConfig::feedback_delay_ticks() const {
  return static_cast<int>(std::llround(feedback_delay_s / bit_time_s()));
}

int LinkConfig::frame_ticks() const {
  return static_cast<int>(std::llround(frame_length_s / bit_time_s()));
}

double LinkConfig::snr_from_fading_loss(double fading_loss) const {
  return tx_power_w * mean_gain_linear / (noise_power_w * fading_loss);
}

void LinkConfig::validate() const {
  if (!(symbol_rate_hz > 0.0)) throw ConfigError("f_s_hz must be > 0");
  if (modulation_order < 1) throw ConfigError("M must be >= 1");
  if (!(tx_power_w > 0.0)) throw ConfigError("P_w must be > 0");
  if (!(noise_power_w > 0.0)) throw ConfigError("N_w must be > 0");
  if (payload_bits < 1) throw ConfigError("d_bits must be >= 1");
  if (!(per_cap > 0.0 && per_cap < 1.0)) throw ConfigError("eps_max must be in (0,1)");
  if (!(feedback_delay_s >= 0.0)) throw ConfigError("T_l_s must be >= 0");
  if (!(frame_length_s > 0.0)) throw ConfigError("T_max_s must be > 0");
  if (!(mean_gain_linear > 0.0)) throw ConfigError("mean channel gain must be > 0");
  // Tick-lattice requirement: T_l and T_max exactly on the T_b grid.
  const double tb = bit_time_s();
  const double tl = feedback_delay_s / tb;
  const double tmax = frame_length_s / tb;
  if (std::abs(tl - std::llround(tl)) > 1e-6 * std::max(1.0, tl))
    throw ConfigError("T_l_s is not an integer multiple of the bit time 1/(M*f_s)");
  if (std::abs(tmax - std::llround(tmax)) > 1e-6 * std::max(1.0, tmax))
    throw ConfigError("T_max_s is not an integer multiple of the bit time 1/(M*f_s)");
  if (!(frame_length_s > feedback_delay_s)) throw ConfigError("T_max_s must exceed T_l_s");
}

HopChannel HopChannel::from_snr(double snr_linear) {
  if (!(snr_linear > 0.0) || !std::isfinite(snr_linear))
    throw std::invalid_argument("HopChannel: SNR must be finite and > 0");
  HopChannel ch;
  ch.snr_linear = snr_linear;
  ch.gain_linear = snr_linear;  // caller-relative; overwritten by from_gain paths
  ch.capacity_bits_per_use = std::log2(1.0 + snr_linear);
  const double u = 1.0 + snr_linear;
  ch.dispersion = 1.0 - 1.0 / (u * u);
  return ch;
}

HopChannel HopChannel::from_gain(double gain_linear, const LinkConfig& cfg) {
  HopChannel ch = from_snr(cfg.tx_power_w * gain_linear / cfg.noise_power_w);
  ch.gain_linear = gain_linear;
  return ch;
}

HopChannel HopChannel::from_fading_loss(double fading_loss, const LinkConfig& cfg) {
  if (!(fading_loss > 0.0)) throw std::invalid_argument("fading loss must be > 0");
  return from_gain(cfg.mean_gain_linear / fading_loss, cfg);
}

std::vector<std::pair<double, double>> FadingDistribution::discrete_atoms() const {
  if (!atoms.empty()) return atoms;
  return {{noncentrality, 1.0}};
}

void FadingDistribution::validate() const {
  if (!atoms.empty()) {
    double total = 0.0;
    for (const auto& [v, p] : atoms) {
      if (!(v > 0.0)) throw ConfigError("discrete fading atom values must be > 0");
      if (!(p > 0.0)) throw ConfigError("discrete fading atom weights must be > 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("discrete fading weights must sum to 1");
    return;
  }
  if (!(noncentrality >= 0.0)) throw ConfigError("rice_nu must be >= 0");
  if (!(scale >= 0.0)) throw ConfigError("rice_sigma must be >= 0");
  if (scale == 0.0 && !(noncentrality > 0.0))
    throw ConfigError("point-mass fading requires a positive mass point");
  if (scale > 0.0 && quadrature_nodes < 64) throw ConfigError("quadrature_nodes must be >= 64");
}

FadingDistribution FadingDistribution::rician(double nu, double sigma, int nodes) {
  FadingDistribution f;
  f.noncentrality = nu;
  f.scale = sigma;
  f.quadrature_nodes = nodes;
  f.validate();
  return f;
}

FadingDistribution FadingDistribution::point_mass(double value) {
  FadingDistribution f;
  f.noncentrality = value;
  f.scale = 0.0;
  f.validate();
  return f;
}

FadingDistribution FadingDistribution::discrete(std::vector<std::pair<double, double>> atoms) {
  FadingDistribution f;
  f.atoms = std::move(atoms);
  f.validate();
  return f;
}

double rician_pdf(double x, const FadingDistribution& fading) {
  if (x < 0.0) throw std::domain_error("rician_pdf: negative argument");
  if (fading.is_discrete())
    throw std::invalid_argument("rician_pdf: undefined for a point-mass/discrete law");
  if (x == 0.0) return 0.0;
  const double s2 = fading.scale * fading.scale;
  const double nu = fading.noncentrality;
  const double log_pdf =
      std::log(x / s2) - (x * x + nu * nu) / (2.0 * s2) + log_bessel_i0(x * nu / s2);
  return std::exp(log_pdf);
}

FadingGrid FadingGrid::make(const FadingDistribution& fading, int nodes) {
  FadingGrid grid;
  if (fading.is_discrete()) {
    for (const auto& [v, p] : fading.discrete_atoms()) {
      grid.x.push_back(v);
      grid.w.push_back(p);
    }
    return grid;
  }
  const int panels = (std::max(nodes, 64) + 63) / 64;
  const double hi = fading.upper_support();
  const double h = hi / panels;
  const auto& rule = gl64();
  grid.x.reserve(static_cast<std::size_t>(panels) * 64);
  grid.w.reserve(static_cast<std::size_t>(panels) * 64);
  for (int p = 0; p < panels; ++p) {
    const double a = p * h;
    for (int j = 0; j < 64; ++j) {
      const double xj = a + 0.5 * h * (rule.x[j] + 1.0);
      grid.x.push_back(xj);
      grid.w.push_back(0.5 * h * rule.w[j] * rician_pdf(xj, fading));
    }
  }
  return grid;
}

double FadingGrid::total_weight() const {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

double FadingGrid::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w[i];
  return s;
}

double fading_cdf(double x, const FadingDistribution& fading) {
  if (x < 0.0) return 0.0;
  if (fading.is_discrete()) {
    double s = 0.0;
    for (const auto& [v, p] : fading.discrete_atoms())
      if (v <= x) s += p;
    return s;
  }
  const double hi = std::min(x, fading.upper_support());
  const int panels = std::max(1, static_cast<int>(std::ceil(hi / (fading.upper_support() / 64.0))));
  const double h = hi / panels;
  const auto& rule = gl64();
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = p * h;
    for (int j = 0; j < 64; ++j) {
      const double xj = a + 0.5 * h * (rule.x[j] + 1.0);
      s += 0.5 * h * rule.w[j] * rician_pdf(xj, fading);
    }
  }
  return std::min(s, 1.0);
}

double per(const HopChannel& channel, double blocklength, int payload_bits) {
  if (!(blocklength > 0.0)) throw std::domain_error("per: blocklength must be > 0");
  if (payload_bits < 1) throw std::domain_error("per: payload must be >= 1 bit");
  const double m = blocklength;
  const double arg = std::sqrt(m / channel.dispersion) *
                     (channel.capacity_bits_per_use - payload_bits / m) * kLn2;
  return q_function(arg);
}

namespace {

// Shared monotone bisection: smallest integer n >= 1 with f(n) <= cap.
template <typename F>
int smallest_at_or_below(F&& f, double cap) {
  if (f(1) <= cap) return 1;
  int hi = 1;
  while (f(hi) > cap) {
    if (hi > (1 << 28)) throw NumericError("min_blocklength: no solution below 2^28 uses");
    hi *= 2;
  }
  int lo = hi / 2;  // f(lo) > cap, f(hi) <= cap
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (f(mid) <= cap)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double expected_per_on_grid(const FadingGrid& grid, const LinkConfig& cfg, double m) {
  double s = 0.0;
  for (std::size_t j = 0; j < grid.x.size(); ++j) {
    const HopChannel ch = HopChannel::from_fading_loss(grid.x[j], cfg);
    s += grid.w[j] * per(ch, m, cfg.payload_bits);
  }
  return s;
}

}  // namespace

int min_blocklength(const HopChannel& channel, int payload_bits, double per_cap) {
  if (!(per_cap > 0.0 && per_cap < 1.0))
    throw std::domain_error("min_blocklength: per_cap must be in (0,1)");
  return smallest_at_or_below([&](int n) { return per(channel, n, payload_bits); }, per_cap);
}

double expected_per(const FadingDistribution& fading, const LinkConfig& cfg, double blocklength) {
  if (!(blocklength > 0.0)) throw std::domain_error("expected_per: blocklength must be > 0");
  if (fading.is_discrete()) {
    const FadingGrid grid = FadingGrid::make(fading, 0);
    return expected_per_on_grid(grid, cfg, blocklength);
  }
  const FadingGrid coarse = FadingGrid::make(fading, fading.quadrature_nodes);
  const FadingGrid fine = FadingGrid::make(fading, 2 * fading.quadrature_nodes);
  const double a = expected_per_on_grid(coarse, cfg, blocklength);
  const double b = expected_per_on_grid(fine, cfg, blocklength);
  if (std::abs(a - b) > 1e-6)
    throw NumericError("expected_per: quadrature did not converge under node doubling");
  return b;
}

int min_blocklength_statistical(const FadingDistribution& fading, const LinkConfig& cfg) {
  return smallest_at_or_below(
      [&](int n) { return expected_per(fading, cfg, static_cast<double>(n)); }, cfg.per_cap);
}

}  // namespace dmh::fbl
