#include "dmh/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace dmh::baselines {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kLogSqrt2Pi = 0.9189385332046727;

double loss_from_errors(const std::vector<double>& eps) {
  double log_success = 0.0;
  for (double e : eps) log_success += std::log1p(-e);
  return -std::expm1(log_success);
}

// d/dm log(1 - eps_i(m)) in log space; strictly decreasing over the region of
// interest, which makes the Lagrange inner solve a plain bisection.
struct HopObjective {
  double cap_c;   // C
  double disp;    // V
  int d;

  double q_arg(double m) const {
    return std::sqrt(m / disp) * (cap_c - d / m) * kLn2;
  }
  double log_marginal(double m) const {
    const double a = q_arg(m);
    const double da = (kLn2 / std::sqrt(disp)) * (cap_c / (2.0 * std::sqrt(m)) +
                                                  d / (2.0 * m * std::sqrt(m)));
    return -0.5 * a * a - kLogSqrt2Pi + std::log(da) - fbl::log_q(-a);
  }
};

}  // namespace

StaticAllocation naive_static_ir(const channel::ChainRealization& chain,
                                 const fbl::LinkConfig& cfg) {
  const int hops = chain.hop_count();
  const double subframe_s = cfg.frame_length_s / hops;
  if (!(subframe_s > cfg.feedback_delay_s))
    throw InfeasibleError("naive_static_ir: sub-frame does not cover the feedback delay");
  const double m = (subframe_s - cfg.feedback_delay_s) / cfg.bit_time_s();
  StaticAllocation alloc;
  alloc.per_hop_blocklengths.assign(hops, m);
  alloc.per_hop_error.reserve(hops);
  for (int i = 0; i < hops; ++i)
    alloc.per_hop_error.push_back(fbl::per(chain.hops[i], m, cfg.payload_bits));
  alloc.e2e_loss = loss_from_errors(alloc.per_hop_error);
  alloc.e2e_success = 1.0 - alloc.e2e_loss;
  return alloc;
}

StaticAllocation optimal_static_ir(const channel::ChainRealization& chain,
                                   const fbl::LinkConfig& cfg) {
  const int hops = chain.hop_count();
  const double budget =
      (cfg.frame_length_s - hops * cfg.feedback_delay_s) / cfg.bit_time_s();
  if (!(budget > 0.0))
    throw InfeasibleError("optimal_static_ir: budget does not cover the feedback delays");

  std::vector<HopObjective> obj;
  std::vector<double> lo(hops), hi(hops);
  obj.reserve(hops);
  const double equal_split = budget / hops;
  for (int i = 0; i < hops; ++i) {
    const fbl::HopChannel& ch = chain.hops[i];
    obj.push_back(HopObjective{ch.capacity_bits_per_use, ch.dispersion, cfg.payload_bits});
    // The n_min bound never excludes the equal split, so the naive allocation
    // stays feasible and the optimum dominates it.
    const int nmin = fbl::min_blocklength(ch, cfg.payload_bits, cfg.per_cap);
    lo[i] = std::min(static_cast<double>(nmin), equal_split);
  }
  double lo_sum = 0.0;
  for (double v : lo) lo_sum += v;
  for (int i = 0; i < hops; ++i) hi[i] = budget - (lo_sum - lo[i]);

  std::vector<double> m(hops);
  if (hops == 1) {
    m[0] = budget;
  } else {
    const auto alloc_at = [&](double lambda, std::vector<double>& out) {
      double total = 0.0;
      for (int i = 0; i < hops; ++i) {
        if (obj[i].log_marginal(lo[i]) <= lambda) {
          out[i] = lo[i];
        } else if (obj[i].log_marginal(hi[i]) >= lambda) {
          out[i] = hi[i];
        } else {
          double a = lo[i], b = hi[i];
          for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (a + b);
            if (obj[i].log_marginal(mid) > lambda)
              a = mid;
            else
              b = mid;
          }
          out[i] = 0.5 * (a + b);
        }
        total += out[i];
      }
      return total;
    };
    double lam_lo = obj[0].log_marginal(hi[0]);
    double lam_hi = obj[0].log_marginal(lo[0]);
    for (int i = 1; i < hops; ++i) {
      lam_lo = std::min(lam_lo, obj[i].log_marginal(hi[i]));
      lam_hi = std::max(lam_hi, obj[i].log_marginal(lo[i]));
    }
    lam_lo -= 1.0;
    lam_hi += 1.0;
    for (int it = 0; it < 200; ++it) {
      const double lam = 0.5 * (lam_lo + lam_hi);
      if (alloc_at(lam, m) > budget)
        lam_lo = lam;
      else
        lam_hi = lam;
    }
    alloc_at(0.5 * (lam_lo + lam_hi), m);
    // Settle the residual on the interior coordinates.
    double total = 0.0;
    for (double v : m) total += v;
    for (int pass = 0; pass < 4 && std::abs(budget - total) > 0.0; ++pass) {
      std::vector<int> interior;
      for (int i = 0; i < hops; ++i)
        if (m[i] > lo[i] + 1e-12 && m[i] < hi[i] - 1e-12) interior.push_back(i);
      if (interior.empty()) interior.assign({0});
      const double share = (budget - total) / interior.size();
      for (int i : interior) m[i] = std::clamp(m[i] + share, lo[i], hi[i]);
      total = 0.0;
      for (double v : m) total += v;
    }
    if (std::abs(budget - total) > 1e-9)
      throw NumericError("optimal_static_ir: allocation did not meet the budget");
  }

  StaticAllocation alloc;
  alloc.per_hop_blocklengths = m;
  alloc.per_hop_error.reserve(hops);
  for (int i = 0; i < hops; ++i)
    alloc.per_hop_error.push_back(fbl::per(chain.hops[i], m[i], cfg.payload_bits));
  alloc.e2e_loss = loss_from_errors(alloc.per_hop_error);
  alloc.e2e_success = 1.0 - alloc.e2e_loss;
  return alloc;
}

ListeningSlots listening_slots(const channel::ChainRealization& chain,
                               const fbl::LinkConfig& cfg) {
  const int hops = chain.hop_count();
  const double slot_s = cfg.frame_length_s / (2.0 * hops);
  if (!(slot_s > cfg.feedback_delay_s))
    throw InfeasibleError("listening_coop_arq: slot does not cover the feedback delay");
  const int n_slot =
      static_cast<int>(std::floor((slot_s - cfg.feedback_delay_s) / cfg.bit_time_s()));
  if (n_slot < 1)
    throw InfeasibleError("listening_coop_arq: slot too short for any codeword");
  ListeningSlots s;
  s.slot_count = 2 * hops;
  s.blocklength = n_slot;
  s.per_hop_error.reserve(hops);
  for (int i = 0; i < hops; ++i)
    s.per_hop_error.push_back(fbl::per(chain.hops[i], n_slot, cfg.payload_bits));
  return s;
}

double listening_coop_arq_loss(const channel::ChainRealization& chain,
                               const fbl::LinkConfig& cfg) {
  const ListeningSlots s = listening_slots(chain, cfg);
  const int hops = chain.hop_count();
  // L[h][j]: miss probability when hop h (1-based) transmits in slot j. Hop h
  // may retry through its own window end 2h; success hands slot j+1 onward to
  // hop h+1 (j+1 <= 2(h+1) always holds, so the successor can always start).
  std::vector<std::vector<double>> L(hops + 2);
  L[hops + 1].assign(s.slot_count + 2, 0.0);
  for (int h = hops; h >= 1; --h) {
    L[h].assign(s.slot_count + 2, 1.0);
    const double e = s.per_hop_error[h - 1];
    for (int j = 2 * h; j >= 1; --j) {
      const double retry = j + 1 <= 2 * h ? L[h][j + 1] : 1.0;
      L[h][j] = e * retry + (1.0 - e) * L[h + 1][j + 1];
    }
  }
  return L[1][1];
}

double listening_coop_arq(const channel::ChainRealization& chain, const fbl::LinkConfig& cfg) {
  return 1.0 - listening_coop_arq_loss(chain, cfg);
}

}  // namespace dmh::baselines
