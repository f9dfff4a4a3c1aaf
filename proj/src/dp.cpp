#include "dmh/dp.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <unordered_map>

namespace dmh::dp {

namespace {

std::atomic<std::uint64_t> g_states{0};

std::uint64_t fnv_fold(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xFF;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t fnv_fold(std::uint64_t h, double v) {
  return fnv_fold(h, std::bit_cast<std::uint64_t>(v));
}

// Bottom-up solve of one hop layer over the tick lattice.
//   hops == 1: one-shot shortcut, n = t - T_l.
//   hops >= 2: min over n of eps[n]*L[t-n-Tl] (retry, same layer)
//                         + (1-eps[n])*below[t-n-Tl] (advance, layer hops-1).
// `nmin_this` is the transmitting hop's minimum blocklength, `nbar_min` the
// statistical minimum reserved per successor hop. Ties prefer the smallest n.
void solve_layer(std::vector<PolicyEntry>& out, const std::vector<double>& eps, int nmin_this,
                 int hops, int nbar_min, int tl, const std::vector<PolicyEntry>* below,
                 int max_ticks) {
  out.assign(max_ticks + 1, PolicyEntry{});
  const std::int64_t thr64 = static_cast<std::int64_t>(hops - 1) * nbar_min + nmin_this +
                             static_cast<std::int64_t>(hops) * tl;
  if (thr64 > max_ticks) {
    g_states.fetch_add(1, std::memory_order_relaxed);  // whole layer is terminal
    return;
  }
  const int thr = static_cast<int>(thr64);
  std::uint64_t states = 0;
  if (hops == 1) {
    for (int t = thr; t <= max_ticks; ++t) {
      const int n = t - tl;
      out[t] = PolicyEntry{eps[n], n};
      ++states;
    }
  } else {
    const PolicyEntry* sub = below->data();
    const int reserve = (hops - 1) * (nbar_min + tl);
    for (int t = thr; t <= max_ticks; ++t) {
      const int nmax = t - tl - reserve;
      const int base = t - tl;
      double best = 2.0;
      int best_n = 0;
      for (int n = nmin_this; n <= nmax; ++n) {
        const double e = eps[n];
        const int c = base - n;
        const double v = e * out[c].loss + (1.0 - e) * sub[c].loss;
        if (v < best) {
          best = v;
          best_n = n;
        }
      }
      out[t] = PolicyEntry{best, best_n};
      ++states;
    }
  }
  g_states.fetch_add(states, std::memory_order_relaxed);
}

int first_at_or_below(const std::vector<double>& eps, double cap, int max_ticks) {
  for (int n = 1; n <= max_ticks; ++n)
    if (eps[n] <= cap) return n;
  return max_ticks + 1;  // not reachable within the frame
}

}  // namespace

std::uint64_t states_evaluated() { return g_states.load(std::memory_order_relaxed); }

PolicyTable::PolicyTable(TableKind kind_, int first_hop_, int last_hop_, int max_ticks_,
                         int tl_ticks_, std::uint64_t fingerprint_)
    : kind(kind_),
      first_hop(first_hop_),
      last_hop(last_hop_),
      max_ticks(max_ticks_),
      tl_ticks(tl_ticks_),
      fingerprint(fingerprint_) {
  layers.resize(last_hop - first_hop + 1);
}

bool PolicyTable::covers(int ticks, int hops) const {
  return hops >= first_hop && hops <= last_hop && ticks >= 0 && ticks <= max_ticks;
}

const PolicyEntry& PolicyTable::at(int ticks, int hops) const {
  if (!covers(ticks, hops)) throw std::out_of_range("PolicyTable: query outside the solved range");
  return layers[hops - first_hop][ticks];
}

PolicyEntry& PolicyTable::at_mut(int ticks, int hops) {
  if (!covers(ticks, hops)) throw std::out_of_range("PolicyTable: query outside the solved range");
  return layers[hops - first_hop][ticks];
}

ErrorProfile make_local_profile(const fbl::HopChannel& ch, const fbl::LinkConfig& cfg,
                                int max_ticks) {
  ErrorProfile p;
  p.eps.resize(max_ticks + 1);
  p.eps[0] = 1.0;
  for (int n = 1; n <= max_ticks; ++n) p.eps[n] = fbl::per(ch, n, cfg.payload_bits);
  p.min_blocklength = first_at_or_below(p.eps, cfg.per_cap, max_ticks);
  return p;
}

ErrorProfile make_successor_profile(const fbl::FadingDistribution& fading,
                                    const fbl::LinkConfig& cfg, int max_ticks) {
  ErrorProfile p;
  p.eps.resize(max_ticks + 1);
  p.eps[0] = 1.0;
  if (fading.is_discrete()) {
    const fbl::FadingGrid grid = fbl::FadingGrid::make(fading, 0);
    for (int n = 1; n <= max_ticks; ++n) {
      double s = 0.0;
      for (std::size_t j = 0; j < grid.x.size(); ++j)
        s += grid.w[j] * fbl::per(fbl::HopChannel::from_fading_loss(grid.x[j], cfg), n,
                                  cfg.payload_bits);
      p.eps[n] = s;
    }
  } else {
    // Same node-doubling convergence guard as fbl::expected_per, with the two
    // quadrature grids built once for the whole lattice.
    const fbl::FadingGrid coarse = fbl::FadingGrid::make(fading, fading.quadrature_nodes);
    const fbl::FadingGrid fine = fbl::FadingGrid::make(fading, 2 * fading.quadrature_nodes);
    std::vector<fbl::HopChannel> ch_coarse, ch_fine;
    ch_coarse.reserve(coarse.x.size());
    ch_fine.reserve(fine.x.size());
    for (double x : coarse.x) ch_coarse.push_back(fbl::HopChannel::from_fading_loss(x, cfg));
    for (double x : fine.x) ch_fine.push_back(fbl::HopChannel::from_fading_loss(x, cfg));
    for (int n = 1; n <= max_ticks; ++n) {
      double a = 0.0, b = 0.0;
      for (std::size_t j = 0; j < coarse.x.size(); ++j)
        a += coarse.w[j] * fbl::per(ch_coarse[j], n, cfg.payload_bits);
      for (std::size_t j = 0; j < fine.x.size(); ++j)
        b += fine.w[j] * fbl::per(ch_fine[j], n, cfg.payload_bits);
      if (std::abs(a - b) > 1e-6)
        throw NumericError("successor profile: quadrature did not converge");
      p.eps[n] = b;
    }
  }
  p.min_blocklength = first_at_or_below(p.eps, cfg.per_cap, max_ticks);
  return p;
}

std::uint64_t fingerprint(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv_fold(h, cfg.symbol_rate_hz);
  h = fnv_fold(h, static_cast<std::uint64_t>(cfg.modulation_order));
  h = fnv_fold(h, cfg.tx_power_w);
  h = fnv_fold(h, cfg.noise_power_w);
  h = fnv_fold(h, static_cast<std::uint64_t>(cfg.payload_bits));
  h = fnv_fold(h, cfg.per_cap);
  h = fnv_fold(h, cfg.feedback_delay_s);
  h = fnv_fold(h, cfg.frame_length_s);
  h = fnv_fold(h, cfg.mean_gain_linear);
  h = fnv_fold(h, fading.noncentrality);
  h = fnv_fold(h, fading.scale);
  h = fnv_fold(h, static_cast<std::uint64_t>(fading.quadrature_nodes));
  for (const auto& [v, p] : fading.atoms) {
    h = fnv_fold(h, v);
    h = fnv_fold(h, p);
  }
  return h;
}

std::uint64_t fingerprint(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                          double local_gain) {
  return fnv_fold(fingerprint(cfg, fading), local_gain);
}

PolicyTable solve_successor(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                            int max_hops, int max_ticks) {
  if (max_hops < 1) throw std::invalid_argument("solve_successor: max_hops must be >= 1");
  const int tl = cfg.feedback_delay_ticks();
  const ErrorProfile prof = make_successor_profile(fading, cfg, max_ticks);
  PolicyTable table(TableKind::successor, 1, max_hops, max_ticks, tl, fingerprint(cfg, fading));
  table.min_attempt_blocklength = prof.min_blocklength;
  for (int i = 1; i <= max_hops; ++i) {
    const std::vector<PolicyEntry>* below = i >= 2 ? &table.layers[i - 2] : nullptr;
    solve_layer(table.layers[i - 1], prof.eps, prof.min_blocklength, i, prof.min_blocklength, tl,
                below, max_ticks);
  }
  return table;
}

PolicyTable solve_local(const fbl::LinkConfig& cfg, const fbl::FadingDistribution& fading,
                        const fbl::HopChannel& local, int hops, int max_ticks,
                        const PolicyTable& succ, const ErrorProfile* local_profile) {
  if (hops < 1) throw std::invalid_argument("solve_local: hops must be >= 1");
  const int tl = cfg.feedback_delay_ticks();
  ErrorProfile own;
  if (local_profile == nullptr) {
    own = make_local_profile(local, cfg, max_ticks);
    local_profile = &own;
  }
  int nbar = 0;
  const std::vector<PolicyEntry>* below = nullptr;
  if (hops >= 2) {
    if (!succ.covers(max_ticks, hops - 1))
      throw std::invalid_argument("solve_local: successor table does not cover layer hops-1");
    nbar = succ.min_attempt_blocklength;
    below = &succ.layers[hops - 1 - succ.first_hop];
  }
  PolicyTable table(TableKind::local, hops, hops, max_ticks, tl,
                    fingerprint(cfg, fading, local.gain_linear));
  table.min_attempt_blocklength = local_profile->min_blocklength;
  solve_layer(table.layers[0], local_profile->eps, local_profile->min_blocklength, hops, nbar, tl,
              below, max_ticks);
  return table;
}

std::pair<double, int> best_succ(int ticks, int hops, const fbl::FadingDistribution& fading,
                                 const fbl::LinkConfig& cfg, SolveCache& cache) {
  if (hops < 1) throw std::invalid_argument("best_succ: hops must be >= 1");
  if (ticks < 0) throw std::invalid_argument("best_succ: ticks must be >= 0");
  if (!cache.succ || !cache.succ->covers(ticks, hops)) {
    const int want_hops = std::max(hops, cache.succ ? cache.succ->last_hop : 1);
    const int want_ticks = std::max(ticks, cache.succ ? cache.succ->max_ticks : 0);
    cache.succ = std::make_shared<PolicyTable>(solve_successor(cfg, fading, want_hops, want_ticks));
  }
  const PolicyEntry& e = cache.succ->at(ticks, hops);
  return {e.utility(), e.blocklength};
}

std::pair<double, int> best_local(int ticks, int hops, const fbl::HopChannel& local,
                                  const fbl::FadingDistribution& fading,
                                  const fbl::LinkConfig& cfg, SolveCache& cache) {
  if (hops < 1) throw std::invalid_argument("best_local: hops must be >= 1");
  if (ticks < 0) throw std::invalid_argument("best_local: ticks must be >= 0");
  if (hops >= 2 && (!cache.succ || !cache.succ->covers(ticks, hops - 1)))
    best_succ(ticks, hops - 1, fading, cfg, cache);  // grows the shared table
  const std::uint64_t key =
      fnv_fold(fingerprint(cfg, fading, local.gain_linear), static_cast<std::uint64_t>(hops));
  if (!cache.local || cache.local_key != key || !cache.local->covers(ticks, hops)) {
    static const PolicyTable kNoSucc;
    const PolicyTable& succ = hops >= 2 ? *cache.succ : kNoSucc;
    const int want_ticks =
        std::max(ticks, cache.local && cache.local_key == key ? cache.local->max_ticks : 0);
    cache.local = std::make_shared<PolicyTable>(
        solve_local(cfg, fading, local, hops, want_ticks, succ, nullptr));
    cache.local_key = key;
  }
  const PolicyEntry& e = cache.local->at(ticks, hops);
  return {e.utility(), e.blocklength};
}

ChainPolicies solve_chain_policies(const channel::ChainRealization& chain,
                                   const fbl::FadingDistribution& fading,
                                   const fbl::LinkConfig& cfg,
                                   std::shared_ptr<const PolicyTable> shared_succ) {
  const int hops = chain.hop_count();
  const int ticks = cfg.frame_ticks();
  if (hops >= 2) {
    if (!shared_succ || !shared_succ->covers(ticks, hops - 1))
      throw std::invalid_argument("solve_chain_policies: successor table too small");
  }
  ChainPolicies pol;
  pol.succ = std::move(shared_succ);
  pol.frame_ticks = ticks;
  pol.tl_ticks = cfg.feedback_delay_ticks();
  pol.node_local.reserve(hops);
  pol.node_profile.reserve(hops);
  static const PolicyTable kNoSucc;
  for (int h = 0; h < hops; ++h) {
    const int remaining = hops - h;
    pol.node_profile.push_back(make_local_profile(chain.hops[h], cfg, ticks));
    pol.node_local.push_back(solve_local(cfg, fading, chain.hops[h], remaining, ticks,
                                         remaining >= 2 ? *pol.succ : kNoSucc,
                                         &pol.node_profile.back()));
  }
  return pol;
}

ChainPolicies solve_chain_policies(const channel::ChainRealization& chain,
                                   const fbl::FadingDistribution& fading,
                                   const fbl::LinkConfig& cfg) {
  std::shared_ptr<const PolicyTable> succ;
  if (chain.hop_count() >= 2)
    succ = std::make_shared<PolicyTable>(
        solve_successor(cfg, fading, chain.hop_count() - 1, cfg.frame_ticks()));
  return solve_chain_policies(chain, fading, cfg, std::move(succ));
}

double exact_e2e_loss(const ChainPolicies& pol, const channel::ChainRealization& chain) {
  const int hops = chain.hop_count();
  const int T = pol.frame_ticks;
  const int tl = pol.tl_ticks;
  std::vector<double> below(T + 1, 0.0);  // layer i-1; layer 0 is all-delivered
  std::vector<double> cur(T + 1, 1.0);
  for (int i = 1; i <= hops; ++i) {
    const PolicyTable& tab = pol.node_local[hops - i];
    const std::vector<double>& eps = pol.node_profile[hops - i].eps;
    const std::vector<PolicyEntry>& layer = tab.layers[0];
    for (int t = 0; t <= T; ++t) {
      const int n = layer[t].blocklength;
      if (n == 0) {
        cur[t] = 1.0;
      } else {
        const double e = eps[n];
        const int c = t - n - tl;
        cur[t] = e * cur[c] + (1.0 - e) * below[c];
      }
    }
    std::swap(below, cur);
  }
  return below[T];
}

double exact_e2e_loss(const channel::ChainRealization& chain,
                      const fbl::FadingDistribution& fading, const fbl::LinkConfig& cfg) {
  return exact_e2e_loss(solve_chain_policies(chain, fading, cfg), chain);
}

double exact_e2e_reliability(const channel::ChainRealization& chain,
                             const fbl::FadingDistribution& fading, const fbl::LinkConfig& cfg) {
  return 1.0 - exact_e2e_loss(chain, fading, cfg);
}

bool HopOutcomeLog::operator==(const HopOutcomeLog& o) const {
  if (delivered != o.delivered || !(final_state == o.final_state) ||
      attempts.size() != o.attempts.size())
    return false;
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    const AttemptRecord& a = attempts[i];
    const AttemptRecord& b = o.attempts[i];
    if (a.hop_index != b.hop_index || !(a.before == b.before) ||
        a.blocklength != b.blocklength || a.attempt_per != b.attempt_per ||
        a.success != b.success)
      return false;
  }
  return true;
}

HopOutcomeLog run_hop_by_hop(const channel::ChainRealization& chain, const ChainPolicies& pol,
                             channel::Rng& rng) {
  const int hops = chain.hop_count();
  const int tl = pol.tl_ticks;
  HopOutcomeLog log;
  schedule::SystemState s{pol.frame_ticks, hops, 0, 0};
  while (true) {
    if (s.remaining_hops == 0) {
      log.delivered = true;
      break;
    }
    const int h = hops - s.remaining_hops;
    const PolicyEntry& e = pol.node_local[h].at(s.remaining_ticks, s.remaining_hops);
    if (e.blocklength == 0) break;  // termination state: timeout
    const double eps = pol.node_profile[h].eps[e.blocklength];
    const bool success = rng.next_double() >= eps;
    log.attempts.push_back(AttemptRecord{h + 1, s, e.blocklength, eps, success});
    s = success ? schedule::right_child(s, e.blocklength, tl)
                : schedule::left_child(s, e.blocklength, tl);
  }
  log.final_state = s;
  return log;
}

HopOutcomeLog run_hop_by_hop(const channel::ChainRealization& chain,
                             const fbl::FadingDistribution& fading, const fbl::LinkConfig& cfg,
                             channel::Rng& rng) {
  return run_hop_by_hop(chain, solve_chain_policies(chain, fading, cfg), rng);
}

namespace {

struct TreeBuilder {
  const PolicyTable& local;
  const PolicyTable* succ;
  const ErrorProfile& local_prof;
  const ErrorProfile* succ_prof;
  int root_hops;
  int tl;
  std::size_t cap;
  std::size_t count = 0;
  std::unordered_map<schedule::SystemState, schedule::ScheduleTree, schedule::SystemStateHash>
      shared;

  const PolicyEntry& policy_at(int ticks, int hops) const {
    return hops == root_hops ? local.at(ticks, hops) : succ->at(ticks, hops);
  }

  double per_at(int hops, int n) const {
    return hops == root_hops ? local_prof.eps[n] : succ_prof->eps[n];
  }

  schedule::ScheduleTree build(const schedule::SystemState& s) {
    const auto it = shared.find(s);
    if (it != shared.end()) return it->second;
    if (++count > cap) throw std::overflow_error("schedule tree node cap exceeded");
    auto node = std::make_shared<schedule::TreeNode>();
    node->state = s;
    if (s.remaining_hops > 0) {
      const PolicyEntry& e = policy_at(s.remaining_ticks, s.remaining_hops);
      if (e.blocklength > 0) {
        node->blocklength = e.blocklength;
        node->attempt_per = per_at(s.remaining_hops, e.blocklength);
        node->left = build(schedule::left_child(s, e.blocklength, tl));
        node->right = build(schedule::right_child(s, e.blocklength, tl));
      }
    }
    schedule::ScheduleTree done = node;
    shared.emplace(s, done);
    return done;
  }
};

}  // namespace

OptScheduleResult opt_schedule(const schedule::SystemState& root, double local_gain,
                               const fbl::FadingDistribution& fading, const fbl::LinkConfig& cfg,
                               std::size_t node_cap) {
  if (root.remaining_hops < 1)
    throw std::invalid_argument("opt_schedule: need at least one hop remaining");
  cfg.validate();
  fading.validate();
  const int ticks = root.remaining_ticks;
  const int hops = root.remaining_hops;
  const fbl::HopChannel local_ch = fbl::HopChannel::from_gain(local_gain, cfg);

  ErrorProfile succ_prof;
  PolicyTable succ;
  if (hops >= 2) {
    succ_prof = make_successor_profile(fading, cfg, ticks);
    succ = PolicyTable(TableKind::successor, 1, hops - 1, ticks, cfg.feedback_delay_ticks(),
                       fingerprint(cfg, fading));
    succ.min_attempt_blocklength = succ_prof.min_blocklength;
    for (int i = 1; i <= hops - 1; ++i) {
      const std::vector<PolicyEntry>* below = i >= 2 ? &succ.layers[i - 2] : nullptr;
      solve_layer(succ.layers[i - 1], succ_prof.eps, succ_prof.min_blocklength, i,
                  succ_prof.min_blocklength, cfg.feedback_delay_ticks(), below, ticks);
    }
  }
  const ErrorProfile local_prof = make_local_profile(local_ch, cfg, ticks);
  PolicyTable local = solve_local(cfg, fading, local_ch, hops, ticks, succ, &local_prof);

  // Root already in a termination state: the schedule is the empty tree.
  if (local.at(ticks, hops).blocklength == 0)
    return OptScheduleResult{nullptr, std::move(local), std::move(succ)};

  TreeBuilder builder{local,
                      hops >= 2 ? &succ : nullptr,
                      local_prof,
                      hops >= 2 ? &succ_prof : nullptr,
                      hops,
                      cfg.feedback_delay_ticks(),
                      node_cap,
                      0,
                      {}};
  try {
    schedule::ScheduleTree tree = builder.build(root);
    return OptScheduleResult{std::move(tree), std::move(local), std::move(succ)};
  } catch (const std::overflow_error&) {
    throw TreeCapExceeded("opt_schedule: materialized tree exceeds the node cap",
                          std::move(local), std::move(succ));
  }
}

}  // namespace dmh::dp
