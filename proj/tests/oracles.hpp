#pragma once

// Test-only reference implementations, kept independent of the library code
// they check: a long-double erfc (series + continued fraction), a Bessel-I0
// series, a long-double PER evaluator, and brute-force schedule optimizers
// (unmemoized exhaustive enumeration and a full-state-keyed memo solver).

#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

namespace oracle {

long double erfc_ref(long double x);
long double q_ref(long double x);
long double bessel_i0_series(long double x);

/// PER of one attempt, evaluated entirely in long double.
long double per_ref(long double snr, long double payload_bits, long double blocklength);

// Planning inputs of one node's schedule problem on the tick lattice:
// eps arrays indexed by integer blocklength (index 0 unused), the per-layer
// minimum blocklengths, and the feedback delay.
struct MicroProblem {
  std::vector<double> local_eps;
  std::vector<double> succ_eps;
  int nmin_local = 0;
  int nmin_succ = 0;
  int tl = 0;

  int threshold(int hops, bool local_layer) const;
  int nmax(int ticks, int hops) const;
};

/// Exhaustive enumeration over every integer allocation at every reachable
/// state; no memoization. Returns the maximal utility.
double best_utility_unmemoized(const MicroProblem& p, int ticks, int hops, bool local_layer);

/// Same value, memoized on the full (t, i, k, tau, layer) state.
double best_utility_fullstate(const MicroProblem& p, int ticks, int hops);

}  // namespace oracle
