#pragma once

// Exhaustive enumeration oracle for tiny boxes: every configuration of a
// box with <= 24 sites contributes to coefficient tables indexed by the
// occupied count m, so P(event) = sum_m c[m] p^m (1-p)^(V-m) is exact in p.
// This is the module oracle the Monte Carlo estimators are checked against.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perclab/connectivity.hpp"
#include "perclab/lattice.hpp"

namespace perclab {

struct ExactEnumeration {
  BoxSpec box;
  int n_sites = 0;
  // per displacement index: counts of configurations (by occupied count)
  // where the event holds
  std::vector<std::vector<uint64_t>> tau_counts;     // {0 <-> x}
  std::vector<std::vector<uint64_t>> doubly_counts;  // {0 <=> x}
  std::vector<uint64_t> csize_sum;                   // sum of |C(0)| by occupied count
  std::vector<uint64_t> csize_sq_sum;                // sum of |C(0)|^2

  static double binom_weight(int m, int v, double p) {
    double w = 1.0;
    for (int i = 0; i < m; ++i) w *= p;
    for (int i = 0; i < v - m; ++i) w *= (1.0 - p);
    return w;
  }

  double eval_counts(const std::vector<uint64_t>& c, double p) const {
    double out = 0.0;
    for (int m = 0; m <= n_sites; ++m)
      if (c[m]) out += static_cast<double>(c[m]) * binom_weight(m, n_sites, p);
    return out;
  }

  double tau(SiteIndex x, double p) const { return eval_counts(tau_counts[x], p); }
  double doubly(SiteIndex x, double p) const { return eval_counts(doubly_counts[x], p); }
  double expected_cluster_size(double p) const { return eval_counts(csize_sum, p); }
};

inline ExactEnumeration exact_enumerate(const BoxSpec& spec) {
  Box box(spec);
  if (box.volume() > 24) throw std::invalid_argument("exact_enumerate: box too large (>24 sites)");
  int v = static_cast<int>(box.volume());

  ExactEnumeration out;
  out.box = spec;
  out.n_sites = v;
  out.tau_counts.assign(v, std::vector<uint64_t>(v + 1, 0));
  out.doubly_counts.assign(v, std::vector<uint64_t>(v + 1, 0));
  out.csize_sum.assign(v + 1, 0);
  out.csize_sq_sum.assign(v + 1, 0);

  SiteConfig cfg(spec, 0.5);
  Workspace ws(box);
  SiteIndex origin = box.origin_index();
  for (uint64_t mask = 0; mask < (1ull << v); ++mask) {
    cfg.assign_mask(mask);
    int m = __builtin_popcountll(mask);
    reach_from(box, cfg, ws, origin);
    uint64_t csize = ws.cluster.size();
    out.csize_sum[m] += csize;
    out.csize_sq_sum[m] += csize * csize;
    // copy: reach sets are clobbered by the doubly check below
    thread_local std::vector<SiteIndex> reach;
    reach.clear();
    for (size_t i = 1; i < ws.cluster.size(); ++i) reach.push_back(ws.cluster[i]);
    for (SiteIndex y : ws.boundary) reach.push_back(y);
    for (SiteIndex y : reach) {
      out.tau_counts[y][m]++;
      if (doubly_connected_idx(box, cfg, ws, origin, y)) out.doubly_counts[y][m]++;
    }
  }
  return out;
}

}  // namespace perclab
