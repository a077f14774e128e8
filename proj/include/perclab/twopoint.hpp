#pragma once

// Monte Carlo estimation of the two-point function tau_p(x) = P(0 <-> x):
// one cluster growth from the origin per sample computes every displacement
// at once ({x : 0 <-> x} = <C(0)> minus the origin). Tables carry integer
// sufficient statistics so pooled and threaded runs merge exactly.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perclab/connectivity.hpp"
#include "perclab/lattice.hpp"
#include "perclab/parallel.hpp"
#include "perclab/rng.hpp"
#include "perclab/stats.hpp"

namespace perclab {

inline constexpr uint64_t kStreamRoleTwoPoint = 1ull << 32;
inline constexpr uint64_t kStreamRolePi = 2ull << 32;
inline constexpr uint64_t kStreamRoleRw = 3ull << 32;
inline constexpr uint64_t kStreamRolePc = 4ull << 32;
inline constexpr uint64_t kStreamRoleChi = 5ull << 32;

struct TwoPointTable {
  BoxSpec box;
  double p = 0.0;
  uint64_t n_samples = 0;
  bool antipodal = false;

  // antipodal mode: per displacement, #samples where exactly one of +-x was
  // connected and #samples where both were. plain mode: cnt_both = count.
  std::vector<uint32_t> cnt_one;
  std::vector<uint32_t> cnt_both;

  // per-sample scalars: S = |{x : 0 <-> x}|, csize = |C(0)|
  uint64_t sum_reach = 0, sum_reach_sq = 0;
  uint64_t sum_csize = 0, sum_csize_sq = 0;

  double mean(SiteIndex s) const {
    double n = static_cast<double>(n_samples);
    if (antipodal) return (cnt_both[s] + 0.5 * cnt_one[s]) / n;
    return cnt_both[s] / n;
  }
  double stderr(SiteIndex s) const {
    if (n_samples < 2) return 0.0;
    double n = static_cast<double>(n_samples);
    double m = mean(s);
    double ew2 = antipodal ? (cnt_both[s] + 0.25 * cnt_one[s]) / n : m;
    double var = (ew2 - m * m) * n / (n - 1.0);
    if (var < 0) var = 0;
    return std::sqrt(var / n);
  }

  // tau_hat(0) = sum_x tau(x), estimated from the per-sample reach size.
  Estimate tau_hat0() const {
    return moments_estimate(static_cast<double>(sum_reach), static_cast<double>(sum_reach_sq),
                            n_samples);
  }
  Estimate cluster_size() const {
    return moments_estimate(static_cast<double>(sum_csize), static_cast<double>(sum_csize_sq),
                            n_samples);
  }

  std::vector<double> tau() const {
    Box b(box);
    std::vector<double> t(b.volume());
    for (SiteIndex s = 0; s < b.volume(); ++s) t[s] = mean(s);
    return t;
  }
  // tau^o = delta_0 + tau
  std::vector<double> tau_circ() const {
    auto t = tau();
    t[Box(box).origin_index()] += 1.0;
    return t;
  }
  // tau^* = delta_0 + p tau
  std::vector<double> tau_bullet() const {
    Box b(box);
    std::vector<double> t(b.volume());
    for (SiteIndex s = 0; s < b.volume(); ++s) t[s] = p * mean(s);
    t[b.origin_index()] += 1.0;
    return t;
  }
  // gamma_p = tau - J
  std::vector<double> gamma_table() const {
    Box b(box);
    auto t = tau();
    for (SiteIndex s = 0; s < b.volume(); ++s)
      if (b.displacement_norm(s) == 1) t[s] -= 1.0;
    return t;
  }

  void merge(const TwoPointTable& o) {
    if (o.box.dim != box.dim || o.box.side != box.side || o.p != p ||
        o.antipodal != antipodal)
      throw std::invalid_argument("TwoPointTable::merge: incompatible tables");
    for (size_t i = 0; i < cnt_one.size(); ++i) {
      cnt_one[i] += o.cnt_one[i];
      cnt_both[i] += o.cnt_both[i];
    }
    sum_reach += o.sum_reach;
    sum_reach_sq += o.sum_reach_sq;
    sum_csize += o.sum_csize;
    sum_csize_sq += o.sum_csize_sq;
    n_samples += o.n_samples;
  }

  // decay diagnostic of the L-selection rule: the estimate at maximal
  // displacement should sit below 10x its standard error.
  struct DecayDiagnostic {
    double max_disp_mean = 0.0;
    double max_disp_stderr = 0.0;
    bool satisfied = true;
  };
  DecayDiagnostic decay_diagnostic() const {
    Box b(box);
    int best = -1;
    SiteIndex arg = 0;
    for (SiteIndex s = 0; s < b.volume(); ++s) {
      int nrm = b.displacement_norm(s);
      if (nrm > best) {
        best = nrm;
        arg = s;
      }
    }
    DecayDiagnostic d;
    d.max_disp_mean = mean(arg);
    d.max_disp_stderr = stderr(arg);
    d.satisfied = d.max_disp_mean < 10.0 * std::max(d.max_disp_stderr, 1e-300);
    return d;
  }
};

namespace detail {

template <typename ViewFactory>
inline void accumulate_sample(const Box& box, Workspace& ws, TwoPointTable& acc,
                              const ViewFactory& make_view, uint64_t sample) {
  auto view = make_view(sample);
  reach_from(box, view, ws, box.origin_index());
  uint64_t s_reach = ws.cluster.size() - 1 + ws.boundary.size();
  uint64_t csize = ws.cluster.size();
  acc.sum_reach += s_reach;
  acc.sum_reach_sq += s_reach * s_reach;
  acc.sum_csize += csize;
  acc.sum_csize_sq += csize * csize;
  if (acc.antipodal) {
    auto tally = [&](SiteIndex y) {
      SiteIndex ry = box.reflect(y);
      if (ws.code(ry) != 0) {
        acc.cnt_both[y]++;
      } else {
        acc.cnt_one[y]++;
        acc.cnt_one[ry]++;
      }
    };
    for (size_t i = 1; i < ws.cluster.size(); ++i) tally(ws.cluster[i]);
    for (SiteIndex y : ws.boundary) tally(y);
  } else {
    for (size_t i = 1; i < ws.cluster.size(); ++i) acc.cnt_both[ws.cluster[i]]++;
    for (SiteIndex y : ws.boundary) acc.cnt_both[y]++;
  }
}

}  // namespace detail

// tau_p(x) := P(0 <-> x) for every displacement in the box. Deterministic
// given (seed, n_samples) for any thread count.
inline TwoPointTable estimate_two_point(const BoxSpec& spec, double p, uint64_t n_samples,
                                        const RngStream& base, int threads = 1,
                                        bool antipodal = true) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("estimate_two_point: p outside [0,1]");
  if (n_samples < 1) throw std::invalid_argument("estimate_two_point: n_samples >= 1 required");
  if (spec.boundary == Boundary::free || !spec.odd_side()) antipodal = false;
  Box box(spec);

  auto make_acc = [&]() {
    TwoPointTable t;
    t.box = spec;
    t.p = p;
    t.antipodal = antipodal;
    t.cnt_one.assign(box.volume(), 0);
    t.cnt_both.assign(box.volume(), 0);
    return t;
  };
  std::vector<TwoPointTable> slots;
  for (int i = 0; i < std::max(threads, 1); ++i) slots.push_back(make_acc());
  std::vector<Workspace> wss;
  for (int i = 0; i < std::max(threads, 1); ++i) wss.emplace_back(box);

  run_batches(n_samples, threads, [&](int slot, BatchRange r) {
    RngStream rng = base.substream(kStreamRoleTwoPoint + r.task);
    auto factory = [&](uint64_t sample) { return LazyOccupancy(rng, p, sample - r.begin); };
    for (uint64_t s = r.begin; s < r.end; ++s)
      detail::accumulate_sample(box, wss[slot], slots[slot], factory, s);
  });

  TwoPointTable out = std::move(slots[0]);
  for (size_t i = 1; i < slots.size(); ++i) out.merge(slots[i]);
  out.n_samples = n_samples;
  return out;
}

// chi(p) = 1 + p tau_hat(0), with exact standard error from the per-sample
// reach-size scalars.
inline Estimate susceptibility(const TwoPointTable& t) {
  Estimate th = t.tau_hat0();
  return {1.0 + t.p * th.value, t.p * th.stderr, th.n};
}

// Coupled scan over a p-grid: the same (sample, site) uniform decides
// occupancy at every p, so every estimate is monotone in p sample-by-sample.
// Also accumulates the cross moments needed for paired finite differences.
struct CoupledScan {
  std::vector<double> p_grid;
  std::vector<TwoPointTable> tables;
  // per interval i: sum over samples of S_i * S_{i+1}
  std::vector<uint64_t> cross_reach;
};

inline CoupledScan estimate_two_point_grid(const BoxSpec& spec, std::vector<double> p_grid,
                                           uint64_t n_samples, const RngStream& base,
                                           int threads = 1) {
  for (size_t i = 1; i < p_grid.size(); ++i)
    if (p_grid[i] <= p_grid[i - 1])
      throw std::invalid_argument("p grid must be strictly increasing");
  Box box(spec);
  size_t np = p_grid.size();
  bool antipodal = spec.boundary == Boundary::torus && spec.odd_side();

  struct Slot {
    std::vector<TwoPointTable> tabs;
    std::vector<uint64_t> cross;
    std::vector<uint64_t> reach_tmp;
  };
  int nslots = std::max(threads, 1);
  std::vector<Slot> slots(nslots);
  for (auto& sl : slots) {
    sl.cross.assign(np > 0 ? np - 1 : 0, 0);
    sl.reach_tmp.assign(np, 0);
    for (size_t i = 0; i < np; ++i) {
      TwoPointTable t;
      t.box = spec;
      t.p = p_grid[i];
      t.antipodal = antipodal;
      t.cnt_one.assign(box.volume(), 0);
      t.cnt_both.assign(box.volume(), 0);
      sl.tabs.push_back(std::move(t));
    }
  }
  std::vector<Workspace> wss;
  for (int i = 0; i < nslots; ++i) wss.emplace_back(box);

  run_batches(n_samples, threads, [&](int slot, BatchRange r) {
    RngStream rng = base.substream(kStreamRoleTwoPoint + r.task);
    auto& sl = slots[slot];
    for (uint64_t s = r.begin; s < r.end; ++s) {
      for (size_t i = 0; i < np; ++i) {
        CoupledLazyOccupancy view(rng, p_grid[i], s - r.begin);
        uint64_t before = sl.tabs[i].sum_reach;
        detail::accumulate_sample(
            box, wss[slot], sl.tabs[i], [&](uint64_t) { return view; }, s);
        sl.reach_tmp[i] = sl.tabs[i].sum_reach - before;
      }
      for (size_t i = 0; i + 1 < np; ++i) sl.cross[i] += sl.reach_tmp[i] * sl.reach_tmp[i + 1];
    }
  });

  CoupledScan out;
  out.p_grid = p_grid;
  out.tables = std::move(slots[0].tabs);
  out.cross_reach = std::move(slots[0].cross);
  for (int i = 1; i < nslots; ++i) {
    for (size_t j = 0; j < np; ++j) out.tables[j].merge(slots[i].tabs[j]);
    for (size_t j = 0; j + 1 < np; ++j) out.cross_reach[j] += slots[i].cross[j];
  }
  for (size_t j = 0; j < np; ++j) out.tables[j].n_samples = n_samples;
  return out;
}

// Differential inequalities of the subcritical phase (finite-difference
// form): d tau_hat(0)/dp <= tau_hat(0)^2, d chi/dp <= chi * tau_hat(0).
// The bound side is evaluated at the right endpoint, which dominates the
// mean-value point since tau_hat(0) is nondecreasing.
struct DiffInequalityRow {
  double p_lo = 0, p_hi = 0;
  double fd_tau = 0, bound_tau = 0, margin_tau = 0, tol_tau = 0;
  double fd_chi = 0, bound_chi = 0, margin_chi = 0, tol_chi = 0;
  bool coarse_warning = false;
};

struct DiffInequalityReport {
  std::vector<DiffInequalityRow> rows;
  bool all_pass(double n_sigma = 4.0) const {
    for (auto& r : rows)
      if (r.margin_tau < -n_sigma * r.tol_tau || r.margin_chi < -n_sigma * r.tol_chi)
        return false;
    return true;
  }
};

inline DiffInequalityReport diff_inequality_check(const CoupledScan& scan) {
  DiffInequalityReport rep;
  const auto& g = scan.p_grid;
  for (size_t i = 0; i + 1 < g.size(); ++i) {
    const auto& a = scan.tables[i];
    const auto& b = scan.tables[i + 1];
    double n = static_cast<double>(a.n_samples);
    double dp = g[i + 1] - g[i];
    Estimate ta = a.tau_hat0(), tb = b.tau_hat0();
    // paired variance of (S_b - S_a) from integer moments
    double es2a = static_cast<double>(a.sum_reach_sq) / n;
    double es2b = static_cast<double>(b.sum_reach_sq) / n;
    double esab = static_cast<double>(scan.cross_reach[i]) / n;
    double var_a = es2a - ta.value * ta.value;
    double var_b = es2b - tb.value * tb.value;
    double cov = esab - ta.value * tb.value;

    DiffInequalityRow row;
    row.p_lo = g[i];
    row.p_hi = g[i + 1];
    row.fd_tau = (tb.value - ta.value) / dp;
    double fd_tau_var = std::max(0.0, var_a + var_b - 2 * cov) / n / (dp * dp);
    row.bound_tau = tb.value * tb.value;
    double bound_tau_sd = 2 * tb.value * tb.stderr;
    row.margin_tau = row.bound_tau - row.fd_tau;
    row.tol_tau = combine_stderr(std::sqrt(fd_tau_var), bound_tau_sd);

    double chi_a = 1 + g[i] * ta.value, chi_b = 1 + g[i + 1] * tb.value;
    row.fd_chi = (chi_b - chi_a) / dp;
    double fd_chi_var =
        std::max(0.0, g[i + 1] * g[i + 1] * var_b + g[i] * g[i] * var_a -
                          2 * g[i] * g[i + 1] * cov) /
        n / (dp * dp);
    row.bound_chi = chi_b * tb.value;
    double bound_chi_sd = combine_stderr(chi_b * tb.stderr, tb.value * g[i + 1] * tb.stderr);
    row.margin_chi = row.bound_chi - row.fd_chi;
    row.tol_chi = combine_stderr(std::sqrt(fd_chi_var), bound_chi_sd);
    row.coarse_warning = std::sqrt(fd_tau_var) > std::abs(row.fd_tau);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace perclab
