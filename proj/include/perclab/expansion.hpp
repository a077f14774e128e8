#pragma once

// Lace-expansion coefficients from Definition 2.8: Pi^(0) from the
// doubly-connected event, Pi^(1) from pairs of independent configurations
// via the E'(v,u;A) event, the alternating partial sums, the Ornstein-
// Zernike residual, and the Section-3 inequality checks. The estimator
// conditions on the realized modified cluster per sample pair.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perclab/diagrams.hpp"
#include "perclab/fourier.hpp"
#include "perclab/twopoint.hpp"

namespace perclab {

struct PiTables {
  BoxSpec box;
  double p = 0.0;
  uint64_t n_samples = 0;
  bool antipodal = false;

  // {0 <=> x} counts (antipodal pair layout as in TwoPointTable)
  std::vector<uint32_t> dc_one, dc_both;
  // Pi^(1) weights: per sample, w(x) = # of u0 with {0<=>u0}_0 and
  // E'(u0,x;C0)_1; antipodal-averaged, stored in half/quarter units
  std::vector<uint64_t> pi1_sum2;   // sum of 2 w(x)
  std::vector<uint64_t> pi1_sumsq4; // sum of (2 w(x))^2

  double dc_mean(SiteIndex s) const {
    double n = static_cast<double>(n_samples);
    if (antipodal) return (dc_both[s] + 0.5 * dc_one[s]) / n;
    return dc_both[s] / n;
  }
  double dc_stderr(SiteIndex s) const {
    if (n_samples < 2) return 0.0;
    double n = static_cast<double>(n_samples);
    double m = dc_mean(s);
    double ew2 = antipodal ? (dc_both[s] + 0.25 * dc_one[s]) / n : m;
    double var = (ew2 - m * m) * n / (n - 1.0);
    return var > 0 ? std::sqrt(var / n) : 0.0;
  }

  // Pi^(0)(x) = P(0 <=> x) - J(x); zero for |x| <= 1 by construction.
  double pi0(const Box& b, SiteIndex s) const {
    double j = b.displacement_norm(s) == 1 ? 1.0 : 0.0;
    return dc_mean(s) - j;
  }
  double pi0_stderr(SiteIndex s) const { return dc_stderr(s); }

  // Pi^(1)(x) = p * E[w(x)]
  double pi1(SiteIndex s) const {
    return p * 0.5 * static_cast<double>(pi1_sum2[s]) / static_cast<double>(n_samples);
  }
  double pi1_stderr(SiteIndex s) const {
    if (n_samples < 2) return 0.0;
    double n = static_cast<double>(n_samples);
    double m = 0.5 * static_cast<double>(pi1_sum2[s]) / n;
    double ew2 = 0.25 * static_cast<double>(pi1_sumsq4[s]) / n;
    double var = (ew2 - m * m) * n / (n - 1.0);
    return var > 0 ? p * std::sqrt(var / n) : 0.0;
  }

  // Pi_{p,n} = sum_{m<=n} (-1)^m Pi^(m); n <= 1 from Monte Carlo
  std::vector<double> partial_sum(int n) const {
    Box b(box);
    std::vector<double> out(b.volume());
    for (SiteIndex s = 0; s < b.volume(); ++s) {
      out[s] = pi0(b, s);
      if (n >= 1) out[s] -= pi1(s);
    }
    return out;
  }
  std::vector<double> pi0_table() const {
    Box b(box);
    std::vector<double> out(b.volume());
    for (SiteIndex s = 0; s < b.volume(); ++s) out[s] = pi0(b, s);
    return out;
  }
  std::vector<double> pi1_table() const {
    Box b(box);
    std::vector<double> out(b.volume());
    for (SiteIndex s = 0; s < b.volume(); ++s) out[s] = pi1(s);
    return out;
  }
  std::vector<double> pi1_var_table() const {
    Box b(box);
    std::vector<double> out(b.volume());
    for (SiteIndex s = 0; s < b.volume(); ++s) {
      double se = pi1_stderr(s);
      out[s] = se * se;
    }
    return out;
  }

  void merge(const PiTables& o) {
    for (size_t i = 0; i < dc_one.size(); ++i) {
      dc_one[i] += o.dc_one[i];
      dc_both[i] += o.dc_both[i];
      pi1_sum2[i] += o.pi1_sum2[i];
      pi1_sumsq4[i] += o.pi1_sumsq4[i];
    }
    n_samples += o.n_samples;
  }
};

namespace detail {

// One sample pair: tally {0 <=> x} on omega_0 and, for each doubly
// connected u0, the E'(u0, x; C~^{u0}(0)) hits on omega_1.
template <OccupancyView V0, OccupancyView V1>
inline void pi_sample(const Box& box, Workspace& ws, Workspace& closure_marker,
                      Workspace& off_marker, const V0& w0, const V1& w1, PiTables& acc,
                      std::vector<uint32_t>& wcount, std::vector<SiteIndex>& touched) {
  SiteIndex origin = box.origin_index();
  reach_from(box, w0, ws, origin);
  thread_local std::vector<SiteIndex> reach0;
  reach0.clear();
  for (size_t i = 1; i < ws.cluster.size(); ++i) reach0.push_back(ws.cluster[i]);
  for (SiteIndex y : ws.boundary) reach0.push_back(y);

  thread_local std::vector<SiteIndex> u0s;
  u0s.clear();
  for (SiteIndex y : reach0)
    if (doubly_connected_idx(box, w0, ws, origin, y)) u0s.push_back(y);

  // Pi^(0) tally (antipodal)
  ws.begin_mark();  // reuse the marker epoch trick for "is u0 doubly"
  for (SiteIndex y : u0s) ws.mark(y);
  if (acc.antipodal) {
    for (SiteIndex y : u0s) {
      SiteIndex ry = box.reflect(y);
      if (ws.marked(ry))
        acc.dc_both[y]++;
      else {
        acc.dc_one[y]++;
        acc.dc_one[ry]++;
      }
    }
  } else {
    for (SiteIndex y : u0s) acc.dc_both[y]++;
  }

  // Pi^(1): for each u0, the events on omega_1 conditioned on C0
  for (SiteIndex u0 : u0s) {
    auto c0 = modified_cluster_idx(box, w0, ws, origin, u0);
    boundary_closure_idx(box, c0, closure_marker);  // leaves <C0> marked

    // off-<A> reach of u0 on omega_1 (interiors occupied and outside <A>)
    reach_from(box, w1, off_marker, u0,
               [&](SiteIndex s) { return closure_marker.marked(s); });
    // off_marker visit codes: nonzero = off-<A>-connected from u0

    // plain reach of u0 on omega_1
    reach_from(box, w1, ws, u0);
    thread_local std::vector<SiteIndex> reach1;
    reach1.clear();
    for (size_t i = 1; i < ws.cluster.size(); ++i) reach1.push_back(ws.cluster[i]);
    for (SiteIndex y : ws.boundary) reach1.push_back(y);

    for (SiteIndex x : reach1) {
      // through-connection: blocked off <A>, or x in <A>
      bool through = closure_marker.marked(x) || off_marker.code(x) == 0;
      if (!through) continue;
      // no pivotal u' of {u0 <-> x} may be through-connected
      auto piv = pivotal_points_idx(box, w1, ws, u0, x);
      bool ok = true;
      for (SiteIndex up : piv) {
        bool through_up = closure_marker.marked(up) || off_marker.code(up) == 0;
        if (through_up) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      if (wcount[x]++ == 0) touched.push_back(x);
    }
  }

  if (acc.antipodal) {
    // symmetrized weight w~(x) = (w(x) + w(-x))/2, each pair handled once
    for (SiteIndex x : touched) {
      SiteIndex rx = box.reflect(x);
      uint64_t wx = wcount[x];
      uint64_t wr = rx == x ? 0 : wcount[rx];
      if (rx != x && wr != 0 && rx < x) continue;  // pair already handled at rx
      uint64_t tot = rx == x ? 2 * wx : wx + wr;   // = 2 w~
      acc.pi1_sum2[x] += tot;
      acc.pi1_sumsq4[x] += tot * tot;
      if (rx != x) {
        acc.pi1_sum2[rx] += tot;
        acc.pi1_sumsq4[rx] += tot * tot;
      }
    }
  } else {
    for (SiteIndex x : touched) {
      uint64_t w = wcount[x];
      acc.pi1_sum2[x] += 2 * w;
      acc.pi1_sumsq4[x] += 4 * w * w;
    }
  }
  for (SiteIndex x : touched) wcount[x] = 0;
  touched.clear();
}

}  // namespace detail

// Monte Carlo estimation of Pi^(0) and Pi^(1) on a torus (or free) box.
// Requires p below the p_c estimate; the caller enforces the margin.
inline PiTables estimate_pi(const BoxSpec& spec, double p, uint64_t n_samples,
                            const RngStream& base, int threads = 1) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("estimate_pi: p outside [0,1]");
  Box box(spec);
  bool antipodal = spec.boundary == Boundary::torus && spec.odd_side();

  auto make_acc = [&]() {
    PiTables t;
    t.box = spec;
    t.p = p;
    t.antipodal = antipodal;
    t.dc_one.assign(box.volume(), 0);
    t.dc_both.assign(box.volume(), 0);
    t.pi1_sum2.assign(box.volume(), 0);
    t.pi1_sumsq4.assign(box.volume(), 0);
    return t;
  };
  int nslots = std::max(threads, 1);
  std::vector<PiTables> slots;
  std::vector<Workspace> ws1, ws2, ws3;
  std::vector<std::vector<uint32_t>> wcounts(nslots);
  for (int i = 0; i < nslots; ++i) {
    slots.push_back(make_acc());
    ws1.emplace_back(box);
    ws2.emplace_back(box);
    ws3.emplace_back(box);
    wcounts[i].assign(box.volume(), 0);
  }

  run_batches(n_samples, threads, [&](int slot, BatchRange r) {
    RngStream rng = base.substream(kStreamRolePi + r.task);
    std::vector<SiteIndex> touched;
    for (uint64_t s = r.begin; s < r.end; ++s) {
      LazyOccupancy w0(rng, p, s - r.begin, 0);
      LazyOccupancy w1(rng, p, s - r.begin, 1);
      detail::pi_sample(box, ws1[slot], ws2[slot], ws3[slot], w0, w1, slots[slot],
                        wcounts[slot], touched);
    }
  });

  PiTables out = std::move(slots[0]);
  for (int i = 1; i < nslots; ++i) out.merge(slots[i]);
  out.n_samples = n_samples;
  return out;
}

// Ornstein-Zernike residual report: the real-space residual of
// tau = J + Pi_{p,n} + p (J + Pi_{p,n}) * tau (whose exact image is
// R_{p,n}), and the Fourier-solved residual on the momentum grid.
struct OzeReport {
  double p = 0.0;
  int order = 0;
  double sum_abs_residual = 0.0;
  double max_abs_residual = 0.0;
  double sign_violation = 0.0;  // mass of the residual with the wrong sign
  double remainder_chain_bound = 0.0;  // p Pi-hat^(n)(0) tau-hat(0)
  std::vector<double> residual;  // per displacement
  std::vector<double> fourier_residual;  // per grid momentum
};

inline OzeReport oze_residual(DiagramContext& ctx, const PiTables& pi, int order) {
  if (order < 0 || order > 1) throw std::invalid_argument("oze_residual: order in {0,1}");
  const Box& box = ctx.box;
  SiteIndex v = box.volume();
  auto pin = pi.partial_sum(order);
  auto jt = ctx.j;
  std::vector<double> jp(v);
  for (SiteIndex i = 0; i < v; ++i) jp[i] = jt[i] + pin[i];
  auto conv = ctx.eng.convolve(jp, ctx.tau);

  OzeReport rep;
  rep.p = ctx.p;
  rep.order = order;
  rep.residual.resize(v);
  for (SiteIndex i = 0; i < v; ++i) {
    double r = ctx.tau[i] - jp[i] - ctx.p * conv[i];
    rep.residual[i] = r;
    rep.sum_abs_residual += std::abs(r);
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(r));
    // R_{p,n} carries sign (-1)^{n+1}
    double wrong = order == 0 ? std::max(r, 0.0) : std::max(-r, 0.0);
    rep.sign_violation += wrong;
  }

  // remainder chain: sum_x |R_{p,n}(x)| <= p Pi-hat^(n)(0) tau-hat(0)
  double pin_hat0 = 0.0;
  if (order == 0) {
    auto p0 = pi.pi0_table();
    for (double x : p0) pin_hat0 += x;
  } else {
    auto p1 = pi.pi1_table();
    for (double x : p1) pin_hat0 += x;
  }
  double tau_hat0 = 0.0;
  for (double x : ctx.tau) tau_hat0 += x;
  rep.remainder_chain_bound = ctx.p * pin_hat0 * tau_hat0;

  // Fourier-solved residual over the full grid
  auto spec_tau = ctx.eng.forward(ctx.tau);
  auto spec_jp = ctx.eng.forward(jp);
  rep.fourier_residual.resize(v);
  for (SiteIndex i = 0; i < v; ++i) {
    double a = spec_jp[i].real();
    double denom = 1.0 - ctx.p * a;
    double solved = std::abs(denom) > 1e-12 ? a / denom : 0.0;
    rep.fourier_residual[i] = std::abs(spec_tau[i].real() - solved);
  }
  return rep;
}

// index of 2k on the torus grid
inline SiteIndex momentum_double_index(const Box& box, SiteIndex ki) {
  SiteIndex out = 0;
  SiteIndex r = ki;
  for (int j = 0; j < box.dim(); ++j) {
    SiteIndex digit = r % box.side();
    r /= box.side();
    out += ((2 * digit) % box.side()) * box.stride(j);
  }
  return out;
}

// Proposition 3.2 bounds for n = 0, both inequalities over the full k-grid.
struct N0BoundsReport {
  double min_margin_amp = 0.0;   // RHS - |Pi0-hat(k)|, minimal over k
  double min_margin_disp = 0.0;  // displacement bound margin, minimal over k
  double tol_amp = 0.0;          // combined 1-sigma at the minimizing k
  double tol_disp = 0.0;
};

inline N0BoundsReport check_n0_bounds(DiagramContext& ctx, const PiTables& pi) {
  const Box& box = ctx.box;
  SiteIndex v = box.volume();
  double p = ctx.p;

  auto pi0 = pi.pi0_table();
  std::vector<double> var_pi0(v);
  for (SiteIndex i = 0; i < v; ++i) {
    double se = pi.pi0_stderr(i);
    var_pi0[i] = se * se;
  }
  auto spec_pi0 = ctx.eng.forward(pi0);
  auto spec_var = ctx.eng.forward(var_pi0);

  // RHS1 = p^2 (J^{*2} * tau^{*2})(0)
  auto j2c = walk_power_table(2, box);
  std::vector<double> j2(v);
  for (SiteIndex i = 0; i < v; ++i) j2[i] = static_cast<double>(j2c[i]);
  auto j2t = ctx.eng.convolve(j2, ctx.tau);  // J^{*2} * tau
  double rhs1 = 0.0;
  for (SiteIndex i = 0; i < v; ++i) rhs1 += j2t[i] * ctx.tau[box.reflect(i)];
  rhs1 *= p * p;
  // delta-method var of RHS1: sensitivity 2 p^2 (J^{*2} * tau)(-u)
  double var_rhs1 = 0.0;
  for (SiteIndex i = 0; i < v; ++i) {
    double s = 2 * p * p * j2t[box.reflect(i)];
    var_rhs1 += ctx.var_tau[i] * s * s;
  }

  // RHS2(k) = 2p^2 [ (J_k * J * tau^{*2})(0) + (J^{*2} * tau_k * tau)(0) ]
  // via h(y) = J(y) (J * t2)(-y) and h2(x) = tau(x) (J^{*2} * tau)(-x):
  // term(k) = h-hat(0) - h-hat(k)
  auto jt2 = ctx.eng.convolve(ctx.j, ctx.t2);
  std::vector<double> h1(v), h2(v);
  for (SiteIndex i = 0; i < v; ++i) {
    h1[i] = ctx.j[i] * jt2[box.reflect(i)];
    h2[i] = ctx.tau[i] * j2t[box.reflect(i)];
  }
  auto spec_h1 = ctx.eng.forward(h1);
  auto spec_h2 = ctx.eng.forward(h2);

  N0BoundsReport rep;
  rep.min_margin_amp = 1e300;
  rep.min_margin_disp = 1e300;
  double pi0_hat0 = spec_pi0[box.origin_index()].real();
  double var_hat0 = spec_var[box.origin_index()].real();
  for (SiteIndex ki = 0; ki < v; ++ki) {
    double pk = spec_pi0[ki].real();
    // var of Pi0-hat(k) = sum var(x) cos^2(kx) = (var-hat(0) + var-hat(2k))/2
    SiteIndex k2 = momentum_double_index(box, ki);
    double var_pk = 0.5 * (var_hat0 + spec_var[k2].real());
    double margin = rhs1 - std::abs(pk);
    double tol = std::sqrt(std::max(0.0, var_pk) + var_rhs1);
    if (margin < rep.min_margin_amp) {
      rep.min_margin_amp = margin;
      rep.tol_amp = tol;
    }
    // displacement bound
    double lhs2 = std::abs(pi0_hat0 - pk);
    double rhs2 = 2 * p * p *
                  ((spec_h1[box.origin_index()].real() - spec_h1[ki].real()) +
                   (spec_h2[box.origin_index()].real() - spec_h2[ki].real()));
    // var of the difference: sum var(x)(1-cos kx)^2
    double var_lhs2 = 1.5 * var_hat0 - 2 * spec_var[ki].real() + 0.5 * spec_var[k2].real();
    double margin2 = rhs2 - lhs2;
    double tol2 = std::sqrt(std::max(0.0, var_lhs2));
    if (margin2 < rep.min_margin_disp) {
      rep.min_margin_disp = margin2;
      rep.tol_disp = tol2;
    }
  }
  return rep;
}

// Proposition 3.5 at n in {0,1} and the unsummed corollary at n=1.
struct SummedBoundsReport {
  double lhs_n0 = 0, rhs_n0 = 0, tol_n0 = 0;     // p sum Pi0 <= tri_bullet(0)
  double lhs_n1 = 0, rhs_n1 = 0, tol_n1 = 0;     // p sum Pi1 <= tri_bullet(0) T_p
  double lhs_sup = 0, rhs_sup = 0, tol_sup = 0;  // sup Pi1 <= tri_b(0)(1+tri_bc)
};

inline SummedBoundsReport check_summed_bounds(DiagramContext& ctx, const PiTables& pi,
                                              const DiagramReport& tri) {
  const Box& box = ctx.box;
  SiteIndex v = box.volume();
  SummedBoundsReport rep;
  double sum0 = 0, var0 = 0, sum1 = 0, var1 = 0, sup1 = -1e300, sup1_se = 0;
  for (SiteIndex i = 0; i < v; ++i) {
    sum0 += pi.pi0(box, i);
    double se0 = pi.pi0_stderr(i);
    var0 += se0 * se0;
    double p1 = pi.pi1(i);
    sum1 += p1;
    double se1 = pi.pi1_stderr(i);
    var1 += se1 * se1;
    if (p1 > sup1) {
      sup1 = p1;
      sup1_se = se1;
    }
  }
  double p = ctx.p;
  rep.lhs_n0 = p * sum0;
  rep.rhs_n0 = tri.bullet_at_origin;
  rep.tol_n0 = combine_stderr(p * std::sqrt(var0), tri.bullet_origin_stderr);
  rep.lhs_n1 = p * sum1;
  rep.rhs_n1 = tri.bullet_at_origin * tri.t_p;
  rep.tol_n1 = combine_stderr(p * std::sqrt(var1),
                              combine_stderr(tri.t_p * tri.bullet_origin_stderr,
                                             tri.bullet_at_origin * tri.t_p_stderr));
  rep.lhs_sup = sup1;
  rep.rhs_sup = tri.bullet_at_origin * (1 + tri.bullet_circ.value);
  rep.tol_sup = combine_stderr(sup1_se, tri.bullet_origin_stderr *
                                            (1 + tri.bullet_circ.value));
  return rep;
}

// Proposition 3.8 displacement bound at n=1, and the Prop. 3.7 right-hand
// side at n=2 (reported; no sampled LHS exists for n >= 2).
struct DisplacementBoundsReport {
  Momentum k;
  double lhs = 0, rhs = 0, tol = 0;
  double prop37_rhs_n2 = 0;
};

inline DisplacementBoundsReport check_displacement_bounds(DiagramContext& ctx,
                                                          const PiTables& pi,
                                                          const DiagramReport& tri,
                                                          const WReport& w, double h_of_k,
                                                          const Momentum& k) {
  const Box& box = ctx.box;
  SiteIndex v = box.volume();
  double p = ctx.p;
  DisplacementBoundsReport rep;
  rep.k = k;

  double lhs = 0, var_lhs = 0;
  for (SiteIndex i = 0; i < v; ++i) {
    double wfac = 1.0 - std::cos(k.dot(box.point_of(i)));
    lhs += wfac * pi.pi1(i);
    double se = pi.pi1_stderr(i);
    var_lhs += wfac * wfac * se * se;
  }
  rep.lhs = p * lhs;

  // J-term: p^2 (J * tau_k * tau)(0) = p^2 sum_x tau_k(x) (J*tau)(-x)
  auto jtau = ctx.eng.convolve(ctx.j, ctx.tau);
  double jterm = 0;
  for (SiteIndex i = 0; i < v; ++i) {
    double wfac = 1.0 - std::cos(k.dot(box.point_of(i)));
    jterm += wfac * ctx.tau[i] * jtau[box.reflect(i)];
  }
  jterm *= p * p;

  double bracket = tri.bullet_at_origin * (tri.bullet_circ.value + tri.triangle.value) +
                   tri.circ.value + tri.triangle.value;
  rep.rhs = 9 * w.w.value * bracket + jterm;
  rep.tol = combine_stderr(p * std::sqrt(var_lhs), 9 * w.w.stderr * bracket);

  // Prop. 3.7 RHS at n=2: 11(n+1) T^{1 v (n-2)} (tri^{**o})^3 W(k)
  //                       [1 + tri^o + T + H(k)/W(k)]
  double t = tri.t_p, bbc = tri.bullet_bullet_circ.value;
  double wv = w.w.value;
  rep.prop37_rhs_n2 =
      11.0 * 3.0 * t * bbc * bbc * bbc * ((1 + tri.circ.value + t) * wv + h_of_k);
  return rep;
}

// BK consistency: P(0 <=> x) <= tau(x)^2 for |x| >= 2, statistically.
struct BkReport {
  double min_margin = 0.0;
  double tol_at_min = 0.0;
  SiteIndex argmin = 0;
};

inline BkReport check_bk(const Box& box, const TwoPointTable& t, const PiTables& pi) {
  BkReport rep;
  rep.min_margin = 1e300;
  for (SiteIndex i = 0; i < box.volume(); ++i) {
    if (box.displacement_norm(i) <= 1) continue;
    double tau = t.mean(i);
    double margin = tau * tau - pi.dc_mean(i);
    double tol = combine_stderr(2 * tau * t.stderr(i), pi.dc_stderr(i));
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.tol_at_min = tol;
      rep.argmin = i;
    }
  }
  return rep;
}

}  // namespace perclab
