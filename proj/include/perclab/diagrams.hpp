#pragma once

// FFT-convolution evaluation on the torus of the diagrammatic quantities:
// the triangle family and T_p, the displacement quantities W_p(k) and
// H_p(b1,b2;k), the (J^{*m} * tau^{*n}) ladder, and the tau-extraction
// inequality. Standard errors are first-order delta-method propagations
// under an independent-displacement approximation and are flagged as such.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perclab/fourier.hpp"
#include "perclab/lattice.hpp"
#include "perclab/twopoint.hpp"
#include "perclab/walks.hpp"

namespace perclab {

inline std::vector<double> j_table(const Box& box) {
  std::vector<double> j(box.volume(), 0.0);
  for (SiteIndex i = 0; i < box.volume(); ++i)
    if (box.displacement_norm(i) == 1) j[i] = 1.0;
  return j;
}

// Shared context: the tau table, its pointwise variance, the convolution
// powers t2 = tau*tau and t3 = tau*tau*tau, and an FFT engine.
struct DiagramContext {
  Box box;
  double p;
  FftEngine eng;
  std::vector<double> tau;
  std::vector<double> var_tau;  // per-displacement variance of the estimate
  std::vector<double> t2, t3;
  std::vector<double> j;

  DiagramContext(const BoxSpec& spec, double p_, std::vector<double> tau_,
                 std::vector<double> var_)
      : box(spec), p(p_), eng(box), tau(std::move(tau_)), var_tau(std::move(var_)) {
    if (spec.boundary != Boundary::torus)
      throw std::invalid_argument("DiagramContext: torus box required");
    t2 = eng.convolve(tau, tau);
    t3 = eng.convolve(t2, tau);
    j = j_table(box);
  }

  static DiagramContext from_table(const TwoPointTable& t) {
    Box b(t.box);
    std::vector<double> var(b.volume());
    for (SiteIndex i = 0; i < b.volume(); ++i) {
      double se = t.stderr(i);
      var[i] = se * se;
    }
    return DiagramContext(t.box, t.p, t.tau(), std::move(var));
  }

  // delta-method variance of a diagram whose sensitivity to tau(u) is
  // s(x-u): var(x) = (var_tau * s^2)(x), plus an optional delta term a
  // (coefficient of delta_{x,u} in the sensitivity).
  std::vector<double> propagate_var(const std::vector<double>& s, double delta_coeff = 0.0) {
    std::vector<double> s2(s.size());
    for (size_t i = 0; i < s.size(); ++i) s2[i] = s[i] * s[i];
    auto v = eng.convolve(var_tau, s2);
    if (delta_coeff != 0.0)
      for (size_t i = 0; i < v.size(); ++i)
        v[i] += delta_coeff * delta_coeff * var_tau[i] +
                2 * delta_coeff * var_tau[i] * s[box.origin_index()];
    for (auto& x : v)
      if (x < 0) x = 0;
    return v;
  }
};

struct DiagramValue {
  double value = 0.0;
  double stderr = 0.0;
  SiteIndex argmax = 0;
};

struct DiagramReport {
  double p = 0.0;
  DiagramValue triangle;            // sup_x p^2 (tau*tau*tau)(x)
  DiagramValue circ;                // sup over all x
  DiagramValue bullet;              // sup over x != 0
  DiagramValue bullet_circ;         // sup over x != 0
  DiagramValue bullet_bullet_circ;  // sup over all x
  double bullet_at_origin = 0.0;    // recorded runner-up at the excluded point
  double bullet_circ_at_origin = 0.0;
  double bullet_origin_stderr = 0.0;
  double t_p = 0.0;  // (1 + tri) tri^{bc} + tri tri^{bbc}, by construction
  double t_p_stderr = 0.0;
  bool stderr_approximate = true;
};

namespace detail {
inline DiagramValue table_sup(const std::vector<double>& vals, const std::vector<double>& var,
                              SiteIndex exclude = kInvalidSite) {
  DiagramValue best;
  best.value = -1e300;
  for (SiteIndex i = 0; i < vals.size(); ++i) {
    if (i == exclude) continue;
    if (vals[i] > best.value) {
      best.value = vals[i];
      best.argmax = i;
    }
  }
  best.stderr = std::sqrt(var.empty() ? 0.0 : var[best.argmax]);
  return best;
}
}  // namespace detail

// The triangle family of Def. 3.4, all as affine combinations of tau, t2, t3:
//   tri(x)      = p^2 t3
//   tri^o(x)    = p^2 (t3 + t2)
//   tri^*(x)    = p (t2 + p t3)
//   tri^{*o}(x) = p (tau + (1+p) t2 + p t3)
//   tri^{**o}(x)= delta + (1+2p) tau + (2p+p^2) t2 + p^2 t3
inline DiagramReport triangle_family(DiagramContext& ctx) {
  const auto& tau = ctx.tau;
  const auto& t2 = ctx.t2;
  const auto& t3 = ctx.t3;
  double p = ctx.p;
  SiteIndex v = ctx.box.volume();
  SiteIndex o = ctx.box.origin_index();

  std::vector<double> tri(v), circ(v), bullet(v), bc(v), bbc(v);
  for (SiteIndex i = 0; i < v; ++i) {
    tri[i] = p * p * t3[i];
    circ[i] = p * p * (t3[i] + t2[i]);
    bullet[i] = p * (t2[i] + p * t3[i]);
    bc[i] = p * (tau[i] + (1 + p) * t2[i] + p * t3[i]);
    bbc[i] = (1 + 2 * p) * tau[i] + (2 * p + p * p) * t2[i] + p * p * t3[i];
  }
  bbc[o] += 1.0;

  // sensitivity s(y) = c_tau * tau(y) + c_t2 * t2(y) for the delta-method
  // variances; a delta term is passed to propagate_var separately
  auto make_sens = [&](double, double c_tau_slot, double c_t2_slot) {
    std::vector<double> out(v);
    for (SiteIndex i = 0; i < v; ++i) out[i] = c_tau_slot * tau[i] + c_t2_slot * t2[i];
    return out;
  };

  DiagramReport rep;
  rep.p = p;
  auto var_tri = ctx.propagate_var(make_sens(0, 0, 3 * p * p));
  rep.triangle = detail::table_sup(tri, var_tri);
  auto var_circ = ctx.propagate_var(make_sens(0, 2 * p * p, 3 * p * p));
  rep.circ = detail::table_sup(circ, var_circ);
  auto var_bullet = ctx.propagate_var(make_sens(0, 2 * p, 3 * p * p));
  rep.bullet = detail::table_sup(bullet, var_bullet, o);
  auto var_bc = ctx.propagate_var(make_sens(p, 2 * p * (1 + p), 3 * p * p), p);
  rep.bullet_circ = detail::table_sup(bc, var_bc, o);
  auto var_bbc =
      ctx.propagate_var(make_sens(1 + 2 * p, 2 * (2 * p + p * p), 3 * p * p), 1 + 2 * p);
  rep.bullet_bullet_circ = detail::table_sup(bbc, var_bbc);

  rep.bullet_at_origin = bullet[o];
  rep.bullet_circ_at_origin = bc[o];
  rep.bullet_origin_stderr = std::sqrt(var_bullet[o]);

  double tri_v = rep.triangle.value, bc_v = rep.bullet_circ.value,
         bbc_v = rep.bullet_bullet_circ.value;
  rep.t_p = (1 + tri_v) * bc_v + tri_v * bbc_v;
  double dd_tri = bc_v + bbc_v, dd_bc = 1 + tri_v, dd_bbc = tri_v;
  rep.t_p_stderr = std::sqrt(dd_tri * dd_tri * rep.triangle.stderr * rep.triangle.stderr +
                             dd_bc * dd_bc * rep.bullet_circ.stderr * rep.bullet_circ.stderr +
                             dd_bbc * dd_bbc * rep.bullet_bullet_circ.stderr *
                                 rep.bullet_bullet_circ.stderr);
  return rep;
}

// W_p(x;k) = p (tau_{p,k} * tau^o)(x) and its torus supremum.
struct WReport {
  Momentum k;
  DiagramValue w;  // sup_x with maximizer
};

inline WReport w_displacement(DiagramContext& ctx, const Momentum& k) {
  SiteIndex v = ctx.box.volume();
  auto tk = displaced_table(ctx.box, ctx.tau, k);
  auto conv = ctx.eng.convolve(tk, ctx.tau);
  std::vector<double> w(v);
  for (SiteIndex i = 0; i < v; ++i) w[i] = ctx.p * (tk[i] + conv[i]);

  // delta-method variance: sensitivity has a displaced slot and a plain slot
  std::vector<double> wfac(v), tauo(ctx.tau);
  tauo[ctx.box.origin_index()] += 1.0;
  for (SiteIndex i = 0; i < v; ++i)
    wfac[i] = 1.0 - std::cos(k.dot(ctx.box.point_of(i)));
  std::vector<double> a(v), b(v), ab(v), va(v);
  for (SiteIndex i = 0; i < v; ++i) {
    a[i] = tauo[i] * tauo[i];
    b[i] = tk[i] * tk[i];
    ab[i] = tauo[i] * tk[i];
    va[i] = ctx.var_tau[i] * wfac[i] * wfac[i];
  }
  auto term1 = ctx.eng.convolve(va, a);
  auto term2 = ctx.eng.convolve(ctx.var_tau, b);
  std::vector<double> vw(v), vab(v);
  for (SiteIndex i = 0; i < v; ++i) vab[i] = ctx.var_tau[i] * wfac[i];
  auto term3 = ctx.eng.convolve(vab, ab);
  for (SiteIndex i = 0; i < v; ++i)
    vw[i] = std::max(0.0, ctx.p * ctx.p * (term1[i] + term2[i] + 2 * term3[i]));

  WReport rep;
  rep.k = k;
  rep.w = detail::table_sup(w, vw);
  return rep;
}

// H_p(b1,b2;k), the five-point displacement diagram, evaluated exactly by a
// per-translate FFT chain (two products and four transforms per translate).
// O(V) transforms of size V; intended for boxes with V up to ~2*10^4.
inline double h_displacement(DiagramContext& ctx, const Momentum& k, const LatticePoint& b1,
                             const LatticePoint& b2) {
  const Box& box = ctx.box;
  SiteIndex v = box.volume();
  const auto& tau = ctx.tau;
  auto tk = displaced_table(box, tau, k);

  // B(x) = (tau*tau)(x - b2)
  std::vector<double> bshift(v);
  SiteIndex ib2 = box.index_of(fold_to_box(b2, box.spec()).point);
  for (SiteIndex i = 0; i < v; ++i) {
    // (x - b2) index: digits subtract with wrap
    auto px = box.point_of(i);
    auto pb = box.point_of(ib2);
    LatticePoint diff(box.dim());
    for (int j = 0; j < box.dim(); ++j) diff[j] = px[j] - pb[j];
    bshift[i] = ctx.t2[box.index_of(diff)];
  }
  auto spec_tk = ctx.eng.forward(tk);
  auto spec_b = ctx.eng.forward(bshift);

  // per-axis difference index tables: sub[j][a*L+b] = ((a-b) mod L) * L^j
  int L = box.side(), d = box.dim();
  std::vector<std::vector<SiteIndex>> sub(d, std::vector<SiteIndex>(L * L));
  for (int j = 0; j < d; ++j)
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b)
        sub[j][a * L + b] = static_cast<SiteIndex>((a - b + L) % L) * box.stride(j);
  std::vector<uint8_t> digits(v * d);
  for (SiteIndex i = 0; i < v; ++i) {
    SiteIndex r = i;
    for (int j = 0; j < d; ++j) {
      digits[i * d + j] = static_cast<uint8_t>(r % L);
      r /= L;
    }
  }
  auto gather_rev = [&](SiteIndex t, std::vector<double>& out) {
    // out[z] = tau[t - z]
    const uint8_t* td = &digits[t * d];
    for (SiteIndex z = 0; z < v; ++z) {
      const uint8_t* zd = &digits[z * d];
      SiteIndex idx = 0;
      for (int j = 0; j < d; ++j) idx += sub[j][td[j] * L + zd[j]];
      out[z] = tau[idx];
    }
  };

  SiteIndex ib1 = box.index_of(fold_to_box(b1, box.spec()).point);
  std::vector<double> tau_b1(v);  // tau(w - b1)
  {
    const uint8_t* bd = &digits[ib1 * d];
    for (SiteIndex w = 0; w < v; ++w) {
      const uint8_t* wd = &digits[w * d];
      SiteIndex idx = 0;
      for (int j = 0; j < d; ++j) idx += sub[j][wd[j] * L + bd[j]];
      tau_b1[w] = tau[idx];
    }
  }

  std::vector<double> trev(v), g(v), h(v);
  double total = 0.0;
  for (SiteIndex t = 0; t < v; ++t) {
    gather_rev(t, trev);  // trev[y] = tau(t - y)
    bool any = false;
    for (SiteIndex z = 0; z < v; ++z) {
      g[z] = tau[z] * trev[z];
      h[z] = trev[z] * tau_b1[z];
      any |= (g[z] != 0.0) || (h[z] != 0.0);
    }
    if (!any) continue;
    auto gs = ctx.eng.forward(g);
    for (SiteIndex i = 0; i < v; ++i) gs[i] *= spec_tk[i];
    auto a_t = ctx.eng.inverse_real(gs);  // A_t(u) = sum_z tau(z) tau(t-z) tau_k(u-z)
    auto hs = ctx.eng.forward(h);
    for (SiteIndex i = 0; i < v; ++i) hs[i] *= spec_b[i];
    auto q_t = ctx.eng.inverse_real(hs);  // Q_t(u) = sum_w tau(t-w) tau(w-b1) B(u-w)
    double acc = 0;
    for (SiteIndex u = 0; u < v; ++u) acc += trev[u] * a_t[u] * q_t[u];
    total += acc;
  }
  double p = ctx.p;
  return p * p * p * p * p * total;
}

struct HReport {
  Momentum k;
  double h_sup = 0.0;
  LatticePoint b1_max, b2_max;
};

// H_p(k) = max over a sampled (b1, b2) grid with b1 != 0 != b2: axis unit
// vectors plus random points of 1-norm <= 3.
inline HReport h_displacement_sup(DiagramContext& ctx, const Momentum& k,
                                  const RngStream& rng, int n_random = 4) {
  const Box& box = ctx.box;
  std::vector<LatticePoint> candidates;
  LatticePoint e(box.dim(), 0);
  e[0] = 1;
  candidates.push_back(e);
  if (box.dim() > 1) {
    LatticePoint e2(box.dim(), 0);
    e2[1] = -1;
    candidates.push_back(e2);
  }
  for (int i = 0; i < n_random; ++i) {
    LatticePoint x(box.dim(), 0);
    int budget = 1 + static_cast<int>(rng.uniform(i, 0) * 3);
    for (int step = 0; step < budget; ++step) {
      int j = static_cast<int>(rng.uniform(i, 1 + step) * box.dim());
      x[j] += rng.uniform(i, 100 + step) < 0.5 ? 1 : -1;
    }
    if (one_norm(x) == 0) x[0] = 1;
    candidates.push_back(fold_to_box(x, box.spec()).point);
  }
  HReport rep;
  rep.k = k;
  for (auto& b1 : candidates)
    for (auto& b2 : candidates) {
      double val = h_displacement(ctx, k, b1, b2);
      if (val > rep.h_sup) {
        rep.h_sup = val;
        rep.b1_max = b1;
        rep.b2_max = b2;
      }
    }
  return rep;
}

// Brute-force quintuple sum, the oracle for the FFT chain (tiny boxes).
inline double h_displacement_direct(const Box& box, const std::vector<double>& tau, double p,
                                    const Momentum& k, const LatticePoint& b1,
                                    const LatticePoint& b2) {
  SiteIndex v = box.volume();
  auto tk = displaced_table(box, tau, k);
  auto at = [&](const LatticePoint& a) { return tau[box.index_of(a)]; };
  double total = 0;
  for (SiteIndex it = 0; it < v; ++it)
    for (SiteIndex iw = 0; iw < v; ++iw)
      for (SiteIndex iz = 0; iz < v; ++iz)
        for (SiteIndex iu = 0; iu < v; ++iu)
          for (SiteIndex iv2 = 0; iv2 < v; ++iv2) {
            auto t = box.point_of(it), w = box.point_of(iw), z = box.point_of(iz),
                 u = box.point_of(iu), vv = box.point_of(iv2);
            auto diff = [&](const LatticePoint& a, const LatticePoint& b) {
              LatticePoint o(box.dim());
              for (int j = 0; j < box.dim(); ++j) o[j] = a[j] - b[j];
              return o;
            };
            auto add = [&](const LatticePoint& a, const LatticePoint& b) {
              LatticePoint o(box.dim());
              for (int j = 0; j < box.dim(); ++j) o[j] = a[j] + b[j];
              return o;
            };
            double term = tau[iz] * at(diff(t, u)) * at(diff(t, z)) *
                          tk[box.index_of(diff(u, z))] * at(diff(t, w)) *
                          at(diff(w, b1)) * at(diff(vv, w)) *
                          at(diff(add(vv, b2), u));
            total += term;
          }
  return p * p * p * p * p * total;
}

// The (J^{*m} * tau^{*n}) ladder of Section 4.2.
struct LadderReport {
  int m = 0, n = 0;
  Momentum k;
  double v_sup = 0.0;        // sup_a p^{m+n-1} V^{(m,n)}(a)
  double w_sup = 0.0;        // sup_a p^{m+n} W^{(m,n)}(a;k)
  double wt_sup = 0.0;       // sup_a p^{m+n} W~^{(m,n)}(a;k)
  SiteIndex v_arg = 0, w_arg = 0, wt_arg = 0;
};

inline std::vector<double> ladder_v_table(DiagramContext& ctx, int m, int n) {
  SiteIndex v = ctx.box.volume();
  std::vector<double> base(v, 0.0);
  if (m == 0) {
    base[ctx.box.origin_index()] = 1.0;
  } else {
    auto counts = walk_power_table(m, ctx.box);
    for (SiteIndex i = 0; i < v; ++i) base[i] = static_cast<double>(counts[i]);
  }
  if (n == 0) return base;
  auto taun = n == 1 ? ctx.tau : ctx.eng.convolve_power(ctx.tau, n);
  return ctx.eng.convolve(base, taun);
}

inline LadderReport ladder(DiagramContext& ctx, int m, int n, const Momentum& k) {
  if (m < 0 || n < 0) throw std::invalid_argument("ladder: m, n >= 0");
  LadderReport rep;
  rep.m = m;
  rep.n = n;
  rep.k = k;
  auto vt = ladder_v_table(ctx, m, n);
  double pm1 = std::pow(ctx.p, m + n - 1);
  double pm = std::pow(ctx.p, m + n);
  std::vector<double> empty;
  auto vs = detail::table_sup(vt, empty);
  rep.v_sup = pm1 * vs.value;
  rep.v_arg = vs.argmax;

  auto tk = displaced_table(ctx.box, ctx.tau, k);
  auto wt_tab = ctx.eng.convolve(tk, vt);
  auto ws = detail::table_sup(wt_tab, empty);
  rep.w_sup = pm * ws.value;
  rep.w_arg = ws.argmax;

  auto jk = displaced_table(ctx.box, ctx.j, k);
  auto wtt = ctx.eng.convolve(jk, vt);
  auto wts = detail::table_sup(wtt, empty);
  rep.wt_sup = pm * wts.value;
  rep.wt_arg = wts.argmax;
  return rep;
}

// Eq. (4.10) pointwise and the tau-extraction inequality for m <= n with
// the binomial constants of the base case:
//   tau^{*n}(x) <= sum_{j=0}^{m} C(m,j) p^j (J^{*m} * tau^{*(n-m+j)})(x).
struct TauExtractionReport {
  double min_margin_410 = 0.0;     // min_x of J + p(J*tau) - tau
  SiteIndex argmin_410 = 0;
  double min_margin_mn = 0.0;      // min_x of RHS - LHS for the (m,n) bound
  SiteIndex argmin_mn = 0;
};

inline TauExtractionReport tau_extraction_check(DiagramContext& ctx, int m, int n) {
  if (m < 1 || n < m)
    throw std::invalid_argument("tau_extraction_check: requires 1 <= m <= n");
  SiteIndex v = ctx.box.volume();
  TauExtractionReport rep;

  auto jtau = ctx.eng.convolve(ctx.j, ctx.tau);
  rep.min_margin_410 = 1e300;
  for (SiteIndex i = 0; i < v; ++i) {
    double margin = ctx.j[i] + ctx.p * jtau[i] - ctx.tau[i];
    if (margin < rep.min_margin_410) {
      rep.min_margin_410 = margin;
      rep.argmin_410 = i;
    }
  }

  // LHS = tau^{*n}; RHS assembled from the binomial expansion
  auto lhs = n == 1 ? ctx.tau : ctx.eng.convolve_power(ctx.tau, n);
  std::vector<double> jm(v, 0.0);
  if (m == 0) {
    jm[ctx.box.origin_index()] = 1.0;
  } else {
    auto counts = walk_power_table(m, ctx.box);
    for (SiteIndex i = 0; i < v; ++i) jm[i] = static_cast<double>(counts[i]);
  }
  std::vector<double> rhs(v, 0.0);
  for (int jidx = 0; jidx <= m; ++jidx) {
    double binom = 1.0;
    for (int t = 0; t < jidx; ++t) binom = binom * (m - t) / (t + 1);
    int power = n - m + jidx;
    std::vector<double> term;
    if (power == 0) {
      term = jm;
    } else {
      auto taup = power == 1 ? ctx.tau : ctx.eng.convolve_power(ctx.tau, power);
      term = ctx.eng.convolve(jm, taup);
    }
    double coeff = binom * std::pow(ctx.p, jidx);
    for (SiteIndex i = 0; i < v; ++i) rhs[i] += coeff * term[i];
  }
  rep.min_margin_mn = 1e300;
  for (SiteIndex i = 0; i < v; ++i) {
    double margin = rhs[i] - lhs[i];
    if (margin < rep.min_margin_mn) {
      rep.min_margin_mn = margin;
      rep.argmin_mn = i;
    }
  }
  return rep;
}

}  // namespace perclab
