#pragma once

// Monte Carlo evaluation of the random-walk integrals behind the triangle
// bounds: plain uniform sampling of momenta over (-pi, pi]^d. The constants
// c^(RW) are always fitted from the estimates, never assumed.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "perclab/fourier.hpp"
#include "perclab/parallel.hpp"
#include "perclab/rng.hpp"
#include "perclab/stats.hpp"

namespace perclab {

inline constexpr uint64_t kStreamRoleRwA = 0x10ull << 32;
inline constexpr uint64_t kStreamRoleRwB = 0x11ull << 32;

namespace detail {

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

template <typename Integrand>
inline Estimate mc_momentum_integral(int d, uint64_t n_mc, const RngStream& base,
                                     int threads, uint64_t role, Integrand&& f) {
  uint64_t batch = 1 << 14;
  uint64_t n_tasks = batch_count(n_mc, batch);
  std::vector<MeanVar> parts(n_tasks);
  run_batches(
      n_mc, threads,
      [&](int, BatchRange r) {
        RngStream rng = base.substream(role + r.task);
        MeanVar mv;
        std::vector<double> comps(d);
        for (uint64_t s = r.begin; s < r.end; ++s) {
          uint64_t local = s - r.begin;
          for (int j = 0; j < d; ++j)
            comps[j] = (rng.uniform(local, static_cast<uint64_t>(j)) * 2.0 - 1.0) * kPi;
          double ch = 0;
          for (int j = 0; j < d; ++j) ch += std::cos(comps[j]);
          mv.add(f(ch / d));
        }
        parts[r.task] = mv;
      },
      batch);
  MeanVar total;
  for (auto& mv : parts) total.merge(mv);
  return total.estimate();
}

}  // namespace detail

// int D-hat(k)^{2m} / [1 - lambda D-hat(k)]^n dk/(2pi)^d, requires d > 2n.
inline Estimate rw_integral(int m, double n, const GreenParams& g, int d, uint64_t n_mc,
                            const RngStream& rng, int threads = 1) {
  if (m < 0) throw std::invalid_argument("rw_integral: m >= 0 required");
  if (n < 0) throw std::invalid_argument("rw_integral: n >= 0 required");
  if (static_cast<double>(d) <= 2.0 * n)
    throw std::invalid_argument("rw_integral: requires d > 2n");
  double lambda = g.lambda;
  return detail::mc_momentum_integral(d, n_mc, rng, threads, kStreamRoleRwA,
                                      [m, n, lambda](double dh) {
                                        double num = detail::ipow(dh, 2 * m);
                                        if (n == 0.0) return num;
                                        return num / std::pow(1.0 - lambda * dh, n);
                                      });
}

enum class RelatedVariant { shifted_average, split_product };

// The two related integrals, uniform in k:
//   shifted-average: D(l)^{2m} G(l)^n (1/2 [G(l+k) + G(l-k)])^r
//   split-product:   D(l)^{2m} G(l)^{n-1} [G(l+k) G(l-k)]^{r/2}
// requires d > 2(n + r).
inline Estimate rw_related_integral(int m, double n, double r, const GreenParams& g,
                                    const Momentum& k, RelatedVariant variant, uint64_t n_mc,
                                    const RngStream& base, int threads = 1) {
  if (m < 0 || m > 1) throw std::invalid_argument("rw_related_integral: m in {0,1}");
  int d = k.dim();
  if (static_cast<double>(d) <= 2.0 * (n + r))
    throw std::invalid_argument("rw_related_integral: requires d > 2(n+r)");
  double lambda = g.lambda;

  uint64_t batch = 1 << 14;
  uint64_t n_tasks = batch_count(n_mc, batch);
  std::vector<MeanVar> parts(n_tasks);
  run_batches(
      n_mc, threads,
      [&](int, BatchRange rg) {
        RngStream rng = base.substream(kStreamRoleRwB + rg.task);
        MeanVar mv;
        std::vector<double> l(d);
        for (uint64_t s = rg.begin; s < rg.end; ++s) {
          uint64_t local = s - rg.begin;
          double ch = 0, chp = 0, chm = 0;
          for (int j = 0; j < d; ++j) {
            double lj = (rng.uniform(local, static_cast<uint64_t>(j)) * 2.0 - 1.0) * kPi;
            ch += std::cos(lj);
            chp += std::cos(lj + k.k[j]);
            chm += std::cos(lj - k.k[j]);
          }
          double dh = ch / d, dhp = chp / d, dhm = chm / d;
          double gl = 1.0 / (1.0 - lambda * dh);
          double gp = 1.0 / (1.0 - lambda * dhp);
          double gm = 1.0 / (1.0 - lambda * dhm);
          double val = detail::ipow(dh, 2 * m);
          if (variant == RelatedVariant::shifted_average) {
            if (n != 0.0) val *= std::pow(gl, n);
            if (r != 0.0) val *= std::pow(0.5 * (gp + gm), r);
          } else {
            if (n != 1.0) val *= std::pow(gl, n - 1.0);
            if (r != 0.0) val *= std::pow(gp * gm, r / 2.0);
          }
          mv.add(val);
        }
        parts[rg.task] = mv;
      },
      batch);
  MeanVar total;
  for (auto& mv : parts) total.merge(mv);
  return total.estimate();
}

}  // namespace perclab
