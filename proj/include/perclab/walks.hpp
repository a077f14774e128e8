#pragma once

// Exact nearest-neighbor walk combinatorics: the step distribution D, the
// kernel J, and m-fold convolution powers J^{*m} counted by dynamic
// programming with checked integer arithmetic.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perclab/lattice.hpp"

namespace perclab {

struct WalkOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// D(x) = (1/2d) 1{|x|=1}, the step distribution of simple random walk.
inline double step_distribution(const LatticePoint& x, int d) {
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("step_distribution: dimension mismatch");
  return one_norm(x) == 1 ? 1.0 / (2.0 * d) : 0.0;
}

// J(x) = 1{|x|=1} = 2d D(x).
inline double nn_kernel(const LatticePoint& x) { return one_norm(x) == 1 ? 1.0 : 0.0; }

namespace detail {
inline uint64_t checked_add(uint64_t a, uint64_t b) {
  uint64_t s = a + b;
  if (s < a) throw WalkOverflowError("walk count overflow (64-bit)");
  return s;
}
}  // namespace detail

struct WalkPowerTable {
  BoxSpec box;             // free box of radius m
  std::vector<uint64_t> counts;
  uint64_t at(const LatticePoint& x) const {
    Box b(box);
    if (!b.in_range(x)) return 0;
    return counts[b.index_of(x)];
  }
};

// Full table of J^{*m} over the free box of radius m, one dynamic program.
inline WalkPowerTable walk_power_table_free(int m, int d) {
  if (m < 1) throw std::invalid_argument("walk_power_table_free: m must be >= 1");
  WalkPowerTable out;
  out.box = BoxSpec(d, 2 * m + 1, Boundary::free);
  Box box(out.box);
  std::vector<uint64_t> cur(box.volume(), 0), next(box.volume());
  cur[box.origin_index()] = 1;
  for (int step = 0; step < m; ++step) {
    std::fill(next.begin(), next.end(), 0);
    for (SiteIndex i = 0; i < box.volume(); ++i) {
      if (cur[i] == 0) continue;
      uint64_t c = cur[i];
      box.for_each_neighbor(i, [&](SiteIndex n) { next[n] = detail::checked_add(next[n], c); });
    }
    cur.swap(next);
  }
  out.counts = std::move(cur);
  return out;
}

// J^{*m}(x): the number of m-step nearest-neighbor walks from 0 to x.
// Zero whenever m - |x| is odd. Throws WalkOverflowError instead of
// wrapping.
inline uint64_t walk_convolution_power(int m, const LatticePoint& x, int d) {
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("walk_convolution_power: dimension mismatch");
  if (m < 1) throw std::invalid_argument("walk_convolution_power: m must be >= 1");
  if (one_norm(x) > m) return 0;
  if ((m - one_norm(x)) % 2 != 0) return 0;
  return walk_power_table_free(m, d).at(x);
}

// Table of J^{*m} folded onto a torus box, exact in integer arithmetic.
// Used by the diagram ladder, where J^{*m} enters convolutions.
inline std::vector<uint64_t> walk_power_table(int m, const Box& box) {
  if (box.spec().boundary != Boundary::torus)
    throw std::invalid_argument("walk_power_table: torus box required");
  std::vector<uint64_t> cur(box.volume(), 0), next(box.volume());
  cur[box.origin_index()] = 1;
  for (int step = 0; step < m; ++step) {
    std::fill(next.begin(), next.end(), 0);
    for (SiteIndex i = 0; i < box.volume(); ++i) {
      if (cur[i] == 0) continue;
      uint64_t c = cur[i];
      box.for_each_neighbor(i, [&](SiteIndex n) { next[n] = detail::checked_add(next[n], c); });
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace perclab
