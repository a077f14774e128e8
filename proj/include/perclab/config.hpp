#pragma once

// Site configurations: bit-packed realizations for small boxes and lazy
// counter-RNG-backed views for boxes too large to materialize. Everything
// downstream is generic over an occupancy view (occupied(site) -> bool).

#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perclab/lattice.hpp"
#include "perclab/rng.hpp"

namespace perclab {

template <typename V>
concept OccupancyView = requires(const V& v, SiteIndex s) {
  { v.occupied(s) } -> std::convertible_to<bool>;
};

// Bit-packed occupancy of a finite box at parameter p; omega is identified
// with the set of occupied sites.
class SiteConfig {
 public:
  SiteConfig(const BoxSpec& spec, double p)
      : box_(spec), p_(p), bits_((Box(spec).volume() + 63) / 64, 0) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("SiteConfig: p outside [0,1]");
  }

  const BoxSpec& box() const { return box_; }
  double p() const { return p_; }
  SiteIndex volume() const { return 64 * bits_.size() >= 64 ? Box(box_).volume() : 0; }

  bool occupied(SiteIndex s) const { return (bits_[s >> 6] >> (s & 63)) & 1; }
  void set(SiteIndex s, bool v) {
    if (v)
      bits_[s >> 6] |= (1ull << (s & 63));
    else
      bits_[s >> 6] &= ~(1ull << (s & 63));
  }
  void assign_mask(uint64_t mask) {  // first 64 sites; used by enumerators
    bits_[0] = mask;
  }
  size_t popcount() const {
    size_t n = 0;
    for (uint64_t w : bits_) n += static_cast<size_t>(__builtin_popcountll(w));
    return n;
  }

 private:
  BoxSpec box_;
  double p_;
  std::vector<uint64_t> bits_;
};

// sample_config: each site occupied independently with probability p,
// deterministic given (seed, stream_index, sample_index).
inline SiteConfig sample_config(const BoxSpec& spec, double p, const RngStream& rng,
                                uint64_t sample_index = 0, int subconfig = 0) {
  SiteConfig cfg(spec, p);
  SiteIndex v = Box(spec).volume();
  for (SiteIndex s = 0; s < v; ++s)
    if (rng.bernoulli(p, sample_index, draw_tag(s, subconfig))) cfg.set(s, true);
  return cfg;
}

// Lazy view: occupancy computed on demand, never materialized. Suitable for
// boxes with astronomically many sites when only a cluster is explored.
class LazyOccupancy {
 public:
  LazyOccupancy(const RngStream& rng, double p, uint64_t sample_index, int subconfig = 0)
      : rng_(rng), p_(p), sample_(sample_index), sub_(subconfig) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("LazyOccupancy: p outside [0,1]");
  }
  bool occupied(SiteIndex s) const { return rng_.bernoulli(p_, sample_, draw_tag(s, sub_)); }

 private:
  RngStream rng_;
  double p_;
  uint64_t sample_;
  int sub_;
};

// Lazy view thresholded at p with shared uniforms: the same (sample, site)
// uniform decides occupancy at every p, giving the monotone coupling used
// by p-grid scans.
class CoupledLazyOccupancy {
 public:
  CoupledLazyOccupancy(const RngStream& rng, double p, uint64_t sample_index, int subconfig = 0)
      : rng_(rng), p_(p), sample_(sample_index), sub_(subconfig) {}
  bool occupied(SiteIndex s) const {
    return rng_.uniform(sample_, draw_tag(s, sub_)) < p_;
  }
  CoupledLazyOccupancy at_p(double p) const {
    return CoupledLazyOccupancy(rng_, p, sample_, sub_);
  }

 private:
  RngStream rng_;
  double p_;
  uint64_t sample_;
  int sub_;
};

// View with one site's occupancy overridden (conditioning on an occupied
// origin, deleting a designated vertex, ...).
template <OccupancyView V>
class OverrideOccupancy {
 public:
  OverrideOccupancy(const V& base, SiteIndex site, bool value)
      : base_(&base), site_(site), value_(value) {}
  bool occupied(SiteIndex s) const { return s == site_ ? value_ : base_->occupied(s); }

 private:
  const V* base_;
  SiteIndex site_;
  bool value_;
};

// View with a fixed set of sites masked vacant (off-A connectivity).
template <OccupancyView V, typename SetLike>
class MaskedOccupancy {
 public:
  MaskedOccupancy(const V& base, const SetLike& vacant) : base_(&base), vacant_(&vacant) {}
  bool occupied(SiteIndex s) const {
    return vacant_->count(s) ? false : base_->occupied(s);
  }

 private:
  const V* base_;
  const SetLike* vacant_;
};

}  // namespace perclab
