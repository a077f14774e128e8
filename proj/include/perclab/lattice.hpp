#pragma once

// Geometry of Z^d and its finite truncations: points, norms, neighbor
// enumeration, centered boxes with torus or free boundary.

#include <array>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace perclab {

using Coord = int32_t;
using SiteIndex = uint64_t;
inline constexpr SiteIndex kInvalidSite = ~SiteIndex{0};

// A point of Z^d in absolute (centered) coordinates.
using LatticePoint = std::vector<Coord>;

inline int one_norm(const LatticePoint& x) {
  int s = 0;
  for (Coord c : x) s += std::abs(c);
  return s;
}

inline bool is_origin(const LatticePoint& x) { return one_norm(x) == 0; }

inline LatticePoint negated(const LatticePoint& x) {
  LatticePoint y(x.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] = -x[i];
  return y;
}

enum class Boundary { torus, free };

// Finite truncation of Z^d. Coordinates range over {lo, ..., lo+side-1}
// with lo = -((side-1)/2); for odd side this is the symmetric centered
// range, which maps x <-> -x onto itself on the torus.
struct BoxSpec {
  int dim = 1;
  int side = 3;
  Boundary boundary = Boundary::torus;

  BoxSpec() = default;
  BoxSpec(int d, int L, Boundary b) : dim(d), side(L), boundary(b) {
    if (d < 1) throw std::invalid_argument("BoxSpec: dim must be >= 1");
    if (L < 2) throw std::invalid_argument("BoxSpec: side must be >= 2");
    if (b == Boundary::torus && L < 3)
      throw std::invalid_argument("BoxSpec: torus side must be >= 3");
    // Reject boxes whose site count overflows the addressable range.
    long double v = 1;
    for (int i = 0; i < d; ++i) {
      v *= L;
      if (v > 9.0e18L) throw std::invalid_argument("BoxSpec: L^d overflows site index range");
    }
  }

  bool odd_side() const { return side % 2 == 1; }
  Coord lo() const { return -((side - 1) / 2); }
  Coord hi() const { return lo() + side - 1; }

  SiteIndex volume() const {
    SiteIndex v = 1;
    for (int i = 0; i < d_(); ++i) v *= static_cast<SiteIndex>(side);
    return v;
  }

 private:
  int d_() const { return dim; }
};

// Indexing helper: row-major order over residues r_j = c_j mod side,
// r in {0,...,side-1}. Residue 0 is the lattice origin, which keeps the
// layout aligned with FFT conventions; centered coordinates are a view.
class Box {
 public:
  explicit Box(const BoxSpec& spec) : spec_(spec) {
    pow_.resize(spec.dim + 1);
    pow_[0] = 1;
    for (int j = 1; j <= spec.dim; ++j)
      pow_[j] = pow_[j - 1] * static_cast<SiteIndex>(spec.side);
  }

  const BoxSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int side() const { return spec_.side; }
  SiteIndex volume() const { return pow_[spec_.dim]; }
  SiteIndex stride(int j) const { return pow_[j]; }

  bool in_range(const LatticePoint& x) const {
    for (Coord c : x)
      if (c < spec_.lo() || c > spec_.hi()) return false;
    return true;
  }

  // Centered coordinate -> residue in {0,...,L-1}.
  Coord to_residue(Coord c) const {
    int L = spec_.side;
    Coord r = static_cast<Coord>(c % L);
    return r < 0 ? r + L : r;
  }
  // Residue -> centered coordinate in {lo,...,hi}.
  Coord to_centered(Coord r) const {
    return r > spec_.hi() ? r - spec_.side : r;
  }

  SiteIndex index_of(const LatticePoint& x) const {
    check_dim(x);
    SiteIndex idx = 0;
    for (int j = 0; j < spec_.dim; ++j)
      idx += static_cast<SiteIndex>(to_residue(x[j])) * pow_[j];
    return idx;
  }

  LatticePoint point_of(SiteIndex idx) const {
    LatticePoint x(spec_.dim);
    for (int j = 0; j < spec_.dim; ++j) {
      x[j] = to_centered(static_cast<Coord>(idx % spec_.side));
      idx /= spec_.side;
    }
    return x;
  }

  SiteIndex origin_index() const { return 0; }

  // Index of -x given the index of x (torus reflection).
  SiteIndex reflect(SiteIndex idx) const {
    SiteIndex out = 0;
    for (int j = 0; j < spec_.dim; ++j) {
      Coord r = static_cast<Coord>(idx % spec_.side);
      idx /= spec_.side;
      Coord nr = r == 0 ? 0 : spec_.side - r;
      out += static_cast<SiteIndex>(nr) * pow_[j];
    }
    return out;
  }

  // Neighbor of idx in direction +-e_j. On the torus this always exists;
  // on a free box it may be out of range (returns kInvalidSite).
  SiteIndex neighbor(SiteIndex idx, int j, int sign) const {
    Coord r = static_cast<Coord>((idx / pow_[j]) % spec_.side);
    if (spec_.boundary == Boundary::torus) {
      if (sign > 0) return r + 1 == spec_.side ? idx - pow_[j] * (spec_.side - 1) : idx + pow_[j];
      return r == 0 ? idx + pow_[j] * (spec_.side - 1) : idx - pow_[j];
    }
    // free boundary: residues wrap centered range; moving past lo/hi leaves the box
    Coord c = to_centered(r);
    Coord nc = c + (sign > 0 ? 1 : -1);
    if (nc < spec_.lo() || nc > spec_.hi()) return kInvalidSite;
    return idx + (static_cast<SiteIndex>(to_residue(nc)) - static_cast<SiteIndex>(r)) * pow_[j];
  }

  template <typename Fn>
  void for_each_neighbor(SiteIndex idx, Fn&& fn) const {
    for (int j = 0; j < spec_.dim; ++j) {
      for (int sign : {+1, -1}) {
        SiteIndex n = neighbor(idx, j, sign);
        if (n != kInvalidSite) fn(n);
      }
    }
  }

  // 1-norm of the centered representative of the displacement idx.
  int displacement_norm(SiteIndex idx) const {
    int s = 0;
    for (int j = 0; j < spec_.dim; ++j) {
      Coord r = static_cast<Coord>(idx % spec_.side);
      idx /= spec_.side;
      s += std::abs(to_centered(r));
    }
    return s;
  }

 private:
  void check_dim(const LatticePoint& x) const {
    if (static_cast<int>(x.size()) != spec_.dim)
      throw std::invalid_argument("dimension mismatch: point has " +
                                  std::to_string(x.size()) + " coords, box has dim " +
                                  std::to_string(spec_.dim));
  }

  BoxSpec spec_;
  std::vector<SiteIndex> pow_;
};

// fold_to_box: torus boundary reduces coordinatewise into the centered
// range; free boundary is the identity with an out-of-box flag.
struct FoldResult {
  LatticePoint point;
  bool out_of_box = false;
};

inline FoldResult fold_to_box(const LatticePoint& x, const BoxSpec& box) {
  if (static_cast<int>(x.size()) != box.dim)
    throw std::invalid_argument("fold_to_box: dimension mismatch");
  FoldResult res;
  res.point = x;
  if (box.boundary == Boundary::torus) {
    Box b(box);
    for (auto& c : res.point) c = b.to_centered(b.to_residue(c));
  } else {
    for (auto c : x)
      if (c < box.lo() || c > box.hi()) res.out_of_box = true;
  }
  return res;
}

}  // namespace perclab
