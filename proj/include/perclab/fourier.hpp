#pragma once

// Momentum-space objects: D-hat, the random-walk Green's function, the
// U-hat comparison kernel, discrete transforms of empirical tables (FFTW
// behind a direct-sum oracle), the discretized second derivative Delta_k,
// and the cosine-split inequality.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "perclab/lattice.hpp"

namespace perclab {

inline constexpr double kPi = std::numbers::pi;

// fold an angle into (-pi, pi]
inline double fold_angle(double t) {
  t = std::remainder(t, 2 * kPi);
  if (t <= -kPi) t = kPi;
  return t;
}

struct Momentum {
  std::vector<double> k;
  Momentum() = default;
  explicit Momentum(std::vector<double> comps) : k(std::move(comps)) {
    for (auto& c : k) c = fold_angle(c);
  }
  int dim() const { return static_cast<int>(k.size()); }
  bool is_zero() const {
    for (double c : k)
      if (c != 0.0) return false;
    return true;
  }
  Momentum operator+(const Momentum& o) const {
    std::vector<double> s(k.size());
    for (size_t i = 0; i < k.size(); ++i) s[i] = k[i] + o.k[i];
    return Momentum(std::move(s));
  }
  Momentum operator-(const Momentum& o) const {
    std::vector<double> s(k.size());
    for (size_t i = 0; i < k.size(); ++i) s[i] = k[i] - o.k[i];
    return Momentum(std::move(s));
  }
  Momentum operator-() const {
    std::vector<double> s(k.size());
    for (size_t i = 0; i < k.size(); ++i) s[i] = -k[i];
    return Momentum(std::move(s));
  }
  double dot(const LatticePoint& x) const {
    double s = 0;
    for (size_t i = 0; i < k.size(); ++i) s += k[i] * x[i];
    return s;
  }
};

// D-hat(k) = (1/d) sum_j cos(k_j), in [-1, 1].
inline double d_hat(const Momentum& k) {
  double s = 0;
  for (double c : k.k) s += std::cos(c);
  return s / static_cast<double>(k.dim());
}

struct GreenParams {
  double lambda = 0.0;
  explicit GreenParams(double l) : lambda(l) {
    if (l < 0.0 || l > 1.0) throw std::invalid_argument("GreenParams: lambda outside [0,1]");
  }
};

struct GreenPoleError : std::domain_error {
  using std::domain_error::domain_error;
};

// G-hat_lambda(k) = 1 / (1 - lambda D-hat(k)); the k=0, lambda=1 pole is an
// error (interpreted as infinity by callers).
inline double green_hat(const GreenParams& g, const Momentum& k) {
  double denom = 1.0 - g.lambda * d_hat(k);
  if (denom <= 0.0) throw GreenPoleError("green_hat: pole at lambda=1, k=0");
  return 1.0 / denom;
}

// U-hat_lambda(k,l) = 3000 [1-D(k)] (G(l-k)G(l) + G(l)G(l+k) + G(l-k)G(l+k)).
// The constant 3000 is taken verbatim; strictly positive for k != 0.
inline double u_hat(const GreenParams& g, const Momentum& k, const Momentum& l) {
  double gk = 1.0 - d_hat(k);
  double gm = green_hat(g, l - k);
  double g0 = green_hat(g, l);
  double gp = green_hat(g, l + k);
  return 3000.0 * gk * (gm * g0 + g0 * gp + gm * gp);
}

// Delta_k f(l) := f(l-k) + f(l+k) - 2 f(l), the discretized second derivative.
template <typename Evaluator>
inline double delta_k(Evaluator&& f, const Momentum& k, const Momentum& l) {
  return f(l - k) + f(l + k) - 2.0 * f(l);
}

// Split of cosines: 1 - cos(t) <= n sum_i [1 - cos(t_i)] whenever the t_i
// sum to t. Returns the margin (RHS - LHS).
inline double cosine_split_check(double t, const std::vector<double>& parts) {
  double s = 0;
  for (double ti : parts) s += ti;
  if (std::abs(s - t) > 1e-9 * std::max(1.0, std::abs(t)))
    throw std::invalid_argument("cosine_split_check: parts do not sum to t");
  double rhs = 0;
  for (double ti : parts) rhs += 1.0 - std::cos(ti);
  rhs *= static_cast<double>(parts.size());
  return rhs - (1.0 - std::cos(t));
}

namespace detail {
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// d-dimensional circular transforms on the box grid. The analysis transform
// uses the e^{+ik.x} convention matching f-hat(k) = sum_x e^{ik.x} f(x).
class FftEngine {
 public:
  explicit FftEngine(const Box& box) : box_(box), v_(box.volume()) {
    if (v_ > (1ull << 31)) throw std::invalid_argument("FftEngine: box too large");
    in_ = fftw_alloc_complex(v_);
    out_ = fftw_alloc_complex(v_);
    std::vector<int> dims(box.dim(), box.side());
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    analysis_ = fftw_plan_dft(box.dim(), dims.data(), in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
    synthesis_ = fftw_plan_dft(box.dim(), dims.data(), in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    if (!analysis_ || !synthesis_) throw std::runtime_error("FftEngine: planning failed");
  }
  ~FftEngine() {
    std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
    fftw_destroy_plan(analysis_);
    fftw_destroy_plan(synthesis_);
    fftw_free(in_);
    fftw_free(out_);
  }
  FftEngine(const FftEngine&) = delete;
  FftEngine& operator=(const FftEngine&) = delete;

  const Box& box() const { return box_; }

  std::vector<std::complex<double>> forward(const std::vector<double>& table) {
    check_size(table.size());
    for (SiteIndex i = 0; i < v_; ++i) {
      in_[i][0] = table[i];
      in_[i][1] = 0.0;
    }
    fftw_execute(analysis_);
    std::vector<std::complex<double>> spec(v_);
    for (SiteIndex i = 0; i < v_; ++i) spec[i] = {out_[i][0], out_[i][1]};
    return spec;
  }

  std::vector<double> inverse_real(const std::vector<std::complex<double>>& spec) {
    check_size(spec.size());
    for (SiteIndex i = 0; i < v_; ++i) {
      in_[i][0] = spec[i].real();
      in_[i][1] = spec[i].imag();
    }
    fftw_execute(synthesis_);
    std::vector<double> table(v_);
    double norm = 1.0 / static_cast<double>(v_);
    for (SiteIndex i = 0; i < v_; ++i) table[i] = out_[i][0] * norm;
    return table;
  }

  // circular convolution (f*g)(x) = sum_y f(y) g(x-y)
  std::vector<double> convolve(const std::vector<double>& f, const std::vector<double>& g) {
    auto fs = forward(f);
    auto gs = forward(g);
    for (SiteIndex i = 0; i < v_; ++i) fs[i] *= gs[i];
    return inverse_real(fs);
  }

  // n-fold convolution power of f
  std::vector<double> convolve_power(const std::vector<double>& f, int n) {
    if (n < 1) throw std::invalid_argument("convolve_power: n >= 1");
    auto fs = forward(f);
    std::vector<std::complex<double>> acc = fs;
    for (int i = 1; i < n; ++i)
      for (SiteIndex j = 0; j < v_; ++j) acc[j] *= fs[j];
    return inverse_real(acc);
  }

 private:
  void check_size(size_t n) const {
    if (n != v_) throw std::invalid_argument("FftEngine: table/box size mismatch");
  }
  Box box_;
  SiteIndex v_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan analysis_;
  fftw_plan synthesis_;
};

// Direct-sum circular convolution, the oracle for the FFT route.
inline std::vector<double> convolve_direct(const Box& box, const std::vector<double>& f,
                                           const std::vector<double>& g) {
  SiteIndex v = box.volume();
  std::vector<double> out(v, 0.0);
  for (SiteIndex x = 0; x < v; ++x) {
    auto px = box.point_of(x);
    double acc = 0;
    for (SiteIndex y = 0; y < v; ++y) {
      auto py = box.point_of(y);
      LatticePoint diff(box.dim());
      for (int j = 0; j < box.dim(); ++j) diff[j] = px[j] - py[j];
      acc += f[y] * g[box.index_of(diff)];
    }
    out[x] = acc;
  }
  return out;
}

// Torus momentum with components 2 pi c_j / L for the centered digit c_j of
// the grid index.
inline Momentum momentum_of(const Box& box, SiteIndex idx) {
  auto x = box.point_of(idx);
  std::vector<double> k(box.dim());
  for (int j = 0; j < box.dim(); ++j) k[j] = 2.0 * kPi * x[j] / box.side();
  return Momentum(std::move(k));
}

// Grid index of a torus momentum; off-grid momenta alias and are rejected.
inline SiteIndex momentum_index(const Box& box, const Momentum& k) {
  if (k.dim() != box.dim()) throw std::invalid_argument("momentum_index: dimension mismatch");
  LatticePoint c(box.dim());
  for (int j = 0; j < box.dim(); ++j) {
    double m = k.k[j] * box.side() / (2.0 * kPi);
    double r = std::round(m);
    if (std::abs(m - r) > 1e-9)
      throw std::invalid_argument("momentum_index: momentum not on the torus grid");
    c[j] = static_cast<Coord>(r);
  }
  return box.index_of(c);
}

// f-hat over the full torus grid: cosine transform of an even real table.
// The value at k=0 equals the plain sum of the table.
inline std::vector<double> empirical_fourier_grid(FftEngine& eng,
                                                  const std::vector<double>& table) {
  auto spec = eng.forward(table);
  std::vector<double> out(spec.size());
  for (size_t i = 0; i < spec.size(); ++i) out[i] = spec[i].real();
  return out;
}

// f-hat at one (possibly off-grid) momentum by direct summation; used by
// the sup-refinement passes.
inline double empirical_fourier_direct(const Box& box, const std::vector<double>& table,
                                       const Momentum& k) {
  double acc = 0;
  for (SiteIndex i = 0; i < box.volume(); ++i) {
    if (table[i] == 0.0) continue;
    acc += table[i] * std::cos(k.dot(box.point_of(i)));
  }
  return acc;
}

// [1 - cos(k.x)] f(x), the displacement-weighted table.
inline std::vector<double> displaced_table(const Box& box, const std::vector<double>& table,
                                           const Momentum& k) {
  std::vector<double> out(table.size());
  for (SiteIndex i = 0; i < box.volume(); ++i) {
    if (table[i] == 0.0) {
      out[i] = 0.0;
      continue;
    }
    out[i] = (1.0 - std::cos(k.dot(box.point_of(i)))) * table[i];
  }
  return out;
}

}  // namespace perclab
