#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "perclab/enumerate.hpp"
#include "perclab/expansion.hpp"

using namespace perclab;

namespace {

// Independent oracle for the Pi^(1) estimator: exact double-configuration
// enumeration on a tiny torus, with all events evaluated by bitmask code
// written directly from Definitions 2.4/2.5/2.8.
struct MaskOracle {
  Box box;
  int v;
  std::vector<std::vector<int>> nbrs;

  explicit MaskOracle(const BoxSpec& spec) : box(spec), v(static_cast<int>(box.volume())) {
    nbrs.resize(v);
    for (int i = 0; i < v; ++i)
      box.for_each_neighbor(i, [&](SiteIndex n) { nbrs[i].push_back(static_cast<int>(n)); });
  }

  bool occ(uint32_t m, int s) const { return (m >> s) & 1; }

  // sites connected to a (a never needs occupation); interiors must be
  // occupied, lie outside `forbid`, and differ from the endpoint
  uint32_t reach_mask(uint32_t m, int a, uint32_t forbid = 0) const {
    uint32_t expand = 1u << a;  // expandable set
    uint32_t reached = 0;
    std::vector<int> stack{a};
    uint32_t seen = 1u << a;
    while (!stack.empty()) {
      int s = stack.back();
      stack.pop_back();
      for (int n : nbrs[s]) {
        reached |= 1u << n;
        if ((seen >> n) & 1) continue;
        if (occ(m, n) && !((forbid >> n) & 1)) {
          seen |= 1u << n;
          expand |= 1u << n;
          stack.push_back(n);
        }
      }
    }
    (void)expand;
    return reached & ~(1u << a);  // { y != a : a <-> y }
  }

  bool conn(uint32_t m, int a, int b) const { return a != b && ((reach_mask(m, a) >> b) & 1); }

  // doubly connected: two a-b paths with disjoint occupied interiors,
  // found by enumerating simple paths
  void paths_rec(uint32_t m, int cur, int b, uint32_t used, uint32_t interior,
                 std::vector<uint32_t>& out) const {
    for (int n : nbrs[cur]) {
      if (n == b) {
        out.push_back(interior);
        continue;
      }
      if (((used >> n) & 1) || !occ(m, n)) continue;
      paths_rec(m, n, b, used | (1u << n), interior | (1u << n), out);
    }
  }
  bool doubly(uint32_t m, int a, int b) const {
    if (a == b) return false;
    std::vector<uint32_t> interiors;
    paths_rec(m, a, b, 1u << a, 0, interiors);
    std::sort(interiors.begin(), interiors.end());
    interiors.erase(std::unique(interiors.begin(), interiors.end()), interiors.end());
    for (size_t i = 0; i < interiors.size(); ++i)
      for (size_t j = i; j < interiors.size(); ++j)
        if ((interiors[i] & interiors[j]) == 0) return true;
    return false;
  }

  uint32_t closure(uint32_t a_mask) const {
    uint32_t out = a_mask;
    for (int s = 0; s < v; ++s)
      if ((a_mask >> s) & 1)
        for (int n : nbrs[s]) out |= 1u << n;
    return out;
  }

  // C~^{u}(0): cluster of 0 with u deleted
  uint32_t modified_cluster_mask(uint32_t m, int u) const {
    uint32_t forbid = 1u << u;
    uint32_t r = reach_mask(m, 0, forbid);
    uint32_t cluster = 1u;  // {0}
    for (int s = 0; s < v; ++s)
      if (s != u && occ(m, s) && ((r >> s) & 1)) cluster |= 1u << s;
    return cluster;
  }

  bool off_conn(uint32_t m, int a, int b, uint32_t aclosed) const {
    if (a == b) return false;
    for (int n : nbrs[a])
      if (n == b) return true;
    return (reach_mask(m, a, aclosed) >> b) & 1;
  }

  bool through(uint32_t m, int a, int b, uint32_t aclosed) const {
    if (!conn(m, a, b)) return false;
    if ((aclosed >> b) & 1) return true;
    return !off_conn(m, a, b, aclosed);
  }

  // pivotal by the raw definition over all sites
  std::vector<int> pivotal(uint32_t m, int a, int b) const {
    std::vector<int> out;
    for (int s = 0; s < v; ++s) {
      if (s == a || s == b) continue;
      bool with = conn(m | (1u << s), a, b);
      bool without = conn(m & ~(1u << s), a, b);
      if (with && !without) out.push_back(s);
    }
    return out;
  }

  bool eprime(uint32_t m1, int u0, int x, uint32_t aclosed) const {
    if (!through(m1, u0, x, aclosed)) return false;
    for (int up : pivotal(m1, u0, x))
      if (through(m1, u0, up, aclosed)) return false;
    return true;
  }

  // exact Pi^(1)(x) at parameter p
  std::vector<double> exact_pi1(double p) const {
    std::vector<double> out(v, 0.0);
    std::vector<double> w0prob(1u << v), w1prob(1u << v);
    for (uint32_t m = 0; m < (1u << v); ++m) {
      int pc = __builtin_popcount(m);
      w0prob[m] = std::pow(p, pc) * std::pow(1 - p, v - pc);
    }
    // memoize the omega_1 expectation per (u0, closure) pair
    std::map<std::pair<int, uint32_t>, std::vector<double>> memo;
    for (uint32_t m0 = 0; m0 < (1u << v); ++m0) {
      double pw0 = w0prob[m0];
      uint32_t r0 = reach_mask(m0, 0);
      for (int u0 = 1; u0 < v; ++u0) {
        if (!((r0 >> u0) & 1)) continue;
        if (!doubly(m0, 0, u0)) continue;
        uint32_t aclosed = closure(modified_cluster_mask(m0, u0));
        auto key = std::make_pair(u0, aclosed);
        auto it = memo.find(key);
        if (it == memo.end()) {
          std::vector<double> ex(v, 0.0);
          for (uint32_t m1 = 0; m1 < (1u << v); ++m1) {
            double pw1 = w0prob[m1];
            for (int x = 0; x < v; ++x)
              if (x != u0 && eprime(m1, u0, x, aclosed)) ex[x] += pw1;
          }
          it = memo.emplace(key, std::move(ex)).first;
        }
        for (int x = 0; x < v; ++x) out[x] += pw0 * it->second[x];
      }
    }
    for (auto& val : out) val *= p;
    return out;
  }

  // exact P(0 <=> x)
  std::vector<double> exact_dc(double p) const {
    std::vector<double> out(v, 0.0);
    for (uint32_t m = 0; m < (1u << v); ++m) {
      int pc = __builtin_popcount(m);
      double pw = std::pow(p, pc) * std::pow(1 - p, v - pc);
      for (int x = 1; x < v; ++x)
        if (doubly(m, 0, x)) out[x] += pw;
    }
    return out;
  }
};

// shared d=9 fixture (several cases consume the same tables)
struct D9Fixture {
  BoxSpec spec{9, 3, Boundary::torus};
  double p = 0.8 / 18;
  TwoPointTable t;
  PiTables pi;
  D9Fixture()
      : t(estimate_two_point(spec, p, 30000, RngStream(38, 0))),
        pi(estimate_pi(spec, p, 30000, RngStream(38, 1))) {}
};
const D9Fixture& d9() {
  static D9Fixture f;
  return f;
}

}  // namespace

TEST_CASE("pi0 structural pins") {
  BoxSpec spec(2, 5, Boundary::torus);
  Box box(spec);
  auto pi = estimate_pi(spec, 0.3, 3000, RngStream(31, 0));
  // Pi^(0)(x) = 0 for |x| <= 1, exactly (neighbor convention)
  REQUIRE(pi.pi0(box, box.origin_index()) == 0.0);
  for (SiteIndex i = 0; i < box.volume(); ++i)
    if (box.displacement_norm(i) == 1) {
      REQUIRE(pi.dc_mean(i) == 1.0);
      REQUIRE(pi.pi0(box, i) == 0.0);
      REQUIRE(pi.dc_stderr(i) == 0.0);
    }
  // doubly-connected pins: 1 at distance one, 0 at the origin
  REQUIRE(pi.dc_mean(box.origin_index()) == 0.0);
}

TEST_CASE("pi tables at p=0") {
  BoxSpec spec(2, 5, Boundary::torus);
  Box box(spec);
  auto pi = estimate_pi(spec, 0.0, 500, RngStream(32, 0));
  for (SiteIndex i = 0; i < box.volume(); ++i) {
    if (box.displacement_norm(i) >= 2) REQUIRE(pi.dc_mean(i) == 0.0);
    REQUIRE(pi.pi1(i) == 0.0);  // p^1 prefactor
  }
}

TEST_CASE("pi1 nonnegative and alternating partial sums") {
  BoxSpec spec(2, 5, Boundary::torus);
  Box box(spec);
  auto pi = estimate_pi(spec, 0.35, 4000, RngStream(33, 0));
  auto ps1 = pi.partial_sum(1);
  for (SiteIndex i = 0; i < box.volume(); ++i) {
    REQUIRE(pi.pi1(i) >= 0.0);
    REQUIRE(ps1[i] == pi.pi0(box, i) - pi.pi1(i));  // exact elementwise
  }
}

TEST_CASE("pi estimates are deterministic across thread counts") {
  BoxSpec spec(2, 5, Boundary::torus);
  auto a = estimate_pi(spec, 0.35, 4000, RngStream(34, 0), 1);
  auto b = estimate_pi(spec, 0.35, 4000, RngStream(34, 0), 4);
  REQUIRE(a.dc_one == b.dc_one);
  REQUIRE(a.dc_both == b.dc_both);
  REQUIRE(a.pi1_sum2 == b.pi1_sum2);
  REQUIRE(a.pi1_sumsq4 == b.pi1_sumsq4);
}

TEST_CASE("pi0 Monte Carlo matches the exhaustive oracle (d=2 L=4 free)") {
  BoxSpec spec(2, 4, Boundary::free);
  Box box(spec);
  auto oracle = exact_enumerate(spec);
  for (double p : {0.2, 0.5, 0.8}) {
    auto pi = estimate_pi(spec, p, 20000, RngStream(35, 0));
    for (SiteIndex i = 0; i < box.volume(); ++i) {
      if (i == box.origin_index()) continue;
      double want = oracle.doubly(i, p);
      double tol = 4 * std::max(pi.dc_stderr(i), 1e-9);
      INFO("p=" << p << " x=" << i);
      REQUIRE(std::abs(pi.dc_mean(i) - want) < std::max(tol, 2e-12));
    }
  }
}

TEST_CASE("pi1 Monte Carlo matches exact double enumeration (d=1 L=5)") {
  BoxSpec spec(1, 5, Boundary::torus);
  Box box(spec);
  MaskOracle oracle(spec);
  double p = 0.4;
  auto exact = oracle.exact_pi1(p);
  auto pi = estimate_pi(spec, p, 60000, RngStream(36, 0));
  for (SiteIndex i = 0; i < box.volume(); ++i) {
    double tol = 4 * std::max(pi.pi1_stderr(i), 1e-9);
    INFO("x=" << i << " exact=" << exact[i] << " mc=" << pi.pi1(i));
    REQUIRE(std::abs(pi.pi1(i) - exact[i]) < std::max(tol, 1e-10));
  }
  // the doubly-connected table too
  auto dc = oracle.exact_dc(p);
  for (SiteIndex i = 1; i < box.volume(); ++i)
    REQUIRE(std::abs(pi.dc_mean(i) - dc[i]) < 4 * std::max(pi.dc_stderr(i), 1e-9) + 1e-12);
}

TEST_CASE("pi1 Monte Carlo matches exact double enumeration (d=2 L=3)") {
  BoxSpec spec(2, 3, Boundary::torus);
  Box box(spec);
  MaskOracle oracle(spec);
  double p = 0.35;
  auto exact = oracle.exact_pi1(p);
  auto pi = estimate_pi(spec, p, 60000, RngStream(37, 0));
  for (SiteIndex i = 0; i < box.volume(); ++i) {
    double tol = 4 * std::max(pi.pi1_stderr(i), 1e-9);
    INFO("x=" << i << " exact=" << exact[i] << " mc=" << pi.pi1(i));
    REQUIRE(std::abs(pi.pi1(i) - exact[i]) < std::max(tol, 1e-10));
  }
}

TEST_CASE("summed bounds: Prop 3.5 at n=0,1 and the unsummed corollary") {
  auto& f = d9();
  auto ctx = DiagramContext::from_table(f.t);
  auto tri = triangle_family(ctx);
  auto rep = check_summed_bounds(ctx, f.pi, tri);
  REQUIRE(rep.rhs_n0 - rep.lhs_n0 >= -4 * rep.tol_n0);
  REQUIRE(rep.rhs_n1 - rep.lhs_n1 >= -4 * rep.tol_n1);
  REQUIRE(rep.rhs_sup - rep.lhs_sup >= -4 * rep.tol_sup);
}

TEST_CASE("Prop 3.2 bounds at d=9") {
  auto& f = d9();
  auto ctx = DiagramContext::from_table(f.t);
  auto rep = check_n0_bounds(ctx, f.pi);
  REQUIRE(rep.min_margin_amp >= -4 * rep.tol_amp);
  REQUIRE(rep.min_margin_disp >= -4 * std::max(rep.tol_disp, 1e-12));
}

TEST_CASE("Prop 3.8 displacement bound at n=1, d=9") {
  auto& f = d9();
  Box box(f.spec);
  auto ctx = DiagramContext::from_table(f.t);
  auto tri = triangle_family(ctx);
  LatticePoint kpt(9, 0);
  kpt[0] = 1;
  Momentum k = momentum_of(box, box.index_of(kpt));
  auto w = w_displacement(ctx, k);
  auto rep = check_displacement_bounds(ctx, f.pi, tri, w, 0.0, k);
  REQUIRE(rep.rhs - rep.lhs >= -4 * rep.tol);
  REQUIRE(rep.prop37_rhs_n2 >= 0.0);

  SECTION("k=0 and p=0 degenerate") {
    Momentum zero(std::vector<double>(9, 0.0));
    auto w0 = w_displacement(ctx, zero);
    auto rep0 = check_displacement_bounds(ctx, f.pi, tri, w0, 0.0, zero);
    REQUIRE(rep0.lhs == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(rep0.rhs == Catch::Approx(0.0).margin(1e-9));
  }
}

TEST_CASE("BK consistency at d=2") {
  BoxSpec spec(2, 9, Boundary::torus);
  Box box(spec);
  auto t = estimate_two_point(spec, 0.3, 20000, RngStream(41, 0));
  auto pi = estimate_pi(spec, 0.3, 20000, RngStream(41, 1));
  auto rep = check_bk(box, t, pi);
  REQUIRE(rep.min_margin >= -4 * rep.tol_at_min);
}

TEST_CASE("OZE residual") {
  SECTION("exact zero at p=0") {
    BoxSpec spec(3, 5, Boundary::torus);
    auto t = estimate_two_point(spec, 0.0, 200, RngStream(42, 0));
    auto pi = estimate_pi(spec, 0.0, 200, RngStream(42, 1));
    auto ctx = DiagramContext::from_table(t);
    auto rep = oze_residual(ctx, pi, 0);
    REQUIRE(rep.sum_abs_residual == Catch::Approx(0.0).margin(1e-9));
  }

  SECTION("order 1 beats order 0 at d=9") {
    auto& f = d9();
    auto ctx = DiagramContext::from_table(f.t);
    auto r0 = oze_residual(ctx, f.pi, 0);
    auto r1 = oze_residual(ctx, f.pi, 1);
    REQUIRE(r1.sum_abs_residual < r0.sum_abs_residual);
    // R_{p,n} sign: (-1)^{n+1}; the wrong-signed mass is a small fraction
    REQUIRE(r0.sign_violation < 0.2 * r0.sum_abs_residual);
    // remainder chain bound dominates the residual mass, within MC noise
    REQUIRE(r0.sum_abs_residual <= r0.remainder_chain_bound * 1.25);
  }
}
