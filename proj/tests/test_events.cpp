#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <vector>

#include "perclab/config.hpp"
#include "perclab/connectivity.hpp"
#include "perclab/enumerate.hpp"
#include "perclab/lattice.hpp"

using namespace perclab;

namespace {

// Independent oracle: enumerate all simple u-x paths by DFS and report the
// interior vertex sets of those whose interiors are occupied and avoid
// `forbidden`.
void collect_paths(const Box& box, const SiteConfig& cfg, SiteIndex x,
                   const std::set<SiteIndex>& forbidden, std::vector<SiteIndex>& stack,
                   std::set<SiteIndex>& onpath, std::vector<std::set<SiteIndex>>& out) {
  SiteIndex v = stack.back();
  box.for_each_neighbor(v, [&](SiteIndex n) {
    if (n == x) {
      out.emplace_back(stack.begin() + 1, stack.end());
      return;
    }
    if (onpath.count(n) || forbidden.count(n) || !cfg.occupied(n)) return;
    stack.push_back(n);
    onpath.insert(n);
    collect_paths(box, cfg, x, forbidden, stack, onpath, out);
    onpath.erase(n);
    stack.pop_back();
  });
}

std::vector<std::set<SiteIndex>> occupied_paths(const Box& box, const SiteConfig& cfg,
                                                SiteIndex u, SiteIndex x,
                                                const std::set<SiteIndex>& forbidden = {}) {
  std::vector<std::set<SiteIndex>> out;
  if (u == x) return out;
  std::vector<SiteIndex> stack{u};
  std::set<SiteIndex> onpath{u};
  collect_paths(box, cfg, x, forbidden, stack, onpath, out);
  return out;
}

bool oracle_connected(const Box& box, const SiteConfig& cfg, SiteIndex u, SiteIndex x) {
  return !occupied_paths(box, cfg, u, x).empty();
}

bool oracle_doubly(const Box& box, const SiteConfig& cfg, SiteIndex u, SiteIndex x) {
  auto paths = occupied_paths(box, cfg, u, x);
  for (size_t i = 0; i < paths.size(); ++i)
    for (size_t j = i; j < paths.size(); ++j) {
      bool disjoint = true;
      for (SiteIndex s : paths[i])
        if (paths[j].count(s)) {
          disjoint = false;
          break;
        }
      if (disjoint) return true;
    }
  return false;
}

SiteConfig config_from_sites(const BoxSpec& spec, const std::vector<LatticePoint>& occ) {
  SiteConfig cfg(spec, 0.5);
  Box box(spec);
  for (auto& x : occ) cfg.set(box.index_of(x), true);
  return cfg;
}

}  // namespace

TEST_CASE("sample_config degenerate and concentration") {
  BoxSpec spec(2, 9, Boundary::torus);
  RngStream rng(1, 0);
  auto all0 = sample_config(spec, 0.0, rng);
  REQUIRE(all0.popcount() == 0);
  auto all1 = sample_config(spec, 1.0, rng);
  REQUIRE(all1.popcount() == Box(spec).volume());

  BoxSpec big(1, 100001, Boundary::free);
  auto c = sample_config(big, 0.3, rng, 5);
  double n = static_cast<double>(Box(big).volume());
  double frac = c.popcount() / n;
  double sd = std::sqrt(0.3 * 0.7 / n);
  REQUIRE(std::abs(frac - 0.3) < 5 * sd);

  // deterministic given (seed, stream, sample)
  auto c2 = sample_config(big, 0.3, RngStream(1, 0), 5);
  REQUIRE(c2.popcount() == c.popcount());
  REQUIRE_THROWS_AS(sample_config(spec, 1.5, rng), std::invalid_argument);
}

TEST_CASE("connectivity conventions") {
  BoxSpec spec(1, 7, Boundary::free);
  Box box(spec);
  Workspace ws(box);

  // d=1: sites 1,2 occupied, x=0, y=3 -> true; site 2 vacant -> false
  auto cfg = config_from_sites(spec, {{1}, {2}});
  REQUIRE(connected(box, cfg, ws, {0}, {3}));
  auto cfg2 = config_from_sites(spec, {{1}});
  REQUIRE_FALSE(connected(box, cfg2, ws, {0}, {3}));

  // neighbors are automatically connected, regardless of occupancy
  SiteConfig empty(spec, 0.0);
  REQUIRE(connected(box, empty, ws, {0}, {1}));
  REQUIRE(connected(box, empty, ws, {-3}, {-2}));
  // x is not connected to itself
  REQUIRE_FALSE(connected(box, cfg, ws, {1}, {1}));
  REQUIRE_THROWS_AS(connected(box, cfg, ws, {0}, {9}), std::invalid_argument);
}

TEST_CASE("cluster_of") {
  BoxSpec spec(2, 5, Boundary::torus);
  Box box(spec);
  Workspace ws(box);
  SiteConfig empty(spec, 0.0);
  REQUIRE(cluster_of(box, empty, ws, {1, 1}).size() == 1);

  SiteConfig full(spec, 1.0);
  for (SiteIndex s = 0; s < box.volume(); ++s) full.set(s, true);
  REQUIRE(cluster_of(box, full, ws, {0, 0}).size() == box.volume());

  BoxSpec line(1, 5, Boundary::free);
  Box lbox(line);
  Workspace lws(lbox);
  auto cfg = config_from_sites(line, {{1}});
  auto cl = cluster_of(lbox, cfg, lws, {0});
  std::set<SiteIndex> got(cl.begin(), cl.end());
  REQUIRE(got == std::set<SiteIndex>{lbox.index_of({0}), lbox.index_of({1})});
}

TEST_CASE("boundary closure") {
  BoxSpec spec(2, 7, Boundary::torus);
  Box box(spec);
  Workspace ws(box);
  REQUIRE(boundary_closure_idx(box, {}, ws).empty());
  REQUIRE(boundary_closure_idx(box, {box.index_of({0, 0})}, ws).size() == 5);
  REQUIRE(boundary_closure_idx(box, {box.index_of({0, 0}), box.index_of({1, 0})}, ws).size() ==
          8);
}

TEST_CASE("modified cluster") {
  BoxSpec line(1, 7, Boundary::free);
  Box box(line);
  Workspace ws(box);
  // deleting the unique bridge: sites 1,2 occupied, x=0, u=1 -> {0}
  auto cfg = config_from_sites(line, {{1}, {2}});
  auto mc = modified_cluster_idx(box, cfg, ws, box.index_of({0}), box.index_of({1}));
  REQUIRE(mc == std::vector<SiteIndex>{box.index_of({0})});
  // u = x degenerates to {x}
  auto mc2 = modified_cluster_idx(box, cfg, ws, box.index_of({1}), box.index_of({1}));
  REQUIRE(mc2 == std::vector<SiteIndex>{box.index_of({1})});
  // deleting an unused vertex leaves the cluster unchanged (u not occupied)
  auto base = cluster_of_idx(box, cfg, ws, box.index_of({0}));
  auto mc3 = modified_cluster_idx(box, cfg, ws, box.index_of({0}), box.index_of({-2}));
  REQUIRE(mc3 == base);
}

TEST_CASE("off-A and through-A connections") {
  BoxSpec line(1, 7, Boundary::free);
  Box box(line);
  Workspace ws(box), marker(box);
  auto cfg = config_from_sites(line, {{1}, {2}});

  SECTION("A empty: off equals connected, through is empty") {
    marker.begin_mark();  // empty <A>
    REQUIRE(off_set_connected_idx(box, cfg, ws, box.index_of({0}), box.index_of({3}), marker));
    // adjacent pair: through-connection fails for A = empty set
    REQUIRE_FALSE(
        through_connected_marked(box, cfg, ws, box.index_of({0}), box.index_of({1}), marker));
    REQUIRE_FALSE(
        through_connected_marked(box, cfg, ws, box.index_of({0}), box.index_of({3}), marker));
  }

  SECTION("A = whole box: through reduces to connected") {
    std::vector<SiteIndex> all;
    for (SiteIndex s = 0; s < box.volume(); ++s) all.push_back(s);
    marker.begin_mark();
    for (SiteIndex s : all) marker.mark(s);
    for (Coord xc = -3; xc <= 3; ++xc) {
      if (xc == 0) continue;
      SiteIndex x = box.index_of({xc});
      bool want = connected_idx(box, cfg, ws, box.index_of({0}), x);
      REQUIRE(through_connected_marked(box, cfg, ws, box.index_of({0}), x, marker) == want);
    }
  }

  SECTION("every path blocked") {
    // A covers the interior of the unique path
    marker.begin_mark();
    marker.mark(box.index_of({1}));
    marker.mark(box.index_of({2}));
    REQUIRE_FALSE(
        off_set_connected_idx(box, cfg, ws, box.index_of({0}), box.index_of({3}), marker));
    // connected and blocked off <A>: through-connection holds
    REQUIRE(through_connected_marked(box, cfg, ws, box.index_of({0}), box.index_of({3}), marker));
  }

  SECTION("adjacency has no interior: off holds for any A") {
    marker.begin_mark();
    for (SiteIndex s = 0; s < box.volume(); ++s) marker.mark(s);
    REQUIRE(off_set_connected_idx(box, cfg, ws, box.index_of({0}), box.index_of({1}), marker));
  }

  SECTION("x in <A> and connected: through holds") {
    marker.begin_mark();
    marker.mark(box.index_of({3}));  // <A> containing the target
    REQUIRE(through_connected_marked(box, cfg, ws, box.index_of({0}), box.index_of({3}), marker));
  }
}

TEST_CASE("through-connection truth table on a 3-site line") {
  // brute-force evaluation of Def. 2.5.1 over every configuration and A-set
  BoxSpec line(1, 3, Boundary::free);
  Box box(line);
  Workspace ws(box), marker(box);
  SiteConfig cfg(line, 0.5);
  for (uint64_t mask = 0; mask < 8; ++mask) {
    cfg.assign_mask(mask);
    for (uint64_t amask = 0; amask < 8; ++amask) {
      std::vector<SiteIndex> a;
      for (int i = 0; i < 3; ++i)
        if (amask & (1u << i)) a.push_back(i);
      auto closure = boundary_closure_idx(box, a, marker);
      std::set<SiteIndex> aclosed(closure.begin(), closure.end());
      marker.begin_mark();
      for (SiteIndex s : closure) marker.mark(s);
      for (SiteIndex u = 0; u < 3; ++u)
        for (SiteIndex x = 0; x < 3; ++x) {
          if (u == x) continue;
          bool conn = adjacent(box, u, x) || oracle_connected(box, cfg, u, x);
          std::set<SiteIndex> forbid;
          for (SiteIndex s : aclosed)
            if (s != x) forbid.insert(s);
          bool off = adjacent(box, u, x) || !occupied_paths(box, cfg, u, x, forbid).empty();
          bool want = conn && (!off || aclosed.count(x) > 0);
          REQUIRE(through_connected_marked(box, cfg, ws, u, x, marker) == want);
        }
    }
  }
}

TEST_CASE("doubly connected") {
  BoxSpec spec(2, 5, Boundary::torus);
  Box box(spec);
  Workspace ws(box);
  SiteConfig empty(spec, 0.0);
  // {u <=> x} = Omega for |u-x| = 1, empty for u = x
  REQUIRE(doubly_connected_idx(box, empty, ws, box.index_of({0, 0}), box.index_of({1, 0})));
  REQUIRE_FALSE(doubly_connected_idx(box, empty, ws, box.index_of({0, 0}), box.index_of({0, 0})));

  // 4-cycle: u=(0,0), x=(1,1); both (1,0),(0,1) occupied -> true; one -> false
  auto both = config_from_sites(spec, {{1, 0}, {0, 1}});
  REQUIRE(doubly_connected_idx(box, both, ws, box.index_of({0, 0}), box.index_of({1, 1})));
  auto one = config_from_sites(spec, {{1, 0}});
  REQUIRE_FALSE(doubly_connected_idx(box, one, ws, box.index_of({0, 0}), box.index_of({1, 1})));
}

TEST_CASE("doubly connected agrees with exhaustive disjoint-path search") {
  BoxSpec spec(2, 4, Boundary::free);
  Box box(spec);
  Workspace ws(box);
  SiteConfig cfg(spec, 0.5);
  RngStream rng(99, 0);
  SiteIndex origin = box.origin_index();
  // random configurations plus all-occupied, checked against the oracle
  for (int trial = 0; trial < 400; ++trial) {
    uint64_t mask = trial == 0 ? 0xffff : (rng.bits64(trial, 0) & 0xffff);
    cfg.assign_mask(mask);
    for (SiteIndex x = 0; x < box.volume(); ++x) {
      if (x == origin) continue;
      bool fast = doubly_connected_idx(box, cfg, ws, origin, x);
      bool slow = adjacent(box, origin, x) || oracle_doubly(box, cfg, origin, x);
      REQUIRE(fast == slow);
    }
  }
}

TEST_CASE("pivotal points") {
  BoxSpec line(1, 7, Boundary::free);
  Box box(line);
  Workspace ws(box);
  // unique path: every interior vertex pivotal
  auto cfg = config_from_sites(line, {{1}, {2}});
  auto piv = pivotal_points_idx(box, cfg, ws, box.index_of({0}), box.index_of({3}));
  std::set<SiteIndex> got(piv.begin(), piv.end());
  REQUIRE(got == std::set<SiteIndex>{box.index_of({1}), box.index_of({2})});

  // neighbors: never fails, no pivotal points
  REQUIRE(pivotal_points_idx(box, cfg, ws, box.index_of({0}), box.index_of({1})).empty());

  // doubly connected at distance > 1: no single removal disconnects
  BoxSpec sq(2, 5, Boundary::torus);
  Box sbox(sq);
  Workspace sws(sbox);
  auto both = config_from_sites(sq, {{1, 0}, {0, 1}});
  REQUIRE(pivotal_points_idx(sbox, both, sws, sbox.index_of({0, 0}), sbox.index_of({1, 1}))
              .empty());
}

TEST_CASE("pivotal points match the definition exhaustively") {
  BoxSpec spec(2, 3, Boundary::free);
  Box box(spec);
  Workspace ws(box);
  SiteConfig cfg(spec, 0.5);
  for (uint64_t mask = 0; mask < 512; ++mask) {
    cfg.assign_mask(mask);
    for (SiteIndex u = 0; u < 9; ++u)
      for (SiteIndex x = 0; x < 9; ++x) {
        if (u == x) continue;
        auto piv = pivotal_points_idx(box, cfg, ws, u, x);
        std::set<SiteIndex> got(piv.begin(), piv.end());
        std::set<SiteIndex> want;
        for (SiteIndex v = 0; v < 9; ++v) {
          OverrideOccupancy<SiteConfig> with(cfg, v, true);
          OverrideOccupancy<SiteConfig> without(cfg, v, false);
          if (connected_idx(box, with, ws, u, x) && !connected_idx(box, without, ws, u, x))
            want.insert(v);
        }
        REQUIRE(got == want);
      }
  }
}

TEST_CASE("exhaustive enumerator on the d=1 free line matches closed forms") {
  BoxSpec line(1, 5, Boundary::free);
  auto oracle = exact_enumerate(line);
  Box box(line);
  for (double p : {0.2, 0.5, 0.8}) {
    // unique path: tau(x) = p^{|x|-1}
    for (Coord c : {-2, -1, 1, 2}) {
      double want = std::pow(p, std::abs(c) - 1);
      REQUIRE(oracle.tau(box.index_of({c}), p) == Catch::Approx(want).margin(1e-12));
    }
    // doubly-connected probability: 1 at distance one, 0 beyond
    REQUIRE(oracle.doubly(box.index_of({1}), p) == Catch::Approx(1.0));
    REQUIRE(oracle.doubly(box.index_of({2}), p) == Catch::Approx(0.0).margin(1e-15));
    // E|C(0)| = 1 + 2(p + p^2) on arms of length two
    REQUIRE(oracle.expected_cluster_size(p) == Catch::Approx(1 + 2 * (p + p * p)));
  }
}

TEST_CASE("enumerator degenerate p values on the d=2 L=4 box") {
  BoxSpec spec(2, 4, Boundary::free);
  auto oracle = exact_enumerate(spec);
  Box box(spec);
  // p=0: tau = J within the box
  for (SiteIndex s = 0; s < box.volume(); ++s) {
    if (s == box.origin_index()) {
      REQUIRE(oracle.tau(s, 0.0) == 0.0);
      continue;
    }
    double want = box.displacement_norm(s) == 1 ? 1.0 : 0.0;
    REQUIRE(oracle.tau(s, 0.0) == Catch::Approx(want).margin(1e-15));
  }
  // p=1: every site connected to the origin, cluster is the whole box
  for (SiteIndex s = 0; s < box.volume(); ++s) {
    if (s == box.origin_index()) continue;
    REQUIRE(oracle.tau(s, 1.0) == Catch::Approx(1.0));
  }
  REQUIRE(oracle.expected_cluster_size(1.0) == Catch::Approx(16.0));
}
