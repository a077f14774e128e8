#pragma once

// Connectivity events of the inner-site convention: a path connects x to y
// when all strictly interior vertices are occupied; endpoints never need
// to be. Neighbors are automatically connected, and x is not connected to
// itself. These two conventions are pinned by dedicated tests.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "perclab/config.hpp"
#include "perclab/lattice.hpp"

namespace perclab {

// Reusable per-thread scratch: stamped visit arrays (epoch-tagged so BFS
// never clears), a queue, and result buffers.
class Workspace {
 public:
  explicit Workspace(const Box& box)
      : visit_(box.volume(), 0), mark_(box.volume(), 0) {}

  // --- visit stamps (codes 1 = reached boundary, 2 = in cluster) ---
  void begin_search() { epoch_ += 4; }
  void set_code(SiteIndex s, uint32_t code) { visit_[s] = epoch_ | code; }
  uint32_t code(SiteIndex s) const {
    uint32_t v = visit_[s];
    return (v & ~3u) == epoch_ ? (v & 3u) : 0;
  }

  // --- independent marker set (membership in a fixed site set A) ---
  void begin_mark() { mark_epoch_ += 1; }
  void mark(SiteIndex s) { mark_[s] = mark_epoch_; }
  bool marked(SiteIndex s) const { return mark_[s] == mark_epoch_; }

  std::vector<SiteIndex> queue;
  std::vector<SiteIndex> cluster;   // occupied sites connected to start, plus start
  std::vector<SiteIndex> boundary;  // reached but not expanded (vacant, non-start)

 private:
  std::vector<uint32_t> visit_;
  std::vector<uint32_t> mark_;
  uint32_t epoch_ = 0;
  uint32_t mark_epoch_ = 0;
};

inline bool adjacent(const Box& box, SiteIndex a, SiteIndex b) {
  bool adj = false;
  box.for_each_neighbor(a, [&](SiteIndex n) { adj |= (n == b); });
  return adj;
}

enum class ReachOptions : int {
  full = 0,
  stop_at_target = 1,
};

// Grow the cluster of `start`: start expands regardless of its occupancy,
// occupied sites expand, vacant sites are reached but not expanded. After
// the call, ws.cluster = C(start) and ws.cluster \cup ws.boundary minus
// {start} = { y != start : start <-> y }.
//
// avoid: optional predicate (site) -> bool marking sites that may be
// reached as endpoints but never traversed as interiors (they land in
// ws.boundary even when occupied). target: early-stop site.
template <OccupancyView V, typename AvoidFn>
inline bool reach_from(const Box& box, const V& view, Workspace& ws, SiteIndex start,
                       AvoidFn&& avoid, SiteIndex target = kInvalidSite,
                       ReachOptions opt = ReachOptions::full) {
  ws.begin_search();
  ws.queue.clear();
  ws.cluster.clear();
  ws.boundary.clear();
  ws.set_code(start, 2);
  ws.queue.push_back(start);
  ws.cluster.push_back(start);
  bool found = false;
  for (size_t head = 0; head < ws.queue.size(); ++head) {
    SiteIndex v = ws.queue[head];
    bool stop = false;
    box.for_each_neighbor(v, [&](SiteIndex n) {
      if (stop || ws.code(n) != 0) return;
      if (n == target) {
        found = true;
        if (opt == ReachOptions::stop_at_target) stop = true;
      }
      if (!avoid(n) && view.occupied(n)) {
        ws.set_code(n, 2);
        ws.queue.push_back(n);
        ws.cluster.push_back(n);
      } else {
        ws.set_code(n, 1);
        ws.boundary.push_back(n);
      }
    });
    if (stop) return true;
  }
  return found;
}

template <OccupancyView V>
inline bool reach_from(const Box& box, const V& view, Workspace& ws, SiteIndex start,
                       SiteIndex target = kInvalidSite, ReachOptions opt = ReachOptions::full) {
  return reach_from(box, view, ws, start, [](SiteIndex) { return false; }, target, opt);
}

// {x <-> y}: false for x == y, true for neighbors regardless of occupancy.
template <OccupancyView V>
inline bool connected_idx(const Box& box, const V& view, Workspace& ws, SiteIndex x,
                          SiteIndex y) {
  if (x == y) return false;
  if (adjacent(box, x, y)) return true;
  return reach_from(box, view, ws, x, y, ReachOptions::stop_at_target);
}

// C(x) = {x} plus all occupied y connected to x.
template <OccupancyView V>
inline std::vector<SiteIndex> cluster_of_idx(const Box& box, const V& view, Workspace& ws,
                                             SiteIndex x) {
  reach_from(box, view, ws, x);
  return ws.cluster;
}

// <A> = A plus its external boundary (truncated to the box).
inline std::vector<SiteIndex> boundary_closure_idx(const Box& box,
                                                   const std::vector<SiteIndex>& a,
                                                   Workspace& ws) {
  ws.begin_mark();
  std::vector<SiteIndex> out;
  for (SiteIndex s : a)
    if (!ws.marked(s)) {
      ws.mark(s);
      out.push_back(s);
    }
  size_t core = out.size();
  for (size_t i = 0; i < core; ++i) {
    box.for_each_neighbor(out[i], [&](SiteIndex n) {
      if (!ws.marked(n)) {
        ws.mark(n);
        out.push_back(n);
      }
    });
  }
  return out;
}

// Modified cluster C~^u(x): the cluster of x with the vertex u deleted from
// the lattice. For u == x this degenerates to {x}.
template <OccupancyView V>
inline std::vector<SiteIndex> modified_cluster_idx(const Box& box, const V& view,
                                                   Workspace& ws, SiteIndex x, SiteIndex u) {
  if (u == x) return {x};
  reach_from(box, view, ws, x, [&](SiteIndex s) { return s == u; });
  return ws.cluster;
}

// {u --> x off A}: a u-x path whose interior vertices lie in omega \ A.
// The caller passes the closed set <A> when evaluating Def. 2.5 events.
// Endpoints may lie in A; adjacency always connects.
template <OccupancyView V>
inline bool off_set_connected_idx(const Box& box, const V& view, Workspace& ws, SiteIndex u,
                                  SiteIndex x, const Workspace& marker_ws) {
  if (u == x) return false;
  if (adjacent(box, u, x)) return true;
  return reach_from(
      box, view, ws, u, [&](SiteIndex s) { return marker_ws.marked(s); }, x,
      ReachOptions::stop_at_target);
}

// {u -->^A x}: u connected to x, and either every u-x path has an interior
// vertex in <A>, or x itself lies in <A>. The marker holds <A>.
template <OccupancyView V>
inline bool through_connected_marked(const Box& box, const V& view, Workspace& ws, SiteIndex u,
                                     SiteIndex x, const Workspace& closure_marker) {
  if (!connected_idx(box, view, ws, u, x)) return false;
  if (closure_marker.marked(x)) return true;
  return !off_set_connected_idx(box, view, ws, u, x, closure_marker);
}

namespace detail {

// Unit-vertex-capacity max-flow on the occupied subgraph plus endpoints
// (Menger): value >= 2 iff two u-x paths with disjoint occupied interiors.
class DisjointPathFlow {
 public:
  // nodes: 0 = source (u), 1 = sink (x); interior site i -> in 2+2i, out 3+2i.
  void reset(int n_interior) {
    n_ = 2 + 2 * n_interior;
    head_.assign(n_, -1);
    to_.clear();
    cap_.clear();
    next_.clear();
    for (int i = 0; i < n_interior; ++i) add_edge(2 + 2 * i, 3 + 2 * i, 1);
  }
  void add_edge(int a, int b, int cap) {
    to_.push_back(b);
    cap_.push_back(cap);
    next_.push_back(head_[a]);
    head_[a] = static_cast<int>(to_.size()) - 1;
    to_.push_back(a);
    cap_.push_back(0);
    next_.push_back(head_[b]);
    head_[b] = static_cast<int>(to_.size()) - 1;
  }
  // connect lattice-adjacent graph nodes a_out -> b_in with ample capacity
  int in_node(int i) const { return 2 + 2 * i; }
  int out_node(int i) const { return 3 + 2 * i; }

  int max_flow_at_most_2() {
    int flow = 0;
    while (flow < 2 && augment()) ++flow;
    return flow;
  }

 private:
  bool augment() {
    parent_edge_.assign(n_, -1);
    std::vector<int> q{0};
    std::vector<char> seen(n_, 0);
    seen[0] = 1;
    for (size_t h = 0; h < q.size(); ++h) {
      int v = q[h];
      for (int e = head_[v]; e != -1; e = next_[e]) {
        if (cap_[e] <= 0 || seen[to_[e]]) continue;
        seen[to_[e]] = 1;
        parent_edge_[to_[e]] = e;
        if (to_[e] == 1) {
          for (int node = 1; node != 0;) {
            int pe = parent_edge_[node];
            cap_[pe] -= 1;
            cap_[pe ^ 1] += 1;
            node = to_[pe ^ 1];
          }
          return true;
        }
        q.push_back(to_[e]);
      }
    }
    return false;
  }

  int n_ = 0;
  std::vector<int> head_, to_, cap_, next_, parent_edge_;
};

}  // namespace detail

// {u <=> x}: doubly connected. True for neighbors, false for u == x,
// otherwise two u-x paths with disjoint occupied interior sets (Menger).
template <OccupancyView V>
inline bool doubly_connected_idx(const Box& box, const V& view, Workspace& ws, SiteIndex u,
                                 SiteIndex x) {
  if (u == x) return false;
  if (adjacent(box, u, x)) return true;
  if (!reach_from(box, view, ws, u, x)) return false;

  // local ids for occupied cluster sites (interiors); u, x stay unsplit
  ws.begin_mark();
  thread_local std::vector<SiteIndex> interior;
  thread_local std::vector<int> local_id;
  interior.clear();
  for (SiteIndex s : ws.cluster) {
    if (s == u || s == x) continue;
    interior.push_back(s);
  }
  local_id.assign(interior.size(), 0);
  for (size_t i = 0; i < interior.size(); ++i) {
    ws.mark(interior[i]);
    local_id[i] = static_cast<int>(i);
  }
  // map site -> interior position via sorted lookup
  thread_local std::vector<std::pair<SiteIndex, int>> lookup;
  lookup.clear();
  for (size_t i = 0; i < interior.size(); ++i) lookup.emplace_back(interior[i], (int)i);
  std::sort(lookup.begin(), lookup.end());
  auto find_id = [&](SiteIndex s) {
    auto it = std::lower_bound(lookup.begin(), lookup.end(), std::make_pair(s, -1));
    return (it != lookup.end() && it->first == s) ? it->second : -1;
  };

  thread_local detail::DisjointPathFlow flow;
  flow.reset(static_cast<int>(interior.size()));
  auto endpoint_node = [&](SiteIndex s, bool as_source) { return as_source ? 0 : 1; };
  (void)endpoint_node;
  // edges incident to u
  box.for_each_neighbor(u, [&](SiteIndex n) {
    if (n == x) return;  // adjacency handled above; keep graph simple
    int id = ws.marked(n) ? find_id(n) : -1;
    if (id >= 0) flow.add_edge(0, flow.in_node(id), 2);
  });
  // edges incident to x
  box.for_each_neighbor(x, [&](SiteIndex n) {
    int id = ws.marked(n) ? find_id(n) : -1;
    if (id >= 0) flow.add_edge(flow.out_node(id), 1, 2);
  });
  // interior-interior edges
  for (size_t i = 0; i < interior.size(); ++i) {
    box.for_each_neighbor(interior[i], [&](SiteIndex n) {
      if (!ws.marked(n)) return;
      int j = find_id(n);
      if (j >= 0 && j != static_cast<int>(i)) flow.add_edge(flow.out_node((int)i), flow.in_node(j), 2);
    });
  }
  return flow.max_flow_at_most_2() >= 2;
}

// piv{u,x}: v is pivotal if the connection holds in omega ∪ {v} but fails
// in omega \ {v}. For a live connection only occupied cut vertices on one
// (hence every) path qualify; for a dead one, exactly the vacant sites in
// reach(u) ∩ reach(x).
template <OccupancyView V>
inline std::vector<SiteIndex> pivotal_points_idx(const Box& box, const V& view, Workspace& ws,
                                                 SiteIndex u, SiteIndex x) {
  std::vector<SiteIndex> piv;
  if (u == x) return piv;
  if (adjacent(box, u, x)) return piv;  // connection never fails

  if (!connected_idx(box, view, ws, u, x)) {
    // dead connection: sites whose addition would connect
    reach_from(box, view, ws, u);
    ws.begin_mark();
    for (SiteIndex s : ws.cluster) ws.mark(s);
    for (SiteIndex s : ws.boundary) ws.mark(s);
    std::vector<SiteIndex> candidates;
    reach_from(box, view, ws, x);
    for (SiteIndex s : ws.cluster)
      if (s != u && s != x && ws.marked(s)) candidates.push_back(s);
    for (SiteIndex s : ws.boundary)
      if (s != u && s != x && ws.marked(s)) candidates.push_back(s);
    return candidates;
  }

  // live connection: recover one occupied path via parent tracking
  thread_local std::vector<SiteIndex> frontier;
  thread_local std::vector<std::pair<SiteIndex, SiteIndex>> parent;  // (site, parent)
  frontier.clear();
  parent.clear();
  ws.begin_search();
  ws.set_code(u, 2);
  frontier.push_back(u);
  parent.emplace_back(u, kInvalidSite);
  SiteIndex hit = kInvalidSite;
  for (size_t head = 0; head < frontier.size() && hit == kInvalidSite; ++head) {
    SiteIndex v = frontier[head];
    box.for_each_neighbor(v, [&](SiteIndex n) {
      if (hit != kInvalidSite || ws.code(n) != 0) return;
      if (n == x) {
        hit = v;
        return;
      }
      if (view.occupied(n)) {
        ws.set_code(n, 2);
        frontier.push_back(n);
        parent.emplace_back(n, v);
      } else {
        ws.set_code(n, 1);
      }
    });
  }
  // walk parents from hit back to u; interiors are the candidates
  std::vector<SiteIndex> path;
  SiteIndex cur = hit;
  while (cur != u && cur != kInvalidSite) {
    path.push_back(cur);
    SiteIndex par = kInvalidSite;
    for (auto& pr : parent)
      if (pr.first == cur) {
        par = pr.second;
        break;
      }
    cur = par;
  }
  for (SiteIndex v : path) {
    OverrideOccupancy<V> removed(view, v, false);
    if (!connected_idx(box, removed, ws, u, x)) piv.push_back(v);
  }
  std::sort(piv.begin(), piv.end());
  return piv;
}

// ---- LatticePoint veneers matching the spec operation signatures ----

template <OccupancyView V>
inline bool connected(const Box& box, const V& view, Workspace& ws, const LatticePoint& x,
                      const LatticePoint& y) {
  if (!box.in_range(x) || !box.in_range(y))
    throw std::invalid_argument("connected: point outside box");
  return connected_idx(box, view, ws, box.index_of(x), box.index_of(y));
}

template <OccupancyView V>
inline std::vector<SiteIndex> cluster_of(const Box& box, const V& view, Workspace& ws,
                                         const LatticePoint& x) {
  if (!box.in_range(x)) throw std::invalid_argument("cluster_of: point outside box");
  return cluster_of_idx(box, view, ws, box.index_of(x));
}

template <OccupancyView V>
inline bool through_connected(const Box& box, const V& view, Workspace& ws, Workspace& marker_ws,
                              const LatticePoint& u, const LatticePoint& x,
                              const std::vector<SiteIndex>& a_sites) {
  auto closure = boundary_closure_idx(box, a_sites, marker_ws);
  marker_ws.begin_mark();
  for (SiteIndex s : closure) marker_ws.mark(s);
  return through_connected_marked(box, view, ws, box.index_of(u), box.index_of(x), marker_ws);
}

template <OccupancyView V>
inline bool off_A_connected(const Box& box, const V& view, Workspace& ws, Workspace& marker_ws,
                            const LatticePoint& u, const LatticePoint& x,
                            const std::vector<SiteIndex>& a_closed) {
  marker_ws.begin_mark();
  for (SiteIndex s : a_closed) marker_ws.mark(s);
  return off_set_connected_idx(box, view, ws, box.index_of(u), box.index_of(x), marker_ws);
}

}  // namespace perclab
