#include "tga/graph.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace tga {

const char* to_string(View v) {
  switch (v) {
    case View::item: return "item";
    case View::category: return "category";
    case View::neighbor: return "neighbor";
  }
  return "?";
}

int TransitionGraph::edge_count(View v) const {
  int n = 0;
  for (const auto& e : edges)
    if (e.view == v) ++n;
  return n;
}

namespace {

void link(TransitionGraph& g, const BehaviorSequence& seq, int src, int dst, View v) {
  const int idx = static_cast<int>(g.edges.size());
  g.edges.push_back(TransitionEdge{src, dst, v, seq.events[src].behavior,
                                   seq.events[dst].behavior});
  g.adjacency[src].edge[slot_index(v, Direction::out)] = idx;
  g.adjacency[dst].edge[slot_index(v, Direction::in)] = idx;
}

}  // namespace

TransitionGraph build_graph(const BehaviorSequence& seq, const GraphOptions& opts) {
  TransitionGraph g;
  g.num_nodes = seq.size();
  g.adjacency.resize(g.num_nodes);

  const bool item_on = opts.enabled_views[static_cast<int>(View::item)];
  const bool cat_on = opts.enabled_views[static_cast<int>(View::category)];
  const bool nb_on = opts.enabled_views[static_cast<int>(View::neighbor)];

  // Nearest qualifying predecessor per view, tracked with last-seen maps.
  // Item view links consecutive events of the same item; category view links
  // consecutive events of the same category when their items differ (same-item
  // pairs belong to the item view); neighbor view links consecutive positions.
  std::unordered_map<int64_t, int> last_item;
  std::unordered_map<int64_t, int> last_cat;

  auto gap_ok = [&](int src, int dst) {
    return opts.max_gap < 0 || static_cast<int64_t>(dst - src) <= opts.max_gap;
  };

  for (int dst = 0; dst < g.num_nodes; ++dst) {
    const Event& e = seq.events[dst];

    if (item_on) {
      auto it = last_item.find(e.item_id);
      if (it != last_item.end() && gap_ok(it->second, dst))
        link(g, seq, it->second, dst, View::item);
    }
    if (cat_on) {
      auto it = last_cat.find(e.category_id);
      if (it != last_cat.end() && seq.events[it->second].item_id != e.item_id &&
          gap_ok(it->second, dst))
        link(g, seq, it->second, dst, View::category);
    }
    if (nb_on && dst > 0) link(g, seq, dst - 1, dst, View::neighbor);

    last_item[e.item_id] = dst;
    last_cat[e.category_id] = dst;
  }
  return g;
}

std::array<double, kNumViews> edge_stats(const TransitionGraph& g) {
  std::array<double, kNumViews> stats{{0.0, 0.0, 0.0}};
  if (g.num_nodes == 0) return stats;
  for (const auto& e : g.edges) stats[static_cast<int>(e.view)] += 2.0;
  for (auto& s : stats) s /= g.num_nodes;
  return stats;
}

std::vector<NeighborSlot> neighbor_slots(const TransitionGraph& g, int node) {
  if (node < 0 || node >= g.num_nodes)
    throw std::out_of_range("neighbor_slots: node " + std::to_string(node) +
                            " out of range (num_nodes=" + std::to_string(g.num_nodes) + ")");
  std::vector<NeighborSlot> out;
  const AdjSlots& adj = g.adjacency[node];
  for (int s = 0; s < 6; ++s) {
    const int ei = adj.edge[s];
    if (ei < 0) continue;
    const TransitionEdge& e = g.edges[ei];
    const Direction dir = static_cast<Direction>(s % 2);
    const int peer = dir == Direction::in ? e.src : e.dst;
    out.push_back(NeighborSlot{static_cast<View>(s / 2), dir, peer, e.src_behavior,
                               e.dst_behavior});
  }
  return out;
}

void dump_graph(const TransitionGraph& g, std::ostream& os) {
  std::vector<TransitionEdge> sorted = g.edges;
  std::sort(sorted.begin(), sorted.end(), [](const TransitionEdge& a, const TransitionEdge& b) {
    if (a.src != b.src) return a.src < b.src;
    if (a.view != b.view) return a.view < b.view;
    return a.dst < b.dst;
  });
  for (const auto& e : sorted) {
    os << e.src << ' ' << e.dst << ' ' << to_string(e.view) << ' '
       << to_string(e.src_behavior) << ' ' << to_string(e.dst_behavior) << '\n';
  }
}

}  // namespace tga
