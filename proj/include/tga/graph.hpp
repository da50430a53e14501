#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tga/events.hpp"

namespace tga {

/// The three relational views under which transition edges are created.
enum class View : uint8_t { item = 0, category = 1, neighbor = 2 };

inline constexpr int kNumViews = 3;

const char* to_string(View v);

enum class Direction : uint8_t { in = 0, out = 1 };

/// Directed edge between two sequence positions, labeled with its view and
/// the ordered behavior pair of its endpoints. src < dst always.
struct TransitionEdge {
  int src = 0;
  int dst = 0;
  View view = View::item;
  Behavior src_behavior = Behavior::click;
  Behavior dst_behavior = Behavior::click;
};

inline int slot_index(View v, Direction d) {
  return static_cast<int>(v) * 2 + static_cast<int>(d);
}

/// Per-node adjacency: one optional edge per (view, direction), -1 if empty.
/// Slot order is (item-in, item-out, category-in, category-out, neighbor-in,
/// neighbor-out).
struct AdjSlots {
  std::array<int32_t, 6> edge{{-1, -1, -1, -1, -1, -1}};
};

struct TransitionGraph {
  int num_nodes = 0;
  std::vector<TransitionEdge> edges;
  std::vector<AdjSlots> adjacency;

  int edge_count(View v) const;
};

struct GraphOptions {
  std::array<bool, kNumViews> enabled_views{{true, true, true}};
  /// Maximum position gap for item/category edges; < 0 means unlimited.
  int64_t max_gap = -1;
};

/// Compiles a validated sequence into the sparse three-view transition graph.
/// Each node keeps at most one predecessor and one successor per view; edges
/// connect the nearest qualifying pair. Deterministic.
TransitionGraph build_graph(const BehaviorSequence& seq, const GraphOptions& opts = {});

/// Average incident edges per node, per view (each edge touches two nodes).
std::array<double, kNumViews> edge_stats(const TransitionGraph& g);

struct NeighborSlot {
  View view;
  Direction direction;
  int peer;
  Behavior src_behavior;  // behavior pair of the underlying edge, src then dst
  Behavior dst_behavior;
};

/// Filled adjacency slots of a node, in stable slot order. Throws
/// std::out_of_range for an invalid node index.
std::vector<NeighborSlot> neighbor_slots(const TransitionGraph& g, int node);

/// Text dump, one line per edge: "src dst view src_beh dst_beh", sorted by
/// (src, view, dst).
void dump_graph(const TransitionGraph& g, std::ostream& os);

}  // namespace tga
