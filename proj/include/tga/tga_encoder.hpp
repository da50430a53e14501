#pragma once

#include <cassert>
#include <string>
#include <vector>

#include "tga/embedding.hpp"
#include "tga/graph.hpp"
#include "tga/model_config.hpp"
#include "tga/tape.hpp"

namespace tga {

/// Per-sample execution plan derived from the transition graph: edge
/// instances grouped by (view, behavior pair), plus the 6-slot grid layout
/// the attention runs over. Built once per sample and reused by every layer
/// (the graph and the time/position side matrices never change).
///
/// An edge src->dst feeds two slots with the same transform input
/// [h_src ++ h_dst ++ (Et[dst]-Et[src]) ++ (Ep[dst]-Ep[src])]: the "in" slot
/// of dst and the "out" slot of src, each through its own weights.
struct SlotPlan {
  static constexpr int kSlots = 6;

  struct Group {
    View view;
    Behavior src_behavior;
    Behavior dst_behavior;
    std::vector<int> src_rows;
    std::vector<int> dst_rows;
    std::vector<int> grid_in;   // dst*6 + slot(view, in)
    std::vector<int> grid_out;  // src*6 + slot(view, out)
  };

  int length = 0;
  std::vector<Group> groups;
  std::vector<uint8_t> slot_mask;  // length*6, 1 = slot filled

  static SlotPlan build(const TransitionGraph& g) {
    SlotPlan plan;
    plan.length = g.num_nodes;
    plan.slot_mask.assign(static_cast<size_t>(g.num_nodes) * kSlots, 0);
    // group index by (view, src_beh, dst_beh)
    std::vector<int> index(kNumViews * kNumBehaviors * kNumBehaviors, -1);
    for (const auto& e : g.edges) {
      const int key = (static_cast<int>(e.view) * kNumBehaviors +
                       static_cast<int>(e.src_behavior)) *
                          kNumBehaviors +
                      static_cast<int>(e.dst_behavior);
      if (index[key] < 0) {
        index[key] = static_cast<int>(plan.groups.size());
        plan.groups.push_back(Group{e.view, e.src_behavior, e.dst_behavior, {}, {}, {}, {}});
      }
      Group& grp = plan.groups[index[key]];
      grp.src_rows.push_back(e.src);
      grp.dst_rows.push_back(e.dst);
      const int in_row = e.dst * kSlots + slot_index(e.view, Direction::in);
      const int out_row = e.src * kSlots + slot_index(e.view, Direction::out);
      grp.grid_in.push_back(in_row);
      grp.grid_out.push_back(out_row);
      plan.slot_mask[in_row] = 1;
      plan.slot_mask[out_row] = 1;
    }
    return plan;
  }
};

inline std::string trans_param_name(int layer, View view, Direction dir, Behavior bs, Behavior bd,
                                    bool shared, const char* which) {
  std::string v = shared ? "shared" : to_string(view);
  return "layer" + std::to_string(layer) + ".trans." + v + "." +
         (dir == Direction::in ? "in" : "out") + "." + to_string(bs) + "->" + to_string(bd) +
         "." + which;
}

/// Transition-aware graph attention encoder: per-transition-type edge
/// transforms, ≤6-slot multi-head attention, residual/LayerNorm/FFN block,
/// stacked `layers` times over the same graph.
template <typename T>
class TgaEncoder {
 public:
  struct LayerIds {
    // [view][dir][src_beh][dst_beh]
    int trans_w[kNumViews][2][kNumBehaviors][kNumBehaviors];
    int trans_b[kNumViews][2][kNumBehaviors][kNumBehaviors];
    std::vector<int> q, k, v;  // per head
    int attn_out = -1;
    int ffn1_w = -1, ffn1_b = -1, ffn2_w = -1, ffn2_b = -1;
    int ln1_g = -1, ln1_b = -1, ln2_g = -1, ln2_b = -1;
  };

  TgaEncoder() = default;

  void register_params(ParameterStore<T>& ps, const ModelConfig& cfg, Rng& rng) {
    cfg_ = cfg;
    const int D = cfg.D();
    const int in_width = 2 * D + 2 * cfg.d;  // = 10d
    layers_.clear();
    layers_.resize(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
      LayerIds& ids = layers_[l];
      const int views_to_register = cfg.share_across_views ? 1 : kNumViews;
      for (int v = 0; v < views_to_register; ++v)
        for (int dir = 0; dir < 2; ++dir)
          for (int bs = 0; bs < kNumBehaviors; ++bs)
            for (int bd = 0; bd < kNumBehaviors; ++bd) {
              const auto dirv = static_cast<Direction>(dir);
              const std::string w = trans_param_name(l, static_cast<View>(v), dirv,
                                                     static_cast<Behavior>(bs),
                                                     static_cast<Behavior>(bd),
                                                     cfg.share_across_views, "W");
              const std::string b = trans_param_name(l, static_cast<View>(v), dirv,
                                                     static_cast<Behavior>(bs),
                                                     static_cast<Behavior>(bd),
                                                     cfg.share_across_views, "b");
              const int wid = ps.add_xavier(w, cfg.d, in_width, rng);
              const int bid = ps.add_zeros(b, 1, cfg.d);
              if (cfg.share_across_views) {
                for (int vv = 0; vv < kNumViews; ++vv) {
                  ids.trans_w[vv][dir][bs][bd] = wid;
                  ids.trans_b[vv][dir][bs][bd] = bid;
                }
              } else {
                ids.trans_w[v][dir][bs][bd] = wid;
                ids.trans_b[v][dir][bs][bd] = bid;
              }
            }
      const std::string prefix = "layer" + std::to_string(l);
      for (int h = 0; h < cfg.heads; ++h) {
        ids.q.push_back(ps.add_xavier(prefix + ".attn.q" + std::to_string(h), cfg.dk(), D, rng));
        ids.k.push_back(
            ps.add_xavier(prefix + ".attn.k" + std::to_string(h), cfg.dk(), cfg.d, rng));
        ids.v.push_back(
            ps.add_xavier(prefix + ".attn.v" + std::to_string(h), cfg.dv(), cfg.d, rng));
      }
      ids.attn_out = ps.add_xavier(prefix + ".attn.out", D, cfg.heads * cfg.dv(), rng);
      ids.ffn1_w = ps.add_xavier(prefix + ".ffn.1.W", cfg.ffn_dim(), D, rng);
      ids.ffn1_b = ps.add_zeros(prefix + ".ffn.1.b", 1, cfg.ffn_dim());
      ids.ffn2_w = ps.add_xavier(prefix + ".ffn.2.W", D, cfg.ffn_dim(), rng);
      ids.ffn2_b = ps.add_zeros(prefix + ".ffn.2.b", 1, D);
      ids.ln1_g = add_ones(ps, prefix + ".ln1.g", D);
      ids.ln1_b = ps.add_zeros(prefix + ".ln1.b", 1, D);
      ids.ln2_g = add_ones(ps, prefix + ".ln2.g", D);
      ids.ln2_b = ps.add_zeros(prefix + ".ln2.b", 1, D);
    }
  }

  /// Assembles the transition-aware neighbor representations as a slot grid:
  /// row c*6+s holds the transformed vector for node c's slot s (stable
  /// order item-in, item-out, category-in, category-out, neighbor-in,
  /// neighbor-out); unfilled slots are zero. An edge src->dst feeds the
  /// in-slot of dst through W_in and the out-slot of src through W_out, both
  /// from the same concatenated input.
  typename Tape<T>::Id transition_grid(Tape<T>& tape, const ParameterStore<T>& ps, int layer,
                                       typename Tape<T>::Id states, const NodeStates<T>& side,
                                       const SlotPlan& plan) const {
    using Id = typename Tape<T>::Id;
    const LayerIds& ids = layers_[layer];
    std::vector<Id> slot_srcs;
    std::vector<std::vector<int>> slot_rows;
    for (const auto& grp : plan.groups) {
      Id h_src = tape.gather_rows(states, grp.src_rows);
      Id h_dst = tape.gather_rows(states, grp.dst_rows);
      Id dt = tape.sub(tape.gather_rows(side.e_time, grp.dst_rows),
                       tape.gather_rows(side.e_time, grp.src_rows));
      Id dp = tape.sub(tape.gather_rows(side.e_pos, grp.dst_rows),
                       tape.gather_rows(side.e_pos, grp.src_rows));
      Id x = tape.concat_cols({h_src, h_dst, dt, dp});

      const int vi = static_cast<int>(grp.view);
      const int bs = static_cast<int>(grp.src_behavior);
      const int bd = static_cast<int>(grp.dst_behavior);
      Id w_in = tape.param(ps, ids.trans_w[vi][0][bs][bd]);
      Id b_in = tape.param(ps, ids.trans_b[vi][0][bs][bd]);
      Id w_out = tape.param(ps, ids.trans_w[vi][1][bs][bd]);
      Id b_out = tape.param(ps, ids.trans_b[vi][1][bs][bd]);
      slot_srcs.push_back(tape.add_rowvec(tape.matmul_nt(x, w_in), b_in));
      slot_rows.push_back(grp.grid_in);
      slot_srcs.push_back(tape.add_rowvec(tape.matmul_nt(x, w_out), b_out));
      slot_rows.push_back(grp.grid_out);
    }
    return tape.scatter_rows(std::move(slot_srcs), std::move(slot_rows),
                             plan.length * SlotPlan::kSlots, cfg_.d);
  }

  /// One TGA block on the given layer's parameters.
  typename Tape<T>::Id layer_forward(Tape<T>& tape, const ParameterStore<T>& ps, int layer,
                                     typename Tape<T>::Id states, const NodeStates<T>& side,
                                     const SlotPlan& plan) const {
    using Id = typename Tape<T>::Id;
    const LayerIds& ids = layers_[layer];
    const int L = plan.length;
    const int D = cfg_.D();
    Id grid = transition_grid(tape, ps, layer, states, side, plan);

    // Multi-head attention over each node's ≤6 transition-aware neighbors.
    std::vector<Id> head_outs;
    const T logit_scale = cfg_.scale_logits ? T(1) / std::sqrt(T(cfg_.dk())) : T(1);
    for (int h = 0; h < cfg_.heads; ++h) {
      Id qh = tape.matmul_nt(states, tape.param(ps, ids.q[h]));  // L x dk
      Id kh = tape.matmul_nt(grid, tape.param(ps, ids.k[h]));    // 6L x dk
      Id vh = tape.matmul_nt(grid, tape.param(ps, ids.v[h]));    // 6L x dv
      Id logits = tape.slot_scores(kh, qh, SlotPlan::kSlots);    // L x 6
      if (cfg_.scale_logits) logits = tape.scale(logits, logit_scale);
      Id alpha = tape.masked_row_softmax(logits, plan.slot_mask);
      head_outs.push_back(tape.slot_weighted_sum(alpha, vh));  // L x dv
    }
    Id heads = cfg_.heads == 1 ? head_outs[0]
                               : tape.concat_cols(std::span<const Id>(head_outs));
    Id attn = tape.matmul_nt(heads, tape.param(ps, ids.attn_out));  // L x D

    Id res1 = tape.layer_norm(tape.add(states, attn), tape.param(ps, ids.ln1_g),
                              tape.param(ps, ids.ln1_b));
    Id ffn = tape.add_rowvec(
        tape.matmul_nt(
            tape.relu(tape.add_rowvec(tape.matmul_nt(res1, tape.param(ps, ids.ffn1_w)),
                                      tape.param(ps, ids.ffn1_b))),
            tape.param(ps, ids.ffn2_w)),
        tape.param(ps, ids.ffn2_b));
    Id out = tape.layer_norm(tape.add(res1, ffn), tape.param(ps, ids.ln2_g),
                             tape.param(ps, ids.ln2_b));
#ifndef NDEBUG
    assert(tape.val(out).all_finite());
    assert(tape.val(out).rows == L && tape.val(out).cols == D);
#else
    (void)D;
#endif
    return out;
  }

  /// Stacks all layers over the same graph and side matrices.
  typename Tape<T>::Id encode(Tape<T>& tape, const ParameterStore<T>& ps,
                              const NodeStates<T>& embedded, const SlotPlan& plan) const {
    auto states = embedded.states;
    for (int l = 0; l < cfg_.layers; ++l)
      states = layer_forward(tape, ps, l, states, embedded, plan);
    return states;
  }

  const ModelConfig& config() const { return cfg_; }

 private:
  static int add_ones(ParameterStore<T>& ps, const std::string& name, int cols) {
    const int id = ps.add(name, 1, cols);
    ps.value(id).fill(T(1));
    return id;
  }

  ModelConfig cfg_;
  std::vector<LayerIds> layers_;
};

/// Closed-form forward multiply-add estimate for the TGA encoder, mirroring
/// the recorded primitives with the nominal dense slot grid (3 edges and 6
/// filled slots per node). Linear in L_seq.
inline uint64_t tga_count_flops(int L_seq, int d, int heads, int layers, int dk = 0, int dv = 0,
                                int ffn_mult = 4) {
  if (dk <= 0) dk = std::max(1, d / heads);
  if (dv <= 0) dv = std::max(1, d / heads);
  const uint64_t L = static_cast<uint64_t>(L_seq);
  const uint64_t D = 4ull * d;
  const uint64_t edges = 3 * L;      // item + category + neighbor paths
  const uint64_t slots = 6 * L;
  const uint64_t in_width = 2 * D + 2 * d;  // 10d
  uint64_t per_layer = 0;
  // edge transform inputs: two embedding-delta subtractions per edge
  per_layer += 2 * edges * d;
  // in- and out-transforms: affine 10d -> d per slot
  per_layer += slots * (in_width * d + d);
  // attention per head: query projection, key/value projections over the
  // grid, slot dot products, logit scaling, softmax, weighted sum
  per_layer += static_cast<uint64_t>(heads) *
               (L * dk * D + slots * (static_cast<uint64_t>(dk) * d + static_cast<uint64_t>(dv) * d) +
                slots * dk + L * 6 + 3 * L * 6 + slots * dv);
  // output projection and the residual/LN/FFN block
  per_layer += L * D * (static_cast<uint64_t>(heads) * dv);
  per_layer += L * D;                       // residual add 1
  per_layer += 6 * L * D;                   // layer norm 1
  const uint64_t ffn_dim = ffn_mult * D;
  per_layer += L * (D * ffn_dim + ffn_dim)  // ffn layer 1
               + L * ffn_dim                // relu
               + L * (ffn_dim * D + D);     // ffn layer 2
  per_layer += L * D;                       // residual add 2
  per_layer += 6 * L * D;                   // layer norm 2
  return per_layer * static_cast<uint64_t>(layers);
}

}  // namespace tga
