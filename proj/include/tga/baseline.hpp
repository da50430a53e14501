#pragma once

#include <string>
#include <vector>

#include "tga/embedding.hpp"
#include "tga/model_config.hpp"
#include "tga/tape.hpp"

namespace tga {

/// Standard full multi-head self-attention encoder over the same embedded
/// sequence, with the same residual/LN/FFN block as the TGA layers. Used as
/// the quadratic-complexity comparator; attention runs over all node pairs
/// with no causal mask.
template <typename T>
class BaselineEncoder {
 public:
  void register_params(ParameterStore<T>& ps, const ModelConfig& cfg, Rng& rng) {
    cfg_ = cfg;
    const int D = cfg.D();
    head_dim_ = std::max(1, D / cfg.heads);
    layers_.clear();
    layers_.resize(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
      LayerIds& ids = layers_[l];
      const std::string prefix = "base.layer" + std::to_string(l);
      for (int h = 0; h < cfg.heads; ++h) {
        ids.q.push_back(
            ps.add_xavier(prefix + ".attn.q" + std::to_string(h), head_dim_, D, rng));
        ids.k.push_back(
            ps.add_xavier(prefix + ".attn.k" + std::to_string(h), head_dim_, D, rng));
        ids.v.push_back(
            ps.add_xavier(prefix + ".attn.v" + std::to_string(h), head_dim_, D, rng));
      }
      ids.attn_out = ps.add_xavier(prefix + ".attn.out", D, cfg.heads * head_dim_, rng);
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

  typename Tape<T>::Id encode(Tape<T>& tape, const ParameterStore<T>& ps,
                              const NodeStates<T>& embedded) const {
    using Id = typename Tape<T>::Id;
    Id states = embedded.states;
    const T logit_scale = T(1) / std::sqrt(T(head_dim_));
    for (const LayerIds& ids : layers_) {
      std::vector<Id> head_outs;
      for (size_t h = 0; h < ids.q.size(); ++h) {
        Id qh = tape.matmul_nt(states, tape.param(ps, ids.q[h]));  // L x hd
        Id kh = tape.matmul_nt(states, tape.param(ps, ids.k[h]));
        Id vh = tape.matmul_nt(states, tape.param(ps, ids.v[h]));
        Id logits = tape.scale(tape.matmul_nt(qh, kh), logit_scale);  // L x L
        Id alpha = tape.row_softmax(logits);
        head_outs.push_back(tape.matmul(alpha, vh));  // L x hd
      }
      Id heads = head_outs.size() == 1 ? head_outs[0]
                                       : tape.concat_cols(std::span<const Id>(head_outs));
      Id attn = tape.matmul_nt(heads, tape.param(ps, ids.attn_out));
      Id res1 = tape.layer_norm(tape.add(states, attn), tape.param(ps, ids.ln1_g),
                                tape.param(ps, ids.ln1_b));
      Id ffn = tape.add_rowvec(
          tape.matmul_nt(
              tape.relu(tape.add_rowvec(tape.matmul_nt(res1, tape.param(ps, ids.ffn1_w)),
                                        tape.param(ps, ids.ffn1_b))),
              tape.param(ps, ids.ffn2_w)),
          tape.param(ps, ids.ffn2_b));
      states = tape.layer_norm(tape.add(res1, ffn), tape.param(ps, ids.ln2_g),
                               tape.param(ps, ids.ln2_b));
    }
    return states;
  }

 private:
  struct LayerIds {
    std::vector<int> q, k, v;
    int attn_out = -1;
    int ffn1_w = -1, ffn1_b = -1, ffn2_w = -1, ffn2_b = -1;
    int ln1_g = -1, ln1_b = -1, ln2_g = -1, ln2_b = -1;
  };

  static int add_ones(ParameterStore<T>& ps, const std::string& name, int cols) {
    const int id = ps.add(name, 1, cols);
    ps.value(id).fill(T(1));
    return id;
  }

  ModelConfig cfg_;
  int head_dim_ = 1;
  std::vector<LayerIds> layers_;
};

/// Closed-form forward multiply-add estimate for the baseline encoder; the
/// attention score/weighting terms are quadratic in L_seq.
inline uint64_t baseline_count_flops(int L_seq, int d, int heads, int layers, int ffn_mult = 4) {
  const uint64_t L = static_cast<uint64_t>(L_seq);
  const uint64_t D = 4ull * d;
  const uint64_t hd = std::max<uint64_t>(1, D / heads);
  uint64_t per_layer = 0;
  per_layer += static_cast<uint64_t>(heads) *
               (3 * L * hd * D      // q/k/v projections
                + L * L * hd        // logits
                + L * L             // scale
                + 3 * L * L         // softmax
                + L * L * hd);      // weighted values
  per_layer += L * D * (heads * hd);  // output projection
  const uint64_t ffn_dim = ffn_mult * D;
  per_layer += 2 * L * D + 12 * L * D;  // residuals + two layer norms
  per_layer += L * (D * ffn_dim + ffn_dim) + L * ffn_dim + L * (ffn_dim * D + D);
  return per_layer * static_cast<uint64_t>(layers);
}

}  // namespace tga
