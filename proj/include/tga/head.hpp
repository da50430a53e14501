#pragma once

#include <string>
#include <vector>

#include "tga/embedding.hpp"
#include "tga/model_config.hpp"
#include "tga/tape.hpp"

namespace tga {

/// Rank-based AUC with average ranks for ties. `degenerate` is set when only
/// one class is present (the value is meaningless then and must not be read).
struct AucResult {
  bool degenerate = false;
  double value = 0.0;
  int n_pos = 0;
  int n_neg = 0;
};

AucResult auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Binary cross-entropy from a probability (metric-side helper; training uses
/// the logit form on the tape).
double bce_loss(double prob, int label);

/// Target attention over the encoded sequence plus the final MLP + sigmoid.
/// The candidate item is the query; internals are exact dot-product attention.
template <typename T>
class PredictionHead {
 public:
  void register_params(ParameterStore<T>& ps, const ModelConfig& cfg, Rng& rng) {
    cfg_ = cfg;
    const int D = cfg.D();
    cat_emb_ = ps.add_embedding("head.cat_emb", static_cast<int>(cfg.v_cat), cfg.d, rng);
    cand_w_ = ps.add_xavier("head.cand_proj.W", D, cfg.cand_width(), rng);
    cand_b_ = ps.add_zeros("head.cand_proj.b", 1, D);
    key_w_ = ps.add_xavier("head.key.W", D, D, rng);
    val_w_ = ps.add_xavier("head.val.W", D, D, rng);
    mlp1_w_ = ps.add_xavier("head.mlp.1.W", cfg.mlp_h1, cfg.mlp_input(), rng);
    mlp1_b_ = ps.add_zeros("head.mlp.1.b", 1, cfg.mlp_h1);
    mlp2_w_ = ps.add_xavier("head.mlp.2.W", cfg.mlp_h2, cfg.mlp_h1, rng);
    mlp2_b_ = ps.add_zeros("head.mlp.2.b", 1, cfg.mlp_h2);
    mlp3_w_ = ps.add_xavier("head.mlp.3.W", 1, cfg.mlp_h2, rng);
    mlp3_b_ = ps.add_zeros("head.mlp.3.b", 1, 1);
  }

  /// Candidate representation: item embedding ++ category embedding (1 x 2d).
  typename Tape<T>::Id candidate_vec(Tape<T>& tape, const ParameterStore<T>& ps,
                                     const Candidate& cand) const {
    auto item_row = tape.gather_rows(tape.param(ps, "emb.item"),
                                     {vocab_slot(cand.item_id, cfg_.v_item)});
    auto cat_row =
        tape.gather_rows(tape.param(ps, cat_emb_), {vocab_slot(cand.category_id, cfg_.v_cat)});
    return tape.concat_cols({item_row, cat_row});
  }

  /// Softmax over all keys of (key_n . query)/sqrt(D), value-weighted sum.
  /// Empty sequences yield the zero context.
  typename Tape<T>::Id target_attention(Tape<T>& tape, const ParameterStore<T>& ps,
                                        typename Tape<T>::Id encoded, int length,
                                        typename Tape<T>::Id cand_vec) const {
    const int D = cfg_.D();
    if (length == 0) return tape.input(Mat<T>(1, D));
    auto query = tape.add_rowvec(tape.matmul_nt(cand_vec, tape.param(ps, cand_w_)),
                                 tape.param(ps, cand_b_));          // 1 x D
    auto keys = tape.matmul_nt(encoded, tape.param(ps, key_w_));    // L x D
    auto vals = tape.matmul_nt(encoded, tape.param(ps, val_w_));    // L x D
    auto logits = tape.scale(tape.matmul_nt(query, keys), T(1) / std::sqrt(T(D)));  // 1 x L
    auto alpha = tape.row_softmax(logits);
    return tape.matmul(alpha, vals);  // 1 x D
  }

  /// MLP([profile ++ candidate ++ context]) -> logit (1 x 1).
  typename Tape<T>::Id logit(Tape<T>& tape, const ParameterStore<T>& ps,
                             const std::vector<double>& profile, typename Tape<T>::Id cand_vec,
                             typename Tape<T>::Id context) const {
    if (static_cast<int>(profile.size()) != cfg_.profile_dim)
      throw std::invalid_argument("profile dimension " + std::to_string(profile.size()) +
                                  " != configured " + std::to_string(cfg_.profile_dim));
    Mat<T> prof(1, cfg_.profile_dim);
    for (int j = 0; j < cfg_.profile_dim; ++j) prof(0, j) = static_cast<T>(profile[j]);
    auto x = tape.concat_cols({tape.input(std::move(prof)), cand_vec, context});
    auto h1 = tape.relu(tape.add_rowvec(tape.matmul_nt(x, tape.param(ps, mlp1_w_)),
                                        tape.param(ps, mlp1_b_)));
    auto h2 = tape.relu(tape.add_rowvec(tape.matmul_nt(h1, tape.param(ps, mlp2_w_)),
                                        tape.param(ps, mlp2_b_)));
    return tape.add_rowvec(tape.matmul_nt(h2, tape.param(ps, mlp3_w_)),
                           tape.param(ps, mlp3_b_));
  }

 private:
  ModelConfig cfg_;
  int cat_emb_ = -1;
  int cand_w_ = -1, cand_b_ = -1;
  int key_w_ = -1, val_w_ = -1;
  int mlp1_w_ = -1, mlp1_b_ = -1, mlp2_w_ = -1, mlp2_b_ = -1, mlp3_w_ = -1, mlp3_b_ = -1;
};

}  // namespace tga
