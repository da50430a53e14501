#pragma once

#include <memory>
#include <string>

#include "tga/baseline.hpp"
#include "tga/embedding.hpp"
#include "tga/graph.hpp"
#include "tga/head.hpp"
#include "tga/model_config.hpp"
#include "tga/tga_encoder.hpp"

namespace tga {

/// Full scoring model: sequence -> graph -> embedding -> encoder (TGA or the
/// full-attention baseline) -> target attention + MLP -> conversion
/// probability. One instance owns its parameters; forward passes are const
/// and may run concurrently on different samples.
template <typename T>
class Model {
 public:
  struct Forward {
    double prob = 0.5;
    double loss = 0.0;
    uint64_t macs = 0;
  };

  Model(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg), params_(seed) {
    Rng rng(seed);
    register_embedding_params(params_, cfg_, rng);
    if (cfg_.encoder == EncoderKind::tga)
      encoder_.register_params(params_, cfg_, rng);
    else
      baseline_.register_params(params_, cfg_, rng);
    head_.register_params(params_, cfg_, rng);
  }

  const ModelConfig& config() const { return cfg_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }
  int64_t param_count() const { return params_.total_params(); }

  /// Forward only; returns probability and BCE loss against the sample label.
  Forward forward(const Sample& sample) const {
    Tape<T> tape;
    return run(tape, sample, nullptr, T(1));
  }

  double predict(const Sample& sample) const { return forward(sample).prob; }

  /// Forward + backward; gradients scaled by grad_scale accumulate into gb.
  Forward forward_backward(const Sample& sample, GradBuffer<T>& gb, T grad_scale = T(1)) const {
    Tape<T> tape;
    return run(tape, sample, &gb, grad_scale);
  }

  /// Forward on an existing tape without backward; exposed for tests and the
  /// complexity instrumentation. Returns the logit id.
  typename Tape<T>::Id forward_on_tape(Tape<T>& tape, const Sample& sample) const {
    const BehaviorSequence seq = prepared_sequence(sample);
    NodeStates<T> embedded = embed_sequence(tape, params_, seq, cfg_);
    typename Tape<T>::Id encoded;
    if (cfg_.encoder == EncoderKind::tga) {
      GraphOptions gopt;
      gopt.enabled_views = cfg_.enabled_views;
      gopt.max_gap = cfg_.max_gap;
      const TransitionGraph graph = build_graph(seq, gopt);
      const SlotPlan plan = SlotPlan::build(graph);
      encoded = encoder_.encode(tape, params_, embedded, plan);
    } else {
      encoded = baseline_.encode(tape, params_, embedded);
    }
    auto cand = head_.candidate_vec(tape, params_, sample.candidate);
    auto context = head_.target_attention(tape, params_, encoded, embedded.length, cand);
    return head_.logit(tape, params_, sample.profile, cand, context);
  }

  const PredictionHead<T>& head() const { return head_; }
  const TgaEncoder<T>& encoder() const { return encoder_; }

 private:
  BehaviorSequence prepared_sequence(const Sample& sample) const {
    BehaviorSequence seq = truncate_to_recent(sample.sequence, cfg_.max_seq_len);
    if (auto v = validate_sequence(seq))
      throw std::invalid_argument("invalid sequence at event " + std::to_string(v->index) +
                                  ": " + v->what);
    return seq;
  }

  Forward run(Tape<T>& tape, const Sample& sample, GradBuffer<T>* gb, T grad_scale) const {
    auto logit_id = forward_on_tape(tape, sample);
    auto loss_id = tape.mean_bce_with_logits(logit_id, {static_cast<T>(sample.label)});
    Forward out;
    const double z = static_cast<double>(tape.val(logit_id)(0, 0));
    out.prob = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    out.loss = static_cast<double>(tape.val(loss_id)(0, 0));
    out.macs = tape.macs();
    if (gb != nullptr) tape.backward(loss_id, gb, grad_scale);
    return out;
  }

  ModelConfig cfg_;
  ParameterStore<T> params_;
  TgaEncoder<T> encoder_;
  BaselineEncoder<T> baseline_;
  PredictionHead<T> head_;
};

}  // namespace tga
