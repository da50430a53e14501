#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "tga/events.hpp"
#include "tga/model_config.hpp"
#include "tga/tape.hpp"

namespace tga {

inline uint64_t hash64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d49bb133111ebull;
  return x ^ (x >> 31);
}

/// Vocabulary slot for an id: modulo of a 64-bit hash.
inline int vocab_slot(int64_t id, int64_t vocab) {
  return static_cast<int>(hash64(static_cast<uint64_t>(id)) % static_cast<uint64_t>(vocab));
}

/// Logarithmic recency bucket of (reference - timestamp), clamped to the
/// table size. Negative gaps clamp to bucket 0.
inline int time_bucket(int64_t timestamp, int64_t reference, int v_time_buckets) {
  int64_t gap = reference - timestamp;
  if (gap < 0) {
#ifndef NDEBUG
    std::fprintf(stderr, "time_bucket: negative gap %lld clamped to 0\n",
                 static_cast<long long>(gap));
#endif
    gap = 0;
  }
  const int b = static_cast<int>(std::floor(std::log2(1.0 + static_cast<double>(gap))));
  return std::min(b, v_time_buckets - 1);
}

/// Per-layer node representations plus the immutable time/position side
/// matrices reused by every encoder layer.
template <typename T>
struct NodeStates {
  int length = 0;
  typename Tape<T>::Id states = -1;  // L x D
  typename Tape<T>::Id e_time = -1;  // L x d, never changes across layers
  typename Tape<T>::Id e_pos = -1;   // L x d, never changes across layers
};

template <typename T>
void register_embedding_params(ParameterStore<T>& ps, const ModelConfig& cfg, Rng& rng) {
  ps.add_embedding("emb.item", static_cast<int>(cfg.v_item), cfg.d, rng);
  ps.add_embedding("emb.behavior", kNumBehaviors, cfg.d, rng);
  ps.add_embedding("emb.time", cfg.v_time_buckets, cfg.d, rng);
  ps.add_embedding("emb.position", cfg.max_positions, cfg.d, rng);
}

/// Row n = item-emb ++ behavior-emb ++ time-emb ++ position-emb, width 4d.
template <typename T>
NodeStates<T> embed_sequence(Tape<T>& tape, const ParameterStore<T>& ps,
                             const BehaviorSequence& seq, const ModelConfig& cfg) {
  const int n = seq.size();
  std::vector<int> item_idx(n), beh_idx(n), time_idx(n), pos_idx(n);
  const int64_t reference = n > 0 ? seq.events.back().timestamp : 0;
  for (int i = 0; i < n; ++i) {
    const Event& e = seq.events[i];
    if (e.position >= cfg.max_positions)
      throw std::length_error("embed_sequence: position " + std::to_string(e.position) +
                              " >= max_positions " + std::to_string(cfg.max_positions));
    item_idx[i] = vocab_slot(e.item_id, cfg.v_item);
    beh_idx[i] = static_cast<int>(e.behavior);
    time_idx[i] = cfg.time_encoding == TimeEncoding::recency
                      ? time_bucket(e.timestamp, reference, cfg.v_time_buckets)
                      : time_bucket(0, e.timestamp, cfg.v_time_buckets);
    pos_idx[i] = e.position;
  }
  auto item_t = tape.param(ps, "emb.item");
  auto beh_t = tape.param(ps, "emb.behavior");
  auto time_t = tape.param(ps, "emb.time");
  auto pos_t = tape.param(ps, "emb.position");

  auto e_item = tape.gather_rows(item_t, std::move(item_idx));
  auto e_beh = tape.gather_rows(beh_t, std::move(beh_idx));
  auto e_time = tape.gather_rows(time_t, std::move(time_idx));
  auto e_pos = tape.gather_rows(pos_t, std::move(pos_idx));

  NodeStates<T> out;
  out.length = n;
  out.e_time = e_time;
  out.e_pos = e_pos;
  out.states = tape.concat_cols({e_item, e_beh, e_time, e_pos});
  return out;
}

}  // namespace tga
