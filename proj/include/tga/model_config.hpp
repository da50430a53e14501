#pragma once

#include <algorithm>
#include <array>
#include <cstdint>

namespace tga {

enum class TimeEncoding : uint8_t { recency = 0, absolute_bucket = 1 };
enum class EncoderKind : uint8_t { tga = 0, baseline = 1 };

/// Everything that fixes the model architecture. Node base width is D = 4d
/// (item, behavior, time, position embeddings concatenated).
struct ModelConfig {
  int d = 64;           // per-field embedding width
  int heads = 4;        // attention heads K
  int d_k = 0;          // per-head key/query width; 0 resolves to max(1, d/heads)
  int d_v = 0;          // per-head value width; 0 resolves like d_k
  int layers = 3;
  int ffn_mult = 4;     // FFN hidden width = ffn_mult * D

  int64_t v_item = 65536;
  int64_t v_cat = 4096;
  int v_time_buckets = 32;
  int max_positions = 2048;
  int max_seq_len = 256;

  int profile_dim = 16;
  int mlp_h1 = 128;
  int mlp_h2 = 64;

  bool scale_logits = true;
  bool share_across_views = false;
  TimeEncoding time_encoding = TimeEncoding::recency;

  std::array<bool, 3> enabled_views{{true, true, true}};
  int64_t max_gap = -1;

  EncoderKind encoder = EncoderKind::tga;

  int D() const { return 4 * d; }
  int dk() const { return d_k > 0 ? d_k : std::max(1, d / heads); }
  int dv() const { return d_v > 0 ? d_v : std::max(1, d / heads); }
  int ffn_dim() const { return ffn_mult * D(); }
  int cand_width() const { return 2 * d; }
  int mlp_input() const { return profile_dim + cand_width() + D(); }
};

}  // namespace tga
