#pragma once

#include <algorithm>
#include <chrono>
#include <sstream>
#include <string>
#include <vector>

#include "tga/train.hpp"

namespace tga {

struct BenchRow {
  std::string model;
  int length = 0;
  bool skipped = false;  // baseline above the memory cap, reported as "-"
  double fwd_ms = 0.0;
  double train_ms = 0.0;
  double samples_per_s = 0.0;
  uint64_t fwd_macs = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  int64_t tga_params = 0;
  int64_t baseline_params = 0;

  std::string csv() const {
    std::ostringstream os;
    os << "model,L,fwd_ms,train_ms,samples_per_s\n";
    os.precision(6);
    for (const auto& r : rows) {
      os << r.model << ',' << r.length << ',';
      if (r.skipped)
        os << "-,-,-";
      else
        os << r.fwd_ms << ',' << r.train_ms << ',' << r.samples_per_s;
      os << '\n';
    }
    return os.str();
  }
};

/// Rough peak-memory estimate for a baseline forward+backward at length L:
/// the L x L logits and attention weights plus their adjoints, per head and
/// layer.
inline int64_t baseline_memory_estimate(const ModelConfig& cfg, int length, size_t scalar_size) {
  return static_cast<int64_t>(4) * cfg.heads * cfg.layers * length * length *
         static_cast<int64_t>(scalar_size);
}

/// Median wall-time per batch for forward-only and forward+backward+step, for
/// the TGA model and the full-attention baseline, across sequence lengths.
template <typename T>
BenchReport measure_ti_speed(const ModelConfig& base_cfg, const std::vector<int>& lengths,
                             int repeats, int batch, uint64_t seed,
                             int64_t baseline_mem_cap = 6LL << 30) {
  using clock = std::chrono::steady_clock;
  BenchReport report;
  for (const int L : lengths) {
    ModelConfig cfg = base_cfg;
    cfg.max_seq_len = L;
    cfg.max_positions = std::max(cfg.max_positions, L);

    GeneratorConfig gen;
    gen.n_samples = batch;
    gen.seq_len_min = gen.seq_len_max = L;
    gen.profile_dim = cfg.profile_dim;
    gen.seed = seed + static_cast<uint64_t>(L);
    const std::vector<Sample> samples = generate(gen);

    for (const EncoderKind kind : {EncoderKind::tga, EncoderKind::baseline}) {
      cfg.encoder = kind;
      BenchRow row;
      row.model = kind == EncoderKind::tga ? "tga" : "baseline";
      row.length = L;
      if (kind == EncoderKind::baseline &&
          baseline_memory_estimate(cfg, L, sizeof(T)) > baseline_mem_cap) {
        row.skipped = true;
        report.rows.push_back(row);
        continue;
      }
      Model<T> model(cfg, seed);
      if (kind == EncoderKind::tga)
        report.tga_params = model.param_count();
      else
        report.baseline_params = model.param_count();

      {
        Tape<T> tape;  // instrumented forward for the op-count law
        model.forward_on_tape(tape, samples[0]);
        row.fwd_macs = tape.macs();
      }

      model.forward(samples[0]);  // warmup
      std::vector<double> fwd_times, train_times;
      AdamState<T> adam = AdamState<T>::init(model.params());
      GradBuffer<T> gb = model.params().make_grad_buffer();
      for (int r = 0; r < repeats; ++r) {
        auto t0 = clock::now();
        for (const auto& s : samples) model.forward(s);
        auto t1 = clock::now();
        fwd_times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

        t0 = clock::now();
        gb.zero();
        const T scale = T(1) / static_cast<T>(batch);
        for (const auto& s : samples) model.forward_backward(s, gb, scale);
        adam_step(model.params(), gb, adam, 1e-3, 0.9, 0.999, 1e-8);
        t1 = clock::now();
        train_times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      std::sort(fwd_times.begin(), fwd_times.end());
      std::sort(train_times.begin(), train_times.end());
      row.fwd_ms = fwd_times[fwd_times.size() / 2];
      row.train_ms = train_times[train_times.size() / 2];
      row.samples_per_s = row.train_ms > 0 ? 1000.0 * batch / row.train_ms : 0.0;
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace tga
