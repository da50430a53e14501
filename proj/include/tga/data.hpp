#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tga/events.hpp"
#include "tga/rng.hpp"

namespace tga {

enum class PatternKind : uint8_t {
  /// Label lifts when the sequence contains a same-item click->cart
  /// transition on any item sharing the candidate's category.
  item_click_cart = 0,
  /// Label lifts on a same-item click->cart->purchase chain (two consecutive
  /// item-level transitions); partial-chain decoys are planted so one-hop
  /// statistics stay ambiguous.
  two_hop_chain = 1,
};

struct GeneratorConfig {
  int64_t n_samples = 1000;
  int seq_len_min = 64;
  int seq_len_max = 256;
  int64_t n_items = 200;
  int n_categories = 8;
  std::array<double, 4> behavior_rates{{0.60, 0.20, 0.10, 0.10}};  // click,cart,fav,purchase
  double p_convert_when_pattern = 0.7;
  double p_convert_base = 0.1;
  int profile_dim = 16;

  /// Chance that the next event revisits a recently seen item.
  double repeat_affinity = 0.3;
  int pref_categories = 3;
  double candidate_from_pref = 0.8;
  int64_t gap_min_s = 1;
  int64_t gap_max_s = 86400;

  PatternKind pattern = PatternKind::item_click_cart;
  /// two_hop_chain planting rates (per sample).
  double inject_chain = 0.45;
  double inject_decoy = 0.9;

  uint64_t seed = 42;
};

/// True iff the label-relevant pattern is present: the generator's ground
/// truth, also usable as the Bayes-optimal scorer's feature.
bool has_pattern(const Sample& sample, PatternKind kind);

/// Deterministic synthetic samples; labels are Bernoulli(p_pattern) or
/// Bernoulli(p_base) depending on has_pattern.
std::vector<Sample> generate(const GeneratorConfig& cfg);

/// AUC of the two-point Bayes-optimal scorer: positives/negatives score
/// p or q according to pattern presence, prevalence pi.
double bayes_optimal_auc(double p_pattern, double p_base, double prevalence);

/// Fraction of samples containing the pattern.
double pattern_prevalence(const std::vector<Sample>& samples, PatternKind kind);

// ---- JSONL + batching ----

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

void write_jsonl(const std::vector<Sample>& samples, const std::string& path);

/// Parses the JSONL sample schema; positions are assigned from array order,
/// then sequences are truncated to the most recent max_seq_len events. A
/// malformed line aborts with its line number.
std::vector<Sample> load_jsonl(const std::string& path, int max_seq_len);

/// Contiguous index ranges [begin, end) covering n in order, last may be short.
std::vector<std::pair<int64_t, int64_t>> batch_ranges(int64_t n, int64_t batch_size);

}  // namespace tga
