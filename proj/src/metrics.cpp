#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tga/head.hpp"

namespace tga {

AucResult auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: scores and labels differ in length");
  AucResult r;
  for (int y : labels) (y ? r.n_pos : r.n_neg)++;
  if (r.n_pos == 0 || r.n_neg == 0) {
    r.degenerate = true;
    return r;
  }

  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Sum of positive ranks with average ranks over tied groups.
  double pos_rank_sum = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]]) pos_rank_sum += avg_rank;
    i = j;
  }
  const double np = r.n_pos, nn = r.n_neg;
  r.value = (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
  return r;
}

double bce_loss(double prob, int label) {
  const double p = std::min(1.0 - 1e-12, std::max(1e-12, prob));
  return -(label ? std::log(p) : std::log(1.0 - p));
}

}  // namespace tga
