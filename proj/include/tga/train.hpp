#pragma once

#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include "tga/data.hpp"
#include "tga/head.hpp"
#include "tga/model.hpp"

namespace tga {

enum class Optimizer : uint8_t { sgd = 0, adam = 1 };

struct TrainConfig {
  Optimizer optimizer = Optimizer::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 512;
  int epochs = 1;
  int64_t max_steps = -1;  // cap on optimizer steps; -1 = epochs only
  int eval_every = 100;    // steps between validation evals; 0 = end only
  int threads = 0;         // 0 = hardware concurrency
  uint64_t seed = 1;

  int resolved_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
};

class TrainError : public std::runtime_error {
 public:
  explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

struct TrainLogRow {
  int64_t step = 0;
  double loss = 0.0;
  bool has_eval = false;
  double valid_auc = 0.0;
};

struct EvalResult {
  AucResult auc;
  double logloss = 0.0;
  int64_t n = 0;
  double pos_rate = 0.0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  double best_valid_auc = 0.0;
  int64_t best_step = -1;
  int64_t steps = 0;

  std::string csv() const {
    std::ostringstream os;
    os << "step,loss,valid_auc\n";
    os.precision(10);
    for (const auto& r : log) {
      os << r.step << ',' << r.loss << ',';
      if (r.has_eval) os << r.valid_auc;
      os << '\n';
    }
    return os.str();
  }
};

template <typename T>
struct AdamState {
  std::vector<Mat<T>> m, v;
  int64_t t = 0;

  static AdamState init(const ParameterStore<T>& ps) {
    AdamState st;
    for (const auto& e : ps.entries()) {
      st.m.emplace_back(e.value.rows, e.value.cols);
      st.v.emplace_back(e.value.rows, e.value.cols);
    }
    return st;
  }
};

/// Bias-corrected Adam update from the store's accumulated gradients.
template <typename T>
void adam_step(ParameterStore<T>& ps, const GradBuffer<T>& grads, AdamState<T>& st, double lr,
               double beta1, double beta2, double eps) {
  st.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
  for (int p = 0; p < ps.count(); ++p) {
    Mat<T>& theta = ps.value(p);
    const Mat<T>& g = grads.g[p];
    Mat<T>& m = st.m[p];
    Mat<T>& v = st.v[p];
    for (size_t i = 0; i < theta.a.size(); ++i) {
      const double gi = static_cast<double>(g.a[i]);
      const double mi = beta1 * static_cast<double>(m.a[i]) + (1.0 - beta1) * gi;
      const double vi = beta2 * static_cast<double>(v.a[i]) + (1.0 - beta2) * gi * gi;
      m.a[i] = static_cast<T>(mi);
      v.a[i] = static_cast<T>(vi);
      theta.a[i] -= static_cast<T>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps));
    }
  }
}

template <typename T>
void sgd_step(ParameterStore<T>& ps, const GradBuffer<T>& grads, double lr) {
  for (int p = 0; p < ps.count(); ++p) {
    Mat<T>& theta = ps.value(p);
    const Mat<T>& g = grads.g[p];
    for (size_t i = 0; i < theta.a.size(); ++i)
      theta.a[i] -= static_cast<T>(lr * static_cast<double>(g.a[i]));
  }
}

/// Forward-only evaluation; scores are stored per sample index so the result
/// is independent of worker scheduling.
template <typename T>
EvalResult evaluate(const Model<T>& model, const std::vector<Sample>& data, int threads) {
  const int64_t n = static_cast<int64_t>(data.size());
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  const int W = static_cast<int>(std::max<int64_t>(1, std::min<int64_t>(threads, n)));
  std::vector<double> loss_sums(W, 0.0);
  std::vector<std::thread> workers;
  for (int w = 0; w < W; ++w) {
    workers.emplace_back([&, w] {
      const int64_t lo = n * w / W, hi = n * (w + 1) / W;
      for (int64_t i = lo; i < hi; ++i) {
        const auto f = model.forward(data[i]);
        scores[i] = f.prob;
        labels[i] = data[i].label;
        loss_sums[w] += f.loss;
      }
    });
  }
  for (auto& t : workers) t.join();

  EvalResult r;
  r.n = n;
  double loss = 0.0;
  int64_t pos = 0;
  for (int w = 0; w < W; ++w) loss += loss_sums[w];
  for (int64_t i = 0; i < n; ++i) pos += labels[i];
  r.logloss = n > 0 ? loss / static_cast<double>(n) : 0.0;
  r.pos_rate = n > 0 ? static_cast<double>(pos) / static_cast<double>(n) : 0.0;
  r.auc = auc(scores, labels);
  return r;
}

/// Mini-batch loop: forward/backward/step per batch, periodic validation,
/// keep-best on valid AUC. Deterministic for a fixed seed and worker count:
/// each worker accumulates a contiguous chunk in order and buffers are
/// reduced in worker order. On return the model holds the best parameters.
template <typename T>
TrainResult train(Model<T>& model, const std::vector<Sample>& train_data,
                  const std::vector<Sample>& valid_data, const TrainConfig& cfg,
                  std::ostream* progress = nullptr) {
  if (train_data.empty()) throw TrainError("empty training stream");
  if (valid_data.empty()) throw TrainError("empty validation stream");

  ParameterStore<T>& ps = model.params();
  AdamState<T> adam = AdamState<T>::init(ps);
  const int W = cfg.resolved_threads();
  std::vector<GradBuffer<T>> worker_gb;
  for (int w = 0; w < W; ++w) worker_gb.push_back(ps.make_grad_buffer());

  TrainResult result;
  std::vector<Mat<T>> best_values;
  const int64_t n = static_cast<int64_t>(train_data.size());

  auto run_eval = [&](int64_t step) {
    const EvalResult ev = evaluate(model, valid_data, W);
    const double a = ev.auc.degenerate ? 0.5 : ev.auc.value;
    if (result.best_step < 0 || a > result.best_valid_auc) {
      result.best_valid_auc = a;
      result.best_step = step;
      best_values.clear();
      for (const auto& e : ps.entries()) best_values.push_back(e.value);
    }
    if (progress)
      (*progress) << "step " << step << " valid_auc " << a << " logloss " << ev.logloss
                  << std::endl;
    return a;
  };

  int64_t step = 0;
  bool done = false;
  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    for (const auto& [lo, hi] : batch_ranges(n, cfg.batch_size)) {
      if (cfg.max_steps >= 0 && step >= cfg.max_steps) {
        done = true;
        break;
      }
      const int64_t bsz = hi - lo;
      const T scale = T(1) / static_cast<T>(bsz);
      std::vector<double> loss_sums(W, 0.0);
      const int active = static_cast<int>(std::min<int64_t>(W, bsz));
      std::vector<std::thread> workers;
      for (int w = 0; w < active; ++w) {
        workers.emplace_back([&, w] {
          worker_gb[w].zero();
          const int64_t wlo = lo + bsz * w / active, whi = lo + bsz * (w + 1) / active;
          for (int64_t i = wlo; i < whi; ++i)
            loss_sums[w] += model.forward_backward(train_data[i], worker_gb[w], scale).loss;
        });
      }
      for (auto& t : workers) t.join();

      ps.zero_grads();
      double batch_loss = 0.0;
      for (int w = 0; w < active; ++w) {
        ps.grads.add(worker_gb[w]);
        batch_loss += loss_sums[w];
      }
      batch_loss /= static_cast<double>(bsz);

      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "non-finite loss at step " << step << "\nparameter norms:\n";
        for (const auto& e : ps.entries()) {
          double s = 0;
          for (T v : e.value.a) s += static_cast<double>(v) * v;
          os << "  " << e.name << " " << std::sqrt(s) << "\n";
        }
        throw TrainError(os.str());
      }

      if (cfg.optimizer == Optimizer::adam)
        adam_step(ps, ps.grads, adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
      else
        sgd_step(ps, ps.grads, cfg.lr);
      ++step;

      TrainLogRow row;
      row.step = step;
      row.loss = batch_loss;
      if (cfg.eval_every > 0 && step % cfg.eval_every == 0) {
        row.has_eval = true;
        row.valid_auc = run_eval(step);
      }
      result.log.push_back(row);
      if (progress && step % 10 == 0)
        (*progress) << "step " << step << " loss " << batch_loss << std::endl;
    }
  }

  // Final eval unless the last step already ran one.
  if (result.log.empty() || !result.log.back().has_eval) {
    TrainLogRow row;
    row.step = step;
    row.loss = result.log.empty() ? 0.0 : result.log.back().loss;
    row.has_eval = true;
    row.valid_auc = run_eval(step);
    result.log.push_back(row);
  }
  result.steps = step;

  // Leave the model at its best-valid-AUC parameters.
  for (int p = 0; p < ps.count(); ++p) ps.value(p) = best_values[p];
  return result;
}

}  // namespace tga
