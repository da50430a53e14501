#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tga/mat.hpp"
#include "tga/rng.hpp"

namespace tga {

class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

/// One gradient slot per registered tensor, same shapes, pre-allocated.
/// Workers accumulate into private buffers which are then reduced in a fixed
/// order so results are deterministic for a fixed worker count.
template <typename T>
struct GradBuffer {
  std::vector<Mat<T>> g;

  void zero() {
    for (auto& m : g) m.fill(T(0));
  }

  void add(const GradBuffer& other) {
    for (size_t i = 0; i < g.size(); ++i) {
      const size_t n = g[i].a.size();
      for (size_t k = 0; k < n; ++k) g[i].a[k] += other.g[i].a[k];
    }
  }

  void scale(T s) {
    for (auto& m : g)
      for (auto& v : m.a) v *= s;
  }
};

/// All learnable tensors by name, with a matching gradient accumulator.
/// Registration order defines the checkpoint manifest order.
template <typename T>
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Mat<T> value;
  };

  explicit ParameterStore(uint64_t seed = 0) : seed_(seed) {}

  int add(const std::string& name, int rows, int cols) {
    if (by_name_.count(name))
      throw std::invalid_argument("duplicate parameter name: " + name);
    const int id = static_cast<int>(entries_.size());
    entries_.push_back(Entry{name, Mat<T>(rows, cols)});
    grads.g.emplace_back(rows, cols);
    by_name_.emplace(name, id);
    return id;
  }

  int add_xavier(const std::string& name, int rows, int cols, Rng& rng) {
    const int id = add(name, rows, cols);
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (auto& v : entries_[id].value.a)
      v = static_cast<T>(rng.uniform(-bound, bound));
    return id;
  }

  int add_zeros(const std::string& name, int rows, int cols) { return add(name, rows, cols); }

  int add_embedding(const std::string& name, int rows, int cols, Rng& rng) {
    const int id = add(name, rows, cols);
    for (auto& v : entries_[id].value.a) v = static_cast<T>(rng.normal(0.0, 0.02));
    return id;
  }

  int find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
  }

  int id(const std::string& name) const {
    const int i = find(name);
    if (i < 0) throw std::invalid_argument("unknown parameter: " + name);
    return i;
  }

  Mat<T>& value(int id) { return entries_[id].value; }
  const Mat<T>& value(int id) const { return entries_[id].value; }
  Mat<T>& grad(int id) { return grads.g[id]; }
  const std::string& name(int id) const { return entries_[id].name; }
  int count() const { return static_cast<int>(entries_.size()); }
  const std::vector<Entry>& entries() const { return entries_; }

  uint64_t seed() const { return seed_; }
  void set_seed(uint64_t s) { seed_ = s; }

  int64_t total_params() const {
    int64_t n = 0;
    for (const auto& e : entries_) n += static_cast<int64_t>(e.value.size());
    return n;
  }

  void zero_grads() { grads.zero(); }

  GradBuffer<T> make_grad_buffer() const {
    GradBuffer<T> gb;
    gb.g.reserve(entries_.size());
    for (const auto& e : entries_) gb.g.emplace_back(e.value.rows, e.value.cols);
    return gb;
  }

  double param_l2_norm() const {
    double s = 0;
    for (const auto& e : entries_)
      for (T v : e.value.a) s += static_cast<double>(v) * v;
    return std::sqrt(s);
  }

  void save(const std::string& path) const;
  /// Loads a checkpoint into an already-registered store. Shapes and names
  /// must match the manifest exactly.
  void load(const std::string& path);

  GradBuffer<T> grads;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> by_name_;
  uint64_t seed_ = 0;
};

}  // namespace tga

#include "tga/params_io.hpp"
