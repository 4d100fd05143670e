#pragma once

// Dense double-precision tensors with a tape-based reverse-mode
// differentiation engine.
//
// A Record installed on the current thread captures every operation whose
// inputs require gradients. Without an active record the same operations run
// in inference mode and build no graph. Tensors are shared handles: copying a
// Tensor aliases the same storage; use clone() for a deep copy.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vsrn/errors.hpp"

namespace vsrn {

using Shape = std::vector<std::size_t>;

inline std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

class Record;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::uint64_t record_id = 0;
  std::size_t op_index = 0;
};

inline Record*& active_record() {
  thread_local Record* current = nullptr;
  return current;
}

inline std::uint64_t next_record_id() {
  thread_local std::uint64_t counter = 0;
  // Thread id bits keep ids unique across threads.
  static std::atomic<std::uint64_t> thread_counter{0};
  thread_local std::uint64_t thread_tag = ++thread_counter;
  return (thread_tag << 40) | ++counter;
}

inline void check_finite(std::span<const double> values, const char* op) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + ": non-finite value produced");
    }
  }
}

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false) {
    for (std::size_t d : shape) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
    }
    if (element_count(shape) != values.size()) {
      throw ShapeError("shape " + to_string(shape) + " does not match " +
                       std::to_string(values.size()) + " values");
    }
    detail::check_finite(values, "Tensor::from");
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    if (requires_grad) node->grad.assign(node->value.size(), 0.0);
    return Tensor(std::move(node));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = element_count(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor scalar(double v) { return from({}, {v}); }

  // Learnable leaf: requires_grad with a zeroed gradient buffer.
  static Tensor parameter(Shape shape, std::vector<double> values) {
    return from(std::move(shape), std::move(values), true);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->record_id == 0; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }

  double item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
    return node_->value[0];
  }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const {
    return node_->value[r * node_->shape.at(1) + c];
  }

  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  Tensor clone() const {
    return from(node_->shape, node_->value, node_->requires_grad);
  }

  // Same values, no gradient tracking.
  Tensor detach() const { return from(node_->shape, node_->value, false); }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_op_list(Shape, std::vector<double>, const std::vector<Tensor>&,
                             std::function<void(std::span<const double>)>, const char*);

  std::shared_ptr<detail::Node> node_;
};

// Ordered list of executed operations; replayed in reverse by backward().
class Record {
 public:
  Record() : id_(detail::next_record_id()), previous_(detail::active_record()) {
    detail::active_record() = this;
  }
  ~Record() { detail::active_record() = previous_; }
  Record(const Record&) = delete;
  Record& operator=(const Record&) = delete;

  std::uint64_t id() const { return id_; }
  std::size_t size() const { return ops_.size(); }
  bool replayed() const { return replayed_; }

 private:
  friend Tensor make_op_list(Shape, std::vector<double>, const std::vector<Tensor>&,
                             std::function<void(std::span<const double>)>, const char*);
  friend void backward(const Tensor& loss, Record& record);

  struct Op {
    std::shared_ptr<detail::Node> output;
    std::function<void(std::span<const double>)> backward;
  };

  std::uint64_t id_;
  Record* previous_;
  std::vector<Op> ops_;
  bool replayed_ = false;
};

// Disables recording on this thread for its lifetime.
class NoRecord {
 public:
  NoRecord() : previous_(detail::active_record()) { detail::active_record() = nullptr; }
  ~NoRecord() { detail::active_record() = previous_; }
  NoRecord(const NoRecord&) = delete;
  NoRecord& operator=(const NoRecord&) = delete;

 private:
  Record* previous_;
};

inline Tensor make_op_list(Shape shape, std::vector<double> values,
                           const std::vector<Tensor>& inputs,
                           std::function<void(std::span<const double>)> backward_fn,
                           const char* op_name) {
  detail::check_finite(values, op_name);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  Record* record = detail::active_record();
  const bool tracked =
      record != nullptr &&
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (tracked) {
    node->requires_grad = true;
    node->grad.assign(node->value.size(), 0.0);
    node->record_id = record->id_;
    node->op_index = record->ops_.size();
    record->ops_.push_back({node, std::move(backward_fn)});
  }
  return Tensor(std::move(node));
}

inline Tensor make_op_result(Shape shape, std::vector<double> values,
                             std::initializer_list<Tensor> inputs,
                             std::function<void(std::span<const double>)> backward_fn,
                             const char* op_name) {
  return make_op_list(std::move(shape), std::move(values), std::vector<Tensor>(inputs),
                      std::move(backward_fn), op_name);
}

template <class F>
Tensor make_op(Shape shape, std::vector<double> values, std::initializer_list<Tensor> inputs,
               F&& backward_fn, const char* op_name) {
  return make_op_result(std::move(shape), std::move(values), inputs,
                        std::function<void(std::span<const double>)>(std::forward<F>(backward_fn)),
                        op_name);
}

// Reverse-mode sweep. Gradients accumulate into every requires_grad tensor
// reachable from `loss`; callers clear parameter gradients between steps.
inline void backward(const Tensor& loss, Record& record) {
  if (loss.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + to_string(loss.shape()));
  }
  const auto& node = loss.node();
  if (node->record_id == 0) {
    // Constant loss or a bare parameter: nothing to replay.
    if (node->requires_grad) node->grad[0] += 1.0;
    return;
  }
  if (node->record_id != record.id_) {
    throw ProvenanceError("backward: loss was not produced by this record");
  }
  if (record.replayed_) {
    throw ProvenanceError("backward: record has already been replayed");
  }
  record.replayed_ = true;
  node->grad[0] += 1.0;
  for (std::size_t i = node->op_index + 1; i-- > 0;) {
    auto& op = record.ops_[i];
    op.backward(op.output->grad);
  }
}

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

namespace detail {

// Tensor handles are shallow: gradients land in the shared node.
inline void accumulate(const Tensor& t, std::span<const double> g) {
  if (!t.requires_grad()) return;
  auto& dst = t.node()->grad;
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

// C[m x p] += A[m x n] * B[n x p], all row-major.
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t p, const double* a, const double* b,
                    double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * p;
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      const double* brow = b + k * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
}

// C[m x p] += A[m x n] * B^T where B is [p x n].
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t p, const double* a, const double* b,
                    double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      const double* arow = a + i * n;
      const double* brow = b + j * n;
      for (std::size_t k = 0; k < n; ++k) acc += arow[k] * brow[k];
      c[i * p + j] += acc;
    }
  }
}

// C[n x p] += A^T * B where A is [m x n] and B is [m x p].
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t p, const double* a, const double* b,
                    double* c) {
  for (std::size_t k = 0; k < m; ++k) {
    const double* arow = a + k * n;
    const double* brow = b + k * p;
    for (std::size_t i = 0; i < n; ++i) {
      const double aki = arow[i];
      double* crow = c + i * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aki * brow[j];
    }
  }
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// Matrix product. Rank-1 operands are treated as a row vector on the left or
// a column vector on the right; the result drops the corresponding dimension.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 1 || a.rank() > 2 || b.rank() < 1 || b.rank() > 2) {
    throw ShapeError("matmul: operands must be rank 1 or 2, got " + to_string(a.shape()) +
                     " and " + to_string(b.shape()));
  }
  const std::size_t m = a.rank() == 2 ? a.dim(0) : 1;
  const std::size_t n = a.rank() == 2 ? a.dim(1) : a.dim(0);
  const std::size_t nb = b.dim(0);
  const std::size_t p = b.rank() == 2 ? b.dim(1) : 1;
  if (n != nb) {
    throw ShapeError("matmul: inner dimensions differ for " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
  }
  Shape out_shape;
  if (a.rank() == 2) out_shape.push_back(m);
  if (b.rank() == 2) out_shape.push_back(p);
  std::vector<double> out(m * p, 0.0);
  detail::gemm_nn(m, n, p, a.values().data(), b.values().data(), out.data());
  return make_op(
      std::move(out_shape), std::move(out), {a, b},
      [a, b, m, n, p](std::span<const double> g) {
        if (a.requires_grad()) {
          std::vector<double> da(m * n, 0.0);
          detail::gemm_nt(m, p, n, g.data(), b.values().data(), da.data());
          detail::accumulate(a, da);
        }
        if (b.requires_grad()) {
          std::vector<double> db(n * p, 0.0);
          detail::gemm_tn(m, n, p, a.values().data(), g.data(), db.data());
          detail::accumulate(b, db);
        }
      },
      "matmul");
}

inline Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose: expected rank 2, got " + to_string(a.shape()));
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  const auto v = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = v[i * c + j];
  return make_op(
      {c, r}, std::move(out), {a},
      [a, r, c](std::span<const double> g) {
        std::vector<double> da(r * c);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) da[i * c + j] = g[j * r + i];
        detail::accumulate(a, da);
      },
      "transpose");
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_op(
      a.shape(), std::move(out), {a, b},
      [a, b](std::span<const double> g) {
        detail::accumulate(a, g);
        detail::accumulate(b, g);
      },
      "add");
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_op(
      a.shape(), std::move(out), {a, b},
      [a, b](std::span<const double> g) {
        detail::accumulate(a, g);
        if (b.requires_grad()) {
          std::vector<double> neg(g.begin(), g.end());
          for (double& x : neg) x = -x;
          detail::accumulate(b, neg);
        }
      },
      "sub");
}

// Elementwise (Hadamard) product.
inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_op(
      a.shape(), std::move(out), {a, b},
      [a, b](std::span<const double> g) {
        if (a.requires_grad()) {
          std::vector<double> da(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * b[i];
          detail::accumulate(a, da);
        }
        if (b.requires_grad()) {
          std::vector<double> db(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) db[i] = g[i] * a[i];
          detail::accumulate(b, db);
        }
      },
      "mul");
}

// 1 - a, elementwise.
inline Tensor one_minus(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - a[i];
  return make_op(
      a.shape(), std::move(out), {a},
      [a](std::span<const double> g) {
        std::vector<double> da(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) da[i] = -g[i];
        detail::accumulate(a, da);
      },
      "one_minus");
}

inline Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  return make_op(
      a.shape(), std::move(out), {a},
      [a, factor](std::span<const double> g) {
        std::vector<double> da(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * factor;
        detail::accumulate(a, da);
      },
      "scale");
}

// Adds a rank-1 bias to a vector or to every row of a matrix.
inline Tensor add_bias(const Tensor& a, const Tensor& bias) {
  if (bias.rank() != 1 || a.rank() < 1 || a.rank() > 2 || a.shape().back() != bias.dim(0)) {
    throw ShapeError("add_bias: cannot add bias " + to_string(bias.shape()) + " to " +
                     to_string(a.shape()));
  }
  const std::size_t cols = bias.dim(0);
  const std::size_t rows = a.size() / cols;
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = a[r * cols + c] + bias[c];
  return make_op(
      a.shape(), std::move(out), {a, bias},
      [a, bias, rows, cols](std::span<const double> g) {
        detail::accumulate(a, g);
        if (bias.requires_grad()) {
          std::vector<double> db(cols, 0.0);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) db[c] += g[r * cols + c];
          detail::accumulate(bias, db);
        }
      },
      "add_bias");
}

enum class Activation { sigmoid, tanh };

inline Tensor activation(const Tensor& x, Activation kind) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = kind == Activation::sigmoid ? detail::stable_sigmoid(x[i]) : std::tanh(x[i]);
  }
  std::vector<double> y = out;
  return make_op(
      x.shape(), std::move(out), {x},
      [x, kind, y = std::move(y)](std::span<const double> g) {
        std::vector<double> dx(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double d = kind == Activation::sigmoid ? y[i] * (1.0 - y[i]) : 1.0 - y[i] * y[i];
          dx[i] = g[i] * d;
        }
        detail::accumulate(x, dx);
      },
      kind == Activation::sigmoid ? "sigmoid" : "tanh");
}

inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::sigmoid); }
inline Tensor tanh(const Tensor& x) { return activation(x, Activation::tanh); }

// [x]_+ elementwise; the derivative at exactly zero is taken as 0.
inline Tensor hinge(const Tensor& x) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return make_op(
      x.shape(), std::move(out), {x},
      [x](std::span<const double> g) {
        std::vector<double> dx(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] = x[i] > 0.0 ? g[i] : 0.0;
        detail::accumulate(x, dx);
      },
      "hinge");
}

// Per-row softmax; rank-1 inputs are treated as a single row.
inline Tensor row_softmax(const Tensor& a) {
  if (a.rank() < 1 || a.rank() > 2) {
    throw ShapeError("row_softmax: expected rank 1 or 2, got " + to_string(a.shape()));
  }
  const std::size_t cols = a.shape().back();
  const std::size_t rows = a.size() / cols;
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = a.values().data() + r * cols;
    double* o = out.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
  }
  std::vector<double> y = out;
  return make_op(
      a.shape(), std::move(out), {a},
      [a, rows, cols, y = std::move(y)](std::span<const double> g) {
        std::vector<double> da(g.size());
        for (std::size_t r = 0; r < rows; ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * y[r * cols + c];
          for (std::size_t c = 0; c < cols; ++c)
            da[r * cols + c] = y[r * cols + c] * (g[r * cols + c] - dot);
        }
        detail::accumulate(a, da);
      },
      "row_softmax");
}

// Row-wise normalization of a square affinity matrix into a row-stochastic
// matrix (per-row softmax).
inline Tensor row_normalize(const Tensor& r) {
  if (r.rank() != 2 || r.dim(0) != r.dim(1)) {
    throw ShapeError("row_normalize: expected a square matrix, got " + to_string(r.shape()));
  }
  return row_softmax(r);
}

inline Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  const std::size_t n = a.size();
  return make_op(
      {}, {total}, {a},
      [a, n](std::span<const double> g) {
        detail::accumulate(a, std::vector<double>(n, g[0]));
      },
      "sum");
}

inline Tensor dot(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || a.shape() != b.shape()) {
    throw ShapeError("dot: expected equal rank-1 shapes, got " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return make_op(
      {}, {total}, {a, b},
      [a, b](std::span<const double> g) {
        if (a.requires_grad()) {
          std::vector<double> da(a.size());
          for (std::size_t i = 0; i < da.size(); ++i) da[i] = g[0] * b[i];
          detail::accumulate(a, da);
        }
        if (b.requires_grad()) {
          std::vector<double> db(b.size());
          for (std::size_t i = 0; i < db.size(); ++i) db[i] = g[0] * a[i];
          detail::accumulate(b, db);
        }
      },
      "dot");
}

// Row i of a matrix as a rank-1 tensor.
inline Tensor row(const Tensor& a, std::size_t i) {
  if (a.rank() != 2 || i >= a.dim(0)) {
    throw ShapeError("row: index " + std::to_string(i) + " out of range for " +
                     to_string(a.shape()));
  }
  const std::size_t cols = a.dim(1);
  std::vector<double> out(a.values().begin() + i * cols, a.values().begin() + (i + 1) * cols);
  return make_op(
      {cols}, std::move(out), {a},
      [a, i, cols](std::span<const double> g) {
        if (!a.requires_grad()) return;
        auto& dst = a.node()->grad;
        for (std::size_t c = 0; c < cols; ++c) dst[i * cols + c] += g[c];
      },
      "row");
}

// Single matrix entry as a scalar.
inline Tensor element(const Tensor& a, std::size_t i, std::size_t j) {
  if (a.rank() != 2 || i >= a.dim(0) || j >= a.dim(1)) {
    throw ShapeError("element: index out of range for " + to_string(a.shape()));
  }
  const std::size_t idx = i * a.dim(1) + j;
  return make_op(
      {}, {a[idx]}, {a},
      [a, idx](std::span<const double> g) {
        if (a.requires_grad()) a.node()->grad[idx] += g[0];
      },
      "element");
}

// Stacks equally sized rank-1 tensors into a matrix.
inline Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no rows");
  const Shape& first = rows.front().shape();
  if (first.size() != 1) throw ShapeError("stack_rows: rows must be rank 1");
  const std::size_t cols = first[0];
  std::vector<double> out;
  out.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.shape() != first) {
      throw ShapeError("stack_rows: row shape " + to_string(r.shape()) + " differs from " +
                       to_string(first));
    }
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  return make_op_list(
      {rows.size(), cols}, std::move(out), rows,
      [rows, cols](std::span<const double> g) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
          detail::accumulate(rows[i], g.subspan(i * cols, cols));
        }
      },
      "stack_rows");
}

// Concatenation of two rank-1 tensors.
inline Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1) {
    throw ShapeError("concat: expected rank-1 operands, got " + to_string(a.shape()) + " and " +
                     to_string(b.shape()));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  const std::size_t na = a.size();
  return make_op(
      {a.size() + b.size()}, std::move(out), {a, b},
      [a, b, na](std::span<const double> g) {
        detail::accumulate(a, g.subspan(0, na));
        detail::accumulate(b, g.subspan(na));
      },
      "concat");
}

// -log softmax(logits)[target] for a rank-1 logit vector.
inline Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  if (logits.rank() != 1 || target >= logits.size()) {
    throw ShapeError("cross_entropy: target " + std::to_string(target) +
                     " out of range for logits " + to_string(logits.shape()));
  }
  const auto v = logits.values();
  const double mx = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += std::exp(x - mx);
  const double log_z = mx + std::log(total);
  std::vector<double> probs(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) probs[i] = std::exp(v[i] - log_z);
  return make_op(
      {}, {log_z - v[target]}, {logits},
      [logits, target, probs = std::move(probs)](std::span<const double> g) {
        std::vector<double> d(probs.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[0] * (probs[i] - (i == target ? 1.0 : 0.0));
        detail::accumulate(logits, d);
      },
      "cross_entropy");
}

// x / ||x|| for a rank-1 tensor.
inline Tensor l2_normalize(const Tensor& x) {
  if (x.rank() != 1) throw ShapeError("l2_normalize: expected rank 1, got " + to_string(x.shape()));
  double sq = 0.0;
  for (double v : x.values()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm == 0.0) throw NumericError("l2_normalize: zero vector");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / norm;
  std::vector<double> y = out;
  return make_op(
      x.shape(), std::move(out), {x},
      [x, norm, y = std::move(y)](std::span<const double> g) {
        double gy = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) gy += g[i] * y[i];
        std::vector<double> dx(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] = (g[i] - gy * y[i]) / norm;
        detail::accumulate(x, dx);
      },
      "l2_normalize");
}

}  // namespace vsrn
