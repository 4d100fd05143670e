#pragma once

// Gated recurrent reasoning over an ordered sequence of region vectors. The
// final memory is the whole-image representation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/region_reasoning.hpp"
#include "vsrn/rng.hpp"
#include "vsrn/tensor.hpp"

namespace vsrn {

// Gate weights for one recurrent cell. Input maps are in_dim x D, recurrent
// maps D x D, biases length D.
struct GruCellParams {
  Tensor w_z, u_z, b_z;  // update gate
  Tensor w_m, u_m, b_m;  // candidate memory
  Tensor w_r, u_r, b_r;  // reset gate

  std::size_t input_dim() const { return w_z.dim(0); }
  std::size_t state_dim() const { return u_z.dim(0); }

  static GruCellParams init(std::size_t input_dim, std::size_t state_dim, Rng& rng) {
    auto matrix = [&](std::size_t rows) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
      std::vector<double> v(rows * state_dim);
      for (double& x : v) x = rng.uniform(-bound, bound);
      return Tensor::parameter({rows, state_dim}, std::move(v));
    };
    auto bias = [&] { return Tensor::zeros({state_dim}, true); };
    GruCellParams p;
    p.w_z = matrix(input_dim);
    p.u_z = matrix(state_dim);
    p.b_z = bias();
    p.w_m = matrix(input_dim);
    p.u_m = matrix(state_dim);
    p.b_m = bias();
    p.w_r = matrix(input_dim);
    p.u_r = matrix(state_dim);
    p.b_r = bias();
    return p;
  }

  std::vector<Tensor> tensors() const { return {w_z, u_z, b_z, w_m, u_m, b_m, w_r, u_r, b_r}; }

  void validate() const {
    const std::size_t in = input_dim(), d = state_dim();
    for (const Tensor* t : {&w_z, &w_m, &w_r}) {
      if (t->shape() != Shape{in, d}) throw ShapeError("GruCellParams: inconsistent input maps");
    }
    for (const Tensor* t : {&u_z, &u_m, &u_r}) {
      if (t->shape() != Shape{d, d}) throw ShapeError("GruCellParams: inconsistent recurrent maps");
    }
    for (const Tensor* t : {&b_z, &b_m, &b_r}) {
      if (t->shape() != Shape{d}) throw ShapeError("GruCellParams: inconsistent biases");
    }
  }
};

struct MemoryState {
  Tensor m;
  std::size_t step = 0;

  static MemoryState zero(std::size_t dim) { return {Tensor::zeros({dim}), 0}; }
};

struct GruCellOutput {
  Tensor memory;
  Tensor update_gate;
  Tensor reset_gate;
  Tensor candidate;
};

inline GruCellOutput gru_cell(const Tensor& x, const Tensor& m, const GruCellParams& p) {
  if (x.rank() != 1 || x.dim(0) != p.input_dim() || m.rank() != 1 ||
      m.dim(0) != p.state_dim()) {
    throw ShapeError("gru_step: input " + to_string(x.shape()) + " / memory " +
                     to_string(m.shape()) + " do not fit a cell of input " +
                     std::to_string(p.input_dim()) + " and state " +
                     std::to_string(p.state_dim()));
  }
  GruCellOutput out;
  out.update_gate = sigmoid(add_bias(add(matmul(x, p.w_z), matmul(m, p.u_z)), p.b_z));
  out.reset_gate = sigmoid(add_bias(add(matmul(x, p.w_r), matmul(m, p.u_r)), p.b_r));
  out.candidate =
      tanh(add_bias(add(matmul(x, p.w_m), matmul(mul(out.reset_gate, m), p.u_m)), p.b_m));
  out.memory = add(mul(one_minus(out.update_gate), m), mul(out.update_gate, out.candidate));
  return out;
}

inline MemoryState gru_step(const Tensor& v_star, const MemoryState& prev, const GruCellParams& p) {
  return {gru_cell(v_star, prev.m, p).memory, prev.step + 1};
}

inline void validate_permutation(const std::vector<std::size_t>& order, std::size_t k) {
  if (order.size() != k) {
    throw OrderingError("ordering has " + std::to_string(order.size()) + " entries for " +
                        std::to_string(k) + " regions");
  }
  std::vector<bool> seen(k, false);
  for (std::size_t idx : order) {
    if (idx >= k || seen[idx]) throw OrderingError("ordering is not a permutation of the regions");
    seen[idx] = true;
  }
}

// Runs the cell over the rows of `v_star` in `order` from a zero memory and
// returns the final memory.
inline Tensor global_semantic_reason(const EmbeddedRegions& v_star,
                                     const std::vector<std::size_t>& order,
                                     const GruCellParams& p) {
  const std::size_t k = v_star.count();
  if (k == 0) throw InputError("global_semantic_reason: no regions");
  validate_permutation(order, k);
  MemoryState state = MemoryState::zero(p.state_dim());
  for (std::size_t idx : order) state = gru_step(row(v_star.rows, idx), state, p);
  return state.m;
}

enum class OrderingKind { confidence, bbox_size, random };

struct OrderingStrategy {
  OrderingKind kind = OrderingKind::confidence;
  std::uint64_t seed = 0;  // used by OrderingKind::random only
};

inline std::vector<std::size_t> order_regions(const RegionSet& regions,
                                              const OrderingStrategy& strategy) {
  const std::size_t k = regions.size();
  if (k == 0) throw InputError("order_regions: no regions");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  switch (strategy.kind) {
    case OrderingKind::confidence:
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return regions.confidences[a] > regions.confidences[b];
      });
      break;
    case OrderingKind::bbox_size:
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return regions.boxes[a].area() > regions.boxes[b].area();
      });
      break;
    case OrderingKind::random: {
      Rng rng(strategy.seed);
      rng.shuffle(order);
      break;
    }
  }
  return order;
}

inline std::string to_string(OrderingKind kind) {
  switch (kind) {
    case OrderingKind::confidence: return "confidence";
    case OrderingKind::bbox_size: return "bbox_size";
    case OrderingKind::random: return "random";
  }
  return "unknown";
}

inline OrderingKind parse_ordering(const std::string& name) {
  if (name == "confidence") return OrderingKind::confidence;
  if (name == "bbox_size" || name == "bboxsize") return OrderingKind::bbox_size;
  if (name == "random") return OrderingKind::random;
  throw ParameterError("unknown region ordering '" + name + "'");
}

}  // namespace vsrn
