#pragma once

// Hinge triplet ranking with in-batch hardest negatives, and its combination
// with the caption generation loss.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/tensor.hpp"

namespace vsrn {

// Row i of `images` pairs with row i of `captions`.
struct BatchEmbeddings {
  Tensor images;    // B x D
  Tensor captions;  // B x D

  std::size_t size() const { return images.dim(0); }

  void validate() const {
    if (images.rank() != 2 || captions.rank() != 2 || images.shape() != captions.shape()) {
      throw ShapeError("BatchEmbeddings: images " + to_string(images.shape()) + " and captions " +
                       to_string(captions.shape()) + " must be equal B x D matrices");
    }
  }
};

inline Tensor similarity(const Tensor& image, const Tensor& caption) {
  return dot(image, caption);
}

// Indices of the hardest negatives for each positive pair i:
// caption = argmax_{d != i} S(i, d), image = argmax_{j != i} S(j, i).
// Ties go to the lowest index. Undefined (returned as i) when B == 1.
struct HardestNegatives {
  std::vector<std::size_t> caption;
  std::vector<std::size_t> image;
};

inline HardestNegatives hardest_negatives(const Tensor& sim) {
  const std::size_t b = sim.dim(0);
  HardestNegatives out{std::vector<std::size_t>(b), std::vector<std::size_t>(b)};
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t best_c = i, best_i = i;
    for (std::size_t d = 0; d < b; ++d) {
      if (d == i) continue;
      if (best_c == i || sim.at(i, d) > sim.at(i, best_c)) best_c = d;
      if (best_i == i || sim.at(d, i) > sim.at(best_i, i)) best_i = d;
    }
    out.caption[i] = best_c;
    out.image[i] = best_i;
  }
  return out;
}

// Sum over positive pairs of
//   [alpha - S(i,i) + S(i, c_hat)]_+ + [alpha - S(i,i) + S(i_hat, i)]_+
// computed from a square similarity matrix. The negative selection is held
// fixed when differentiating.
inline Tensor hardest_negative_hinge(const Tensor& sim, double alpha) {
  if (sim.rank() != 2 || sim.dim(0) != sim.dim(1)) {
    throw ShapeError("matching_loss: similarity matrix must be square, got " +
                     to_string(sim.shape()));
  }
  if (!(alpha >= 0.0)) throw ParameterError("matching_loss: margin must be non-negative");
  const std::size_t b = sim.dim(0);
  if (b == 1) {
    return make_op({}, {0.0}, {sim}, [](std::span<const double>) {}, "matching_loss");
  }
  const HardestNegatives neg = hardest_negatives(sim);
  // Which hinge terms are positive, per query.
  std::vector<char> caption_active(b, 0), image_active(b, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double pos = sim.at(i, i);
    const double tc = alpha - pos + sim.at(i, neg.caption[i]);
    const double ti = alpha - pos + sim.at(neg.image[i], i);
    if (tc > 0.0) {
      total += tc;
      caption_active[i] = 1;
    }
    if (ti > 0.0) {
      total += ti;
      image_active[i] = 1;
    }
  }
  return make_op(
      {}, {total}, {sim},
      [sim, b, neg, caption_active, image_active](std::span<const double> g) {
        if (!sim.requires_grad()) return;
        auto& ds = sim.node()->grad;
        for (std::size_t i = 0; i < b; ++i) {
          if (caption_active[i]) {
            ds[i * b + i] -= g[0];
            ds[i * b + neg.caption[i]] += g[0];
          }
          if (image_active[i]) {
            ds[i * b + i] -= g[0];
            ds[neg.image[i] * b + i] += g[0];
          }
        }
      },
      "matching_loss");
}

inline Tensor matching_loss(const BatchEmbeddings& batch, double alpha) {
  batch.validate();
  return hardest_negative_hinge(matmul(batch.images, transpose(batch.captions)), alpha);
}

struct LossBreakdown {
  double matching = 0.0;    // L_M
  double generation = 0.0;  // L_G
  double total = 0.0;       // L = L_M + L_G
};

inline LossBreakdown joint_loss(double l_m, double l_g) {
  if (!std::isfinite(l_m) || !std::isfinite(l_g) || l_m < 0.0 || l_g < 0.0) {
    throw ContractError("joint_loss: components must be finite and non-negative (got " +
                        std::to_string(l_m) + ", " + std::to_string(l_g) + ")");
  }
  return {l_m, l_g, l_m + l_g};
}

struct JointLoss {
  Tensor total;
  LossBreakdown breakdown;
};

inline JointLoss joint_loss(const Tensor& l_m, const Tensor& l_g) {
  LossBreakdown parts = joint_loss(l_m.item(), l_g.item());
  Tensor total = add(l_m, l_g);
  parts.total = total.item();
  return {std::move(total), parts};
}

}  // namespace vsrn
