#pragma once

// Region embedding and relationship reasoning: a fully connected affinity
// graph over the regions of one image, followed by stacked residual graph
// convolutions.
//
// Row-vector convention throughout: a region is a row of a k x D matrix and
// every weight acts from the right (v * W).

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/rng.hpp"
#include "vsrn/tensor.hpp"

namespace vsrn {

struct Box {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;

  double area() const { return width * height; }
  bool operator==(const Box&) const = default;
};

// Detector output for one image: k feature rows of width F, one box and one
// confidence per region.
struct RegionSet {
  std::size_t feature_dim = 0;
  std::vector<double> features;  // k x F, row-major
  std::vector<Box> boxes;
  std::vector<double> confidences;

  std::size_t size() const { return boxes.size(); }

  void validate() const {
    const std::size_t k = boxes.size();
    if (k == 0) throw InputError("RegionSet: at least one region is required");
    if (feature_dim == 0 || features.size() != k * feature_dim) {
      throw ShapeError("RegionSet: expected " + std::to_string(k) + " x " +
                       std::to_string(feature_dim) + " features, got " +
                       std::to_string(features.size()) + " values");
    }
    if (confidences.size() != k) throw ShapeError("RegionSet: one confidence per region required");
    for (const auto& b : boxes) {
      if (!(b.width > 0.0) || !(b.height > 0.0)) {
        throw InputError("RegionSet: boxes need positive width and height");
      }
    }
    for (double c : confidences) {
      if (!(c >= 0.0 && c <= 1.0)) throw InputError("RegionSet: confidence outside [0,1]");
    }
  }

  Tensor feature_matrix() const {
    return Tensor::from({size(), feature_dim}, features);
  }

  bool operator==(const RegionSet&) const = default;
};

// k x D region vectors in the joint space.
struct EmbeddedRegions {
  Tensor rows;

  std::size_t count() const { return rows.dim(0); }
  std::size_t dim() const { return rows.dim(1); }
};

struct GcnLayerParams {
  Tensor w_phi;  // affinity embedding of the query region
  Tensor w_psi;  // affinity embedding of the neighbour region
  Tensor w_g;    // graph-convolution weight
  Tensor w_res;  // residual-path weight

  std::size_t dim() const { return w_g.dim(0); }

  static GcnLayerParams init(std::size_t dim, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    auto square = [&] {
      std::vector<double> v(dim * dim);
      for (double& x : v) x = rng.uniform(-bound, bound);
      return Tensor::parameter({dim, dim}, std::move(v));
    };
    GcnLayerParams p;
    p.w_phi = square();
    p.w_psi = square();
    p.w_g = square();
    p.w_res = square();
    return p;
  }
};

// v_i = f_i W_f + b_f for every region.
inline EmbeddedRegions embed_regions(const RegionSet& raw, const Tensor& w_f, const Tensor& b_f) {
  if (w_f.rank() != 2 || w_f.dim(0) != raw.feature_dim) {
    throw ShapeError("embed_regions: feature width " + std::to_string(raw.feature_dim) +
                     " does not match W_f " + to_string(w_f.shape()));
  }
  return {add_bias(matmul(raw.feature_matrix(), w_f), b_f)};
}

// R[i][j] = (v_i W_phi) . (v_j W_psi); includes the diagonal.
inline Tensor pairwise_affinity(const EmbeddedRegions& v, const GcnLayerParams& p) {
  return matmul(matmul(v.rows, p.w_phi), transpose(matmul(v.rows, p.w_psi)));
}

// V* = normalize(R) V W_g W_res + V.
inline EmbeddedRegions gcn_layer(const EmbeddedRegions& v, const GcnLayerParams& p) {
  const Tensor affinity = row_normalize(pairwise_affinity(v, p));
  const Tensor aggregated = matmul(matmul(affinity, v.rows), p.w_g);
  return {add(matmul(aggregated, p.w_res), v.rows)};
}

inline EmbeddedRegions relationship_reason(const EmbeddedRegions& v,
                                           const std::vector<GcnLayerParams>& layers) {
  EmbeddedRegions out = v;
  for (const auto& layer : layers) out = gcn_layer(out, layer);
  return out;
}

}  // namespace vsrn
