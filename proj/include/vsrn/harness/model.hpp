#pragma once

// Full parameter set and the two embedding paths (image and caption).

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/global_reasoning.hpp"
#include "vsrn/harness/config.hpp"
#include "vsrn/region_reasoning.hpp"
#include "vsrn/rng.hpp"
#include "vsrn/tensor.hpp"
#include "vsrn/text_pipeline.hpp"

namespace vsrn {

struct ModelShape {
  std::size_t feature_dim = 0;
  std::size_t joint_dim = 32;
  std::size_t word_dim = 300;
  std::size_t vocab_size = 4;
  std::size_t rrr_layers = 4;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct VsrnModel {
  Tensor w_f;  // F x D
  Tensor b_f;  // D
  std::vector<GcnLayerParams> rrr;
  GruCellParams gsr;
  TextEncoderParams text;

  static VsrnModel init(const ModelShape& shape, std::uint64_t seed) {
    if (shape.feature_dim == 0 || shape.joint_dim == 0 || shape.word_dim == 0 ||
        shape.vocab_size < 4) {
      throw ParameterError("VsrnModel: invalid model shape");
    }
    Rng rng(seed);
    VsrnModel m;
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape.feature_dim));
    std::vector<double> wf(shape.feature_dim * shape.joint_dim);
    for (double& x : wf) x = rng.uniform(-bound, bound);
    m.w_f = Tensor::parameter({shape.feature_dim, shape.joint_dim}, std::move(wf));
    m.b_f = Tensor::zeros({shape.joint_dim}, true);
    for (std::size_t i = 0; i < shape.rrr_layers; ++i) {
      m.rrr.push_back(GcnLayerParams::init(shape.joint_dim, rng));
    }
    m.gsr = GruCellParams::init(shape.joint_dim, shape.joint_dim, rng);
    m.text = TextEncoderParams::init(shape.vocab_size, shape.word_dim, shape.joint_dim, rng);
    return m;
  }

  ModelShape shape() const {
    return {w_f.dim(0), w_f.dim(1), text.word_dim(), text.vocab_size(), rrr.size()};
  }

  // Stable, unique names; the order defines checkpoint layout.
  std::vector<NamedTensor> named_parameters() const {
    std::vector<NamedTensor> out{{"image.w_f", w_f}, {"image.b_f", b_f}};
    for (std::size_t i = 0; i < rrr.size(); ++i) {
      const std::string p = "rrr." + std::to_string(i) + ".";
      out.push_back({p + "w_phi", rrr[i].w_phi});
      out.push_back({p + "w_psi", rrr[i].w_psi});
      out.push_back({p + "w_g", rrr[i].w_g});
      out.push_back({p + "w_res", rrr[i].w_res});
    }
    auto add_cell = [&out](const std::string& p, const GruCellParams& c) {
      static const char* const kNames[] = {"w_z", "u_z", "b_z", "w_m", "u_m",
                                           "b_m", "w_r", "u_r", "b_r"};
      const auto ts = c.tensors();
      for (std::size_t i = 0; i < ts.size(); ++i) out.push_back({p + kNames[i], ts[i]});
    };
    add_cell("gsr.", gsr);
    out.push_back({"text.embedding", text.embedding});
    add_cell("text.encoder.", text.encoder);
    add_cell("text.decoder.", text.decoder);
    out.push_back({"text.w_out", text.w_out});
    out.push_back({"text.b_out", text.b_out});
    return out;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    for (auto& nt : named_parameters()) out.push_back(nt.tensor);
    return out;
  }

  // Decoder-only parameters, which receive no gradient without the
  // generation objective.
  std::vector<Tensor> decoder_parameters() const {
    auto out = text.decoder.tensors();
    out.push_back(text.w_out);
    out.push_back(text.b_out);
    return out;
  }

  void zero_grad() const {
    for (auto t : parameters()) t.zero_grad();
  }

  // Deep copy with independent storage.
  VsrnModel clone() const {
    VsrnModel m = *this;
    m.w_f = w_f.clone();
    m.b_f = b_f.clone();
    for (auto& layer : m.rrr) {
      layer.w_phi = layer.w_phi.clone();
      layer.w_psi = layer.w_psi.clone();
      layer.w_g = layer.w_g.clone();
      layer.w_res = layer.w_res.clone();
    }
    auto clone_cell = [](GruCellParams& c) {
      for (Tensor* t : {&c.w_z, &c.u_z, &c.b_z, &c.w_m, &c.u_m, &c.b_m, &c.w_r, &c.u_r, &c.b_r}) {
        *t = t->clone();
      }
    };
    clone_cell(m.gsr);
    clone_cell(m.text.encoder);
    clone_cell(m.text.decoder);
    m.text.embedding = text.embedding.clone();
    m.text.w_out = text.w_out.clone();
    m.text.b_out = text.b_out.clone();
    return m;
  }
};

inline ModelShape model_shape(const TrainConfig& config, std::size_t feature_dim,
                              std::size_t vocab_size) {
  return {feature_dim, config.joint_dim, config.word_dim, vocab_size, config.rrr_layers};
}

// Region ordering for corpus item `item_index`; random orderings are seeded
// per item so training and evaluation see the same sequence.
inline OrderingStrategy ordering_for(const TrainConfig& config, std::size_t item_index) {
  return {config.ordering, mix_seed(config.seed, 0x0DE5 + item_index)};
}

struct ImageForward {
  EmbeddedRegions v_star;
  Tensor image;
};

inline ImageForward forward_image(const VsrnModel& model, const RegionSet& regions,
                                  const OrderingStrategy& ordering, bool normalize) {
  const EmbeddedRegions v = embed_regions(regions, model.w_f, model.b_f);
  ImageForward out;
  out.v_star = relationship_reason(v, model.rrr);
  out.image = global_semantic_reason(out.v_star, order_regions(regions, ordering), model.gsr);
  if (normalize) out.image = l2_normalize(out.image);
  return out;
}

inline Tensor forward_caption(const VsrnModel& model, const TokenSequence& caption,
                              bool normalize) {
  Tensor c = encode_caption(caption, model.text);
  return normalize ? l2_normalize(c) : c;
}

}  // namespace vsrn
