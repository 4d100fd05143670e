#pragma once

// Mini-batch training with hardest-negative matching plus generation loss,
// a two-stage learning-rate schedule and snapshot selection by validation
// rsum.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/harness/checkpoint.hpp"
#include "vsrn/harness/config.hpp"
#include "vsrn/harness/corpus.hpp"
#include "vsrn/harness/model.hpp"
#include "vsrn/harness/optim.hpp"
#include "vsrn/objectives.hpp"
#include "vsrn/retrieval.hpp"
#include "vsrn/rng.hpp"
#include "vsrn/tensor.hpp"

namespace vsrn {

struct SplitEmbeddings {
  std::vector<std::size_t> items;
  std::vector<Tensor> images;
  std::vector<Tensor> captions;
};

inline SplitEmbeddings embed_items(const VsrnModel& model, const TrainConfig& config,
                                   const SyntheticCorpus& corpus,
                                   const std::vector<std::size_t>& items) {
  NoRecord inference;
  SplitEmbeddings out;
  out.items = items;
  for (std::size_t idx : items) {
    const auto& item = corpus.items.at(idx);
    out.images.push_back(forward_image(model, item.regions, ordering_for(config, idx),
                                       config.normalize_embeddings)
                             .image);
    out.captions.push_back(forward_caption(model, item.caption, config.normalize_embeddings));
  }
  return out;
}

inline SimilarityMatrix split_similarity(const VsrnModel& model, const TrainConfig& config,
                                         const SyntheticCorpus& corpus, Split split) {
  const auto items = corpus.indices(split);
  if (items.empty()) throw InputError("split has no items");
  const auto emb = embed_items(model, config, corpus, items);
  return similarity_matrix(emb.images, emb.captions, 1);
}

inline RetrievalReport evaluate_split(const VsrnModel& model, const TrainConfig& config,
                                      const SyntheticCorpus& corpus, Split split) {
  return evaluate(split_similarity(model, config, corpus, split));
}

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double matching_loss = 0.0;    // mean over batches
  double generation_loss = 0.0;  // mean over batches
  double val_rsum = 0.0;
};

struct TrainResult {
  Checkpoint best;
  std::size_t best_epoch = 0;
  std::vector<EpochLog> log;
  VsrnModel final_model;
};

struct TrainHooks {
  // Called after every epoch; returning false stops training.
  std::function<bool(const EpochLog&, const VsrnModel&)> on_epoch;
  // Replaces the freshly initialized model when set.
  const VsrnModel* initial_model = nullptr;
};

struct BatchResult {
  LossBreakdown loss;
  double grad_norm = 0.0;
};

// Joint loss of the model on the given corpus items. Builds a graph when a
// Record is active.
inline JointLoss batch_loss(const VsrnModel& model, const TrainConfig& config,
                            const SyntheticCorpus& corpus, const std::vector<std::size_t>& batch) {
  std::vector<Tensor> images, captions;
  Tensor generation;
  for (std::size_t idx : batch) {
    const auto& item = corpus.items.at(idx);
    ImageForward f = forward_image(model, item.regions, ordering_for(config, idx),
                                   config.normalize_embeddings);
    images.push_back(f.image);
    captions.push_back(forward_caption(model, item.caption, config.normalize_embeddings));
    if (config.use_generation_loss) {
      Tensor lg = generation_loss(f.v_star, item.caption, model.text);
      generation = generation.defined() ? add(generation, lg) : lg;
    }
  }
  const Tensor l_m = matching_loss({stack_rows(images), stack_rows(captions)}, config.margin);
  const Tensor l_g = config.use_generation_loss
                         ? scale(generation, 1.0 / static_cast<double>(batch.size()))
                         : Tensor::scalar(0.0);
  return joint_loss(l_m, l_g);
}

// One optimizer step on the given corpus items.
inline BatchResult train_batch(VsrnModel& model, const TrainConfig& config,
                               const SyntheticCorpus& corpus, const std::vector<std::size_t>& batch,
                               Adam& optimizer, double lr) {
  model.zero_grad();
  Record record;
  JointLoss joint = batch_loss(model, config, corpus, batch);
  backward(joint.total, record);
  auto params = model.parameters();
  BatchResult out{joint.breakdown, clip_grad_norm(params, config.grad_clip)};
  optimizer.step(lr);
  return out;
}

inline TrainResult train(const TrainConfig& config, const SyntheticCorpus& corpus,
                         const TrainHooks& hooks = {}) {
  config.validate();
  const auto train_items = corpus.indices(Split::train);
  const auto val_items = corpus.indices(Split::val);
  if (train_items.empty() || val_items.empty()) {
    throw InputError("train: corpus needs non-empty train and val splits");
  }
  if (config.feature_dim != 0 && config.feature_dim != corpus.feature_dim()) {
    throw ShapeError("train: config feature_dim " + std::to_string(config.feature_dim) +
                     " differs from corpus feature width " + std::to_string(corpus.feature_dim()));
  }
  TrainConfig cfg = config;
  cfg.feature_dim = corpus.feature_dim();

  TrainResult result;
  result.final_model =
      hooks.initial_model
          ? hooks.initial_model->clone()
          : VsrnModel::init(model_shape(cfg, cfg.feature_dim, corpus.vocab.size()), cfg.seed);
  VsrnModel& model = result.final_model;
  Adam optimizer(model.parameters());
  Rng shuffler(mix_seed(cfg.seed, 0x5EED));
  double best_rsum = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = cfg.learning_rate(epoch);
    auto order = train_items;
    shuffler.shuffle(order);
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
      BatchResult br;
      try {
        br = train_batch(model, cfg, corpus, batch, optimizer, entry.lr);
      } catch (const NumericError& e) {
        throw TrainingError("non-finite value in epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches) + ": " + e.what());
      } catch (const ContractError& e) {
        throw TrainingError("invalid loss in epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches) + ": " + e.what());
      }
      entry.matching_loss += br.loss.matching;
      entry.generation_loss += br.loss.generation;
      ++batches;
    }
    entry.matching_loss /= static_cast<double>(batches);
    entry.generation_loss /= static_cast<double>(batches);
    entry.val_rsum = evaluate_split(model, cfg, corpus, Split::val).rsum;
    result.log.push_back(entry);
    if (entry.val_rsum > best_rsum) {
      best_rsum = entry.val_rsum;
      result.best_epoch = epoch;
      result.best = snapshot(model, cfg, static_cast<std::uint32_t>(epoch), entry.val_rsum);
    }
    if (hooks.on_epoch && !hooks.on_epoch(entry, model)) break;
  }
  return result;
}

}  // namespace vsrn
