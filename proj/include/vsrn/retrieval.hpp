#pragma once

// Bidirectional Recall@K over an image x caption similarity matrix, fold
// averaging, score-averaging ensembles and the tab-separated report format.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/tensor.hpp"

namespace vsrn {

// Caption j belongs to image j / captions_per_image.
struct SimilarityMatrix {
  std::size_t n_images = 0;
  std::size_t n_captions = 0;
  std::size_t captions_per_image = 1;
  std::vector<double> s;  // n_images x n_captions, row-major

  double at(std::size_t image, std::size_t caption) const { return s[image * n_captions + caption]; }

  void validate() const {
    if (n_images == 0 || captions_per_image == 0 ||
        n_captions != n_images * captions_per_image || s.size() != n_images * n_captions) {
      throw ShapeError("SimilarityMatrix: inconsistent dimensions " + std::to_string(n_images) +
                       " x " + std::to_string(n_captions) + " with " +
                       std::to_string(captions_per_image) + " captions per image");
    }
    for (double v : s) {
      if (!std::isfinite(v)) throw NumericError("SimilarityMatrix: non-finite score");
    }
  }

  bool operator==(const SimilarityMatrix&) const = default;
};

inline SimilarityMatrix similarity_matrix(const std::vector<Tensor>& images,
                                          const std::vector<Tensor>& captions,
                                          std::size_t captions_per_image = 1) {
  if (images.empty() || captions.empty()) throw ShapeError("similarity_matrix: empty input");
  const std::size_t d = images.front().size();
  for (const auto* list : {&images, &captions}) {
    for (const auto& t : *list) {
      if (t.rank() != 1 || t.size() != d) {
        throw ShapeError("similarity_matrix: embedding " + to_string(t.shape()) +
                         " differs from width " + std::to_string(d));
      }
    }
  }
  SimilarityMatrix sim{images.size(), captions.size(), captions_per_image, {}};
  sim.s.resize(sim.n_images * sim.n_captions);
  for (std::size_t i = 0; i < sim.n_images; ++i) {
    const auto a = images[i].values();
    for (std::size_t j = 0; j < sim.n_captions; ++j) {
      const auto b = captions[j].values();
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += a[k] * b[k];
      sim.s[i * sim.n_captions + j] = acc;
    }
  }
  sim.validate();
  return sim;
}

enum class Direction { caption_retrieval, image_retrieval };

namespace detail {

// 0-based position of `target` when `scores` is sorted by descending value
// with ties broken by ascending index.
template <class ScoreAt>
std::size_t rank_of(std::size_t target, std::size_t n, ScoreAt score_at) {
  const double t = score_at(target);
  std::size_t rank = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = score_at(j);
    if (v > t || (v == t && j < target)) ++rank;
  }
  return rank;
}

}  // namespace detail

inline double recall_at_k(const SimilarityMatrix& sim, std::size_t k, Direction direction) {
  sim.validate();
  const std::size_t candidates =
      direction == Direction::caption_retrieval ? sim.n_captions : sim.n_images;
  if (k == 0 || k > candidates) {
    throw ParameterError("recall_at_k: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(candidates) + "]");
  }
  std::size_t hits = 0;
  if (direction == Direction::caption_retrieval) {
    for (std::size_t i = 0; i < sim.n_images; ++i) {
      auto score = [&](std::size_t j) { return sim.at(i, j); };
      std::size_t best = candidates;
      for (std::size_t c = 0; c < sim.captions_per_image; ++c) {
        best = std::min(best, detail::rank_of(i * sim.captions_per_image + c, candidates, score));
      }
      if (best < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(sim.n_images);
  }
  for (std::size_t j = 0; j < sim.n_captions; ++j) {
    auto score = [&](std::size_t i) { return sim.at(i, j); };
    if (detail::rank_of(j / sim.captions_per_image, candidates, score) < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(sim.n_captions);
}

struct RetrievalReport {
  std::array<double, 3> caption_retrieval{};  // R@1, R@5, R@10
  std::array<double, 3> image_retrieval{};
  double rsum = 0.0;

  void update_rsum() {
    rsum = 0.0;
    for (double v : caption_retrieval) rsum += v;
    for (double v : image_retrieval) rsum += v;
  }

  bool operator==(const RetrievalReport&) const = default;
};

inline constexpr std::array<std::size_t, 3> kRecallCutoffs{1, 5, 10};

// Full report. Cutoffs beyond the candidate count are clamped to it, where
// recall is 1 by definition.
inline RetrievalReport evaluate(const SimilarityMatrix& sim) {
  RetrievalReport report;
  for (std::size_t i = 0; i < kRecallCutoffs.size(); ++i) {
    report.caption_retrieval[i] = recall_at_k(
        sim, std::min(kRecallCutoffs[i], sim.n_captions), Direction::caption_retrieval);
    report.image_retrieval[i] = recall_at_k(sim, std::min(kRecallCutoffs[i], sim.n_images),
                                            Direction::image_retrieval);
  }
  report.update_rsum();
  return report;
}

namespace detail {

// Mean taken as an offset from the first value, so identical inputs return
// that value exactly.
template <class Get>
double shifted_mean(std::size_t n, Get get) {
  const double base = get(0);
  double acc = 0.0;
  for (std::size_t i = 1; i < n; ++i) acc += get(i) - base;
  return base + acc / static_cast<double>(n);
}

}  // namespace detail

inline RetrievalReport fold_average(const std::vector<RetrievalReport>& reports) {
  if (reports.empty()) throw ParameterError("fold_average: no reports");
  RetrievalReport out;
  const std::size_t n = reports.size();
  for (std::size_t i = 0; i < 3; ++i) {
    out.caption_retrieval[i] =
        detail::shifted_mean(n, [&](std::size_t r) { return reports[r].caption_retrieval[i]; });
    out.image_retrieval[i] =
        detail::shifted_mean(n, [&](std::size_t r) { return reports[r].image_retrieval[i]; });
  }
  out.rsum = detail::shifted_mean(n, [&](std::size_t r) { return reports[r].rsum; });
  return out;
}

// Contiguous block of images [first, first + count) with their captions.
inline SimilarityMatrix slice_fold(const SimilarityMatrix& sim, std::size_t first,
                                   std::size_t count) {
  if (count == 0 || first + count > sim.n_images) throw ParameterError("slice_fold: bad range");
  SimilarityMatrix out{count, count * sim.captions_per_image, sim.captions_per_image, {}};
  out.s.reserve(out.n_images * out.n_captions);
  const std::size_t c0 = first * sim.captions_per_image;
  for (std::size_t i = first; i < first + count; ++i) {
    for (std::size_t j = c0; j < c0 + out.n_captions; ++j) out.s.push_back(sim.at(i, j));
  }
  return out;
}

// Splits the images into `folds` contiguous equal blocks and averages the
// per-fold reports. Leftover images beyond folds * (n / folds) are dropped.
inline RetrievalReport evaluate_folds(const SimilarityMatrix& sim, std::size_t folds) {
  if (folds == 0 || folds > sim.n_images) {
    throw ParameterError("evaluate_folds: cannot split " + std::to_string(sim.n_images) +
                         " images into " + std::to_string(folds) + " folds");
  }
  if (folds == 1) return evaluate(sim);
  const std::size_t size = sim.n_images / folds;
  std::vector<RetrievalReport> reports;
  for (std::size_t f = 0; f < folds; ++f) reports.push_back(evaluate(slice_fold(sim, f * size, size)));
  return fold_average(reports);
}

inline SimilarityMatrix ensemble_scores(const std::vector<SimilarityMatrix>& mats) {
  if (mats.empty()) throw ParameterError("ensemble_scores: no matrices");
  const auto& first = mats.front();
  for (const auto& m : mats) {
    if (m.n_images != first.n_images || m.n_captions != first.n_captions ||
        m.captions_per_image != first.captions_per_image || m.s.size() != first.s.size()) {
      throw ShapeError("ensemble_scores: similarity matrices differ in shape");
    }
  }
  SimilarityMatrix out = first;
  for (std::size_t i = 0; i < out.s.size(); ++i) {
    out.s[i] = detail::shifted_mean(mats.size(), [&](std::size_t m) { return mats[m].s[i]; });
  }
  return out;
}

// "metric<TAB>value" lines, four decimals.
inline void write_report(std::ostream& out, const RetrievalReport& report) {
  static constexpr std::array<const char*, 3> kNames{"r1", "r5", "r10"};
  out << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < 3; ++i) {
    out << "caption_" << kNames[i] << '\t' << report.caption_retrieval[i] << '\n';
  }
  for (std::size_t i = 0; i < 3; ++i) {
    out << "image_" << kNames[i] << '\t' << report.image_retrieval[i] << '\n';
  }
  out << "rsum\t" << report.rsum << '\n';
}

inline std::string format_report(const RetrievalReport& report) {
  std::ostringstream out;
  write_report(out, report);
  return out.str();
}

inline void write_report(const std::string& path, const RetrievalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open report file '" + path + "' for writing");
  write_report(out, report);
  if (!out) throw IoError("failed writing report file '" + path + "'");
}

}  // namespace vsrn
