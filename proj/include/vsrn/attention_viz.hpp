#pragma once

// Rank-based region attention maps rendered as binary portable graymaps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/region_reasoning.hpp"
#include "vsrn/tensor.hpp"

namespace vsrn {

inline constexpr double kDefaultAttentionLambda = 50.0;

struct AttentionMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> scores;  // height x width, row-major

  double at(std::size_t x, std::size_t y) const { return scores[y * width + x]; }
  bool operator==(const AttentionMap&) const = default;
};

// Scores lambda * (k - r)^2 where r is the 1-based rank of a region by
// descending inner product with the image representation.
inline std::vector<double> region_rank_scores(const EmbeddedRegions& v_star,
                                              const Tensor& image_repr, double lambda) {
  const std::size_t k = v_star.count();
  if (k == 0) throw InputError("region_rank_scores: no regions");
  if (!(lambda > 0.0)) throw ParameterError("region_rank_scores: lambda must be positive");
  if (image_repr.rank() != 1 || image_repr.size() != v_star.dim()) {
    throw ShapeError("region_rank_scores: representation " + to_string(image_repr.shape()) +
                     " does not match region width " + std::to_string(v_star.dim()));
  }
  const std::size_t d = v_star.dim();
  std::vector<double> corr(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < d; ++j) corr[i] += v_star.rows.at(i, j) * image_repr[j];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return corr[a] > corr[b]; });
  std::vector<double> scores(k);
  for (std::size_t pos = 0; pos < k; ++pos) {
    const double gap = static_cast<double>(k - (pos + 1));
    scores[order[pos]] = lambda * gap * gap;
  }
  return scores;
}

// Each pixel accumulates the scores of every box covering it. A box covers
// pixel columns c with x <= c < x + width (likewise rows), clamped to the
// canvas.
inline AttentionMap render_heatmap(const std::vector<Box>& boxes, const std::vector<double>& scores,
                                   std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw ParameterError("render_heatmap: canvas must be non-empty");
  if (boxes.size() != scores.size()) {
    throw ShapeError("render_heatmap: " + std::to_string(boxes.size()) + " boxes but " +
                     std::to_string(scores.size()) + " scores");
  }
  AttentionMap map{width, height, std::vector<double>(width * height, 0.0)};
  auto clamp_edge = [](double v, std::size_t limit) {
    const double c = std::ceil(v);
    if (c <= 0.0) return std::size_t{0};
    return std::min(limit, static_cast<std::size_t>(c));
  };
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    if (!(scores[b] >= 0.0)) throw ParameterError("render_heatmap: negative score");
    const Box& box = boxes[b];
    const std::size_t x0 = clamp_edge(box.x, width), x1 = clamp_edge(box.x + box.width, width);
    const std::size_t y0 = clamp_edge(box.y, height), y1 = clamp_edge(box.y + box.height, height);
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = x0; x < x1; ++x) map.scores[y * width + x] += scores[b];
  }
  return map;
}

// Pixel bytes scaled linearly so the maximum maps to 255, rounding half up.
inline std::vector<std::uint8_t> graymap_pixels(const AttentionMap& map) {
  std::vector<std::uint8_t> bytes(map.scores.size(), 0);
  const double max_value =
      map.scores.empty() ? 0.0 : *std::max_element(map.scores.begin(), map.scores.end());
  if (max_value <= 0.0) return bytes;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double scaled = std::floor(255.0 * map.scores[i] / max_value + 0.5);
    bytes[i] = static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
  }
  return bytes;
}

inline std::string encode_graymap(const AttentionMap& map) {
  std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  const auto pixels = graymap_pixels(map);
  out.append(pixels.begin(), pixels.end());
  return out;
}

inline void write_graymap(const AttentionMap& map, const std::string& path) {
  if (map.width == 0 || map.height == 0 || map.scores.size() != map.width * map.height) {
    throw ParameterError("write_graymap: invalid attention map");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::string bytes = encode_graymap(map);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace vsrn
