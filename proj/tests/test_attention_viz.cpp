#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "vsrn/attention_viz.hpp"

using namespace vsrn;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Box> random_boxes(Rng& rng, std::size_t k, double canvas) {
  std::vector<Box> boxes;
  for (std::size_t i = 0; i < k; ++i) {
    // Fractional corners and boxes hanging off the canvas are both allowed.
    boxes.push_back({rng.uniform(-4.0, canvas), rng.uniform(-4.0, canvas), rng.uniform(0.5, 20.0),
                     rng.uniform(0.5, 20.0)});
  }
  return boxes;
}

}  // namespace

TEST(RegionRankScores, SpotValues) {
  // Region i has correlation 36 - i with the representation (1, 0).
  std::vector<double> rows;
  for (int i = 0; i < 36; ++i) rows.insert(rows.end(), {36.0 - i, 0.0});
  const auto scores =
      region_rank_scores({Tensor::from({36, 2}, rows)}, Tensor::from({2}, {1, 0}), 50.0);
  EXPECT_EQ(scores.front(), 61250.0);
  EXPECT_EQ(scores.back(), 0.0);
}

TEST(RegionRankScores, SingleRegionScoresZero) {
  const auto s = region_rank_scores({Tensor::from({1, 2}, {3, 4})}, Tensor::from({2}, {1, 1}), 50.0);
  EXPECT_EQ(s, std::vector<double>{0.0});
}

TEST(RegionRankScores, MatchesSortThenSquareOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor v = oracle::random_tensor(rng, {6, 4});
    const Tensor img = oracle::random_tensor(rng, {4});
    const double lambda = rng.uniform(0.1, 100.0);
    oracle::Vec corr(6, 0.0);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 4; ++j) corr[i] += v.at(i, j) * img[j];
    const auto ranked = oracle::sorted_candidates(corr);
    std::vector<double> expected(6);
    for (std::size_t r = 0; r < 6; ++r) {
      const double gap = double(6 - (r + 1));
      expected[ranked[r]] = lambda * gap * gap;
    }
    EXPECT_EQ(region_rank_scores({v}, img, lambda), expected);
  }
}

TEST(RegionRankScores, RejectsBadInput) {
  const EmbeddedRegions v{Tensor::from({2, 2}, {1, 0, 0, 1})};
  EXPECT_THROW(region_rank_scores(v, Tensor::from({2}, {1, 0}), 0.0), ParameterError);
  EXPECT_THROW(region_rank_scores(v, Tensor::from({3}, {1, 0, 0}), 50.0), ShapeError);
}

TEST(RegionRankScores, PositiveScalingKeepsScores) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor v = oracle::random_tensor(rng, {8, 5});
    const Tensor img = oracle::random_tensor(rng, {5});
    const double c = rng.uniform(0.01, 100.0);
    std::vector<double> scaled(img.values().begin(), img.values().end());
    for (double& x : scaled) x *= c;
    EXPECT_EQ(region_rank_scores({v}, img, 50.0),
              region_rank_scores({v}, Tensor::from({5}, scaled), 50.0));
  }
}

TEST(RegionRankScores, PermutingRegionsPermutesScores) {
  Rng rng(3);
  const Tensor v = oracle::random_tensor(rng, {7, 3});
  const Tensor img = oracle::random_tensor(rng, {3});
  std::vector<std::size_t> perm(7);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  std::vector<double> rows;
  for (std::size_t i : perm)
    for (std::size_t j = 0; j < 3; ++j) rows.push_back(v.at(i, j));
  const auto base = region_rank_scores({v}, img, 50.0);
  const auto permuted = region_rank_scores({Tensor::from({7, 3}, rows)}, img, 50.0);
  for (std::size_t r = 0; r < 7; ++r) EXPECT_EQ(permuted[r], base[perm[r]]);
}

TEST(RenderHeatmap, OverlappingBoxesAdd) {
  const auto map = render_heatmap({{0, 0, 4, 4}, {2, 2, 4, 4}}, {10.0, 5.0}, 8, 8);
  EXPECT_EQ(map.at(0, 0), 10.0);
  EXPECT_EQ(map.at(3, 3), 15.0);
  EXPECT_EQ(map.at(5, 5), 5.0);
  EXPECT_EQ(map.at(7, 7), 0.0);
  EXPECT_EQ(map.at(4, 1), 0.0);
}

TEST(RenderHeatmap, NoBoxesGiveZeroMap) {
  const auto map = render_heatmap({}, {}, 5, 3);
  EXPECT_EQ(map.scores, std::vector<double>(15, 0.0));
}

TEST(RenderHeatmap, MatchesPerPixelOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto boxes = random_boxes(rng, 1 + rng.below(10), 32.0);
    std::vector<double> scores;
    for (std::size_t i = 0; i < boxes.size(); ++i) scores.push_back(50.0 * double(rng.below(100)));
    const auto map = render_heatmap(boxes, scores, 32, 32);
    for (std::size_t y = 0; y < 32; ++y)
      for (std::size_t x = 0; x < 32; ++x) {
        double expected = 0.0;
        // Pixel (x, y) is covered when it lies in [x0, x0 + w) x [y0, y0 + h)
        // once the box edges are rounded up to whole pixels.
        for (std::size_t b = 0; b < boxes.size(); ++b) {
          const double px = double(x), py = double(y);
          if (std::ceil(boxes[b].x) <= px && px < std::ceil(boxes[b].x + boxes[b].width) &&
              std::ceil(boxes[b].y) <= py && py < std::ceil(boxes[b].y + boxes[b].height)) {
            expected += scores[b];
          }
        }
        ASSERT_EQ(map.at(x, y), expected) << x << "," << y;
      }
    double total = 0.0;
    for (double s : scores) total += s;
    for (double v : map.scores) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, total);
    }
  }
}

TEST(RenderHeatmap, RejectsBadInput) {
  EXPECT_THROW(render_heatmap({}, {}, 0, 4), ParameterError);
  EXPECT_THROW(render_heatmap({{0, 0, 1, 1}}, {}, 4, 4), ShapeError);
  EXPECT_THROW(render_heatmap({{0, 0, 1, 1}}, {-1.0}, 4, 4), ParameterError);
}

TEST(Graymap, LinearScalingRoundsHalfUp) {
  const AttentionMap map{2, 2, {0, 10, 5, 10}};
  EXPECT_EQ(graymap_pixels(map), (std::vector<std::uint8_t>{0, 255, 128, 255}));
  const std::string bytes = encode_graymap(map);
  EXPECT_EQ(bytes, std::string("P5\n2 2\n255\n") + std::string("\x00\xff\x80\xff", 4));
}

TEST(Graymap, ZeroMapGivesZeroBytes) {
  const AttentionMap map{3, 2, std::vector<double>(6, 0.0)};
  EXPECT_EQ(encode_graymap(map), std::string("P5\n3 2\n255\n") + std::string(6, '\0'));
}

TEST(Graymap, WritingTwiceIsByteIdentical) {
  Rng rng(5);
  const auto boxes = random_boxes(rng, 8, 32.0);
  std::vector<double> scores;
  for (std::size_t i = 0; i < 8; ++i) scores.push_back(rng.uniform(0.0, 100.0));
  const auto dir = std::filesystem::temp_directory_path();
  const auto a = dir / "vsrn_attn_a.pgm", b = dir / "vsrn_attn_b.pgm";
  write_graymap(render_heatmap(boxes, scores, 32, 32), a.string());
  write_graymap(render_heatmap(boxes, scores, 32, 32), b.string());
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a).size(), std::string("P5\n32 32\n255\n").size() + 32 * 32);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Graymap, UnwritablePathIsIoError) {
  EXPECT_THROW(write_graymap({1, 1, {1.0}}, "/nonexistent-dir/x.pgm"), IoError);
}
