#include <gtest/gtest.h>

#include <bit>
#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "vsrn/grad_check.hpp"
#include "vsrn/region_reasoning.hpp"

using namespace vsrn;

namespace {

Tensor eye(std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return Tensor::parameter({n, n}, std::move(v));
}

RegionSet random_regions(Rng& rng, std::size_t k, std::size_t f) {
  RegionSet rs;
  rs.feature_dim = f;
  rs.features = oracle::random_vec(rng, k * f);
  for (std::size_t i = 0; i < k; ++i) {
    rs.boxes.push_back({0, 0, 1 + double(i), 2});
    rs.confidences.push_back(rng.uniform());
  }
  return rs;
}

GcnLayerParams random_layer(Rng& rng, std::size_t d) { return GcnLayerParams::init(d, rng); }

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

}  // namespace

TEST(RegionSet, ValidatesInvariants) {
  Rng rng(1);
  RegionSet rs = random_regions(rng, 3, 4);
  EXPECT_NO_THROW(rs.validate());
  RegionSet bad_box = rs;
  bad_box.boxes[1].width = 0.0;
  EXPECT_THROW(bad_box.validate(), InputError);
  RegionSet bad_conf = rs;
  bad_conf.confidences[0] = 1.5;
  EXPECT_THROW(bad_conf.validate(), InputError);
  RegionSet empty;
  empty.feature_dim = 4;
  EXPECT_THROW(empty.validate(), InputError);
}

TEST(EmbedRegions, IdentityMapReturnsFeatures) {
  Rng rng(2);
  RegionSet rs = random_regions(rng, 3, 4);
  auto out = embed_regions(rs, eye(4), Tensor::zeros({4}, true));
  for (std::size_t i = 0; i < rs.features.size(); ++i) EXPECT_EQ(out.rows[i], rs.features[i]);
}

TEST(EmbedRegions, ZeroWeightGivesBiasRows) {
  Rng rng(3);
  RegionSet rs = random_regions(rng, 3, 4);
  Tensor bias = Tensor::parameter({2}, {0.5, -2.0});
  auto out = embed_regions(rs, Tensor::zeros({4, 2}, true), bias);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out.rows.at(i, 0), 0.5);
    EXPECT_EQ(out.rows.at(i, 1), -2.0);
  }
}

TEST(EmbedRegions, MatchesMatmulOracle) {
  Rng rng(4);
  RegionSet rs = random_regions(rng, 3, 4);
  Tensor w = oracle::random_param(rng, {4, 2});
  Tensor b = oracle::random_param(rng, {2});
  auto out = embed_regions(rs, w, b);
  oracle::Mat f(3, oracle::Vec(4));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) f[i][j] = rs.features[i * 4 + j];
  const auto expected = oracle::matmul(f, oracle::to_mat(w));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(out.rows.at(i, j), expected[i][j] + b[j], 1e-12);
}

TEST(EmbedRegions, FeatureWidthMismatchIsShapeError) {
  Rng rng(5);
  RegionSet rs = random_regions(rng, 3, 4);
  EXPECT_THROW(embed_regions(rs, Tensor::zeros({5, 2}), Tensor::zeros({2})), ShapeError);
}

TEST(PairwiseAffinity, OrthonormalVectors) {
  GcnLayerParams p{eye(2), eye(2), eye(2), eye(2)};
  EmbeddedRegions v{Tensor::from({2, 2}, {1, 0, 0, 1})};
  Tensor r = pairwise_affinity(v, p);
  EXPECT_EQ(oracle::to_vec(r), (std::vector<double>{1, 0, 0, 1}));
}

TEST(PairwiseAffinity, ZeroEmbeddingGivesZeroMatrix) {
  Rng rng(6);
  GcnLayerParams p = random_layer(rng, 3);
  p.w_phi = Tensor::zeros({3, 3}, true);
  EmbeddedRegions v{oracle::random_tensor(rng, {4, 3})};
  const Tensor r = pairwise_affinity(v, p);
  for (double x : r.values()) EXPECT_EQ(x, 0.0);
}

TEST(PairwiseAffinity, MatchesDoubleLoopOracle) {
  Rng rng(7);
  GcnLayerParams p = random_layer(rng, 3);
  EmbeddedRegions v{oracle::random_tensor(rng, {5, 3})};
  Tensor r = pairwise_affinity(v, p);
  const auto vm = oracle::to_mat(v.rows);
  const auto phi = oracle::to_mat(p.w_phi), psi = oracle::to_mat(p.w_psi);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto a = oracle::vecmat(vm[i], phi);
    for (std::size_t j = 0; j < 5; ++j) {
      const auto b = oracle::vecmat(vm[j], psi);
      double expected = 0.0;
      for (std::size_t d = 0; d < 3; ++d) expected += a[d] * b[d];
      EXPECT_NEAR(r.at(i, j), expected, 1e-12);
    }
  }
}

TEST(GcnLayer, ZeroResidualWeightIsBitwiseIdentity) {
  Rng rng(8);
  GcnLayerParams p = random_layer(rng, 6);
  p.w_res = Tensor::zeros({6, 6}, true);
  EmbeddedRegions v{oracle::random_tensor(rng, {5, 6})};
  EXPECT_TRUE(bitwise_equal(gcn_layer(v, p).rows, v.rows));
}

TEST(GcnLayer, UniformAffinityMeanPlusResidual) {
  // Zero affinity embeddings force R = 0 everywhere, so every softmax row is
  // (0.5, 0.5).
  GcnLayerParams p{Tensor::zeros({2, 2}, true), Tensor::zeros({2, 2}, true), eye(2), eye(2)};
  EmbeddedRegions v{Tensor::from({2, 2}, {2, 0, 0, 2})};
  EXPECT_EQ(oracle::to_vec(gcn_layer(v, p).rows), (std::vector<double>{3, 1, 1, 3}));
}

TEST(GcnLayer, MatchesStraightLineOracle) {
  Rng rng(9);
  GcnLayerParams p = random_layer(rng, 4);
  EmbeddedRegions v{oracle::random_tensor(rng, {5, 4})};
  const auto vm = oracle::to_mat(v.rows);
  oracle::Mat r(5, oracle::Vec(5));
  for (std::size_t i = 0; i < 5; ++i) {
    const auto a = oracle::vecmat(vm[i], oracle::to_mat(p.w_phi));
    for (std::size_t j = 0; j < 5; ++j) {
      const auto b = oracle::vecmat(vm[j], oracle::to_mat(p.w_psi));
      for (std::size_t d = 0; d < 4; ++d) r[i][j] += a[d] * b[d];
    }
  }
  const auto expected = oracle::matmul(
      oracle::matmul(oracle::matmul(oracle::softmax_rows(r), vm), oracle::to_mat(p.w_g)),
      oracle::to_mat(p.w_res));
  const auto out = gcn_layer(v, p).rows;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out.at(i, j), expected[i][j] + vm[i][j], 1e-12);
}

TEST(GcnLayer, PermutationEquivariant) {
  Rng rng(10);
  GcnLayerParams p = random_layer(rng, 4);
  Tensor v = oracle::random_tensor(rng, {6, 4});
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  std::vector<double> permuted;
  for (std::size_t i : perm)
    for (std::size_t j = 0; j < 4; ++j) permuted.push_back(v.at(i, j));
  const Tensor out = gcn_layer({v}, p).rows;
  const Tensor out_perm = gcn_layer({Tensor::from({6, 4}, permuted)}, p).rows;
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out_perm.at(r, j), out.at(perm[r], j), 1e-10);
}

TEST(RelationshipReason, EmptyStackIsIdentity) {
  Rng rng(11);
  EmbeddedRegions v{oracle::random_tensor(rng, {3, 4})};
  EXPECT_TRUE(relationship_reason(v, {}).rows.same_node(v.rows));
}

TEST(RelationshipReason, ZeroResidualStackIsIdentity) {
  Rng rng(12);
  std::vector<GcnLayerParams> layers{random_layer(rng, 4), random_layer(rng, 4)};
  for (auto& l : layers) l.w_res = Tensor::zeros({4, 4}, true);
  EmbeddedRegions v{oracle::random_tensor(rng, {3, 4})};
  EXPECT_TRUE(bitwise_equal(relationship_reason(v, layers).rows, v.rows));
}

TEST(RelationshipReason, FourLayersEqualUnrolledApplication) {
  Rng rng(13);
  std::vector<GcnLayerParams> layers;
  for (int i = 0; i < 4; ++i) layers.push_back(random_layer(rng, 4));
  EmbeddedRegions v{oracle::random_tensor(rng, {5, 4})};
  EmbeddedRegions manual = v;
  for (const auto& l : layers) manual = gcn_layer(manual, l);
  const auto stacked = relationship_reason(v, layers).rows;
  for (std::size_t i = 0; i < stacked.size(); ++i) EXPECT_NEAR(stacked[i], manual.rows[i], 1e-12);
}

TEST(RegionReasoning, GradientsMatchFiniteDifferences) {
  Rng rng(14);
  const std::size_t k = 5, d = 8, f = 6;
  RegionSet rs = random_regions(rng, k, f);
  Tensor w_f = oracle::random_param(rng, {f, d}, 0.4);
  Tensor b_f = oracle::random_param(rng, {d}, 0.1);
  std::vector<GcnLayerParams> layers{random_layer(rng, d), random_layer(rng, d)};
  Tensor probe = oracle::random_tensor(rng, {k, d});
  std::vector<Tensor> params{w_f, b_f};
  for (const auto& l : layers) params.insert(params.end(), {l.w_phi, l.w_psi, l.w_g, l.w_res});
  const auto res = grad_check(
      [&] { return sum(mul(relationship_reason(embed_regions(rs, w_f, b_f), layers).rows, probe)); },
      params);
  EXPECT_LT(res.max_rel_error, 1e-4) << "param " << res.param_index << " entry " << res.entry_index;
}
