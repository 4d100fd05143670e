#include <gtest/gtest.h>

#include <vector>

#include "vsrn/grad_check.hpp"
#include "vsrn/tensor.hpp"

using namespace vsrn;

TEST(GradCheck, SquareAtThree) {
  Tensor x = Tensor::parameter({}, {3.0});
  std::vector<Tensor> params{x};
  const auto res = grad_check([&] { return mul(x, x); }, params, 1e-5);
  EXPECT_EQ(res.analytic, 6.0);
  EXPECT_NEAR(res.numeric, 6.0, 1e-8);
  EXPECT_LT(res.max_rel_error, 1e-8);
  EXPECT_EQ(res.entries_checked, 1u);
}

TEST(GradCheck, ConstantFunctionHasZeroError) {
  Tensor x = Tensor::parameter({3}, {1, 2, 3});
  std::vector<Tensor> params{x};
  const auto res = grad_check([] { return Tensor::scalar(4.2); }, params);
  EXPECT_EQ(res.max_rel_error, 0.0);
  for (double g : x.grad()) EXPECT_EQ(g, 0.0);
}

TEST(GradCheck, NonDeterministicFunctionIsRejected) {
  Tensor x = Tensor::parameter({}, {1.0});
  std::vector<Tensor> params{x};
  int calls = 0;
  auto drifting = [&] { return scale(x, 1.0 + 1e-3 * ++calls); };
  EXPECT_THROW(grad_check(drifting, params), DeterminismError);
}

TEST(GradCheck, RequiresPositiveStep) {
  Tensor x = Tensor::parameter({}, {1.0});
  std::vector<Tensor> params{x};
  EXPECT_THROW(grad_check([&] { return mul(x, x); }, params, 0.0), ParameterError);
}

TEST(GradCheck, RestoresParameterValues) {
  Tensor x = Tensor::parameter({2}, {0.25, -1.5});
  std::vector<Tensor> params{x};
  grad_check([&] { return sum(tanh(x)); }, params);
  EXPECT_EQ(x[0], 0.25);
  EXPECT_EQ(x[1], -1.5);
}

TEST(GradCheck, ReportsWrongGradient) {
  // A primitive with a deliberately broken backward rule must be caught.
  Tensor x = Tensor::parameter({2}, {0.3, -0.7});
  auto broken_square = [&] {
    std::vector<double> out{x[0] * x[0], x[1] * x[1]};
    return sum(make_op({2}, std::move(out), {x}, [x](std::span<const double> g) {
      x.node()->grad[0] += g[0] * x[0];  // missing factor 2
      x.node()->grad[1] += g[1] * 2.0 * x[1];
    }, "broken_square"));
  };
  std::vector<Tensor> params{x};
  const auto res = grad_check(broken_square, params);
  EXPECT_GT(res.max_rel_error, 0.4);
  EXPECT_EQ(res.entry_index, 0u);
}
