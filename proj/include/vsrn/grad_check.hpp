#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vsrn/errors.hpp"
#include "vsrn/tensor.hpp"

namespace vsrn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t param_index = 0;  // which parameter holds the worst entry
  std::size_t entry_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t entries_checked = 0;
};

// Relative error with the denominator floored at 1e-8.
inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

// Compares reverse-mode gradients of the scalar `f()` against central
// differences for every entry of `params`. `f` must rebuild its graph from
// the current parameter values on each call. Parameter gradients are
// overwritten with the analytic gradient.
template <class F>
GradCheckResult grad_check(F&& f, std::span<Tensor> params, double eps = 1e-5) {
  if (!(eps > 0.0)) throw ParameterError("grad_check: eps must be positive");

  auto evaluate = [&] {
    NoRecord inference;
    return f().item();
  };
  const double first = evaluate();
  const double second = evaluate();
  if (first != second) {
    throw DeterminismError("grad_check: repeated evaluations differ (" + std::to_string(first) +
                           " vs " + std::to_string(second) + ")");
  }

  for (auto& p : params) p.zero_grad();
  {
    Record record;
    Tensor loss = f();
    backward(loss, record);
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    auto values = p.mutable_values();
    const auto grad = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      const double plus = saved + eps;
      const double minus = saved - eps;
      values[i] = plus;
      const double f_plus = evaluate();
      values[i] = minus;
      const double f_minus = evaluate();
      values[i] = saved;
      // The representable step, not 2*eps, divides the difference.
      const double numeric = (f_plus - f_minus) / (plus - minus);
      const double err = relative_error(grad[i], numeric);
      ++result.entries_checked;
      if (err > result.max_rel_error || result.entries_checked == 1) {
        result.max_rel_error = err;
        result.param_index = pi;
        result.entry_index = i;
        result.analytic = grad[i];
        result.numeric = numeric;
      }
    }
  }
  return result;
}

template <class F>
GradCheckResult grad_check(F&& f, std::vector<Tensor>& params, double eps = 1e-5) {
  return grad_check(std::forward<F>(f), std::span<Tensor>(params), eps);
}

}  // namespace vsrn
