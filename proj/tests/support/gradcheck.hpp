#pragma once

// Central finite-difference gradient check in double precision.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "stsc/autodiff.hpp"
#include "stsc/ops.hpp"

namespace stsc::testing {

struct GradCheckResult {
  /// Largest over inputs of |g_a - g_n|_2 / max(|g_a|_2, |g_n|_2).
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  /// Largest elementwise |a - n| / max(|a|, |n|, floor), for diagnostics.
  double max_elem_error = 0.0;
  std::string worst_elem;
  std::size_t checked = 0;
};

using ScalarFn = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

/// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries
/// whose true derivative is zero from dividing roundoff by roundoff.
inline double rel_error(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Compares backward() against central differences for every element of
/// every input. The headline figure is normwise per input tensor: entries
/// whose true derivative is tiny carry a truncation error of order
/// h^2 f'''/6 that no implementation can remove, and would otherwise decide
/// the result on their own.
inline GradCheckResult gradcheck(const ScalarFn& fn, std::vector<Tensor<double>> inputs,
                                 double h = 1e-3, double floor = 1e-6) {
  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const auto& x : inputs) vars.push_back(tape.leaf(x, true));
    auto loss = fn(tape, vars);
    tape.backward(loss);
    for (auto v : vars) analytic.push_back(tape.gradient(v));
  }
  auto eval = [&]() {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (const auto& x : inputs) vars.push_back(tape.leaf(x, false));
    return fn(tape, vars).value()[0];
  };
  GradCheckResult r;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < inputs[i].size(); ++j) {
      const double orig = inputs[i][j];
      inputs[i][j] = orig + h;
      const double up = eval();
      inputs[i][j] = orig - h;
      const double down = eval();
      inputs[i][j] = orig;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[i][j];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      const double e = rel_error(a, numeric, floor);
      ++r.checked;
      if (e > r.max_elem_error) {
        r.max_elem_error = e;
        r.worst_elem = "input " + std::to_string(i) + ", element " + std::to_string(j) +
                       ": analytic " + std::to_string(a) + ", numeric " + std::to_string(numeric);
      }
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), floor});
    const double e = std::sqrt(diff2) / denom;
    if (e > r.max_rel_error) {
      r.max_rel_error = e;
      r.worst_input = i;
    }
  }
  return r;
}

/// Weighted sum with fixed pseudo-random weights, so every output element
/// contributes a distinct amount to the scalar under test.
inline Var<double> probe(Var<double> y) {
  Tensor<double> w(y.shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 + std::sin(1.7 * double(i) + 0.3);
  return ops::sum(ops::mul(y, y.tape->leaf(std::move(w), false)));
}

}  // namespace stsc::testing
