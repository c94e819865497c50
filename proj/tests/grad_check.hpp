// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0
//
// Central finite-difference gradient checking at 64 bit. The graph builder
// is re-run for every probe so stateful ops (pooling argmax) stay honest.

#pragma once

#include <functional>
#include <vector>

#include "asl/nn.hpp"

namespace asl::test {

using VarD = nn::VarT<double>;

// Reduces any tensor to a scalar through a fixed random projection, so the
// whole output participates in the check.
inline VarD project_to_scalar(const VarD& y, uint64_t seed) {
  const int64_t n = y->value.numel();
  Rng rng(seed);
  TensorD w({1, int(n)});
  for (int64_t i = 0; i < n; ++i) w[i] = rng.uniform(-1, 1);
  auto flat = nn::reshape(y, {1, int(n)});
  return nn::fc(flat, nn::constant(std::move(w)),
                nn::constant(TensorD({1})));
}

// Returns the worst relative error between analytic and central-difference
// gradients over every element of every input.
inline double grad_check(
    const std::function<VarD(const std::vector<VarD>&)>& build,
    std::vector<TensorD> input_values, uint64_t seed, double h = 1e-5) {
  // Analytic pass.
  std::vector<VarD> inputs;
  for (auto& v : input_values)
    inputs.push_back(nn::parameter("in" + std::to_string(inputs.size()),
                                   TensorD(v)));
  VarD loss = project_to_scalar(build(inputs), seed);
  nn::backward(loss);

  auto eval = [&](const std::vector<TensorD>& vals) {
    std::vector<VarD> xs;
    for (const auto& v : vals) xs.push_back(nn::constant(TensorD(v)));
    nn::NoGradGuard no_grad;
    return project_to_scalar(build(xs), seed)->value[0];
  };

  double worst = 0;
  for (size_t k = 0; k < input_values.size(); ++k) {
    for (int64_t i = 0; i < input_values[k].numel(); ++i) {
      const double keep = input_values[k][i];
      input_values[k][i] = keep + h;
      const double fp = eval(input_values);
      input_values[k][i] = keep - h;
      const double fm = eval(input_values);
      input_values[k][i] = keep;
      const double fd = (fp - fm) / (2 * h);
      const double an =
          inputs[k]->grad.numel() ? inputs[k]->grad[i] : 0.0;
      const double denom = std::max({1.0, std::abs(fd), std::abs(an)});
      worst = std::max(worst, std::abs(fd - an) / denom);
    }
  }
  return worst;
}

inline TensorD random_tensor(const std::vector<int>& dims, Rng* rng,
                             double lo = -1, double hi = 1) {
  TensorD t(dims);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng->uniform(lo, hi);
  return t;
}

// Random values bounded away from zero, for kink-free ReLU probing.
inline TensorD random_tensor_away_from_zero(const std::vector<int>& dims,
                                            Rng* rng, double margin = 0.05) {
  TensorD t(dims);
  for (int64_t i = 0; i < t.numel(); ++i) {
    double v = rng->uniform(margin, 1.0);
    if (rng->uniform() < 0.5) v = -v;
    t[i] = v;
  }
  return t;
}

}  // namespace asl::test
