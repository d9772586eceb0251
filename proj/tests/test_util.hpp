// Copyright 2026 The ipnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ipnn/numgrad/graph.hpp"
#include "ipnn/numgrad/rng.hpp"
#include "ipnn/numgrad/tensor.hpp"

namespace ipnn::testing {

using numgrad::Rng;
using numgrad::Shape;
using numgrad::Tensor;
using numgrad::Var;

inline Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Random probability rows (strictly positive).
inline Tensor random_simplex(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += t.at(r, c) = rng.uniform(0.05, 1.0);
    for (std::size_t c = 0; c < cols; ++c) t.at(r, c) /= s;
  }
  return t;
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a.at(i, p) * b.at(p, j);
      out.at(i, j) = s;
    }
  return out;
}

inline bool close(double got, double want, double rel, double abs_floor) {
  return std::abs(got - want) <= std::max(abs_floor, rel * std::max(std::abs(got), std::abs(want)));
}

/// Largest violation of |analytic - numeric| <= max(floor, rel * scale) over
/// every entry of every parameter, as a ratio (<= 1 passes).
/// loss_fn rebuilds the graph from the current parameter values.
inline double gradient_check(std::vector<Var>& params, const std::function<Var()>& loss_fn, double h = 1e-5,
                             double rel = 1e-4, double abs_floor = 1e-7) {
  for (auto& p : params) p.zero_grad();
  Var loss = loss_fn();
  numgrad::backward(loss);
  std::vector<Tensor> analytic;
  for (auto& p : params) analytic.push_back(p.grad());
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& v = params[i].mutable_value();
    for (std::size_t e = 0; e < v.size(); ++e) {
      const double keep = v[e];
      v[e] = keep + h;
      const double up = loss_fn().value().item();
      v[e] = keep - h;
      const double down = loss_fn().value().item();
      v[e] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double got = analytic[i][e];
      const double tol = std::max(abs_floor, rel * std::max(std::abs(got), std::abs(numeric)));
      worst = std::max(worst, std::abs(got - numeric) / tol);
    }
  }
  return worst;
}

}  // namespace ipnn::testing
