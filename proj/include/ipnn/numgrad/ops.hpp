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

#include "ipnn/numgrad/graph.hpp"

namespace ipnn::numgrad {

namespace detail {

inline void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + to_string(t.shape()));
}

}  // namespace detail

/// Row-wise softmax over the last dimension with max subtraction.
inline Tensor softmax_values(const Tensor& a) {
  if (a.rank() == 0 || a.cols() == 0) throw ShapeError("softmax: last dimension must be >= 1");
  Tensor out(a.shape());
  const std::size_t c = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto in = a.row(r);
    auto o = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < c; ++j) o[j] /= s;
  }
  return out;
}

inline Var matmul(const Var& a, const Var& b) {
  detail::require_matrix(a.value(), "matmul");
  detail::require_matrix(b.value(), "matmul");
  return make_node(matmul_values(a.value(), b.value()), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) pa.grad += matmul_nt_values(self.grad, pb.value);
    if (pb.requires_grad) pb.grad += matmul_tn_values(pa.value, self.grad);
  });
}

/// x[batch x c] + bias[c], the only broadcast the engine supports.
inline Var add_bias(const Var& x, const Var& bias) {
  detail::require_matrix(x.value(), "add_bias");
  const std::size_t c = x.value().cols();
  if (bias.value().size() != c) {
    throw ShapeError("add_bias: bias " + to_string(bias.shape()) + " vs input " + to_string(x.shape()));
  }
  Tensor out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t j = 0; j < c; ++j) out[r * c + j] += bias.value()[j];
  return make_node(std::move(out), {x, bias}, [c](Node& self) {
    Node& px = *self.parents[0];
    Node& pb = *self.parents[1];
    if (px.requires_grad) px.grad += self.grad;
    if (pb.requires_grad) {
      for (std::size_t r = 0; r < self.grad.rows(); ++r)
        for (std::size_t j = 0; j < c; ++j) pb.grad[j] += self.grad[r * c + j];
    }
  });
}

inline Var relu(const Var& a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return make_node(std::move(out), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < p.value.size(); ++i)
      if (p.value[i] > 0.0) p.grad[i] += self.grad[i];
  });
}

inline Var softmax(const Var& a) {
  return make_node(softmax_values(a.value()), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    const std::size_t c = self.value.cols();
    for (std::size_t r = 0; r < self.value.rows(); ++r) {
      const double* y = self.value.data() + r * c;
      const double* g = self.grad.data() + r * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += y[j] * g[j];
      for (std::size_t j = 0; j < c; ++j) p.grad[r * c + j] += y[j] * (g[j] - dot);
    }
  });
}

/// Columns [begin, begin+width) of a matrix.
inline Var slice_cols(const Var& a, std::size_t begin, std::size_t width) {
  detail::require_matrix(a.value(), "slice_cols");
  const std::size_t c = a.value().cols();
  if (begin + width > c) throw ShapeError("slice_cols: range exceeds " + std::to_string(c) + " columns");
  const std::size_t r = a.value().rows();
  Tensor out = Tensor::matrix(r, width);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(a.value().data() + i * c + begin, width, out.data() + i * width);
  return make_node(std::move(out), {a}, [begin, width, c](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.rows(); ++i)
      for (std::size_t j = 0; j < width; ++j) p.grad[i * c + begin + j] += self.grad[i * width + j];
  });
}

inline Var add(const Var& a, const Var& b) {
  a.value().require_same_shape(b.value(), "add");
  return make_node(a.value() + b.value(), {a, b}, [](Node& self) {
    for (auto& p : self.parents)
      if (p->requires_grad) p->grad += self.grad;
  });
}

inline Var mul(const Var& a, const Var& b) {
  a.value().require_same_shape(b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa.requires_grad) pa.grad[i] += self.grad[i] * pb.value[i];
      if (pb.requires_grad) pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

inline Var scale(const Var& a, double s) {
  Tensor out = a.value();
  out *= s;
  return make_node(std::move(out), {a}, [s](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += s * self.grad[i];
  });
}

/// log(max(x, floor)); the gradient is zero where the clamp is active.
inline Var log_clamped(const Var& a, double floor) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::log(std::max(v, floor));
  return make_node(std::move(out), {a}, [floor](Node& self) {
    Node& p = *self.parents[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (p.value[i] > floor) p.grad[i] += self.grad[i] / p.value[i];
  });
}

inline Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return make_node(Tensor::scalar(s), {a}, [](Node& self) {
    Node& p = *self.parents[0];
    const double g = self.grad[0];
    for (double& v : p.grad.values()) v += g;
  });
}

inline Var mean(const Var& a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ContractError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

/// Column means of a matrix, shape [1 x c].
inline Var mean_rows(const Var& a) {
  detail::require_matrix(a.value(), "mean_rows");
  const std::size_t r = a.value().rows(), c = a.value().cols();
  if (r == 0) throw ContractError("mean_rows of empty matrix");
  Tensor out = Tensor::matrix(1, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += a.value()[i * c + j];
  out *= 1.0 / static_cast<double>(r);
  return make_node(std::move(out), {a}, [r, c](Node& self) {
    Node& p = *self.parents[0];
    const double inv = 1.0 / static_cast<double>(r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) p.grad[i * c + j] += self.grad[j] * inv;
  });
}

}  // namespace ipnn::numgrad
