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

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ipnn/head/observation.hpp"

namespace ipnn::head {

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

inline void write_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}

inline std::uint64_t read_u64(std::istream& is, const char* what) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) {
    throw SnapshotError(std::string("truncated snapshot while reading ") + what);
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

inline void write_f64(std::ostream& os, double d) { write_u64(os, std::bit_cast<std::uint64_t>(d)); }

inline double read_f64(std::istream& is, const char* what) { return std::bit_cast<double>(read_u64(is, what)); }

/// Row-major little-endian doubles, no header.
inline void write_values(std::ostream& os, const Tensor& t) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  } else {
    for (double v : t.values()) write_f64(os, v);
  }
}

inline void read_values(std::istream& is, Tensor& t, const char* what) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)))) {
      throw SnapshotError(std::string("truncated snapshot while reading ") + what);
    }
  } else {
    for (double& v : t.values()) v = read_f64(is, what);
  }
}

}  // namespace io

/// Accumulator snapshot. Layout, all little-endian:
///   u64 N, u64 M_1..M_N, u64 m, u64 T, f64 eps, u64 ring_length,
///   f64 H[m*P], f64 G[P], then ring_length x (f64 h[m*P], f64 g[P]).
/// With include_ring == false the ring length is written as 0.
inline void write_snapshot(std::ostream& os, const JointAccumulator& acc, bool include_ring = true) {
  const auto& split = acc.split();
  io::write_u64(os, split.variables());
  for (std::size_t m : split.sizes()) io::write_u64(os, m);
  io::write_u64(os, acc.num_labels());
  io::write_u64(os, acc.forget_number());
  io::write_f64(os, acc.epsilon());
  io::write_u64(os, include_ring ? acc.ring().size() : 0);
  io::write_values(os, acc.H());
  io::write_values(os, acc.G());
  if (!include_ring) return;
  for (const auto& [h, g] : acc.ring()) {
    io::write_values(os, h);
    io::write_values(os, g);
  }
}

inline JointAccumulator read_snapshot(std::istream& is) {
  const std::uint64_t n = io::read_u64(is, "variable count");
  if (n == 0 || n > 64) throw SnapshotError("snapshot: implausible variable count " + std::to_string(n));
  std::vector<std::size_t> sizes;
  for (std::uint64_t j = 0; j < n; ++j) sizes.push_back(io::read_u64(is, "split size"));
  SplitShape split = [&] {
    try {
      return SplitShape(sizes);
    } catch (const std::exception& e) {
      throw SnapshotError(std::string("snapshot: ") + e.what());
    }
  }();
  const std::size_t m = io::read_u64(is, "label count");
  const std::size_t T = io::read_u64(is, "forget number");
  const double eps = io::read_f64(is, "epsilon");
  const std::size_t ring_len = io::read_u64(is, "ring length");
  if (m == 0 || T == 0 || !(eps > 0.0) || ring_len > T) throw SnapshotError("snapshot: invalid header");
  const std::size_t points = split.joint_points();
  Tensor H = Tensor::matrix(m, points);
  Tensor G(numgrad::Shape{points});
  io::read_values(is, H, "H");
  io::read_values(is, G, "G");
  std::deque<std::pair<Tensor, Tensor>> ring;
  for (std::size_t i = 0; i < ring_len; ++i) {
    Tensor h = Tensor::matrix(m, points);
    Tensor g(numgrad::Shape{points});
    io::read_values(is, h, "ring h");
    io::read_values(is, g, "ring g");
    ring.emplace_back(std::move(h), std::move(g));
  }
  return JointAccumulator::restore(std::move(split), m, T, eps, std::move(H), std::move(G), std::move(ring));
}

}  // namespace ipnn::head
