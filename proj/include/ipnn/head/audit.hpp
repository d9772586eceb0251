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
#include <limits>
#include <vector>

#include "ipnn/head/observation.hpp"

namespace ipnn::head {

struct AuditReport {
  std::size_t joint_points = 0;
  std::size_t num_labels = 0;
  std::size_t supported_points = 0;
  std::size_t pure_points = 0;
  double purity_bar = 0.99;
  double min_purity = 1.0;
  std::vector<std::size_t> impure_points;  // supported points below the bar
  std::vector<double> purity;              // max_l cond[l, p] for every point
  bool capacity_ok = true;                 // prod M_j >= m

  double pure_fraction() const {
    return supported_points == 0 ? 1.0 : static_cast<double>(pure_points) / static_cast<double>(supported_points);
  }
};

/// Checks that every well-supported joint point maps to a single label.
/// mass is the per-point joint mass; support is its share of the total mass,
/// so the threshold is comparable across batch sizes and T.
inline AuditReport convergence_audit(const SplitShape& split, const Tensor& cond, const Tensor& mass,
                                     double support_threshold, double purity_bar = 0.99) {
  const std::size_t points = split.joint_points();
  if (cond.rank() != 2 || cond.cols() != points || mass.size() != points) {
    throw ShapeError("convergence_audit: statistics do not match split " + split.to_string());
  }
  AuditReport r;
  r.joint_points = points;
  r.num_labels = cond.rows();
  r.purity_bar = purity_bar;
  r.capacity_ok = points >= r.num_labels;
  r.purity.assign(points, 0.0);

  double total = 0.0;
  for (double v : mass.values()) total += v;
  for (std::size_t p = 0; p < points; ++p) {
    double best = 0.0;
    for (std::size_t l = 0; l < r.num_labels; ++l) best = std::max(best, cond.at(l, p));
    r.purity[p] = best;
    const double share = total > 0.0 ? mass[p] / total : 0.0;
    if (share < support_threshold || share == 0.0) continue;
    ++r.supported_points;
    r.min_purity = std::min(r.min_purity, best);
    if (best >= purity_bar) {
      ++r.pure_points;
    } else {
      r.impure_points.push_back(p);
    }
  }
  return r;
}

inline AuditReport convergence_audit(const JointAccumulator& acc, double support_threshold,
                                     double purity_bar = 0.99) {
  return convergence_audit(acc.split(), acc.frozen_conditional(), acc.G(), support_threshold, purity_bar);
}

inline AuditReport convergence_audit(const SplitShape& split, const ExactObservation& obs, double support_threshold,
                                     double purity_bar = 0.99) {
  return convergence_audit(split, obs.conditional, obs.mass, support_threshold, purity_bar);
}

}  // namespace ipnn::head
