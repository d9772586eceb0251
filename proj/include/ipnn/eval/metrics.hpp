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
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "ipnn/numgrad/tensor.hpp"

namespace ipnn::eval {

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline double accuracy(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& labels) {
  if (predictions.size() != labels.size()) throw ContractError("accuracy: length mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

/// counts[l][c]: samples with true label l whose cluster is c.
struct ClusterAssignment {
  std::vector<std::vector<std::size_t>> counts;

  std::size_t num_labels() const noexcept { return counts.size(); }
  std::size_t num_clusters() const noexcept { return counts.empty() ? 0 : counts.front().size(); }

  std::size_t label_total(std::size_t l) const {
    return std::accumulate(counts.at(l).begin(), counts.at(l).end(), std::size_t{0});
  }

  /// Columns reordered so that new cluster c is old cluster perm[c].
  ClusterAssignment permuted(const std::vector<std::size_t>& perm) const {
    ClusterAssignment out{counts};
    for (std::size_t l = 0; l < counts.size(); ++l)
      for (std::size_t c = 0; c < perm.size(); ++c) out.counts[l][c] = counts[l][perm[c]];
    return out;
  }

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

/// Histogram of argmax cluster per true label.
inline ClusterAssignment assign_clusters(const std::vector<std::size_t>& labels,
                                         const std::vector<std::size_t>& clusters, std::size_t num_labels,
                                         std::size_t num_clusters) {
  if (labels.size() != clusters.size()) throw ContractError("assign_clusters: length mismatch");
  ClusterAssignment a{std::vector<std::vector<std::size_t>>(num_labels, std::vector<std::size_t>(num_clusters, 0))};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_labels || clusters[i] >= num_clusters) throw ContractError("assign_clusters: out of range");
    ++a.counts[labels[i]][clusters[i]];
  }
  return a;
}

/// Row-wise argmax of event probabilities, ties to the lowest index.
inline std::vector<std::size_t> argmax_rows(const numgrad::Tensor& probs) {
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

namespace detail {

/// Labels of cluster c: those whose largest share of samples falls in c. A
/// label tied between clusters belongs to each of them, which keeps the sets
/// independent of the cluster numbering.
inline std::vector<std::vector<bool>> label_sets(const ClusterAssignment& a) {
  std::vector<std::vector<bool>> sets(a.num_clusters(), std::vector<bool>(a.num_labels(), false));
  for (std::size_t l = 0; l < a.num_labels(); ++l) {
    if (a.label_total(l) == 0) continue;
    const auto& row = a.counts[l];
    const std::size_t top = *std::max_element(row.begin(), row.end());
    for (std::size_t c = 0; c < row.size(); ++c) sets[c][l] = row[c] == top;
  }
  return sets;
}

inline double jaccard(const std::vector<bool>& x, const std::vector<bool>& y) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    inter += x[i] && y[i];
    uni += x[i] || y[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Weighted Jaccard of the per-label membership fractions of two clusters.
inline double weighted_jaccard(const ClusterAssignment& a, std::size_t ca, const ClusterAssignment& b,
                               std::size_t cb) {
  double lo = 0.0, hi = 0.0;
  for (std::size_t l = 0; l < a.num_labels(); ++l) {
    const double ta = static_cast<double>(std::max<std::size_t>(a.label_total(l), 1));
    const double tb = static_cast<double>(std::max<std::size_t>(b.label_total(l), 1));
    const double fa = static_cast<double>(a.counts[l][ca]) / ta;
    const double fb = static_cast<double>(b.counts[l][cb]) / tb;
    lo += std::min(fa, fb);
    hi += std::max(fa, fb);
  }
  return hi == 0.0 ? 1.0 : lo / hi;
}

/// Reference clusters in a labeling-independent order: columns sorted by
/// their count vectors, largest first.
inline ClusterAssignment canonical(const ClusterAssignment& a) {
  std::vector<std::size_t> perm(a.num_clusters());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto column = [&](std::size_t c) {
    std::vector<std::size_t> col;
    for (const auto& row : a.counts) col.push_back(row[c]);
    return col;
  };
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) { return column(x) > column(y); });
  return a.permuted(perm);
}

}  // namespace detail

struct AlignedRounds {
  std::vector<ClusterAssignment> rounds;
  std::vector<std::vector<std::size_t>> permutations;  // permutation applied to each input round
};

/// Aligns every round's cluster indices to round 1 (canonically ordered) by
/// exhaustive search over permutations. The score is the total Jaccard
/// similarity of per-cluster label sets, ties broken by weighted Jaccard of
/// membership fractions, then by the lexicographically lowest permutation.
inline AlignedRounds align_rounds(const std::vector<ClusterAssignment>& assignments) {
  AlignedRounds out;
  if (assignments.empty()) return out;
  const std::size_t labels = assignments.front().num_labels();
  const std::size_t k = assignments.front().num_clusters();
  for (const auto& a : assignments) {
    if (a.num_clusters() != k) throw ContractError("align_rounds: cluster-count mismatch");
    if (a.num_labels() != labels) throw ContractError("align_rounds: label-count mismatch");
  }
  if (k > 10) throw ContractError("align_rounds: exhaustive alignment limited to 10 clusters");

  const ClusterAssignment reference = detail::canonical(assignments.front());
  const auto ref_sets = detail::label_sets(reference);
  for (const auto& a : assignments) {
    const auto sets = detail::label_sets(a);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<std::size_t> best = perm;
    double best_set = -1.0, best_weighted = -1.0;
    do {
      double s = 0.0, w = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        s += detail::jaccard(ref_sets[c], sets[perm[c]]);
        w += detail::weighted_jaccard(reference, c, a, perm[c]);
      }
      // strict improvement only, so the first (lowest) permutation wins ties
      if (s > best_set + 1e-12 || (std::abs(s - best_set) <= 1e-12 && w > best_weighted + 1e-12)) {
        best_set = s;
        best_weighted = w;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.rounds.push_back(a.permuted(best));
    out.permutations.push_back(best);
  }
  return out;
}

/// Mean over rounds of the fraction of label-l samples in cluster c.
inline double cluster_percentage(const std::vector<ClusterAssignment>& aligned, std::size_t label,
                                 std::size_t cluster) {
  if (aligned.empty()) throw ContractError("cluster_percentage: no rounds");
  double s = 0.0;
  for (const auto& a : aligned) {
    const std::size_t total = a.label_total(label);
    if (total > 0) s += static_cast<double>(a.counts[label].at(cluster)) / static_cast<double>(total);
  }
  return s / static_cast<double>(aligned.size());
}

/// CSV rows "round,label,cluster,fraction" for every aligned round, followed
/// by the across-round mean with round = "mean".
inline void write_cluster_csv(std::ostream& os, const std::vector<ClusterAssignment>& aligned) {
  os << "round,label,cluster,fraction\n";
  os.precision(17);
  for (std::size_t r = 0; r < aligned.size(); ++r) {
    const auto& a = aligned[r];
    for (std::size_t l = 0; l < a.num_labels(); ++l) {
      const double total = static_cast<double>(std::max<std::size_t>(a.label_total(l), 1));
      for (std::size_t c = 0; c < a.num_clusters(); ++c)
        os << r + 1 << ',' << l << ',' << c << ',' << static_cast<double>(a.counts[l][c]) / total << '\n';
    }
  }
  if (aligned.empty()) return;
  for (std::size_t l = 0; l < aligned.front().num_labels(); ++l)
    for (std::size_t c = 0; c < aligned.front().num_clusters(); ++c)
      os << "mean," << l << ',' << c << ',' << cluster_percentage(aligned, l, c) << '\n';
}

}  // namespace ipnn::eval
