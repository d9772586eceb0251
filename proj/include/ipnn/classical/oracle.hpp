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

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipnn::classical {

using Rational = boost::multiprecision::cpp_rational;

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// "p/q" in lowest terms; integers print without a denominator.
inline std::string to_string(const Rational& r) {
  if (boost::multiprecision::denominator(r) == 1) return boost::multiprecision::numerator(r).str();
  return boost::multiprecision::numerator(r).str() + "/" + boost::multiprecision::denominator(r).str();
}

/// Paired observations of a label (truth, Y) and a medium event (A). A tuple
/// medium is stored through its flattened joint index.
struct ExperimentRecord {
  std::vector<std::size_t> truth;
  std::vector<std::size_t> medium;
  std::size_t num_labels = 0;
  std::size_t num_medium_events = 0;

  void validate() const {
    if (truth.size() != medium.size()) throw ContractError("record: truth and medium lengths differ");
    for (std::size_t v : truth)
      if (v >= num_labels) throw ContractError("record: label index out of range");
    for (std::size_t v : medium)
      if (v >= num_medium_events) throw ContractError("record: medium index out of range");
  }
};

/// Exact counts #(Y, A), #(A) and n.
struct CountTable {
  std::vector<std::vector<long long>> joint;  // [label][medium]
  std::vector<long long> medium;              // [medium]
  long long n = 0;
};

inline CountTable tabulate(const ExperimentRecord& records) {
  records.validate();
  if (records.truth.empty()) throw ContractError("tabulate: empty record");
  CountTable t;
  t.joint.assign(records.num_labels, std::vector<long long>(records.num_medium_events, 0));
  t.medium.assign(records.num_medium_events, 0);
  for (std::size_t k = 0; k < records.truth.size(); ++k) {
    ++t.joint[records.truth[k]][records.medium[k]];
    ++t.medium[records.medium[k]];
  }
  t.n = static_cast<long long>(records.truth.size());
  return t;
}

/// Exact table P(row | column) indexed [row][column]; an empty optional marks
/// a column whose conditioning count is zero.
using ConditionalTable = std::vector<std::vector<std::optional<Rational>>>;

/// P(Y | A) = #(Y, A) / #(A).
inline ConditionalTable conditional(const CountTable& counts) {
  ConditionalTable out(counts.joint.size(), std::vector<std::optional<Rational>>(counts.medium.size()));
  for (std::size_t a = 0; a < counts.medium.size(); ++a) {
    if (counts.medium[a] == 0) continue;
    for (std::size_t y = 0; y < counts.joint.size(); ++y) out[y][a] = Rational(counts.joint[y][a], counts.medium[a]);
  }
  return out;
}

/// Generic cross tabulation P(target | condition) from two aligned sequences,
/// indexed [condition][target] (one row per conditioning value).
inline ConditionalTable conditional_rows(const std::vector<std::size_t>& condition,
                                         const std::vector<std::size_t>& target, std::size_t condition_values,
                                         std::size_t target_values) {
  if (condition.size() != target.size()) throw ContractError("conditional_rows: length mismatch");
  std::vector<std::vector<long long>> counts(condition_values, std::vector<long long>(target_values, 0));
  std::vector<long long> totals(condition_values, 0);
  for (std::size_t k = 0; k < condition.size(); ++k) {
    if (condition[k] >= condition_values || target[k] >= target_values) {
      throw ContractError("conditional_rows: index out of range");
    }
    ++counts[condition[k]][target[k]];
    ++totals[condition[k]];
  }
  ConditionalTable out(condition_values, std::vector<std::optional<Rational>>(target_values));
  for (std::size_t c = 0; c < condition_values; ++c) {
    if (totals[c] == 0) continue;
    for (std::size_t t = 0; t < target_values; ++t) out[c][t] = Rational(counts[c][t], totals[c]);
  }
  return out;
}

/// Marginal #(v)/n of one sequence.
inline std::vector<Rational> marginal(const std::vector<std::size_t>& values, std::size_t cardinality) {
  if (values.empty()) throw ContractError("marginal: empty sequence");
  std::vector<long long> counts(cardinality, 0);
  for (std::size_t v : values) {
    if (v >= cardinality) throw ContractError("marginal: index out of range");
    ++counts[v];
  }
  std::vector<Rational> out;
  for (long long c : counts) out.emplace_back(c, static_cast<long long>(values.size()));
  return out;
}

/// P^A(Y | X = x) = sum_a P(A = a | X = x) * P(Y | A = a). Medium events with
/// zero probability may have undefined conditionals; any other undefined cell
/// is a contract error.
inline std::vector<Rational> infer_via_medium(const std::vector<Rational>& medium_given_x,
                                              const ConditionalTable& label_given_medium) {
  if (label_given_medium.empty()) throw ContractError("infer_via_medium: empty conditional table");
  const std::size_t labels = label_given_medium.size();
  std::vector<Rational> out(labels, Rational(0));
  for (std::size_t a = 0; a < medium_given_x.size(); ++a) {
    if (medium_given_x[a] == 0) continue;
    for (std::size_t y = 0; y < labels; ++y) {
      const auto& cell = label_given_medium[y].at(a);
      if (!cell) throw ContractError("infer_via_medium: P(Y|A) undefined for a reachable medium event");
      out[y] += medium_given_x[a] * *cell;
    }
  }
  return out;
}

/// The ten recorded tosses of the coin game plus the unseen eleventh; index 0
/// is heads, 1 is tails. The child misrecords the fifth toss.
struct CoinToss {
  static constexpr std::size_t kHeads = 0;
  static constexpr std::size_t kTails = 1;

  static ExperimentRecord record() {
    ExperimentRecord r;
    r.truth = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    r.medium = {0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
    r.num_labels = 2;
    r.num_medium_events = 2;
    return r;
  }

  /// The adult records the truth, so Y equals the truth column.
  static const std::vector<std::size_t>& adult(const ExperimentRecord& r) { return r.truth; }
};

/// All tables of the coin game, exact.
struct CoinTossTables {
  std::vector<Rational> p_x;              // #(X)/n
  ConditionalTable p_y_given_x;           // [x][y]
  ConditionalTable p_a_given_x;           // [x][a]
  ConditionalTable p_y_given_a;           // [a][y]
  std::vector<std::vector<Rational>> p_y_given_x_via_a;  // [x][y]
};

inline CoinTossTables coin_toss_tables() {
  const auto rec = CoinToss::record();
  CoinTossTables t;
  t.p_x = marginal(rec.truth, 2);
  t.p_y_given_x = conditional_rows(rec.truth, CoinToss::adult(rec), 2, 2);
  t.p_a_given_x = conditional_rows(rec.truth, rec.medium, 2, 2);
  t.p_y_given_a = conditional_rows(rec.medium, CoinToss::adult(rec), 2, 2);
  const ConditionalTable y_given_a = conditional(tabulate(rec));  // [y][a]
  for (std::size_t x = 0; x < 2; ++x) {
    std::vector<Rational> a_given_x;
    for (const auto& cell : t.p_a_given_x[x]) a_given_x.push_back(*cell);
    t.p_y_given_x_via_a.push_back(infer_via_medium(a_given_x, y_given_a));
  }
  return t;
}

}  // namespace ipnn::classical
