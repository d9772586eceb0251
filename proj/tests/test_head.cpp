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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ipnn/head/audit.hpp"
#include "ipnn/head/independence.hpp"
#include "ipnn/head/inference.hpp"
#include "ipnn/head/snapshot.hpp"
#include "ipnn/numgrad/mlp.hpp"
#include "test_util.hpp"

namespace ipnn::head {
namespace {

using numgrad::Rng;
using numgrad::Shape;
using testing::random_simplex;
using testing::random_tensor;

EventProbs random_alphas(Rng& rng, const SplitShape& split, std::size_t batch) {
  std::vector<Tensor> a;
  for (std::size_t m : split.sizes()) a.push_back(random_simplex(rng, batch, m));
  return EventProbs::constant(std::move(a));
}

std::vector<std::size_t> random_labels(Rng& rng, std::size_t n, std::size_t m) {
  std::vector<std::size_t> y(n);
  for (auto& v : y) v = rng.below(m);
  return y;
}

// Nested-loop oracle for the joint of an arbitrary number of variables.
Tensor joint_oracle(const std::vector<Tensor>& alphas, const SplitShape& split) {
  const std::size_t batch = alphas[0].rows();
  Tensor out = Tensor::matrix(batch, split.joint_points());
  for (std::size_t k = 0; k < batch; ++k)
    for (std::size_t p = 0; p < split.joint_points(); ++p) {
      const auto ev = split.unflatten(p);
      double v = 1.0;
      for (std::size_t j = 0; j < ev.size(); ++j) v *= alphas[j].at(k, ev[j]);
      out.at(k, p) = v;
    }
  return out;
}

TEST(SplitShape, CountsOutputsAndPoints) {
  const SplitShape s({2, 3, 4});
  EXPECT_EQ(s.total_outputs(), 9u);
  EXPECT_EQ(s.joint_points(), 24u);
  EXPECT_EQ(s.offset(2), 5u);
  EXPECT_EQ(s.flatten({1, 2, 3}), 23u);
  EXPECT_EQ(s.flatten({1, 0, 0}), 12u);
  EXPECT_EQ(s.unflatten(23), (std::vector<std::size_t>{1, 2, 3}));
  for (std::size_t p = 0; p < 24; ++p) EXPECT_EQ(s.flatten(s.unflatten(p)), p);
}

TEST(SplitShape, RejectsInvalid) {
  EXPECT_THROW(SplitShape(std::vector<std::size_t>{}), ContractError);
  EXPECT_THROW(SplitShape({2, 0}), ContractError);
  EXPECT_THROW(SplitShape({4096, 4096, 2}), ContractError);
  EXPECT_NO_THROW(SplitShape({4096, 4096}));
  EXPECT_NO_THROW(SplitShape({1}));
}

TEST(SplitShape, CountSubJointSpaces) {
  EXPECT_EQ(count_sub_joint_spaces(SplitShape({3})), 1u);
  EXPECT_EQ(count_sub_joint_spaces(SplitShape({2, 2})), 3u);
  const SplitShape twelve(std::vector<std::size_t>(12, 2));
  std::size_t binomial_sum = 0, c = 1;
  for (std::size_t j = 1; j <= 12; ++j) {
    c = c * (12 - j + 1) / j;
    binomial_sum += c;
  }
  EXPECT_EQ(count_sub_joint_spaces(twelve), binomial_sum);
  EXPECT_EQ(binomial_sum, 4095u);
}

TEST(SplitSoftmax, Symmetric) {
  const auto a = split_softmax_values(Tensor::from_rows({{0, 0}}), SplitShape({2}));
  EXPECT_DOUBLE_EQ(a[0][0], 0.5);
  EXPECT_DOUBLE_EQ(a[0][1], 0.5);
}

TEST(SplitSoftmax, ClosedForm) {
  const auto a = split_softmax_values(Tensor::from_rows({{0, 0, std::log(3.0), 0}}), SplitShape({2, 2}));
  EXPECT_DOUBLE_EQ(a[0][0], 0.5);
  EXPECT_NEAR(a[1][0], 0.75, 1e-15);
  EXPECT_NEAR(a[1][1], 0.25, 1e-15);
}

TEST(SplitSoftmax, RowsNormalized) {
  Rng rng(2);
  const SplitShape s({2, 10});
  const auto a = split_softmax_values(random_tensor(rng, {30, 12}, -8, 8), s);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 30; ++k) {
      double sum = 0.0;
      for (double v : a[j].row(k)) sum += v;
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(SplitSoftmax, WidthMismatchThrows) {
  EXPECT_THROW(split_softmax(Var::constant(Tensor::matrix(1, 5)), SplitShape({2, 2})), ShapeError);
}

TEST(Joint, UniformAndOneHot) {
  const Tensor u = joint_event_probs_values({Tensor::from_rows({{0.5, 0.5}}), Tensor::from_rows({{0.5, 0.5}})});
  EXPECT_EQ(u.storage(), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  const Tensor o = joint_event_probs_values({Tensor::from_rows({{1, 0}}), Tensor::from_rows({{0, 1}})});
  EXPECT_EQ(o.storage(), (std::vector<double>{0, 1, 0, 0}));
}

TEST(Joint, MatchesNestedLoopOracle) {
  Rng rng(3);
  for (const auto& sizes : {std::vector<std::size_t>{2, 3, 4}, {5, 1, 2}, {3}, {2, 2, 2, 2, 2}}) {
    const SplitShape s(sizes);
    const auto alphas = random_alphas(rng, s, 7).values();
    const Tensor got = joint_event_probs_values(alphas);
    const Tensor want = joint_oracle(alphas, s);
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(Joint, GradientMatchesFiniteDifference) {
  Rng rng(4);
  const SplitShape s({2, 3, 2});
  Var logits = Var::parameter(random_tensor(rng, {4, 7}, -2, 2));
  const Tensor w = random_tensor(rng, {4, 12});
  std::vector<Var> params{logits};
  auto loss = [&] { return numgrad::sum(numgrad::mul(joint_event_probs(split_softmax(logits, s)), Var::constant(w))); };
  EXPECT_LE(testing::gradient_check(params, loss), 1.0);
}

TEST(Joint, GradientWithZeroProbabilities) {
  // Products that skip a zero factor must still propagate gradients.
  Var a = Var::parameter(Tensor::from_rows({{0.0, 1.0}}));
  Var b = Var::parameter(Tensor::from_rows({{0.3, 0.7}}));
  Var loss = numgrad::sum(numgrad::mul(joint_event_probs(EventProbs{{a, b}}),
                                       Var::constant(Tensor::from_rows({{1, 2, 3, 4}}))));
  numgrad::backward(loss);
  EXPECT_NEAR(a.grad()[0], 0.3 * 1 + 0.7 * 2, 1e-15);
  EXPECT_NEAR(a.grad()[1], 0.3 * 3 + 0.7 * 4, 1e-15);
  EXPECT_NEAR(b.grad()[0], 3.0, 1e-15);
  EXPECT_NEAR(b.grad()[1], 4.0, 1e-15);
}

TEST(SubJoint, AllVariablesIsTheJoint) {
  Rng rng(5);
  const SplitShape s({2, 3});
  const auto p = random_alphas(rng, s, 5);
  EXPECT_EQ(sub_joint_marginalize(p, {0, 1}).value().storage(), joint_event_probs(p).value().storage());
  EXPECT_EQ(sub_joint_marginalize(p, {1}).value().storage(), p.alphas[1].value().storage());
}

TEST(SubJoint, EqualsSummingOutDroppedVariables) {
  Rng rng(6);
  const SplitShape s({2, 3, 2});
  const auto p = random_alphas(rng, s, 6);
  const Tensor full = joint_event_probs(p).value();
  const Tensor sub = sub_joint_marginalize(p, {2, 0}).value();  // variable 2 slowest
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t e2 = 0; e2 < 2; ++e2)
      for (std::size_t e0 = 0; e0 < 2; ++e0) {
        double want = 0.0;
        for (std::size_t e1 = 0; e1 < 3; ++e1) want += full.at(k, s.flatten({e0, e1, e2}));
        EXPECT_NEAR(sub.at(k, e2 * 2 + e0), want, 1e-9);
      }
}

TEST(SubJoint, SplitTwoThree) {
  Rng rng(7);
  const SplitShape s({2, 3});
  const auto p = random_alphas(rng, s, 4);
  const Tensor full = joint_event_probs(p).value();
  const Tensor sub = sub_joint_marginalize(p, {1}).value();
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t e = 0; e < 3; ++e) EXPECT_NEAR(sub.at(k, e), full.at(k, e) + full.at(k, 3 + e), 1e-12);
}

TEST(SubJoint, BadSubsets) {
  Rng rng(8);
  const auto p = random_alphas(rng, SplitShape({2, 3}), 2);
  EXPECT_THROW(sub_joint_marginalize(p, {2}), std::out_of_range);
  EXPECT_THROW(sub_joint_marginalize(p, {}), ContractError);
  EXPECT_THROW(sub_joint_marginalize(p, {1, 1}), ContractError);
}

TEST(BatchStatistics, SingleSample) {
  const auto s = batch_statistics(Tensor::from_rows({{0.25, 0.25, 0.25, 0.25}}), Tensor::from_rows({{1, 0, 0}}));
  EXPECT_EQ(s.g.storage(), (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  for (std::size_t p = 0; p < 4; ++p) {
    EXPECT_EQ(s.h.at(0, p), 0.25);
    EXPECT_EQ(s.h.at(1, p), 0.0);
    EXPECT_EQ(s.h.at(2, p), 0.0);
  }
}

TEST(BatchStatistics, OneHotJointsCount) {
  const Tensor joint = Tensor::from_rows({{0, 1, 0}, {0, 1, 0}, {1, 0, 0}});
  const auto s = batch_statistics(joint, std::vector<std::size_t>{0, 1, 1}, 2);
  EXPECT_EQ(s.g.storage(), (std::vector<double>{1, 2, 0}));
  EXPECT_EQ(s.h.storage(), (std::vector<double>{0, 1, 0, 1, 1, 0}));
}

TEST(BatchStatistics, LabelRowsSumToG) {
  Rng rng(9);
  const SplitShape s({3, 4});
  const Tensor joint = joint_event_probs(random_alphas(rng, s, 20)).value();
  const auto st = batch_statistics(joint, random_labels(rng, 20, 5), 5);
  for (std::size_t p = 0; p < 12; ++p) {
    double sum = 0.0;
    for (std::size_t l = 0; l < 5; ++l) sum += st.h.at(l, p);
    EXPECT_NEAR(sum, st.g[p], 1e-12);
  }
}

TEST(BatchStatistics, RejectsNonOneHot) {
  EXPECT_THROW(batch_statistics(Tensor::from_rows({{1.0}}), Tensor::from_rows({{0.5, 0.5}})), ContractError);
  EXPECT_THROW(batch_statistics(Tensor::from_rows({{1.0}}), Tensor::from_rows({{1, 1}})), ContractError);
  EXPECT_THROW(batch_statistics(Tensor::from_rows({{1.0}}), Tensor::from_rows({{0, 0}})), ContractError);
}

TEST(Accumulator, FullForgettingWithTOne) {
  JointAccumulator acc(SplitShape({2}), 1, 1, 1e-6);
  acc.push(Tensor::from_rows({{1, 2}}), Tensor(Shape{2}, {1, 2}));
  acc.push(Tensor::from_rows({{3, 5}}), Tensor(Shape{2}, {3, 5}));
  EXPECT_EQ(acc.G().storage(), (std::vector<double>{3, 5}));
  EXPECT_EQ(acc.ring().size(), 1u);
}

TEST(Accumulator, MatchesRecomputeFromScratch) {
  Rng rng(10);
  const SplitShape s({2, 3});
  for (std::size_t T : {1, 2, 3, 7, 100}) {
    JointAccumulator acc(s, 4, T, 1e-6);
    std::vector<BatchStatistics> all;
    for (int t = 0; t < 12; ++t) {
      const Tensor joint = joint_event_probs(random_alphas(rng, s, 5)).value();
      all.push_back(batch_statistics(joint, random_labels(rng, 5, 4), 4));
      acc.push(all.back());
      Tensor H = Tensor::matrix(4, 6), G(Shape{6});
      const std::size_t from = all.size() > T ? all.size() - T : 0;
      for (std::size_t i = from; i < all.size(); ++i) {
        H += all[i].h;
        G += all[i].g;
      }
      for (std::size_t i = 0; i < H.size(); ++i) EXPECT_NEAR(acc.H()[i], H[i], 1e-9);
      for (std::size_t i = 0; i < G.size(); ++i) EXPECT_NEAR(acc.G()[i], G[i], 1e-9);
      EXPECT_LE(acc.ring().size(), T);
      for (double v : acc.H().values()) EXPECT_GE(v, 0.0);
    }
  }
}

TEST(Accumulator, ThirdUpdateWithTTwo) {
  JointAccumulator acc(SplitShape({2}), 1, 2, 1e-6);
  const double g[3][2] = {{0.1, 0.9}, {0.3, 0.7}, {0.6, 0.4}};
  for (const auto& gi : g) acc.push(Tensor::from_rows({{gi[0], gi[1]}}), Tensor(Shape{2}, {gi[0], gi[1]}));
  EXPECT_NEAR(acc.G()[0], 0.9, 1e-12);
  EXPECT_NEAR(acc.G()[1], 1.1, 1e-12);
}

TEST(Accumulator, EmptyConditionalIsOne) {
  JointAccumulator acc(SplitShape({2, 2}), 3, 5, 1e-6);
  const Tensor c = acc.conditional(Tensor::matrix(3, 4), Tensor(Shape{4}));
  for (double v : c.values()) EXPECT_EQ(v, 1.0);
}

TEST(Accumulator, SingleClassStreamIsCertain) {
  Rng rng(11);
  const SplitShape s({3});
  JointAccumulator acc(s, 2, 5, 1e-6);
  for (int t = 0; t < 4; ++t) {
    const Tensor joint = joint_event_probs(random_alphas(rng, s, 8)).value();
    auto st = batch_statistics(joint, std::vector<std::size_t>(8, 1), 2);
    const Tensor c = acc.conditional(st.h, st.g);
    for (std::size_t p = 0; p < 3; ++p) EXPECT_DOUBLE_EQ(c.at(1, p), 1.0);
    acc.push(std::move(st));
  }
}

TEST(Accumulator, RejectsBadArguments) {
  EXPECT_THROW(JointAccumulator(SplitShape({2}), 0, 5, 1e-6), ContractError);
  EXPECT_THROW(JointAccumulator(SplitShape({2}), 2, 0, 1e-6), ContractError);
  EXPECT_THROW(JointAccumulator(SplitShape({2}), 2, 5, 0.0), ContractError);
  JointAccumulator acc(SplitShape({2}), 2, 5, 1e-6);
  EXPECT_THROW(acc.push(Tensor::matrix(2, 3), Tensor(Shape{3})), ShapeError);
}

TEST(ExactObservation, CoinTossObservationTable) {
  // A is the medium with one-hot events; labels are the true outcomes.
  const std::vector<std::size_t> medium{0, 0, 0, 0, 1, 1, 1, 1, 1, 1};
  const std::vector<std::size_t> truth{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const Tensor alphas = one_hot(medium, 2);
  const auto obs = exact_observation(std::vector<Tensor>{alphas}, one_hot(truth, 2));
  EXPECT_TRUE(obs.supported[0] && obs.supported[1]);
  EXPECT_DOUBLE_EQ(obs.conditional.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(obs.conditional.at(0, 1), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(obs.conditional.at(1, 1), 5.0 / 6.0);
}

TEST(ExactObservation, ZeroMassPointsAreUndefined) {
  const auto obs = exact_observation(Tensor::from_rows({{1, 0, 0}, {0, 1, 0}}), std::vector<std::size_t>{0, 1}, 2);
  EXPECT_EQ(obs.supported, (std::vector<bool>{true, true, false}));
  EXPECT_EQ(obs.conditional.at(0, 2), 0.0);
}

TEST(ExactObservation, StreamingAgreesWithoutForgetting) {
  Rng rng(12);
  const SplitShape s({2, 3});
  std::vector<Tensor> joints;
  std::vector<std::size_t> labels;
  JointAccumulator acc(s, 3, 1000, 1e-300);
  Tensor cond;
  for (int t = 0; t < 6; ++t) {
    joints.push_back(joint_event_probs(random_alphas(rng, s, 9)).value());
    const auto y = random_labels(rng, 9, 3);
    labels.insert(labels.end(), y.begin(), y.end());
    auto st = batch_statistics(joints.back(), y, 3);
    cond = acc.conditional(st.h, st.g);
    acc.push(std::move(st));
  }
  Tensor all = Tensor::matrix(labels.size(), 6);
  for (std::size_t b = 0; b < joints.size(); ++b)
    std::copy(joints[b].values().begin(), joints[b].values().end(), all.data() + b * 9 * 6);
  const auto obs = exact_observation(all, labels, 3);
  for (std::size_t i = 0; i < cond.size(); ++i) EXPECT_NEAR(cond[i], obs.conditional[i], 1e-9);
}

TEST(Posterior, CoinTossInferenceTable) {
  const Tensor cond = Tensor::from_rows({{1.0, 1.0 / 6}, {0.0, 5.0 / 6}});
  const Tensor joint = Tensor::from_rows({{0.8, 0.2}, {0.0, 1.0}});
  const Tensor post = posterior_values(cond, joint);
  EXPECT_NEAR(post.at(0, 0), 5.0 / 6, 1e-15);
  EXPECT_NEAR(post.at(0, 1), 1.0 / 6, 1e-15);
  EXPECT_NEAR(post.at(1, 0), 1.0 / 6, 1e-15);
  EXPECT_EQ(predict(post)[0], 0u);
}

TEST(Posterior, AllOnesForOneClass) {
  const Tensor cond = Tensor::from_rows({{0, 0, 0}, {1, 1, 1}});
  const Tensor post = posterior_values(cond, Tensor::from_rows({{0.2, 0.3, 0.5}}));
  EXPECT_DOUBLE_EQ(post.at(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(post.at(0, 0), 0.0);
}

TEST(Posterior, AtLabelsMatchesGather) {
  Rng rng(13);
  const SplitShape s({3, 2});
  const Tensor cond = random_tensor(rng, {4, 6}, 0, 1);
  const EventProbs p = random_alphas(rng, s, 10);
  const Var joint = joint_event_probs(p);
  const auto y = random_labels(rng, 10, 4);
  const Tensor a = posterior_at_labels(cond, joint, y).value();
  const Tensor b = gather_labels(posterior(cond, joint), y).value();
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(a[k], b[k], 1e-15);
}

TEST(Posterior, ShapeMismatchThrows) {
  EXPECT_THROW(posterior_values(Tensor::matrix(2, 3), Tensor::matrix(1, 4)), ShapeError);
}

TEST(Predict, ArgmaxWithLowestIndexTies) {
  EXPECT_EQ(predict(Tensor::from_rows({{0.1, 0.7, 0.2}}))[0], 1u);
  EXPECT_EQ(predict(Tensor::from_rows({{0.5, 0.5}}))[0], 0u);
  EXPECT_EQ(predict(Tensor::from_rows({{0.2, 0.4, 0.4}}))[0], 1u);
}

TEST(Predict, ScaleInvariant) {
  Rng rng(14);
  for (int t = 0; t < 100; ++t) {
    Tensor row = random_tensor(rng, {1, 6}, 0, 1);
    const auto want = predict(row)[0];
    row *= rng.uniform(0.01, 100.0);
    EXPECT_EQ(predict(row)[0], want);
  }
}

TEST(CrossEntropy, ZeroAndLnTwo) {
  EXPECT_DOUBLE_EQ(cross_entropy_loss(Var::constant(Tensor::from_rows({{1, 0}})), one_hot({0}, 2)).value().item(), 0.0);
  EXPECT_NEAR(cross_entropy_loss(Var::constant(Tensor::from_rows({{0.5, 0.5}})), one_hot({1}, 2)).value().item(),
              std::log(2.0), 1e-15);
  EXPECT_NEAR(cross_entropy_loss(Var::constant(Tensor::from_rows({{1, 0}})), one_hot({1}, 2)).value().item(),
              -std::log(1e-12), 1e-9);
}

TEST(CrossEntropy, FirstSampleIsCertain) {
  // Empty history, batch of one: H+h and G+g hold only the sample itself.
  Rng rng(15);
  const SplitShape s({2, 3});
  JointAccumulator acc(s, 4, 5, 1e-6);
  const EventProbs p = random_alphas(rng, s, 1);
  const Var joint = joint_event_probs(p);
  auto st = batch_statistics(joint.value(), std::vector<std::size_t>{2}, 4);
  const Tensor cond = acc.conditional(st.h, st.g);
  EXPECT_NEAR(posterior_values(cond, joint.value()).at(0, 2), 1.0, 1e-12);
  EXPECT_NEAR(mean_negative_log(posterior_at_labels(cond, joint, {2})).value().item(), 0.0, 1e-12);
}

TEST(CrossEntropy, GradientThroughHeadWithFrozenConditional) {
  Rng rng(16);
  const SplitShape s({2, 3});
  numgrad::Mlp mlp({4, 5, s.total_outputs()}, -0.5, 0.5, rng);
  const Tensor x = random_tensor(rng, {6, 4});
  const auto y = random_labels(rng, 6, 3);
  const Tensor cond = random_tensor(rng, {3, 6}, 0.05, 1);
  auto loss = [&] {
    const Var joint = joint_event_probs(split_softmax(mlp.forward(Var::constant(x)), s));
    return mean_negative_log(posterior_at_labels(cond, joint, y));
  };
  EXPECT_LE(testing::gradient_check(mlp.parameters(), loss), 1.0);
}

TEST(MultiDegreeLoss, EdgeCases) {
  EXPECT_EQ(multi_degree_loss({}, {}).value().item(), 0.0);
  EXPECT_EQ(multi_degree_loss({Var::constant(Tensor::from_rows({{0, 1}}))}, {one_hot({1}, 2)}).value().item(), 0.0);
  EXPECT_THROW(multi_degree_loss({}, {one_hot({1}, 2)}), ContractError);
  const Var two = multi_degree_loss({Var::constant(Tensor::from_rows({{0.5, 0.5}})),
                                     Var::constant(Tensor::from_rows({{0.25, 0.75}}))},
                                    {one_hot({0}, 2), one_hot({0}, 2)});
  EXPECT_NEAR(two.value().item(), std::log(2.0) + std::log(4.0), 1e-15);
}

TEST(Independence, ZeroOnProductForm) {
  const EventProbs p = EventProbs::constant(
      {Tensor::from_rows({{0.3, 0.7}, {0.3, 0.7}}), Tensor::from_rows({{0.1, 0.5, 0.4}, {0.1, 0.5, 0.4}})});
  EXPECT_NEAR(mutual_independence_loss(p).value().item(), 0.0, 1e-12);
}

TEST(Independence, HandComputedCorrelatedBatch) {
  // Two samples with opposite one-hot-ish alphas: joint mass sits on the
  // diagonal while the marginals are uniform.
  const EventProbs p = EventProbs::constant(
      {Tensor::from_rows({{0.9, 0.1}, {0.1, 0.9}}), Tensor::from_rows({{0.8, 0.2}, {0.2, 0.8}})});
  const double q00 = (0.9 * 0.8 + 0.1 * 0.2) / 2, q01 = (0.9 * 0.2 + 0.1 * 0.8) / 2;
  const double q10 = (0.1 * 0.8 + 0.9 * 0.2) / 2, q11 = (0.1 * 0.2 + 0.9 * 0.8) / 2;
  const double r = 0.25;
  const double want = q00 * std::log(q00 / r) + q01 * std::log(q01 / r) + q10 * std::log(q10 / r) +
                      q11 * std::log(q11 / r);
  EXPECT_NEAR(mutual_independence_loss(p).value().item(), want, 1e-12);
}

TEST(Independence, NonNegativeAndDifferentiable) {
  Rng rng(17);
  const SplitShape s({2, 3});
  for (int t = 0; t < 200; ++t) {
    EXPECT_GE(mutual_independence_loss(random_alphas(rng, s, 5)).value().item(), -1e-12);
  }
  Var logits = Var::parameter(random_tensor(rng, {5, 5}, -2, 2));
  std::vector<Var> params{logits};
  auto loss = [&] { return mutual_independence_loss(split_softmax(logits, s)); };
  EXPECT_LE(testing::gradient_check(params, loss), 1.0);
}

TEST(Audit, ConvergedToyIsPure) {
  const SplitShape s({2, 2});
  const Tensor joint = one_hot({0, 1, 2, 3, 0, 3}, 4);
  const auto obs = exact_observation(joint, std::vector<std::size_t>{1, 0, 2, 2, 1, 2}, 3);
  const auto r = convergence_audit(s, obs, 0.1);
  EXPECT_EQ(r.supported_points, 4u);
  EXPECT_EQ(r.pure_points, 4u);
  EXPECT_EQ(r.min_purity, 1.0);
  EXPECT_TRUE(r.capacity_ok);
}

TEST(Audit, FlagsCapacityAndImpurePoints) {
  const SplitShape s({2});
  const auto obs = exact_observation(one_hot({0, 0, 1}, 2), std::vector<std::size_t>{0, 1, 2}, 3);
  const auto r = convergence_audit(s, obs, 0.1);
  EXPECT_FALSE(r.capacity_ok);
  EXPECT_EQ(r.impure_points, (std::vector<std::size_t>{0}));
  EXPECT_DOUBLE_EQ(r.pure_fraction(), 0.5);
}

TEST(Audit, SupportThresholdIsAShareOfMass) {
  const SplitShape s({4});
  // Point 3 holds 1% of the mass and is impure; below a 5% threshold it is ignored.
  Tensor joint = Tensor::matrix(100, 4);
  std::vector<std::size_t> y(100, 0);
  for (std::size_t k = 0; k < 99; ++k) joint.at(k, k % 3) = 1.0;
  joint.at(99, 3) = 0.5;
  joint.at(99, 0) = 0.5;
  y[99] = 1;
  const auto obs = exact_observation(joint, y, 2);
  EXPECT_EQ(convergence_audit(s, obs, 0.05).supported_points, 3u);
  EXPECT_EQ(convergence_audit(s, obs, 0.001).supported_points, 4u);
}

TEST(Snapshot, RoundTripsExactly) {
  Rng rng(18);
  const SplitShape s({2, 3});
  JointAccumulator acc(s, 4, 3, 0.5);
  for (int t = 0; t < 5; ++t) {
    const Tensor joint = joint_event_probs(random_alphas(rng, s, 5)).value();
    acc.push(batch_statistics(joint, random_labels(rng, 5, 4), 4));
  }
  std::stringstream buf;
  write_snapshot(buf, acc);
  const JointAccumulator back = read_snapshot(buf);
  EXPECT_EQ(back.split(), s);
  EXPECT_EQ(back.num_labels(), 4u);
  EXPECT_EQ(back.forget_number(), 3u);
  EXPECT_EQ(back.epsilon(), 0.5);
  EXPECT_EQ(back.H().storage(), acc.H().storage());
  EXPECT_EQ(back.G().storage(), acc.G().storage());
  ASSERT_EQ(back.ring().size(), 3u);
  EXPECT_EQ(back.ring()[2].first.storage(), acc.ring()[2].first.storage());

  std::stringstream totals;
  write_snapshot(totals, acc, false);
  EXPECT_EQ(read_snapshot(totals).ring().size(), 0u);
}

TEST(Snapshot, LayoutIsLittleEndian) {
  JointAccumulator acc(SplitShape({2}), 1, 1, 1.0);
  std::stringstream buf;
  write_snapshot(buf, acc);
  const std::string bytes = buf.str();
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(bytes[0], 1);  // one variable
  EXPECT_EQ(bytes[8], 2);  // M_1 = 2
  EXPECT_EQ(bytes.size(), 8u * (1 + 1 + 1 + 1 + 1 + 1 + 2 + 2));
}

TEST(Snapshot, TruncatedInputThrows) {
  JointAccumulator acc(SplitShape({2, 2}), 2, 2, 1e-6);
  std::stringstream buf;
  write_snapshot(buf, acc);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 3);
  std::stringstream cut(bytes);
  EXPECT_THROW(read_snapshot(cut), SnapshotError);
}

}  // namespace
}  // namespace ipnn::head
