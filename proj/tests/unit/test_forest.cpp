// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "prbench/backends.hpp"
#include "prbench/evalharness.hpp"
#include "prbench/forest.hpp"
#include "prbench/rng.hpp"
#include "test_util.hpp"

namespace prbench {
namespace {

using test::conv1d;

ParamBounds small_bounds() {
  ParamBounds b{OpKind::Conv1D, {}};
  b.ranges = {{"C", {1, 56, 16}}, {"C_w", {16, 32, 24}}, {"K", {1, 56, 16}},
              {"F", {1, 3, 3}},   {"s", {1, 1, 1}},      {"pad", {0, 0, 0}}};
  return b;
}

PrLattice small_lattice() { return make_lattice(OpKind::Conv1D, {{"C", 8}, {"K", 8}}, small_bounds()); }

SyntheticOracle staircase_oracle() {
  SyntheticOracleConfig c;
  c.widths = {{"C", 8}, {"K", 8}};
  c.clock_hz = 250e6;
  c.base_cycles = 100.0;
  return SyntheticOracle(c);
}

std::vector<TrainingSample> measured(const std::vector<LayerConfig>& configs, const SyntheticOracle& oracle) {
  std::vector<TrainingSample> out;
  for (const auto& c : configs) out.push_back({c, oracle.latency(c)});
  return out;
}

ForestHyperparams memorizing(int n_trees = 5) {
  ForestHyperparams hp;
  hp.n_trees = n_trees;
  hp.bootstrap = false;
  hp.feature_subsample = 1.0;
  hp.seed = 3;
  return hp;
}

// Walks the node array directly, independent of RegressionTree::predict.
double traverse(const RegressionTree& tree, const std::vector<double>& x) {
  int i = 0;
  while (tree.nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(i)].value;
}

TEST(Features, Encodings) {
  const auto c = conv1d(8, 10, 4, 3);
  const auto v1 = encode_features(c, 1);
  EXPECT_EQ(v1, (std::vector<double>{8, 10, 4, 3, 1, 0}));
  const auto v2 = encode_features(c, 2);
  ASSERT_EQ(v2.size(), 8u);
  EXPECT_EQ(v2[6], static_cast<double>(mac_count(c)));
  EXPECT_EQ(v2[7], 8.0);  // output extent 1 x 8
  EXPECT_EQ(feature_names(OpKind::Conv1D, 2).size(), 8u);
  EXPECT_PRBENCH_ERROR(encode_features(c, 9), EncodingVersionMismatch);
}

TEST(Fit, DuplicatedConfigGivesConstantModel) {
  const std::vector<TrainingSample> s(4, TrainingSample{conv1d(8, 16, 8, 3), 0.125});
  const auto m = fit(s, ForestHyperparams{});
  for (const auto& t : m.trees) EXPECT_EQ(t.leaf_count(), 1u);
  EXPECT_EQ(predict(m, conv1d(8, 16, 8, 3)), 0.125);
  EXPECT_EQ(predict(m, conv1d(56, 32, 56, 1)), 0.125);
}

TEST(Fit, MemorizesDistinctSamples) {
  const auto lattice = small_lattice();
  const auto configs = sample(lattice, 300, 5);
  const auto samples = measured(configs, staircase_oracle());
  const auto m = fit(samples, memorizing());
  for (const auto& s : samples) EXPECT_EQ(predict(m, s.config), s.latency) << to_string(s.config);
}

TEST(Fit, Errors) {
  const std::vector<TrainingSample> one{{conv1d(8, 16, 8, 3), 1.0}};
  EXPECT_PRBENCH_ERROR(fit(one, ForestHyperparams{}), InsufficientData);
  const std::vector<TrainingSample> mixed{{conv1d(8, 16, 8, 3), 1.0}, {test::fc(1, 2, 2), 1.0}};
  EXPECT_PRBENCH_ERROR(fit(mixed, ForestHyperparams{}), KindMismatch);
  const std::vector<TrainingSample> zero{{conv1d(8, 16, 8, 3), 1.0}, {conv1d(16, 16, 8, 3), 0.0}};
  EXPECT_PRBENCH_ERROR(fit(zero, ForestHyperparams{}), InvalidArgument);
  ForestHyperparams hp;
  hp.feature_subsample = 0.0;
  EXPECT_PRBENCH_ERROR(validate(hp), InvalidArgument);
  hp = {};
  hp.n_trees = 0;
  EXPECT_PRBENCH_ERROR(validate(hp), InvalidArgument);
}

class TrainedForest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto configs = sample_random_full_space(small_bounds(), 400, 11);
    samples_ = measured(configs, staircase_oracle());
    ForestHyperparams hp;
    hp.n_trees = 20;
    hp.seed = 99;
    model_ = fit(samples_, hp);
  }
  std::vector<TrainingSample> samples_;
  LatencyModel model_;
};

TEST_F(TrainedForest, PredictIsMeanOfTreeTraversals) {
  for (const auto& c : sample_random_full_space(small_bounds(), 50, 12)) {
    const auto x = encode_features(c);
    double sum = 0.0;
    for (const auto& t : model_.trees) sum += traverse(t, x);
    EXPECT_NEAR(predict(model_, c), sum / static_cast<double>(model_.trees.size()), 1e-15);
  }
}

TEST_F(TrainedForest, SerializeRoundTripIsExact) {
  const auto text = serialize(model_);
  const auto back = deserialize(text);
  EXPECT_EQ(serialize(back), text);
  for (const auto& c : sample_random_full_space(small_bounds(), 100, 13)) EXPECT_EQ(predict(back, c), predict(model_, c));
}

TEST_F(TrainedForest, CorruptInputs) {
  const auto text = serialize(model_);
  EXPECT_PRBENCH_ERROR(deserialize(text.substr(0, text.size() / 2)), CorruptModel);
  EXPECT_PRBENCH_ERROR(deserialize("{}"), CorruptModel);
  auto j = json::parse(text);
  j["format_version"] = "2.0";
  EXPECT_PRBENCH_ERROR(deserialize(j.dump()), VersionMismatch);
  j = json::parse(text);
  j["trees"][0]["nodes"][0] = json::array({0, 1.5, 0, 0, 1.0});
  EXPECT_PRBENCH_ERROR(deserialize(j.dump()), CorruptModel);
  j = json::parse(text);
  j["trees"] = json::array();
  EXPECT_PRBENCH_ERROR(deserialize(j.dump()), CorruptModel);
}

TEST_F(TrainedForest, DeterministicAcrossRunsAndThreads) {
  ForestHyperparams hp;
  hp.n_trees = 20;
  hp.seed = 99;
  EXPECT_EQ(serialize(fit(samples_, hp)), serialize(model_));
  hp.threads = 4;
  EXPECT_EQ(serialize(fit(samples_, hp)), serialize(model_));
  hp.threads = 1;
  hp.seed = 100;
  EXPECT_NE(serialize(fit(samples_, hp)), serialize(model_));
}

TEST_F(TrainedForest, PredictionsStayInTargetRange) {
  double lo = samples_.front().latency;
  double hi = lo;
  for (const auto& s : samples_) {
    lo = std::min(lo, s.latency);
    hi = std::max(hi, s.latency);
  }
  ParamBounds wide = small_bounds();
  wide.ranges["C_w"] = {16, 128, 24};
  wide.ranges["F"] = {1, 9, 3};
  for (const auto& c : sample_random_full_space(wide, 300, 14)) {
    const double p = predict(model_, c);
    EXPECT_GE(p, lo);
    EXPECT_LE(p, hi);
  }
}

TEST_F(TrainedForest, PredictErrors) {
  EXPECT_PRBENCH_ERROR(predict(model_, test::fc(1, 4, 4)), KindMismatch);
  auto m = model_;
  m.encoding = 7;
  EXPECT_PRBENCH_ERROR(predict(m, samples_.front().config), EncodingVersionMismatch);
  m = model_;
  m.trees.clear();
  EXPECT_PRBENCH_ERROR(predict(m, samples_.front().config), CorruptModel);
}

// Routes the training set through every split and checks that the children's
// summed squared error never exceeds the parent's.
TEST(Fit, SplitsReduceVariance) {
  const auto configs = sample_random_full_space(small_bounds(), 300, 21);
  const auto samples = measured(configs, staircase_oracle());
  ForestHyperparams hp;
  hp.n_trees = 5;
  hp.bootstrap = false;
  hp.seed = 8;
  const auto m = fit(samples, hp);
  const auto sse = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double y : v) mean += y;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double y : v) s += (y - mean) * (y - mean);
    return s;
  };
  for (const auto& tree : m.trees) {
    std::vector<std::vector<std::size_t>> at(tree.nodes.size());
    for (std::size_t i = 0; i < samples.size(); ++i) at[0].push_back(i);
    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
      const auto& node = tree.nodes[n];
      if (node.feature < 0) continue;
      std::vector<double> parent, left, right;
      for (auto i : at[n]) {
        const auto x = encode_features(samples[i].config);
        const bool go_left = x[static_cast<std::size_t>(node.feature)] <= node.threshold;
        at[static_cast<std::size_t>(go_left ? node.left : node.right)].push_back(i);
        parent.push_back(samples[i].latency);
        (go_left ? left : right).push_back(samples[i].latency);
      }
      ASSERT_FALSE(left.empty());
      ASSERT_FALSE(right.empty());
      EXPECT_LE(sse(left) + sse(right), sse(parent) * (1 + 1e-12) + 1e-30);
    }
  }
}

TEST(EstimateLayer, StepwiseAndOracleExact) {
  const auto lattice = small_lattice();
  const auto oracle = staircase_oracle();
  const auto all = sample(lattice, enumerate_count(lattice), 1);
  const auto m = fit(measured(all, oracle), memorizing(3), lattice);
  ASSERT_TRUE(m.lattice.has_value());
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    const auto c = conv1d(rng.between(1, 56), rng.between(16, 32), rng.between(1, 56), rng.between(1, 3));
    const auto pr = map_to_pr(c, lattice).config;
    EXPECT_EQ(estimate_layer(m, c), predict(m, pr));
    EXPECT_EQ(estimate_layer(m, c), oracle.latency(pr));
    EXPECT_EQ(estimate_layer(m, c), estimate_layer(m, pr));
  }
}

TEST(EstimateLayer, WithoutLatticeEqualsPredict) {
  const auto samples = measured(sample_random_full_space(small_bounds(), 50, 2), staircase_oracle());
  const auto m = fit(samples, ForestHyperparams{});
  const auto c = conv1d(13, 20, 17, 2);
  EXPECT_EQ(estimate_layer(m, c), predict(m, c));
}

TEST(Fit, StaircaseFromTwoHundredRepresentatives) {
  auto bounds = small_bounds();
  bounds.ranges["C_w"] = {16, 24, 20};
  bounds.ranges["F"] = {3, 3, 3};
  const auto lattice = make_lattice(OpKind::Conv1D, {{"C", 8}, {"K", 8}}, bounds);
  // A fixed per-layer overhead keeps the first tile steps from dominating
  // the relative error.
  SyntheticOracleConfig oc = staircase_oracle().config();
  oc.base_cycles = 1000.0;
  const SyntheticOracle oracle(oc);
  const auto train = sample(lattice, 200, 31);
  const std::set<LayerConfig> seen(train.begin(), train.end());
  ForestHyperparams hp;
  hp.feature_subsample = 1.0;
  hp.seed = 5;
  const auto m = fit(measured(train, oracle), hp, lattice);
  std::vector<double> truth, est;
  for (const auto& c : sample(lattice, enumerate_count(lattice), 32)) {
    if (seen.contains(c)) continue;
    truth.push_back(oracle.latency(c));
    est.push_back(estimate_layer(m, c));
  }
  ASSERT_GT(truth.size(), 100u);
  EXPECT_LT(mape(truth, est), 1.0);
}

}  // namespace
}  // namespace prbench
