// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "prbench/backends.hpp"
#include "prbench/prset.hpp"
#include "prbench/rng.hpp"
#include "test_util.hpp"

namespace prbench {
namespace {

using test::conv1d;

ParamBounds ultratrail_bounds() {
  ParamBounds b{OpKind::Conv1D, {}};
  b.ranges = {{"C", {1, 56, 16}}, {"C_w", {32, 32, 32}}, {"K", {1, 56, 16}},
              {"F", {3, 3, 3}},   {"s", {1, 1, 1}},      {"pad", {0, 0, 0}}};
  return b;
}

PrLattice ultratrail_lattice() {
  return make_lattice(OpKind::Conv1D, {{"C", 8}, {"K", 8}}, ultratrail_bounds());
}

TEST(Derive, FromDescription) {
  const HardwareDescription d{OpKind::Conv1D, {"C", "C_w", "K", "F", "s", "pad"}, {8, 8}, {"C", "K"}};
  const auto l = derive_from_description(d, ultratrail_bounds());
  EXPECT_EQ(l.width("C"), 8);
  EXPECT_EQ(l.width("K"), 8);
  EXPECT_EQ(l.width("C_w"), 1);
  EXPECT_EQ(l.width("F"), 1);
}

TEST(Derive, GemmTiling) {
  const HardwareDescription d{OpKind::FullyConnected, {"batch", "in", "out"}, {16, 16}, {"in", "out"}};
  const auto l = derive_from_description(d, default_bounds(OpKind::FullyConnected));
  EXPECT_EQ(l.width("in"), 16);
  EXPECT_EQ(l.width("out"), 16);
  EXPECT_EQ(l.width("batch"), 1);
}

TEST(Derive, EmptyMappingAndMismatch) {
  HardwareDescription d{OpKind::Conv1D, {"C", "C_w", "K", "F", "s", "pad"}, {}, {}};
  const auto l = derive_from_description(d, ultratrail_bounds());
  for (const auto& name : canonical_params(OpKind::Conv1D)) EXPECT_EQ(l.width(name), 1);
  d.dims = {8};
  EXPECT_PRBENCH_ERROR(derive_from_description(d, ultratrail_bounds()), MappingMismatch);
}

TEST(MapToPr, CeilingExamples) {
  const auto l = ultratrail_lattice();
  const auto m = map_to_pr(conv1d(13, 32, 20, 3), l);
  EXPECT_EQ(m.config, conv1d(16, 32, 24, 3));
  EXPECT_FALSE(m.clamped);
  EXPECT_EQ(map_to_pr(m.config, l).config, m.config);
}

TEST(MapToPr, Conv2DPublishedWidths) {
  auto b = default_bounds(OpKind::Conv2D);
  const auto l = make_lattice(OpKind::Conv2D, {{"C", 8}, {"C_h", 8}, {"C_w", 16}, {"K", 32}}, b);
  const auto m = map_to_pr(test::conv2d(3, 224, 224, 64, 7, 2, 3), l);
  EXPECT_EQ(m.config, test::conv2d(8, 224, 224, 64, 7, 2, 3));
}

TEST(MapToPr, ClampAndKindMismatch) {
  auto b = ultratrail_bounds();
  b.ranges["C"] = {1, 60, 16};
  const auto l = make_lattice(OpKind::Conv1D, {{"C", 8}, {"K", 8}}, b);
  const auto m = map_to_pr(conv1d(58, 32, 8, 3), l);
  EXPECT_EQ(m.config.at("C"), 56);
  EXPECT_TRUE(m.clamped);
  EXPECT_PRBENCH_ERROR(map_to_pr(test::fc(1, 8, 8), l), KindMismatch);
}

TEST(MapToPr, PropertiesAndSoundness) {
  auto b = default_bounds(OpKind::Conv1D);
  const StepWidthMap widths{{"C", 8}, {"K", 16}, {"F", 3}};
  const auto l = make_lattice(OpKind::Conv1D, widths, b);
  SyntheticOracleConfig oc;
  oc.widths = widths;
  const SyntheticOracle oracle(oc);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto c = conv1d(rng.between(1, 64), rng.between(16, 128), rng.between(1, 64), rng.between(1, 9),
                          rng.between(1, 2), rng.between(0, 4));
    const auto m = map_to_pr(c, l);
    ASSERT_FALSE(m.clamped) << to_string(c);
    EXPECT_EQ(map_to_pr(m.config, l).config, m.config);
    for (const auto& [name, value] : c.params) {
      EXPECT_GE(m.config.at(name), value);
      if (l.width(name) > 1) {
        EXPECT_EQ(m.config.at(name) % l.width(name), 0);
      } else {
        EXPECT_EQ(m.config.at(name), value);
      }
    }
    EXPECT_TRUE(l.contains(m.config));
    EXPECT_EQ(oracle.latency(m.config), oracle.latency(c));
  }
}

TEST(Count, UltraTrailSquare) {
  const auto l = ultratrail_lattice();
  EXPECT_EQ(enumerate_count(l), 49u);
  const auto all = sample(l, 49, 3);
  const std::set<LayerConfig> unique(all.begin(), all.end());
  EXPECT_EQ(unique.size(), 49u);
  for (const auto& c : all) EXPECT_TRUE(l.contains(c));
  EXPECT_PRBENCH_ERROR(sample(l, 50, 3), LatticeTooSmall);
  EXPECT_PRBENCH_ERROR(sample(l, 0, 3), InvalidArgument);
}

TEST(Count, MatchesBruteForceWithConstraints) {
  ParamBounds b{OpKind::DepthwiseConv2D, {}};
  b.ranges = {{"C", {1, 40, 8}}, {"C_h", {7, 20, 8}}, {"C_w", {7, 20, 8}}, {"K", {1, 1, 1}},
              {"F_h", {1, 7, 3}}, {"F_w", {1, 7, 3}}, {"s", {1, 2, 1}},    {"pad", {0, 1, 0}}};
  const StepWidthMap widths{{"C", 8}, {"C_h", 4}};
  const std::vector<Constraint> cons{Constraint::parse("F_h=F_w"), Constraint::parse("F_h>=3")};
  const auto l = make_lattice(OpKind::DepthwiseConv2D, widths, b, cons);
  std::uint64_t brute = 0;
  for (std::int64_t C = 1; C <= 40; ++C) {
    if (C % 8) continue;
    for (std::int64_t H = 7; H <= 20; ++H) {
      if (H % 4) continue;
      for (std::int64_t W = 7; W <= 20; ++W)
        for (std::int64_t fh = 1; fh <= 7; ++fh)
          for (std::int64_t fw = 1; fw <= 7; ++fw)
            if (fh == fw && fh >= 3) brute += 2 * 2;  // s, pad
    }
  }
  EXPECT_EQ(enumerate_count(l), brute);
  const auto all = sample(l, brute, 9);
  const std::set<LayerConfig> unique(all.begin(), all.end());
  EXPECT_EQ(unique.size(), brute);
  for (const auto& c : all) {
    EXPECT_EQ(c.at("F_h"), c.at("F_w"));
    EXPECT_GE(c.at("F_h"), 3);
  }
}

TEST(Count, AllWidthsOneIsFullSpace) {
  auto b = ultratrail_bounds();
  b.ranges["F"] = {1, 5, 3};
  const auto l = make_lattice(OpKind::Conv1D, {}, b);
  EXPECT_EQ(enumerate_count(l), 56u * 56u * 5u);
}

TEST(Sample, SeedReproducibility) {
  const auto l = make_lattice(OpKind::Conv1D, {{"C", 8}, {"K", 8}}, default_bounds(OpKind::Conv1D));
  int differing = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto a = sample(l, 20, s);
    EXPECT_EQ(a, sample(l, 20, s));
    if (a != sample(l, 20, s + 1000)) ++differing;
  }
  EXPECT_EQ(differing, 100);
}

TEST(SampleRandomFull, ValidAndUniform) {
  const auto b = default_bounds(OpKind::Conv1D);
  EXPECT_PRBENCH_ERROR(sample_random_full_space(b, 0, 1), InvalidArgument);
  const auto configs = sample_random_full_space(b, 10000, 17);
  std::vector<int> counts(64, 0);
  for (const auto& c : configs) {
    EXPECT_NO_THROW(validate(c));
    EXPECT_TRUE(b.contains(c));
    ++counts[static_cast<std::size_t>(c.at("C") - 1)];
  }
  const double expected = 10000.0 / 64.0;
  double chi2 = 0.0;
  for (int n : counts) chi2 += (n - expected) * (n - expected) / expected;
  EXPECT_LT(chi2, 103.4);  // 63 degrees of freedom, p = 0.001
}

TEST(Constraint, ParseAndHold) {
  const auto eq = Constraint::parse("F_h = F_w");
  EXPECT_TRUE(eq.holds(test::conv2d(1, 8, 8, 1, 3)));
  const auto ge = Constraint::parse("F_h>=3");
  EXPECT_FALSE(ge.holds(test::conv2d(1, 8, 8, 1, 1)));
  EXPECT_EQ(Constraint::parse(to_string(ge)), ge);
  EXPECT_PRBENCH_ERROR(Constraint::parse("F_h"), ParseError);
}

TEST(Lattice, JsonRoundTrip) {
  const auto l = make_lattice(OpKind::Conv1D, {{"C", 8}}, ultratrail_bounds(), {Constraint::parse("K>=8")});
  const PrLattice back = json(l).get<PrLattice>();
  for (const auto& name : canonical_params(OpKind::Conv1D)) EXPECT_EQ(back.width(name), l.width(name));
  EXPECT_EQ(back.bounds, l.bounds);
  EXPECT_EQ(back.constraints, l.constraints);
  EXPECT_EQ(enumerate_count(back), enumerate_count(l));
}

}  // namespace
}  // namespace prbench
