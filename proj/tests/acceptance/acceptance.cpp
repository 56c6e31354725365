// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Criteria are checked against synthetic oracles whose
// ground truth is known exactly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "prbench/backends.hpp"
#include "prbench/cli.hpp"
#include "prbench/evalharness.hpp"
#include "prbench/forest.hpp"
#include "prbench/fusion.hpp"
#include "prbench/netgraph.hpp"
#include "prbench/prdetect.hpp"
#include "prbench/prset.hpp"
#include "prbench/rng.hpp"
#include "prbench/sweep.hpp"

#ifndef PRBENCH_DATA_DIR
#define PRBENCH_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace prbench;

namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

LayerConfig conv2d(OpKind kind, std::int64_t C, std::int64_t H, std::int64_t W, std::int64_t K, std::int64_t F,
                   std::int64_t s = 1, std::int64_t pad = 0) {
  return {kind, {{"C", C}, {"C_h", H}, {"C_w", W}, {"K", K}, {"F_h", F}, {"F_w", F}, {"s", s}, {"pad", pad}}};
}

LayerConfig elementwise(OpKind kind, std::int64_t C, std::int64_t H, std::int64_t W) {
  return {kind, {{"C", C}, {"C_h", H}, {"C_w", W}}};
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// Criteria 1 and 2: random staircase oracles over Conv2D. Each swept
// parameter gets a range of 4 to 8 steps (plus a partial step) of its width;
// linear parameters sweep [1, 64]. Padding is neutral to the oracle and wide
// enough to admit any swept kernel height.

struct StaircaseCase {
  SyntheticOracleConfig oracle;
  ParamBounds bounds;
  std::vector<std::string> swept;
  StepWidthMap truth;
};

std::vector<StaircaseCase> staircase_cases() {
  const std::vector<std::string> candidates{"C", "C_h", "C_w", "K", "F_h"};
  const std::int64_t widths[] = {2, 4, 8, 16, 32};
  Rng rng(20240601);
  std::vector<StaircaseCase> cases;
  for (int i = 0; i < 50; ++i) {
    StaircaseCase c;
    c.bounds.kind = OpKind::Conv2D;
    c.bounds.ranges = {{"C", {1, 64, 16}}, {"C_h", {1, 64, 16}}, {"C_w", {1, 64, 16}}, {"K", {1, 64, 16}},
                       {"F_h", {1, 64, 1}}, {"F_w", {1, 1, 1}},  {"s", {1, 1, 1}},     {"pad", {0, 144, 144}}};
    const auto n_params = static_cast<std::size_t>(rng.between(2, 5));
    std::vector<std::string> pool = candidates;
    for (std::size_t k = 0; k < n_params; ++k) {
      const auto j = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[j]);
      const std::string& p = pool[k];
      c.swept.push_back(p);
      const bool linear = rng.uniform() < 0.3;
      const std::int64_t w = linear ? 1 : widths[rng.below(5)];
      c.truth[p] = w;
      if (w > 1) {
        c.oracle.widths[p] = w;
        const std::int64_t hi = w * rng.between(4, 8) + rng.between(0, w - 1);
        c.bounds.ranges[p] = {1, hi, std::min<std::int64_t>(hi, 16)};
      }
    }
    c.oracle.cycle_cost_per_tile = 1.0 + rng.uniform() * 9.0;
    c.oracle.clock_hz = 1e9;
    cases.push_back(std::move(c));
  }
  return cases;
}

// Returns the number of fully correct oracles and of correct parameters.
std::pair<int, int> recover_widths(const std::vector<StaircaseCase>& cases, double noise, int repeats,
                                   int& params_total, std::string& first_miss) {
  int oracles_ok = 0;
  int params_ok = 0;
  params_total = 0;
  std::uint64_t seed = 7;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    auto cfg = cases[i].oracle;
    cfg.noise_rel_sd = noise;
    cfg.rng_seed = ++seed;
    const SyntheticOracle oracle(cfg);
    std::map<std::string, SweepResult> sweeps;
    for (const auto& plan : plan_sweeps(cases[i].bounds, cases[i].swept)) {
      sweeps.emplace(plan.swept_param, run_sweep(plan, oracle, repeats));
    }
    bool all = true;
    for (const auto& [p, sweep] : sweeps) {
      ++params_total;
      std::int64_t got = -1;
      try {
        got = determine_step_widths({{p, sweep}}).at(p);
      } catch (const Error&) {
      }
      if (got == cases[i].truth.at(p)) {
        ++params_ok;
      } else {
        all = false;
        if (first_miss.empty()) {
          first_miss = "oracle " + std::to_string(i) + " " + p + ": expected " +
                       std::to_string(cases[i].truth.at(p)) + ", got " + std::to_string(got);
        }
      }
    }
    if (all) ++oracles_ok;
  }
  return {oracles_ok, params_ok};
}

Outcome criterion1() {
  const auto cases = staircase_cases();
  int total = 0;
  std::string miss;
  const auto [oracles_ok, params_ok] = recover_widths(cases, 0.0, 1, total, miss);
  Outcome o;
  o.pass = params_ok == total;
  o.detail = std::to_string(oracles_ok) + "/50 oracles and " + std::to_string(params_ok) + "/" +
             std::to_string(total) + " parameters exact" + (miss.empty() ? "" : "; first miss: " + miss);
  return o;
}

Outcome criterion2() {
  const auto cases = staircase_cases();
  int total = 0;
  std::string miss;
  const auto [oracles_ok, params_ok] = recover_widths(cases, 0.03, 11, total, miss);
  Outcome o;
  // Counted per oracle, every parameter of an oracle must be right.
  o.pass = oracles_ok >= 48;
  o.detail = std::to_string(oracles_ok) + "/50 oracles (" + fmt("%.1f", 100.0 * oracles_ok / 50.0) + "%) and " +
             std::to_string(params_ok) + "/" + std::to_string(total) + " parameters exact" +
             (miss.empty() ? "" : "; first miss: " + miss);
  return o;
}

// ---------------------------------------------------------------------------

Outcome criterion3() {
  SyntheticOracleConfig cfg;
  cfg.widths = {{"C", 8}, {"C_h", 8}, {"C_w", 16}, {"K", 32}};
  cfg.base_cycles = 50.0;
  cfg.clock_hz = 1e9;
  const SyntheticOracle oracle(cfg);
  const auto bounds = default_bounds(OpKind::Conv2D);
  const auto lattice = make_lattice(OpKind::Conv2D, cfg.widths, bounds);
  int exact = 0;
  int clamped = 0;
  double worst = 0.0;
  for (const auto& c : sample_random_full_space(bounds, 1000, 31337)) {
    const auto m = map_to_pr(c, lattice);
    if (m.clamped) ++clamped;
    const double diff = std::abs(oracle.latency(m.config) - oracle.latency(c));
    worst = std::max(worst, diff);
    if (diff == 0.0) ++exact;
  }
  return {exact == 1000 && clamped == 0,
          std::to_string(exact) + "/1000 configs with identical latency, " + std::to_string(clamped) +
              " clamped, max |diff| " + fmt("%.3g", worst) + " s"};
}

// ---------------------------------------------------------------------------

Outcome criterion4() {
  const auto backend = make_backend(read_json_file(fs::path(PRBENCH_DATA_DIR) / "ultratrail_backend.json"));
  ComparisonConfig cfg;
  cfg.kind = OpKind::Conv1D;
  cfg.bounds = read_json_file(fs::path(PRBENCH_DATA_DIR) / "ultratrail_bounds.json").get<ParamBounds>();
  cfg.widths =
      derive_from_description(read_json_file(fs::path(PRBENCH_DATA_DIR) / "ultratrail_description.json")
                                  .get<HardwareDescription>(),
                              cfg.bounds)
          .widths;
  cfg.sizes = {1000};
  cfg.test_set = sample_random_full_space(cfg.bounds, 200, 2024);
  cfg.seed = 42;
  cfg.n_seeds = 5;
  cfg.forest.feature_subsample = 1.0;
  const auto r = run_comparison(*backend, cfg);
  const double pr = r.cells.at(0).mape;
  const double rnd = r.cells.at(1).mape;
  return {pr < 1.0 && pr < rnd / 5.0,
          "median MAPE pr " + fmt("%.3f", pr) + "% vs random_full " + fmt("%.2f", rnd) + "% (ratio " +
              fmt("%.1f", rnd / pr) + "x) at 1000 samples, 200 test layers"};
}

// ---------------------------------------------------------------------------

Outcome criterion5() {
  SyntheticOracleConfig oc;
  oc.widths = {{"C", 8}, {"K", 16}};
  oc.noise_rel_sd = 0.02;
  oc.rng_seed = 5;
  oc.clock_hz = 1e9;
  const SyntheticOracle oracle(oc);
  auto bounds = default_bounds(OpKind::Conv2D);
  std::vector<TrainingSample> samples;
  for (const auto& c : sample_random_full_space(bounds, 500, 77)) samples.push_back({c, oracle.noisy_latency(c, 0)});
  ForestHyperparams hp;
  hp.bootstrap = false;
  hp.min_samples_leaf = 1;
  hp.max_depth = 0;
  hp.n_trees = 50;
  hp.seed = 13;
  const auto model = fit(samples, hp);
  int wrong = 0;
  for (const auto& s : samples) {
    if (predict(model, s.config) != s.latency) ++wrong;
  }
  const auto text = serialize(model);
  const auto back = deserialize(text);
  int drift = 0;
  auto probes = sample_random_full_space(bounds, 500, 78);
  for (const auto& s : samples) probes.push_back(s.config);
  for (const auto& c : probes) {
    if (predict(back, c) != predict(model, c)) ++drift;
  }
  const bool same_text = serialize(back) == text;
  return {wrong == 0 && drift == 0 && same_text,
          std::to_string(wrong) + "/500 training points mispredicted; " + std::to_string(drift) + "/" +
              std::to_string(probes.size()) + " predictions changed by round-trip; reserialization " +
              (same_text ? "identical" : "differs")};
}

// ---------------------------------------------------------------------------

DualFuOracle dual_fu() {
  SyntheticOracleConfig conv;
  conv.widths = {{"C", 16}, {"K", 16}, {"in", 16}, {"out", 16}};
  conv.cycle_cost_per_tile = 4.0;
  conv.base_cycles = 200.0;
  conv.clock_hz = 1e9;
  SyntheticOracleConfig aux;
  aux.widths = {{"C", 8}};
  aux.cycle_cost_per_tile = 1.5;
  aux.base_cycles = 80.0;
  aux.clock_hz = 5e8;
  return DualFuOracle{SyntheticOracle(conv), SyntheticOracle(aux), {BlockKind::DwSep, BlockKind::PoolFc}, true};
}

BlockInstance random_dwsep(Rng& rng) {
  const std::int64_t C = rng.between(1, 256), H = rng.between(7, 56), W = rng.between(7, 56);
  const std::int64_t K = rng.between(1, 256), s = rng.between(1, 2);
  const auto dw = conv2d(OpKind::DepthwiseConv2D, C, H, W, 1, 3, s, 1);
  const Shape o = output_shape(dw);
  return {BlockKind::DwSep,
          {dw, elementwise(OpKind::ReLU, C, o.h, o.w), conv2d(OpKind::PointwiseConv2D, C, o.h, o.w, K, 1),
           elementwise(OpKind::ReLU, K, o.h, o.w)}};
}

BlockInstance random_pool_fc(Rng& rng) {
  const std::int64_t C = rng.between(1, 512), F = rng.between(1, 7);
  const std::int64_t H = F * rng.between(1, 8), W = F * rng.between(1, 8);
  const LayerConfig p{rng.uniform() < 0.5 ? OpKind::AvgPool2D : OpKind::MaxPool2D,
                      {{"C", C}, {"C_h", H}, {"C_w", W}, {"F", F}}};
  const LayerConfig f{OpKind::FullyConnected,
                      {{"batch", 1}, {"in", output_shape(p).elements()}, {"out", rng.between(1, 1000)}}};
  return {BlockKind::PoolFc, {p, f}};
}

BlockInstance random_resnet(Rng& rng) {
  const std::int64_t C = rng.between(1, 128), H = 2 * rng.between(4, 28), W = 2 * rng.between(4, 28);
  if (rng.uniform() < 0.5) {
    return {BlockKind::ResNetPlain,
            {conv2d(OpKind::Conv2D, C, H, W, C, 3, 1, 1), elementwise(OpKind::ReLU, C, H, W),
             conv2d(OpKind::Conv2D, C, H, W, C, 3, 1, 1), elementwise(OpKind::Add, C, H, W),
             elementwise(OpKind::ReLU, C, H, W)}};
  }
  const std::int64_t K = 2 * C, h = H / 2, w = W / 2;
  return {BlockKind::ResNetDown,
          {conv2d(OpKind::Conv2D, C, H, W, K, 3, 2, 1), elementwise(OpKind::ReLU, K, h, w),
           conv2d(OpKind::Conv2D, K, h, w, K, 3, 1, 1), conv2d(OpKind::Conv2D, C, H, W, K, 1, 2, 0),
           elementwise(OpKind::Add, K, h, w), elementwise(OpKind::ReLU, K, h, w)}};
}

Outcome criterion6() {
  const auto oracle = dual_fu();
  const LayerEstimator est = [&](const LayerConfig& c) { return oracle.layer_latency(c); };
  PlatformProfile profile;
  profile.mode = PlatformProfile::Mode::ParallelFu;
  profile.parallel_pairs = oracle.parallel_pairs();
  profile.relu_fused = true;
  Rng rng(606);
  int max_ok = 0;
  int sum_ok = 0;
  for (int i = 0; i < 100; ++i) {
    const auto b = i % 2 ? random_pool_fc(rng) : random_dwsep(rng);
    if (estimate_block(b, est, profile) == oracle.measure(b, 1).latency) ++max_ok;
  }
  for (int i = 0; i < 100; ++i) {
    const auto b = random_resnet(rng);
    if (estimate_block(b, est, profile) == oracle.measure(b, 1).latency) ++sum_ok;
  }
  return {max_ok == 100 && sum_ok == 100,
          std::to_string(max_ok) + "/100 DwSep+PoolFc (max) and " + std::to_string(sum_ok) +
              "/100 ResNet (sum) blocks exact"};
}

// ---------------------------------------------------------------------------

Outcome criterion7() {
  // Layer times come from a MAC-proportional oracle; the planted fusing
  // factor, with 3% noise, is subtracted to give the block time.
  const LayerEstimator layer_time = [](const LayerConfig& c) {
    return c.kind == OpKind::ReLU ? 0.0 : 1e-3 + 1e-9 * static_cast<double>(mac_count(c));
  };
  std::string detail;
  bool pass = true;
  Rng rng(707);
  const std::map<BlockKind, FusingWeights> planted{{BlockKind::DwSep, {2.5e-10, 1.5e-3}},
                                                   {BlockKind::ResNetPlain, {1.5e-10, 4e-3}}};
  std::vector<FusingSample> samples;
  for (const auto& [kind, fw] : planted) {
    for (int i = 0; i < 500; ++i) {
      BlockInstance b = kind == BlockKind::DwSep ? random_dwsep(rng) : random_resnet(rng);
      while (b.kind != kind) b = random_resnet(rng);
      double sum = 0.0;
      for (const auto& l : b.layers) sum += layer_time(l);
      const double gap = fw.w * static_cast<double>(block_ops(b)) + fw.c;
      samples.push_back({b, sum - gap * (1.0 + 0.03 * rng.normal()), sum});
    }
  }
  const auto fitted = fit_fusing_factor(samples);
  for (const auto& [kind, fw] : planted) {
    const auto& got = fitted.at(kind);
    const double ew = std::abs(got.w - fw.w) / fw.w;
    const double ec = std::abs(got.c - fw.c) / fw.c;
    pass = pass && ew < 0.05 && ec < 0.05;
    detail += std::string(to_string(kind)) + " w err " + fmt("%.2f", 100 * ew) + "%, c err " + fmt("%.2f", 100 * ec) +
              "%; ";
  }

  // Two noiseless points recover the line exactly.
  const LayerConfig pool{OpKind::AvgPool2D, {{"C", 10}, {"C_h", 1}, {"C_w", 1}, {"F", 1}}};
  const BlockInstance b100{BlockKind::PoolFc, {pool, {OpKind::FullyConnected, {{"batch", 1}, {"in", 10}, {"out", 9}}}}};
  const BlockInstance b200{BlockKind::PoolFc, {pool, {OpKind::FullyConnected, {{"batch", 1}, {"in", 10}, {"out", 19}}}}};
  const auto two = fit_fusing_factor({{b100, 7.0, 10.0}, {b200, 5.0, 10.0}}).at(BlockKind::PoolFc);
  const bool exact = std::abs(two.w - 0.02) <= 1e-15 && std::abs(two.c - 1.0) <= 1e-13;
  pass = pass && exact;
  detail += std::string("two-point fit w=") + fmt("%.17g", two.w) + " c=" + fmt("%.17g", two.c);
  return {pass, detail};
}

// ---------------------------------------------------------------------------

// The oracle's own network time: walk the graph in order; a depthwise conv
// whose output reaches a pointwise conv through one ReLU, or a pooling layer
// feeding a fully connected layer, overlap on the two units. Everything else
// runs back to back. ReLU is fused.
double oracle_network_time(const DualFuOracle& oracle, const NetworkGraph& g) {
  std::set<std::string> done;
  double total = 0.0;
  const auto sole_succ = [&](const std::string& id) -> std::string {
    const auto it = g.succs.find(id);
    return it != g.succs.end() && it->second.size() == 1 ? it->second.front() : std::string();
  };
  for (const auto& id : g.order) {
    if (done.contains(id)) continue;
    const auto& layer = g.nodes.at(id);
    if (layer.kind == OpKind::ReLU) continue;
    std::string partner;
    if (layer.kind == OpKind::DepthwiseConv2D) {
      const auto relu = sole_succ(id);
      if (!relu.empty() && g.nodes.at(relu).kind == OpKind::ReLU) {
        const auto next = sole_succ(relu);
        if (!next.empty() && g.nodes.at(next).kind == OpKind::PointwiseConv2D) partner = next;
      }
    } else if (is_pool(layer.kind)) {
      const auto next = sole_succ(id);
      if (!next.empty() && g.nodes.at(next).kind == OpKind::FullyConnected) partner = next;
    }
    if (partner.empty()) {
      total += oracle.layer_latency(layer);
    } else {
      total += std::max(oracle.layer_latency(layer), oracle.layer_latency(g.nodes.at(partner)));
      done.insert(partner);
    }
  }
  return total;
}

Outcome criterion8() {
  const auto oracle = dual_fu();
  const auto g = mobilenet_v1(224, 1000);
  int weight_layers = 0;
  for (const auto& [id, l] : g.nodes) {
    if (l.kind != OpKind::ReLU && !is_pool(l.kind)) ++weight_layers;
  }
  // Per-kind forests that memorize the network's own layers: oracle-exact.
  std::map<OpKind, std::vector<TrainingSample>> per_kind;
  for (const auto& [id, l] : g.nodes) {
    if (l.kind != OpKind::ReLU) per_kind[l.kind].push_back({l, oracle.layer_latency(l)});
  }
  ModelSet models;
  models.zero_cost.insert(OpKind::ReLU);
  ForestHyperparams hp;
  hp.bootstrap = false;
  hp.n_trees = 10;
  hp.seed = 8;
  for (auto& [kind, samples] : per_kind) {
    if (samples.size() == 1) samples.push_back(samples.front());
    models.models.emplace(kind, fit(samples, hp));
  }
  PlatformProfile profile;
  profile.mode = PlatformProfile::Mode::ParallelFu;
  profile.parallel_pairs = oracle.parallel_pairs();
  profile.relu_fused = true;
  const auto est = estimate_network(g, models, profile);
  const double truth = oracle_network_time(oracle, g);
  const double rel = std::abs(est.total - truth) / truth;
  return {weight_layers == 28 && rel <= 1e-3,
          std::to_string(weight_layers) + " weight layers, " + std::to_string(est.blocks.size()) +
              " blocks; estimate " + fmt("%.9g", est.total) + " s vs oracle " + fmt("%.9g", truth) +
              " s (rel err " + fmt("%.2g", rel) + ")"};
}

// ---------------------------------------------------------------------------

Outcome criterion9() {
  struct Case {
    const char* name;
    std::vector<double> m, e;
    double expected;
    bool rms;
  };
  const std::vector<Case> cases{
      {"mape [100,200]/[110,180]", {100, 200}, {110, 180}, 10.0, false},
      {"mape e=m", {3, 4}, {3, 4}, 0.0, false},
      {"mape (50,75)", {50}, {75}, 50.0, false},
      {"rmspe [100,200]/[110,180]", {100, 200}, {110, 180}, 10.0, true},
      {"rmspe e=m", {3, 4}, {3, 4}, 0.0, true},
      {"rmspe [100,100]/[100,130]", {100, 100}, {100, 130}, 100.0 * std::sqrt(0.045), true},
  };
  int ok = 0;
  std::string bad;
  for (const auto& c : cases) {
    const double got = c.rms ? rmspe(c.m, c.e) : mape(c.m, c.e);
    const bool match = c.expected == 0.0 ? got == 0.0 : std::abs(got - c.expected) <= 1e-9 * std::abs(c.expected);
    if (match) {
      ++ok;
    } else if (bad.empty()) {
      bad = std::string("; ") + c.name + " gave " + fmt("%.17g", got);
    }
  }
  return {ok == static_cast<int>(cases.size()), std::to_string(ok) + "/" + std::to_string(cases.size()) +
                                                    " examples within 1e-9 relative" + bad};
}

// ---------------------------------------------------------------------------

// Runs the full CLI pipeline into `dir`; returns an empty string on success.
std::string run_pipeline(const fs::path& dir, const std::string& threads) {
  fs::create_directories(dir / "models");
  fs::create_directories(dir / "net_models");
  const auto p = [&](const std::string& name) { return (dir / name).string(); };
  const std::string data = PRBENCH_DATA_DIR;
  {
    auto spec = read_json_file(fs::path(data) / "ultratrail_backend.json");
    spec["noise_rel_sd"] = 0.03;
    spec["rng_seed"] = 17;
    write_json_file(p("noisy_backend.json"), spec);
    auto dual = json::parse(R"({"format_version":"1.0","type":"dual_fu","parallel_pairs":["DwSep","PoolFc"],
        "relu_fused":true,"conv_fu":{"widths":{"C":16,"K":16},"clock_hz":1e9,"noise_rel_sd":0.02,"rng_seed":3},
        "aux_fu":{"widths":{"C":8},"clock_hz":5e8,"noise_rel_sd":0.02,"rng_seed":4}})");
    write_json_file(p("dual_backend.json"), dual);
    json blocks = json::array();
    Rng rng(1);
    for (int i = 0; i < 12; ++i) blocks.push_back(random_dwsep(rng));
    write_json_file(p("blocks.json"), json{{"format_version", "1.0"}, {"blocks", blocks}});
    write_json_file(p("net.json"), network_to_json(mobilenet_v1(96, 10)));
  }
  const std::string seed = "11";
  const std::vector<std::vector<std::string>> steps{
      {"derive", "--description", data + "/ultratrail_description.json", "--bounds", data + "/ultratrail_bounds.json",
       "--out", p("lattice.json")},
      {"sweep", "--backend", p("noisy_backend.json"), "--kind", "conv1d", "--bounds", data + "/ultratrail_bounds.json",
       "--params", "C,K,F", "--repeats", "11", "--parallel", "--out", p("sweeps.json")},
      {"detect", "--sweeps", p("sweeps.json"), "--out", p("widths.json")},
      {"--seed", seed, "sample", "--kind", "conv1d", "--widths", p("lattice.json"), "--n", "400", "--out",
       p("train.json")},
      {"--seed", seed, "sample", "--kind", "conv1d", "--widths", p("lattice.json"), "--strategy", "random", "--n",
       "60", "--out", p("test.json")},
      {"measure", "--backend", p("noisy_backend.json"), "--configs", p("train.json"), "--repeats", "5", "--store",
       p("store.csv")},
      {"--seed", seed, "train", "--data", p("store.csv"), "--kind", "conv1d", "--widths", p("lattice.json"),
       "--n-trees", "40", "--threads", threads, "--out", p("models/conv1d.json")},
      {"measure", "--backend", p("dual_backend.json"), "--blocks", p("blocks.json"), "--repeats", "3", "--out",
       p("blocks.csv")},
      {"--seed", seed, "compare", "--backend", p("noisy_backend.json"), "--kind", "conv1d", "--widths",
       p("lattice.json"), "--sizes", "50,200", "--test-set", p("test.json"), "--seeds", "2", "--n-trees", "20",
       "--out", p("report.json"), "--csv", p("report.csv")},
  };
  for (const auto& args : steps) {
    std::ostringstream out, err;
    if (run_cli(args, out, err) != kExitOk) return args[args[0] == "--seed" ? 2 : 0] + ": " + err.str();
  }
  // Stages that print their result: capture stdout to files.
  const auto capture = [&](const std::vector<std::string>& args, const std::string& file) -> std::string {
    std::ostringstream out, err;
    if (run_cli(args, out, err) != kExitOk) return args[0] + ": " + err.str();
    std::ofstream(p(file)) << out.str();
    return {};
  };
  write_json_file(p("layer.json"), json::parse(R"({"kind":"Conv1D","params":{"C":13,"C_w":101,"K":30,"F":5,"s":1,"pad":2}})"));
  if (auto e = capture({"estimate-layer", "--model", p("models/conv1d.json"), "--config", p("layer.json")},
                       "layer_estimate.txt");
      !e.empty()) {
    return e;
  }
  // Whole-network models trained from the dual-FU oracle's layer measurements.
  {
    const auto g = mobilenet_v1(96, 10);
    json layers = json::array();
    for (const auto& [id, l] : g.nodes) {
      // Twice each, so kinds with a single layer still have two rows.
      if (l.kind != OpKind::ReLU) layers.insert(layers.end(), 2, json(l));
    }
    write_json_file(p("net_layers.json"), json{{"format_version", "1.0"}, {"configs", layers}});
  }
  if (auto e = capture({"measure", "--backend", p("dual_backend.json"), "--configs", p("net_layers.json"), "--store",
                        p("net_store.csv")},
                       "measure_net.txt");
      !e.empty()) {
    return e;
  }
  for (const char* kind : {"Conv2D", "DepthwiseConv2D", "PointwiseConv2D", "AvgPool2D", "FullyConnected"}) {
    if (auto e = capture({"--seed", seed, "train", "--data", p("net_store.csv"), "--kind", kind, "--n-trees", "10",
                          "--no-bootstrap", "--out", p(std::string("net_models/") + kind + ".json")},
                         std::string("train_") + kind + ".txt");
        !e.empty()) {
      return e;
    }
  }
  write_json_file(p("profile.json"), json::parse(R"({"format_version":"1.0","mode":"parallel_fu",
      "parallel_pairs":["DwSep","PoolFc"],"relu_fused":true})"));
  if (auto e = capture({"estimate-net", "--network", p("net.json"), "--models", p("net_models"), "--profile",
                        p("profile.json"), "--zero-cost", "ReLU", "--out", p("net_report.json")},
                       "net_total.txt");
      !e.empty()) {
    return e;
  }
  if (auto e = capture({"fit-fusing", "--blocks", p("blocks.csv"), "--models", p("net_models"), "--zero-cost", "ReLU",
                        "--relu-fused", "--out", p("fusing_profile.json")},
                       "fit_fusing.txt");
      !e.empty()) {
    return e;
  }
  return {};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = read_text_file(entry.path());
  }
  return files;
}

Outcome criterion10() {
  const fs::path root = fs::temp_directory_path() / ("prbench-acceptance-" + std::to_string(getpid()));
  fs::remove_all(root);
  std::string err = run_pipeline(root / "a", "1");
  if (err.empty()) err = run_pipeline(root / "b", "1");
  if (err.empty()) err = run_pipeline(root / "c", "4");
  if (!err.empty()) {
    fs::remove_all(root);
    return {false, "pipeline failed: " + err};
  }
  const auto a = read_tree(root / "a");
  const auto b = read_tree(root / "b");
  const auto c = read_tree(root / "c");
  fs::remove_all(root);
  std::string diff;
  for (const auto* other : {&b, &c}) {
    if (a.size() != other->size()) diff = "file sets differ";
    for (const auto& [name, text] : a) {
      const auto it = other->find(name);
      if (it == other->end() || it->second != text) {
        diff = name;
        break;
      }
    }
    if (!diff.empty()) break;
  }
  return {diff.empty(), std::to_string(a.size()) + " files per run, 3 runs (1, 1 and 4 training threads)" +
                            (diff.empty() ? ", all byte-identical" : "; differs: " + diff)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"step-width recovery on 50 noiseless staircase oracles", criterion1},
      {"step-width recovery under 3% noise, median of 11", criterion2},
      {"representative soundness on 1000 random configs", criterion3},
      {"representative vs uniform sampling on the Conv1D accelerator", criterion4},
      {"forest memorization and serialization round-trip", criterion5},
      {"parallel-unit block composition equals the dual-FU oracle", criterion6},
      {"fusing-factor recovery", criterion7},
      {"whole-network composition on MobileNet", criterion8},
      {"metric examples", criterion9},
      {"seeded pipeline reruns are byte-identical", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s criterion %zu: %s -- %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
