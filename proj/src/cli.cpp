// SPDX-License-Identifier: Apache-2.0

#include "prbench/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>

#include "prbench/backends.hpp"
#include "prbench/csv.hpp"
#include "prbench/evalharness.hpp"
#include "prbench/forest.hpp"
#include "prbench/fusion.hpp"
#include "prbench/netgraph.hpp"
#include "prbench/prdetect.hpp"
#include "prbench/prset.hpp"
#include "prbench/sweep.hpp"

namespace fs = std::filesystem;

namespace prbench {

namespace {

struct Globals {
  std::uint64_t seed{0};
  bool verbose{false};
  bool json_errors{false};
};

class Log {
 public:
  Log(std::ostream& err, bool on) : err_(err), on_(on) {}
  template <typename... Ts>
  void operator()(const Ts&... parts) const {
    if (!on_) return;
    err_ << "prbench: ";
    (err_ << ... << parts);
    err_ << "\n";
  }

 private:
  std::ostream& err_;
  bool on_;
};

// Shared input helpers ----------------------------------------------------

json read_doc(const std::string& path, std::string_view what) {
  json doc = read_json_file(path);
  check_format_version(doc, what);
  return doc;
}

ParamBounds load_bounds(const std::string& path, OpKind kind) {
  if (path.empty()) return default_bounds(kind);
  ParamBounds bounds = read_doc(path, "bounds").get<ParamBounds>();
  if (bounds.kind != kind) {
    throw Error(ErrorCode::KindMismatch, path + " holds bounds for " + std::string(to_string(bounds.kind)));
  }
  check_bounds(bounds);
  return bounds;
}

std::vector<Constraint> parse_constraints(const std::vector<std::string>& texts) {
  std::vector<Constraint> out;
  for (const auto& t : texts) out.push_back(Constraint::parse(t));
  return out;
}

// A widths file (from detect) or a lattice file (from derive); the latter
// also carries bounds and constraints, used unless overridden.
PrLattice load_lattice(const std::string& widths_path, const std::string& bounds_path, OpKind kind,
                       const std::vector<std::string>& constraint_texts) {
  StepWidthMap widths;
  std::optional<ParamBounds> bounds;
  auto constraints = parse_constraints(constraint_texts);
  if (!widths_path.empty()) {
    const json doc = read_doc(widths_path, "widths");
    auto [file_kind, w] = widths_from_json(doc);
    if (file_kind != kind) {
      throw Error(ErrorCode::KindMismatch, widths_path + " holds widths for " + std::string(to_string(file_kind)));
    }
    widths = std::move(w);
    if (doc.contains("bounds") && bounds_path.empty()) {
      bounds = json{{"kind", doc.at("kind")}, {"params", doc.at("bounds")}}.get<ParamBounds>();
    }
    if (constraint_texts.empty()) {
      for (const auto& c : doc.value("constraints", json::array())) {
        constraints.push_back(Constraint::parse(c.get<std::string>()));
      }
    }
  }
  if (!bounds) bounds = load_bounds(bounds_path, kind);
  return make_lattice(kind, std::move(widths), std::move(*bounds), std::move(constraints));
}

std::vector<LayerConfig> load_configs(const std::string& path) {
  const json doc = read_doc(path, "configs");
  const json* list = &doc;
  if (doc.is_object()) {
    if (doc.contains("configs")) {
      list = &doc.at("configs");
    } else if (doc.contains("layers")) {
      list = &doc.at("layers");
    } else if (doc.contains("nodes")) {
      std::vector<LayerConfig> out;
      for (const auto& [id, node] : load_network(doc).nodes) out.push_back(node);
      return out;
    } else {
      throw Error(ErrorCode::ParseError, path + ": expected a configs, layers or nodes list");
    }
  }
  if (!list->is_array()) throw Error(ErrorCode::ParseError, path + ": configs must be a list");
  std::vector<LayerConfig> out;
  for (const auto& item : *list) out.push_back(layer_from_json(item));
  return out;
}

std::map<OpKind, LatencyModel> load_models(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoFailure, dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::map<OpKind, LatencyModel> models;
  for (const auto& file : files) {
    LatencyModel model;
    try {
      model = deserialize(read_text_file(file));
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.detail());
    }
    const OpKind kind = model.kind;
    if (!models.emplace(kind, std::move(model)).second) {
      throw Error(ErrorCode::InvalidArgument, dir + " holds two models for " + std::string(to_string(kind)));
    }
  }
  return models;
}

std::set<OpKind> parse_kinds(const std::vector<std::string>& names) {
  std::set<OpKind> out;
  for (const auto& n : names) out.insert(parse_op_kind(n));
  return out;
}

std::unique_ptr<Backend> load_backend(const std::string& path) { return make_backend(read_doc(path, "backend")); }

void write_text(const std::string& path, const std::string& text) { write_file_atomic(path, text); }

std::string seconds(double v) { return csv::format_double(v); }

// Subcommands ---------------------------------------------------------------

struct SweepArgs {
  std::string backend, kind, bounds, out, store;
  std::vector<std::string> params;
  std::int64_t stride{1};
  int repeats{1};
  bool parallel{false};
};

int cmd_sweep(const SweepArgs& a, const Log& log, std::ostream&) {
  const OpKind kind = parse_op_kind(a.kind);
  const ParamBounds bounds = load_bounds(a.bounds, kind);
  if (a.repeats < 1) throw Error(ErrorCode::InvalidArgument, "--repeats must be >= 1");
  std::vector<std::string> params = a.params;
  if (params.empty()) {
    for (const auto& name : canonical_params(kind)) {
      if (bounds.at(name).size() >= static_cast<std::int64_t>(kMinSweepPoints)) params.push_back(name);
    }
  }
  const auto plans = plan_sweeps(bounds, params, a.stride);
  const auto backend = load_backend(a.backend);
  json sweeps = json::object();
  std::string store_rows;
  for (const auto& plan : plans) {
    log("sweeping ", plan.swept_param, " over ", plan.values.size(), " points");
    const SweepResult result = run_sweep(plan, *backend, a.repeats, a.parallel);
    sweeps[plan.swept_param] = result;
    for (std::size_t i = 0; i < result.xs.size(); ++i) {
      MeasurementRecord rec{plan.config_at(result.xs[i]), a.repeats, {result.ys[i]}, result.ys[i], backend->id(), 0};
      store_rows += MeasurementStore::format_row(rec) + "\n";
    }
  }
  write_json_file(a.out, json{{"format_version", kFormatVersion},
                              {"kind", std::string(to_string(kind))},
                              {"backend", backend->id()},
                              {"sweeps", sweeps}});
  if (!a.store.empty()) {
    std::string existing = fs::exists(a.store) ? read_text_file(a.store) : csv::join(MeasurementStore::header()) + "\n";
    write_text(a.store, existing + store_rows);
  }
  return kExitOk;
}

struct DetectArgs {
  std::string sweeps, out;
  DetectorConfig cfg;
};

int cmd_detect(const DetectArgs& a, const Log& log, std::ostream& out) {
  const json doc = read_doc(a.sweeps, "sweeps");
  std::map<std::string, SweepResult> sweeps;
  std::optional<OpKind> kind;
  try {
    for (const auto& [param, s] : doc.at("sweeps").items()) sweeps.emplace(param, s.get<SweepResult>());
    if (doc.contains("kind")) kind = parse_op_kind(doc.at("kind").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, a.sweeps + ": " + e.what());
  }
  if (sweeps.empty()) throw Error(ErrorCode::DegenerateInput, a.sweeps + " holds no sweeps");
  if (!kind) kind = sweeps.begin()->second.plan.kind;
  const StepWidthMap widths = determine_step_widths(sweeps, a.cfg);
  for (const auto& [p, w] : widths) log(p, ": step width ", w);
  write_json_file(a.out, widths_to_json(*kind, widths));
  (void)out;
  return kExitOk;
}

struct DeriveArgs {
  std::string description, bounds, out;
  std::vector<std::string> constraints;
};

int cmd_derive(const DeriveArgs& a, const Log& log, std::ostream&) {
  const HardwareDescription desc = read_doc(a.description, "description").get<HardwareDescription>();
  const PrLattice lattice =
      derive_from_description(desc, load_bounds(a.bounds, desc.operation), parse_constraints(a.constraints));
  const std::uint64_t count = enumerate_count(lattice);
  log("lattice holds ", count, " representatives");
  json doc{{"format_version", kFormatVersion}};
  doc.update(json(lattice));
  doc["count"] = count;
  write_json_file(a.out, doc);
  return kExitOk;
}

struct SampleArgs {
  std::string kind, widths, bounds, out, strategy{"pr"};
  std::vector<std::string> constraints;
  std::uint64_t n{0};
};

int cmd_sample(const SampleArgs& a, const Globals& g, const Log& log, std::ostream&) {
  const OpKind kind = parse_op_kind(a.kind);
  std::vector<LayerConfig> configs;
  if (a.strategy == "pr") {
    configs = sample(load_lattice(a.widths, a.bounds, kind, a.constraints), a.n, g.seed);
  } else if (a.strategy == "random") {
    const PrLattice lattice = load_lattice(a.widths, a.bounds, kind, a.constraints);
    configs = sample_random_full_space(lattice.bounds, a.n, g.seed, lattice.constraints);
  } else {
    throw Error(ErrorCode::InvalidArgument, "--strategy must be pr or random");
  }
  log("sampled ", configs.size(), " configs");
  write_json_file(a.out, json{{"format_version", kFormatVersion},
                              {"kind", std::string(to_string(kind))},
                              {"strategy", a.strategy},
                              {"seed", g.seed},
                              {"configs", configs}});
  return kExitOk;
}

struct MeasureArgs {
  std::string backend, configs, blocks, store, out;
  int repeats{1};
};

int cmd_measure(const MeasureArgs& a, const Log& log, std::ostream&) {
  if (a.repeats < 1) throw Error(ErrorCode::InvalidArgument, "--repeats must be >= 1");
  if (a.configs.empty() == a.blocks.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --configs and --blocks");
  }
  const auto backend = load_backend(a.backend);
  if (!a.configs.empty()) {
    if (a.store.empty()) throw Error(ErrorCode::InvalidArgument, "--configs needs --store");
    const auto configs = load_configs(a.configs);
    for (const auto& c : configs) {
      if (!backend->supports(c.kind)) {
        throw Error(ErrorCode::UnsupportedSubject, backend->id() + " cannot run " + std::string(to_string(c.kind)));
      }
    }
    std::string rows;
    for (const auto& c : configs) rows += MeasurementStore::format_row(backend->measure(c, a.repeats)) + "\n";
    std::string existing = fs::exists(a.store) ? read_text_file(a.store) : csv::join(MeasurementStore::header()) + "\n";
    write_text(a.store, existing + rows);
    log("appended ", configs.size(), " measurements to ", a.store);
    return kExitOk;
  }
  if (a.out.empty()) throw Error(ErrorCode::InvalidArgument, "--blocks needs --out");
  const json doc = read_doc(a.blocks, "blocks");
  std::vector<BlockMeasurement> rows;
  try {
    std::size_t i = 0;
    for (const auto& item : doc.at("blocks")) {
      BlockMeasurement m;
      m.id = item.value("id", "b" + std::to_string(++i));
      m.block = item.get<BlockInstance>();
      validate(m.block);
      m.latency = backend->measure(m.block, a.repeats).latency;
      rows.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, a.blocks + ": " + e.what());
  }
  write_block_measurements(a.out, rows);
  log("measured ", rows.size(), " blocks");
  return kExitOk;
}

struct TrainArgs {
  std::string data, kind, widths, bounds, out, backend_id;
  std::vector<std::string> constraints;
  ForestHyperparams hp;
  bool no_bootstrap{false};
};

int cmd_train(TrainArgs a, const Globals& g, const Log& log, std::ostream&) {
  const OpKind kind = parse_op_kind(a.kind);
  std::optional<PrLattice> lattice;
  if (!a.widths.empty()) lattice = load_lattice(a.widths, a.bounds, kind, a.constraints);
  StoreFilter filter;
  filter.kind = kind;
  if (!a.backend_id.empty()) filter.backend_id = a.backend_id;
  if (!fs::exists(a.data)) throw Error(ErrorCode::IoFailure, "cannot open " + a.data);
  const auto records = MeasurementStore(a.data).query(filter);
  std::vector<TrainingSample> samples;
  for (const auto& r : records) samples.push_back({std::get<LayerConfig>(r.subject), r.latency});
  a.hp.seed = g.seed;
  a.hp.bootstrap = !a.no_bootstrap;
  log("training ", a.hp.n_trees, " trees on ", samples.size(), " samples");
  const LatencyModel model = fit(samples, a.hp, lattice);
  write_text(a.out, serialize(model));
  return kExitOk;
}

struct EstimateLayerArgs {
  std::string model, config;
};

int cmd_estimate_layer(const EstimateLayerArgs& a, const Log&, std::ostream& out) {
  const LatencyModel model = deserialize(read_text_file(a.model));
  const LayerConfig config = layer_from_json(read_doc(a.config, "config"));
  out << seconds(estimate_layer(model, config)) << "\n";
  return kExitOk;
}

struct EstimateNetArgs {
  std::string network, models, profile, out;
  std::vector<std::string> zero_cost;
};

int cmd_estimate_net(const EstimateNetArgs& a, const Log& log, std::ostream& out) {
  const NetworkGraph graph = load_network(read_doc(a.network, "network"));
  PlatformProfile profile;
  if (!a.profile.empty()) profile = read_doc(a.profile, "profile").get<PlatformProfile>();
  ModelSet models{load_models(a.models), parse_kinds(a.zero_cost)};
  const NetworkEstimate est = estimate_network(graph, models, profile);
  log(est.blocks.size(), " blocks, ", est.residual.size(), " residual layers");
  if (!a.out.empty()) write_json_file(a.out, to_json(est));
  out << seconds(est.total) << "\n";
  return kExitOk;
}

struct FitFusingArgs {
  std::string blocks, estimates, models, out;
  std::vector<std::string> zero_cost;
  bool relu_fused{false};
};

int cmd_fit_fusing(const FitFusingArgs& a, const Log& log, std::ostream&) {
  if (a.estimates.empty() == a.models.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --estimates and --models");
  }
  const auto measured = read_block_measurements(a.blocks);
  std::map<std::string, double> sums;
  if (!a.estimates.empty()) {
    sums = read_block_estimates(a.estimates);
  } else {
    ModelSet models{load_models(a.models), parse_kinds(a.zero_cost)};
    PlatformProfile plain;
    plain.relu_fused = a.relu_fused;
    const auto estimator = make_estimator(models);
    for (const auto& m : measured) sums[m.id] = estimate_block(m.block, estimator, plain);
  }
  std::vector<FusingSample> samples;
  for (const auto& m : measured) {
    const auto it = sums.find(m.id);
    if (it == sums.end()) throw Error(ErrorCode::InsufficientData, "no estimate for block " + m.id);
    samples.push_back({m.block, m.latency, it->second});
  }
  PlatformProfile profile;
  profile.mode = PlatformProfile::Mode::FusingFactor;
  profile.relu_fused = a.relu_fused;
  profile.fusing = fit_fusing_factor(samples);
  for (const auto& [kind, fw] : profile.fusing) log(to_string(kind), ": w=", fw.w, " c=", fw.c);
  write_json_file(a.out, json(profile));
  return kExitOk;
}

struct CompareArgs {
  std::string backend, kind, widths, bounds, test_set, out, csv;
  std::vector<std::string> constraints;
  std::vector<std::uint64_t> sizes;
  int seeds{5};
  int repeats{1};
  ForestHyperparams hp;
};

int cmd_compare(CompareArgs a, const Globals& g, const Log& log, std::ostream&) {
  const OpKind kind = parse_op_kind(a.kind);
  const PrLattice lattice = load_lattice(a.widths, a.bounds, kind, a.constraints);
  ComparisonConfig cfg;
  cfg.kind = kind;
  cfg.bounds = lattice.bounds;
  cfg.widths = lattice.widths;
  cfg.constraints = lattice.constraints;
  cfg.sizes = a.sizes;
  cfg.seed = g.seed;
  cfg.n_seeds = a.seeds;
  cfg.repeats = a.repeats;
  cfg.forest = a.hp;
  std::set<LayerConfig> seen;
  std::size_t skipped = 0;
  for (const auto& c : load_configs(a.test_set)) {
    if (c.kind != kind) continue;
    const bool usable = lattice.bounds.contains(c) &&
                        std::all_of(lattice.constraints.begin(), lattice.constraints.end(),
                                    [&](const Constraint& k) { return k.holds(c); });
    if (!usable) {
      ++skipped;
      continue;
    }
    if (seen.insert(c).second) cfg.test_set.push_back(c);
  }
  log("test set: ", cfg.test_set.size(), " layers in range, ", skipped, " out of range skipped");
  if (cfg.test_set.empty()) {
    throw Error(ErrorCode::InvalidArgument, a.test_set + " has no in-range " + std::string(to_string(kind)) + " layers");
  }
  const auto backend = load_backend(a.backend);
  const EvalReport report = run_comparison(*backend, cfg);
  for (const auto& c : report.cells) log("n=", c.size, " ", to_string(c.strategy), " MAPE=", c.mape, "%");
  write_json_file(a.out, to_json(report));
  if (!a.csv.empty()) write_text(a.csv, report_csv(report));
  return kExitOk;
}

void report_error(std::ostream& err, bool as_json, std::string_view name, std::string_view message, int code) {
  if (as_json) {
    err << json{{"error", name}, {"message", message}, {"exit_code", code}}.dump() << "\n";
  } else {
    err << "prbench: " << name << ": " << message << "\n";
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Globals g;
  for (int i = 1; i < argc; ++i) {
    if (std::string_view(argv[i]) == "--json-errors") g.json_errors = true;
  }

  CLI::App app{"Benchmark and latency-model toolkit for DNN accelerators", "prbench"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");
  app.add_flag("--json-errors", g.json_errors, "Report errors as one JSON object on stderr");

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Measure one-parameter sweeps");
  s->add_option("--backend", sweep.backend, "Backend spec JSON")->required();
  s->add_option("--kind", sweep.kind, "Operator kind")->required();
  s->add_option("--bounds", sweep.bounds, "Parameter bounds JSON (default: built-in)");
  s->add_option("--params", sweep.params, "Parameters to sweep (default: all)")->delimiter(',');
  s->add_option("--stride", sweep.stride, "Sweep stride")->capture_default_str();
  s->add_option("--repeats", sweep.repeats, "Repeats per point (median)")->capture_default_str();
  s->add_flag("--parallel", sweep.parallel, "Measure points concurrently if the backend allows");
  s->add_option("--store", sweep.store, "Also append the points to this measurement CSV");
  s->add_option("--out", sweep.out, "Output sweeps JSON")->required();

  DetectArgs detect;
  auto* d = app.add_subcommand("detect", "Detect step widths from sweeps");
  d->add_option("--sweeps", detect.sweeps, "Sweeps JSON")->required();
  d->add_option("--threshold", detect.cfg.threshold_linear, "Relative RMSE below which a sweep is linear")
      ->capture_default_str();
  d->add_option("--prominence", detect.cfg.min_peak_prominence, "Peak prominence as a fraction of the largest delta")
      ->capture_default_str();
  d->add_option("--tolerance", detect.cfg.uniformity_tolerance, "Allowed relative spread of peak distances")
      ->capture_default_str();
  d->add_option("--out", detect.out, "Output widths JSON")->required();

  DeriveArgs derive;
  auto* dv = app.add_subcommand("derive", "Derive the representative lattice from a hardware description");
  dv->add_option("--description", derive.description, "Hardware description JSON")->required();
  dv->add_option("--bounds", derive.bounds, "Parameter bounds JSON (default: built-in)");
  dv->add_option("--constraint", derive.constraints, "Constraint such as F_h=F_w (repeatable)");
  dv->add_option("--out", derive.out, "Output lattice JSON")->required();

  SampleArgs smp;
  auto* sm = app.add_subcommand("sample", "Sample training configurations");
  sm->add_option("--kind", smp.kind, "Operator kind")->required();
  sm->add_option("--widths", smp.widths, "Widths or lattice JSON (default: all widths 1)");
  sm->add_option("--bounds", smp.bounds, "Parameter bounds JSON");
  sm->add_option("--constraint", smp.constraints, "Constraint (repeatable)");
  sm->add_option("--n", smp.n, "Number of configurations")->required();
  sm->add_option("--strategy", smp.strategy, "pr or random")->capture_default_str();
  sm->add_option("--out", smp.out, "Output configs JSON")->required();

  MeasureArgs meas;
  auto* m = app.add_subcommand("measure", "Measure layer configs or building blocks");
  m->add_option("--backend", meas.backend, "Backend spec JSON")->required();
  m->add_option("--configs", meas.configs, "Configs JSON (layers)");
  m->add_option("--blocks", meas.blocks, "Blocks JSON");
  m->add_option("--repeats", meas.repeats, "Repeats per subject (median)")->capture_default_str();
  m->add_option("--store", meas.store, "Measurement CSV to append layer results to");
  m->add_option("--out", meas.out, "Output block measurement CSV");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Fit a latency model from stored measurements");
  t->add_option("--data", train.data, "Measurement CSV")->required();
  t->add_option("--kind", train.kind, "Operator kind")->required();
  t->add_option("--widths", train.widths, "Widths or lattice JSON; estimates map through it");
  t->add_option("--bounds", train.bounds, "Parameter bounds JSON");
  t->add_option("--constraint", train.constraints, "Constraint (repeatable)");
  t->add_option("--backend-id", train.backend_id, "Only use rows from this backend");
  t->add_option("--n-trees", train.hp.n_trees, "Number of trees")->capture_default_str();
  t->add_option("--max-depth", train.hp.max_depth, "Maximum depth, 0 for unlimited")->capture_default_str();
  t->add_option("--min-samples-leaf", train.hp.min_samples_leaf, "Minimum samples per leaf")->capture_default_str();
  t->add_option("--feature-subsample", train.hp.feature_subsample, "Fraction of features tried per split")
      ->capture_default_str();
  t->add_flag("--no-bootstrap", train.no_bootstrap, "Train every tree on the full data");
  t->add_option("--encoding", train.hp.encoding, "Feature encoding version")->capture_default_str();
  t->add_option("--threads", train.hp.threads, "Training threads, 0 for all cores")->capture_default_str();
  t->add_option("--out", train.out, "Output model JSON")->required();

  EstimateLayerArgs el;
  auto* e = app.add_subcommand("estimate-layer", "Estimate one layer's latency in seconds");
  e->add_option("--model", el.model, "Model JSON")->required();
  e->add_option("--config", el.config, "Layer config JSON")->required();

  EstimateNetArgs en;
  auto* n = app.add_subcommand("estimate-net", "Estimate a whole network's latency in seconds");
  n->add_option("--network", en.network, "Network graph JSON")->required();
  n->add_option("--models", en.models, "Directory of model JSON files")->required();
  n->add_option("--profile", en.profile, "Platform profile JSON (default: plain sum)");
  n->add_option("--zero-cost", en.zero_cost, "Kinds that cost nothing, e.g. ReLU,Add")->delimiter(',');
  n->add_option("--out", en.out, "Output report JSON");

  FitFusingArgs ff;
  auto* f = app.add_subcommand("fit-fusing", "Fit per-block fusing factors");
  f->add_option("--blocks", ff.blocks, "Block measurement CSV")->required();
  f->add_option("--estimates", ff.estimates, "Per-block summed layer estimates CSV");
  f->add_option("--models", ff.models, "Directory of model JSON files to compute the sums");
  f->add_option("--zero-cost", ff.zero_cost, "Kinds that cost nothing")->delimiter(',');
  f->add_flag("--relu-fused", ff.relu_fused, "ReLU layers fold into their producer");
  f->add_option("--out", ff.out, "Output profile JSON")->required();

  CompareArgs cmp;
  cmp.sizes = {100, 1000};
  auto* c = app.add_subcommand("compare", "Compare representative and uniform sampling");
  c->add_option("--backend", cmp.backend, "Backend spec JSON")->required();
  c->add_option("--kind", cmp.kind, "Operator kind")->required();
  c->add_option("--widths", cmp.widths, "Widths or lattice JSON")->required();
  c->add_option("--bounds", cmp.bounds, "Parameter bounds JSON");
  c->add_option("--constraint", cmp.constraints, "Constraint (repeatable)");
  c->add_option("--sizes", cmp.sizes, "Training sizes")->delimiter(',')->capture_default_str();
  c->add_option("--test-set", cmp.test_set, "Test layers JSON")->required();
  c->add_option("--seeds", cmp.seeds, "Replications per cell (median reported)")->capture_default_str();
  c->add_option("--repeats", cmp.repeats, "Repeats per measurement")->capture_default_str();
  c->add_option("--n-trees", cmp.hp.n_trees, "Number of trees")->capture_default_str();
  c->add_option("--feature-subsample", cmp.hp.feature_subsample, "Fraction of features tried per split")
      ->capture_default_str();
  c->add_option("--out", cmp.out, "Output report JSON")->required();
  c->add_option("--csv", cmp.csv, "Also write size,strategy,mape,rmspe CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    if (ex.get_exit_code() == 0) {
      app.exit(ex, out, err);
      return kExitOk;
    }
    report_error(err, g.json_errors, "UsageError", ex.what(), kExitUsage);
    if (!g.json_errors) {
      const auto subs = app.get_subcommands();
      err << (subs.empty() ? app.help() : subs.front()->help());
    }
    return kExitUsage;
  }

  const Log log(err, g.verbose);
  try {
    if (s->parsed()) return cmd_sweep(sweep, log, out);
    if (d->parsed()) return cmd_detect(detect, log, out);
    if (dv->parsed()) return cmd_derive(derive, log, out);
    if (sm->parsed()) return cmd_sample(smp, g, log, out);
    if (m->parsed()) return cmd_measure(meas, log, out);
    if (t->parsed()) return cmd_train(train, g, log, out);
    if (e->parsed()) return cmd_estimate_layer(el, log, out);
    if (n->parsed()) return cmd_estimate_net(en, log, out);
    if (f->parsed()) return cmd_fit_fusing(ff, log, out);
    if (c->parsed()) return cmd_compare(cmp, g, log, out);
  } catch (const Error& ex) {
    report_error(err, g.json_errors, ex.name(), ex.detail(), kExitDomain);
    return kExitDomain;
  } catch (const std::exception& ex) {
    report_error(err, g.json_errors, "InternalError", ex.what(), kExitDomain);
    return kExitDomain;
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"prbench"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace prbench
