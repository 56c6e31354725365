// SPDX-License-Identifier: Apache-2.0
//
// Python entry points. Structured values cross the boundary as JSON text;
// the package's __init__.py converts to and from dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "prbench/cli.hpp"
#include "prbench/evalharness.hpp"
#include "prbench/forest.hpp"
#include "prbench/netgraph.hpp"
#include "prbench/prdetect.hpp"
#include "prbench/prset.hpp"
#include "prbench/sweep.hpp"

namespace py = pybind11;
using namespace prbench;

namespace {

json parse(const std::string& text) { return parse_json(text, "argument"); }

PrLattice lattice_from(const std::string& text) { return parse(text).get<PrLattice>(); }

std::string map_to_pr_json(const std::string& config, const std::string& lattice) {
  const PrMapping m = map_to_pr(layer_from_json(parse(config)), lattice_from(lattice));
  return json{{"config", m.config}, {"clamped", m.clamped}}.dump();
}

std::string derive_json(const std::string& description, const std::string& bounds) {
  const auto desc = parse(description).get<HardwareDescription>();
  const ParamBounds b = bounds.empty() ? default_bounds(desc.operation) : parse(bounds).get<ParamBounds>();
  return json(derive_from_description(desc, b)).dump();
}

std::string sample_json(const std::string& lattice, std::uint64_t n, std::uint64_t seed) {
  return json(sample(lattice_from(lattice), n, seed)).dump();
}

std::uint64_t count_json(const std::string& lattice) { return enumerate_count(lattice_from(lattice)); }

std::string detect_json(const std::string& sweeps, double threshold, double prominence, double tolerance) {
  std::map<std::string, SweepResult> results;
  const json doc = parse(sweeps);
  for (const auto& [param, s] : doc.items()) results.emplace(param, s.get<SweepResult>());
  const DetectorConfig cfg{threshold, prominence, tolerance};
  return json(determine_step_widths(results, cfg)).dump();
}

std::string sweep_json(const std::string& backend, const std::string& bounds, const std::string& param,
                       int repeats) {
  const auto b = make_backend(parse(backend));
  const auto plans = plan_sweeps(parse(bounds).get<ParamBounds>(), {param});
  return json(run_sweep(plans.front(), *b, repeats)).dump();
}

double measure_json(const std::string& backend, const std::string& config, int repeats) {
  return make_backend(parse(backend))->measure(layer_from_json(parse(config)), repeats).latency;
}

class Model {
 public:
  explicit Model(LatencyModel model) : model_(std::move(model)) {}

  double predict(const std::string& config) const { return prbench::predict(model_, layer_from_json(parse(config))); }
  double estimate(const std::string& config) const {
    return estimate_layer(model_, layer_from_json(parse(config)));
  }
  std::string serialize() const { return prbench::serialize(model_); }
  std::string kind() const { return std::string(to_string(model_.kind)); }
  std::size_t n_trees() const { return model_.trees.size(); }
  const LatencyModel& get() const { return model_; }

 private:
  LatencyModel model_;
};

Model fit_json(const std::string& configs, const std::vector<double>& latencies, int n_trees, int max_depth,
               int min_samples_leaf, double feature_subsample, bool bootstrap, std::uint64_t seed, int encoding,
               const std::string& lattice) {
  const json list = parse(configs);
  if (list.size() != latencies.size()) throw Error(ErrorCode::LengthMismatch, "configs and latencies differ in length");
  std::vector<TrainingSample> samples;
  for (std::size_t i = 0; i < latencies.size(); ++i) samples.push_back({layer_from_json(list[i]), latencies[i]});
  ForestHyperparams hp;
  hp.n_trees = n_trees;
  hp.max_depth = max_depth;
  hp.min_samples_leaf = min_samples_leaf;
  hp.feature_subsample = feature_subsample;
  hp.bootstrap = bootstrap;
  hp.seed = seed;
  hp.encoding = encoding;
  std::optional<PrLattice> l;
  if (!lattice.empty()) l = lattice_from(lattice);
  py::gil_scoped_release release;
  return Model(fit(samples, hp, l));
}

std::string estimate_network_json(const std::string& network, const std::vector<Model*>& models,
                                  const std::vector<std::string>& zero_cost, const std::string& profile) {
  ModelSet set;
  for (const auto* m : models) set.models.emplace(m->get().kind, m->get());
  for (const auto& k : zero_cost) set.zero_cost.insert(parse_op_kind(k));
  PlatformProfile p;
  if (!profile.empty()) p = parse(profile).get<PlatformProfile>();
  return to_json(estimate_network(load_network(parse(network)), set, p)).dump();
}

std::string match_blocks_json(const std::string& network) {
  const Decomposition d = match_blocks(load_network(parse(network)));
  json blocks = json::array();
  for (const auto& b : d.blocks) blocks.push_back({{"kind", std::string(to_string(b.block.kind))}, {"nodes", b.node_ids}});
  return json{{"blocks", blocks}, {"residual", d.residual_layers}}.dump();
}

py::tuple cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_prbench, m) {
  m.doc() = "Benchmark-driven latency modelling for DNN accelerators";
  m.attr("FORMAT_VERSION") = std::string(kFormatVersion);

  py::register_exception<Error>(m, "PrbenchError");

  m.def("map_to_pr", &map_to_pr_json, py::arg("config"), py::arg("lattice"));
  m.def("derive_lattice", &derive_json, py::arg("description"), py::arg("bounds") = "");
  m.def("sample", &sample_json, py::arg("lattice"), py::arg("n"), py::arg("seed"));
  m.def("lattice_size", &count_json, py::arg("lattice"));
  m.def("determine_step_widths", &detect_json, py::arg("sweeps"), py::arg("threshold") = 0.05,
        py::arg("prominence") = 0.5, py::arg("tolerance") = 1.0);
  m.def("sweep", &sweep_json, py::arg("backend"), py::arg("bounds"), py::arg("param"), py::arg("repeats") = 1);
  m.def("measure", &measure_json, py::arg("backend"), py::arg("config"), py::arg("repeats") = 1);
  m.def("mac_count", [](const std::string& config) { return mac_count(layer_from_json(parse(config))); });
  m.def("mape", [](const std::vector<double>& m_, const std::vector<double>& e) { return mape(m_, e); });
  m.def("rmspe", [](const std::vector<double>& m_, const std::vector<double>& e) { return rmspe(m_, e); });

  py::class_<Model>(m, "Model")
      .def("predict", &Model::predict)
      .def("estimate_layer", &Model::estimate)
      .def("serialize", &Model::serialize)
      .def_property_readonly("kind", &Model::kind)
      .def_property_readonly("n_trees", &Model::n_trees);
  m.def("fit", &fit_json, py::arg("configs"), py::arg("latencies"), py::arg("n_trees") = 100,
        py::arg("max_depth") = 0, py::arg("min_samples_leaf") = 1, py::arg("feature_subsample") = 1.0 / 3.0,
        py::arg("bootstrap") = true, py::arg("seed") = 0, py::arg("encoding") = kDefaultEncoding,
        py::arg("lattice") = "");
  m.def("load_model", [](const std::string& text) { return Model(deserialize(text)); });

  m.def("match_blocks", &match_blocks_json, py::arg("network"));
  m.def("estimate_network", &estimate_network_json, py::arg("network"), py::arg("models"),
        py::arg("zero_cost") = std::vector<std::string>{}, py::arg("profile") = "");
  m.def("mobilenet_v1", [](std::int64_t r, std::int64_t c) { return network_to_json(mobilenet_v1(r, c)).dump(); },
        py::arg("resolution") = 224, py::arg("classes") = 1000);
  m.def("resnet18", [](std::int64_t r, std::int64_t c) { return network_to_json(resnet18(r, c)).dump(); },
        py::arg("resolution") = 224, py::arg("classes") = 1000);
  m.def("run_cli", &cli, py::arg("args"));
}
