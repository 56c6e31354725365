// SPDX-License-Identifier: Apache-2.0

#include "prbench/backends.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "prbench/csv.hpp"
#include "prbench/rng.hpp"

namespace prbench {
namespace {

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t hash_config(const LayerConfig& config) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  h = fnv1a(h, to_string(config.kind));
  for (const auto& [name, value] : config.params) {
    h = fnv1a(h, name);
    h = fnv1a(h, std::to_string(value));
  }
  return h;
}

const std::vector<LayerConfig>& layers_of(const Subject& subject, std::vector<LayerConfig>& tmp) {
  if (const auto* block = std::get_if<BlockInstance>(&subject)) return block->layers;
  tmp = {std::get<LayerConfig>(subject)};
  return tmp;
}

}  // namespace

bool Backend::supports(const BlockInstance& block) const {
  for (const auto& layer : block.layers) {
    if (!supports(layer.kind)) return false;
  }
  return true;
}

MeasurementRecord Backend::measure(const Subject& subject, int repeats) const {
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  if (const auto* layer = std::get_if<LayerConfig>(&subject)) {
    validate(*layer);
    if (!supports(layer->kind)) {
      throw Error(ErrorCode::UnsupportedSubject,
                  id() + " cannot measure " + std::string(to_string(layer->kind)));
    }
  } else {
    const auto& block = std::get<BlockInstance>(subject);
    for (const auto& l : block.layers) validate(l);
    if (!supports(block)) {
      throw Error(ErrorCode::UnsupportedSubject,
                  id() + " cannot measure block " + std::string(to_string(block.kind)));
    }
  }
  MeasurementRecord record;
  record.subject = subject;
  record.repeats = repeats;
  record.raw_times = sample_times(subject, repeats);
  if (static_cast<int>(record.raw_times.size()) != repeats) {
    throw Error(ErrorCode::BackendFailure, id() + " returned " +
                                               std::to_string(record.raw_times.size()) +
                                               " times for " + std::to_string(repeats) + " repeats");
  }
  for (double t : record.raw_times) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw Error(ErrorCode::BackendFailure, id() + " reported non-positive latency");
    }
  }
  record.latency = aggregate(record.raw_times, Aggregate::Median);
  record.backend_id = id();
  record.timestamp = static_cast<std::int64_t>(std::time(nullptr));
  return record;
}

// ---------------------------------------------------------------------------

SyntheticOracle::SyntheticOracle(SyntheticOracleConfig config) : config_(std::move(config)) {
  if (!(config_.clock_hz > 0.0) || !(config_.cycle_cost_per_tile > 0.0) ||
      config_.base_cycles < 0.0 || config_.noise_rel_sd < 0.0) {
    throw Error(ErrorCode::InvalidArgument,
                "synthetic oracle needs clock_hz > 0, cycle_cost_per_tile > 0, base_cycles >= 0, "
                "noise_rel_sd >= 0");
  }
  for (const auto& [name, w] : config_.widths) {
    if (w < 1) throw Error(ErrorCode::InvalidArgument, "step width of " + name + " must be >= 1");
  }
}

bool SyntheticOracle::supports(OpKind kind) const {
  return config_.kinds.empty() || config_.kinds.contains(kind);
}

double SyntheticOracle::latency(const LayerConfig& config) const {
  double tiles = 1.0;
  const Shape out = config_.spatial_from_output ? output_shape(config) : Shape{};
  for (const auto& name : canonical_params(config.kind)) {
    if (config_.neutral_params.contains(name)) continue;
    std::int64_t value = config.at(name);
    if (config_.spatial_from_output && name == "C_h") value = out.h;
    if (config_.spatial_from_output && name == "C_w") value = out.w;
    const std::int64_t w = width_of(config_.widths, name);
    tiles *= static_cast<double>(w > 1 ? (value + w - 1) / w : value);
  }
  return (config_.base_cycles + config_.cycle_cost_per_tile * tiles) / config_.clock_hz;
}

double SyntheticOracle::noisy_latency(const LayerConfig& config, int repeat_index) const {
  const double clean = latency(config);
  if (config_.noise_rel_sd == 0.0) return clean;
  Rng rng(mix_seed(config_.rng_seed ^ hash_config(config), static_cast<std::uint64_t>(repeat_index)));
  const double sigma = std::sqrt(std::log1p(config_.noise_rel_sd * config_.noise_rel_sd));
  return clean * std::exp(sigma * rng.normal());
}

std::vector<double> SyntheticOracle::sample_times(const Subject& subject, int repeats) const {
  std::vector<LayerConfig> tmp;
  const auto& layers = layers_of(subject, tmp);
  std::vector<double> times(static_cast<std::size_t>(repeats), 0.0);
  for (int r = 0; r < repeats; ++r) {
    for (const auto& layer : layers) times[static_cast<std::size_t>(r)] += noisy_latency(layer, r);
  }
  return times;
}

// ---------------------------------------------------------------------------

FunctionalUnit functional_unit(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Conv1D:
    case OpKind::Conv2D:
    case OpKind::PointwiseConv2D:
    case OpKind::FullyConnected:
      return FunctionalUnit::Conv;
    default:
      return FunctionalUnit::Aux;
  }
}

DualFuOracle::DualFuOracle(SyntheticOracle conv_fu, SyntheticOracle aux_fu,
                           std::set<BlockKind> parallel_pairs, bool relu_fused)
    : conv_fu_(std::move(conv_fu)),
      aux_fu_(std::move(aux_fu)),
      parallel_pairs_(std::move(parallel_pairs)),
      relu_fused_(relu_fused) {}

const SyntheticOracle& DualFuOracle::unit(FunctionalUnit fu) const noexcept {
  return fu == FunctionalUnit::Conv ? conv_fu_ : aux_fu_;
}

bool DualFuOracle::supports(OpKind kind) const { return unit(functional_unit(kind)).supports(kind); }

double DualFuOracle::layer_latency(const LayerConfig& config) const {
  return unit(functional_unit(config.kind)).latency(config);
}

double DualFuOracle::combine(const BlockInstance& block,
                             const std::vector<double>& layer_times) const {
  double conv = 0.0;
  double aux = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < block.layers.size(); ++i) {
    const auto kind = block.layers[i].kind;
    if (relu_fused_ && kind == OpKind::ReLU) continue;
    (functional_unit(kind) == FunctionalUnit::Conv ? conv : aux) += layer_times[i];
    total += layer_times[i];
  }
  return parallel_pairs_.contains(block.kind) ? std::max(conv, aux) : total;
}

double DualFuOracle::block_latency(const BlockInstance& block) const {
  std::vector<double> times;
  times.reserve(block.layers.size());
  for (const auto& layer : block.layers) times.push_back(layer_latency(layer));
  return combine(block, times);
}

std::vector<double> DualFuOracle::sample_times(const Subject& subject, int repeats) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    if (const auto* layer = std::get_if<LayerConfig>(&subject)) {
      out.push_back(unit(functional_unit(layer->kind)).noisy_latency(*layer, r));
      continue;
    }
    const auto& block = std::get<BlockInstance>(subject);
    std::vector<double> times;
    for (const auto& l : block.layers) times.push_back(unit(functional_unit(l.kind)).noisy_latency(l, r));
    out.push_back(combine(block, times));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string substitute(std::string arg, std::string_view key, const std::string& value) {
  for (std::size_t pos = arg.find(key); pos != std::string::npos; pos = arg.find(key, pos + value.size())) {
    arg.replace(pos, key.size(), value);
  }
  return arg;
}

struct ChildResult {
  int status{0};
  bool timed_out{false};
  std::string out;
};

ChildResult run_child(const std::vector<std::string>& argv, const std::string& input,
                      std::chrono::milliseconds timeout) {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw Error(ErrorCode::BackendFailure, std::strerror(errno));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(ErrorCode::BackendFailure, std::strerror(errno));
  }
  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  const pid_t pid = fork();
  if (pid < 0) throw Error(ErrorCode::BackendFailure, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execvp(cargv[0], cargv.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);

  // The child may exit without draining stdin.
  struct sigaction ignore {}, previous {};
  ignore.sa_handler = SIG_IGN;
  sigaction(SIGPIPE, &ignore, &previous);
  std::size_t written = 0;
  while (written < input.size()) {
    const ssize_t n = write(in_pipe[1], input.data() + written, input.size() - written);
    if (n <= 0) break;
    written += static_cast<std::size_t>(n);
  }
  close(in_pipe[1]);
  sigaction(SIGPIPE, &previous, nullptr);

  ChildResult result;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  char buf[4096];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    pollfd pfd{out_pipe[0], POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc == 0) {
      result.timed_out = true;
      break;
    }
    const ssize_t n = read(out_pipe[0], buf, sizeof(buf));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    result.out.append(buf, static_cast<std::size_t>(n));
  }
  close(out_pipe[0]);
  if (result.timed_out) kill(pid, SIGKILL);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.status = status;
  return result;
}

}  // namespace

ExternalCommandBackend::ExternalCommandBackend(ExternalCommandConfig config)
    : config_(std::move(config)) {
  if (config_.command.empty()) throw Error(ErrorCode::InvalidArgument, "external backend needs a command");
}

std::vector<double> ExternalCommandBackend::sample_times(const Subject& subject, int repeats) const {
  std::unique_lock<std::mutex> lock(serial_, std::defer_lock);
  if (!config_.allow_parallel) lock.lock();

  json payload;
  if (const auto* layer = std::get_if<LayerConfig>(&subject)) {
    payload = *layer;
  } else {
    payload = std::get<BlockInstance>(subject);
  }
  const std::string text = payload.dump();

  static std::atomic<unsigned> counter{0};
  const auto path = std::filesystem::temp_directory_path() /
                    ("prbench-" + std::to_string(getpid()) + "-" + std::to_string(counter++) + ".json");
  {
    std::ofstream f(path);
    f << text << "\n";
  }
  std::vector<std::string> argv;
  for (const auto& arg : config_.command) {
    argv.push_back(substitute(substitute(arg, "{config_path}", path.string()), "{repeats}",
                              std::to_string(repeats)));
  }
  ChildResult child;
  try {
    child = run_child(argv, text + "\n", config_.timeout);
  } catch (...) {
    std::filesystem::remove(path);
    throw;
  }
  std::filesystem::remove(path);

  if (child.timed_out) {
    throw Error(ErrorCode::BackendFailure,
                "'" + config_.command.front() + "' timed out after " +
                    std::to_string(config_.timeout.count()) + " ms");
  }
  if (!WIFEXITED(child.status) || WEXITSTATUS(child.status) != 0) {
    throw Error(ErrorCode::BackendFailure,
                "'" + config_.command.front() + "' exited with status " +
                    std::to_string(WIFEXITED(child.status) ? WEXITSTATUS(child.status) : -1));
  }
  std::vector<double> times;
  std::istringstream lines(child.out);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    double value = 0.0;
    if (!csv::parse_double(line, value)) {
      throw Error(ErrorCode::BackendFailure, "malformed output line '" + line + "'");
    }
    times.push_back(value);
  }
  if (static_cast<int>(times.size()) != repeats) {
    throw Error(ErrorCode::BackendFailure, "expected " + std::to_string(repeats) +
                                               " output values, got " + std::to_string(times.size()));
  }
  return times;
}

// ---------------------------------------------------------------------------

SyntheticOracleConfig synthetic_config_from_json(const json& j) {
  SyntheticOracleConfig c;
  try {
    if (j.contains("widths")) {
      for (const auto& [name, w] : j.at("widths").items()) c.widths[name] = w.get<std::int64_t>();
    }
    c.cycle_cost_per_tile = j.value("cycle_cost_per_tile", c.cycle_cost_per_tile);
    c.base_cycles = j.value("base_cycles", c.base_cycles);
    c.clock_hz = j.value("clock_hz", c.clock_hz);
    c.noise_rel_sd = j.value("noise_rel_sd", c.noise_rel_sd);
    c.rng_seed = j.value("rng_seed", c.rng_seed);
    c.name = j.value("name", c.name);
    c.spatial_from_output = j.value("spatial_from_output", c.spatial_from_output);
    if (j.contains("kinds")) {
      for (const auto& k : j.at("kinds")) c.kinds.insert(parse_op_kind(k.get<std::string>()));
    }
    if (j.contains("neutral_params")) {
      c.neutral_params.clear();
      for (const auto& p : j.at("neutral_params")) c.neutral_params.insert(p.get<std::string>());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("synthetic backend: ") + e.what());
  }
  return c;
}

json synthetic_config_to_json(const SyntheticOracleConfig& c) {
  json j{{"type", "synthetic"}, {"name", c.name}};
  json widths = json::object();
  for (const auto& [name, w] : c.widths) widths[name] = w;
  j["widths"] = widths;
  j["cycle_cost_per_tile"] = c.cycle_cost_per_tile;
  j["base_cycles"] = c.base_cycles;
  j["clock_hz"] = c.clock_hz;
  j["noise_rel_sd"] = c.noise_rel_sd;
  j["rng_seed"] = c.rng_seed;
  json kinds = json::array();
  for (OpKind k : c.kinds) kinds.push_back(std::string(to_string(k)));
  j["kinds"] = kinds;
  j["neutral_params"] = std::vector<std::string>(c.neutral_params.begin(), c.neutral_params.end());
  j["spatial_from_output"] = c.spatial_from_output;
  return j;
}

std::unique_ptr<Backend> make_backend(const json& spec) {
  check_format_version(spec, "backend spec");
  const std::string type = spec.value("type", "");
  if (type == "synthetic") return std::make_unique<SyntheticOracle>(synthetic_config_from_json(spec));
  if (type == "dual_fu") {
    std::set<BlockKind> pairs;
    try {
      for (const auto& p : spec.value("parallel_pairs", json::array())) {
        pairs.insert(parse_block_kind(p.get<std::string>()));
      }
      auto conv = synthetic_config_from_json(spec.at("conv_fu"));
      auto aux = synthetic_config_from_json(spec.at("aux_fu"));
      return std::make_unique<DualFuOracle>(SyntheticOracle(conv), SyntheticOracle(aux), pairs,
                                            spec.value("relu_fused", true));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("dual_fu backend: ") + e.what());
    }
  }
  if (type == "external") {
    ExternalCommandConfig c;
    try {
      c.command = spec.at("command").get<std::vector<std::string>>();
      c.timeout = std::chrono::milliseconds(
          static_cast<std::int64_t>(1000.0 * spec.value("timeout_s", 60.0)));
      c.allow_parallel = spec.value("allow_parallel", false);
      c.name = spec.value("name", c.name);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, std::string("external backend: ") + e.what());
    }
    return std::make_unique<ExternalCommandBackend>(std::move(c));
  }
  throw Error(ErrorCode::ParseError, "backend type must be synthetic, dual_fu or external, got '" + type + "'");
}

// ---------------------------------------------------------------------------

bool StoreFilter::matches(const MeasurementRecord& record) const {
  const auto* layer = std::get_if<LayerConfig>(&record.subject);
  if (!layer) return false;
  if (kind && layer->kind != *kind) return false;
  if (backend_id && record.backend_id != *backend_id) return false;
  for (const auto& [name, range] : ranges) {
    auto value = layer->find(name);
    if (!value || *value < range.first || *value > range.second) return false;
  }
  return true;
}

MeasurementStore::MeasurementStore(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<std::string> MeasurementStore::header() {
  std::vector<std::string> cols{"kind"};
  for (const auto& name : all_param_names()) cols.push_back(name);
  cols.insert(cols.end(), {"repeats", "latency_s", "backend_id"});
  return cols;
}

std::string MeasurementStore::format_row(const MeasurementRecord& record) {
  const auto* layer = std::get_if<LayerConfig>(&record.subject);
  if (!layer) {
    throw Error(ErrorCode::UnsupportedSubject, "the measurement store holds layer records only");
  }
  std::vector<std::string> fields{std::string(to_string(layer->kind))};
  for (const auto& name : all_param_names()) {
    auto value = layer->find(name);
    fields.push_back(value ? std::to_string(*value) : std::string());
  }
  fields.push_back(std::to_string(record.repeats));
  fields.push_back(csv::format_double(record.latency));
  fields.push_back(record.backend_id);
  return csv::join(fields);
}

void MeasurementStore::append(const MeasurementRecord& record) {
  if (const auto* layer = std::get_if<LayerConfig>(&record.subject)) validate(*layer);
  if (!(record.latency > 0.0)) throw Error(ErrorCode::InvalidArgument, "latency must be > 0");
  const std::string row = format_row(record);

  std::lock_guard lock(mutex_);
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path_, ec) || std::filesystem::file_size(path_, ec) == 0;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open store " + path_.string());
  if (fresh) out << csv::join(header()) << "\n";
  out << row << "\n";
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "append to " + path_.string() + " failed");
}

std::vector<MeasurementRecord> MeasurementStore::query(const StoreFilter& filter) const {
  std::lock_guard lock(mutex_);
  if (!std::filesystem::exists(path_)) return {};
  const auto rows = csv::parse(read_text_file(path_));
  std::vector<MeasurementRecord> out;
  if (rows.empty()) return out;
  const auto expected = header();
  if (rows.front() != expected) throw Error(ErrorCode::CorruptStore, path_.string() + ": unexpected header");
  const std::size_t n_params = all_param_names().size();

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto corrupt = [&](const std::string& why) {
      return Error(ErrorCode::CorruptStore, path_.string() + " row " + std::to_string(r + 1) + ": " + why);
    };
    if (row.size() != expected.size()) throw corrupt("wrong column count");
    LayerConfig layer;
    try {
      layer.kind = parse_op_kind(row[0]);
    } catch (const Error& e) {
      throw corrupt(e.detail());
    }
    for (std::size_t i = 0; i < n_params; ++i) {
      const auto& cell = row[1 + i];
      if (cell.empty()) continue;
      long long v = 0;
      if (!csv::parse_int(cell, v)) throw corrupt("bad integer '" + cell + "'");
      layer.params[all_param_names()[i]] = v;
    }
    if (!violations(layer).empty()) {
      try {
        validate(layer);
      } catch (const Error& e) {
        throw corrupt(e.detail());
      }
    }
    MeasurementRecord rec;
    long long repeats = 0;
    if (!csv::parse_int(row[1 + n_params], repeats) || repeats < 1) throw corrupt("bad repeats");
    double latency = 0.0;
    if (!csv::parse_double(row[2 + n_params], latency) || !(latency > 0.0)) throw corrupt("bad latency_s");
    rec.subject = std::move(layer);
    rec.repeats = static_cast<int>(repeats);
    rec.latency = latency;
    rec.raw_times = {latency};
    rec.backend_id = row[3 + n_params];
    if (filter.matches(rec)) out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace prbench
