// SPDX-License-Identifier: Apache-2.0
//
// Measurement sources. Synthetic oracles reproduce step-wise accelerator
// timing deterministically; the external backend shells out to a real
// measurer; the store persists measurements as CSV.

#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "prbench/domain.hpp"
#include "prbench/json_io.hpp"

namespace prbench {

class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string id() const = 0;
  virtual bool supports(OpKind kind) const = 0;
  virtual bool supports(const BlockInstance& block) const;
  /// Whether measure() may be called from several threads at once.
  virtual bool parallel_safe() const { return true; }

  /// Runs `repeats` measurements and aggregates them with the median.
  /// Throws UnsupportedSubject, BackendFailure or InvalidParam.
  MeasurementRecord measure(const Subject& subject, int repeats) const;

 protected:
  virtual std::vector<double> sample_times(const Subject& subject, int repeats) const = 0;
};

/// latency = (base + cost_per_tile * prod ceil(p / w_p) * prod q) / clock_hz
/// over stepped parameters p (w_p > 1) and the remaining parameters q, except
/// the latency-neutral ones (stride and padding by default). Noise is a
/// median-one log-normal factor exp(sigma Z) with sigma^2 = ln(1 + sd^2),
/// seeded by (rng_seed, subject, repeat index), so the oracle stays a pure
/// function of its inputs. With spatial_from_output, C_h and C_w contribute
/// the output extent instead of the input extent (cost per output position).
struct SyntheticOracleConfig {
  StepWidthMap widths;
  double cycle_cost_per_tile{1.0};
  double base_cycles{0.0};
  double clock_hz{1.0};
  double noise_rel_sd{0.0};
  std::uint64_t rng_seed{0};
  std::set<OpKind> kinds;  // empty: every kind
  std::set<std::string, std::less<>> neutral_params{"s", "pad"};
  bool spatial_from_output{false};
  std::string name{"synthetic"};
};

class SyntheticOracle : public Backend {
 public:
  explicit SyntheticOracle(SyntheticOracleConfig config);

  std::string id() const override { return config_.name; }
  bool supports(OpKind kind) const override;

  /// Noiseless latency in seconds.
  double latency(const LayerConfig& config) const;
  /// Latency of repeat `repeat_index`, including noise.
  double noisy_latency(const LayerConfig& config, int repeat_index) const;

  const SyntheticOracleConfig& config() const noexcept { return config_; }

 protected:
  std::vector<double> sample_times(const Subject& subject, int repeats) const override;

 private:
  SyntheticOracleConfig config_;
};

enum class FunctionalUnit { Conv, Aux };

/// Convolution/FC layers run on the conv unit; depthwise, pooling and
/// element-wise layers on the aux unit.
FunctionalUnit functional_unit(OpKind kind) noexcept;

/// Two functional units that overlap consecutive layers for selected block
/// kinds: block latency is the max of the per-unit sums for parallel pairs
/// and the plain sum otherwise. ReLU is folded into its producer when
/// relu_fused is set.
class DualFuOracle : public Backend {
 public:
  DualFuOracle(SyntheticOracle conv_fu, SyntheticOracle aux_fu, std::set<BlockKind> parallel_pairs,
               bool relu_fused = true);

  std::string id() const override { return "dual_fu"; }
  bool supports(OpKind kind) const override;

  double layer_latency(const LayerConfig& config) const;
  double block_latency(const BlockInstance& block) const;

  const SyntheticOracle& unit(FunctionalUnit fu) const noexcept;
  const std::set<BlockKind>& parallel_pairs() const noexcept { return parallel_pairs_; }
  bool relu_fused() const noexcept { return relu_fused_; }

 protected:
  std::vector<double> sample_times(const Subject& subject, int repeats) const override;

 private:
  double combine(const BlockInstance& block, const std::vector<double>& layer_times) const;

  SyntheticOracle conv_fu_;
  SyntheticOracle aux_fu_;
  std::set<BlockKind> parallel_pairs_;
  bool relu_fused_;
};

/// Runs `command` once per measurement. The child receives the subject JSON
/// on stdin (and in the file substituted for {config_path}); {repeats} is
/// substituted with the repeat count. It must print one number of seconds
/// per repeat, one per line.
struct ExternalCommandConfig {
  std::vector<std::string> command;
  std::chrono::milliseconds timeout{std::chrono::seconds(60)};
  bool allow_parallel{false};
  std::string name{"external"};
};

class ExternalCommandBackend : public Backend {
 public:
  explicit ExternalCommandBackend(ExternalCommandConfig config);

  std::string id() const override { return config_.name; }
  bool supports(OpKind) const override { return true; }
  bool parallel_safe() const override { return config_.allow_parallel; }

 protected:
  std::vector<double> sample_times(const Subject& subject, int repeats) const override;

 private:
  ExternalCommandConfig config_;
  mutable std::mutex serial_;
};

/// {"type":"synthetic"|"dual_fu"|"external", ...}
std::unique_ptr<Backend> make_backend(const json& spec);
SyntheticOracleConfig synthetic_config_from_json(const json& j);
json synthetic_config_to_json(const SyntheticOracleConfig& config);

// ---------------------------------------------------------------------------

struct StoreFilter {
  std::optional<OpKind> kind;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>, std::less<>> ranges;
  std::optional<std::string> backend_id;

  bool matches(const MeasurementRecord& record) const;
};

/// Append-only CSV: kind, one column per canonical parameter (blank when
/// the kind lacks it), repeats, latency_s, backend_id. Holds layer
/// measurements only; block measurements go to the block CSV (fusion.hpp).
class MeasurementStore {
 public:
  explicit MeasurementStore(std::filesystem::path path);

  void append(const MeasurementRecord& record);
  /// Records matching `filter`, in insertion order. Throws CorruptStore when
  /// a row fails validation.
  std::vector<MeasurementRecord> query(const StoreFilter& filter = {}) const;

  const std::filesystem::path& path() const noexcept { return path_; }

  static std::vector<std::string> header();
  static std::string format_row(const MeasurementRecord& record);

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

}  // namespace prbench
