// SPDX-License-Identifier: Apache-2.0
//
// Performance-representative lattices: the configurations whose stepped
// parameters are integer multiples of their step widths. Provides white-box
// derivation from a hardware description, mapping of arbitrary configs onto
// their representative, counting and seeded sampling.

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "prbench/domain.hpp"
#include "prbench/json_io.hpp"

namespace prbench {

/// `lhs op rhs` where rhs is a parameter name or an integer, e.g. "F_h=F_w"
/// or "F_h>=3".
struct Constraint {
  enum class Op { Eq, Ge, Le };

  std::string lhs;
  Op op{Op::Eq};
  std::variant<std::string, std::int64_t> rhs;

  bool holds(const LayerConfig& config) const;
  std::vector<std::string> params() const;

  static Constraint parse(std::string_view text);
  friend bool operator==(const Constraint&, const Constraint&) = default;
};

std::string to_string(const Constraint& c);

struct PrLattice {
  OpKind kind{OpKind::Conv2D};
  StepWidthMap widths;
  ParamBounds bounds;
  std::vector<Constraint> constraints;

  std::int64_t width(std::string_view name) const { return width_of(widths, name); }
  /// Ascending values a member may take for `name`.
  std::vector<std::int64_t> values(std::string_view name) const;
  bool contains(const LayerConfig& config) const;
};

/// Validates bounds, widths and constraints; every stepped parameter must
/// have at least one multiple of its width inside its range.
PrLattice make_lattice(OpKind kind, StepWidthMap widths, ParamBounds bounds,
                       std::vector<Constraint> constraints = {});

/// widths[mapping[i]] = dims[i]; unmapped parameters get width 1.
PrLattice derive_from_description(const HardwareDescription& desc, const ParamBounds& bounds,
                                  std::vector<Constraint> constraints = {});

struct PrMapping {
  LayerConfig config;
  bool clamped{false};  // a stepped parameter was pulled back inside bounds
};

/// Replaces every stepped parameter p by ceil(p / w_p) * w_p, clamped to the
/// lattice range of p. Width-1 parameters pass through unchanged.
PrMapping map_to_pr(const LayerConfig& config, const PrLattice& lattice);

/// Lattice size without materializing it; throws InvalidArgument on overflow.
std::uint64_t enumerate_count(const PrLattice& lattice);

/// n distinct members, uniformly without replacement, reproducible per seed.
/// Throws InvalidArgument for n < 1 and LatticeTooSmall for n > count.
std::vector<LayerConfig> sample(const PrLattice& lattice, std::uint64_t n, std::uint64_t seed);

/// Uniform baseline over the whole bounded space (all widths 1).
std::vector<LayerConfig> sample_random_full_space(const ParamBounds& bounds, std::uint64_t n,
                                                  std::uint64_t seed,
                                                  std::vector<Constraint> constraints = {});

void to_json(json& j, const PrLattice& lattice);
void from_json(const json& j, PrLattice& lattice);

}  // namespace prbench
