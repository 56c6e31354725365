// SPDX-License-Identifier: Apache-2.0

#include "prbench/prset.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "prbench/rng.hpp"

namespace prbench {
namespace {

constexpr std::uint64_t kMaxComponentTuples = 20'000'000;

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw Error(ErrorCode::InvalidArgument, "lattice size overflows 64 bits");
  }
  return a * b;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// One independent axis of the mixed-radix index space: either a single
// parameter or a group of parameters tied together by constraints.
struct Axis {
  std::vector<std::string> params;
  std::vector<std::vector<std::int64_t>> tuples;  // tuples[k][i] is the value of params[i]
};

std::vector<Axis> build_axes(const PrLattice& lattice) {
  const auto canon = canonical_params(lattice.kind);
  std::vector<std::string> names(canon.begin(), canon.end());
  std::vector<std::size_t> parent(names.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  auto index_of = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
  };
  for (const auto& c : lattice.constraints) {
    const auto ps = c.params();
    for (std::size_t k = 1; k < ps.size(); ++k) parent[find(index_of(ps[k]))] = find(index_of(ps[0]));
  }

  std::vector<Axis> axes;
  std::vector<int> axis_of_root(names.size(), -1);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::size_t root = find(i);
    if (axis_of_root[root] < 0) {
      axis_of_root[root] = static_cast<int>(axes.size());
      axes.emplace_back();
    }
    axes[static_cast<std::size_t>(axis_of_root[root])].params.push_back(names[i]);
  }

  for (auto& axis : axes) {
    std::vector<std::vector<std::int64_t>> choices;
    std::uint64_t product = 1;
    for (const auto& p : axis.params) {
      choices.push_back(lattice.values(p));
      product = checked_mul(product, choices.back().size());
    }
    std::vector<const Constraint*> relevant;
    for (const auto& c : lattice.constraints) {
      if (std::find(axis.params.begin(), axis.params.end(), c.lhs) != axis.params.end()) {
        relevant.push_back(&c);
      }
    }
    if (axis.params.size() == 1 && relevant.empty()) {
      for (auto v : choices[0]) axis.tuples.push_back({v});
      continue;
    }
    if (product > kMaxComponentTuples) {
      throw Error(ErrorCode::InvalidArgument, "constraint group is too large to enumerate");
    }
    std::vector<std::size_t> digit(axis.params.size(), 0);
    LayerConfig probe{lattice.kind, {}};
    for (std::uint64_t k = 0; k < product; ++k) {
      std::vector<std::int64_t> tuple(axis.params.size());
      for (std::size_t i = 0; i < axis.params.size(); ++i) {
        tuple[i] = choices[i][digit[i]];
        probe.params[axis.params[i]] = tuple[i];
      }
      if (std::all_of(relevant.begin(), relevant.end(), [&](const Constraint* c) { return c->holds(probe); })) {
        axis.tuples.push_back(std::move(tuple));
      }
      for (std::size_t i = axis.params.size(); i-- > 0;) {
        if (++digit[i] < choices[i].size()) break;
        digit[i] = 0;
      }
    }
  }
  return axes;
}

LayerConfig decode(const PrLattice& lattice, const std::vector<Axis>& axes, std::uint64_t index) {
  LayerConfig config{lattice.kind, {}};
  for (std::size_t a = axes.size(); a-- > 0;) {
    const auto& axis = axes[a];
    const std::uint64_t radix = axis.tuples.size();
    const auto& tuple = axis.tuples[index % radix];
    index /= radix;
    for (std::size_t i = 0; i < axis.params.size(); ++i) config.params[axis.params[i]] = tuple[i];
  }
  return config;
}

}  // namespace

// ---------------------------------------------------------------------------

bool Constraint::holds(const LayerConfig& config) const {
  const std::int64_t left = config.at(lhs);
  const std::int64_t right =
      std::holds_alternative<std::int64_t>(rhs) ? std::get<std::int64_t>(rhs) : config.at(std::get<std::string>(rhs));
  switch (op) {
    case Op::Eq: return left == right;
    case Op::Ge: return left >= right;
    case Op::Le: return left <= right;
  }
  return false;
}

std::vector<std::string> Constraint::params() const {
  std::vector<std::string> out{lhs};
  if (const auto* name = std::get_if<std::string>(&rhs)) out.push_back(*name);
  return out;
}

Constraint Constraint::parse(std::string_view text) {
  std::string compact;
  for (char ch : text) {
    if (ch != ' ') compact.push_back(ch);
  }
  Constraint c;
  std::size_t pos = compact.find(">=");
  std::size_t len = 2;
  if (pos != std::string::npos) {
    c.op = Op::Ge;
  } else if ((pos = compact.find("<=")) != std::string::npos) {
    c.op = Op::Le;
  } else if ((pos = compact.find("==")) != std::string::npos) {
    c.op = Op::Eq;
  } else if ((pos = compact.find('=')) != std::string::npos) {
    c.op = Op::Eq;
    len = 1;
  } else {
    throw Error(ErrorCode::ParseError, "constraint '" + std::string(text) + "' has no =, >= or <=");
  }
  c.lhs = compact.substr(0, pos);
  const std::string right = compact.substr(pos + len);
  if (c.lhs.empty() || right.empty()) {
    throw Error(ErrorCode::ParseError, "constraint '" + std::string(text) + "' is incomplete");
  }
  std::int64_t number = 0;
  auto [ptr, ec] = std::from_chars(right.data(), right.data() + right.size(), number);
  if (ec == std::errc() && ptr == right.data() + right.size()) {
    c.rhs = number;
  } else {
    c.rhs = right;
  }
  return c;
}

std::string to_string(const Constraint& c) {
  std::string out = c.lhs;
  out += c.op == Constraint::Op::Eq ? "=" : c.op == Constraint::Op::Ge ? ">=" : "<=";
  out += std::holds_alternative<std::int64_t>(c.rhs) ? std::to_string(std::get<std::int64_t>(c.rhs))
                                                     : std::get<std::string>(c.rhs);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::int64_t> PrLattice::values(std::string_view name) const {
  const ParamRange& r = bounds.at(name);
  const std::int64_t w = width(name);
  std::vector<std::int64_t> out;
  if (w <= 1) {
    out.reserve(static_cast<std::size_t>(r.size()));
    for (std::int64_t v = r.min; v <= r.max; ++v) out.push_back(v);
    return out;
  }
  for (std::int64_t v = std::max<std::int64_t>(1, ceil_div(r.min, w)) * w; v <= r.max; v += w) out.push_back(v);
  return out;
}

bool PrLattice::contains(const LayerConfig& config) const {
  if (config.kind != kind || !bounds.contains(config)) return false;
  for (const auto& [name, w] : widths) {
    auto value = config.find(name);
    if (w > 1 && (!value || *value % w != 0)) return false;
  }
  return std::all_of(constraints.begin(), constraints.end(),
                     [&](const Constraint& c) { return c.holds(config); });
}

PrLattice make_lattice(OpKind kind, StepWidthMap widths, ParamBounds bounds,
                       std::vector<Constraint> constraints) {
  if (bounds.kind != kind) {
    throw Error(ErrorCode::KindMismatch, "bounds are for " + std::string(to_string(bounds.kind)) +
                                             ", lattice for " + std::string(to_string(kind)));
  }
  check_bounds(bounds);
  for (const auto& [name, w] : widths) {
    if (!is_canonical_param(kind, name)) {
      throw Error(ErrorCode::InvalidArgument, name + " is not a parameter of " + std::string(to_string(kind)));
    }
    if (w < 1) throw Error(ErrorCode::InvalidArgument, "step width of " + name + " must be >= 1");
  }
  for (const auto& c : constraints) {
    for (const auto& p : c.params()) {
      if (!is_canonical_param(kind, p)) {
        throw Error(ErrorCode::InvalidArgument, "constraint " + to_string(c) + " names unknown parameter " + p);
      }
    }
  }
  PrLattice lattice{kind, std::move(widths), std::move(bounds), std::move(constraints)};
  for (const auto& name : canonical_params(kind)) {
    if (lattice.width(name) > 1 && lattice.values(name).empty()) {
      throw Error(ErrorCode::InvalidBounds, "no multiple of " + std::to_string(lattice.width(name)) +
                                                " lies inside the range of " + name);
    }
  }
  return lattice;
}

PrLattice derive_from_description(const HardwareDescription& desc, const ParamBounds& bounds,
                                  std::vector<Constraint> constraints) {
  validate(desc);
  StepWidthMap widths;
  for (const auto& name : canonical_params(desc.operation)) widths[name] = 1;
  for (std::size_t i = 0; i < desc.mapping.size(); ++i) widths[desc.mapping[i]] = desc.dims[i];
  return make_lattice(desc.operation, std::move(widths), bounds, std::move(constraints));
}

PrMapping map_to_pr(const LayerConfig& config, const PrLattice& lattice) {
  if (config.kind != lattice.kind) {
    throw Error(ErrorCode::KindMismatch, "cannot map " + std::string(to_string(config.kind)) + " onto a " +
                                             std::string(to_string(lattice.kind)) + " lattice");
  }
  validate(config);
  PrMapping out{config, false};
  for (auto& [name, value] : out.config.params) {
    const std::int64_t w = lattice.width(name);
    if (w <= 1) continue;
    const ParamRange& r = lattice.bounds.at(name);
    const std::int64_t lowest = std::max<std::int64_t>(1, ceil_div(r.min, w)) * w;
    const std::int64_t highest = (r.max / w) * w;
    std::int64_t mapped = ceil_div(value, w) * w;
    if (mapped > highest) {
      mapped = highest;
      out.clamped = true;
    } else if (mapped < lowest) {
      mapped = lowest;
      out.clamped = true;
    }
    value = mapped;
  }
  return out;
}

std::uint64_t enumerate_count(const PrLattice& lattice) {
  std::uint64_t total = 1;
  for (const auto& axis : build_axes(lattice)) total = checked_mul(total, axis.tuples.size());
  return total;
}

std::vector<LayerConfig> sample(const PrLattice& lattice, std::uint64_t n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample size must be >= 1");
  const auto axes = build_axes(lattice);
  std::uint64_t total = 1;
  for (const auto& axis : axes) total = checked_mul(total, axis.tuples.size());
  if (n > total) {
    throw Error(ErrorCode::LatticeTooSmall, "requested " + std::to_string(n) + " samples from a lattice of " +
                                                std::to_string(total));
  }
  // Partial Fisher-Yates over the virtual array [0, total).
  Rng rng(seed);
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;
  auto slot = [&](std::uint64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<LayerConfig> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t j = i + rng.below(total - i);
    const std::uint64_t picked = slot(j);
    swapped[j] = slot(i);
    out.push_back(decode(lattice, axes, picked));
  }
  return out;
}

std::vector<LayerConfig> sample_random_full_space(const ParamBounds& bounds, std::uint64_t n,
                                                  std::uint64_t seed, std::vector<Constraint> constraints) {
  return sample(make_lattice(bounds.kind, {}, bounds, std::move(constraints)), n, seed);
}

void to_json(json& j, const PrLattice& lattice) {
  json widths = json::object();
  for (const auto& name : canonical_params(lattice.kind)) widths[name] = lattice.width(name);
  json constraints = json::array();
  for (const auto& c : lattice.constraints) constraints.push_back(to_string(c));
  json bounds = lattice.bounds;
  j = json{{"kind", std::string(to_string(lattice.kind))},
           {"widths", widths},
           {"bounds", bounds.at("params")},
           {"constraints", constraints}};
}

void from_json(const json& j, PrLattice& lattice) {
  try {
    const OpKind kind = parse_op_kind(j.at("kind").get<std::string>());
    StepWidthMap widths;
    for (const auto& [name, v] : j.at("widths").items()) widths[name] = v.get<std::int64_t>();
    json bounds_doc{{"kind", j.at("kind")}, {"params", j.at("bounds")}};
    ParamBounds bounds = bounds_doc.get<ParamBounds>();
    std::vector<Constraint> constraints;
    for (const auto& c : j.value("constraints", json::array())) {
      constraints.push_back(Constraint::parse(c.get<std::string>()));
    }
    lattice = make_lattice(kind, std::move(widths), std::move(bounds), std::move(constraints));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("lattice: ") + e.what());
  }
}

}  // namespace prbench
