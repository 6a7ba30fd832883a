#pragma once

// INI-style run configuration (sections per module, "key = value", ';'
// comments) mapped onto a test case and experiment options.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "srom/srom.hpp"

namespace srom::cli {

struct RunConfig {
  TestCase tc;
  std::optional<std::size_t> n;  ///< explicit reduced mesh size, else tc.n_fraction * N
  std::vector<Variant> variants{Variant::AdpSS, Variant::NAdpSS, Variant::SS, Variant::S};
  ExperimentOptions experiment;
  std::string output = "results/report.csv";
  std::vector<std::size_t> sweep_n;
  std::vector<Variant> sweep_variants{Variant::AdpSS, Variant::NAdpSS};

  std::size_t mesh_size() const { return n.value_or(tc.mesh_size(tc.n_fraction)); }
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline std::vector<Variant> parse_variants(const std::string& s) {
  std::vector<Variant> v;
  for (const auto& item : split_list(s)) v.push_back(parse_variant(item));
  if (v.empty()) throw ConfigError("empty variant list");
  return v;
}

inline Point parse_point(const std::string& s) {
  const auto parts = split_list(s);
  if (parts.empty() || parts.size() > 2) throw ConfigError("expected one or two comma-separated numbers, got '" + s + "'");
  Point p{std::stod(parts[0]), 0.0};
  if (parts.size() == 2) p[1] = std::stod(parts[1]);
  return p;
}

/// Like ptree::get with a default, but a present key that fails to convert
/// is an error instead of silently falling back.
template <class T>
T value_or(const boost::property_tree::ptree& pt, const std::string& path, T fallback) {
  if (!pt.get_child_optional(path)) return fallback;
  return pt.get<T>(path);
}

template <class T>
std::optional<T> maybe(const boost::property_tree::ptree& pt, const std::string& path) {
  if (!pt.get_child_optional(path)) return std::nullopt;
  return pt.get<T>(path);
}

inline RunConfig parse_config(const boost::property_tree::ptree& pt) {
  RunConfig rc;
  const auto name = value_or<std::string>(pt, "case.name", "test1");
  if (name == "custom") {
    CustomCaseSpec s;
    s.dim = value_or(pt, "custom.dim", s.dim);
    if (auto v = maybe<std::string>(pt, "custom.origin")) s.origin = parse_point(*v);
    s.extent = value_or(pt, "custom.extent", s.extent);
    s.nx = value_or(pt, "custom.nx", s.nx);
    if (auto v = maybe<std::string>(pt, "custom.velocity")) s.velocity = parse_point(*v);
    if (auto v = maybe<std::string>(pt, "custom.centre")) s.centre = parse_point(*v);
    s.radius = value_or(pt, "custom.radius", s.radius);
    s.t_end = value_or(pt, "custom.t_end", s.t_end);
    s.mu_lo = value_or(pt, "custom.mu_lo", s.mu_lo);
    s.mu_hi = value_or(pt, "custom.mu_hi", s.mu_hi);
    rc.tc = custom_case(s);
  } else {
    rc.tc = make_case(name);
  }
  auto& tc = rc.tc;
  tc.nx = value_or(pt, "grid.nx", tc.nx);
  if (auto dt = maybe<double>(pt, "fv.dt")) tc.time_step.dt = *dt;
  tc.time_step.cfl_fraction = value_or(pt, "fv.cfl_fraction", tc.time_step.cfl_fraction);
  tc.n_t = value_or(pt, "sampling.n_t", tc.n_t);
  tc.n_mu = value_or(pt, "sampling.n_mu", tc.n_mu);
  if (auto z = maybe<int>(pt, "sampling.z_ref")) tc.z_ref = *z;
  tc.calibration.theta = value_or(pt, "shifts.theta", tc.calibration.theta);
  tc.calibration.cap = value_or(pt, "shifts.cap", tc.calibration.cap);
  tc.calibration.seed = value_or(pt, "shifts.seed", tc.calibration.seed);
  const auto mode = value_or<std::string>(pt, "shifts.mode", "reference");
  if (mode == "reference") tc.shift_mode = ShiftMode::ReferenceComposed;
  else if (mode == "pairwise") tc.shift_mode = ShiftMode::Pairwise;
  else throw ConfigError("shifts.mode must be 'reference' or 'pairwise'");
  const auto interp = value_or<std::string>(pt, "shifts.interpolation", "global");
  if (interp == "global") tc.interpolation = ShiftInterpolation::GlobalLagrange;
  else if (interp == "bilinear") tc.interpolation = ShiftInterpolation::Bilinear;
  else throw ConfigError("shifts.interpolation must be 'global' or 'bilinear'");
  tc.m_hyp = value_or(pt, "hyper.m_hyp", tc.m_hyp);
  tc.n_fraction = value_or(pt, "hyper.n_fraction", tc.n_fraction);
  if (auto n = maybe<std::size_t>(pt, "hyper.n")) rc.n = *n;
  tc.targets_mu = value_or(pt, "bench.targets_mu", tc.targets_mu);
  tc.targets_t = value_or(pt, "bench.targets_t", tc.targets_t);
  tc.training_t = value_or(pt, "hyper.training_t", tc.training_t);
  if (auto v = maybe<std::string>(pt, "bench.variants")) rc.variants = parse_variants(*v);
  rc.experiment.repeats = value_or(pt, "bench.repeats", rc.experiment.repeats);
  rc.experiment.instability_threshold = value_or(pt, "bench.instability_threshold", rc.experiment.instability_threshold);
  rc.output = value_or(pt, "bench.output", rc.output);
  if (auto v = maybe<std::string>(pt, "bench.sweep_n")) {
    for (const auto& s : split_list(*v)) rc.sweep_n.push_back(std::stoul(s));
  }
  if (auto v = maybe<std::string>(pt, "bench.sweep_variants")) rc.sweep_variants = parse_variants(*v);

  if (tc.nx < 2) throw ConfigError("grid.nx must be at least 2");
  if (rc.experiment.repeats < 1) throw ConfigError("bench.repeats must be at least 1");
  if (tc.m_hyp < 1) throw ConfigError("hyper.m_hyp must be at least 1");
  return rc;
}

inline RunConfig load_config(const std::string& path) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  try {
    return parse_config(pt);
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("bad number in config: ") + e.what());
  }
}

}  // namespace srom::cli
