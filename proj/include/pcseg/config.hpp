#pragma once

// Pipeline configuration: flat `key = value` text with dotted sections.
//
//   # comment
//   seed = 7
//   alm.rho = 1.5
//   [optics]            # optional header; prefixes the keys that follow
//   m_phases = 8
//
// Unknown keys, malformed values and violated constraints are rejected with the key named.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "pcseg/error.hpp"
#include "pcseg/lowrank.hpp"
#include "pcseg/optics.hpp"
#include "pcseg/segment.hpp"
#include "pcseg/synth.hpp"

namespace pcseg {

struct PipelineConfig {
  std::uint64_t seed = 0;
  AlmParams alm;
  OpticsParams optics;
  FusionStrategy fusion;
  BinarizeMethod binarize;
  std::size_t min_area = 9;
  std::string pattern = "*.pgm";
  int bit_depth = 16;
  SynthConfig synth;

  void validate() const {
    alm.validate();
    optics.validate();
    synth.validate();
    if (bit_depth != 8 && bit_depth != 16) throw ConfigError("io.bit_depth must be 8 or 16");
    if (pattern.empty()) throw ConfigError("io.pattern must not be empty");
    if (fusion.kind == Fusion::SinglePhase && (fusion.phase < 1 || fusion.phase > optics.m_phases))
      throw ConfigError("segment.phase must lie in 1..optics.m_phases");
    if (binarize.kind == Threshold::Quantile && !(binarize.value >= 0.0 && binarize.value <= 1.0))
      throw ConfigError("segment.threshold must lie in [0, 1] for quantile binarization");
    if (!std::isfinite(binarize.value)) throw ConfigError("segment.threshold must be finite");
  }
};

namespace detail {

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string &key, const std::string &s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception &) {
  }
  throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
}

template <typename Int>
Int parse_int(const std::string &key, const std::string &s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string &key, const std::string &s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + s + "'");
}

inline std::string fusion_name(const FusionStrategy &f) {
  switch (f.kind) {
  case Fusion::MaxPositive: return "max-positive";
  case Fusion::MaxAbs: return "max-abs";
  case Fusion::SinglePhase: return "single-phase";
  }
  return "?";
}

inline std::string threshold_name(const BinarizeMethod &b) {
  switch (b.kind) {
  case Threshold::Otsu: return "otsu";
  case Threshold::Quantile: return "quantile";
  case Threshold::Fixed: return "fixed";
  }
  return "?";
}

} // namespace detail

struct ConfigKey {
  std::string key;
  std::string symbol; ///< model symbol, empty when there is none
  std::string doc;
  std::function<std::string(const PipelineConfig &)> get;
  std::function<void(PipelineConfig &, const std::string &)> set;
};

inline const std::vector<ConfigKey> &config_keys() {
  using namespace detail;
  auto dbl = [](std::string key, std::string sym, std::string doc, double &(*ref)(PipelineConfig &)) {
    return ConfigKey{key, sym, doc, [ref](const PipelineConfig &c) { return format_double(ref(const_cast<PipelineConfig &>(c))); },
                     [ref, key](PipelineConfig &c, const std::string &v) { ref(c) = parse_double(key, v); }};
  };
  auto integer = [](std::string key, std::string sym, std::string doc, int &(*ref)(PipelineConfig &)) {
    return ConfigKey{key, sym, doc, [ref](const PipelineConfig &c) { return std::to_string(ref(const_cast<PipelineConfig &>(c))); },
                     [ref, key](PipelineConfig &c, const std::string &v) { ref(c) = parse_int<int>(key, v); }};
  };
  static const std::vector<ConfigKey> keys = {
      {"seed", "", "seed of all randomness",
       [](const PipelineConfig &c) { return std::to_string(c.seed); },
       [](PipelineConfig &c, const std::string &v) { c.seed = parse_int<std::uint64_t>("seed", v); }},
      dbl("alm.lambda", "λ", "sparsity trade-off; 0 = 1/sqrt(max(pixels, frames))", [](PipelineConfig &c) -> double & { return c.alm.lambda; }),
      dbl("alm.mu0", "μ₀", "initial penalty; 0 = 1.25/sigma_max(A)", [](PipelineConfig &c) -> double & { return c.alm.mu0; }),
      dbl("alm.rho", "ρ", "penalty growth factor, > 1", [](PipelineConfig &c) -> double & { return c.alm.rho; }),
      dbl("alm.epsilon", "ε", "penalty growth test threshold", [](PipelineConfig &c) -> double & { return c.alm.epsilon_mu; }),
      dbl("alm.stop_tol", "", "relative residual stopping tolerance", [](PipelineConfig &c) -> double & { return c.alm.stop_tol; }),
      integer("alm.max_iters", "", "outer iteration cap", [](PipelineConfig &c) -> int & { return c.alm.max_iters; }),
      dbl("gfl.gamma", "γ", "weight of the fused (neighbor difference) term", [](PipelineConfig &c) -> double & { return c.alm.gfl.gamma; }),
      dbl("gfl.sigma", "σ", "edge weight scale; 0 = per-frame median neighbor difference", [](PipelineConfig &c) -> double & { return c.alm.gfl.sigma; }),
      integer("gfl.inner_max_iters", "", "prox solver iteration cap", [](PipelineConfig &c) -> int & { return c.alm.gfl.inner_max_iters; }),
      dbl("gfl.inner_tol", "", "prox solver relative duality gap tolerance", [](PipelineConfig &c) -> double & { return c.alm.gfl.inner_tol; }),
      integer("optics.m_phases", "M", "number of phase retardations in the bank", [](PipelineConfig &c) -> int & { return c.optics.m_phases; }),
      dbl("optics.zeta_p", "ς_p", "phase ring amplitude attenuation, (0, 1]", [](PipelineConfig &c) -> double & { return c.optics.zeta_p; }),
      dbl("optics.airy_outer_radius", "R", "annulus outer radius, cycles/pixel", [](PipelineConfig &c) -> double & { return c.optics.airy_outer_radius; }),
      dbl("optics.airy_ring_width", "W", "annulus width, 0 < W < R", [](PipelineConfig &c) -> double & { return c.optics.airy_ring_width; }),
      integer("optics.kernel_size", "K", "odd kernel support", [](PipelineConfig &c) -> int & { return c.optics.kernel_size; }),
      dbl("optics.inv_reg", "", "Tikhonov regularizer of the inverse filters", [](PipelineConfig &c) -> double & { return c.optics.inv_reg; }),
      {"segment.fusion", "", "max-positive | max-abs | single-phase",
       [](const PipelineConfig &c) { return fusion_name(c.fusion); },
       [](PipelineConfig &c, const std::string &v) {
         if (v == "max-positive") c.fusion.kind = Fusion::MaxPositive;
         else if (v == "max-abs") c.fusion.kind = Fusion::MaxAbs;
         else if (v == "single-phase") c.fusion.kind = Fusion::SinglePhase;
         else throw ConfigError("key 'segment.fusion': unknown strategy '" + v + "'");
       }},
      integer("segment.phase", "m", "1-based phase for single-phase fusion", [](PipelineConfig &c) -> int & { return c.fusion.phase; }),
      {"segment.binarize", "", "otsu | quantile | fixed",
       [](const PipelineConfig &c) { return threshold_name(c.binarize); },
       [](PipelineConfig &c, const std::string &v) {
         if (v == "otsu") c.binarize.kind = Threshold::Otsu;
         else if (v == "quantile") c.binarize.kind = Threshold::Quantile;
         else if (v == "fixed") c.binarize.kind = Threshold::Fixed;
         else throw ConfigError("key 'segment.binarize': unknown method '" + v + "'");
       }},
      dbl("segment.threshold", "", "quantile q or fixed threshold t", [](PipelineConfig &c) -> double & { return c.binarize.value; }),
      {"segment.min_area", "", "smallest kept component, pixels",
       [](const PipelineConfig &c) { return std::to_string(c.min_area); },
       [](PipelineConfig &c, const std::string &v) { c.min_area = parse_int<std::size_t>("segment.min_area", v); }},
      {"io.pattern", "", "input filename glob",
       [](const PipelineConfig &c) { return c.pattern; },
       [](PipelineConfig &c, const std::string &v) { c.pattern = v; }},
      integer("io.bit_depth", "", "output image bit depth, 8 or 16", [](PipelineConfig &c) -> int & { return c.bit_depth; }),
      integer("synth.width", "", "frame width", [](PipelineConfig &c) -> int & { return c.synth.width; }),
      integer("synth.height", "", "frame height", [](PipelineConfig &c) -> int & { return c.synth.height; }),
      integer("synth.n_frames", "n", "frame count", [](PipelineConfig &c) -> int & { return c.synth.n_frames; }),
      integer("synth.bg_rank", "r", "background rank", [](PipelineConfig &c) -> int & { return c.synth.bg_rank; }),
      integer("synth.cell_count", "", "cells per frame", [](PipelineConfig &c) -> int & { return c.synth.cell_count; }),
      dbl("synth.cell_radius_min", "", "smallest ellipse semi-axis, pixels", [](PipelineConfig &c) -> double & { return c.synth.cell_radius_min; }),
      dbl("synth.cell_radius_max", "", "largest ellipse semi-axis, pixels", [](PipelineConfig &c) -> double & { return c.synth.cell_radius_max; }),
      dbl("synth.cell_phase", "θ", "phase retardation of cells", [](PipelineConfig &c) -> double & { return c.synth.cell_phase; }),
      dbl("synth.noise_sigma", "", "noise standard deviation", [](PipelineConfig &c) -> double & { return c.synth.noise_sigma; }),
      {"synth.noise_correlated", "", "rank-one noise shared across frames",
       [](const PipelineConfig &c) { return std::string(c.synth.noise_correlated ? "true" : "false"); },
       [](PipelineConfig &c, const std::string &v) { c.synth.noise_correlated = parse_bool("synth.noise_correlated", v); }},
  };
  return keys;
}

/// Parses config text; absent keys keep their defaults. The synth seed follows `seed`.
inline PipelineConfig parse_config_text(const std::string &text) {
  PipelineConfig cfg;
  const auto &keys = config_keys();
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey &k) { return k.key == key; });
    if (it == keys.end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->set(cfg, value);
  }
  cfg.synth.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

inline PipelineConfig parse_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline std::string dump_config(const PipelineConfig &cfg) {
  std::string out;
  for (const auto &k : config_keys()) {
    std::string v = k.get(cfg);
    if (k.key == "io.pattern") v = '"' + v + '"';
    out += k.key + " = " + v + "\n";
  }
  return out;
}

/// One line per key: name, default, symbol, description.
inline std::string config_reference() {
  const PipelineConfig defaults;
  std::string out = "Config keys (key = default  [symbol]  description):\n";
  for (const auto &k : config_keys()) {
    out += "  " + k.key + " = " + k.get(defaults);
    if (!k.symbol.empty()) out += "  [" + k.symbol + "]";
    out += "  " + k.doc + "\n";
  }
  return out;
}

inline bool operator==(const PipelineConfig &a, const PipelineConfig &b) { return dump_config(a) == dump_config(b); }

} // namespace pcseg
