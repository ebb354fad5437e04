#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>

#include "hairwisp/errors.hpp"
#include "hairwisp/geometry.hpp"

namespace hairwisp {

using ConfigMap = std::map<std::string, std::string>;

// Simulation, meshing and refinement parameters. Defaults are tuning choices
// for portraits roughly 500-1000 px tall.
struct SceneConfig {
  double spring_constant = 100.0;          // K
  double mass = 1.0;                       // m
  Vec2 gravity{0.0, 200.0};                // px/s^2
  double dt = 1.0 / 120.0;                 // integrator step, seconds
  int substeps = 4;                        // integrator steps per output frame
  int frame_count = 90;                    // T
  Vec2 wind_v0{20.0, 0.0};                 // initial velocity of free vertices, px/s
  double damping = 0.05;                   // c; 0 gives the undamped model
  int grid_n = 6;
  int grid_n_aux = 12;
  int poly_degree = 3;
  double tip_fraction = 0.15;
  double tip_min_width_ratio = 0.2;
  double tps_lambda = 0.0;
  bool refine = true;

  double frame_interval() const { return dt * substeps; }

  ConfigMap to_map() const;
  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string_view t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("'" + key + "' expects a number, got '" + text + "'");
  if (!std::isfinite(v)) throw ConfigError("'" + key + "' must be finite");
  return v;
}

inline int parse_int(const std::string& key, const std::string& text) {
  const std::string_view t = trim(text);
  int v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("'" + key + "' expects an integer, got '" + text + "'");
  return v;
}

}  // namespace detail

inline ConfigMap SceneConfig::to_map() const {
  using detail::format_double;
  return {
      {"K", format_double(spring_constant)},
      {"m", format_double(mass)},
      {"gx", format_double(gravity.x)},
      {"gy", format_double(gravity.y)},
      {"dt", format_double(dt)},
      {"substeps", std::to_string(substeps)},
      {"T", std::to_string(frame_count)},
      {"wind_vx", format_double(wind_v0.x)},
      {"wind_vy", format_double(wind_v0.y)},
      {"c", format_double(damping)},
      {"grid_n", std::to_string(grid_n)},
      {"grid_n_aux", std::to_string(grid_n_aux)},
      {"poly_degree", std::to_string(poly_degree)},
      {"tip_fraction", format_double(tip_fraction)},
      {"tip_min_width_ratio", format_double(tip_min_width_ratio)},
      {"tps_lambda", format_double(tps_lambda)},
      {"refine", refine ? "1" : "0"},
  };
}

// Applies defaults for absent keys and checks every constraint, including
// the explicit stability bound dt < 2*sqrt(m/K).
inline SceneConfig validate_config(const ConfigMap& raw) {
  SceneConfig cfg;
  for (const auto& [key, value] : raw) {
    using detail::parse_double;
    using detail::parse_int;
    if (key == "K") cfg.spring_constant = parse_double(key, value);
    else if (key == "m") cfg.mass = parse_double(key, value);
    else if (key == "gx") cfg.gravity.x = parse_double(key, value);
    else if (key == "gy") cfg.gravity.y = parse_double(key, value);
    else if (key == "dt") cfg.dt = parse_double(key, value);
    else if (key == "substeps") cfg.substeps = parse_int(key, value);
    else if (key == "T") cfg.frame_count = parse_int(key, value);
    else if (key == "wind_vx") cfg.wind_v0.x = parse_double(key, value);
    else if (key == "wind_vy") cfg.wind_v0.y = parse_double(key, value);
    else if (key == "c") cfg.damping = parse_double(key, value);
    else if (key == "grid_n") cfg.grid_n = parse_int(key, value);
    else if (key == "grid_n_aux") cfg.grid_n_aux = parse_int(key, value);
    else if (key == "poly_degree") cfg.poly_degree = parse_int(key, value);
    else if (key == "tip_fraction") cfg.tip_fraction = parse_double(key, value);
    else if (key == "tip_min_width_ratio") cfg.tip_min_width_ratio = parse_double(key, value);
    else if (key == "tps_lambda") cfg.tps_lambda = parse_double(key, value);
    else if (key == "refine") {
      const int v = parse_int(key, value);
      if (v != 0 && v != 1) throw ConfigError("'refine' must be 0 or 1");
      cfg.refine = v == 1;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("constraint violated: " + what);
  };
  require(cfg.spring_constant > 0.0, "K > 0");
  require(cfg.mass > 0.0, "m > 0");
  require(cfg.dt > 0.0, "dt > 0");
  const double bound = 2.0 * std::sqrt(cfg.mass / cfg.spring_constant);
  require(cfg.dt < bound, "dt < 2*sqrt(m/K) = " + detail::format_double(bound));
  require(cfg.substeps >= 1, "substeps >= 1");
  require(cfg.frame_count >= 1, "T >= 1");
  require(cfg.damping >= 0.0, "c >= 0");
  require(cfg.grid_n >= 2, "grid_n >= 2");
  require(cfg.grid_n_aux >= 2, "grid_n_aux >= 2");
  require(cfg.poly_degree >= 1, "poly_degree >= 1");
  require(cfg.tip_fraction > 0.0 && cfg.tip_fraction < 0.5, "0 < tip_fraction < 0.5");
  require(cfg.tip_min_width_ratio > 0.0 && cfg.tip_min_width_ratio <= 1.0,
          "0 < tip_min_width_ratio <= 1");
  require(cfg.tps_lambda >= 0.0, "tps_lambda >= 0");
  return cfg;
}

// "key = value" lines; '#' starts a comment, blank lines are skipped.
inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    ++line_no;
    start = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_config_text(text);
}

// Applies one "key=value" override on top of `map`.
inline void apply_override(ConfigMap& map, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "' must be key=value");
  map[std::string(detail::trim(assignment.substr(0, eq)))] =
      std::string(detail::trim(assignment.substr(eq + 1)));
}

}  // namespace hairwisp
