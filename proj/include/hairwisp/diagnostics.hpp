#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hairwisp/errors.hpp"
#include "hairwisp/image_io.hpp"
#include "hairwisp/pipeline.hpp"
#include "hairwisp/warping.hpp"

namespace hairwisp {

// Trajectory dump as read back from disk. Frame 0 holds the rest positions.
struct TrajectoryDump {
  std::vector<std::vector<Triangle>> triangles;  // per wisp
  std::vector<double> times;
  std::vector<std::vector<std::vector<Vec2>>> positions;  // [frame][wisp][vertex]
};

inline TrajectoryDump parse_trajectory(std::istream& in, const std::string& name) {
  TrajectoryDump d;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ParseError(name + " line " + std::to_string(line_no) + ": " + why);
  };
  auto ensure = [](auto& v, std::size_t n) {
    if (v.size() < n) v.resize(n);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream f(line);
    if (line[0] == 'f' && line.rfind("frame", 0) != 0) {
      std::string tag;
      std::size_t k;
      Triangle t;
      if (!(f >> tag >> k >> t[0] >> t[1] >> t[2])) fail("expected 'f k a b c'");
      ensure(d.triangles, k + 1);
      d.triangles[k].push_back(t);
    } else if (line.rfind("frame", 0) == 0) {
      std::string tag;
      std::size_t n;
      double t;
      if (!(f >> tag >> n >> t) || n != d.times.size()) fail("expected 'frame n t' with consecutive n");
      d.times.push_back(t);
      d.positions.emplace_back();
    } else {
      std::size_t k, i;
      Vec2 p;
      if (!(f >> k >> i >> p.x >> p.y)) fail("expected 'k i x y'");
      if (d.positions.empty()) fail("vertex line before the first frame header");
      auto& frame = d.positions.back();
      ensure(frame, k + 1);
      if (i != frame[k].size()) fail("vertex indices must be consecutive");
      frame[k].push_back(p);
    }
  }
  for (std::size_t f = 1; f < d.positions.size(); ++f) {
    if (d.positions[f].size() != d.positions[0].size()) throw ParseError(name + ": frames list different wisps");
    for (std::size_t k = 0; k < d.positions[f].size(); ++k)
      if (d.positions[f][k].size() != d.positions[0][k].size())
        throw ParseError(name + ": wisp " + std::to_string(k) + " changes vertex count");
  }
  return d;
}

inline TrajectoryDump read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_trajectory(in, "'" + path.string() + "'");
}

struct DiagnosticReport {
  std::vector<double> short_term;        // pair (t, t+1), T-1 entries
  std::vector<double> long_term;         // frame 1 propagated to t+1, T-1 entries
  std::vector<double> max_displacement;  // per frame, relative to rest
};

namespace detail {

// Straight RGB bilinear sample at continuous position p; false when any of
// the four taps falls outside the image.
inline bool sample_rgb(const Image& img, Vec2 p, double out[3]) {
  const double u = p.x - 0.5, v = p.y - 0.5;
  const double fx = std::floor(u), fy = std::floor(v);
  const int x = static_cast<int>(fx), y = static_cast<int>(fy);
  const double tx = u - fx, ty = v - fy;
  const int x1 = tx > 0.0 ? x + 1 : x, y1 = ty > 0.0 ? y + 1 : y;
  if (!img.contains(x, y) || !img.contains(x1, y1)) return false;
  const Rgba8 a = img(x, y), b = img(x1, y), c = img(x, y1), d = img(x1, y1);
  const double wa = (1 - tx) * (1 - ty), wb = tx * (1 - ty), wc = (1 - tx) * ty, wd = tx * ty;
  out[0] = wa * a.r + wb * b.r + wc * c.r + wd * d.r;
  out[1] = wa * a.g + wb * b.g + wc * c.g + wd * d.g;
  out[2] = wa * a.b + wb * b.b + wc * c.b + wd * d.b;
  return true;
}

// Pixels whose centres lie in a triangle of the mesh at `pos`.
inline Mask cover(std::span<const Triangle> tris, std::span<const Vec2> pos, int w, int h) {
  Mask m(w, h, 0);
  for (const Triangle& t : tris) {
    const Vec2 a = pos[static_cast<std::size_t>(t[0])], b = pos[static_cast<std::size_t>(t[1])],
               c = pos[static_cast<std::size_t>(t[2])];
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    const double area = cross(b - a, c - a);
    if (area == 0.0) continue;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Vec2 p{x + 0.5, y + 0.5};
        const double s0 = cross(b - a, p - a) / area, s1 = cross(c - b, p - b) / area, s2 = cross(a - c, p - c) / area;
        if (s0 >= 0 && s1 >= 0 && s2 >= 0) m(x, y) = 1;
      }
  }
  return m;
}

}  // namespace detail

// Mean squared RGB error between `target` and `source` pulled through each
// wisp's known motion from positions `from` to `to`, over the pixels covered
// by the wisp meshes at `to`. Zero when no hair pixel is covered.
inline double self_warp_error(const Image& source, const Image& target, const TrajectoryDump& dump,
                              const std::vector<std::vector<Vec2>>& from, const std::vector<std::vector<Vec2>>& to) {
  const int w = target.width(), h = target.height();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < to.size(); ++k) {
    if (k >= dump.triangles.size() || dump.triangles[k].empty()) continue;
    const Mask region = detail::cover(dump.triangles[k], to[k], w, h);
    const PixelBox box = bounding_box(region);
    if (box.empty()) continue;
    const bool still = from[k] == to[k];
    std::optional<WarpField> field;
    if (!still) field = densify(tps_fit(to[k], from[k]), to_rect(box));
    for (int y = box.y0; y <= box.y1; ++y)
      for (int x = box.x0; x <= box.x1; ++x) {
        if (!region(x, y)) continue;
        Vec2 p{x + 0.5, y + 0.5};
        if (field) p += field->at(x, y);
        double s[3];
        if (!detail::sample_rgb(source, p, s)) continue;
        const Rgba8 t = target(x, y);
        sum += (s[0] - t.r) * (s[0] - t.r) + (s[1] - t.g) * (s[1] - t.g) + (s[2] - t.b) * (s[2] - t.b);
        count += 3;
      }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

inline DiagnosticReport diagnose(std::span<const Image> frames, const TrajectoryDump& dump) {
  if (frames.size() != dump.positions.size())
    throw DiagnoseError(std::to_string(frames.size()) + " frames but the trajectory has " +
                        std::to_string(dump.positions.size()));
  if (frames.empty()) throw DiagnoseError("no frames");
  for (const Image& f : frames)
    if (!f.same_shape(frames[0])) throw DiagnoseError("frames differ in size");
  DiagnosticReport r;
  const auto& rest = dump.positions[0];
  for (std::size_t t = 0; t < frames.size(); ++t) {
    double m = 0.0;
    for (std::size_t k = 0; k < rest.size(); ++k)
      for (std::size_t i = 0; i < rest[k].size(); ++i) m = std::max(m, distance(dump.positions[t][k][i], rest[k][i]));
    r.max_displacement.push_back(m);
  }
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    r.short_term.push_back(self_warp_error(frames[t], frames[t + 1], dump, dump.positions[t], dump.positions[t + 1]));
    r.long_term.push_back(self_warp_error(frames[0], frames[t + 1], dump, rest, dump.positions[t + 1]));
  }
  return r;
}

// Reads frame_0001.png, frame_0002.png, ... until the first missing index.
inline std::vector<Image> read_frames(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("frames directory '" + dir.string() + "' does not exist");
  std::vector<Image> frames;
  for (std::size_t i = 0;; ++i) {
    const auto p = dir / frame_name(i);
    if (!std::filesystem::exists(p)) break;
    frames.push_back(read_image(p));
  }
  return frames;
}

inline nlohmann::ordered_json report_json(const DiagnosticReport& r) {
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0, mx = 0.0;
    bool finite = true;
    for (double x : v) {
      mean += x;
      mx = std::max(mx, x);
      finite = finite && std::isfinite(x);
    }
    if (!v.empty()) mean /= static_cast<double>(v.size());
    return nlohmann::ordered_json{{"mean", mean}, {"max", mx}, {"finite", finite}, {"values", v}};
  };
  nlohmann::ordered_json j;
  j["frames"] = r.max_displacement.size();
  j["pairs"] = r.short_term.size();
  j["short_term_mse"] = stats(r.short_term);
  j["long_term_mse"] = stats(r.long_term);
  j["max_displacement"] = r.max_displacement;
  return j;
}

}  // namespace hairwisp
