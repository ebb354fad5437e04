#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace hairwisp {

// 2D point/vector in pixel units. Image convention: origin at the top-left
// corner of pixel (0,0), x to the right, y down; pixel (i,j) covers
// [i,i+1) x [j,j+1) and its center is (i+0.5, j+0.5).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

using Polyline = std::vector<Vec2>;

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }
inline bool is_finite(Vec2 a) { return std::isfinite(a.x) && std::isfinite(a.y); }

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(PixelCoord, PixelCoord) = default;
};

inline Vec2 pixel_center(PixelCoord p) { return {p.x + 0.5, p.y + 0.5}; }

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + ab * t);
}

inline double point_polyline_distance(Vec2 p, std::span<const Vec2> line) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return distance(p, line[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i)
    best = std::min(best, point_segment_distance(p, line[i], line[i + 1]));
  return best;
}

// Integer pixels visited by a Bresenham walk between two pixel coordinates,
// inclusive of both ends.
inline std::vector<PixelCoord> bresenham(PixelCoord a, PixelCoord b) {
  std::vector<PixelCoord> out;
  int dx = std::abs(b.x - a.x), sx = a.x < b.x ? 1 : -1;
  int dy = -std::abs(b.y - a.y), sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  PixelCoord p = a;
  while (true) {
    out.push_back(p);
    if (p == b) break;
    const int e2 = 2 * err;
    if (e2 >= dy) { err += dy; p.x += sx; }
    if (e2 <= dx) { err += dx; p.y += sy; }
  }
  return out;
}

// Pixels of a polyline given in continuous pixel coordinates; vertices map to
// the pixel that contains them.
inline std::vector<PixelCoord> rasterize_polyline(std::span<const Vec2> line) {
  std::vector<PixelCoord> out;
  auto to_pixel = [](Vec2 v) {
    return PixelCoord{static_cast<int>(std::floor(v.x)),
                      static_cast<int>(std::floor(v.y))};
  };
  if (line.size() == 1) out.push_back(to_pixel(line[0]));
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    auto seg = bresenham(to_pixel(line[i]), to_pixel(line[i + 1]));
    out.insert(out.end(), i == 0 ? seg.begin() : seg.begin() + 1, seg.end());
  }
  return out;
}

// Barycentric coordinates of p with respect to triangle (a, b, c).
inline std::array<double, 3> barycentric(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
  const double area = cross(b - a, c - a);
  return {cross(b - p, c - p) / area, cross(c - p, a - p) / area,
          cross(a - p, b - p) / area};
}

}  // namespace hairwisp
