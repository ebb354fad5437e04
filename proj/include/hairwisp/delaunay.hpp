#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hairwisp/errors.hpp"
#include "hairwisp/geometry.hpp"

namespace hairwisp {

// Coordinates are snapped to this grid before triangulating; the predicates
// below are exact on the snapped integers.
inline constexpr double kDelaunayUnit = 1.0 / 256.0;
inline constexpr double kDelaunayMaxCoord = 65536.0;

inline double snap_coordinate(double v) { return std::round(v / kDelaunayUnit) * kDelaunayUnit; }
inline Vec2 snap_point(Vec2 p) { return {snap_coordinate(p.x), snap_coordinate(p.y)}; }

using Triangle = std::array<int, 3>;

namespace detail {

using i128 = __int128;

struct IPoint {
  std::int64_t x, y;
  bool operator==(const IPoint&) const = default;
};

inline int sign(i128 v) { return (v > 0) - (v < 0); }

inline int orient(IPoint a, IPoint b, IPoint c) {
  const i128 abx = b.x - a.x, aby = b.y - a.y, acx = c.x - a.x, acy = c.y - a.y;
  return sign(abx * acy - aby * acx);
}

// > 0 when d is strictly inside the circumcircle of the positively oriented
// triangle (a, b, c).
inline int incircle(IPoint a, IPoint b, IPoint c, IPoint d) {
  const i128 adx = a.x - d.x, ady = a.y - d.y;
  const i128 bdx = b.x - d.x, bdy = b.y - d.y;
  const i128 cdx = c.x - d.x, cdy = c.y - d.y;
  const i128 alift = adx * adx + ady * ady;
  const i128 blift = bdx * bdx + bdy * bdy;
  const i128 clift = cdx * cdx + cdy * cdy;
  return sign(alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
              clift * (adx * bdy - bdx * ady));
}

// True when c lies strictly between a and b on their common line.
inline bool strictly_between(IPoint a, IPoint b, IPoint c) {
  const i128 dot = static_cast<i128>(c.x - a.x) * (b.x - a.x) +
                   static_cast<i128>(c.y - a.y) * (b.y - a.y);
  const i128 len2 = static_cast<i128>(b.x - a.x) * (b.x - a.x) +
                    static_cast<i128>(b.y - a.y) * (b.y - a.y);
  return dot > 0 && dot < len2;
}

inline constexpr int kGhost = -1;

}  // namespace detail

// Delaunay triangulation by incremental Bowyer-Watson with ghost triangles
// on the hull. Points are inserted in index order; the in-circle test is
// strict, so cocircular ties keep whichever triangles were built first.
// Duplicate points (after snapping) are skipped. Returns positively
// oriented (cross(b-a, c-a) > 0) triangles, each rotated to start at its
// smallest index, sorted lexicographically. Fewer than three non-collinear
// points give an empty result.
inline std::vector<Triangle> delaunay_triangulate(std::span<const Vec2> points) {
  using namespace detail;
  const int n = static_cast<int>(points.size());
  std::vector<IPoint> p(points.size());
  for (int i = 0; i < n; ++i) {
    const Vec2 v = points[static_cast<std::size_t>(i)];
    if (!is_finite(v) || std::abs(v.x) > kDelaunayMaxCoord || std::abs(v.y) > kDelaunayMaxCoord)
      throw MeshError("triangulation point " + std::to_string(i) + " out of range");
    p[static_cast<std::size_t>(i)] = {std::llround(v.x / kDelaunayUnit),
                                      std::llround(v.y / kDelaunayUnit)};
  }
  auto P = [&](int i) { return p[static_cast<std::size_t>(i)]; };

  // Seed with the first non-degenerate triple in index order.
  int i0 = 0, i1 = -1, i2 = -1;
  if (n < 3) return {};
  for (int i = 1; i < n && i1 < 0; ++i)
    if (!(P(i) == P(i0))) i1 = i;
  if (i1 < 0) return {};
  for (int i = i1 + 1; i < n && i2 < 0; ++i)
    if (orient(P(i0), P(i1), P(i)) != 0) i2 = i;
  if (i2 < 0) return {};

  std::vector<Triangle> tris;
  if (orient(P(i0), P(i1), P(i2)) > 0)
    tris.push_back({i0, i1, i2});
  else
    tris.push_back({i0, i2, i1});
  {
    const auto [a, b, c] = tris.front();
    tris.push_back({b, a, kGhost});
    tris.push_back({c, b, kGhost});
    tris.push_back({a, c, kGhost});
  }

  std::vector<int> inserted = {i0, i1, i2};
  auto in_conflict = [&](const Triangle& t, IPoint x) {
    if (t[2] == kGhost) {
      const int o = orient(P(t[0]), P(t[1]), x);
      return o > 0 || (o == 0 && strictly_between(P(t[0]), P(t[1]), x));
    }
    return incircle(P(t[0]), P(t[1]), P(t[2]), x) > 0;
  };

  std::vector<char> bad;
  std::vector<std::array<int, 2>> boundary;
  for (int i = 0; i < n; ++i) {
    if (i == i0 || i == i1 || i == i2) continue;
    const IPoint x = P(i);
    bool duplicate = false;
    for (int j : inserted)
      if (P(j) == x) duplicate = true;
    if (duplicate) continue;

    bad.assign(tris.size(), 0);
    for (std::size_t t = 0; t < tris.size(); ++t) bad[t] = in_conflict(tris[t], x);

    // Cavity boundary: directed edges of conflicting triangles whose twin
    // does not belong to another conflicting triangle.
    boundary.clear();
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!bad[t]) continue;
      for (int e = 0; e < 3; ++e) {
        const int u = tris[t][static_cast<std::size_t>(e)];
        const int v = tris[t][static_cast<std::size_t>((e + 1) % 3)];
        bool shared = false;
        for (std::size_t s = 0; s < tris.size() && !shared; ++s) {
          if (s == t || !bad[s]) continue;
          for (int f = 0; f < 3; ++f)
            if (tris[s][static_cast<std::size_t>(f)] == v &&
                tris[s][static_cast<std::size_t>((f + 1) % 3)] == u)
              shared = true;
        }
        if (!shared) boundary.push_back({u, v});
      }
    }

    std::vector<Triangle> next;
    next.reserve(tris.size() + 2);
    for (std::size_t t = 0; t < tris.size(); ++t)
      if (!bad[t]) next.push_back(tris[t]);
    for (auto [u, v] : boundary) {
      if (u == kGhost)
        next.push_back({v, i, kGhost});
      else if (v == kGhost)
        next.push_back({i, u, kGhost});
      else
        next.push_back({u, v, i});
    }
    tris = std::move(next);
    inserted.push_back(i);
  }

  std::vector<Triangle> out;
  for (const Triangle& t : tris) {
    if (t[2] == kGhost) continue;
    const auto m = std::min_element(t.begin(), t.end()) - t.begin();
    out.push_back({t[static_cast<std::size_t>(m)], t[static_cast<std::size_t>((m + 1) % 3)],
                   t[static_cast<std::size_t>((m + 2) % 3)]});
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

inline Circle circumcircle(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a, ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  const double ab2 = dot(ab, ab), ac2 = dot(ac, ac);
  const Vec2 off{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
  return {a + off, norm(off)};
}

inline double triangle_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * cross(b - a, c - a); }

}  // namespace hairwisp
