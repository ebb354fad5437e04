#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "hairwisp/delaunay.hpp"
#include "hairwisp/errors.hpp"
#include "hairwisp/geometry.hpp"
#include "hairwisp/raster.hpp"

namespace hairwisp {

enum class WispClass { ScalpConnected, ScalpUnconnected };

inline const char* to_string(WispClass c) {
  return c == WispClass::ScalpConnected ? "scalp_connected" : "scalp_unconnected";
}

struct Edge {
  int a = 0, b = 0;  // a < b
  double rest_length = 0.0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Binds one vertex to the auxiliary mesh. `aux_triangle` is -1 for the
// nearest-vertex fallback, in which case all three aux vertices are the same
// and weights are (1, 0, 0).
struct Anchor {
  int vertex = 0;
  int aux_triangle = -1;
  std::array<int, 3> aux_vertices{};
  std::array<double, 3> weights{1.0, 0.0, 0.0};
  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct WispMesh {
  std::vector<Vec2> rest;
  std::vector<Edge> edges;
  std::vector<Triangle> triangles;
  std::vector<std::uint8_t> pinned;
  std::optional<Anchor> anchor;
  WispClass wisp_class = WispClass::ScalpConnected;
  int source_mask_id = -1;
  double cell_w = 0.0, cell_h = 0.0;

  std::size_t vertex_count() const { return rest.size(); }
  std::size_t pinned_count() const {
    return static_cast<std::size_t>(std::count(pinned.begin(), pinned.end(), 1));
  }
  bool is_anchored(int v) const { return anchor && anchor->vertex == v; }

  friend bool operator==(const WispMesh&, const WispMesh&) = default;
};

struct MeshOptions {
  bool boundary_samples = true;
  bool largest_component_only = true;
};

namespace detail {

// Distance from p to the nearest on-pixel square of `m`, or +inf when none
// lies within `max_r`.
inline double distance_to_mask(const Mask& m, Vec2 p, double max_r) {
  const int x0 = std::max(0, static_cast<int>(std::floor(p.x - max_r)) - 1);
  const int x1 = std::min(m.width() - 1, static_cast<int>(std::ceil(p.x + max_r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(p.y - max_r)) - 1);
  const int y1 = std::min(m.height() - 1, static_cast<int>(std::ceil(p.y + max_r)));
  double best2 = std::numeric_limits<double>::infinity();
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if (!m(x, y)) continue;
      const double dx = std::max({0.0, x - p.x, p.x - (x + 1.0)});
      const double dy = std::max({0.0, y - p.y, p.y - (y + 1.0)});
      best2 = std::min(best2, dx * dx + dy * dy);
    }
  const double d = std::sqrt(best2);
  return d <= max_r ? d : std::numeric_limits<double>::infinity();
}

inline bool mask_contains(const Mask& m, Vec2 p) {
  const int x = static_cast<int>(std::floor(p.x)), y = static_cast<int>(std::floor(p.y));
  return m.contains(x, y) && m(x, y);
}

// Vertex components induced by the triangles (union-find).
inline std::vector<int> vertex_components(std::size_t n, std::span<const Triangle> tris) {
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (const Triangle& t : tris)
    for (int e = 1; e < 3; ++e) {
      const int a = find(t[0]), b = find(t[static_cast<std::size_t>(e)]);
      if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
  std::vector<int> out(n);
  for (std::size_t v = 0; v < n; ++v) out[v] = find(static_cast<int>(v));
  return out;
}

}  // namespace detail

// Per-vertex component id (smallest vertex index in the component).
inline std::vector<int> mesh_components(const WispMesh& mesh) {
  return detail::vertex_components(mesh.rest.size(), mesh.triangles);
}

// Keeps the given triangles, drops unreferenced vertices, reindexes and
// records rest lengths.
inline WispMesh assemble_mesh(std::span<const Vec2> candidates, std::span<const Triangle> tris) {
  std::vector<int> remap(candidates.size(), -1);
  WispMesh mesh;
  for (const Triangle& t : tris)
    for (int v : t) remap[static_cast<std::size_t>(v)] = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (remap[i] == 0) {
      remap[i] = static_cast<int>(mesh.rest.size());
      mesh.rest.push_back(candidates[i]);
    }
  std::vector<std::pair<int, int>> pairs;
  for (const Triangle& t : tris) {
    const Triangle r = {remap[static_cast<std::size_t>(t[0])], remap[static_cast<std::size_t>(t[1])],
                        remap[static_cast<std::size_t>(t[2])]};
    mesh.triangles.push_back(r);
    for (int e = 0; e < 3; ++e) {
      const int a = r[static_cast<std::size_t>(e)], b = r[static_cast<std::size_t>((e + 1) % 3)];
      pairs.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (auto [a, b] : pairs)
    mesh.edges.push_back(
        {a, b, distance(mesh.rest[static_cast<std::size_t>(a)], mesh.rest[static_cast<std::size_t>(b)])});
  mesh.pinned.assign(mesh.rest.size(), 0);
  return mesh;
}

// Lattice points of the mask's bounding rectangle split into grid_n x grid_n
// cells (kept when within one cell diagonal of the mask), plus boundary
// samples spaced about one cell apart; Delaunay triangulated, then triangles
// whose centroid falls outside the mask are discarded.
inline WispMesh build_wisp_mesh(const Mask& mask, int grid_n, const MeshOptions& options = {}) {
  if (grid_n < 2) throw MeshError("grid_n must be >= 2");
  const PixelBox box = bounding_box(mask);
  if (box.empty()) throw MeshError("empty mask");

  const double cell_w = static_cast<double>(box.width()) / grid_n;
  const double cell_h = static_cast<double>(box.height()) / grid_n;
  const double diag = std::hypot(cell_w, cell_h);

  std::vector<Vec2> candidates;
  for (int j = 0; j <= grid_n; ++j)
    for (int i = 0; i <= grid_n; ++i) {
      const Vec2 p = snap_point({box.x0 + i * cell_w, box.y0 + j * cell_h});
      if (std::isfinite(detail::distance_to_mask(mask, p, diag))) candidates.push_back(p);
    }

  if (options.boundary_samples) {
    const double spacing = std::max(2.0, std::min(cell_w, cell_h));
    const int step = static_cast<int>(std::lround(spacing));
    const double min_gap = 0.5 * spacing;
    int count = 0;
    const Raster<int> labels = label_components(mask, &count);
    for (int c = 1; c <= count; ++c) {
      Mask component(mask.width(), mask.height(), 0);
      for (std::size_t i = 0; i < component.size(); ++i) component.data()[i] = labels.data()[i] == c;
      const auto walk = trace_boundary(component);
      for (std::size_t k = 0; k < walk.size(); k += static_cast<std::size_t>(step)) {
        const Vec2 p = snap_point(pixel_center(walk[k]));
        bool near = false;
        for (const Vec2& q : candidates)
          if (distance(p, q) < min_gap) { near = true; break; }
        if (!near) candidates.push_back(p);
      }
    }
  }

  std::vector<Triangle> kept;
  for (const Triangle& t : delaunay_triangulate(candidates)) {
    const Vec2 centroid = (candidates[static_cast<std::size_t>(t[0])] +
                           candidates[static_cast<std::size_t>(t[1])] +
                           candidates[static_cast<std::size_t>(t[2])]) / 3.0;
    if (detail::mask_contains(mask, centroid)) kept.push_back(t);
  }

  if (options.largest_component_only && !kept.empty()) {
    const auto comp = detail::vertex_components(candidates.size(), kept);
    std::vector<std::size_t> size(candidates.size(), 0);
    for (const Triangle& t : kept) ++size[static_cast<std::size_t>(comp[static_cast<std::size_t>(t[0])])];
    std::size_t best = 0;
    for (std::size_t i = 0; i < size.size(); ++i)
      if (size[i] > size[best]) best = i;
    std::erase_if(kept, [&](const Triangle& t) {
      return static_cast<std::size_t>(comp[static_cast<std::size_t>(t[0])]) != best;
    });
  }

  WispMesh mesh = assemble_mesh(candidates, kept);
  if (mesh.rest.size() < 3 || mesh.triangles.empty())
    throw MeshError("mask too thin to mesh (" + std::to_string(mesh.rest.size()) + " vertices)");
  mesh.cell_w = cell_w;
  mesh.cell_h = cell_h;
  return mesh;
}

// Pixels within `radius` of the rasterized forehead polyline.
inline Mask forehead_band(std::span<const Vec2> contour, int width, int height, int radius = 2) {
  Mask band(width, height, 0);
  const int r2 = radius * radius;
  for (PixelCoord p : rasterize_polyline(contour))
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        if (dx * dx + dy * dy <= r2 && band.contains(p.x + dx, p.y + dy)) band(p.x + dx, p.y + dy) = 1;
  return band;
}

inline WispClass classify_wisp(const Mask& mask, std::span<const Vec2> contour) {
  const Mask band = forehead_band(contour, mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask.data()[i] && band.data()[i]) return WispClass::ScalpConnected;
  return WispClass::ScalpUnconnected;
}

inline constexpr double kBandRadius = 2.0;

// Pins vertices within pin_radius of the 2 px forehead band; every mesh
// component that ends up with no pinned vertex gets its vertex nearest to the
// polyline pinned. pin_radius <= 0 means one grid-cell length.
inline void pin_scalp_vertices(WispMesh& mesh, std::span<const Vec2> contour, double pin_radius = 0.0) {
  if (mesh.wisp_class != WispClass::ScalpConnected)
    throw ContractError("pin_scalp_vertices called on a scalp-unconnected mesh");
  if (pin_radius <= 0.0) pin_radius = std::max(mesh.cell_w, mesh.cell_h);
  const std::size_t n = mesh.rest.size();
  std::vector<double> dist(n);
  mesh.pinned.assign(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    dist[v] = point_polyline_distance(mesh.rest[v], contour);
    if (dist[v] <= kBandRadius + pin_radius) mesh.pinned[v] = 1;
  }
  const auto comp = mesh_components(mesh);
  for (std::size_t v = 0; v < n; ++v) {
    if (comp[v] != static_cast<int>(v)) continue;
    bool any = false;
    std::size_t nearest = v;
    for (std::size_t u = 0; u < n; ++u) {
      if (comp[u] != comp[v]) continue;
      any = any || mesh.pinned[u];
      if (dist[u] < dist[nearest]) nearest = u;
    }
    if (!any) mesh.pinned[nearest] = 1;
  }
}

// Whole-hair mesh over matte > 0.5; every component is kept and pinned to
// the scalp.
inline WispMesh build_auxiliary_mesh(const ScalarMap& matte, std::span<const Vec2> contour, int grid_n_aux) {
  Mask support(matte.width(), matte.height(), 0);
  for (std::size_t i = 0; i < support.size(); ++i) support.data()[i] = matte.data()[i] > 0.5;
  if (count_on(support) == 0) throw MeshError("hair matte has no pixels above 0.5");
  WispMesh mesh = build_wisp_mesh(support, grid_n_aux, {.boundary_samples = true, .largest_component_only = false});
  mesh.wisp_class = WispClass::ScalpConnected;
  pin_scalp_vertices(mesh, contour);
  return mesh;
}

// Topmost vertex: minimal y, then minimal x.
inline int topmost_vertex(const WispMesh& mesh) {
  int best = 0;
  for (int v = 1; v < static_cast<int>(mesh.rest.size()); ++v) {
    const Vec2 p = mesh.rest[static_cast<std::size_t>(v)], b = mesh.rest[static_cast<std::size_t>(best)];
    if (p.y < b.y || (p.y == b.y && p.x < b.x)) best = v;
  }
  return best;
}

inline void bind_unconnected(WispMesh& mesh, const WispMesh& aux) {
  if (mesh.wisp_class != WispClass::ScalpUnconnected)
    throw ContractError("bind_unconnected called on a scalp-connected mesh");
  if (aux.rest.empty() || aux.triangles.empty()) throw MeshError("auxiliary mesh is empty");
  const int v = topmost_vertex(mesh);
  const Vec2 p = mesh.rest[static_cast<std::size_t>(v)];
  constexpr double kInsideTol = 1e-12;
  for (std::size_t t = 0; t < aux.triangles.size(); ++t) {
    const Triangle& tri = aux.triangles[t];
    const auto w = barycentric(p, aux.rest[static_cast<std::size_t>(tri[0])],
                               aux.rest[static_cast<std::size_t>(tri[1])],
                               aux.rest[static_cast<std::size_t>(tri[2])]);
    if (w[0] >= -kInsideTol && w[1] >= -kInsideTol && w[2] >= -kInsideTol) {
      mesh.anchor = Anchor{v, static_cast<int>(t), tri, w};
      return;
    }
  }
  std::size_t nearest = 0;
  for (std::size_t u = 1; u < aux.rest.size(); ++u)
    if (distance(p, aux.rest[u]) < distance(p, aux.rest[nearest])) nearest = u;
  const int j = static_cast<int>(nearest);
  mesh.anchor = Anchor{v, -1, {j, j, j}, {1.0, 0.0, 0.0}};
}

// Text export: "v x y [pin|anchor]" per vertex, then "f i j k" with
// zero-based vertex indices.
inline void write_mesh(const std::filesystem::path& path, const WispMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.precision(17);
  for (std::size_t v = 0; v < mesh.rest.size(); ++v) {
    out << "v " << mesh.rest[v].x << ' ' << mesh.rest[v].y;
    if (mesh.pinned[v]) out << " pin";
    if (mesh.is_anchored(static_cast<int>(v))) out << " anchor";
    out << '\n';
  }
  for (const Triangle& t : mesh.triangles) out << "f " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace hairwisp
