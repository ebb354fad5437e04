#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "hairwisp/config.hpp"
#include "hairwisp/errors.hpp"
#include "hairwisp/geometry.hpp"
#include "hairwisp/meshing.hpp"

namespace hairwisp {

// Per-vertex spring lists in compressed row form. Neighbour order follows
// the mesh edge order, so force sums are reproducible.
struct Springs {
  std::vector<std::size_t> offsets;  // size n + 1
  std::vector<int> neighbors;
  std::vector<double> rest_lengths;

  std::size_t vertex_count() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

inline Springs make_springs(std::size_t vertex_count, std::span<const Edge> edges) {
  Springs s;
  s.offsets.assign(vertex_count + 1, 0);
  for (const Edge& e : edges) {
    ++s.offsets[static_cast<std::size_t>(e.a) + 1];
    ++s.offsets[static_cast<std::size_t>(e.b) + 1];
  }
  for (std::size_t i = 0; i < vertex_count; ++i) s.offsets[i + 1] += s.offsets[i];
  s.neighbors.resize(s.offsets.back());
  s.rest_lengths.resize(s.offsets.back());
  std::vector<std::size_t> fill(s.offsets.begin(), s.offsets.end() - 1);
  for (const Edge& e : edges) {
    auto put = [&](int from, int to) {
      const std::size_t k = fill[static_cast<std::size_t>(from)]++;
      s.neighbors[k] = to;
      s.rest_lengths[k] = e.rest_length;
    };
    put(e.a, e.b);
    put(e.b, e.a);
  }
  return s;
}

inline Springs make_springs(const WispMesh& mesh) { return make_springs(mesh.rest.size(), mesh.edges); }

// Hooke force on vertex i from all of its springs. A spring whose endpoints
// coincide contributes nothing.
inline Vec2 spring_force(int i, std::span<const Vec2> positions, const Springs& springs, double K) {
  Vec2 f;
  const auto ui = static_cast<std::size_t>(i);
  const Vec2 xi = positions[ui];
  for (std::size_t k = springs.offsets[ui]; k < springs.offsets[ui + 1]; ++k) {
    const Vec2 d = positions[static_cast<std::size_t>(springs.neighbors[k])] - xi;
    const double len = norm(d);
    if (len < 1e-9) continue;
    f += d * (K * (len - springs.rest_lengths[k]) / len);
  }
  return f;
}

struct ForceParams {
  double spring_constant = 0.0;
  double mass = 1.0;
  Vec2 gravity;
  double damping = 0.0;

  static ForceParams from(const SceneConfig& cfg) {
    return {cfg.spring_constant, cfg.mass, cfg.gravity, cfg.damping};
  }
};

// Gravity + springs - c * m * v.
inline Vec2 accumulate_force(int i, std::span<const Vec2> positions, std::span<const Vec2> velocities,
                             const Springs& springs, const ForceParams& p) {
  const Vec2 v = velocities[static_cast<std::size_t>(i)];
  return p.gravity * p.mass + spring_force(i, positions, springs, p.spring_constant) -
         v * (p.damping * p.mass);
}

struct MeshState {
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  friend bool operator==(const MeshState&, const MeshState&) = default;
};

struct SimState {
  MeshState aux;
  std::vector<MeshState> wisps;
  long step = 0;
  double time = 0.0;
  friend bool operator==(const SimState&, const SimState&) = default;
};

// Meshes plus their precomputed springs. The auxiliary mesh is optional;
// when empty, no wisp may carry an anchor.
class MeshSystem {
 public:
  MeshSystem(std::vector<WispMesh> wisps, WispMesh aux) : wisps_(std::move(wisps)), aux_(std::move(aux)) {
    aux_springs_ = make_springs(aux_);
    for (const WispMesh& m : wisps_) {
      springs_.push_back(make_springs(m));
      if (m.anchor) {
        for (int j : m.anchor->aux_vertices)
          if (j < 0 || static_cast<std::size_t>(j) >= aux_.rest.size())
            throw ContractError("anchor refers to a missing auxiliary vertex");
      }
    }
  }

  const std::vector<WispMesh>& wisps() const { return wisps_; }
  const WispMesh& aux() const { return aux_; }
  const Springs& springs(std::size_t k) const { return springs_[k]; }
  const Springs& aux_springs() const { return aux_springs_; }

  // Rest positions; free vertices start at wind_v0, pinned and anchored at 0.
  SimState initial_state(Vec2 wind_v0) const {
    SimState s;
    auto init = [&](const WispMesh& m) {
      MeshState ms{m.rest, std::vector<Vec2>(m.rest.size())};
      for (std::size_t v = 0; v < m.rest.size(); ++v)
        if (!m.pinned[v] && !m.is_anchored(static_cast<int>(v))) ms.velocities[v] = wind_v0;
      return ms;
    };
    s.aux = init(aux_);
    for (const WispMesh& m : wisps_) s.wisps.push_back(init(m));
    return s;
  }

 private:
  std::vector<WispMesh> wisps_;
  WispMesh aux_;
  std::vector<Springs> springs_;
  Springs aux_springs_;
};

namespace detail {

inline void check_finite(Vec2 x, Vec2 v, long step, const std::string& mesh, std::size_t vertex) {
  if (!is_finite(x) || !is_finite(v))
    throw SimulationFault("non-finite state at step " + std::to_string(step) + ", " + mesh + " vertex " +
                          std::to_string(vertex));
}

// Symplectic Euler for every free vertex; forces read only `cur`.
inline void advance_free(const WispMesh& mesh, const Springs& springs, const MeshState& cur, MeshState& next,
                         const ForceParams& p, double dt) {
  const std::size_t n = mesh.rest.size();
  for (std::size_t v = 0; v < n; ++v) {
    if (mesh.pinned[v]) {
      next.positions[v] = cur.positions[v];
      next.velocities[v] = cur.velocities[v];
      continue;
    }
    const Vec2 a = accumulate_force(static_cast<int>(v), cur.positions, cur.velocities, springs, p) / p.mass;
    const Vec2 vel = cur.velocities[v] + a * dt;
    next.velocities[v] = vel;
    next.positions[v] = cur.positions[v] + vel * dt;
  }
}

}  // namespace detail

// One integrator step: the auxiliary mesh first, then every wisp mesh.
// Anchored vertices take the displacement of their auxiliary binding.
inline SimState step(const SimState& cur, const MeshSystem& system, const ForceParams& p, double dt) {
  SimState next = cur;
  next.step = cur.step + 1;
  next.time = static_cast<double>(next.step) * dt;

  const WispMesh& aux = system.aux();
  detail::advance_free(aux, system.aux_springs(), cur.aux, next.aux, p, dt);
  for (std::size_t v = 0; v < aux.rest.size(); ++v)
    detail::check_finite(next.aux.positions[v], next.aux.velocities[v], next.step, "auxiliary mesh", v);

  for (std::size_t k = 0; k < system.wisps().size(); ++k) {
    const WispMesh& mesh = system.wisps()[k];
    detail::advance_free(mesh, system.springs(k), cur.wisps[k], next.wisps[k], p, dt);
    if (mesh.anchor) {
      const Anchor& a = *mesh.anchor;
      Vec2 shift;
      for (std::size_t j = 0; j < 3; ++j) {
        const auto u = static_cast<std::size_t>(a.aux_vertices[j]);
        shift += (next.aux.positions[u] - aux.rest[u]) * a.weights[j];
      }
      const auto v = static_cast<std::size_t>(a.vertex);
      next.wisps[k].positions[v] = mesh.rest[v] + shift;
      next.wisps[k].velocities[v] = (next.wisps[k].positions[v] - cur.wisps[k].positions[v]) / dt;
    }
    for (std::size_t v = 0; v < mesh.rest.size(); ++v)
      detail::check_finite(next.wisps[k].positions[v], next.wisps[k].velocities[v], next.step,
                           "wisp " + std::to_string(k), v);
  }
  return next;
}

// Snapshots at t = 0, frame_interval, ..., (T-1) * frame_interval.
struct Trajectory {
  double frame_interval = 0.0;
  std::vector<SimState> frames;
};

inline Trajectory simulate(const MeshSystem& system, const SceneConfig& cfg) {
  const ForceParams p = ForceParams::from(cfg);
  Trajectory traj;
  traj.frame_interval = cfg.frame_interval();
  SimState s = system.initial_state(cfg.wind_v0);
  traj.frames.reserve(static_cast<std::size_t>(cfg.frame_count));
  traj.frames.push_back(s);
  for (int f = 1; f < cfg.frame_count; ++f) {
    for (int k = 0; k < cfg.substeps; ++k) s = step(s, system, p, cfg.dt);
    traj.frames.push_back(s);
  }
  return traj;
}

// Text dump: one "f k a b c" line per wisp triangle, then per frame a
// "frame n t" header followed by "k i x y" lines for every wisp vertex.
inline void write_trajectory(const std::filesystem::path& path, const MeshSystem& system, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.precision(17);
  for (std::size_t k = 0; k < system.wisps().size(); ++k)
    for (const Triangle& t : system.wisps()[k].triangles)
      out << "f " << k << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (std::size_t f = 0; f < traj.frames.size(); ++f) {
    out << "frame " << f << ' ' << static_cast<double>(f) * traj.frame_interval << '\n';
    const SimState& s = traj.frames[f];
    for (std::size_t k = 0; k < s.wisps.size(); ++k)
      for (std::size_t i = 0; i < s.wisps[k].positions.size(); ++i)
        out << k << ' ' << i << ' ' << s.wisps[k].positions[i].x << ' ' << s.wisps[k].positions[i].y << '\n';
  }
}

}  // namespace hairwisp
