// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "hairwisp/diagnostics.hpp"
#include "hairwisp/extraction.hpp"
#include "hairwisp/meshing.hpp"
#include "hairwisp/pipeline.hpp"
#include "hairwisp/simulation.hpp"
#include "hairwisp/warping.hpp"
#include "synthetic_scene.hpp"
#include "test_util.hpp"

using namespace hairwisp;
using namespace hairwisp::testing;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool close_rel(Vec2 got, Vec2 want, double tol = 1e-12) {
  const double scale = std::max(1.0, norm(want));
  return distance(got, want) <= tol * scale;
}

WispMesh spring_mesh(std::vector<Vec2> points, std::vector<std::pair<int, int>> links, std::vector<int> pins = {}) {
  WispMesh m;
  m.rest = std::move(points);
  for (auto [a, b] : links) m.edges.push_back({std::min(a, b), std::max(a, b), distance(m.rest[a], m.rest[b])});
  m.pinned.assign(m.rest.size(), 0);
  for (int p : pins) m.pinned[static_cast<std::size_t>(p)] = 1;
  return m;
}

const DemoScene& demo() {
  static const DemoScene d = make_demo_scene(512, 770, 10);
  return d;
}

// ---- 1 ---------------------------------------------------------------------
void equation_exactness(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Springs one = make_springs(2, std::vector<Edge>{{0, 1, 1.0}});
  std::vector<Vec2> x = {{0, 0}, {1, 0}};
  c.expect(close_rel(spring_force(0, x, one, 10.0), {0, 0}), "rest spring");
  x[1] = {2, 0};
  c.expect(close_rel(spring_force(0, x, one, 10.0), {10, 0}), "stretched spring (10,0)");
  x[1] = {0.5, 0};
  c.expect(close_rel(spring_force(0, x, one, 10.0), {-5, 0}), "compressed spring (-5,0)");
  // |(3,4)| = 5, L = 2, K = 7: 7 * 3 * (3,4) / 5
  const Springs diag = make_springs(2, std::vector<Edge>{{0, 1, 2.0}});
  c.expect(close_rel(spring_force(0, std::vector<Vec2>{{0, 0}, {3, 4}}, diag, 7.0), {12.6, 16.8}), "oblique spring");

  const Springs none = make_springs(1, std::vector<Edge>{});
  const std::vector<Vec2> p1 = {{4, 4}}, v1 = {{3, -2}};
  c.expect(close_rel(accumulate_force(0, p1, v1, none, {1.0, 1.0, {0, 9.8}, 0.0}), {0, 9.8}), "gravity only");
  const std::vector<Vec2> rest = {{0, 0}, {1, 0}}, still = {{0, 0}, {0, 0}};
  c.expect(close_rel(accumulate_force(0, rest, still, one, {10.0, 1.0, {0, 0}, 0.0}), {0, 0}), "equilibrium");
  const std::vector<Vec2> v10 = {{10, 0}};
  c.expect(close_rel(accumulate_force(0, p1, v10, none, {1.0, 1.0, {0, 0}, 0.05}), {-0.5, 0}), "damping term");

  const MeshSystem lone({spring_mesh({{0, 0}}, {})}, WispMesh{});
  SimState s = lone.initial_state({0, 0});
  s = step(s, lone, {1.0, 1.0, {0, 9.8}, 0.0}, 0.1);
  c.expect(close_rel(s.wisps[0].velocities[0], {0, 0.98}), "v(0.1) = (0, 0.98)");
  c.expect(close_rel(s.wisps[0].positions[0], {0, 0.098}), "x(0.1) = (0, 0.098)");

  const double t = seconds_since(t0);
  c.expect(t < 1.0, "runtime < 1 s");
  c.detail << "runtime " << t << " s";
}

// ---- 2 / 9 (zero motion) -------------------------------------------------------
struct StillRun {
  std::vector<Image> frames;
  TrajectoryDump dump;
  bool ok = false;
};

StillRun& still_run() {
  static StillRun r;
  return r;
}

void rest_equilibrium(Check& c) {
  SceneConfig cfg;
  cfg.gravity = {0, 0};
  cfg.wind_v0 = {0, 0};
  cfg.frame_count = 90;
  const StillScene& scene = demo().scene;
  c.expect(scene.wisp_masks.size() <= 10, "at most 10 wisps");

  const auto t0 = std::chrono::steady_clock::now();
  const Animator animator(scene, cfg);
  const Trajectory traj = animator.simulate();
  std::vector<Image> frames(traj.frames.size());
  animator.render(traj, 1, [&](std::size_t i, Image&& img) { frames[i] = std::move(img); });
  const double t = seconds_since(t0);

  c.expect(frames.size() == 90, "90 frames");
  std::size_t differing = 0;
  for (const Image& f : frames) differing += f != frames[0];
  c.expect(differing == 0, "all frames bitwise equal to frame 1");
  int worst = 0;
  std::size_t hard = 0;
  for (std::size_t i = 0; i < frames[0].size(); ++i) {
    const double m = scene.hair_matte.data()[i];
    if (m != 0.0 && m != 1.0) continue;
    ++hard;
    const Rgba8 a = frames[0].data()[i], b = scene.image.data()[i];
    worst = std::max({worst, std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)});
  }
  c.expect(worst <= 1, "hard-alpha deviation <= 1");
  c.expect(t < 30.0, "runtime < 30 s");
  c.detail << scene.width() << "x" << scene.height() << ", " << scene.wisp_masks.size() << " wisps, " << hard
           << " hard-alpha px, max deviation " << worst << ", runtime " << t << " s";

  const auto path = std::filesystem::temp_directory_path() / "hairwisp_acceptance_still.txt";
  write_trajectory(path, animator.system(), traj);
  still_run().dump = read_trajectory(path);
  still_run().frames = std::move(frames);
  still_run().ok = true;
}

// ---- 3 ---------------------------------------------------------------------
void pinned_and_anchored(Check& c) {
  const Animator animator(demo().scene, SceneConfig{});
  const MeshSystem& sys = animator.system();
  const ForceParams p = ForceParams::from(animator.config());
  SimState s = sys.initial_state(animator.config().wind_v0);
  std::size_t pinned = 0, moved = 0;
  for (const WispMesh& m : sys.wisps()) pinned += m.pinned_count();
  pinned += sys.aux().pinned_count();
  for (int i = 0; i < 1000; ++i) {
    s = step(s, sys, p, animator.config().dt);
    for (std::size_t k = 0; k < sys.wisps().size(); ++k)
      for (std::size_t v = 0; v < sys.wisps()[k].rest.size(); ++v)
        if (sys.wisps()[k].pinned[v]) moved += !(s.wisps[k].positions[v] == sys.wisps()[k].rest[v]);
    for (std::size_t v = 0; v < sys.aux().rest.size(); ++v)
      if (sys.aux().pinned[v]) moved += !(s.aux.positions[v] == sys.aux().rest[v]);
  }
  c.expect(pinned > 0 && moved == 0, "pinned vertices bitwise static over 1000 steps");

  // Unit-weight anchor on a free auxiliary vertex.
  WispMesh aux = spring_mesh({{0, 0}, {10, 0}, {5, 8}}, {{0, 1}, {1, 2}, {0, 2}}, {0, 1});
  WispMesh wisp = spring_mesh({{5, 8}, {5, 20}, {9, 20}}, {{0, 1}, {1, 2}, {0, 2}});
  wisp.wisp_class = WispClass::ScalpUnconnected;
  wisp.anchor = Anchor{0, 0, {2, 0, 1}, {1.0, 0.0, 0.0}};
  const MeshSystem pair({wisp}, aux);
  SimState t = pair.initial_state({7, -3});
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    t = step(t, pair, {50.0, 1.0, {0, 30}, 0.1}, 0.01);
    const Vec2 aux_disp = t.aux.positions[2] - aux.rest[2];
    const Vec2 anchored_disp = t.wisps[0].positions[0] - wisp.rest[0];
    worst = std::max(worst, distance(aux_disp, anchored_disp));
  }
  c.expect(worst <= 1e-12, "unit-weight anchor displacement");
  c.detail << pinned << " pinned vertices, " << moved << " moved; anchor max deviation " << worst;
}

// ---- 4 ---------------------------------------------------------------------
void integrator_stability(Check& c) {
  const double K = 100.0, m = 1.0, L = 5.0, delta = 1.5;
  const double h = 0.5 * std::sqrt(m / K);
  WispMesh spring = spring_mesh({{0, 0}, {L + delta, 0}}, {{0, 1}}, {0});
  spring.edges[0].rest_length = L;
  const MeshSystem sys({spring}, WispMesh{});
  auto energy = [&](const SimState& s) {
    const Vec2 v = s.wisps[0].velocities[1];
    const double stretch = distance(s.wisps[0].positions[0], s.wisps[0].positions[1]) - L;
    return 0.5 * m * dot(v, v) + 0.5 * K * stretch * stretch;
  };

  SimState s = sys.initial_state({0, 0});
  const double e0 = energy(s);
  double ratio = 1.0;
  for (int i = 0; i < 10000; ++i) {
    s = step(s, sys, {K, m, {0, 0}, 0.0}, h);
    ratio = std::max(ratio, energy(s) / e0);
  }
  c.expect(ratio <= 2.0, "undamped energy within 2x");

  const double damping = 0.05;
  s = sys.initial_state({0, 0});
  double prev = energy(s), worst_rise = 0.0;
  int rises = 0, first_rise = -1;
  // Quadratic invariant of the damped map (information only).
  const double w2 = K / m;
  const double qa = (damping * h * h * h * w2 - 2.0) / (damping * h - 2.0);
  const double qb = (-2.0 * damping * h * h * w2 + 2.0 * h * w2) / (damping * h - 2.0);
  auto q = [&](const SimState& st) {
    const double sx = st.wisps[0].positions[1].x - L, v = st.wisps[0].velocities[1].x;
    return qa * v * v + w2 * sx * sx + qb * sx * v;
  };
  double q_prev = q(s), q_worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    s = step(s, sys, {K, m, {0, 0}, damping}, h);
    const double e = energy(s);
    if (e > prev * (1.0 + 1e-9)) {
      ++rises;
      if (first_rise < 0) first_rise = i + 1;
      worst_rise = std::max(worst_rise, (e - prev) / prev);
    }
    prev = e;
    const double qn = q(s);
    q_worst = std::max(q_worst, (qn - q_prev) / std::abs(q_prev));
    q_prev = qn;
  }
  c.expect(rises == 0, "damped energy non-increasing per step");
  c.detail << "undamped max E/E0 " << ratio << "; damped: energy rose on " << rises << " of 10000 steps (first at step "
           << first_rise << ", max relative rise " << worst_rise << "); info: modified quadratic max relative change "
           << q_worst;
}

// ---- 5 ---------------------------------------------------------------------
void tps_oracles(Check& c) {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> coord(0, 500), jitter(-6, 6), lin(-0.3, 0.3), shift(-40, 40);
  std::uniform_int_distribution<int> count(5, 40);
  double interp = 0.0, side = 0.0, radial = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = count(rng);
    std::vector<Vec2> src, dst, aff;
    for (int i = 0; i < n; ++i) src.push_back({coord(rng), coord(rng)});
    const double a = 1 + lin(rng), b = lin(rng), cc = lin(rng), d = 1 + lin(rng);
    const Vec2 t{shift(rng), shift(rng)};
    for (const Vec2& p : src) {
      dst.push_back(p + Vec2{jitter(rng), jitter(rng)});
      aff.push_back(Vec2{a * p.x + b * p.y, cc * p.x + d * p.y} + t);
    }
    const TpsModel model = tps_fit(src, dst);
    for (std::size_t i = 0; i < src.size(); ++i) interp = std::max(interp, distance(model(src[i]), dst[i]));
    double s0[2] = {0, 0}, sx[2] = {0, 0}, sy[2] = {0, 0};
    const auto w = model.radial_weights();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double wi[2] = {w[i].x, w[i].y};
      for (int o = 0; o < 2; ++o) {
        s0[o] += wi[o];
        sx[o] += wi[o] * src[i].x;
        sy[o] += wi[o] * src[i].y;
      }
    }
    for (int o = 0; o < 2; ++o) side = std::max({side, std::abs(s0[o]), std::abs(sx[o]), std::abs(sy[o])});

    const TpsModel affine = tps_fit(src, aff);
    for (const Vec2& wv : affine.radial_weights()) radial = std::max({radial, std::abs(wv.x), std::abs(wv.y)});
  }
  c.expect(interp <= 1e-6, "interpolation <= 1e-6 px");
  c.expect(side <= 1e-8, "side conditions <= 1e-8");
  c.expect(radial <= 1e-8, "affine radial weights <= 1e-8");
  c.detail << "100 configurations; max interpolation error " << interp << " px, side residual " << side
           << ", affine radial weight " << radial;
}

// ---- 6 ---------------------------------------------------------------------
// Empty-circumcircle check with the circle computed here in long double.
std::size_t circumcircle_violations(const std::vector<Vec2>& pts, const std::vector<Triangle>& tris) {
  std::size_t bad = 0;
  for (const Triangle& t : tris) {
    const long double ax = pts[t[0]].x, ay = pts[t[0]].y, bx = pts[t[1]].x, by = pts[t[1]].y, cx = pts[t[2]].x,
                      cy = pts[t[2]].y;
    const long double d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if (d == 0) {
      ++bad;
      continue;
    }
    const long double ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) + (cx * cx + cy * cy) * (ay - by)) / d;
    const long double uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) + (cx * cx + cy * cy) * (bx - ax)) / d;
    const long double r = std::sqrt((ax - ux) * (ax - ux) + (ay - uy) * (ay - uy));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (static_cast<int>(i) == t[0] || static_cast<int>(i) == t[1] || static_cast<int>(i) == t[2]) continue;
      const long double dx = pts[i].x - ux, dy = pts[i].y - uy;
      if (std::sqrt(dx * dx + dy * dy) < r * (1 - 1e-9L)) ++bad;
    }
  }
  return bad;
}

void mesh_suite(Check& c) {
  std::size_t triangles = 0, bad = 0;
  const Animator animator(demo().scene, SceneConfig{});
  for (const WispMesh& m : animator.system().wisps()) {
    triangles += m.triangles.size();
    bad += circumcircle_violations(m.rest, m.triangles);
  }
  const WispMesh& aux = animator.system().aux();
  triangles += aux.triangles.size();
  bad += circumcircle_violations(aux.rest, aux.triangles);

  std::mt19937 rng(6);
  std::uniform_real_distribution<double> coord(0, 200);
  std::uniform_int_distribution<int> lattice(0, 12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 60; ++i)
      pts.push_back(trial % 2 ? snap_point({coord(rng), coord(rng)}) : Vec2{lattice(rng) * 10.0, lattice(rng) * 10.0});
    const auto tris = delaunay_triangulate(pts);
    triangles += tris.size();
    bad += circumcircle_violations(pts, tris);
  }
  c.expect(bad == 0, "empty circumcircles");

  const WispMesh rect = build_wisp_mesh(rect_mask(60, 60, 0, 0, 60, 60), 6, {.boundary_samples = false});
  std::size_t hull = 0;
  for (const Vec2& p : rect.rest) hull += p.x == 0.0 || p.y == 0.0 || p.x == 60.0 || p.y == 60.0;
  const std::size_t euler = 2 * rect.rest.size() - 2 - hull;
  c.expect(rect.triangles.size() == euler && euler == 72, "6x6 rectangle: 72 triangles");
  c.detail << triangles << " triangles checked, " << bad << " violations; 6x6 rectangle " << rect.triangles.size()
           << " triangles (Euler oracle " << euler << ")";
}

// ---- 7 ---------------------------------------------------------------------
std::vector<std::string> picture(const Raster<int>& labels) {
  std::vector<std::string> rows;
  for (int y = 0; y < labels.height(); ++y) {
    std::string row;
    for (int x = 0; x < labels.width(); ++x) row += labels(x, y) == 0 ? '.' : static_cast<char>('A' + labels(x, y) - 1);
    rows.push_back(row);
  }
  return rows;
}

Polyline column(int x, int y0, int y1) { return {{x + 0.5, y0 + 0.5}, {x + 0.5, y1 + 0.5}}; }

double rms(const ContourPolynomial& g, const std::vector<Vec2>& s) {
  double sum = 0.0;
  for (const Vec2& p : s) sum += (g(p.y) - p.x) * (g(p.y) - p.x);
  return std::sqrt(sum / static_cast<double>(s.size()));
}

int row_width(const Mask& m, int y) {
  int n = 0;
  for (int x = 0; x < m.width(); ++x) n += m(x, y);
  return n;
}

void extraction_suite(Check& c) {
  const ScalarMap full(5, 5, 1.0);
  const std::vector<Polyline> one = {column(2, 0, 4)};
  c.expect(picture(sketch_fill_all(one, full)) == std::vector<std::string>(5, "..AAA"), "single stroke fill");
  const std::vector<Polyline> two = {column(1, 0, 4), column(3, 0, 4)};
  c.expect(picture(sketch_fill_all(two, full)) == std::vector<std::string>(5, ".AABB"), "two-stroke split");
  const std::vector<Polyline> shorter = {column(1, 0, 2), column(3, 0, 2)};
  c.expect(picture(sketch_fill_all(shorter, full)) ==
               std::vector<std::string>{".AABA", ".AABA", ".AABA", ".AAAA", ".AAAA"},
           "first claim wins");

  double worst = 0.0;
  const std::vector<std::function<double(double)>> polys = {
      [](double) { return 7.0; }, [](double y) { return 2 * y + 1; }, [](double y) { return 0.01 * y * y - y + 3; },
      [](double y) { return 0.002 * y * y * y - 0.3 * y + 40; }};
  for (std::size_t d = 0; d < polys.size(); ++d) {
    std::vector<Vec2> s;
    for (int y = 100; y <= 400; y += 3) s.push_back({polys[d](y), static_cast<double>(y)});
    worst = std::max(worst, rms(smooth_contour(s, 3), s));
  }
  c.expect(worst < 1e-8, "polynomial reproduction < 1e-8");

  const Mask rect = rect_mask(30, 30, 5, 3, 10, 20);
  const ContourPair pair = split_contour(rect);
  const ContourPolynomial left = smooth_contour(row_samples(pair.left, Side::Left), 3);
  const ContourPolynomial right = smooth_contour(row_samples(pair.right, Side::Right), 3);
  const Mask tip = sharpen_tip(rect, left, right, 0.15, 0.2);
  const Mask half = sharpen_tip(rect, left, right, 0.5, 0.2);
  // 20 rows, width 10, ratio 0.2: the bottom row keeps 2 px; with a 10-row
  // tip the 5th tip row keeps 10 * 0.6 = 6.
  c.expect(row_width(tip, 22) == 2 && row_width(tip, 19) == 10, "tip endpoints 10 -> 2");
  c.expect(row_width(half, 12) == 10 && row_width(half, 17) == 6 && row_width(half, 22) == 2, "ramp 10, 6, 2");
  c.detail << "fill pictures, polynomial residual " << worst << ", tip widths " << row_width(tip, 19) << "->"
           << row_width(tip, 22);
}

// ---- 8 / 9 (moving) ------------------------------------------------------------
struct MovingRun {
  std::filesystem::path frames_dir, trajectory;
  bool ok = false;
};

MovingRun& moving_run() {
  static MovingRun r;
  return r;
}

void determinism(Check& c) {
  const auto dir = scratch_dir("acceptance_runs");
  const ScenePaths paths = write_demo_scene(dir / "scene", demo());
  const SceneConfig cfg = validate_config(read_config_file(HAIRWISP_DEMO_CONFIG));
  c.expect(cfg.frame_count == 90, "90 frames");

  double times[2] = {0, 0};
  std::vector<std::string> digests[2];
  const int workers[2] = {1, 4};
  for (int r = 0; r < 2; ++r) {
    AnimateRequest req{paths, cfg, dir / ("out" + std::to_string(r)), workers[r], dir / ("traj" + std::to_string(r) + ".txt"),
                       std::nullopt};
    const auto t0 = std::chrono::steady_clock::now();
    digests[r] = run_animate(req).frame_digests;
    times[r] = seconds_since(t0);
  }
  c.expect(digests[0].size() == 90 && digests[0] == digests[1], "identical frame digests");
  c.expect(times[0] < 120.0 && times[1] < 120.0, "runtime < 2 min");
  c.detail << "workers 1 vs 4, " << digests[0].size() << " frames, runtimes " << times[0] << " s / " << times[1]
           << " s";
  moving_run() = {dir / "out0", dir / "traj0.txt", true};
}

void diagnostics(Check& c) {
  c.expect(still_run().ok && moving_run().ok, "criteria 2 and 8 runs available");
  if (!still_run().ok || !moving_run().ok) return;
  const DiagnosticReport zero = diagnose(still_run().frames, still_run().dump);
  double zmax = 0.0;
  for (double e : zero.short_term) zmax = std::max(zmax, e);
  for (double e : zero.long_term) zmax = std::max(zmax, e);
  c.expect(zero.short_term.size() == 89 && zmax <= 1.0, "zero-motion error within quantization");

  const auto frames = read_frames(moving_run().frames_dir);
  const DiagnosticReport moving = diagnose(frames, read_trajectory(moving_run().trajectory));
  bool finite = true;
  double mmax = 0.0;
  for (double e : moving.short_term) finite = finite && std::isfinite(e), mmax = std::max(mmax, e);
  for (double e : moving.long_term) finite = finite && std::isfinite(e), mmax = std::max(mmax, e);
  c.expect(moving.short_term.size() == 89 && moving.long_term.size() == 89, "T-1 pairs");
  c.expect(finite, "finite errors");
  c.detail << "zero motion max MSE " << zmax << "; moving run " << moving.short_term.size() << " pairs, max MSE "
           << mmax << ", max displacement " << moving.max_displacement.back() << " px";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"equation exactness", equation_exactness},
      {"rest equilibrium", rest_equilibrium},
      {"pinned and anchored contracts", pinned_and_anchored},
      {"integrator stability", integrator_stability},
      {"TPS oracles", tps_oracles},
      {"Delaunay and mesh", mesh_suite},
      {"extraction", extraction_suite},
      {"end-to-end determinism", determinism},
      {"self-consistency diagnostics", diagnostics},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail << "[exception: " << e.what() << "]";
    }
    failures += !c.pass;
    std::cout << "criterion " << i + 1 << " " << (c.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << c.detail.str() << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size() << " criteria pass"
            << std::endl;
  return failures;
}
