#include <gtest/gtest.h>

#include <sstream>

#include "hairwisp/diagnostics.hpp"
#include "synthetic_scene.hpp"
#include "test_util.hpp"

using namespace hairwisp;
using namespace hairwisp::testing;

namespace {

const DemoScene& small_demo() {
  static const DemoScene demo = make_demo_scene(192, 289, 6);
  return demo;
}

SceneConfig config(int frames, bool still) {
  SceneConfig cfg;
  cfg.spring_constant = 2000;
  cfg.gravity = {0, still ? 0.0 : 100.0};
  cfg.damping = 3;
  cfg.wind_v0 = {still ? 0.0 : 40.0, 0};
  cfg.frame_count = frames;
  return cfg;
}

struct RenderedRun {
  std::vector<Image> frames;
  TrajectoryDump dump;
};

RenderedRun run(const SceneConfig& cfg) {
  const Animator a(small_demo().scene, cfg);
  const Trajectory traj = a.simulate();
  RenderedRun r;
  r.frames.resize(traj.frames.size());
  a.render(traj, 1, [&](std::size_t i, Image&& img) { r.frames[i] = std::move(img); });
  const auto path = scratch_dir("diag_run") / "traj.txt";
  write_trajectory(path, a.system(), traj);
  r.dump = read_trajectory(path);
  return r;
}

// Textured image whose content at x equals the base pattern at x - shift.
Image shifted(int w, int h, int shift) {
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int u = x - shift;
      img(x, y) = {static_cast<std::uint8_t>((u * 37 + y * 11) & 255), static_cast<std::uint8_t>((u * u + 3 * y) & 255),
                   static_cast<std::uint8_t>((u * 5 + y * y) & 255), 255};
    }
  return img;
}

}  // namespace

TEST(TrajectoryDump, RoundTrip) {
  const Animator a(small_demo().scene, config(3, false));
  const Trajectory traj = a.simulate();
  const auto path = scratch_dir("diag_round") / "t.txt";
  write_trajectory(path, a.system(), traj);
  const TrajectoryDump d = read_trajectory(path);
  ASSERT_EQ(d.positions.size(), 3u);
  ASSERT_EQ(d.triangles.size(), a.system().wisps().size());
  for (std::size_t k = 0; k < d.triangles.size(); ++k) EXPECT_EQ(d.triangles[k], a.system().wisps()[k].triangles);
  for (std::size_t f = 0; f < 3; ++f) {
    EXPECT_DOUBLE_EQ(d.times[f], static_cast<double>(f) * traj.frame_interval);
    for (std::size_t k = 0; k < d.positions[f].size(); ++k) EXPECT_EQ(d.positions[f][k], traj.frames[f].wisps[k].positions);
  }
}

TEST(TrajectoryDump, RejectsMalformedLines) {
  std::istringstream bad_vertex("frame 0 0\n0 0 1.5\n");
  EXPECT_THROW(parse_trajectory(bad_vertex, "t"), ParseError);
  std::istringstream orphan("0 0 1 2\n");
  EXPECT_THROW(parse_trajectory(orphan, "t"), ParseError);
  std::istringstream gap("frame 0 0\nframe 2 1\n");
  EXPECT_THROW(parse_trajectory(gap, "t"), ParseError);
}

TEST(Diagnose, ZeroMotionHasZeroError) {
  const RenderedRun r = run(config(5, true));
  const DiagnosticReport rep = diagnose(r.frames, r.dump);
  ASSERT_EQ(rep.short_term.size(), 4u);
  ASSERT_EQ(rep.long_term.size(), 4u);
  for (double e : rep.short_term) EXPECT_EQ(e, 0.0);
  for (double e : rep.long_term) EXPECT_EQ(e, 0.0);
  for (double d : rep.max_displacement) EXPECT_EQ(d, 0.0);
}

TEST(Diagnose, MovingRunIsFinite) {
  const RenderedRun r = run(config(8, false));
  const DiagnosticReport rep = diagnose(r.frames, r.dump);
  ASSERT_EQ(rep.short_term.size(), 7u);
  for (double e : rep.short_term) EXPECT_TRUE(std::isfinite(e));
  for (double e : rep.long_term) EXPECT_TRUE(std::isfinite(e));
  EXPECT_GT(rep.max_displacement.back(), 0.0);
  EXPECT_TRUE(report_json(rep)["short_term_mse"]["finite"].get<bool>());
}

TEST(Diagnose, IntegerTranslationIsExact) {
  // One square mesh moving 10 px right per frame over content moving with it.
  TrajectoryDump d;
  d.triangles = {{{0, 1, 2}, {0, 2, 3}}};
  const std::vector<Vec2> rest = {{20, 20}, {60, 20}, {60, 50}, {20, 50}};
  std::vector<Image> frames;
  for (int t = 0; t < 4; ++t) {
    std::vector<Vec2> now;
    for (const Vec2& p : rest) now.push_back(p + Vec2{10.0 * t, 0});
    d.positions.push_back({now});
    d.times.push_back(t);
    frames.push_back(shifted(120, 80, 10 * t));
  }
  const DiagnosticReport rep = diagnose(frames, d);
  ASSERT_EQ(rep.short_term.size(), 3u);
  for (double e : rep.short_term) EXPECT_LE(e, 1e-6);
  for (double e : rep.long_term) EXPECT_LE(e, 1e-6);
  EXPECT_DOUBLE_EQ(rep.max_displacement[3], 30.0);

  // The same frames against a static trajectory are far from consistent.
  TrajectoryDump still = d;
  for (auto& f : still.positions) f = {rest};
  EXPECT_GT(diagnose(frames, still).short_term[0], 100.0);
}

TEST(Diagnose, CountMismatchThrows) {
  const RenderedRun r = run(config(3, true));
  std::vector<Image> fewer(r.frames.begin(), r.frames.end() - 1);
  EXPECT_THROW(diagnose(fewer, r.dump), DiagnoseError);
}

TEST(Diagnose, ReadFramesStopsAtFirstGap) {
  const auto dir = scratch_dir("diag_frames");
  write_png(dir / frame_name(0), shifted(8, 8, 0));
  write_png(dir / frame_name(1), shifted(8, 8, 1));
  write_png(dir / frame_name(3), shifted(8, 8, 3));
  EXPECT_EQ(read_frames(dir).size(), 2u);
  EXPECT_THROW(read_frames(dir / "missing"), IoError);
}
