#include <gtest/gtest.h>

#include <fstream>

#include "hairwisp/scene.hpp"
#include "test_util.hpp"

using namespace hairwisp;
using hairwisp::testing::scratch_dir;

namespace {

Raster<std::uint8_t> gray(int w, int h, std::uint8_t v) { return Raster<std::uint8_t>(w, h, v); }

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

// Writes a minimal well-formed 64x64 scene and returns its paths.
ScenePaths write_minimal_scene(const std::filesystem::path& dir) {
  ScenePaths p{dir / "image.pgm", dir / "matte.pgm", dir / "masks.pgm",
               dir / "contour.txt", dir / "depth.pgm", dir / "face.pgm"};
  write_pgm(p.image, gray(64, 64, 90));
  auto matte = gray(64, 64, 0);
  for (int y = 0; y < 40; ++y)
    for (int x = 10; x < 50; ++x) matte(x, y) = 255;
  write_pgm(p.matte, matte);
  auto labels = gray(64, 64, 0);
  for (int y = 5; y < 35; ++y)
    for (int x = 20; x < 26; ++x) labels(x, y) = 1;
  write_pgm(p.masks, labels);
  write_text(p.contour, "# forehead\n10 20\n50 20\n");
  write_pgm(p.depth, gray(64, 64, 128));
  write_pgm(p.face, gray(64, 64, 0));
  return p;
}

}  // namespace

TEST(LoadScene, MinimalSceneIsValid) {
  const auto paths = write_minimal_scene(scratch_dir("scene_min"));
  const StillScene s = load_scene(paths);
  EXPECT_EQ(s.width(), 64);
  EXPECT_EQ(s.height(), 64);
  ASSERT_EQ(s.wisp_masks.size(), 1u);
  EXPECT_EQ(count_on(s.wisp_masks[0]), 6u * 30u);
  ASSERT_EQ(s.forehead_contour.size(), 2u);
  EXPECT_EQ(s.forehead_contour[1], (Vec2{50, 20}));
  EXPECT_NEAR(s.depth(0, 0), 128.0 / 255.0, 1e-15);
}

TEST(LoadScene, IsDeterministic) {
  const auto paths = write_minimal_scene(scratch_dir("scene_det"));
  EXPECT_EQ(load_scene(paths), load_scene(paths));
}

TEST(LoadScene, RejectsTinyMask) {
  const auto dir = scratch_dir("scene_tiny");
  const auto paths = write_minimal_scene(dir);
  auto labels = gray(64, 64, 0);
  for (int x = 20; x < 28; ++x) labels(x, 10) = 1;  // 8 pixels
  write_pgm(paths.masks, labels);
  try {
    load_scene(paths);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("wisp mask 0"), std::string::npos);
  }
}

TEST(LoadScene, RejectsDimensionMismatchNamingFile) {
  const auto dir = scratch_dir("scene_dims");
  const auto paths = write_minimal_scene(dir);
  write_pgm(paths.image, gray(32, 32, 90));
  try {
    load_scene(paths);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("matte.pgm"), std::string::npos);
  }
}

TEST(LoadScene, RejectsMalformedPolyline) {
  const auto dir = scratch_dir("scene_poly");
  const auto paths = write_minimal_scene(dir);
  write_text(paths.contour, "10 20\n50 twenty\n");
  EXPECT_THROW(load_scene(paths), ParseError);
  write_text(paths.contour, "10 20 30\n");
  EXPECT_THROW(load_scene(paths), ParseError);
}

TEST(LoadScene, RejectsContourOutsideImage) {
  const auto dir = scratch_dir("scene_poly_oob");
  const auto paths = write_minimal_scene(dir);
  write_text(paths.contour, "10 20\n64 20\n");
  EXPECT_THROW(load_scene(paths), ValidationError);
  write_text(paths.contour, "10 20\n");
  EXPECT_THROW(load_scene(paths), ValidationError);
}

TEST(LoadScene, RejectsMaskOutsideMatte) {
  const auto dir = scratch_dir("scene_outside");
  const auto paths = write_minimal_scene(dir);
  auto labels = gray(64, 64, 0);
  for (int y = 45; y < 60; ++y)
    for (int x = 20; x < 26; ++x) labels(x, y) = 1;
  write_pgm(paths.masks, labels);
  EXPECT_THROW(load_scene(paths), ValidationError);
}

TEST(LoadScene, MissingFileIsIoError) {
  const auto dir = scratch_dir("scene_missing");
  auto paths = write_minimal_scene(dir);
  paths.depth = dir / "nope.png";
  try {
    load_scene(paths);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.png"), std::string::npos);
  }
}

TEST(LoadScene, AcceptsMaskDirectory) {
  const auto dir = scratch_dir("scene_maskdir");
  auto paths = write_minimal_scene(dir);
  std::filesystem::create_directories(dir / "masks");
  auto a = gray(64, 64, 0), b = gray(64, 64, 0);
  for (int y = 5; y < 30; ++y) {
    a(15, y) = 255;
    b(40, y) = 255;
  }
  write_pgm(dir / "masks" / "01.pgm", a);
  write_pgm(dir / "masks" / "02.pgm", b);
  paths.masks = dir / "masks";
  const StillScene s = load_scene(paths);
  ASSERT_EQ(s.wisp_masks.size(), 2u);
  EXPECT_TRUE(s.wisp_masks[0](15, 10));
  EXPECT_TRUE(s.wisp_masks[1](40, 10));
}

TEST(LoadScene, PngRoundTrip) {
  const auto dir = scratch_dir("scene_png");
  Image img(9, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 9; ++x)
      img(x, y) = {static_cast<std::uint8_t>(x * 20), static_cast<std::uint8_t>(y * 30), 7, 255};
  write_png(dir / "a.png", img);
  EXPECT_EQ(read_image(dir / "a.png"), img);
}
