#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hairwisp/errors.hpp"
#include "hairwisp/image_io.hpp"
#include "hairwisp/raster.hpp"

namespace hairwisp {

// Everything the still portrait contributes to the pipeline. Depth convention:
// smaller value = nearer to the camera.
struct StillScene {
  Image image;
  ScalarMap hair_matte;          // [0,1]
  std::vector<Mask> wisp_masks;  // binary, one per wisp instance
  Polyline forehead_contour;     // open polyline, pixel coordinates
  ScalarMap depth;               // [0,1]
  Mask face_mask;

  int width() const { return image.width(); }
  int height() const { return image.height(); }

  friend bool operator==(const StillScene&, const StillScene&) = default;
};

struct SceneValidation {
  double matte_inside_fraction = 0.95;
  std::size_t min_mask_pixels = 16;
};

inline void validate_scene(const StillScene& s, const SceneValidation& rules = {}) {
  const int w = s.width(), h = s.height();
  if (w < 8 || h < 8)
    throw DimensionError("image is " + std::to_string(w) + "x" + std::to_string(h) +
                         ", minimum is 8x8");
  auto check_dims = [&](const auto& r, const std::string& what) {
    if (!r.same_shape(w, h))
      throw DimensionError(what + " is " + std::to_string(r.width()) + "x" +
                           std::to_string(r.height()) + " but image is " +
                           std::to_string(w) + "x" + std::to_string(h));
  };
  check_dims(s.hair_matte, "hair matte");
  check_dims(s.depth, "depth map");
  check_dims(s.face_mask, "face mask");
  for (std::size_t i = 0; i < s.wisp_masks.size(); ++i)
    check_dims(s.wisp_masks[i], "wisp mask " + std::to_string(i));

  for (double v : s.hair_matte.data())
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("hair matte value outside [0,1]");
  for (double v : s.depth.data())
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("depth value outside [0,1]");

  for (std::size_t i = 0; i < s.wisp_masks.size(); ++i) {
    const Mask& m = s.wisp_masks[i];
    std::size_t on = 0, inside = 0;
    for (std::size_t p = 0; p < m.size(); ++p) {
      if (!m.data()[p]) continue;
      ++on;
      inside += s.hair_matte.data()[p] > 0.0;
    }
    if (on < rules.min_mask_pixels)
      throw ValidationError("wisp mask " + std::to_string(i) + " has " + std::to_string(on) +
                            " pixels, minimum is " + std::to_string(rules.min_mask_pixels));
    if (static_cast<double>(inside) < rules.matte_inside_fraction * static_cast<double>(on))
      throw ValidationError("wisp mask " + std::to_string(i) +
                            " lies outside the hair matte support");
  }

  if (s.forehead_contour.size() < 2)
    throw ValidationError("forehead contour needs at least 2 points");
  for (const Vec2& p : s.forehead_contour)
    if (!(p.x >= 0.0 && p.y >= 0.0 && p.x < w && p.y < h))
      throw ValidationError("forehead contour point outside the image");
}

// One "x y" pair per line; '#' comments and blank lines are ignored.
inline Polyline parse_polyline(const std::string& text, const std::string& name = "polyline") {
  Polyline out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    double x = 0.0, y = 0.0;
    std::string extra;
    if (!(fields >> x >> y) || (fields >> extra) || !std::isfinite(x) || !std::isfinite(y))
      throw ParseError(name + " line " + std::to_string(line_no) + ": expected 'x y'");
    out.push_back({x, y});
  }
  return out;
}

inline Polyline read_polyline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_polyline(buf.str(), "'" + path.string() + "'");
}

inline ScalarMap to_unit_scalar(const Image& img) {
  ScalarMap out(img.width(), img.height());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = img.data()[i].r / 255.0;
  return out;
}

inline Mask to_binary(const Image& img) {
  Mask out(img.width(), img.height());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = img.data()[i].r != 0;
  return out;
}

// Splits an indexed label raster (0 = background) into one binary mask per
// distinct label, in ascending label order.
inline std::vector<Mask> split_labels(const Raster<std::uint8_t>& labels) {
  std::vector<bool> present(256, false);
  for (auto v : labels.data()) present[v] = true;
  std::vector<Mask> out;
  for (int label = 1; label < 256; ++label) {
    if (!present[static_cast<std::size_t>(label)]) continue;
    Mask m(labels.width(), labels.height(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = labels.data()[i] == label;
    out.push_back(std::move(m));
  }
  return out;
}

// Wisp masks from either an indexed label raster or a directory of binary
// rasters (taken in lexicographic filename order).
inline std::vector<Mask> read_wisp_masks(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw IoError("masks path '" + path.string() + "' does not exist");
  if (!fs::is_directory(path)) return split_labels(red_channel(read_image(path)));
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Mask> out;
  for (const auto& f : files) {
    const Image img = read_image(f);
    if (!out.empty() && !out.front().same_shape(img))
      throw DimensionError("mask '" + f.string() + "' differs in size from the other masks");
    out.push_back(to_binary(img));
  }
  return out;
}

struct ScenePaths {
  std::filesystem::path image, matte, masks, contour, depth, face;
};

inline StillScene load_scene(const ScenePaths& paths, const SceneValidation& rules = {}) {
  auto require_exists = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p))
      throw IoError(std::string(what) + " file '" + p.string() + "' does not exist");
  };
  require_exists(paths.image, "image");
  require_exists(paths.matte, "matte");
  require_exists(paths.masks, "masks");
  require_exists(paths.contour, "contour");
  require_exists(paths.depth, "depth");
  require_exists(paths.face, "face");

  StillScene s;
  s.image = read_image(paths.image);
  auto same_as_image = [&](const Image& img, const std::filesystem::path& p) {
    if (!img.same_shape(s.image))
      throw DimensionError("'" + p.string() + "' is " + std::to_string(img.width()) + "x" +
                           std::to_string(img.height()) + " but the image is " +
                           std::to_string(s.width()) + "x" + std::to_string(s.height()));
    return img;
  };
  s.hair_matte = to_unit_scalar(same_as_image(read_image(paths.matte), paths.matte));
  s.depth = to_unit_scalar(same_as_image(read_image(paths.depth), paths.depth));
  s.face_mask = to_binary(same_as_image(read_image(paths.face), paths.face));
  s.wisp_masks = read_wisp_masks(paths.masks);
  for (const Mask& m : s.wisp_masks)
    if (!m.same_shape(s.image))
      throw DimensionError("'" + paths.masks.string() + "' is " + std::to_string(m.width()) +
                           "x" + std::to_string(m.height()) + " but the image is " +
                           std::to_string(s.width()) + "x" + std::to_string(s.height()));
  s.forehead_contour = read_polyline(paths.contour);
  validate_scene(s, rules);
  return s;
}

}  // namespace hairwisp
