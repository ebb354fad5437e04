#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hairwisp/geometry.hpp"

namespace hairwisp {

// Dense row-major 2D grid.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative raster size");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool contains(PixelCoord p) const noexcept { return contains(p.x, p.y); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](PixelCoord p) { return data_[index(p.x, p.y)]; }
  const T& operator[](PixelCoord p) const { return data_[index(p.x, p.y)]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(int w, int h) const noexcept { return width_ == w && height_ == h; }
  template <typename U>
  bool same_shape(const Raster<U>& o) const noexcept {
    return width_ == o.width() && height_ == o.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgba8 {
  std::uint8_t r = 0, g = 0, b = 0, a = 0;
  friend constexpr bool operator==(Rgba8, Rgba8) = default;
};

// Premultiplied color: rgb already scaled by alpha; rgb in [0,255], alpha in
// [0,1].
struct PremulRgba {
  double r = 0.0, g = 0.0, b = 0.0, a = 0.0;
  friend constexpr bool operator==(PremulRgba, PremulRgba) = default;
};

using Image = Raster<Rgba8>;
using ScalarMap = Raster<double>;
using Mask = Raster<std::uint8_t>;

// Inclusive pixel bounding box.
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  bool empty() const noexcept { return x1 < x0 || y1 < y0; }
  int width() const noexcept { return empty() ? 0 : x1 - x0 + 1; }
  int height() const noexcept { return empty() ? 0 : y1 - y0 + 1; }
};

inline std::size_t count_on(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.data()) n += v != 0;
  return n;
}

inline PixelBox bounding_box(const Mask& m) {
  PixelBox box{m.width(), m.height(), -1, -1};
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m(x, y)) {
        box.x0 = std::min(box.x0, x);
        box.y0 = std::min(box.y0, y);
        box.x1 = std::max(box.x1, x);
        box.y1 = std::max(box.y1, y);
      }
  if (box.x1 < 0) return PixelBox{};
  return box;
}

inline constexpr std::array<PixelCoord, 8> kNeighbors8 = {
    PixelCoord{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}};

// 8-connected component labels: 0 = off, 1..n in raster-scan order of each
// component's first pixel.
inline Raster<int> label_components(const Mask& m, int* count = nullptr) {
  Raster<int> labels(m.width(), m.height(), 0);
  int next = 0;
  std::deque<PixelCoord> queue;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y) || labels(x, y)) continue;
      ++next;
      labels(x, y) = next;
      queue.push_back({x, y});
      while (!queue.empty()) {
        const PixelCoord p = queue.front();
        queue.pop_front();
        for (auto d : kNeighbors8) {
          const PixelCoord q{p.x + d.x, p.y + d.y};
          if (m.contains(q) && m[q] && !labels[q]) {
            labels[q] = next;
            queue.push_back(q);
          }
        }
      }
    }
  if (count) *count = next;
  return labels;
}

// Largest 8-connected component; ties go to the component found first in
// raster order.
inline Mask largest_component(const Mask& m) {
  int count = 0;
  const Raster<int> labels = label_components(m, &count);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(count) + 1, 0);
  for (int v : labels.data()) ++sizes[static_cast<std::size_t>(v)];
  int best = 0;
  for (int i = 1; i <= count; ++i)
    if (best == 0 || sizes[static_cast<std::size_t>(i)] > sizes[static_cast<std::size_t>(best)]) best = i;
  Mask out(m.width(), m.height(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = labels.data()[i] == best && best != 0;
  return out;
}

// Outer boundary of the single component in `m` by Moore-neighbor tracing.
// Starts at the topmost (then leftmost) pixel and walks clockwise on screen,
// so the walk first heads right along the top. Pixels on one-pixel-wide
// necks appear once per visit.
inline std::vector<PixelCoord> trace_boundary(const Mask& m) {
  const PixelBox box = bounding_box(m);
  if (box.empty()) return {};
  PixelCoord start{-1, box.y0};
  for (int x = box.x0; x <= box.x1; ++x)
    if (m(x, box.y0)) { start.x = x; break; }

  auto on = [&](PixelCoord p) { return m.contains(p) && m[p] != 0; };
  auto dir_index = [](PixelCoord from, PixelCoord to) {
    for (int k = 0; k < 8; ++k)
      if (from.x + kNeighbors8[k].x == to.x && from.y + kNeighbors8[k].y == to.y) return k;
    return 0;
  };

  std::vector<PixelCoord> out{start};
  PixelCoord current = start;
  PixelCoord backtrack{start.x - 1, start.y};
  std::optional<PixelCoord> first_step;
  const std::size_t limit = 4 * m.size() + 8;
  while (out.size() < limit) {
    const int k0 = dir_index(current, backtrack);
    std::optional<PixelCoord> next;
    PixelCoord prev = backtrack;
    for (int i = 1; i <= 8; ++i) {
      const auto d = kNeighbors8[static_cast<std::size_t>((k0 + i) % 8)];
      const PixelCoord q{current.x + d.x, current.y + d.y};
      if (on(q)) { next = q; break; }
      prev = q;
    }
    if (!next) break;  // isolated pixel
    if (current == start && first_step && *next == *first_step) break;
    if (!first_step) first_step = *next;
    backtrack = prev;
    current = *next;
    out.push_back(current);
  }
  if (out.size() > 1 && out.back() == start) out.pop_back();
  return out;
}

// Pixels within Euclidean distance `radius` of any on-pixel.
inline Mask dilate(const Mask& m, int radius) {
  Mask out(m.width(), m.height(), 0);
  const int r2 = radius * radius;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          if (dx * dx + dy * dy <= r2 && out.contains(x + dx, y + dy)) out(x + dx, y + dy) = 1;
    }
  return out;
}

template <typename T>
Raster<T> transpose(const Raster<T>& in) {
  Raster<T> out(in.height(), in.width());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) out(y, x) = in(x, y);
  return out;
}

}  // namespace hairwisp
