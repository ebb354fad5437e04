#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "hairwisp/errors.hpp"
#include "hairwisp/raster.hpp"
#include "hairwisp/scene.hpp"
#include "hairwisp/warping.hpp"

namespace hairwisp {

enum class LayerKind { Background, Face, Wisp };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Background: return "background";
    case LayerKind::Face: return "face";
    case LayerKind::Wisp: return "wisp";
  }
  return "?";
}

// A renderable layer with its sort keys. height_key is the topmost row of
// the layer's support (smaller = higher in the frame).
struct SceneLayer {
  LayerKind kind = LayerKind::Wisp;
  int wisp_index = -1;
  Layer layer;
  double depth_key = 0.0;
  double height_key = 0.0;
};

struct ExtractedLayers {
  SceneLayer background;  // alpha 0 inside `hole`, 1 elsewhere
  Mask hole;
  SceneLayer face;
  std::vector<SceneLayer> wisps;
};

inline PixelRect to_rect(const PixelBox& b) { return {b.x0, b.y0, b.width(), b.height()}; }

inline PremulRgba premultiply(Rgba8 c, double alpha) {
  return {c.r * alpha, c.g * alpha, c.b * alpha, alpha};
}

namespace detail {

inline double mean_over(const ScalarMap& values, const Mask& m) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m.data()[i]) {
      sum += values.data()[i];
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// Image RGB over the bounding box of `support`, alpha from `alpha(x, y)`.
template <typename AlphaFn>
Layer cut_layer(const Image& image, const Mask& support, AlphaFn alpha) {
  const PixelRect r = to_rect(bounding_box(support));
  Layer out{r, Raster<PremulRgba>(r.width, r.height)};
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) {
      const int fx = r.x0 + x, fy = r.y0 + y;
      out.pixels(x, y) = premultiply(image(fx, fy), alpha(fx, fy));
    }
  return out;
}

}  // namespace detail

// Wisp k: alpha = matte * mask_k. Face: alpha = face mask. Background: the
// image with a hole wherever a wisp layer or the face has nonzero alpha.
// Hair outside every wisp mask stays in the background.
inline ExtractedLayers extract_layers(const StillScene& scene) {
  const int w = scene.width(), h = scene.height();
  ExtractedLayers out;
  out.hole = Mask(w, h, 0);

  for (std::size_t k = 0; k < scene.wisp_masks.size(); ++k) {
    const Mask& m = scene.wisp_masks[k];
    SceneLayer sl;
    sl.kind = LayerKind::Wisp;
    sl.wisp_index = static_cast<int>(k);
    sl.layer = detail::cut_layer(scene.image, m, [&](int x, int y) { return m(x, y) ? scene.hair_matte(x, y) : 0.0; });
    sl.depth_key = detail::mean_over(scene.depth, m);
    sl.height_key = bounding_box(m).y0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m.data()[i] && scene.hair_matte.data()[i] > 0.0) out.hole.data()[i] = 1;
    out.wisps.push_back(std::move(sl));
  }

  const Mask& f = scene.face_mask;
  out.face.kind = LayerKind::Face;
  out.face.layer = detail::cut_layer(scene.image, f, [&](int x, int y) { return f(x, y) ? 1.0 : 0.0; });
  out.face.depth_key = detail::mean_over(scene.depth, f);
  out.face.height_key = count_on(f) ? bounding_box(f).y0 : h;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f.data()[i]) out.hole.data()[i] = 1;

  out.background.kind = LayerKind::Background;
  out.background.depth_key = std::numeric_limits<double>::infinity();
  out.background.layer = Layer{{0, 0, w, h}, Raster<PremulRgba>(w, h)};
  for (std::size_t i = 0; i < out.hole.size(); ++i)
    out.background.layer.pixels.data()[i] = premultiply(scene.image.data()[i], out.hole.data()[i] ? 0.0 : 1.0);
  return out;
}

struct InpaintOptions {
  double tolerance = 0.5;  // intensity levels
  int max_iterations = 500;
};

struct InpaintStats {
  int iterations = 0;
  double last_change = 0.0;
};

// Diffusion fill. Each sweep sets every hole pixel to the mean of its 4-neighbours
// that are known or were filled by an earlier sweep. Stops once every hole pixel
// is filled and no value moved by `tolerance` or more, or after max_iterations.
// Returns an opaque full-frame layer.
inline Layer inpaint_background(const Layer& background, const Mask& hole, const InpaintOptions& opt = {},
                                InpaintStats* stats = nullptr) {
  const int w = background.region.width, h = background.region.height;
  if (!hole.same_shape(w, h)) throw DimensionError("inpaint: hole mask does not match the background");
  Layer out = background;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < hole.size(); ++i) {
    if (hole.data()[i]) {
      todo.push_back(i);
      out.pixels.data()[i] = {};
    } else {
      PremulRgba& p = out.pixels.data()[i];
      if (p.a > 0.0 && p.a != 1.0) p = {p.r / p.a, p.g / p.a, p.b / p.a, 1.0};
      p.a = 1.0;
    }
  }
  if (stats) *stats = {};
  if (todo.empty()) return out;
  if (todo.size() == hole.size()) throw InpaintError("inpaint: the hole covers the whole frame");

  // known: 1 for source pixels and filled hole pixels.
  std::vector<std::uint8_t> known(hole.size());
  for (std::size_t i = 0; i < hole.size(); ++i) known[i] = !hole.data()[i];
  std::vector<PremulRgba> next(todo.size());
  std::vector<std::uint8_t> next_known(todo.size());

  for (int it = 1; it <= opt.max_iterations; ++it) {
    double change = 0.0;
    bool complete = true;
    for (std::size_t t = 0; t < todo.size(); ++t) {
      const std::size_t i = todo[t];
      const int x = static_cast<int>(i % static_cast<std::size_t>(w)), y = static_cast<int>(i / static_cast<std::size_t>(w));
      PremulRgba sum{};
      int n = 0;
      auto take = [&](int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
        const std::size_t j = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nx);
        if (!known[j]) return;
        const PremulRgba& p = out.pixels.data()[j];
        sum.r += p.r;
        sum.g += p.g;
        sum.b += p.b;
        ++n;
      };
      take(x - 1, y);
      take(x + 1, y);
      take(x, y - 1);
      take(x, y + 1);
      if (n == 0) {
        next[t] = {};
        next_known[t] = 0;
        complete = false;
        continue;
      }
      next[t] = {sum.r / n, sum.g / n, sum.b / n, 1.0};
      next_known[t] = 1;
      if (!known[i]) {
        change = std::numeric_limits<double>::infinity();
      } else {
        const PremulRgba& old = out.pixels.data()[i];
        change = std::max({change, std::abs(next[t].r - old.r), std::abs(next[t].g - old.g), std::abs(next[t].b - old.b)});
      }
    }
    for (std::size_t t = 0; t < todo.size(); ++t) {
      out.pixels.data()[todo[t]] = next[t];
      known[todo[t]] = next_known[t];
    }
    if (stats) *stats = {it, change};
    if (complete && change < opt.tolerance) break;
  }
  for (std::size_t i : todo) out.pixels.data()[i].a = 1.0;
  return out;
}

inline constexpr double kDepthTie = 0.02;

struct PlanEntry {
  LayerKind kind = LayerKind::Wisp;
  int wisp_index = -1;
  friend bool operator==(const PlanEntry&, const PlanEntry&) = default;
};

// Back-to-front order: Background, then face and wisps.
struct FramePlan {
  std::vector<PlanEntry> order;
};

// Sorted by depth descending. Runs of layers whose consecutive depth gaps are
// under kDepthTie form one tie group, ordered by height key descending and
// then index (the face counts as index -1).
inline FramePlan sort_layers(const SceneLayer& face, std::span<const SceneLayer> wisps) {
  std::vector<const SceneLayer*> items{&face};
  for (const SceneLayer& w : wisps) items.push_back(&w);
  auto index = [](const SceneLayer* l) { return l->kind == LayerKind::Face ? -1 : l->wisp_index; };
  std::stable_sort(items.begin(), items.end(), [&](const SceneLayer* a, const SceneLayer* b) {
    if (a->depth_key != b->depth_key) return a->depth_key > b->depth_key;
    return index(a) < index(b);
  });
  auto tie_order = [&](const SceneLayer* a, const SceneLayer* b) {
    if (a->height_key != b->height_key) return a->height_key > b->height_key;
    return index(a) < index(b);
  };
  for (std::size_t begin = 0; begin < items.size();) {
    std::size_t end = begin + 1;
    while (end < items.size() && items[end - 1]->depth_key - items[end]->depth_key < kDepthTie) ++end;
    std::sort(items.begin() + static_cast<std::ptrdiff_t>(begin), items.begin() + static_cast<std::ptrdiff_t>(end),
              tie_order);
    begin = end;
  }
  FramePlan plan;
  plan.order.push_back({LayerKind::Background, -1});
  for (const SceneLayer* l : items) plan.order.push_back({l->kind, l->kind == LayerKind::Face ? -1 : l->wisp_index});
  return plan;
}

inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

// Premultiplied over: acc = fg + acc * (1 - fg.a).
inline void blend_over(Raster<PremulRgba>& acc, const Layer& fg) {
  const PixelRect r = intersect(fg.region, {0, 0, acc.width(), acc.height()});
  for (int y = r.y0; y < r.y0 + r.height; ++y)
    for (int x = r.x0; x < r.x0 + r.width; ++x) {
      const PremulRgba& s = fg.pixels(x - fg.region.x0, y - fg.region.y0);
      if (s.a <= 0.0) continue;
      PremulRgba& d = acc(x, y);
      const double k = 1.0 - s.a;
      d = {s.r + d.r * k, s.g + d.g * k, s.b + d.b * k, s.a + d.a * k};
    }
}

// Paints the plan back to front and quantizes once. The background must be
// opaque, so the accumulated premultiplied colour is the output colour.
inline Image composite_frame(const FramePlan& plan, const Layer& background, const Layer& face,
                             std::span<const Layer> wisps) {
  const int w = background.region.width, h = background.region.height;
  Raster<PremulRgba> acc(w, h);
  for (const PlanEntry& e : plan.order) {
    switch (e.kind) {
      case LayerKind::Background: blend_over(acc, background); break;
      case LayerKind::Face: blend_over(acc, face); break;
      case LayerKind::Wisp: blend_over(acc, wisps[static_cast<std::size_t>(e.wisp_index)]); break;
    }
  }
  Image out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const PremulRgba& p = acc.data()[i];
    out.data()[i] = {quantize(p.r), quantize(p.g), quantize(p.b), quantize(p.a * 255.0)};
  }
  return out;
}

}  // namespace hairwisp
