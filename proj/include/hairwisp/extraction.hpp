#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <span>
#include <vector>

#include "hairwisp/errors.hpp"
#include "hairwisp/raster.hpp"

namespace hairwisp {

// ---------------------------------------------------------------------------
// Sketch-filled annotation
// ---------------------------------------------------------------------------

// Grows one region per stroke, in input order. Pass one reserves every
// rasterized stroke pixel that lies on the matte support for its stroke
// (first claim wins). Pass two floods each stroke's reserved pixels
// breadth-first using only the up, down and right neighbors, never entering
// pixels already claimed. Returns labels 1..n (0 = unclaimed).
inline Raster<int> sketch_fill_all(std::span<const Polyline> strokes, const ScalarMap& matte) {
  Raster<int> labels(matte.width(), matte.height(), 0);
  std::vector<std::vector<PixelCoord>> seeds(strokes.size());

  for (std::size_t s = 0; s < strokes.size(); ++s) {
    const Polyline& stroke = strokes[s];
    const std::string tag = "stroke " + std::to_string(s);
    if (stroke.size() < 2) throw ExtractionError(tag + " needs at least 2 points");
    for (const Vec2& p : stroke)
      if (!(p.x >= 0 && p.y >= 0 && p.x < matte.width() && p.y < matte.height()))
        throw ExtractionError(tag + " has a point outside the image");
    bool any_support = false;
    for (PixelCoord p : rasterize_polyline(stroke)) {
      if (!matte.contains(p) || !(matte[p] > 0.0)) continue;
      any_support = true;
      if (labels[p] == 0) {
        labels[p] = static_cast<int>(s) + 1;
        seeds[s].push_back(p);
      }
    }
    if (!any_support) throw ExtractionError(tag + " lies entirely outside the matte support");
    if (seeds[s].empty()) throw ExtractionError(tag + " is fully covered by earlier strokes");
  }

  static constexpr PixelCoord kFillNeighbors[3] = {{0, -1}, {0, 1}, {1, 0}};
  for (std::size_t s = 0; s < strokes.size(); ++s) {
    const int id = static_cast<int>(s) + 1;
    std::deque<PixelCoord> queue(seeds[s].begin(), seeds[s].end());
    while (!queue.empty()) {
      const PixelCoord p = queue.front();
      queue.pop_front();
      for (PixelCoord d : kFillNeighbors) {
        const PixelCoord q{p.x + d.x, p.y + d.y};
        if (!labels.contains(q) || labels[q] != 0 || !(matte[q] > 0.0)) continue;
        labels[q] = id;
        queue.push_back(q);
      }
    }
  }
  return labels;
}

inline Mask sketch_fill(const Polyline& stroke, const ScalarMap& matte) {
  const Raster<int> labels = sketch_fill_all(std::span<const Polyline>(&stroke, 1), matte);
  Mask out(labels.width(), labels.height(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = labels.data()[i] == 1;
  return out;
}

// ---------------------------------------------------------------------------
// Contour split and smoothing
// ---------------------------------------------------------------------------

// Outer boundary split at the topmost pixel s0 and the bottommost pixel se
// (ties: smallest x). Both walks run from s0 to se.
struct ContourPair {
  std::vector<PixelCoord> left;
  std::vector<PixelCoord> right;
  PixelCoord top() const { return left.front(); }
  PixelCoord bottom() const { return left.back(); }
};

inline ContourPair split_contour(const Mask& mask) {
  int components = 0;
  label_components(mask, &components);
  if (components == 0) throw ExtractionError("split_contour: empty mask");
  if (components > 1)
    throw ExtractionError("split_contour: mask has " + std::to_string(components) +
                          " components, expected one");

  const std::vector<PixelCoord> trace = trace_boundary(mask);
  const PixelCoord s0 = trace.front();
  PixelCoord se = s0;
  for (PixelCoord p : trace)
    if (p.y > se.y || (p.y == se.y && p.x < se.x)) se = p;

  const std::size_t n = trace.size();
  std::vector<PixelCoord> forward, backward;
  std::size_t first_se = 0;
  while (!(trace[first_se] == se)) ++first_se;
  forward.assign(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(first_se) + 1);

  backward.push_back(s0);
  if (n > 1) {
    std::size_t last_se = n - 1;
    while (!(trace[last_se] == se)) --last_se;
    if (last_se == 0) {
      backward.push_back(se);
    } else {
      for (std::size_t i = n - 1; i >= last_se && i > 0; --i) backward.push_back(trace[i]);
    }
  }
  if (n == 1) backward = forward;

  auto mean_x = [](const std::vector<PixelCoord>& w) {
    double sum = 0.0;
    for (PixelCoord p : w) sum += p.x;
    return sum / static_cast<double>(w.size());
  };
  ContourPair pair;
  if (mean_x(backward) <= mean_x(forward)) {
    pair.left = std::move(backward);
    pair.right = std::move(forward);
  } else {
    pair.left = std::move(forward);
    pair.right = std::move(backward);
  }
  return pair;
}

enum class Side { Left, Right };

// One sample per row between the walk's first and last row: the outermost
// pixel of that row on the given side, as (x, y) pixel indices.
inline std::vector<Vec2> row_samples(std::span<const PixelCoord> walk, Side side) {
  std::map<int, int> extreme;
  for (PixelCoord p : walk) {
    auto [it, inserted] = extreme.try_emplace(p.y, p.x);
    if (!inserted)
      it->second = side == Side::Left ? std::min(it->second, p.x) : std::max(it->second, p.x);
  }
  std::vector<Vec2> out;
  out.reserve(extreme.size());
  for (auto [y, x] : extreme) out.push_back({static_cast<double>(x), static_cast<double>(y)});
  return out;
}

// x = g(y), stored in the centered and scaled variable t = (y - center)/scale
// for conditioning.
struct ContourPolynomial {
  double center = 0.0;
  double scale = 1.0;
  std::vector<double> coefficients;  // in powers of t

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }

  double operator()(double y) const {
    const double t = (y - center) / scale;
    double v = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * t + *it;
    return v;
  }

  // Coefficients of 1, y, y^2, ... in the original variable.
  std::vector<double> monomial_coefficients() const {
    const std::size_t n = coefficients.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double ak = coefficients[k] / std::pow(scale, static_cast<double>(k));
      double binom = 1.0;
      for (std::size_t j = 0; j <= k; ++j) {
        out[j] += ak * binom * std::pow(-center, static_cast<double>(k - j));
        binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
      }
    }
    return out;
  }
};

// Least-squares polynomial x = g(y) of degree `degree` over (x, y) samples.
// With fewer distinct rows than degree+1 the degree drops to fit.
inline ContourPolynomial smooth_contour(std::span<const Vec2> samples, int degree) {
  if (samples.empty()) throw ExtractionError("smooth_contour: no samples");
  std::vector<double> ys;
  for (const Vec2& s : samples) ys.push_back(s.y);
  std::sort(ys.begin(), ys.end());
  const auto distinct = std::unique(ys.begin(), ys.end()) - ys.begin();
  if (distinct < 2) throw ExtractionError("smooth_contour: all samples share one row");
  degree = std::min<int>(degree, static_cast<int>(distinct) - 1);
  degree = std::min<int>(degree, static_cast<int>(samples.size()) - 1);

  ContourPolynomial poly;
  double sum = 0.0;
  for (const Vec2& s : samples) sum += s.y;
  poly.center = sum / static_cast<double>(samples.size());
  double spread = 0.0;
  for (const Vec2& s : samples) spread = std::max(spread, std::abs(s.y - poly.center));
  poly.scale = spread > 0.0 ? spread : 1.0;

  const auto rows = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd vander(rows, degree + 1);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double t = (samples[static_cast<std::size_t>(i)].y - poly.center) / poly.scale;
    double p = 1.0;
    for (int k = 0; k <= degree; ++k, p *= t) vander(i, k) = p;
    rhs(i) = samples[static_cast<std::size_t>(i)].x;
  }
  const Eigen::VectorXd c = vander.colPivHouseholderQr().solve(rhs);
  poly.coefficients.assign(c.data(), c.data() + c.size());
  return poly;
}

// ---------------------------------------------------------------------------
// Tip sharpening and refinement
// ---------------------------------------------------------------------------

namespace detail {

// Pixels whose centers fall in [lo, hi) on row y, clipped to the raster.
inline void fill_span(Mask& out, int y, double lo, double hi) {
  if (y < 0 || y >= out.height() || !(hi > lo)) return;
  constexpr double kEps = 1e-9;
  const int x0 = std::max(0, static_cast<int>(std::ceil(lo - 0.5 - kEps)));
  const int x1 = std::min(out.width() - 1, static_cast<int>(std::ceil(hi - 0.5 - kEps)) - 1);
  for (int x = x0; x <= x1; ++x) out(x, y) = 1;
}

}  // namespace detail

// Mask bounded by the two curves on rows [top, bottom]: on row y, pixel
// indices from left(y) through right(y).
inline Mask rasterize_contours(const ContourPolynomial& left, const ContourPolynomial& right,
                               int top, int bottom, int width, int height) {
  Mask out(width, height, 0);
  for (int y = top; y <= bottom; ++y) detail::fill_span(out, y, left(y), right(y) + 1.0);
  return out;
}

namespace detail {

inline int tip_row_count(int rows, double tip_fraction) {
  return static_cast<int>(std::llround(tip_fraction * rows));
}

}  // namespace detail

// Linearly narrows the bottom `tip_fraction` of the wisp. Tip row j of n
// (j = 1 is the first row below the tip region's top, j = n the bottommost
// row) keeps f = 1 - (1 - tip_min_width_ratio) * j / n of its smoothed width,
// shrunk about the row's midline. Rows above the tip use the smoothed curves
// unchanged.
inline Mask sharpen_tip(const Mask& mask, const ContourPolynomial& left,
                        const ContourPolynomial& right, double tip_fraction,
                        double tip_min_width_ratio) {
  const PixelBox box = bounding_box(mask);
  Mask out(mask.width(), mask.height(), 0);
  if (box.empty()) return out;
  const int top = box.y0, bottom = box.y1;
  const int tip_rows = detail::tip_row_count(bottom - top + 1, tip_fraction);
  const int tip_top = bottom - tip_rows;  // last row with factor 1

  for (int y = top; y <= bottom; ++y) {
    double lo = left(y), hi = right(y) + 1.0;
    if (y > tip_top) {
      const double factor = 1.0 - (1.0 - tip_min_width_ratio) * (y - tip_top) / tip_rows;
      const double mid = 0.5 * (lo + hi);
      const double half = 0.5 * factor * std::max(0.0, hi - lo);
      lo = mid - half;
      hi = mid + half;
    }
    detail::fill_span(out, y, lo, hi);
  }
  return out;
}

struct RefineParams {
  int poly_degree = 3;
  double tip_fraction = 0.15;
  double tip_min_width_ratio = 0.2;
};

// Full shape refinement: largest component, left/right split, polynomial
// smoothing of both sides, tip sharpening. Wisps much wider than tall are
// processed transposed so the fit parameter runs along the wisp.
inline Mask refine_wisp(const Mask& mask, const RefineParams& params = {}) {
  const Mask component = largest_component(mask);
  const PixelBox box = bounding_box(component);
  if (box.empty()) throw ExtractionError("refine_wisp: empty mask");
  if (box.width() > 2 * box.height()) return transpose(refine_wisp(transpose(component), params));

  // The curves are fitted on the rows above the tip region only; the tip is
  // redrawn from their continuation, so a second pass sees the same data.
  const ContourPair pair = split_contour(component);
  auto left_samples = row_samples(pair.left, Side::Left);
  auto right_samples = row_samples(pair.right, Side::Right);
  if (left_samples.size() < 2) return component;  // single row: nothing to fit
  const int tip_top = box.y1 - detail::tip_row_count(box.height(), params.tip_fraction);
  auto above_tip = [&](std::vector<Vec2>& samples) {
    std::vector<Vec2> kept;
    for (const Vec2& s : samples)
      if (s.y <= tip_top) kept.push_back(s);
    if (kept.size() >= 2) samples = std::move(kept);
  };
  above_tip(left_samples);
  above_tip(right_samples);
  const ContourPolynomial left = smooth_contour(left_samples, params.poly_degree);
  const ContourPolynomial right = smooth_contour(right_samples, params.poly_degree);
  return sharpen_tip(component, left, right, params.tip_fraction, params.tip_min_width_ratio);
}

}  // namespace hairwisp
