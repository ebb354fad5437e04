#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "hairwisp/errors.hpp"
#include "hairwisp/geometry.hpp"
#include "hairwisp/raster.hpp"

namespace hairwisp {

// Thin plate spline R^2 -> R^2 with kernel U(r) = r^2 log r^2, U(0) = 0.
// Stored in a normalized frame x' = (x - center) / scale; accessors return
// the coefficients in pixel units.
class TpsModel {
 public:
  TpsModel() = default;
  TpsModel(std::vector<Vec2> controls, Vec2 center, double scale, Eigen::MatrixX2d radial,
           Eigen::Matrix<double, 3, 2> affine, double lambda, bool degenerate)
      : controls_(std::move(controls)),
        center_(center),
        scale_(scale),
        radial_(std::move(radial)),
        affine_(affine),
        lambda_(lambda),
        degenerate_(degenerate) {
    normalized_.reserve(controls_.size());
    for (const Vec2& c : controls_) normalized_.push_back((c - center_) / scale_);
  }

  static double kernel(double r2) { return r2 > 0.0 ? r2 * std::log(r2) : 0.0; }

  Vec2 operator()(Vec2 p) const {
    const Vec2 q = (p - center_) / scale_;
    double x = affine_(0, 0) + affine_(1, 0) * q.x + affine_(2, 0) * q.y;
    double y = affine_(0, 1) + affine_(1, 1) * q.x + affine_(2, 1) * q.y;
    for (std::size_t i = 0; i < normalized_.size(); ++i) {
      const double dx = q.x - normalized_[i].x, dy = q.y - normalized_[i].y;
      const double u = kernel(dx * dx + dy * dy);
      x += radial_(static_cast<Eigen::Index>(i), 0) * u;
      y += radial_(static_cast<Eigen::Index>(i), 1) * u;
    }
    return {x, y};
  }

  const std::vector<Vec2>& controls() const { return controls_; }
  double lambda() const { return lambda_; }
  bool degenerate() const { return degenerate_; }

  // Radial weights for kernels evaluated in pixel units.
  std::vector<Vec2> radial_weights() const {
    std::vector<Vec2> w;
    const double s2 = scale_ * scale_;
    for (Eigen::Index i = 0; i < radial_.rows(); ++i) w.push_back(Vec2{radial_(i, 0), radial_(i, 1)} / s2);
    return w;
  }

  // Affine part in pixel units: f(x) = offset + linear * x + sum w_i U(|x - c_i|).
  struct Affine {
    Vec2 offset;
    std::array<std::array<double, 2>, 2> linear{};  // linear[out][in]
  };
  Affine affine() const {
    Affine a;
    const double s2 = scale_ * scale_;
    const double log_s2 = std::log(s2);
    for (int o = 0; o < 2; ++o) {
      a.linear[o][0] = affine_(1, o) / scale_;
      a.linear[o][1] = affine_(2, o) / scale_;
      double constant = 0.0;
      for (std::size_t i = 0; i < controls_.size(); ++i)
        constant += radial_(static_cast<Eigen::Index>(i), o) * dot(controls_[i], controls_[i]);
      const double off = affine_(0, o) - a.linear[o][0] * center_.x - a.linear[o][1] * center_.y -
                         log_s2 / s2 * constant;
      (o == 0 ? a.offset.x : a.offset.y) = off;
    }
    return a;
  }

  // Raw access for bulk evaluation.
  const std::vector<Vec2>& normalized_controls() const { return normalized_; }
  const Eigen::MatrixX2d& normalized_radial() const { return radial_; }
  const Eigen::Matrix<double, 3, 2>& normalized_affine() const { return affine_; }
  Vec2 center() const { return center_; }
  double scale() const { return scale_; }

 private:
  std::vector<Vec2> controls_, normalized_;
  Vec2 center_;
  double scale_ = 1.0;
  Eigen::MatrixX2d radial_;
  Eigen::Matrix<double, 3, 2> affine_ = Eigen::Matrix<double, 3, 2>::Zero();
  double lambda_ = 0.0;
  bool degenerate_ = false;
};

inline constexpr double kTpsFallbackLambda = 1e-6;

namespace detail {

inline std::optional<Eigen::MatrixXd> solve_tps(const std::vector<Vec2>& q, std::span<const Vec2> target,
                                                double lambda) {
  const auto n = static_cast<Eigen::Index>(q.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n + 3, n + 3);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 a = q[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      const Vec2 d = a - q[static_cast<std::size_t>(j)];
      L(i, j) = TpsModel::kernel(dot(d, d));
    }
    L(i, i) += lambda;
    L(i, n) = L(n, i) = 1.0;
    L(i, n + 1) = L(n + 1, i) = a.x;
    L(i, n + 2) = L(n + 2, i) = a.y;
    rhs(i, 0) = target[static_cast<std::size_t>(i)].x;
    rhs(i, 1) = target[static_cast<std::size_t>(i)].y;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
  lu.setThreshold(1e-12);
  if (lu.rank() < n + 3) return std::nullopt;
  Eigen::MatrixXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return std::nullopt;
  return sol;
}

}  // namespace detail

// Fits f with f(source_i) = target_i (exactly when lambda = 0). A singular
// system is retried once with lambda = 1e-6 and the model is flagged
// degenerate; if that also fails a WarpError is thrown.
inline TpsModel tps_fit(std::span<const Vec2> source, std::span<const Vec2> target, double lambda = 0.0) {
  if (source.size() != target.size()) throw WarpError("tps_fit: source and target sizes differ");
  if (source.size() < 3) throw WarpError("tps_fit: need at least 3 control points");
  if (lambda < 0.0) throw WarpError("tps_fit: lambda must be >= 0");

  Vec2 lo = source[0], hi = source[0], center;
  for (const Vec2& p : source) {
    if (!is_finite(p)) throw WarpError("tps_fit: non-finite control point");
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    center += p;
  }
  center = center / static_cast<double>(source.size());
  const double scale = std::max({hi.x - lo.x, hi.y - lo.y, 1e-12});
  std::vector<Vec2> q;
  q.reserve(source.size());
  for (const Vec2& p : source) q.push_back((p - center) / scale);

  bool degenerate = false;
  auto sol = detail::solve_tps(q, target, lambda);
  if (!sol && lambda == 0.0) {
    lambda = kTpsFallbackLambda;
    degenerate = true;
    sol = detail::solve_tps(q, target, lambda);
  }
  if (!sol) throw WarpError("tps_fit: singular system (collinear or duplicate control points)");

  const auto n = static_cast<Eigen::Index>(source.size());
  return TpsModel({source.begin(), source.end()}, center, scale, sol->topRows(n),
                  sol->bottomRows(3), lambda, degenerate);
}

// Axis-aligned pixel rectangle.
struct PixelRect {
  int x0 = 0, y0 = 0, width = 0, height = 0;
  bool empty() const { return width <= 0 || height <= 0; }
  bool contains(int x, int y) const { return x >= x0 && y >= y0 && x < x0 + width && y < y0 + height; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

inline PixelRect intersect(const PixelRect& a, const PixelRect& b) {
  const int x0 = std::max(a.x0, b.x0), y0 = std::max(a.y0, b.y0);
  const int x1 = std::min(a.x0 + a.width, b.x0 + b.width), y1 = std::min(a.y0 + a.height, b.y0 + b.height);
  return {x0, y0, std::max(0, x1 - x0), std::max(0, y1 - y0)};
}

// Per-pixel displacement (mapped - original) at pixel centers of `region`.
struct WarpField {
  PixelRect region;
  std::vector<Vec2> displacement;  // row-major over region

  Vec2 at(int x, int y) const {
    return displacement[static_cast<std::size_t>(y - region.y0) * static_cast<std::size_t>(region.width) +
                        static_cast<std::size_t>(x - region.x0)];
  }
};

inline WarpField densify(const TpsModel& model, const PixelRect& region) {
  WarpField field{region, {}};
  if (region.empty()) return field;
  const auto w = static_cast<Eigen::Index>(region.width);
  field.displacement.resize(static_cast<std::size_t>(region.width) * static_cast<std::size_t>(region.height));

  const auto& ctrl = model.normalized_controls();
  const auto& radial = model.normalized_radial();
  const auto& A = model.normalized_affine();
  const double inv = 1.0 / model.scale();
  const Vec2 c = model.center();

  Eigen::ArrayXd qx(w), r2(w), u(w), fx(w), fy(w);
  for (Eigen::Index i = 0; i < w; ++i) qx(i) = ((region.x0 + static_cast<double>(i) + 0.5) - c.x) * inv;
  for (int row = 0; row < region.height; ++row) {
    const double qy = ((region.y0 + row + 0.5) - c.y) * inv;
    fx = A(0, 0) + A(1, 0) * qx + A(2, 0) * qy;
    fy = A(0, 1) + A(1, 1) * qx + A(2, 1) * qy;
    for (std::size_t k = 0; k < ctrl.size(); ++k) {
      const double dy = qy - ctrl[k].y;
      r2 = (qx - ctrl[k].x).square() + dy * dy;
      u = (r2 > 0.0).select(r2 * r2.max(1e-300).log(), 0.0);
      fx += radial(static_cast<Eigen::Index>(k), 0) * u;
      fy += radial(static_cast<Eigen::Index>(k), 1) * u;
    }
    Vec2* out = field.displacement.data() + static_cast<std::size_t>(row) * static_cast<std::size_t>(region.width);
    for (Eigen::Index i = 0; i < w; ++i)
      out[i] = Vec2{fx(i) - (region.x0 + static_cast<double>(i) + 0.5), fy(i) - (region.y0 + row + 0.5)};
  }
  return field;
}

// Premultiplied RGBA layer placed at `region` in frame coordinates.
struct Layer {
  PixelRect region;
  Raster<PremulRgba> pixels;

  PremulRgba at(int x, int y) const {
    if (!region.contains(x, y)) return {};
    return pixels(x - region.x0, y - region.y0);
  }
};

// Bilinear sample at continuous frame position p; outside the layer counts
// as transparent.
inline PremulRgba sample_bilinear(const Layer& layer, Vec2 p) {
  const double u = p.x - 0.5, v = p.y - 0.5;
  const double fx = std::floor(u), fy = std::floor(v);
  const int x = static_cast<int>(fx), y = static_cast<int>(fy);
  const double tx = u - fx, ty = v - fy;
  PremulRgba out{};
  auto add = [&](int px, int py, double w) {
    if (w == 0.0 || !layer.region.contains(px, py)) return;
    const PremulRgba& s = layer.pixels(px - layer.region.x0, py - layer.region.y0);
    out.r += w * s.r;
    out.g += w * s.g;
    out.b += w * s.b;
    out.a += w * s.a;
  };
  add(x, y, (1.0 - tx) * (1.0 - ty));
  add(x + 1, y, tx * (1.0 - ty));
  add(x, y + 1, (1.0 - tx) * ty);
  add(x + 1, y + 1, tx * ty);
  return out;
}

inline constexpr int kWarpMargin = 2;

// Backward warp of `layer` driven by mesh vertices moving from `rest` to
// `now`. The output covers the layer region grown by the largest vertex
// displacement plus a margin, clipped to `clip`.
inline Layer warp_layer(const Layer& layer, std::span<const Vec2> rest, std::span<const Vec2> now,
                        const PixelRect& clip, double lambda = 0.0) {
  if (rest.size() != now.size()) throw WarpError("warp_layer: vertex lists differ in size");
  if (std::equal(rest.begin(), rest.end(), now.begin())) return layer;

  double max_disp = 0.0;
  for (std::size_t i = 0; i < rest.size(); ++i) max_disp = std::max(max_disp, distance(rest[i], now[i]));
  const int grow = static_cast<int>(std::ceil(max_disp)) + kWarpMargin;
  const PixelRect region = intersect(
      {layer.region.x0 - grow, layer.region.y0 - grow, layer.region.width + 2 * grow, layer.region.height + 2 * grow},
      clip);

  const TpsModel inverse = tps_fit(now, rest, lambda);
  const WarpField field = densify(inverse, region);
  Layer out{region, Raster<PremulRgba>(std::max(region.width, 0), std::max(region.height, 0))};
  for (int y = 0; y < region.height; ++y)
    for (int x = 0; x < region.width; ++x) {
      const Vec2 center{region.x0 + x + 0.5, region.y0 + y + 0.5};
      out.pixels(x, y) = sample_bilinear(layer, center + field.at(region.x0 + x, region.y0 + y));
    }
  return out;
}

}  // namespace hairwisp
