#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "sapg/geometry.hpp"

namespace sapg {

// Synthetic seafloor: a heightfield (explicit grid with bilinear
// interpolation, or analytic base + Gaussian bumps) plus axis-aligned boxes
// standing in for man-made structures.
struct GaussianBump {
  Vec2 center = Vec2::Zero();
  double height = 1.0;
  double sigma = 1.0;
};

struct SceneBox {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();  // full extents
};

class Scene {
 public:
  Scene() = default;

  static Scene analytic(double base_height, std::vector<GaussianBump> bumps,
                        std::vector<SceneBox> boxes, const Vec2& extent_min,
                        const Vec2& extent_max) {
    Scene s;
    s.base_height_ = base_height;
    s.bumps_ = std::move(bumps);
    s.boxes_ = std::move(boxes);
    s.extent_min_ = extent_min;
    s.extent_max_ = extent_max;
    return s;
  }

  static Scene from_heightfield(const Vec2& hf_origin, double spacing,
                                std::vector<std::vector<double>> rows,
                                std::vector<SceneBox> boxes) {
    Scene s;
    if (rows.size() < 2 || rows.front().size() < 2)
      throw std::invalid_argument("Scene: heightfield must be at least 2x2");
    s.hf_rows_ = rows.size();
    s.hf_cols_ = rows.front().size();
    s.hf_origin_ = hf_origin;
    s.hf_spacing_ = spacing;
    s.hf_.reserve(s.hf_rows_ * s.hf_cols_);
    for (const auto& r : rows) {
      if (r.size() != s.hf_cols_)
        throw std::invalid_argument("Scene: ragged heightfield rows");
      for (double v : r) {
        if (!std::isfinite(v))
          throw std::invalid_argument("Scene: non-finite heightfield value");
        s.hf_.push_back(v);
      }
    }
    s.boxes_ = std::move(boxes);
    s.extent_min_ = hf_origin;
    s.extent_max_ = hf_origin + spacing * Vec2(static_cast<double>(s.hf_cols_ - 1),
                                               static_cast<double>(s.hf_rows_ - 1));
    return s;
  }

  static Scene from_json(const nlohmann::json& j) {
    std::vector<SceneBox> boxes;
    for (const auto& b : j.value("boxes", nlohmann::json::array())) {
      SceneBox box;
      box.center = Vec3(b.at("center")[0], b.at("center")[1], b.at("center")[2]);
      box.size = Vec3(b.at("size")[0], b.at("size")[1], b.at("size")[2]);
      boxes.push_back(box);
    }
    if (j.contains("heightfield")) {
      const auto& h = j.at("heightfield");
      std::vector<std::vector<double>> rows;
      for (const auto& r : h.at("rows")) rows.push_back(r.get<std::vector<double>>());
      return from_heightfield(Vec2(h.at("origin")[0], h.at("origin")[1]),
                              h.at("spacing").get<double>(), std::move(rows),
                              std::move(boxes));
    }
    std::vector<GaussianBump> bumps;
    for (const auto& b : j.value("bumps", nlohmann::json::array())) {
      GaussianBump g;
      g.center = Vec2(b.at("center")[0], b.at("center")[1]);
      g.height = b.at("height").get<double>();
      g.sigma = b.at("sigma").get<double>();
      bumps.push_back(g);
    }
    Vec2 emin(-50.0, -50.0), emax(50.0, 50.0);
    if (j.contains("extent")) {
      emin = Vec2(j.at("extent")[0][0], j.at("extent")[0][1]);
      emax = Vec2(j.at("extent")[1][0], j.at("extent")[1][1]);
    }
    return analytic(j.value("base_height", 0.0), std::move(bumps), std::move(boxes),
                    emin, emax);
  }

  double height(double x, double y) const {
    if (!hf_.empty()) return bilinear(x, y);
    double h = base_height_;
    for (const auto& b : bumps_) {
      const double dx = x - b.center.x();
      const double dy = y - b.center.y();
      h += b.height * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
    }
    return h;
  }

  Vec2 height_gradient(double x, double y) const {
    if (!hf_.empty()) {
      const double h = hf_spacing_ * 0.5;
      return Vec2((bilinear(x + h, y) - bilinear(x - h, y)) / (2.0 * h),
                  (bilinear(x, y + h) - bilinear(x, y - h)) / (2.0 * h));
    }
    Vec2 g = Vec2::Zero();
    for (const auto& b : bumps_) {
      const double dx = x - b.center.x();
      const double dy = y - b.center.y();
      const double s2 = b.sigma * b.sigma;
      const double e = b.height * std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
      g.x() += -dx / s2 * e;
      g.y() += -dy / s2 * e;
    }
    return g;
  }

  // Signed distance: positive in free water, negative below the seafloor or
  // inside a box. The heightfield term divides the vertical offset by the
  // local slope factor, which is exact for planes and a close underestimate
  // for gentle slopes.
  double signed_distance(const Vec3& p) const {
    const Vec2 g = height_gradient(p.x(), p.y());
    const double slope = std::sqrt(1.0 + g.squaredNorm());
    double d = (p.z() - height(p.x(), p.y())) / slope;
    for (const auto& b : boxes_) d = std::min(d, box_sdf(p, b));
    return d;
  }

  Vec3 sdf_gradient(const Vec3& p, double h = 1e-4) const {
    return Vec3(signed_distance(p + Vec3(h, 0, 0)) - signed_distance(p - Vec3(h, 0, 0)),
                signed_distance(p + Vec3(0, h, 0)) - signed_distance(p - Vec3(0, h, 0)),
                signed_distance(p + Vec3(0, 0, h)) - signed_distance(p - Vec3(0, 0, h))) /
           (2.0 * h);
  }

  const Vec2& extent_min() const { return extent_min_; }
  const Vec2& extent_max() const { return extent_max_; }
  const std::vector<SceneBox>& boxes() const { return boxes_; }

  static double box_sdf(const Vec3& p, const SceneBox& b) {
    const Vec3 q = (p - b.center).cwiseAbs() - 0.5 * b.size;
    const Vec3 outside = q.cwiseMax(0.0);
    const double inside = std::min(0.0, q.maxCoeff());
    return outside.norm() + inside;
  }

 private:
  double bilinear(double x, double y) const {
    // Coordinates clamped to the grid edge: the field extends flat outside.
    double fx = (x - hf_origin_.x()) / hf_spacing_;
    double fy = (y - hf_origin_.y()) / hf_spacing_;
    fx = std::clamp(fx, 0.0, static_cast<double>(hf_cols_ - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(hf_rows_ - 1));
    const size_t ix = std::min(hf_cols_ - 2, static_cast<size_t>(fx));
    const size_t iy = std::min(hf_rows_ - 2, static_cast<size_t>(fy));
    const double tx = fx - static_cast<double>(ix);
    const double ty = fy - static_cast<double>(iy);
    const double v00 = hf_[iy * hf_cols_ + ix];
    const double v01 = hf_[iy * hf_cols_ + ix + 1];
    const double v10 = hf_[(iy + 1) * hf_cols_ + ix];
    const double v11 = hf_[(iy + 1) * hf_cols_ + ix + 1];
    return v00 * (1 - tx) * (1 - ty) + v01 * tx * (1 - ty) + v10 * (1 - tx) * ty +
           v11 * tx * ty;
  }

  // analytic form
  double base_height_ = 0.0;
  std::vector<GaussianBump> bumps_;
  // heightfield form (used when non-empty)
  std::vector<double> hf_;
  size_t hf_rows_ = 0, hf_cols_ = 0;
  Vec2 hf_origin_ = Vec2::Zero();
  double hf_spacing_ = 1.0;

  std::vector<SceneBox> boxes_;
  Vec2 extent_min_ = Vec2::Zero();
  Vec2 extent_max_ = Vec2::Zero();
};

}  // namespace sapg
