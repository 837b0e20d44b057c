#ifndef SWJD_FIELDS_HPP
#define SWJD_FIELDS_HPP

// Registry of bounded parametric coefficient families. Models are assembled
// from these families only, so boundedness holds by construction and every
// field can report a sup bound for assumption checks and uniformization.

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swjd/geometry.hpp"

namespace swjd {

// ---------------------------------------------------------------------------
// Scalar fields f : R^d -> R.

class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual double operator()(const Point& x) const = 0;
  // [inf f, sup f] over R^d
  virtual std::pair<double, double> range() const = 0;
  virtual std::string family() const = 0;
  // sup |f|
  double bound() const {
    const auto [lo, hi] = range();
    return std::max(std::abs(lo), std::abs(hi));
  }
};

using ScalarFieldPtr = std::shared_ptr<const ScalarField>;

class ConstantField final : public ScalarField {
 public:
  explicit ConstantField(double value) : value_(value) {}
  double operator()(const Point&) const override { return value_; }
  std::pair<double, double> range() const override { return {value_, value_}; }
  std::string family() const override { return "constant"; }
  double value() const { return value_; }

 private:
  double value_;
};

// clamp(intercept + slope . x, lo, hi)
class AffineClampedField final : public ScalarField {
 public:
  AffineClampedField(double intercept, Point slope, double lo, double hi)
      : intercept_(intercept), slope_(slope), lo_(lo), hi_(hi) {
    if (!(lo <= hi)) throw std::invalid_argument("affine_clamped: lo must be <= hi");
  }
  double operator()(const Point& x) const override {
    double v = intercept_;
    for (int k = 0; k < x.dim; ++k) v += slope_[k] * x[k];
    return std::clamp(v, lo_, hi_);
  }
  std::pair<double, double> range() const override { return {lo_, hi_}; }
  std::string family() const override { return "affine_clamped"; }

 private:
  double intercept_;
  Point slope_;
  double lo_;
  double hi_;
};

// base + amplitude * exp(-|x-center|^2 / width^2)
class RadialBumpField final : public ScalarField {
 public:
  RadialBumpField(double base, double amplitude, Point center, double width)
      : base_(base), amplitude_(amplitude), center_(center), width_(width) {
    if (width <= 0.0) throw std::invalid_argument("radial_bump: width must be positive");
  }
  double operator()(const Point& x) const override {
    const double r2 = (x - center_).norm2();
    return base_ + amplitude_ * std::exp(-r2 / (width_ * width_));
  }
  std::pair<double, double> range() const override {
    return {std::min(base_, base_ + amplitude_), std::max(base_, base_ + amplitude_)};
  }
  std::string family() const override { return "radial_bump"; }

 private:
  double base_;
  double amplitude_;
  Point center_;
  double width_;
};

// lo + (hi - lo) / (1 + exp(-(x . direction - threshold) / width))
class LogisticField final : public ScalarField {
 public:
  LogisticField(double lo, double hi, Point direction, double threshold, double width)
      : lo_(lo), hi_(hi), direction_(direction), threshold_(threshold), width_(width) {
    if (width <= 0.0) throw std::invalid_argument("logistic: width must be positive");
  }
  double operator()(const Point& x) const override {
    double s = -threshold_;
    for (int k = 0; k < x.dim; ++k) s += direction_[k] * x[k];
    return lo_ + (hi_ - lo_) / (1.0 + std::exp(-s / width_));
  }
  std::pair<double, double> range() const override {
    return {std::min(lo_, hi_), std::max(lo_, hi_)};
  }
  std::string family() const override { return "logistic"; }

 private:
  double lo_;
  double hi_;
  Point direction_;
  double threshold_;
  double width_;
};

// Indicator of a simple set: halfspace {x . direction >= threshold}, a ball,
// the complement of a ball, or a box.
class IndicatorField final : public ScalarField {
 public:
  enum class Set { kHalfspace, kBall, kOutsideBall, kBox };

  static IndicatorField halfspace(Point direction, double threshold) {
    IndicatorField f;
    f.set_ = Set::kHalfspace;
    f.a_ = direction;
    f.t_ = threshold;
    return f;
  }
  static IndicatorField ball(Point center, double radius) {
    IndicatorField f;
    f.set_ = Set::kBall;
    f.a_ = center;
    f.t_ = radius;
    return f;
  }
  static IndicatorField outside_ball(Point center, double radius) {
    IndicatorField f = ball(center, radius);
    f.set_ = Set::kOutsideBall;
    return f;
  }
  static IndicatorField box(Point lo, Point hi) {
    IndicatorField f;
    f.set_ = Set::kBox;
    f.a_ = lo;
    f.b_ = hi;
    return f;
  }

  double operator()(const Point& x) const override {
    switch (set_) {
      case Set::kHalfspace: {
        double s = 0.0;
        for (int k = 0; k < x.dim; ++k) s += a_[k] * x[k];
        return s >= t_ ? 1.0 : 0.0;
      }
      case Set::kBall:
        return distance(x, a_) <= t_ ? 1.0 : 0.0;
      case Set::kOutsideBall:
        return distance(x, a_) <= t_ ? 0.0 : 1.0;
      case Set::kBox:
        for (int k = 0; k < x.dim; ++k)
          if (x[k] < a_[k] || x[k] > b_[k]) return 0.0;
        return 1.0;
    }
    return 0.0;
  }
  std::pair<double, double> range() const override { return {0.0, 1.0}; }
  std::string family() const override { return "indicator"; }

 private:
  Set set_ = Set::kHalfspace;
  Point a_;
  Point b_;
  double t_ = 0.0;
};

inline ScalarFieldPtr make_constant(double v) { return std::make_shared<ConstantField>(v); }

// ---------------------------------------------------------------------------
// Drift fields b : R^d -> R^d, one scalar family per component.

class VectorField {
 public:
  explicit VectorField(std::vector<ScalarFieldPtr> components)
      : components_(std::move(components)) {}

  static VectorField constant(const Point& v) {
    std::vector<ScalarFieldPtr> c;
    for (int k = 0; k < v.dim; ++k) c.push_back(make_constant(v[k]));
    return VectorField(std::move(c));
  }

  static VectorField zero(int dim) { return constant(Point(dim)); }

  int dim() const { return static_cast<int>(components_.size()); }

  Point operator()(const Point& x) const {
    Point out(dim());
    for (int k = 0; k < out.dim; ++k) out[k] = (*components_[k])(x);
    return out;
  }

  // sup |b| (euclidean, via component sups)
  double bound() const {
    double s = 0.0;
    for (const auto& c : components_) s += c->bound() * c->bound();
    return std::sqrt(s);
  }

  const std::vector<ScalarFieldPtr>& components() const { return components_; }

 private:
  std::vector<ScalarFieldPtr> components_;
};

// ---------------------------------------------------------------------------
// Diffusion coefficient a(x) = scale(x) * A with A constant symmetric and
// scale a positive scalar family. Symmetry is structural; ellipticity is
// checked by sampling in the model validator.

class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  SymmetricMatrix(int d, const std::vector<double>& row_major) : dim_(d) {
    if (static_cast<int>(row_major.size()) != d * d)
      throw std::invalid_argument("matrix: wrong entry count");
    entries_ = row_major;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < i; ++j)
        if (std::abs(at(i, j) - at(j, i)) > 1e-12 * (1.0 + std::abs(at(i, j))))
          throw std::invalid_argument("matrix: not symmetric");
  }

  static SymmetricMatrix identity(int d, double scale = 1.0) {
    std::vector<double> e(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) e[static_cast<std::size_t>(i) * d + i] = scale;
    return SymmetricMatrix(d, e);
  }

  int dim() const { return dim_; }
  double at(int i, int j) const { return entries_[static_cast<std::size_t>(i) * dim_ + j]; }
  const std::vector<double>& entries() const { return entries_; }

 private:
  int dim_ = 0;
  std::vector<double> entries_;
};

class MatrixField {
 public:
  MatrixField(SymmetricMatrix base, ScalarFieldPtr scale)
      : base_(std::move(base)), scale_(std::move(scale)) {}

  static MatrixField constant(SymmetricMatrix m) {
    return MatrixField(std::move(m), make_constant(1.0));
  }

  static MatrixField isotropic(int dim, double value) {
    return constant(SymmetricMatrix::identity(dim, value));
  }

  int dim() const { return base_.dim(); }
  const SymmetricMatrix& base() const { return base_; }
  double scale_at(const Point& x) const { return (*scale_)(x); }
  bool has_constant_scale() const { return scale_->family() == "constant"; }

  SymmetricMatrix value_at(const Point& x) const {
    const double s = scale_at(x);
    std::vector<double> e = base_.entries();
    for (double& v : e) v *= s;
    return SymmetricMatrix(base_.dim(), e);
  }

  double bound() const {
    double m = 0.0;
    for (double v : base_.entries()) m = std::max(m, std::abs(v));
    return m * scale_->bound();
  }

 private:
  SymmetricMatrix base_;
  ScalarFieldPtr scale_;
};

}  // namespace swjd

#endif  // SWJD_FIELDS_HPP
