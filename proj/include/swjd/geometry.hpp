#ifndef SWJD_GEOMETRY_HPP
#define SWJD_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace swjd {

inline constexpr int kMaxDim = 8;

// Fixed-capacity point in R^d, d <= kMaxDim. Value type, no allocation on
// the sampling hot path.
struct Point {
  std::array<double, kMaxDim> coord{};
  int dim = 0;

  Point() = default;
  explicit Point(int d) : dim(d) {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("Point: dimension out of range");
  }
  Point(std::initializer_list<double> values) : dim(static_cast<int>(values.size())) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Point: dimension out of range");
    std::copy(values.begin(), values.end(), coord.begin());
  }
  static Point from(const std::vector<double>& values) {
    Point p(static_cast<int>(values.size()));
    std::copy(values.begin(), values.end(), p.coord.begin());
    return p;
  }

  double& operator[](int k) { return coord[static_cast<std::size_t>(k)]; }
  double operator[](int k) const { return coord[static_cast<std::size_t>(k)]; }

  Point& operator+=(const Point& o) {
    for (int k = 0; k < dim; ++k) coord[k] += o.coord[k];
    return *this;
  }
  friend Point operator+(Point a, const Point& b) { return a += b; }
  friend Point operator-(Point a, const Point& b) {
    for (int k = 0; k < a.dim; ++k) a.coord[k] -= b.coord[k];
    return a;
  }
  friend Point operator*(double s, Point a) {
    for (int k = 0; k < a.dim; ++k) a.coord[k] *= s;
    return a;
  }

  double norm2() const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += coord[k] * coord[k];
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }

  std::vector<double> to_vector() const {
    return std::vector<double>(coord.begin(), coord.begin() + dim);
  }
};

inline double distance(const Point& a, const Point& b) { return (a - b).norm(); }

struct Ball {
  Point center;
  double radius = 0.0;
};

// Spatial domain D: open ball or open axis-aligned box. Supplies membership,
// distance to the complement, and a containing ball.
class Region {
 public:
  enum class Shape { kBall, kBox };

  static Region ball(Point center, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("Region: ball radius must be positive");
    Region r;
    r.shape_ = Shape::kBall;
    r.center_ = center;
    r.radius_ = radius;
    return r;
  }

  static Region box(Point lo, Point hi) {
    if (lo.dim != hi.dim) throw std::invalid_argument("Region: box corner dimensions differ");
    for (int k = 0; k < lo.dim; ++k)
      if (!(lo[k] < hi[k])) throw std::invalid_argument("Region: box needs lo < hi per axis");
    Region r;
    r.shape_ = Shape::kBox;
    r.lo_ = lo;
    r.hi_ = hi;
    return r;
  }

  static Region interval(double lo, double hi) { return box(Point{lo}, Point{hi}); }

  Shape shape() const { return shape_; }
  int dim() const { return shape_ == Shape::kBall ? center_.dim : lo_.dim; }

  bool contains(const Point& x) const {
    if (shape_ == Shape::kBall) return distance(x, center_) < radius_;
    for (int k = 0; k < x.dim; ++k)
      if (!(lo_[k] < x[k] && x[k] < hi_[k])) return false;
    return true;
  }

  // Distance from x to D^c (0 outside D).
  double boundary_distance(const Point& x) const {
    if (shape_ == Shape::kBall) return std::max(0.0, radius_ - distance(x, center_));
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < x.dim; ++k) {
      d = std::min(d, x[k] - lo_[k]);
      d = std::min(d, hi_[k] - x[k]);
    }
    return std::max(0.0, d);
  }

  Ball containing_ball() const {
    if (shape_ == Shape::kBall) return {center_, radius_};
    Point c(lo_.dim);
    double r2 = 0.0;
    for (int k = 0; k < lo_.dim; ++k) {
      c[k] = 0.5 * (lo_[k] + hi_[k]);
      const double half = 0.5 * (hi_[k] - lo_[k]);
      r2 += half * half;
    }
    return {c, std::sqrt(r2)};
  }

  // Radius of the largest ball around the natural center.
  double inradius() const {
    if (shape_ == Shape::kBall) return radius_;
    double r = std::numeric_limits<double>::infinity();
    for (int k = 0; k < lo_.dim; ++k) r = std::min(r, 0.5 * (hi_[k] - lo_[k]));
    return r;
  }

  Point midpoint() const { return containing_ball().center; }

  // 1D regions are intervals either way; exposes the endpoints.
  std::pair<double, double> as_interval() const {
    if (dim() != 1) throw std::logic_error("Region: as_interval requires d=1");
    if (shape_ == Shape::kBall) return {center_[0] - radius_, center_[0] + radius_};
    return {lo_[0], hi_[0]};
  }

  const Point& box_lo() const { return lo_; }
  const Point& box_hi() const { return hi_; }

 private:
  Shape shape_ = Shape::kBall;
  Point center_;
  double radius_ = 0.0;
  Point lo_;
  Point hi_;
};

}  // namespace swjd

#endif  // SWJD_GEOMETRY_HPP
