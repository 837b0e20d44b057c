#ifndef SWJD_JUMPS_HPP
#define SWJD_JUMPS_HPP

// Finite-activity jump kernels in dominated (thinning) form:
//   pi_i(x, dz) = rate * ratio(x, z) * dominating_density(z) dz,
// with ratio in [0,1] and the dominating density a normalized probability
// density that can be sampled exactly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "swjd/fields.hpp"
#include "swjd/geometry.hpp"
#include "swjd/rng.hpp"

namespace swjd {

namespace detail {
inline double unit_sphere_area(int d) {
  // S_{d-1} surface area; d <= 3 covers the registered kernels, the general
  // formula keeps higher d usable.
  if (d == 1) return 2.0;
  if (d == 2) return 2.0 * 3.14159265358979323846;
  if (d == 3) return 4.0 * 3.14159265358979323846;
  double g = std::tgamma(d / 2.0);
  return 2.0 * std::pow(3.14159265358979323846, d / 2.0) / g;
}

inline Point sample_direction(CounterRng& rng, int d) {
  if (d == 1) return Point{rng.uniform() < 0.5 ? -1.0 : 1.0};
  Point v(d);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (int k = 0; k < d; ++k) {
      v[k] = rng.normal();
      n2 += v[k] * v[k];
    }
  } while (n2 == 0.0);
  return (1.0 / std::sqrt(n2)) * v;
}
}  // namespace detail

// Normalized displacement density with exact sampling.
class JumpDensity {
 public:
  virtual ~JumpDensity() = default;
  virtual Point sample(CounterRng& rng, int dim) const = 0;
  virtual double density(const Point& z) const = 0;
  // Smallest radius R with support inside {|z| <= R}; +inf if unbounded.
  virtual double support_radius() const = 0;
  // Largest radius R with density zero on {|z| < R}.
  virtual double inner_gap() const { return 0.0; }
  virtual std::string family() const = 0;
};

using JumpDensityPtr = std::shared_ptr<const JumpDensity>;

class UniformBallDensity final : public JumpDensity {
 public:
  explicit UniformBallDensity(double radius) : radius_(radius) {
    if (radius <= 0.0) throw std::invalid_argument("uniform_ball: radius must be positive");
  }
  Point sample(CounterRng& rng, int dim) const override {
    if (dim == 1) return Point{radius_ * (2.0 * rng.uniform() - 1.0)};
    const Point dir = detail::sample_direction(rng, dim);
    const double rho = radius_ * std::pow(rng.uniform(), 1.0 / dim);
    return rho * dir;
  }
  double density(const Point& z) const override {
    if (z.norm() > radius_) return 0.0;
    const int d = z.dim;
    const double vol = detail::unit_sphere_area(d) / d * std::pow(radius_, d);
    return 1.0 / vol;
  }
  double support_radius() const override { return radius_; }
  std::string family() const override { return "uniform_ball"; }

 private:
  double radius_;
};

class UniformAnnulusDensity final : public JumpDensity {
 public:
  UniformAnnulusDensity(double inner, double outer) : inner_(inner), outer_(outer) {
    if (!(0.0 <= inner && inner < outer))
      throw std::invalid_argument("uniform_annulus: need 0 <= inner < outer");
  }
  Point sample(CounterRng& rng, int dim) const override {
    const Point dir = detail::sample_direction(rng, dim);
    const double u = rng.uniform();
    const double rd = std::pow(inner_, dim) + u * (std::pow(outer_, dim) - std::pow(inner_, dim));
    return std::pow(rd, 1.0 / dim) * dir;
  }
  double density(const Point& z) const override {
    const double r = z.norm();
    if (r < inner_ || r > outer_) return 0.0;
    const int d = z.dim;
    const double vol = detail::unit_sphere_area(d) / d *
                       (std::pow(outer_, d) - std::pow(inner_, d));
    return 1.0 / vol;
  }
  double support_radius() const override { return outer_; }
  double inner_gap() const override { return inner_; }
  std::string family() const override { return "uniform_annulus"; }

 private:
  double inner_;
  double outer_;
};

class GaussianDensity final : public JumpDensity {
 public:
  explicit GaussianDensity(double sigma) : sigma_(sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian: sigma must be positive");
  }
  Point sample(CounterRng& rng, int dim) const override {
    Point z(dim);
    for (int k = 0; k < dim; ++k) z[k] = sigma_ * rng.normal();
    return z;
  }
  double density(const Point& z) const override {
    const int d = z.dim;
    const double c = std::pow(2.0 * 3.14159265358979323846 * sigma_ * sigma_, -0.5 * d);
    return c * std::exp(-0.5 * z.norm2() / (sigma_ * sigma_));
  }
  double support_radius() const override { return std::numeric_limits<double>::infinity(); }
  std::string family() const override { return "gaussian"; }

 private:
  double sigma_;
};

// Density proportional to |z|^(-d-alpha) on {|z| > epsilon}: the truncated
// stable-like tail from the comparability remark. Satisfies the (A4) style
// comparability with a constant independent of r once r > 2*epsilon.
class PowerTailDensity final : public JumpDensity {
 public:
  PowerTailDensity(double epsilon, double alpha) : epsilon_(epsilon), alpha_(alpha) {
    if (epsilon <= 0.0 || alpha <= 0.0)
      throw std::invalid_argument("power_tail: epsilon and alpha must be positive");
  }
  Point sample(CounterRng& rng, int dim) const override {
    const Point dir = detail::sample_direction(rng, dim);
    const double rho = epsilon_ * std::pow(rng.uniform(), -1.0 / alpha_);
    return rho * dir;
  }
  double density(const Point& z) const override {
    const double r = z.norm();
    if (r < epsilon_) return 0.0;
    const int d = z.dim;
    const double c = alpha_ * std::pow(epsilon_, alpha_) / detail::unit_sphere_area(d);
    return c * std::pow(r, -static_cast<double>(d) - alpha_);
  }
  double support_radius() const override { return std::numeric_limits<double>::infinity(); }
  double inner_gap() const override { return epsilon_; }
  std::string family() const override { return "power_tail"; }

 private:
  double epsilon_;
  double alpha_;
};

// ---------------------------------------------------------------------------
// Thinning ratio r(x, z) in [0,1].

class RatioField {
 public:
  virtual ~RatioField() = default;
  virtual double operator()(const Point& x, const Point& z) const = 0;
  virtual bool depends_on_state() const = 0;
  virtual std::string family() const = 0;
};

using RatioFieldPtr = std::shared_ptr<const RatioField>;

class ConstantRatio final : public RatioField {
 public:
  explicit ConstantRatio(double value) : value_(value) {
    if (value < 0.0 || value > 1.0)
      throw std::invalid_argument("ratio constant: value must lie in [0,1]");
  }
  double operator()(const Point&, const Point&) const override { return value_; }
  bool depends_on_state() const override { return false; }
  std::string family() const override { return "constant"; }

 private:
  double value_;
};

// State-dependent acceptance, logistic in x . direction.
class LogisticStateRatio final : public RatioField {
 public:
  LogisticStateRatio(double lo, double hi, Point direction, double threshold, double width)
      : field_(lo, hi, direction, threshold, width) {
    if (lo < 0.0 || hi > 1.0 || lo > hi)
      throw std::invalid_argument("ratio logistic_state: need 0 <= lo <= hi <= 1");
  }
  double operator()(const Point& x, const Point&) const override { return field_(x); }
  bool depends_on_state() const override { return true; }
  std::string family() const override { return "logistic_state"; }

 private:
  LogisticField field_;
};

// Displacement-dependent acceptance, clamp(c0 + c1 * (z . direction), 0, 1);
// skews the effective kernel relative to a symmetric dominating density.
class LinearDisplacementRatio final : public RatioField {
 public:
  LinearDisplacementRatio(double c0, double c1, Point direction)
      : c0_(c0), c1_(c1), direction_(direction) {}
  double operator()(const Point&, const Point& z) const override {
    double s = c0_;
    for (int k = 0; k < z.dim; ++k) s += c1_ * direction_[k] * z[k];
    return std::clamp(s, 0.0, 1.0);
  }
  bool depends_on_state() const override { return false; }
  std::string family() const override { return "linear_displacement"; }

 private:
  double c0_;
  double c1_;
  Point direction_;
};

// ---------------------------------------------------------------------------

struct HarnackComparability {
  double kappa2 = 0.0;  // alpha_r <= kappa2 * r^(-beta)
  double beta = 0.0;
};

enum class JumpConvention { kPlain, kCompensated };

struct JumpKernel {
  double rate = 0.0;  // Lambda_max: dominating intensity per unit time
  JumpDensityPtr dominating;
  RatioFieldPtr ratio;
  JumpConvention convention = JumpConvention::kPlain;
  std::optional<HarnackComparability> harnack;
  // - rate * integral_{|z|<1} z ratio(z) p(z) dz, applied to the sampled
  // drift when convention == kCompensated. See compute_compensation_drift.
  Point compensation_drift;

  bool is_zero() const { return rate == 0.0 || !dominating; }

  // pi~_i(x, z): the state-dependent jump density at displacement z.
  double density(const Point& x, const Point& z) const {
    if (is_zero()) return 0.0;
    return rate * (*ratio)(x, z) * dominating->density(z);
  }
};

// Midpoint-rule quadrature of -rate * int_{|z|<1} z r(z) p(z) dz over the
// dominating support. Only defined for state-independent ratios; simulating
// the generator's compensated small-jump form with plain jumps shifts the
// drift by exactly this amount.
inline Point compute_compensation_drift(double rate, const JumpDensity& dom,
                                        const RatioField& ratio, int dim,
                                        int nodes_per_axis = 64) {
  if (ratio.depends_on_state())
    throw std::invalid_argument(
        "compensated kernels require a state-independent thinning ratio");
  const double lim = std::min(1.0, dom.support_radius());
  Point acc(dim);
  const double step = 2.0 * lim / nodes_per_axis;
  const Point x_dummy(dim);
  std::vector<int> idx(dim, 0);
  const double cell = std::pow(step, dim);
  while (true) {
    Point z(dim);
    for (int k = 0; k < dim; ++k) z[k] = -lim + (idx[k] + 0.5) * step;
    if (z.norm() < 1.0) {
      const double w = dom.density(z) * ratio(x_dummy, z) * cell;
      acc += w * z;
    }
    int k = 0;
    while (k < dim && ++idx[k] == nodes_per_axis) idx[k++] = 0;
    if (k == dim) break;
  }
  return -rate * acc;
}

}  // namespace swjd

#endif  // SWJD_JUMPS_HPP
