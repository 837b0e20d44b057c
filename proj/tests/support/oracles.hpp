#ifndef SWJD_TESTS_ORACLES_HPP
#define SWJD_TESTS_ORACLES_HPP

// Test-side deterministic oracles. These never touch the Monte Carlo path:
// expected values come from dense finite differences (with midpoint
// quadrature for the nonlocal term), classical closed forms, or direct
// series evaluation, and are compared against the estimators.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "swjd/model.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Dense 1D solver for the coupled integro-differential system
//   a_i u_i'' + b_i u_i' + J_i[u_i] + sum_j q_ij u_j = -rhs_i   on (lo, hi),
//   u_i = phi(., i) outside,
// where J_i is the jump part of the generator (plain form against the
// effective drift, matching the sampler's convention). Requires a
// bounded-support dominating density.
//
// mode: all regimes coupled, or a single regime i with killing q_ii only
// (the Green-operator generator of the killed process X~^i).

class CoupledFd1D {
 public:
  struct Options {
    double lo = 0.0;
    double hi = 1.0;
    int n = 800;                // grid cells; nodes are 0..n
    int single_regime = -1;     // -1: coupled system over all regimes
    bool zero_exterior = false; // Green mode: u = 0 on the complement
  };

  CoupledFd1D(const swjd::ModelSpec& spec, Options opt) : spec_(spec), opt_(opt) {
    if (spec.dim != 1) throw std::invalid_argument("CoupledFd1D: 1D models only");
    regimes_ = opt.single_regime >= 0 ? std::vector<int>{opt.single_regime}
                                      : [&] {
                                          std::vector<int> r;
                                          for (int i = 0; i < spec.regimes; ++i) r.push_back(i);
                                          return r;
                                        }();
    for (int i : regimes_) {
      const auto& k = spec.jumps[i];
      if (!k.is_zero() && !std::isfinite(k.dominating->support_radius()))
        throw std::invalid_argument("CoupledFd1D: needs bounded jump support");
    }
  }

  // phi(x, i): exterior data (ignored in zero_exterior mode);
  // rhs(x, i): right-hand side so that (G u)(x,i) = -rhs(x,i).
  void solve(const std::function<double(double, int)>& phi,
             const std::function<double(double, int)>& rhs) {
    const int n = opt_.n;
    const int m = static_cast<int>(regimes_.size());
    const int nodes = n + 1;
    const double dx = (opt_.hi - opt_.lo) / n;
    const int dim = m * nodes;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);

    auto row_of = [&](int ri, int k) { return ri * nodes + k; };
    auto node_x = [&](int k) { return opt_.lo + k * dx; };
    auto exterior = [&](double x, int regime) {
      return opt_.zero_exterior ? 0.0 : phi(x, regime);
    };

    for (int ri = 0; ri < m; ++ri) {
      const int i = regimes_[ri];
      const auto& kernel = spec_.jumps[i];

      // quadrature over the jump support, midpoint cells of width ~dx
      std::vector<double> zs, ws;
      if (!kernel.is_zero()) {
        const double zmax = kernel.dominating->support_radius();
        const int nz = std::max(8, static_cast<int>(std::ceil(2.0 * zmax / dx)));
        const double dz = 2.0 * zmax / nz;
        swjd::Point x_dummy{0.0};
        for (int j = 0; j < nz; ++j) {
          const double z = -zmax + (j + 0.5) * dz;
          zs.push_back(z);
          ws.push_back(dz);
        }
      }

      for (int k = 0; k <= n; ++k) {
        const int row = row_of(ri, k);
        const double x = node_x(k);
        if (k == 0 || k == n) {  // boundary nodes carry the exterior value
          A(row, row) = 1.0;
          b(row) = exterior(x, i);
          continue;
        }
        const swjd::Point xp{x};
        const double a = spec_.diffusion_scalar(xp, i);
        const double bd = spec_.effective_drift(xp, i)[0];

        A(row, row_of(ri, k - 1)) += a / (dx * dx) - bd / (2.0 * dx);
        A(row, row) += -2.0 * a / (dx * dx);
        A(row, row_of(ri, k + 1)) += a / (dx * dx) + bd / (2.0 * dx);

        if (!kernel.is_zero()) {
          for (std::size_t j = 0; j < zs.size(); ++j) {
            const swjd::Point z{zs[j]};
            const double w = kernel.rate * (*kernel.ratio)(xp, z) *
                             kernel.dominating->density(z) * ws[j];
            if (w == 0.0) continue;
            const double y = x + zs[j];
            A(row, row) -= w;  // -u(x) part
            if (y <= opt_.lo || y >= opt_.hi) {
              b(row) -= w * exterior(y, i);
            } else {
              const double pos = (y - opt_.lo) / dx;
              const int k0 = std::min(n - 1, static_cast<int>(pos));
              const double frac = pos - k0;
              A(row, row_of(ri, k0)) += w * (1.0 - frac);
              A(row, row_of(ri, k0 + 1)) += w * frac;
            }
          }
        }

        if (opt_.single_regime >= 0) {
          A(row, row) += spec_.switching.diagonal(xp, i);  // killed subprocess
        } else {
          for (int rj = 0; rj < m; ++rj) {
            const int jr = regimes_[rj];
            if (jr == i)
              A(row, row) += spec_.switching.diagonal(xp, i);
            else
              A(row, row_of(rj, k)) += spec_.switching.rate(xp, i, jr);
          }
        }
        b(row) += -rhs(x, i);
      }
    }

    Eigen::VectorXd u = A.partialPivLu().solve(b);
    values_.assign(m, std::vector<double>(nodes));
    for (int ri = 0; ri < m; ++ri)
      for (int k = 0; k <= n; ++k) values_[ri][k] = u(row_of(ri, k));
  }

  // Linear interpolation of the solved field.
  double eval(double x, int regime) const {
    int ri = 0;
    if (opt_.single_regime < 0) {
      ri = regime;
    } else if (regime != opt_.single_regime) {
      throw std::invalid_argument("CoupledFd1D: regime not solved");
    }
    const int n = opt_.n;
    const double dx = (opt_.hi - opt_.lo) / n;
    const double pos = (x - opt_.lo) / dx;
    if (pos <= 0.0) return values_[ri].front();
    if (pos >= n) return values_[ri].back();
    const int k0 = static_cast<int>(pos);
    const double frac = pos - k0;
    return (1.0 - frac) * values_[ri][k0] + frac * values_[ri][k0 + 1];
  }

 private:
  const swjd::ModelSpec& spec_;
  Options opt_;
  std::vector<int> regimes_;
  std::vector<std::vector<double>> values_;
};

// Convenience wrappers -------------------------------------------------------

// Harmonic system: u(x,i) = E[phi(exit)] via G u = 0, u = phi outside.
inline CoupledFd1D solve_harmonic_1d(const swjd::ModelSpec& spec, double lo, double hi,
                                     const swjd::BoundaryData& phi, int n = 800) {
  CoupledFd1D::Options opt;
  opt.lo = lo;
  opt.hi = hi;
  opt.n = n;
  CoupledFd1D fd(spec, opt);
  fd.solve([&](double x, int i) { return phi(swjd::Point{x}, i); },
           [](double, int) { return 0.0; });
  return fd;
}

// Killed Green operator of one regime: g = G^i_D f, i.e. (L_i + q_ii) g = -f,
// g = 0 outside.
inline CoupledFd1D solve_green_1d(const swjd::ModelSpec& spec, int regime, double lo, double hi,
                                  const std::function<double(double)>& f, int n = 800) {
  CoupledFd1D::Options opt;
  opt.lo = lo;
  opt.hi = hi;
  opt.n = n;
  opt.single_regime = regime;
  opt.zero_exterior = true;
  CoupledFd1D fd(spec, opt);
  fd.solve([](double, int) { return 0.0; }, [&](double x, int) { return f(x); });
  return fd;
}

// Boundary term of the decomposition: v_i = E[e_{q_ii}(tau) phi(exit, i)]
// via (L_i + q_ii) v = 0, v = phi(., i) outside.
inline CoupledFd1D solve_boundary_term_1d(const swjd::ModelSpec& spec, int regime, double lo,
                                          double hi, const swjd::BoundaryData& phi, int n = 800) {
  CoupledFd1D::Options opt;
  opt.lo = lo;
  opt.hi = hi;
  opt.n = n;
  opt.single_regime = regime;
  CoupledFd1D fd(spec, opt);
  fd.solve([&](double x, int i) { return phi(swjd::Point{x}, i); },
           [](double, int) { return 0.0; });
  return fd;
}

// ---------------------------------------------------------------------------
// Matrix exponential by scaling and squaring (small m), for the
// uniformization law check exp(tQ).

inline Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& m) {
  const int s = std::max(0, static_cast<int>(std::ceil(std::log2(std::max(1.0, m.norm())))) + 4);
  const Eigen::MatrixXd a = m / std::pow(2.0, s);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  Eigen::MatrixXd term = sum;
  for (int k = 1; k <= 16; ++k) {
    term = term * a / k;
    sum += term;
  }
  for (int k = 0; k < s; ++k) sum = sum * sum;
  return sum;
}

// ---------------------------------------------------------------------------
// Classical closed forms used for [TRIVIAL] expectations.

// E tau of B(0,r) for generator a * d^2/dx^2 started at x.
inline double brownian_exit_time_1d(double a, double r, double x) {
  return (r * r - x * x) / (2.0 * a);
}

// d-dimensional ball B(0,r), generator a * Laplacian: (r^2-|x|^2)/(2 a d).
inline double brownian_exit_time_ball(double a, int d, double r, double norm_x) {
  return (r * r - norm_x * norm_x) / (2.0 * a * d);
}

}  // namespace oracle

#endif  // SWJD_TESTS_ORACLES_HPP
