#ifndef SWJD_MODEL_HPP
#define SWJD_MODEL_HPP

// Model definition for regime-switching jump diffusions and the sample-based
// checks of the standing assumptions: bounded coefficients, uniform
// ellipticity of a(x,i), dominated jump kernels, and (optionally) jump-density
// comparability for the Harnack machinery.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swjd/fields.hpp"
#include "swjd/geometry.hpp"
#include "swjd/jumps.hpp"
#include "swjd/rng.hpp"

namespace swjd {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class StructuralError : public std::runtime_error {
 public:
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Switching matrix Q(x). Off-diagonal rates are nonnegative scalar fields;
// the diagonal is q_ii = -(sum_{j != i} q_ij + kappa_i) with kappa_i >= 0 an
// optional killing rate, so Q is sub-Markovian by construction (Markovian
// when no killing is declared).

class SwitchingMatrix {
 public:
  SwitchingMatrix() = default;

  SwitchingMatrix(int m, std::vector<ScalarFieldPtr> off_diagonal,
                  std::vector<ScalarFieldPtr> killing)
      : m_(m), rates_(std::move(off_diagonal)), killing_(std::move(killing)) {
    if (static_cast<int>(rates_.size()) != m * m)
      throw StructuralError("switching: rate table must be m x m");
    if (!killing_.empty() && static_cast<int>(killing_.size()) != m)
      throw StructuralError("switching: killing list must have one entry per regime");
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const auto& f = rates_[static_cast<std::size_t>(i) * m + j];
        if (i == j) {
          if (f) throw StructuralError("switching: diagonal entries are derived, not declared");
        } else if (f && f->range().first < 0.0) {
          std::ostringstream os;
          os << "switching: rate q_" << (i + 1) << (j + 1) << " can be negative";
          throw ConfigError(os.str());
        }
      }
      if (!killing_.empty() && killing_[i] && killing_[i]->range().first < 0.0)
        throw ConfigError("switching: killing rate can be negative");
    }
  }

  static SwitchingMatrix none(int m) {
    return SwitchingMatrix(m, std::vector<ScalarFieldPtr>(static_cast<std::size_t>(m) * m),
                           {});
  }

  // Constant Markovian matrix from off-diagonal rates.
  static SwitchingMatrix constant_rates(int m, const std::vector<double>& off_diag) {
    std::vector<ScalarFieldPtr> fields(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j) {
          const double v = off_diag[static_cast<std::size_t>(i) * m + j];
          if (v != 0.0) fields[static_cast<std::size_t>(i) * m + j] = make_constant(v);
        }
    return SwitchingMatrix(m, std::move(fields), {});
  }

  int regimes() const { return m_; }
  bool markovian_by_construction() const {
    for (const auto& k : killing_)
      if (k && k->range().second > 0.0) return false;
    return true;
  }

  double rate(const Point& x, int i, int j) const {
    const auto& f = rates_[static_cast<std::size_t>(i) * m_ + j];
    return f ? std::max(0.0, (*f)(x)) : 0.0;
  }

  double rate_sup(int i, int j) const {
    const auto& f = rates_[static_cast<std::size_t>(i) * m_ + j];
    return f ? std::max(0.0, f->range().second) : 0.0;
  }

  double killing_rate(const Point& x, int i) const {
    if (killing_.empty() || !killing_[i]) return 0.0;
    return std::max(0.0, (*killing_[i])(x));
  }

  double killing_sup(int i) const {
    if (killing_.empty() || !killing_[i]) return 0.0;
    return std::max(0.0, killing_[i]->range().second);
  }

  double diagonal(const Point& x, int i) const {
    double s = killing_rate(x, i);
    for (int j = 0; j < m_; ++j)
      if (j != i) s += rate(x, i, j);
    return -s;
  }

  // sup_x max_i |q_ii(x)|, from the declared family bounds.
  double uniformization_bound() const {
    double q = 0.0;
    for (int i = 0; i < m_; ++i) {
      double s = killing_sup(i);
      for (int j = 0; j < m_; ++j)
        if (j != i) s += rate_sup(i, j);
      q = std::max(q, s);
    }
    return q;
  }

  bool has_link(int i, int j) const {
    return static_cast<bool>(rates_[static_cast<std::size_t>(i) * m_ + j]);
  }

 private:
  int m_ = 0;
  std::vector<ScalarFieldPtr> rates_;
  std::vector<ScalarFieldPtr> killing_;
};

// ---------------------------------------------------------------------------

struct AssumptionDecl {
  double kappa0 = 1.0;             // ellipticity constant in (0,1]
  double strict_rate_floor = 0.0;  // q_ij^0 for strict irreducibility checks
  double r0_tilde = 0.5;           // radius cap for the exit-time bounds
  bool allow_degenerate = false;   // unit-test models with a == 0
  std::optional<double> q_max_override;
};

struct ModelSpec {
  int dim = 1;
  int regimes = 1;
  std::vector<VectorField> drift;      // one per regime
  std::vector<MatrixField> diffusion;  // a(x,i), one per regime
  std::vector<JumpKernel> jumps;       // one per regime; rate 0 means none
  SwitchingMatrix switching;
  AssumptionDecl assumptions;
  std::uint64_t hash = 0;  // canonical config hash, set by the loader

  // Derived at finalize():
  double q_max = 0.0;                       // uniformization rate
  std::vector<std::vector<double>> x_sqrt;  // per regime: symmetric sqrt of base a

  void finalize() {
    if (dim < 1 || dim > kMaxDim) throw StructuralError("model: dimension out of range");
    if (regimes < 1) throw StructuralError("model: regime count must be positive");
    if (static_cast<int>(drift.size()) != regimes ||
        static_cast<int>(diffusion.size()) != regimes ||
        static_cast<int>(jumps.size()) != regimes)
      throw StructuralError("model: drift/diffusion/jumps need one entry per regime");
    for (int i = 0; i < regimes; ++i) {
      if (drift[i].dim() != dim) throw StructuralError("model: drift dimension mismatch");
      if (diffusion[i].dim() != dim) throw StructuralError("model: diffusion dimension mismatch");
    }
    if (switching.regimes() != regimes)
      throw StructuralError("model: switching matrix size mismatch");
    if (assumptions.kappa0 <= 0.0 || assumptions.kappa0 > 1.0)
      throw ConfigError("model: kappa0 must lie in (0,1]");

    q_max = assumptions.q_max_override.value_or(switching.uniformization_bound());
    if (q_max == 0.0 && switching.uniformization_bound() > 0.0)
      throw ConfigError("model: q_max override is zero but Q is nonzero");

    x_sqrt.assign(regimes, {});
    for (int i = 0; i < regimes; ++i) x_sqrt[i] = symmetric_sqrt(diffusion[i].base());

    for (auto& k : jumps) {
      if (k.is_zero()) continue;
      if (!k.ratio) throw StructuralError("model: jump kernel missing thinning ratio");
      if (k.convention == JumpConvention::kCompensated)
        k.compensation_drift = compute_compensation_drift(k.rate, *k.dominating, *k.ratio, dim);
      else
        k.compensation_drift = Point(dim);
    }
  }

  // Drift actually applied by the sampler: declared b plus the small-jump
  // compensation shift for compensated kernels.
  Point effective_drift(const Point& x, int i) const {
    Point b = drift[i](x);
    const JumpKernel& k = jumps[i];
    if (!k.is_zero() && k.convention == JumpConvention::kCompensated) b += k.compensation_drift;
    return b;
  }

  // y = sqrt_a(x,i) * xi with cov(sqrt_a * xi) = a(x,i).
  Point diffusion_root_apply(const Point& x, int i, const Point& xi) const {
    const double s = std::sqrt(std::max(0.0, diffusion[i].scale_at(x)));
    const auto& m = x_sqrt[i];
    Point y(dim);
    for (int r = 0; r < dim; ++r) {
      double acc = 0.0;
      for (int c = 0; c < dim; ++c) acc += m[static_cast<std::size_t>(r) * dim + c] * xi[c];
      y[r] = s * acc;
    }
    return y;
  }

  // Scalar a(x,i) for d=1 fast paths and bridge corrections.
  double diffusion_scalar(const Point& x, int i) const {
    return diffusion[i].scale_at(x) * diffusion[i].base().at(0, 0);
  }

  bool markovian() const { return switching.markovian_by_construction(); }

 private:
  static std::vector<double> symmetric_sqrt(const SymmetricMatrix& a) {
    const int d = a.dim();
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = a.at(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw StructuralError("model: eigensolve failed");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd s = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    std::vector<double> out(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i) * d + j] = s(i, j);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Boundary data phi(x, i) on D^c x {1..m}.

struct BoundaryData {
  std::vector<ScalarFieldPtr> phi;  // one per regime
  double declared_sup = 0.0;        // M = sup phi; may be overridden

  static BoundaryData uniform(int regimes, ScalarFieldPtr f) {
    BoundaryData b;
    b.phi.assign(static_cast<std::size_t>(regimes), f);
    b.declared_sup = f->range().second;
    return b;
  }

  static BoundaryData per_regime(std::vector<ScalarFieldPtr> fs) {
    BoundaryData b;
    b.phi = std::move(fs);
    b.declared_sup = b.range().second;
    return b;
  }

  static BoundaryData constant(int regimes, double value) {
    return uniform(regimes, make_constant(value));
  }

  double operator()(const Point& x, int i) const { return (*phi[i])(x); }

  std::pair<double, double> range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& f : phi) {
      const auto [a, b] = f->range();
      lo = std::min(lo, a);
      hi = std::max(hi, b);
    }
    return {lo, hi};
  }

  bool nonnegative() const { return range().first >= 0.0; }
  bool identically_zero() const {
    const auto [lo, hi] = range();
    return lo == 0.0 && hi == 0.0;
  }
};

// ---------------------------------------------------------------------------
// Assumption checks.

enum class CheckStatus { kPass, kFail, kNotDeclared };

struct CheckWitness {
  Point x;
  int regime = 0;
  double value = 0.0;
  std::string note;
};

struct AssumptionCheck {
  std::string name;
  CheckStatus status = CheckStatus::kPass;
  std::string detail;
  std::optional<CheckWitness> witness;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;
  bool usable = false;

  const AssumptionCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct ValidateOptions {
  int samples = 10000;
  double sample_radius = 2.0;  // coefficients are probed on B(0, sample_radius)
  std::uint64_t seed = 0x5eedULL;
};

namespace detail {
inline Point sample_in_ball(CounterRng& rng, int dim, const Point& center, double radius) {
  const Point dir = sample_direction(rng, dim);
  const double rho = radius * std::pow(rng.uniform(), 1.0 / dim);
  return center + rho * dir;
}
}  // namespace detail

// Min/max eigenvalue of a(x,i) over a sample of (x, i) pairs.
inline std::pair<double, double> ellipticity_bounds(
    const ModelSpec& spec, const std::vector<std::pair<Point, int>>& sample_points) {
  if (sample_points.empty()) throw std::invalid_argument("ellipticity_bounds: empty sample");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (const auto& [x, i] : sample_points) {
    const SymmetricMatrix a = spec.diffusion[i].value_at(x);
    Eigen::MatrixXd m(spec.dim, spec.dim);
    for (int r = 0; r < spec.dim; ++r)
      for (int c = 0; c < spec.dim; ++c) {
        m(r, c) = a.at(r, c);
        if (std::abs(a.at(r, c) - a.at(c, r)) > 1e-12 * (1.0 + std::abs(a.at(r, c))))
          throw StructuralError("ellipticity_bounds: a(x,i) not symmetric");
      }
    es.compute(m, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
    hi = std::max(hi, es.eigenvalues().maxCoeff());
  }
  return {lo, hi};
}

// Checks (A1)-(A4) by sampling; the model is usable iff (A1)-(A3) pass.
inline ValidationReport validate_model(const ModelSpec& spec, ValidateOptions opt = {}) {
  ValidationReport report;
  const std::uint64_t key = substream_key(opt.seed, /*domain=*/0xA55E55ULL);

  // (A1): boundedness. Families are bounded by construction; confirm the
  // declared bounds on a sample and report them.
  {
    AssumptionCheck c;
    c.name = "A1";
    CounterRng rng(key, 1, RngChannel::kMisc);
    double worst = 0.0;
    bool ok = true;
    for (int s = 0; s < opt.samples && ok; ++s) {
      const Point x = detail::sample_in_ball(rng, spec.dim, Point(spec.dim), opt.sample_radius);
      for (int i = 0; i < spec.regimes; ++i) {
        const double bn = spec.drift[i](x).norm();
        worst = std::max(worst, bn);
        if (bn > spec.drift[i].bound() + 1e-9) {
          c.status = CheckStatus::kFail;
          c.witness = CheckWitness{x, i, bn, "drift exceeds declared bound"};
          ok = false;
          break;
        }
      }
    }
    std::ostringstream os;
    os << "max sampled |b| = " << worst << ", q_max = " << spec.q_max;
    c.detail = os.str();
    report.checks.push_back(std::move(c));
  }

  // (A2): uniform ellipticity, eigenvalues of a(x,i) within
  // [kappa0, 1/kappa0].
  {
    AssumptionCheck c;
    c.name = "A2";
    CounterRng rng(key, 2, RngChannel::kMisc);
    const double lo_req = spec.assumptions.kappa0;
    const double hi_req = 1.0 / spec.assumptions.kappa0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    bool ok = true;
    double lo_seen = std::numeric_limits<double>::infinity(), hi_seen = -lo_seen;
    for (int s = 0; s < opt.samples && ok; ++s) {
      const Point x = detail::sample_in_ball(rng, spec.dim, Point(spec.dim), opt.sample_radius);
      for (int i = 0; i < spec.regimes; ++i) {
        const SymmetricMatrix a = spec.diffusion[i].value_at(x);
        Eigen::MatrixXd m(spec.dim, spec.dim);
        for (int r = 0; r < spec.dim; ++r)
          for (int cc = 0; cc < spec.dim; ++cc) m(r, cc) = a.at(r, cc);
        es.compute(m, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        lo_seen = std::min(lo_seen, lo);
        hi_seen = std::max(hi_seen, hi);
        if (lo < lo_req - 1e-12 || hi > hi_req + 1e-12) {
          c.status = CheckStatus::kFail;
          c.witness = CheckWitness{x, i, lo < lo_req ? lo : hi,
                                   "eigenvalue outside [kappa0, 1/kappa0]"};
          ok = false;
          break;
        }
      }
    }
    std::ostringstream os;
    os << "sampled eigenvalues in [" << lo_seen << ", " << hi_seen << "], required ["
       << lo_req << ", " << hi_req << "]";
    c.detail = os.str();
    report.checks.push_back(std::move(c));
  }

  // (A3): dominated jump intensities with finite mass; thinning validity
  // r_i(x,z) in [0,1] on sampled pairs.
  {
    AssumptionCheck c;
    c.name = "A3";
    CounterRng rng(key, 3, RngChannel::kMisc);
    double total_mass = 0.0;
    bool ok = true;
    for (int i = 0; i < spec.regimes && ok; ++i) {
      const JumpKernel& k = spec.jumps[i];
      if (k.is_zero()) continue;
      total_mass += k.rate;
      for (int s = 0; s < opt.samples / spec.regimes; ++s) {
        const Point x = detail::sample_in_ball(rng, spec.dim, Point(spec.dim), opt.sample_radius);
        const Point z = k.dominating->sample(rng, spec.dim);
        const double r = (*k.ratio)(x, z);
        if (r < -1e-12 || r > 1.0 + 1e-12) {
          c.status = CheckStatus::kFail;
          c.witness = CheckWitness{x, i, r, "thinning ratio outside [0,1]"};
          ok = false;
          break;
        }
      }
    }
    std::ostringstream os;
    os << "dominating mass (kappa1 bound) = " << total_mass;
    c.detail = os.str();
    report.checks.push_back(std::move(c));
  }

  // (A4): comparability of jump densities, only for kernels declaring
  // (kappa2, beta). Sampled surrogate: r log-uniform in [0.05, 1],
  // x, y in B(x0, r/2), z in B(x0, r)^c within the dominating support.
  {
    AssumptionCheck c;
    c.name = "A4";
    CounterRng rng(key, 4, RngChannel::kMisc);
    bool any_declared = false;
    bool ok = true;
    for (int i = 0; i < spec.regimes && ok; ++i) {
      const JumpKernel& k = spec.jumps[i];
      if (k.is_zero() || !k.harnack.has_value()) continue;
      any_declared = true;
      for (int s = 0; s < opt.samples / spec.regimes; ++s) {
        const double r = 0.05 * std::pow(20.0, rng.uniform());
        const Point x0 = detail::sample_in_ball(rng, spec.dim, Point(spec.dim), opt.sample_radius);
        const Point x = detail::sample_in_ball(rng, spec.dim, x0, r / 2.0);
        const Point y = detail::sample_in_ball(rng, spec.dim, x0, r / 2.0);
        // z outside B(x0, r), at a sampled radius within the dominating reach
        const Point dir = detail::sample_direction(rng, spec.dim);
        const double reach = std::min(k.dominating->support_radius(), 4.0);
        if (reach <= r) continue;
        const double rho = r + rng.uniform() * (reach - r);
        const Point z = x0 + rho * dir;
        const double px = k.density(x, z - x);
        const double py = k.density(y, z - y);
        const double alpha_r = k.harnack->kappa2 * std::pow(r, -k.harnack->beta);
        if (px > alpha_r * py + 1e-12) {
          c.status = CheckStatus::kFail;
          c.witness = CheckWitness{z, i, py > 0.0 ? px / py : std::numeric_limits<double>::infinity(),
                                   "density ratio exceeds declared kappa2 r^-beta"};
          ok = false;
          break;
        }
      }
    }
    if (!any_declared) c.status = CheckStatus::kNotDeclared;
    report.checks.push_back(std::move(c));
  }

  report.usable = true;
  for (const auto& c : report.checks)
    if (c.name != "A4" && c.status == CheckStatus::kFail) report.usable = false;
  return report;
}

// ---------------------------------------------------------------------------
// Irreducibility of Q on a region.

enum class IrreducibilityMode { kIrreducible, kStrict };

struct RegimeLink {
  int from = 0;
  int to = 0;
  double inf_rate = 0.0;
  double positive_fraction = 0.0;
  bool active = false;
};

struct IrreducibilityReport {
  bool irreducible = false;
  IrreducibilityMode mode = IrreducibilityMode::kIrreducible;
  std::vector<RegimeLink> links;  // all ordered pairs i != j
  // connecting path per ordered pair (i, j), empty when disconnected
  std::vector<std::vector<int>> paths;
  std::optional<std::pair<int, int>> disconnected_pair;
};

inline IrreducibilityReport irreducibility_check(const ModelSpec& spec, const Region& region,
                                                 IrreducibilityMode mode,
                                                 int n_samples = 4096,
                                                 std::uint64_t seed = 0x5eedULL) {
  if (n_samples <= 0) throw std::invalid_argument("irreducibility_check: empty sample set");
  const int m = spec.regimes;
  IrreducibilityReport rep;
  rep.mode = mode;

  std::vector<Point> xs;
  xs.reserve(static_cast<std::size_t>(n_samples));
  CounterRng rng(substream_key(seed, 0x115EEDULL), 0, RngChannel::kMisc);
  const Ball bb = region.containing_ball();
  while (static_cast<int>(xs.size()) < n_samples) {
    const Point x = detail::sample_in_ball(rng, region.dim(), bb.center, bb.radius);
    if (region.contains(x)) xs.push_back(x);
  }

  std::vector<std::vector<bool>> edge(m, std::vector<bool>(m, false));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      RegimeLink link;
      link.from = i;
      link.to = j;
      link.inf_rate = std::numeric_limits<double>::infinity();
      int positive = 0;
      for (const Point& x : xs) {
        const double q = spec.switching.rate(x, i, j);
        link.inf_rate = std::min(link.inf_rate, q);
        if (q > 0.0) ++positive;
      }
      link.positive_fraction = static_cast<double>(positive) / xs.size();
      link.active = (mode == IrreducibilityMode::kStrict)
                        ? (link.inf_rate >= std::max(spec.assumptions.strict_rate_floor,
                                                     std::numeric_limits<double>::min()))
                        : (link.positive_fraction > 0.0);
      edge[i][j] = link.active;
      rep.links.push_back(link);
    }
  }

  // BFS path for every ordered pair.
  rep.irreducible = true;
  rep.paths.assign(static_cast<std::size_t>(m) * m, {});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      std::vector<int> prev(m, -1);
      std::vector<bool> seen(m, false);
      std::vector<int> queue{i};
      seen[i] = true;
      for (std::size_t q = 0; q < queue.size(); ++q) {
        const int u = queue[q];
        for (int v = 0; v < m; ++v)
          if (u != v && edge[u][v] && !seen[v]) {
            seen[v] = true;
            prev[v] = u;
            queue.push_back(v);
          }
      }
      if (!seen[j]) {
        rep.irreducible = false;
        if (!rep.disconnected_pair) rep.disconnected_pair = {i, j};
        continue;
      }
      std::vector<int>& path = rep.paths[static_cast<std::size_t>(i) * m + j];
      for (int v = j; v != -1; v = prev[v]) path.push_back(v);
      std::reverse(path.begin(), path.end());
    }
  }
  return rep;
}

}  // namespace swjd

#endif  // SWJD_MODEL_HPP
