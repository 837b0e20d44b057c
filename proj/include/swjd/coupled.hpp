#ifndef SWJD_COUPLED_HPP
#define SWJD_COUPLED_HPP

// Solver for the coupled harmonic system via the single-regime
// decomposition
//   u(x,i) = v_i(x) + sum_{j != i} G_D^i ( q_ij u(., j) ) (x),
// iterated as a fixed point on a lattice.
//
// The v_i boundary terms and the Green coupling are estimated with the
// killed single-regime processes X~^i. Because the interpolated coupling
// term is linear in the node values, each sampled path contributes a row of
// a linear operator W over (node, regime) pairs:
//   W[(x,i)][(y,j)] = MC mean of int_0^tau e_{q_ii}(s) q_ij(X_s) w_y(X_s) ds,
// with w_y the interpolation weight of node y. The Green samples are drawn
// once, so the iteration  u <- v + W u  is deterministic and its contraction
// is observable; standard errors come from disjoint path batches solved
// exactly.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "swjd/estimators.hpp"
#include "swjd/lattice.hpp"
#include "swjd/model.hpp"
#include "swjd/parallel.hpp"
#include "swjd/sampler.hpp"

namespace swjd {

class SolveError : public std::runtime_error {
 public:
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

// Stream-domain derivation for per-(node, regime) path sets. Exposed so
// callers can reproduce an estimator's exact paths (shared-seed coupling).
inline constexpr std::uint64_t kBoundaryTermSalt = 0x9000;
inline constexpr std::uint64_t kGreenApplySalt = 0xA000;
inline constexpr std::uint64_t kFrozenGreenSalt = 0xB000;
inline constexpr std::uint64_t kDirectCompareSalt = 0xC000;

inline std::uint64_t node_stream_domain(std::uint64_t base, std::uint64_t salt, int node,
                                        int regime) {
  return base + salt + 131 * static_cast<std::uint64_t>(node) +
         static_cast<std::uint64_t>(regime);
}

// Boundary term v_i(x) = E_x[ e_{q_ii}(tau_D) phi(X^i_{tau_D}, i) ] for one
// regime on every lattice node.
inline LatticeField estimate_boundary_term(const ModelSpec& spec, int regime,
                                           const Region& domain, const BoundaryData& phi,
                                           const Lattice& lattice, const McOptions& opt) {
  LatticeField field(&lattice, 1);
  const StopRule stop = StopRule::exit_region(domain);
  for (int n = 0; n < lattice.size(); ++n) {
    McOptions o = opt;
    o.sampler.stream_domain =
        node_stream_domain(opt.sampler.stream_domain, kBoundaryTermSalt, n, regime);

    struct WeightSink {
      const ModelSpec* spec;
      double log_weight = 0.0;
      void segment(double, double dt, const Point& x, int i) {
        log_weight += spec->switching.diagonal(x, i) * dt;
      }
      void event(double, const Point&, int, EventKind) {}
    };

    detail::MomentAcc acc = parallel_reduce_paths<detail::MomentAcc>(
        o.paths, o.workers, [&](std::uint64_t idx, detail::MomentAcc& a) {
          WeightSink sink{&spec};
          const PathTerminal end = run_path(spec, lattice.node(n), regime, stop, o.sampler, idx,
                                            sink, /*enable_switching=*/false);
          double v = 0.0;
          if (end.cause == TerminalCause::kExited)
            v = std::exp(sink.log_weight) * phi(end.x, regime);
          else if (end.truncated())
            ++a.truncated;
          a.add(v);
        });
    const EstimateResult r = detail::finalize(acc, o, 0.0);
    field.at(n, 0) = r.value;
    field.stderr_at(n, 0) = r.std_error;
  }
  return field;
}

// One application of the killed Green operator to an interpolated field:
// G_D^i ( q_ij g~ ) (x) at every lattice node, freshly sampled.
struct GreenApplyResult {
  LatticeField values;                // one regime slice
  std::uint64_t extrapolations = 0;   // constant-extrapolation queries
};

inline GreenApplyResult green_apply(const ModelSpec& spec, int regime, int source_regime,
                                    const Region& domain, const LatticeField& g,
                                    const Lattice& lattice, const McOptions& opt) {
  GreenApplyResult out;
  out.values = LatticeField(&lattice, 1);
  const StopRule stop = StopRule::exit_region(domain);
  for (int n = 0; n < lattice.size(); ++n) {
    McOptions o = opt;
    o.sampler.stream_domain =
        node_stream_domain(opt.sampler.stream_domain, kGreenApplySalt, n, regime);

    struct ApplySink {
      const ModelSpec* spec;
      const LatticeField* g;
      int i, j;
      double integral = 0.0;
      double log_weight = 0.0;
      std::uint64_t extrapolations = 0;
      void segment(double, double dt, const Point& x, int regime_now) {
        const double q = spec->switching.rate(x, i, j);
        if (q != 0.0)
          integral += std::exp(log_weight) * q * g->interpolate(x, 0, &extrapolations) * dt;
        log_weight += spec->switching.diagonal(x, regime_now) * dt;
      }
      void event(double, const Point&, int, EventKind) {}
    };

    struct Acc {
      detail::MomentAcc m;
      std::uint64_t extrapolations = 0;
      void merge(Acc&& o) {
        m.merge(std::move(o.m));
        extrapolations += o.extrapolations;
      }
    };
    Acc acc = parallel_reduce_paths<Acc>(o.paths, o.workers, [&](std::uint64_t idx, Acc& a) {
      ApplySink sink{&spec, &g, regime, source_regime};
      const PathTerminal end = run_path(spec, lattice.node(n), regime, stop, o.sampler, idx,
                                        sink, /*enable_switching=*/false);
      if (end.truncated()) ++a.m.truncated;
      a.m.add(sink.integral);
      a.extrapolations += sink.extrapolations;
    });
    const EstimateResult r = detail::finalize(acc.m, o, 0.0);
    out.values.at(n, 0) = r.value;
    out.values.stderr_at(n, 0) = r.std_error;
    out.extrapolations += acc.extrapolations;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frozen Green samples: v and W estimated once per (node, regime), with
// per-batch replicates for error bars.

struct FrozenGreen {
  const Lattice* lattice = nullptr;
  int regimes = 0;
  int batches = 0;
  Eigen::VectorXd v;                    // (nodes * m)
  Eigen::VectorXd v_se;
  Eigen::MatrixXd w;                    // (nodes * m) x (nodes * m)
  std::vector<Eigen::VectorXd> v_batch;
  std::vector<Eigen::MatrixXd> w_batch;
  std::uint64_t extrapolations = 0;

  int index(int node, int regime) const { return node * regimes + regime; }
};

inline FrozenGreen sample_frozen_green(const ModelSpec& spec, const Region& domain,
                                       const BoundaryData& phi, const Lattice& lattice,
                                       const McOptions& opt, int batches = 10) {
  FrozenGreen fg;
  fg.lattice = &lattice;
  fg.regimes = spec.regimes;
  fg.batches = batches;
  const int dim = lattice.size() * spec.regimes;
  fg.v = Eigen::VectorXd::Zero(dim);
  fg.v_se = Eigen::VectorXd::Zero(dim);
  fg.w = Eigen::MatrixXd::Zero(dim, dim);
  fg.v_batch.assign(batches, Eigen::VectorXd::Zero(dim));
  fg.w_batch.assign(batches, Eigen::MatrixXd::Zero(dim, dim));

  const StopRule stop = StopRule::exit_region(domain);

  struct RowAcc {
    std::vector<double> row;      // W contributions of this path set
    std::vector<double> row_b;    // per-batch rows, batches x dim
    double v_sum = 0.0, v_sq = 0.0;
    std::vector<double> v_b;
    std::uint64_t n = 0, truncated = 0, extrapolations = 0;
    void merge(RowAcc&& o) {
      if (row.empty()) {
        *this = std::move(o);
        return;
      }
      if (o.row.empty()) return;
      for (std::size_t k = 0; k < row.size(); ++k) row[k] += o.row[k];
      for (std::size_t k = 0; k < row_b.size(); ++k) row_b[k] += o.row_b[k];
      for (std::size_t k = 0; k < v_b.size(); ++k) v_b[k] += o.v_b[k];
      v_sum += o.v_sum;
      v_sq += o.v_sq;
      n += o.n;
      truncated += o.truncated;
      extrapolations += o.extrapolations;
    }
  };

  // Sink accumulating both the boundary term weight and the W row of one path.
  struct PathSink {
    const ModelSpec* spec;
    const Lattice* lattice;
    int i;
    double log_weight = 0.0;
    std::vector<double>* path_row;  // length nodes * m, cleared per path
    std::uint64_t extrapolations = 0;
    void segment(double, double dt, const Point& x, int) {
      const double e = std::exp(log_weight);
      const Lattice::WeightSet ws = lattice->interpolation_weights(x);
      if (ws.extrapolated) ++extrapolations;
      for (int j = 0; j < spec->regimes; ++j) {
        if (j == i) continue;
        const double q = spec->switching.rate(x, i, j);
        if (q == 0.0) continue;
        for (int k = 0; k < ws.count; ++k)
          (*path_row)[static_cast<std::size_t>(ws.entries[k].node) * spec->regimes + j] +=
              e * q * ws.entries[k].w * dt;
      }
      log_weight += spec->switching.diagonal(x, i) * dt;
    }
    void event(double, const Point&, int, EventKind) {}
  };

  for (int n = 0; n < lattice.size(); ++n) {
    for (int i = 0; i < spec.regimes; ++i) {
      McOptions o = opt;
      o.sampler.stream_domain =
          node_stream_domain(opt.sampler.stream_domain, kFrozenGreenSalt, n, i);
      const std::uint64_t paths_per_batch = std::max<std::uint64_t>(1, opt.paths / batches);

      RowAcc total = parallel_reduce_paths<RowAcc>(
          o.paths, o.workers, [&](std::uint64_t idx, RowAcc& acc) {
            if (acc.row.empty()) {
              acc.row.assign(static_cast<std::size_t>(dim), 0.0);
              acc.row_b.assign(static_cast<std::size_t>(dim) * batches, 0.0);
              acc.v_b.assign(static_cast<std::size_t>(batches), 0.0);
            }
            thread_local std::vector<double> path_row;
            path_row.assign(static_cast<std::size_t>(dim), 0.0);
            PathSink sink{&spec, &lattice, i, 0.0, &path_row};
            const PathTerminal end = run_path(spec, lattice.node(n), i, stop, o.sampler, idx,
                                              sink, /*enable_switching=*/false);
            double v = 0.0;
            if (end.cause == TerminalCause::kExited)
              v = std::exp(sink.log_weight) * phi(end.x, i);
            else if (end.truncated())
              ++acc.truncated;
            const int b = static_cast<int>(std::min<std::uint64_t>(idx / paths_per_batch,
                                                                   batches - 1));
            acc.v_sum += v;
            acc.v_sq += v * v;
            acc.v_b[b] += v;
            ++acc.n;
            acc.extrapolations += sink.extrapolations;
            for (int k = 0; k < dim; ++k) {
              if (path_row[static_cast<std::size_t>(k)] == 0.0) continue;
              acc.row[static_cast<std::size_t>(k)] += path_row[static_cast<std::size_t>(k)];
              acc.row_b[static_cast<std::size_t>(b) * dim + k] +=
                  path_row[static_cast<std::size_t>(k)];
            }
          });

      const int row_index = fg.index(n, i);
      const double inv_n = 1.0 / static_cast<double>(total.n);
      fg.v(row_index) = total.v_sum * inv_n;
      const double var =
          std::max(0.0, (total.v_sq - total.v_sum * total.v_sum * inv_n) /
                            std::max<double>(1.0, static_cast<double>(total.n - 1)));
      fg.v_se(row_index) = std::sqrt(var * inv_n);
      for (int k = 0; k < dim; ++k) fg.w(row_index, k) = total.row[static_cast<std::size_t>(k)] * inv_n;
      fg.extrapolations += total.extrapolations;

      for (int b = 0; b < batches; ++b) {
        const std::uint64_t nb = (b == batches - 1)
                                     ? opt.paths - paths_per_batch * (batches - 1)
                                     : paths_per_batch;
        const double inv_nb = nb > 0 ? 1.0 / static_cast<double>(nb) : 0.0;
        fg.v_batch[static_cast<std::size_t>(b)](row_index) =
            total.v_b[static_cast<std::size_t>(b)] * inv_nb;
        for (int k = 0; k < dim; ++k)
          fg.w_batch[static_cast<std::size_t>(b)](row_index, k) =
              total.row_b[static_cast<std::size_t>(b) * dim + k] * inv_nb;
      }
    }
  }
  return fg;
}

// ---------------------------------------------------------------------------

struct FixedPointTrace {
  std::vector<double> update_norms;  // sup-norm per iteration
  bool converged = false;
  int iterations = 0;
  double tolerance = 0.0;
};

struct FixedPointSolution {
  LatticeField u;  // (nodes x regimes), with batch-replicate standard errors
  FixedPointTrace trace;
  FrozenGreen green;  // the frozen samples, reusable by callers
};

// Iterates u <- v + W u on the frozen Green samples. Stops when the sup-norm
// update drops below tol (default: max(1e-3, 3 x median stderr of v));
// update norms that fail to decrease over 3 consecutive iterations raise
// SolveError (tolerance below the Monte Carlo noise floor).
inline FixedPointSolution fixed_point_solve(const ModelSpec& spec, const Region& domain,
                                            const BoundaryData& phi, const Lattice& lattice,
                                            const McOptions& opt, int max_iter = 200,
                                            double tol = 0.0, int batches = 10) {
  FixedPointSolution sol;
  sol.green = sample_frozen_green(spec, domain, phi, lattice, opt, batches);
  const FrozenGreen& fg = sol.green;
  const int dim = lattice.size() * spec.regimes;

  if (tol <= 0.0) {
    std::vector<double> ses(fg.v_se.data(), fg.v_se.data() + dim);
    std::nth_element(ses.begin(), ses.begin() + dim / 2, ses.end());
    tol = std::max(1e-3, 3.0 * ses[static_cast<std::size_t>(dim / 2)]);
  }

  Eigen::VectorXd u = fg.v;
  int rising = 0;
  double prev_norm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = fg.v + fg.w * u;
    const double delta = (next - u).lpNorm<Eigen::Infinity>();
    sol.trace.update_norms.push_back(delta);
    u = next;
    ++sol.trace.iterations;
    if (delta < tol) {
      sol.trace.converged = true;
      break;
    }
    rising = delta >= prev_norm ? rising + 1 : 0;
    if (rising >= 3)
      throw SolveError("fixed_point_solve: update norms non-decreasing over 3 iterations");
    prev_norm = delta;
  }
  sol.trace.tolerance = tol;

  // batch replicates, solved exactly, give per-entry standard errors
  Eigen::MatrixXd batch_values(dim, fg.batches);
  for (int b = 0; b < fg.batches; ++b) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(dim, dim) - fg.w_batch[b];
    batch_values.col(b) = a.partialPivLu().solve(fg.v_batch[b]);
  }

  sol.u = LatticeField(&lattice, spec.regimes);
  for (int n = 0; n < lattice.size(); ++n)
    for (int i = 0; i < spec.regimes; ++i) {
      const int k = fg.index(n, i);
      sol.u.at(n, i) = u(k);
      const double mean = batch_values.row(k).mean();
      double var = 0.0;
      for (int b = 0; b < fg.batches; ++b) {
        const double d = batch_values(k, b) - mean;
        var += d * d;
      }
      var /= std::max(1, fg.batches - 1);
      sol.u.stderr_at(n, i) = std::sqrt(var / fg.batches);
    }
  return sol;
}

// ---------------------------------------------------------------------------
// Direct switched Monte Carlo at every node versus a solved field.

struct NodeDiscrepancy {
  int node = 0;
  int regime = 0;
  double fixed_point = 0.0;
  double direct = 0.0;
  double direct_se = 0.0;
  double z = 0.0;
};

// z-score with a floating-point floor on the standard error: differences at
// the roundoff scale are not statistical evidence.
inline double z_score(double difference, double se, double scale) {
  const double floor = 1e-13 * std::max(1.0, std::abs(scale));
  return difference / std::max(se, floor);
}

struct DiscrepancyReport {
  std::vector<NodeDiscrepancy> nodes;
  double max_abs_z = 0.0;
  double mean_abs_error = 0.0;
  double max_abs_error = 0.0;
};

inline DiscrepancyReport compare_direct(const LatticeField& u_fixed, const ModelSpec& spec,
                                        const Region& domain, const BoundaryData& phi,
                                        const McOptions& opt) {
  DiscrepancyReport rep;
  const Lattice& lattice = u_fixed.lattice();
  for (int n = 0; n < lattice.size(); ++n)
    for (int i = 0; i < spec.regimes; ++i) {
      McOptions o = opt;
      o.sampler.stream_domain =
          node_stream_domain(opt.sampler.stream_domain, kDirectCompareSalt, n, i);
      const EstimateResult direct =
          estimate_harmonic(spec, domain, phi, lattice.node(n), i, o);
      NodeDiscrepancy d;
      d.node = n;
      d.regime = i;
      d.fixed_point = u_fixed.at(n, i);
      d.direct = direct.value;
      d.direct_se = direct.std_error;
      const double se =
          std::sqrt(direct.std_error * direct.std_error +
                    u_fixed.stderr_at(n, i) * u_fixed.stderr_at(n, i));
      const double err = d.fixed_point - d.direct;
      d.z = se > 0.0 ? err / se : (err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      rep.max_abs_z = std::max(rep.max_abs_z, std::abs(d.z));
      rep.mean_abs_error += std::abs(err);
      rep.max_abs_error = std::max(rep.max_abs_error, std::abs(err));
      rep.nodes.push_back(d);
    }
  if (!rep.nodes.empty()) rep.mean_abs_error /= static_cast<double>(rep.nodes.size());
  return rep;
}

}  // namespace swjd

#endif  // SWJD_COUPLED_HPP
