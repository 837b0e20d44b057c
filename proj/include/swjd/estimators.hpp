#ifndef SWJD_ESTIMATORS_HPP
#define SWJD_ESTIMATORS_HPP

// Monte Carlo estimators for the probabilistic quantities the maximum
// principle / Harnack results are about: exit times, hitting probabilities,
// harmonic functions u(x,i) = E[phi(exit)], killed Green operators, and the
// jump compensator (Levy system) residual.
//
// All estimators fan out over path indices through parallel_reduce_paths and
// share the sampler's determinism contract; estimates are bit-reproducible
// functions of (model, inputs, seed, stream domain, path count).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "swjd/model.hpp"
#include "swjd/parallel.hpp"
#include "swjd/sampler.hpp"

namespace swjd {

struct McOptions {
  SamplerConfig sampler;
  std::uint64_t paths = 10000;
  int workers = 0;  // 0 = hardware concurrency; never affects values
};

struct EstimateResult {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  double h = 0.0;
  double wall_ms = 0.0;
  double killed_fraction = 0.0;
  double truncated_fraction = 0.0;
  bool warning = false;  // set when > 1% of paths were truncated
};

namespace detail {

struct MomentAcc {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t killed = 0;
  std::uint64_t truncated = 0;

  void add(double v) {
    ++n;
    sum += v;
    sum_sq += v * v;
  }
  void merge(MomentAcc&& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
    killed += o.killed;
    truncated += o.truncated;
  }
};

inline EstimateResult finalize(const MomentAcc& acc, const McOptions& opt, double wall_ms) {
  EstimateResult r;
  r.n = acc.n;
  r.seed = opt.sampler.seed;
  r.h = opt.sampler.step;
  r.wall_ms = wall_ms;
  if (acc.n > 0) {
    r.value = acc.sum / static_cast<double>(acc.n);
    if (acc.n > 1) {
      const double var =
          std::max(0.0, (acc.sum_sq - acc.sum * acc.sum / static_cast<double>(acc.n)) /
                            static_cast<double>(acc.n - 1));
      r.std_error = std::sqrt(var / static_cast<double>(acc.n));
    }
    r.killed_fraction = static_cast<double>(acc.killed) / static_cast<double>(acc.n);
    r.truncated_fraction = static_cast<double>(acc.truncated) / static_cast<double>(acc.n);
    r.warning = r.truncated_fraction > 0.01;
  }
  return r;
}

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Exit time of a region.

struct ExitSample {
  double tau = 0.0;
  Point x;
  int regime = 0;  // kCemetery when killed
  bool truncated = false;
};

struct ExitTimeEstimate {
  EstimateResult mean_time;
  std::vector<double> tail_times;
  std::vector<EstimateResult> tail_probs;  // empirical P(tau <= t)
  std::vector<double> samples;             // tau per path (optional)
};

// Mean exit time and empirical tail. Killing counts as leaving (the killed
// process is in the cemetery, outside every region); truncated paths
// contribute tau = t_max and set the warning flag when frequent.
inline ExitTimeEstimate estimate_exit_time(const ModelSpec& spec, const Region& region,
                                           const Point& x0, int regime0, const McOptions& opt,
                                           std::vector<double> tail_times = {},
                                           bool collect_samples = false) {
  if (!region.contains(x0)) throw std::invalid_argument("estimate_exit_time: start outside region");
  detail::Stopwatch watch;
  const StopRule stop = StopRule::exit_region(region);

  struct Acc {
    detail::MomentAcc tau;
    std::vector<std::uint64_t> tail;
    std::vector<double> samples;
    void merge(Acc&& o) {
      tau.merge(std::move(o.tau));
      if (tail.size() < o.tail.size()) tail.resize(o.tail.size(), 0);
      for (std::size_t k = 0; k < o.tail.size(); ++k) tail[k] += o.tail[k];
      samples.insert(samples.end(), o.samples.begin(), o.samples.end());
    }
  };

  Acc total = parallel_reduce_paths<Acc>(
      opt.paths, opt.workers, [&](std::uint64_t idx, Acc& acc) {
        detail::NullSink sink;
        const PathTerminal end = run_path(spec, x0, regime0, stop, opt.sampler, idx, sink);
        if (acc.tail.empty() && !tail_times.empty()) acc.tail.assign(tail_times.size(), 0);
        acc.tau.add(end.t);
        if (end.killed()) ++acc.tau.killed;
        if (end.truncated()) ++acc.tau.truncated;
        for (std::size_t k = 0; k < tail_times.size(); ++k)
          if (end.t <= tail_times[k]) ++acc.tail[k];
        if (collect_samples) acc.samples.push_back(end.t);
      });

  ExitTimeEstimate out;
  out.mean_time = detail::finalize(total.tau, opt, watch.ms());
  out.tail_times = std::move(tail_times);
  for (std::size_t k = 0; k < out.tail_times.size(); ++k) {
    const double p = total.tail.empty()
                         ? 0.0
                         : static_cast<double>(total.tail[k]) / static_cast<double>(opt.paths);
    EstimateResult r = out.mean_time;
    r.value = p;
    r.std_error = std::sqrt(std::max(0.0, p * (1.0 - p) / static_cast<double>(opt.paths)));
    out.tail_probs.push_back(r);
  }
  out.samples = std::move(total.samples);
  return out;
}

// ---------------------------------------------------------------------------
// Hitting probability: P(path enters A, with the required regime, strictly
// before leaving the container).

inline EstimateResult estimate_hitting_prob(const ModelSpec& spec, const Region& target,
                                            int target_regime, const Region& container,
                                            const Point& x0, int regime0,
                                            const McOptions& opt) {
  detail::Stopwatch watch;
  const StopRule stop = StopRule::hit_set(target, container, target_regime);
  detail::MomentAcc total =
      parallel_reduce_paths<detail::MomentAcc>(opt.paths, opt.workers, [&](std::uint64_t idx,
                                                                           detail::MomentAcc& acc) {
        detail::NullSink sink;
        const PathTerminal end = run_path(spec, x0, regime0, stop, opt.sampler, idx, sink);
        acc.add(end.cause == TerminalCause::kHit ? 1.0 : 0.0);
        if (end.killed()) ++acc.killed;
        if (end.truncated()) ++acc.truncated;
      });
  EstimateResult r = detail::finalize(total, opt, watch.ms());
  // binomial standard error
  r.std_error = std::sqrt(std::max(0.0, r.value * (1.0 - r.value) / static_cast<double>(r.n)));
  return r;
}

// ---------------------------------------------------------------------------
// Harmonic function u(x,i) = E_{x,i}[ phi(X_{tau_D}, Lambda_{tau_D}) ], with
// killed paths contributing zero (cemetery convention) and truncated paths
// contributing zero plus a warning.

inline EstimateResult estimate_harmonic(const ModelSpec& spec, const Region& domain,
                                        const BoundaryData& phi, const Point& x0, int regime0,
                                        const McOptions& opt) {
  detail::Stopwatch watch;
  const StopRule stop = StopRule::exit_region(domain);
  detail::MomentAcc total =
      parallel_reduce_paths<detail::MomentAcc>(opt.paths, opt.workers, [&](std::uint64_t idx,
                                                                           detail::MomentAcc& acc) {
        detail::NullSink sink;
        const PathTerminal end = run_path(spec, x0, regime0, stop, opt.sampler, idx, sink);
        double v = 0.0;
        if (end.cause == TerminalCause::kExited) v = phi(end.x, end.regime);
        if (end.killed()) ++acc.killed;
        if (end.truncated()) ++acc.truncated;
        acc.add(v);
      });
  return detail::finalize(total, opt, watch.ms());
}

inline std::vector<EstimateResult> estimate_harmonic_many(
    const ModelSpec& spec, const Region& domain, const BoundaryData& phi,
    const std::vector<std::pair<Point, int>>& queries, const McOptions& opt) {
  std::vector<EstimateResult> out;
  out.reserve(queries.size());
  McOptions o = opt;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    // one stream domain per query point keeps the per-node paths independent
    o.sampler.stream_domain = opt.sampler.stream_domain + 0x1000 * (q + 1);
    out.push_back(estimate_harmonic(spec, domain, phi, queries[q].first, queries[q].second, o));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Killed Green operator of the single-regime process X^i:
//   G_D^i f (x) = E_x int_0^{tau_D} exp(int_0^s q_ii(X_r) dr) f(X_s) ds,
// time integral by left-endpoint rectangle rule on the event-augmented grid,
// running Feynman-Kac weight by the same rule.

inline EstimateResult estimate_green(const ModelSpec& spec, int regime, const Region& domain,
                                     const std::function<double(const Point&)>& f, const Point& x0,
                                     const McOptions& opt) {
  if (!domain.contains(x0)) throw std::invalid_argument("estimate_green: start outside region");
  detail::Stopwatch watch;
  const StopRule stop = StopRule::exit_region(domain);

  struct GreenSink {
    const ModelSpec* spec;
    int regime;
    double integral = 0.0;
    double weight = 1.0;
    void segment(double, double dt, const Point& x, int i) {
      integral += weight * f_val(x) * dt;
      weight *= std::exp(spec->switching.diagonal(x, i) * dt);
    }
    void event(double, const Point&, int, EventKind) {}
    const std::function<double(const Point&)>* f = nullptr;
    double f_val(const Point& x) const { return (*f)(x); }
  };

  detail::MomentAcc total =
      parallel_reduce_paths<detail::MomentAcc>(opt.paths, opt.workers, [&](std::uint64_t idx,
                                                                           detail::MomentAcc& acc) {
        GreenSink sink;
        sink.spec = &spec;
        sink.regime = regime;
        sink.f = &f;
        const PathTerminal end = run_path(spec, x0, regime, stop, opt.sampler, idx, sink,
                                          /*enable_switching=*/false);
        if (end.truncated()) ++acc.truncated;
        acc.add(sink.integral);
      });
  return detail::finalize(total, opt, watch.ms());
}

// ---------------------------------------------------------------------------
// Levy system residual: empirical jump counts from A to B in regime i0 minus
// the accumulated compensator int_0^t 1_A(X_s) 1_{i0}(Lambda_s)
// pi_{i0}(X_s, B - X_s) ds, both on the same paths. The set function
// pi(x, B - x) is tabulated on a grid over A by midpoint quadrature over B
// and interpolated along the path.

struct CompensatorTable {
  // axis-aligned grid over the closure of A
  Point lo;
  Point hi;
  int nodes_per_axis = 0;
  std::vector<double> values;  // row-major over the grid
  bool coarse_warning = false;

  double lookup(const Point& x) const;
};

inline double CompensatorTable::lookup(const Point& x) const {
  // multilinear interpolation, clamped to the table box
  const int d = x.dim;
  std::array<double, kMaxDim> frac{};
  std::array<int, kMaxDim> base{};
  for (int k = 0; k < d; ++k) {
    const double span = hi[k] - lo[k];
    double u = span > 0 ? (x[k] - lo[k]) / span * (nodes_per_axis - 1) : 0.0;
    u = std::clamp(u, 0.0, static_cast<double>(nodes_per_axis - 1));
    base[k] = std::min(nodes_per_axis - 2, static_cast<int>(u));
    base[k] = std::max(0, base[k]);
    frac[k] = u - base[k];
  }
  double acc = 0.0;
  const int corners = 1 << d;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t offset = 0;
    std::size_t stride = 1;
    for (int k = d - 1; k >= 0; --k) {
      const int bit = (c >> k) & 1;
      w *= bit ? frac[k] : 1.0 - frac[k];
      offset += stride * static_cast<std::size_t>(base[k] + bit);
      stride *= static_cast<std::size_t>(nodes_per_axis);
    }
    acc += w * values[offset];
  }
  return acc;
}

// Tabulates x -> pi_i(x, B - x) for x on a grid over A.
inline CompensatorTable build_compensator_table(const ModelSpec& spec, int regime,
                                                const Region& set_a, const Region& set_b,
                                                int quad_nodes_per_axis = 64,
                                                int table_nodes_per_axis = 129) {
  const int d = spec.dim;
  const JumpKernel& kernel = spec.jumps[regime];
  CompensatorTable table;
  const Ball ba = set_a.containing_ball();
  table.lo = Point(d);
  table.hi = Point(d);
  for (int k = 0; k < d; ++k) {
    table.lo[k] = ba.center[k] - ba.radius;
    table.hi[k] = ba.center[k] + ba.radius;
  }
  table.nodes_per_axis = table_nodes_per_axis;
  table.coarse_warning = quad_nodes_per_axis < 16;

  // midpoint quadrature cells over B's bounding box, filtered by membership
  const Ball bb = set_b.containing_ball();
  std::vector<Point> qnodes;
  double cell = 1.0;
  {
    std::vector<int> idx(d, 0);
    const double step0 = 2.0 * bb.radius / quad_nodes_per_axis;
    cell = std::pow(step0, d);
    while (true) {
      Point y(d);
      for (int k = 0; k < d; ++k) y[k] = bb.center[k] - bb.radius + (idx[k] + 0.5) * step0;
      if (set_b.contains(y)) qnodes.push_back(y);
      int k = 0;
      while (k < d && ++idx[k] == quad_nodes_per_axis) idx[k++] = 0;
      if (k == d) break;
    }
  }

  std::size_t total_nodes = 1;
  for (int k = 0; k < d; ++k) total_nodes *= static_cast<std::size_t>(table_nodes_per_axis);
  table.values.assign(total_nodes, 0.0);
  std::vector<int> idx(d, 0);
  for (std::size_t flat = 0; flat < total_nodes; ++flat) {
    Point x(d);
    std::size_t rem = flat;
    for (int k = d - 1; k >= 0; --k) {
      const std::size_t i = rem % static_cast<std::size_t>(table_nodes_per_axis);
      rem /= static_cast<std::size_t>(table_nodes_per_axis);
      x[k] = table.lo[k] + (table.hi[k] - table.lo[k]) * static_cast<double>(i) /
                               (table_nodes_per_axis - 1);
    }
    double acc = 0.0;
    if (!kernel.is_zero())
      for (const Point& y : qnodes) acc += kernel.density(x, y - x);
    table.values[flat] = acc * cell;
  }
  return table;
}

struct LevyResidualEstimate {
  EstimateResult residual;      // count term minus compensator term
  EstimateResult count_term;    // E sum_{s<=t} 1{X_{s-} in A, X_s in B, Lambda_s = i0}
  EstimateResult compensator;   // E int_0^t 1_A 1_{i0} pi(X_s, B - X_s) ds
  bool quadrature_warning = false;
};

inline LevyResidualEstimate levy_system_residual(const ModelSpec& spec, const Region& set_a,
                                                 const Region& set_b, int regime_i0,
                                                 double horizon, const Point& x0, int regime0,
                                                 const McOptions& opt,
                                                 int quad_nodes_per_axis = 64) {
  {
    // positive distance between A and B
    const Ball ba = set_a.containing_ball();
    const Ball bbl = set_b.containing_ball();
    if (distance(ba.center, bbl.center) <= 0.0)
      throw std::invalid_argument("levy_system_residual: sets must be a positive distance apart");
  }
  detail::Stopwatch watch;
  const CompensatorTable table =
      build_compensator_table(spec, regime_i0, set_a, set_b, quad_nodes_per_axis);
  const StopRule stop = StopRule::horizon(horizon);

  struct LevySink {
    const Region* a;
    const Region* b;
    const CompensatorTable* table;
    int i0;
    Point prev_x;
    double count = 0.0;
    double comp = 0.0;
    void segment(double, double dt, const Point& x, int i) {
      if (i == i0 && a->contains(x)) comp += table->lookup(x) * dt;
      prev_x = x;
    }
    void event(double, const Point& x, int i, EventKind kind) {
      if (kind == EventKind::kJump && i == i0 && a->contains(prev_x) && b->contains(x)) count += 1.0;
      prev_x = x;
    }
  };

  struct Acc {
    detail::MomentAcc diff, cnt, cmp;
    void merge(Acc&& o) {
      diff.merge(std::move(o.diff));
      cnt.merge(std::move(o.cnt));
      cmp.merge(std::move(o.cmp));
    }
  };

  Acc total = parallel_reduce_paths<Acc>(
      opt.paths, opt.workers, [&](std::uint64_t idx, Acc& acc) {
        LevySink sink;
        sink.a = &set_a;
        sink.b = &set_b;
        sink.table = &table;
        sink.i0 = regime_i0;
        sink.prev_x = x0;
        const PathTerminal end = run_path(spec, x0, regime0, stop, opt.sampler, idx, sink);
        if (end.killed()) ++acc.diff.killed;
        if (end.truncated()) ++acc.diff.truncated;
        acc.diff.add(sink.count - sink.comp);
        acc.cnt.add(sink.count);
        acc.cmp.add(sink.comp);
      });

  LevyResidualEstimate out;
  out.residual = detail::finalize(total.diff, opt, watch.ms());
  out.count_term = detail::finalize(total.cnt, opt, 0.0);
  out.compensator = detail::finalize(total.cmp, opt, 0.0);
  out.quadrature_warning = table.coarse_warning;
  return out;
}

}  // namespace swjd

#endif  // SWJD_ESTIMATORS_HPP
