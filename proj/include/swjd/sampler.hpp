#ifndef SWJD_SAMPLER_HPP
#define SWJD_SAMPLER_HPP

// Path sampler for the two-component process (X_t, Lambda_t).
//
// Construction per Euler step of size h, in this fixed order:
//   1. diffusion:  x += b_eff(x,i) h + G,  G ~ N(0, 2 a(x,i) h)
//   2. jump:       with prob 1 - exp(-Lambda_i h) draw one candidate from the
//                  dominating density, accept with prob r_i(x,z) (thinning)
//   3. switching:  uniformized against q_max; given an event at (x,i) switch
//                  to j with prob q_ij(x)/q_max, kill with prob
//                  kappa(x,i)/q_max, otherwise a phantom event
// At most one jump and one switching event fire per step (O(h^2) error).
//
// Exit detection: on 1D regions the default is a Brownian-bridge crossing
// test per diffusion substep (exit time set to the step midpoint, exit
// position on the boundary); otherwise exits are detected at the first
// event time with X outside the region. Grid detection can be forced via
// SamplerConfig::exit_correction.
//
// Determinism: every draw comes from counter-based streams keyed by
// (seed, stream domain, path index, channel), so a trajectory is a pure
// function of those plus the model and stop rule.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "swjd/model.hpp"
#include "swjd/rng.hpp"
#include "swjd/trajectory.hpp"

namespace swjd {

enum class ExitCorrection { kAuto, kGrid, kBridge };

struct SamplerConfig {
  double step = 1e-3;   // h
  double t_max = 1e3;   // hard horizon; reaching it marks the path truncated
  std::uint64_t seed = 1;
  std::uint64_t stream_domain = 0;  // separates independent estimator runs
  ExitCorrection exit_correction = ExitCorrection::kAuto;

  void check() const {
    if (step <= 0.0) throw ConfigError("sampler: step must be positive");
    if (step > t_max) throw ConfigError("sampler: step must not exceed t_max");
  }

  std::uint64_t stream_key() const { return substream_key(seed, stream_domain); }
};

struct StopRule {
  enum class Kind { kHorizon, kExitRegion, kHitSet, kFirstSwitch };

  Kind kind = Kind::kHorizon;
  double time_horizon = 0.0;
  std::optional<Region> region;         // container for kExitRegion / kHitSet
  std::optional<Region> target;         // hit set A (subset of region)
  int target_regime = -1;               // -1 = any regime counts as a hit

  static StopRule horizon(double t) {
    StopRule s;
    s.kind = Kind::kHorizon;
    s.time_horizon = t;
    return s;
  }
  static StopRule exit_region(Region d) {
    StopRule s;
    s.kind = Kind::kExitRegion;
    s.region = std::move(d);
    return s;
  }
  static StopRule hit_set(Region a, Region container, int regime = -1) {
    StopRule s;
    s.kind = Kind::kHitSet;
    s.target = std::move(a);
    s.region = std::move(container);
    s.target_regime = regime;
    return s;
  }
  static StopRule first_switch() {
    StopRule s;
    s.kind = Kind::kFirstSwitch;
    return s;
  }
};

namespace detail {

struct NullSink {
  void segment(double, double, const Point&, int) {}
  void event(double, const Point&, int, EventKind) {}
};

struct BridgeLevels {
  // 1D levels monitored during diffusion substeps.
  bool active = false;
  double lo = 0.0, hi = 0.0;        // container interval
  bool has_target = false;
  double tlo = 0.0, thi = 0.0;      // target interval
};

inline BridgeLevels bridge_levels(const StopRule& stop, const SamplerConfig& cfg, int dim) {
  BridgeLevels b;
  if (dim != 1) return b;
  if (cfg.exit_correction == ExitCorrection::kGrid) return b;
  if (stop.kind != StopRule::Kind::kExitRegion && stop.kind != StopRule::Kind::kHitSet) return b;
  b.active = true;
  const auto [lo, hi] = stop.region->as_interval();
  b.lo = lo;
  b.hi = hi;
  if (stop.kind == StopRule::Kind::kHitSet) {
    b.has_target = true;
    const auto [tlo, thi] = stop.target->as_interval();
    b.tlo = tlo;
    b.thi = thi;
  }
  return b;
}

// P(one-sided crossing of `level` by a Brownian bridge from x0 to x1 over a
// step of variance v), both endpoints on the same side.
inline double bridge_cross_prob(double x0, double x1, double level, double v) {
  const double g0 = level - x0;
  const double g1 = level - x1;
  if (g0 * g1 <= 0.0) return 1.0;  // endpoints straddle the level
  return std::exp(-2.0 * std::abs(g0 * g1) / v);
}

}  // namespace detail

// Runs one path. `enable_switching=false` gives the single-regime process
// X^i of the fixed starting regime (jump diffusion without the switching /
// killing channel), used by the Green-operator estimators.
template <class Sink>
PathTerminal run_path(const ModelSpec& spec, Point x, int regime, const StopRule& stop,
                      const SamplerConfig& cfg, std::uint64_t path_index, Sink&& sink,
                      bool enable_switching = true) {
  cfg.check();
  const int d = spec.dim;
  const std::uint64_t key = cfg.stream_key();
  PathRng rng(key, path_index);

  const bool hit_any_regime = stop.target_regime < 0;
  auto regime_matches = [&](int i) { return hit_any_regime || i == stop.target_regime; };

  PathTerminal done;
  done.x = x;
  done.regime = regime;

  // Degenerate starts.
  if (stop.kind == StopRule::Kind::kHitSet && stop.target->contains(x) && regime_matches(regime)) {
    done.cause = TerminalCause::kHit;
    sink.event(0.0, x, regime, EventKind::kStop);
    return done;
  }
  if ((stop.kind == StopRule::Kind::kExitRegion || stop.kind == StopRule::Kind::kHitSet) &&
      !stop.region->contains(x)) {
    done.cause = TerminalCause::kExited;
    sink.event(0.0, x, regime, EventKind::kStop);
    return done;
  }
  const double t_end = stop.kind == StopRule::Kind::kHorizon
                           ? std::min(stop.time_horizon, cfg.t_max)
                           : cfg.t_max;
  if (t_end <= 0.0) {
    done.cause = stop.kind == StopRule::Kind::kHorizon ? TerminalCause::kHorizon
                                                       : TerminalCause::kTruncated;
    sink.event(0.0, x, regime, EventKind::kStop);
    return done;
  }

  const detail::BridgeLevels bridge = detail::bridge_levels(stop, cfg, d);
  const bool switching_on = enable_switching && spec.q_max > 0.0;

  double t = 0.0;
  while (true) {
    const double dt = std::min(cfg.step, t_end - t);
    if (dt <= cfg.step * 1e-12) {
      done.t = t_end;
      done.x = x;
      done.regime = regime;
      done.cause = stop.kind == StopRule::Kind::kHorizon ? TerminalCause::kHorizon
                                                         : TerminalCause::kTruncated;
      return done;
    }

    // --- diffusion substep
    Point xi(d);
    for (int k = 0; k < d; ++k) xi[k] = rng.diffusion.normal();
    Point x_new = x + dt * spec.effective_drift(x, regime) +
                  std::sqrt(2.0 * dt) * spec.diffusion_root_apply(x, regime, xi);

    if (bridge.active) {
      // Crossing test for the continuous substep; frozen-coefficient bridge,
      // exact for constant a. Exit/hit time is set to the step midpoint.
      const double v = 2.0 * spec.diffusion_scalar(x, regime) * dt;
      const double a0 = x[0];
      const double a1 = x_new[0];
      double p_hit = 0.0;
      if (bridge.has_target && regime_matches(regime)) {
        if (a0 >= bridge.tlo && a0 <= bridge.thi) {
          p_hit = 1.0;  // still inside the target from an unmatched-regime phase
        } else {
          const double level = a0 < bridge.tlo ? bridge.tlo : bridge.thi;
          p_hit = detail::bridge_cross_prob(a0, a1, level, v);
        }
      }
      const double p_up = detail::bridge_cross_prob(a0, a1, bridge.hi, v);
      const double p_dn = detail::bridge_cross_prob(a0, a1, bridge.lo, v);
      const double u = rng.diffusion.uniform();
      const double tx = t + 0.5 * dt;
      if (u < p_hit) {
        Point xb = x_new;
        xb[0] = std::clamp(xb[0], bridge.tlo, bridge.thi);
        sink.segment(t, 0.5 * dt, x, regime);
        sink.event(tx, xb, regime, EventKind::kStop);
        done.t = tx;
        done.x = xb;
        done.regime = regime;
        done.cause = TerminalCause::kHit;
        return done;
      }
      const double u2 = (u - p_hit) / std::max(1e-300, 1.0 - p_hit);
      if (u2 < p_up + p_dn) {
        Point xb = x_new;
        xb[0] = (u2 * (p_up + p_dn) < p_up) ? bridge.hi : bridge.lo;
        sink.segment(t, 0.5 * dt, x, regime);
        sink.event(tx, xb, regime, EventKind::kStop);
        done.t = tx;
        done.x = xb;
        done.regime = regime;
        done.cause = TerminalCause::kExited;
        return done;
      }
    }

    // --- jump substep (thinning against the dominating intensity)
    bool jumped = false;
    Point x_jump = x_new;
    const JumpKernel& kernel = spec.jumps[regime];
    if (!kernel.is_zero()) {
      const double p_fire = -std::expm1(-kernel.rate * dt);
      if (rng.jump.uniform() < p_fire) {
        const Point z = kernel.dominating->sample(rng.jump, d);
        if (rng.jump.uniform() < (*kernel.ratio)(x_new, z)) {
          jumped = true;
          x_jump = x_new + z;
        }
      }
    }

    // --- switching substep (uniformization)
    int regime_new = regime;
    bool switched = false;
    bool killed = false;
    if (switching_on) {
      const double p_fire = -std::expm1(-spec.q_max * dt);
      if (rng.regime.uniform() < p_fire) {
        const double u = rng.regime.uniform() * spec.q_max;
        double acc = 0.0;
        for (int j = 0; j < spec.regimes && !switched; ++j) {
          if (j == regime) continue;
          acc += spec.switching.rate(x_jump, regime, j);
          if (u < acc) {
            switched = true;
            regime_new = j;
          }
        }
        if (!switched) {
          acc += spec.switching.killing_rate(x_jump, regime);
          if (u < acc) killed = true;
          // otherwise: phantom event, nothing happens
        }
      }
    }

    // --- emit events at equal fractions of the step; switch and kill are
    // mutually exclusive, so at most 3 fire
    struct Staged {
      Point x;
      int regime;
      EventKind kind;
    };
    Staged staged[4];
    int n = 0;
    staged[n++] = {x_new, regime, EventKind::kDiffuse};
    if (jumped) staged[n++] = {x_jump, regime, EventKind::kJump};
    if (switched) staged[n++] = {x_jump, regime_new, EventKind::kSwitch};
    if (killed) staged[n++] = {x_jump, kCemetery, EventKind::kKill};

    double t_seg = t;
    Point x_seg = x;
    int i_seg = regime;
    for (int e = 0; e < n; ++e) {
      const double te = t + dt * static_cast<double>(e + 1) / n;
      sink.segment(t_seg, te - t_seg, x_seg, i_seg);
      sink.event(te, staged[e].x, staged[e].regime, staged[e].kind);
      t_seg = te;
      x_seg = staged[e].x;
      i_seg = staged[e].regime;

      if (staged[e].kind == EventKind::kKill) {
        done.t = te;
        done.x = staged[e].x;
        done.regime = kCemetery;
        done.cause = TerminalCause::kKilled;
        return done;
      }
      if (stop.kind == StopRule::Kind::kFirstSwitch && staged[e].kind == EventKind::kSwitch) {
        done.t = te;
        done.x = staged[e].x;
        done.regime = staged[e].regime;
        done.cause = TerminalCause::kFirstSwitch;
        return done;
      }
      if (stop.kind == StopRule::Kind::kExitRegion || stop.kind == StopRule::Kind::kHitSet) {
        if (stop.kind == StopRule::Kind::kHitSet && stop.target->contains(staged[e].x) &&
            regime_matches(staged[e].regime)) {
          done.t = te;
          done.x = staged[e].x;
          done.regime = staged[e].regime;
          done.cause = TerminalCause::kHit;
          return done;
        }
        if (!stop.region->contains(staged[e].x)) {
          done.t = te;
          done.x = staged[e].x;
          done.regime = staged[e].regime;
          done.cause = TerminalCause::kExited;
          return done;
        }
      }
    }

    t += dt;
    x = x_jump;
    regime = regime_new;

    if (t >= t_end * (1.0 - 1e-15)) {
      done.t = t_end;
      done.x = x;
      done.regime = regime;
      done.cause = stop.kind == StopRule::Kind::kHorizon ? TerminalCause::kHorizon
                                                         : TerminalCause::kTruncated;
      return done;
    }
  }
}

// Materialized trajectory (event log) for one path index.
inline Trajectory sample_path(const ModelSpec& spec, const Point& x0, int regime0,
                              const StopRule& stop, const SamplerConfig& cfg,
                              std::uint64_t path_index = 0) {
  struct Collect {
    Trajectory* traj;
    void segment(double, double, const Point&, int) {}
    void event(double t, const Point& x, int regime, EventKind kind) {
      traj->events.push_back({t, x, regime, kind});
    }
  };
  Trajectory traj;
  traj.x0 = x0;
  traj.regime0 = regime0;
  Collect sink{&traj};
  traj.terminal = run_path(spec, x0, regime0, stop, cfg, path_index, sink);
  // degenerate immediate stops log one kStop event; keep it only as terminal
  if (traj.events.size() == 1 && traj.events.front().kind == EventKind::kStop &&
      traj.events.front().t == 0.0)
    traj.events.clear();
  return traj;
}

}  // namespace swjd

#endif  // SWJD_SAMPLER_HPP
