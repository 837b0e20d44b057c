#ifndef SWJD_TRAJECTORY_HPP
#define SWJD_TRAJECTORY_HPP

#include <ostream>
#include <string>
#include <vector>

#include "swjd/geometry.hpp"

namespace swjd {

inline constexpr int kCemetery = -1;

enum class EventKind { kDiffuse, kJump, kSwitch, kKill, kStop };

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::kDiffuse: return "diffuse";
    case EventKind::kJump: return "jump";
    case EventKind::kSwitch: return "switch";
    case EventKind::kKill: return "kill";
    case EventKind::kStop: return "stop";
  }
  return "?";
}

struct PathEvent {
  double t = 0.0;
  Point x;
  int regime = 0;
  EventKind kind = EventKind::kDiffuse;
};

enum class TerminalCause {
  kHorizon,      // stop rule horizon reached
  kExited,       // left the stop rule's region
  kHit,          // entered the hit set with matching regime
  kKilled,       // sub-Markovian killing fired
  kFirstSwitch,  // first regime change (first-switch stop rule)
  kTruncated,    // t_max reached without satisfying the stop rule
};

inline const char* terminal_cause_name(TerminalCause c) {
  switch (c) {
    case TerminalCause::kHorizon: return "horizon";
    case TerminalCause::kExited: return "exited";
    case TerminalCause::kHit: return "hit";
    case TerminalCause::kKilled: return "killed";
    case TerminalCause::kFirstSwitch: return "first_switch";
    case TerminalCause::kTruncated: return "truncated";
  }
  return "?";
}

struct PathTerminal {
  double t = 0.0;
  Point x;
  int regime = 0;  // kCemetery after killing
  TerminalCause cause = TerminalCause::kHorizon;

  bool killed() const { return cause == TerminalCause::kKilled; }
  bool truncated() const { return cause == TerminalCause::kTruncated; }
};

// Sampled path: initial state, ordered event list (times strictly
// increasing), terminal state. Multiple events inside one Euler step are
// spread over the step at equal fractions so the ordering stays strict.
struct Trajectory {
  double t0 = 0.0;
  Point x0;
  int regime0 = 0;
  std::vector<PathEvent> events;
  PathTerminal terminal;

  bool killed() const { return terminal.killed(); }
  bool truncated() const { return terminal.truncated(); }
};

// Tab-separated dump, one event per line: t, x_1..x_d, regime, event kind.
// The first line is the initial state (kind "init"); the last line repeats
// the terminal state with the terminal cause and may share the timestamp of
// the event that caused it. Cemetery regime is written as 0.
inline void write_trajectory_tsv(std::ostream& os, const Trajectory& traj, bool header = true) {
  const int d = traj.x0.dim;
  os.precision(17);
  if (header) {
    os << "# t";
    for (int k = 1; k <= d; ++k) os << "\tx_" << k;
    os << "\tregime\tevent\n";
  }
  auto row = [&](double t, const Point& x, int regime, const char* kind) {
    os << t;
    for (int k = 0; k < d; ++k) os << '\t' << x[k];
    os << '\t' << (regime == kCemetery ? 0 : regime + 1) << '\t' << kind << '\n';
  };
  row(traj.t0, traj.x0, traj.regime0, "init");
  for (const auto& e : traj.events) row(e.t, e.x, e.regime, event_kind_name(e.kind));
  if (traj.events.empty() || traj.events.back().kind != EventKind::kKill)
    row(traj.terminal.t, traj.terminal.x, traj.terminal.regime,
        terminal_cause_name(traj.terminal.cause));
}

}  // namespace swjd

#endif  // SWJD_TRAJECTORY_HPP
