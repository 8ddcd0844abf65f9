#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "layersep/detail/text.hpp"
#include "layersep/errors.hpp"
#include "layersep/mechanics.hpp"

namespace layersep {

// ---------------------------------------------------------------------------
// Phases and events
// ---------------------------------------------------------------------------

enum class PhaseKind { Approach, Hold, Drag, Snap, Grasp, Lift, Done };

enum class FailureReason {
  RollerSlip,
  BothLayersDragged,
  TopStuck,
  BottomLayerCaptured,
  GraspLost,
  NoSnap,
};

inline std::string to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::Approach: return "Approach";
    case PhaseKind::Hold: return "Hold";
    case PhaseKind::Drag: return "Drag";
    case PhaseKind::Snap: return "Snap";
    case PhaseKind::Grasp: return "Grasp";
    case PhaseKind::Lift: return "Lift";
    case PhaseKind::Done: return "Done";
  }
  return "?";
}

inline std::string to_string(FailureReason r) {
  switch (r) {
    case FailureReason::RollerSlip: return "RollerSlip";
    case FailureReason::BothLayersDragged: return "BothLayersDragged";
    case FailureReason::TopStuck: return "TopStuck";
    case FailureReason::BottomLayerCaptured: return "BottomLayerCaptured";
    case FailureReason::GraspLost: return "GraspLost";
    case FailureReason::NoSnap: return "NoSnap";
  }
  return "?";
}

/// A phase of the grasp sequence. Done carries the terminal result:
/// nullopt failure means success.
struct Phase {
  PhaseKind kind = PhaseKind::Approach;
  std::optional<FailureReason> failure;  // meaningful only when kind == Done

  static Phase at(PhaseKind k) { return Phase{k, std::nullopt}; }
  static Phase success() { return Phase{PhaseKind::Done, std::nullopt}; }
  static Phase failed(FailureReason r) { return Phase{PhaseKind::Done, r}; }

  bool terminal() const { return kind == PhaseKind::Done; }
  bool succeeded() const { return terminal() && !failure.has_value(); }

  friend bool operator==(const Phase&, const Phase&) = default;
};

inline std::string to_string(const Phase& p) {
  if (p.kind != PhaseKind::Done) return to_string(p.kind);
  return p.failure ? "Done(Failure(" + to_string(*p.failure) + "))" : "Done(Success)";
}

enum class Event {
  ContactDetected,   // fingers touch the stack
  RollerContact,     // roller touches the top sheet and starts rotating
  EdgeReached,       // dragged flap edge arrives at the roller
  RollerSlipped,     // roller spins without moving the top sheet
  BothLayersMoved,   // the whole stack is being dragged
  TopLayerStuck,     // buckling threshold not overcome
  FlapFlipped,       // flap snapped over the roller
  BottomLayerCaught, // overrun pulled the bottom sheet into the grasp
  SnapMissed,        // edge passed without the flap flipping
  FingersClosed,     // fingers closed against the roller
  LiftComplete,      // stack contact released, flap retained
  GraspSlipped,      // flap pulled out of the closed grasp
};

constexpr std::array<Event, 12> all_events = {
    Event::ContactDetected, Event::RollerContact,   Event::EdgeReached,
    Event::RollerSlipped,   Event::BothLayersMoved, Event::TopLayerStuck,
    Event::FlapFlipped,     Event::BottomLayerCaught, Event::SnapMissed,
    Event::FingersClosed,   Event::LiftComplete,    Event::GraspSlipped,
};

inline std::string to_string(Event e) {
  switch (e) {
    case Event::ContactDetected: return "ContactDetected";
    case Event::RollerContact: return "RollerContact";
    case Event::EdgeReached: return "EdgeReached";
    case Event::RollerSlipped: return "RollerSlipped";
    case Event::BothLayersMoved: return "BothLayersMoved";
    case Event::TopLayerStuck: return "TopLayerStuck";
    case Event::FlapFlipped: return "FlapFlipped";
    case Event::BottomLayerCaught: return "BottomLayerCaught";
    case Event::SnapMissed: return "SnapMissed";
    case Event::FingersClosed: return "FingersClosed";
    case Event::LiftComplete: return "LiftComplete";
    case Event::GraspSlipped: return "GraspSlipped";
  }
  return "?";
}

/// Pure transition table. Every pair outside it throws IllegalTransition;
/// nothing is silently ignored. Terminal phases accept no events.
inline Phase step(const Phase& phase, Event event) {
  switch (phase.kind) {
    case PhaseKind::Approach:
      if (event == Event::ContactDetected) return Phase::at(PhaseKind::Hold);
      break;
    case PhaseKind::Hold:
      if (event == Event::RollerContact) return Phase::at(PhaseKind::Drag);
      break;
    case PhaseKind::Drag:
      if (event == Event::EdgeReached) return Phase::at(PhaseKind::Snap);
      if (event == Event::RollerSlipped) return Phase::failed(FailureReason::RollerSlip);
      if (event == Event::BothLayersMoved) return Phase::failed(FailureReason::BothLayersDragged);
      if (event == Event::TopLayerStuck) return Phase::failed(FailureReason::TopStuck);
      break;
    case PhaseKind::Snap:
      if (event == Event::FlapFlipped) return Phase::at(PhaseKind::Grasp);
      if (event == Event::BottomLayerCaught)
        return Phase::failed(FailureReason::BottomLayerCaptured);
      if (event == Event::SnapMissed) return Phase::failed(FailureReason::NoSnap);
      break;
    case PhaseKind::Grasp:
      if (event == Event::FingersClosed) return Phase::at(PhaseKind::Lift);
      break;
    case PhaseKind::Lift:
      if (event == Event::LiftComplete) return Phase::success();
      if (event == Event::GraspSlipped) return Phase::failed(FailureReason::GraspLost);
      break;
    case PhaseKind::Done:
      break;
  }
  throw IllegalTransition("illegal transition: event " + to_string(event) + " in phase " +
                          to_string(phase));
}

// ---------------------------------------------------------------------------
// Episode configuration
// ---------------------------------------------------------------------------

enum class FingerCoating { Silicone, Plain };

inline std::string to_string(FingerCoating c) {
  return c == FingerCoating::Silicone ? "silicone" : "plain";
}

struct FingerSpec {
  FingerCoating coating = FingerCoating::Silicone;
  double spring_rate = 200.0;  // N/m, carried for completeness
  double close_force = 60.0;   // N, per finger against the roller
  int contact_count = 2;

  void validate() const {
    if (!(close_force > 0.0)) throw ValidationError("finger close_force must be > 0");
    if (contact_count < 1) throw ValidationError("need at least one finger contact");
  }
};

/// Grasp capacity model: capacity = mu_eff(coating) * close_force * contacts
/// + roller_contribution. The defaults below are the least-squares fit of the
/// bundled pull-force dataset (data/fig9_pull.csv); refit with
/// expdata::fit_holding_model.
struct HoldingCalibration {
  double mu_eff_silicone = 0.0;
  double mu_eff_plain = 0.0;
  double roller_contribution = 0.0;  // N, the smooth silicone side rollers

  void validate() const {
    if (!(mu_eff_silicone > 0.0) || !(mu_eff_plain > 0.0))
      throw ValidationError("holding calibration missing effective friction coefficients");
    if (roller_contribution < 0.0)
      throw ValidationError("holding calibration roller_contribution must be >= 0");
  }
};

inline HoldingCalibration default_holding_calibration() {
  return HoldingCalibration{0.445, 0.30, 25.0};
}

/// Maximum pull force the closed grasp withstands.
inline double holding_capacity(const FingerSpec& fingers, const HoldingCalibration& calib) {
  if (fingers.close_force < 0.0) throw ValidationError("close_force must be >= 0");
  if (fingers.contact_count < 1) throw ValidationError("need at least one finger contact");
  calib.validate();
  const double mu = fingers.coating == FingerCoating::Silicone ? calib.mu_eff_silicone
                                                               : calib.mu_eff_plain;
  return mu * fingers.close_force * static_cast<double>(fingers.contact_count) +
         calib.roller_contribution;
}

inline double holding_capacity(const FingerSpec& fingers) {
  return holding_capacity(fingers, default_holding_calibration());
}

struct EpisodeConfig {
  SeparationScenario scenario;
  FingerSpec fingers;
  double roller_stop_delay = 0.0;  // s of roller rotation past edge arrival
  double pull_force = 40.0;        // N applied during Lift

  void validate() const {
    scenario.validate();
    fingers.validate();
    if (roller_stop_delay < 0.0) throw ValidationError("roller_stop_delay must be >= 0");
    if (pull_force < 0.0) throw ValidationError("pull_force must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Episode operations
// ---------------------------------------------------------------------------

/// Time for the roller to carry the contact point to the free edge under
/// no-slip rolling; 0 when the roller already sits on the edge.
inline double drag_time_to_edge(double edge_distance, const RollerSpec& roller) {
  if (edge_distance < 0.0) throw ValidationError("edge_distance must be >= 0");
  if (!(roller.angular_velocity > 0.0))
    throw ValidationError("drag_time_to_edge: zero angular velocity");
  if (edge_distance == 0.0) return 0.0;
  return edge_distance / (roller.radius * roller.angular_velocity);
}

enum class SnapResult { SnapOk, BottomLayerCaptured };

/// Dents keep the flap engaged no matter how late the stop command lands.
/// A smooth roller captures the bottom sheet once the overrun exceeds its
/// tolerance.
inline SnapResult snap_resolution(const RollerSpec& roller, double stop_delay) {
  if (stop_delay < 0.0) throw ValidationError("stop_delay must be >= 0");
  if (roller.surface == RollerSurface::Dented) return SnapResult::SnapOk;
  return stop_delay <= roller.overrun_tolerance ? SnapResult::SnapOk
                                                : SnapResult::BottomLayerCaptured;
}

struct TraceStep {
  double timestamp = 0.0;  // s
  Phase phase;
  std::string annotation;

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  Phase terminal;
  double drag_duration = 0.0;
  double holding_capacity = 0.0;

  friend bool operator==(const EpisodeTrace&, const EpisodeTrace&) = default;
};

namespace detail {

inline std::string margin_note(const ForceBalance& b) {
  return "f_fr1=" + format_sig6(b.f_fr1) + " f_fr2=" + format_sig6(b.f_fr2) +
         " f_fr3=" + format_sig6(b.f_fr3) + " f_b1=" + format_sig6(b.f_b1) +
         " f_b2=" + format_sig6(b.f_b2);
}

}  // namespace detail

/// Drives the transition table through the six phases, with the drag outcome
/// from the clamped force balance, the snap from the overrun rule, and the
/// lift from the holding-capacity comparison. Pure in its inputs.
inline EpisodeTrace run_episode(const EpisodeConfig& config, const InterfaceFrictions& mu,
                                const HoldingCalibration& calib = default_holding_calibration()) {
  config.validate();
  if (config.scenario.clamp.mode != ClampMode::FingerClamp)
    throw ValidationError("run_episode requires a FingerClamp scenario: the Hold phase "
                          "presses the compliant fingers onto the stack");

  EpisodeTrace trace;
  trace.holding_capacity = holding_capacity(config.fingers, calib);
  auto record = [&trace](double t, const Phase& p, std::string note) {
    trace.steps.push_back(TraceStep{t, p, std::move(note)});
  };

  Phase phase = Phase::at(PhaseKind::Approach);
  record(0.0, phase, "descending");

  phase = step(phase, Event::ContactDetected);
  record(0.0, phase, "fingers press stack at a=" +
                         detail::format_sig6(config.scenario.clamp.clamp_distance));

  phase = step(phase, Event::RollerContact);
  const auto balance = balance_from(config.scenario, mu);
  record(0.0, phase, detail::margin_note(balance));

  const double t_edge = drag_time_to_edge(config.scenario.edge_distance, config.scenario.roller);

  if (balance.f_fr1 <= balance.f_fr2) {
    phase = step(phase, Event::RollerSlipped);
    record(0.0, phase, "roller capacity below interlayer friction");
  } else {
    const auto drag = classify_clamped(balance);
    if (drag == OutcomeKind::TopStuck) {
      phase = step(phase, Event::TopLayerStuck);
      record(0.0, phase, "buckling threshold not overcome");
    } else if (drag == OutcomeKind::BothDragged) {
      phase = step(phase, Event::BothLayersMoved);
      record(0.0, phase, "bottom sheet traction beats its buckling threshold");
    } else {
      phase = step(phase, Event::EdgeReached);
      trace.drag_duration = t_edge;
      record(t_edge, phase, "edge reached");

      const double t_stop = t_edge + config.roller_stop_delay;
      if (snap_resolution(config.scenario.roller, config.roller_stop_delay) ==
          SnapResult::BottomLayerCaptured) {
        phase = step(phase, Event::BottomLayerCaught);
        record(t_stop, phase, "overrun " + detail::format_sig6(config.roller_stop_delay) +
                                  " s beyond tolerance");
      } else {
        phase = step(phase, Event::FlapFlipped);
        record(t_stop, phase, "flap snapped over roller");

        phase = step(phase, Event::FingersClosed);
        record(t_stop, phase, "fingers closed against roller");

        if (config.pull_force > trace.holding_capacity) {
          phase = step(phase, Event::GraspSlipped);
          record(t_stop, phase, "pull " + detail::format_sig6(config.pull_force) +
                                    " N exceeds capacity " +
                                    detail::format_sig6(trace.holding_capacity) + " N");
        } else {
          phase = step(phase, Event::LiftComplete);
          record(t_stop, phase, "lifted; capacity " +
                                    detail::format_sig6(trace.holding_capacity) + " N");
        }
      }
    }
  }

  trace.terminal = phase;
  return trace;
}

inline EpisodeTrace run_episode(const EpisodeConfig& config,
                                const HoldingCalibration& calib = default_holding_calibration()) {
  return run_episode(config, resolve_frictions(config.scenario), calib);
}

// ---------------------------------------------------------------------------
// Trace serialization: one step per line, "timestamp,phase,annotation".
// ---------------------------------------------------------------------------

inline std::string format_trace(const EpisodeTrace& trace) {
  std::ostringstream out;
  for (const auto& s : trace.steps)
    out << detail::format_double(s.timestamp) << "," << to_string(s.phase) << ","
        << s.annotation << "\n";
  return out.str();
}

inline void write_trace(const EpisodeTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << format_trace(trace);
  if (!out) throw ParseError("write failed: " + path);
}

inline Phase phase_from_string(const std::string& s) {
  for (auto k : {PhaseKind::Approach, PhaseKind::Hold, PhaseKind::Drag, PhaseKind::Snap,
                 PhaseKind::Grasp, PhaseKind::Lift})
    if (s == to_string(k)) return Phase::at(k);
  if (s == "Done(Success)") return Phase::success();
  constexpr std::array<FailureReason, 6> reasons = {
      FailureReason::RollerSlip,      FailureReason::BothLayersDragged,
      FailureReason::TopStuck,        FailureReason::BottomLayerCaptured,
      FailureReason::GraspLost,       FailureReason::NoSnap,
  };
  for (auto r : reasons)
    if (s == "Done(Failure(" + to_string(r) + "))") return Phase::failed(r);
  throw ParseError("unknown phase '" + s + "'");
}

/// Parses the line format back into a trace for replay and golden-file
/// comparisons. The file carries the phase sequence only; the derived
/// drag_duration and holding_capacity fields are not stored.
inline EpisodeTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace: " + path);
  EpisodeTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto first = t.find(',');
    const auto second = t.find(',', first + 1);
    if (first == std::string_view::npos || second == std::string_view::npos)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected timestamp,phase,annotation");
    TraceStep step;
    if (!detail::parse_double(t.substr(0, first), step.timestamp))
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed timestamp");
    step.phase = phase_from_string(std::string(t.substr(first + 1, second - first - 1)));
    step.annotation = std::string(t.substr(second + 1));
    trace.steps.push_back(std::move(step));
  }
  if (trace.steps.empty()) throw ParseError(path + ": empty trace");
  trace.terminal = trace.steps.back().phase;
  return trace;
}

}  // namespace layersep
