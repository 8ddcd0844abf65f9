#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "layersep/errors.hpp"
#include "layersep/materials.hpp"
#include "layersep/units.hpp"

namespace layersep {

// ---------------------------------------------------------------------------
// Scenario types
// ---------------------------------------------------------------------------

enum class ClampMode { Unclamped, RigidClamp, FingerClamp };

/// How the layer stack is held down away from the roller contact. The clamp
/// turns the dragged span into a pin-ended column, so the roller must beat a
/// buckling threshold as well as friction. clamp_distance is the column span:
/// roller contact to clamp line for a rigid clamp, pre-opened finger distance
/// for the compliant fingers.
struct ClampSpec {
  ClampMode mode = ClampMode::Unclamped;
  double holding_force = 0.0;     // N, zero when unclamped
  double clamp_distance = 0.0;    // m
  double finger_spring_rate = 0.0;  // N/m, FingerClamp only; carried, not used by the statics

  void validate() const {
    if (mode == ClampMode::Unclamped) {
      if (holding_force != 0.0)
        throw ValidationError("unclamped scenario must have holding_force = 0");
    } else {
      if (!(clamp_distance > 0.0))
        throw ValidationError("clamped scenario requires clamp_distance > 0");
      if (!(holding_force > 0.0))
        throw ValidationError("clamped scenario requires holding_force > 0");
    }
  }
};

enum class RollerSurface { Dented, Smooth };

inline std::string to_string(RollerSurface s) {
  return s == RollerSurface::Dented ? "dented" : "smooth";
}

struct RollerSpec {
  double radius = 0.01;                // m
  RollerSurface surface = RollerSurface::Dented;
  SurfaceId roller_surface_id = "silicone-roller";
  double angular_velocity = rpm_to_rad_s(18.3);  // rad/s
  double overrun_tolerance = 0.15;     // s; smooth roller only, dents never capture

  void validate() const {
    if (!(radius > 0.0)) throw ValidationError("roller radius must be > 0");
    const double rpm = rad_s_to_rpm(angular_velocity);
    if (rpm < motor_rpm_min - 1e-9 || rpm > motor_rpm_max + 1e-9)
      throw ValidationError("roller velocity " + detail::format_double(rpm) +
                            " rev/min outside motor envelope [1, 45]");
    if (overrun_tolerance < 0.0) throw ValidationError("overrun_tolerance must be >= 0");
  }
};

/// Full physical configuration: two sheets on a substrate, a roller pressed
/// onto the stack with normal_force, an optional clamp, and the distance from
/// the roller contact to the free edge of the top sheet.
struct SeparationScenario {
  LayerStack stack;
  FrictionTable friction;
  RollerSpec roller;
  double normal_force = 0.0;        // N, F_N at the roller contact
  ClampSpec clamp;
  double edge_distance = 0.0;       // m, roller contact to the top sheet's free edge
  double interlayer_adhesion = 0.0; // N, additive term on the interlayer capacity

  void validate() const {
    stack.validate();
    roller.validate();
    clamp.validate();
    if (normal_force < 0.0) throw ValidationError("normal_force must be >= 0");
    if (edge_distance < 0.0) throw ValidationError("edge_distance must be >= 0");
    if (interlayer_adhesion < 0.0) throw ValidationError("interlayer_adhesion must be >= 0");
  }
};

/// The three interface coefficients the predictions consume. Splitting the
/// lookup from the arithmetic lets sweeps perturb coefficients without
/// rebuilding a friction table per trial.
struct InterfaceFrictions {
  double roller_top = 0.0;
  double top_bottom = 0.0;
  double bottom_substrate = 0.0;
};

inline InterfaceFrictions resolve_frictions(const SeparationScenario& s) {
  return InterfaceFrictions{
      friction_coefficient(s.friction, s.roller.roller_surface_id, s.stack.top.top_surface),
      friction_coefficient(s.friction, s.stack.top.bottom_surface, s.stack.bottom.top_surface),
      friction_coefficient(s.friction, s.stack.bottom.bottom_surface, s.stack.substrate)};
}

/// Friction capacities, buckling thresholds and the signed slack of the
/// separation inequalities. Positive margins mean the corresponding condition
/// holds.
struct ForceBalance {
  double f_fr1 = 0.0;  // roller / top sheet capacity
  double f_fr2 = 0.0;  // interlayer capacity (+ adhesion)
  double f_fr3 = 0.0;  // bottom sheet resistance: substrate friction or clamp hold
  double f_b1 = 0.0;   // top sheet buckling threshold (0 when unclamped)
  double f_b2 = 0.0;   // bottom sheet buckling threshold (0 when unclamped)
  double top_margin = 0.0;
  double bottom_margin = 0.0;
};

enum class OutcomeKind { TopSeparates, BothDragged, NothingMoves, TopStuck };

inline std::string to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::TopSeparates: return "TopSeparates";
    case OutcomeKind::BothDragged: return "BothDragged";
    case OutcomeKind::NothingMoves: return "NothingMoves";
    case OutcomeKind::TopStuck: return "TopStuck";
  }
  return "?";
}

struct SeparationOutcome {
  OutcomeKind kind = OutcomeKind::NothingMoves;
  ForceBalance balance;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Amontons: F_fr = mu * F_N.
inline double friction_force(double mu, double normal) {
  if (!(mu > 0.0)) throw ValidationError("friction_force: mu must be > 0");
  if (normal < 0.0) throw ValidationError("friction_force: normal force must be >= 0");
  return mu * normal;
}

/// First-mode Euler critical load of a pin-ended rectangular sheet segment:
/// pi^2 * E * w * h^3 / (12 * l^2).
inline double buckling_critical_load(double youngs_modulus, double width, double thickness,
                                     double span) {
  if (!(youngs_modulus > 0.0))
    throw ValidationError("buckling_critical_load: modulus must be > 0");
  if (!(span > 0.0)) throw ValidationError("buckling_critical_load: span must be > 0");
  const double inertia = second_moment_of_area(width, thickness);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return pi2 * youngs_modulus * inertia / (span * span);
}

/// Independent route to the same critical load: discretize y'' + (P/EI) y = 0
/// on n interior points with second-order central differences and take
/// P = EI * lambda_min of the resulting 1/dx^2-scaled second-difference
/// operator. Smallest eigenvalue via inverse power iteration with a Thomas
/// solve per step.
inline double numerical_buckling_oracle(double youngs_modulus, double width, double thickness,
                                        double span, int n = 400) {
  if (n < 16) throw ValidationError("numerical_buckling_oracle: need n >= 16");
  if (!(youngs_modulus > 0.0) || !(span > 0.0))
    throw ValidationError("numerical_buckling_oracle: modulus and span must be > 0");
  const double inertia = second_moment_of_area(width, thickness);
  const double dx = span / static_cast<double>(n + 1);
  const double diag = 2.0 / (dx * dx);
  const double off = -1.0 / (dx * dx);

  std::vector<double> x(n, 1.0), y(n), cp(n), dp(n);
  // Mildly asymmetric start so the iteration cannot sit on a node of mode 1.
  for (int i = 0; i < n; ++i) x[i] = 1.0 + 1e-3 * static_cast<double>(i % 7);

  double lambda = 0.0, lambda_prev = std::numeric_limits<double>::max();
  const int max_iters = 200;
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    // Thomas solve of tridiag(off, diag, off) * y = x.
    cp[0] = off / diag;
    dp[0] = x[0] / diag;
    for (int i = 1; i < n; ++i) {
      const double denom = diag - off * cp[i - 1];
      cp[i] = off / denom;
      dp[i] = (x[i] - off * dp[i - 1]) / denom;
    }
    y[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) y[i] = dp[i] - cp[i] * y[i + 1];

    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    for (int i = 0; i < n; ++i) x[i] = y[i] / norm;

    // Rayleigh quotient of the normalized iterate.
    double quad = 0.0;
    for (int i = 0; i < n; ++i) {
      double ax = diag * x[i];
      if (i > 0) ax += off * x[i - 1];
      if (i + 1 < n) ax += off * x[i + 1];
      quad += x[i] * ax;
    }
    lambda = quad;
    if (std::abs(lambda - lambda_prev) <= 1e-13 * std::abs(lambda)) break;
    lambda_prev = lambda;
  }
  if (iter == max_iters)
    throw std::runtime_error("numerical_buckling_oracle: eigenvalue iteration did not converge");
  return youngs_modulus * inertia * lambda;
}

/// Analytic smallest eigenvalue of the n-point second-difference operator,
/// (2 - 2 cos(pi/(n+1))) / dx^2. Used by tests to check the oracle against the
/// known spectrum.
inline double second_difference_min_eigenvalue(double span, int n) {
  const double dx = span / static_cast<double>(n + 1);
  return (2.0 - 2.0 * std::cos(std::numbers::pi / static_cast<double>(n + 1))) / (dx * dx);
}

/// Capacities and margins for a scenario, from explicitly supplied interface
/// coefficients. The normal force at the roller is transmitted unchanged
/// through the (weightless) stack, so every capacity is an Amontons product
/// of the same F_N.
inline ForceBalance balance_from(const SeparationScenario& s, const InterfaceFrictions& mu) {
  s.validate();
  ForceBalance b;
  b.f_fr1 = mu.roller_top * s.normal_force;
  b.f_fr2 = mu.top_bottom * s.normal_force + s.interlayer_adhesion;

  switch (s.clamp.mode) {
    case ClampMode::Unclamped:
      b.f_fr3 = mu.bottom_substrate * s.normal_force;
      b.f_b1 = 0.0;
      b.f_b2 = 0.0;
      b.top_margin = b.f_fr1 - b.f_fr2;
      b.bottom_margin = b.f_fr3 - b.f_fr2;
      return b;
    case ClampMode::RigidClamp:
    case ClampMode::FingerClamp: {
      if (!(s.clamp.clamp_distance > 0.0))
        throw ValidationError("clamped prediction requires clamp_distance > 0");
      if (s.clamp.mode == ClampMode::RigidClamp) {
        // Unbounded hold: the bottom sheet cannot be pulled out from under
        // the clamp, only buckled.
        b.f_fr3 = std::numeric_limits<double>::infinity();
      } else {
        // The fingers press the stack into the substrate; the hold saturates
        // at the friction the extra normal force can generate on the
        // bottom-sheet/substrate path.
        b.f_fr3 = mu.bottom_substrate * (s.normal_force + s.clamp.holding_force);
      }
      const auto& top = s.stack.top;
      const auto& bottom = s.stack.bottom;
      b.f_b1 = buckling_critical_load(top.youngs_modulus, top.width, top.thickness,
                                      s.clamp.clamp_distance);
      b.f_b2 = buckling_critical_load(bottom.youngs_modulus, bottom.width, bottom.thickness,
                                      s.clamp.clamp_distance);
      b.top_margin = (b.f_fr1 - b.f_fr2) - b.f_b1;
      b.bottom_margin = b.f_b2 - (b.f_fr2 - b.f_fr3);
      return b;
    }
  }
  throw ValidationError("unreachable clamp mode");
}

/// Capacities and margins with coefficients looked up from the scenario's
/// friction table.
inline ForceBalance resolve_balance(const SeparationScenario& s) {
  return balance_from(s, resolve_frictions(s));
}

/// Classification is a pure function of the margin signs. Ties classify as
/// the non-separating kind.
inline OutcomeKind classify_unclamped(const ForceBalance& b) {
  if (b.f_fr1 > b.f_fr2)  // top sheet can be dragged off the stack
    return b.f_fr2 < b.f_fr3 ? OutcomeKind::TopSeparates : OutcomeKind::BothDragged;
  if (b.f_fr2 <= b.f_fr3) return OutcomeKind::NothingMoves;
  // Roller cannot peel the top sheet and the substrate is the weakest
  // interface: whatever motion impends carries both sheets.
  return OutcomeKind::BothDragged;
}

inline OutcomeKind classify_clamped(const ForceBalance& b) {
  const bool top_buckles = b.top_margin > 0.0;     // traction surplus beats F_B1
  const bool bottom_holds = b.bottom_margin > 0.0; // bottom traction below F_B2
  if (!top_buckles) return OutcomeKind::TopStuck;
  return bottom_holds ? OutcomeKind::TopSeparates : OutcomeKind::BothDragged;
}

inline SeparationOutcome predict_unclamped(const SeparationScenario& s,
                                           const InterfaceFrictions& mu) {
  if (s.clamp.mode != ClampMode::Unclamped)
    throw ValidationError("predict_unclamped requires an Unclamped scenario");
  auto b = balance_from(s, mu);
  return SeparationOutcome{classify_unclamped(b), b};
}

inline SeparationOutcome predict_unclamped(const SeparationScenario& s) {
  return predict_unclamped(s, resolve_frictions(s));
}

inline SeparationOutcome predict_clamped(const SeparationScenario& s,
                                         const InterfaceFrictions& mu) {
  if (s.clamp.mode == ClampMode::Unclamped)
    throw ValidationError("predict_clamped requires a RigidClamp or FingerClamp scenario");
  auto b = balance_from(s, mu);
  return SeparationOutcome{classify_clamped(b), b};
}

inline SeparationOutcome predict_clamped(const SeparationScenario& s) {
  return predict_clamped(s, resolve_frictions(s));
}

/// Mode-dispatching prediction.
inline SeparationOutcome predict(const SeparationScenario& s, const InterfaceFrictions& mu) {
  return s.clamp.mode == ClampMode::Unclamped ? predict_unclamped(s, mu)
                                              : predict_clamped(s, mu);
}

inline SeparationOutcome predict(const SeparationScenario& s) {
  return predict(s, resolve_frictions(s));
}

}  // namespace layersep
