#pragma once

#include <numbers>

namespace layersep {

// Flags and files talk rev/min and mm (the units the motor and the robot
// controller report); everything internal is SI. Conversions happen here
// and nowhere else.

constexpr double rpm_to_rad_s(double rpm) { return rpm * std::numbers::pi / 30.0; }
constexpr double rad_s_to_rpm(double rad_s) { return rad_s * 30.0 / std::numbers::pi; }
constexpr double mm_to_m(double mm) { return mm * 1e-3; }

// Bundled motor envelope, rev/min.
constexpr double motor_rpm_min = 1.0;
constexpr double motor_rpm_max = 45.0;

}  // namespace layersep
