#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace dkmpc::vehicle {

inline constexpr double kGravity = 9.81;
inline constexpr double kSampleTime = 0.025;
inline constexpr double kMaxSteer = 0.3;
inline constexpr double kMinSpeed = 0.5;

class LowSpeedError : public std::runtime_error
{
public:
  explicit LowSpeedError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when the integrated state leaves the simulation sanity bounds.
class StateBoundError : public std::runtime_error
{
public:
  explicit StateBoundError(const std::string& what) : std::runtime_error(what) {}
};

struct VehicleParams
{
  double mass = 1848.0;         // kg
  double yaw_inertia = 3000.0;  // kg m^2
  double lf = 1.2;              // m, c.g. to front axle
  double lr = 1.55;             // m, c.g. to rear axle
  double track = 1.6;           // m
  double wheel_radius = 0.31;   // m
  // Magic Formula shape coefficients.
  double mf_b = 10.0;
  double mf_c = 1.9;
  double mf_d = 1.0;
  double mf_e = 0.97;
  double max_torque = 2500.0;   // N m

  double wheelbase() const { return lf + lr; }
  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct VehicleState
{
  double vx = 0.0;  // m/s
  double vy = 0.0;  // m/s
  double wr = 0.0;  // rad/s
};

/// Global pose; heading is kept unwrapped.
struct Pose
{
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct ControlInput
{
  double torque = 0.0;  // total drive torque, N m
  double steer = 0.0;   // front wheel angle, rad
};

/// Wheel order: 0 front-left, 1 front-right, 2 rear-left, 3 rear-right.
struct WheelForces
{
  std::array<double, 4> fx{};
  std::array<double, 4> fy{};
  std::array<double, 4> fz{};
  std::array<double, 4> slip{};
};

/// Static vertical loads, front pair then rear pair.
std::array<double, 4> static_wheel_loads(const VehicleParams& params);

/// Pure lateral Magic Formula for one tire.
double magic_formula(double slip, double fz, double mu, const VehicleParams& params);

/// Slope of the lateral curve at zero slip, i.e. the linear cornering stiffness of one tire.
double cornering_stiffness(double fz, double mu, const VehicleParams& params);

std::array<double, 4> sideslip_angles(const VehicleState& state, double steer, const VehicleParams& params);

WheelForces tire_forces(const VehicleState& state, const ControlInput& input, double mu,
                        const VehicleParams& params);

/// One forward-Euler step of the planar Newton-Euler equations.
VehicleState step_dynamics(const VehicleState& state, const ControlInput& input, double mu,
                           const VehicleParams& params, double ts = kSampleTime);

Pose step_pose(const Pose& pose, const VehicleState& state, double ts = kSampleTime);

void check_state_bounds(const VehicleState& state);

}  // namespace dkmpc::vehicle
