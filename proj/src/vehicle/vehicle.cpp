#include "dkmpc/vehicle/vehicle.hpp"

#include <cmath>
#include <sstream>

namespace dkmpc::vehicle {

void VehicleParams::validate() const
{
  const bool positive = mass > 0 && yaw_inertia > 0 && lf > 0 && lr > 0 && track > 0 &&
                        wheel_radius > 0 && mf_b > 0 && mf_c > 0 && mf_d > 0 && mf_e > 0 &&
                        max_torque > 0;
  if (!positive)
    throw std::invalid_argument("vehicle parameters must all be positive");
  if (mf_d > 1.2)
    throw std::invalid_argument("Magic Formula D must lie in (0, 1.2]");
}

std::array<double, 4> static_wheel_loads(const VehicleParams& params)
{
  const double weight = params.mass * kGravity;
  const double front = weight * params.lr / (2.0 * params.wheelbase());
  const double rear = weight * params.lf / (2.0 * params.wheelbase());
  return {front, front, rear, rear};
}

double magic_formula(double slip, double fz, double mu, const VehicleParams& params)
{
  const double bx = params.mf_b * slip;
  return mu * params.mf_d * fz *
         std::sin(params.mf_c * std::atan(bx - params.mf_e * (bx - std::atan(bx))));
}

double cornering_stiffness(double fz, double mu, const VehicleParams& params)
{
  return mu * params.mf_d * fz * params.mf_b * params.mf_c;
}

std::array<double, 4> sideslip_angles(const VehicleState& state, double steer, const VehicleParams& params)
{
  if (!(state.vx > kMinSpeed)) {
    std::ostringstream os;
    os << "sideslip undefined at Vx = " << state.vx << " m/s (needs > " << kMinSpeed << ")";
    throw LowSpeedError(os.str());
  }
  const double half_track_rate = 0.5 * params.track * state.wr;
  const double vy_front = state.vy + params.lf * state.wr;
  const double vy_rear = state.vy - params.lr * state.wr;
  const double vx_left = state.vx - half_track_rate;
  const double vx_right = state.vx + half_track_rate;
  return {steer - std::atan2(vy_front, vx_left), steer - std::atan2(vy_front, vx_right),
          -std::atan2(vy_rear, vx_left), -std::atan2(vy_rear, vx_right)};
}

WheelForces tire_forces(const VehicleState& state, const ControlInput& input, double mu,
                        const VehicleParams& params)
{
  WheelForces out;
  out.slip = sideslip_angles(state, input.steer, params);
  out.fz = static_wheel_loads(params);
  const double fx_wheel = 0.25 * input.torque / params.wheel_radius;
  for (std::size_t i = 0; i < 4; ++i) {
    double fx = fx_wheel;
    double fy = magic_formula(out.slip[i], out.fz[i], mu, params);
    const double cap = mu * out.fz[i];
    const double mag = std::hypot(fx, fy);
    if (mag > cap) {
      const double scale = cap / mag;
      fx *= scale;
      fy *= scale;
    }
    out.fx[i] = fx;
    out.fy[i] = fy;
  }
  return out;
}

void check_state_bounds(const VehicleState& state)
{
  const bool finite = std::isfinite(state.vx) && std::isfinite(state.vy) && std::isfinite(state.wr);
  if (!finite || std::abs(state.vx) > 80.0 || std::abs(state.wr) > 3.0) {
    std::ostringstream os;
    os << "vehicle state out of bounds: Vx=" << state.vx << " Vy=" << state.vy << " wr=" << state.wr;
    throw StateBoundError(os.str());
  }
}

VehicleState step_dynamics(const VehicleState& state, const ControlInput& input, double mu,
                           const VehicleParams& params, double ts)
{
  if (!(ts > 0.0 && ts <= 0.05))
    throw std::invalid_argument("sample time must lie in (0, 0.05]");
  if (std::abs(input.steer) > kMaxSteer + 1e-12 || std::abs(input.torque) > params.max_torque + 1e-9)
    throw std::invalid_argument("control input outside admissible range");

  const WheelForces f = tire_forces(state, input, mu, params);
  const double c = std::cos(input.steer);
  const double s = std::sin(input.steer);
  const double fx_front = f.fx[0] + f.fx[1];
  const double fy_front = f.fy[0] + f.fy[1];
  const double fx_rear = f.fx[2] + f.fx[3];
  const double fy_rear = f.fy[2] + f.fy[3];

  const double m = params.mass;
  const double iz = params.yaw_inertia;
  const double half_track = 0.5 * params.track;

  VehicleState next;
  next.vx = state.vx + ts * state.vy * state.wr + ts / m * (fx_rear + fx_front * c - fy_front * s);
  next.vy = state.vy - ts * state.vx * state.wr + ts / m * (fy_rear + fx_front * s + fy_front * c);

  // Front forces act at +lf, rear at -lr; left wheels at +w/2 produce negative yaw from Fx.
  const double left = (f.fx[0] * c - f.fy[0] * s) + f.fx[2];
  const double right = (f.fx[1] * c - f.fy[1] * s) + f.fx[3];
  const double yaw_moment = params.lf * (fx_front * s + fy_front * c) - params.lr * fy_rear +
                            half_track * (right - left);
  next.wr = state.wr + ts * yaw_moment / iz;

  check_state_bounds(next);
  return next;
}

Pose step_pose(const Pose& pose, const VehicleState& state, double ts)
{
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  return {pose.x + ts * (state.vx * c - state.vy * s), pose.y + ts * (state.vx * s + state.vy * c),
          pose.theta + ts * state.wr};
}

}  // namespace dkmpc::vehicle
