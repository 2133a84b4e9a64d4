#include "dkmpc/harness/closed_loop.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace dkmpc::harness {

double SpeedProfile::at(double t) const
{
  if (t <= knots.front().first)
    return knots.front().second;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (t < knots[i].first) {
      const auto& [t0, v0] = knots[i - 1];
      const auto& [t1, v1] = knots[i];
      return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }
  }
  return knots.back().second;
}

void SpeedProfile::validate() const
{
  if (knots.empty())
    throw std::invalid_argument("speed profile needs at least one knot");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(knots[i].second > vehicle::kMinSpeed) || !std::isfinite(knots[i].second))
      throw std::invalid_argument("speed set-points must exceed the minimum speed");
    if (i > 0 && !(knots[i].first > knots[i - 1].first))
      throw std::invalid_argument("speed profile times must increase");
  }
}

void Scenario::validate() const
{
  if (!(mu > 0.0 && mu <= 1.2))
    throw std::invalid_argument("friction coefficient must lie in (0, 1.2]");
  if (!(duration > 0.0))
    throw std::invalid_argument("scenario duration must be positive");
  if (mass && !(*mass > 0.0))
    throw std::invalid_argument("mass override must be positive");
  if (!(noise_std.array() >= 0.0).all())
    throw std::invalid_argument("noise standard deviations must be non-negative");
  if (!(max_lateral_error > 0.0))
    throw std::invalid_argument("divergence threshold must be positive");
  speed.validate();
  path.validate();
}

int Scenario::steps() const
{
  return static_cast<int>(std::ceil(duration / vehicle::kSampleTime - 1e-9));
}

Scenario dlc_high_mu()
{
  Scenario s;
  s.name = "dlc_highmu";
  s.mu = 0.85;
  s.speed = SpeedProfile::constant(35.0 / 3.6);
  s.duration = 13.0;
  return s;
}

Scenario dlc_low_mu()
{
  Scenario s;
  s.name = "dlc_lowmu";
  s.mu = 0.5;
  s.speed.knots = {{0.0, 50.0 / 3.6}, {2.0, 45.0 / 3.6}, {6.0, 55.0 / 3.6}};
  s.duration = 10.0;
  return s;
}

std::string to_string(ControllerKind kind)
{
  switch (kind) {
    case ControllerKind::EsoDkmpc:
      return "eso-dkmpc";
    case ControllerKind::Dkmpc:
      return "dkmpc";
    case ControllerKind::Lmpc:
      return "lmpc";
  }
  return "unknown";
}

ControllerKind controller_from_string(const std::string& name)
{
  if (name == "eso-dkmpc")
    return ControllerKind::EsoDkmpc;
  if (name == "dkmpc")
    return ControllerKind::Dkmpc;
  if (name == "lmpc")
    return ControllerKind::Lmpc;
  throw UsageError("unknown controller '" + name + "' (expected eso-dkmpc, dkmpc or lmpc)");
}

void validate(const ControllerSetup& setup)
{
  setup.mpc.validate();
  setup.params.validate();
  if (!(setup.kp > 0.0))
    throw std::invalid_argument("speed gain must be positive");
  if (setup.kind != ControllerKind::Lmpc && setup.model == nullptr)
    throw std::invalid_argument(to_string(setup.kind) + " needs a trained model");
  if (setup.kind == ControllerKind::EsoDkmpc && !setup.gains)
    throw std::invalid_argument("eso-dkmpc needs observer gains");
}

RunTrace run_closed_loop(const Scenario& scenario, const ControllerSetup& setup, std::uint64_t seed)
{
  scenario.validate();
  validate(setup);

  vehicle::VehicleParams plant = setup.params;
  if (scenario.mass)
    plant.mass = *scenario.mass;
  const ReferencePath path = gen_dlc_reference(scenario.path);
  const control::LinearBicycle bicycle = control::LinearBicycle::from_params(setup.params, setup.lmpc_mu);
  const double ts = vehicle::kSampleTime;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool noisy = (scenario.noise_std.array() > 0.0).any();

  RunTrace trace;
  trace.controller = to_string(setup.kind);
  vehicle::VehicleState x{scenario.speed.at(0.0), 0.0, 0.0};
  vehicle::Pose pose{0.0, 0.0, 0.0};
  vehicle::ControlInput u_prev{0.0, 0.0};
  std::optional<eso::EsoState> est;
  std::optional<Eigen::VectorXd> seed_moves;

  const int steps = scenario.steps();
  for (int k = 0; k < steps; ++k) {
    const double t = k * ts;
    TraceRow row{};
    row.t = t;
    try {
      vehicle::VehicleState meas = x;
      if (noisy) {
        meas.vx += scenario.noise_std(0) * gauss(rng);
        meas.vy += scenario.noise_std(1) * gauss(rng);
        meas.wr += scenario.noise_std(2) * gauss(rng);
      }
      const Projection proj = path.project(pose.x, pose.y);
      const double v_ref = scenario.speed.at(t);
      const control::ReferenceWindow ref = reference_window(path, pose, meas.vx, v_ref, setup.mpc.np, ts);
      const double torque = control::p_longitudinal(v_ref, meas.vx, setup.kp, plant.max_torque);

      row.x = pose.x;
      row.y = pose.y;
      row.theta = pose.theta;
      row.vx = x.vx;
      row.vy = x.vy;
      row.wr = x.wr;
      row.xr = proj.foot.x;
      row.yr = proj.foot.y;
      row.theta_r = proj.foot.theta;
      row.ey = proj.lateral;
      row.dphi = pose.theta - proj.foot.theta;
      row.torque = torque;
      if (std::abs(proj.lateral) > scenario.max_lateral_error)
        throw std::runtime_error("lateral error exceeds the divergence threshold");

      control::MpcResult sol;
      Eigen::VectorXd z;
      switch (setup.kind) {
        case ControllerKind::EsoDkmpc: {
          z = setup.model->lift(meas);
          if (!est)
            est = eso::EsoState::initial(z);
          eso::EsoState current = *est;
          current.w_hat = eso::corrected_disturbance(*setup.gains, *est, z);
          row.w_norm = current.w_hat.norm();
          sol = control::solve_eso_dkmpc(*setup.model, current, pose, meas, ref, torque, u_prev, setup.mpc,
                                         seed_moves);
          break;
        }
        case ControllerKind::Dkmpc:
          sol = control::solve_dkmpc(*setup.model, pose, meas, ref, torque, u_prev, setup.mpc, seed_moves);
          break;
        case ControllerKind::Lmpc:
          sol = control::solve_lmpc(bicycle, pose, meas, ref, torque, u_prev, setup.mpc, seed_moves);
          break;
      }
      const vehicle::ControlInput u{torque, sol.steer};
      row.steer = sol.steer;
      row.solve_ms = setup.record_timing ? sol.solve_ms : 0.0;
      if (setup.kind == ControllerKind::EsoDkmpc)
        est = eso::eso_step(*setup.model, *setup.gains, *est, z, u);
      seed_moves = control::shifted_seed(sol.steer_sequence);

      const vehicle::VehicleState next = vehicle::step_dynamics(x, u, scenario.mu, plant, ts);
      pose = vehicle::step_pose(pose, x, ts);
      x = next;
      x.vy += ts * scenario.lateral_force / plant.mass;
      vehicle::check_state_bounds(x);
      u_prev = u;
      trace.rows.push_back(row);
    } catch (const std::exception& e) {
      trace.rows.push_back(row);
      trace.diverged = true;
      trace.reason = e.what();
      break;
    }
  }
  return trace;
}

void write_trace_csv(std::ostream& os, const RunTrace& trace)
{
  os << "t,X,Y,theta,Vx,Vy,wr,T,delta_f,Xr,Yr,theta_r,eY,dphi,w_norm,solve_ms\n";
  char buf[512];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof buf,
                  "%.4f,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.6g\n", r.t, r.x,
                  r.y, r.theta, r.vx, r.vy, r.wr, r.torque, r.steer, r.xr, r.yr, r.theta_r, r.ey, r.dphi, r.w_norm,
                  r.solve_ms);
    os << buf;
  }
}

}  // namespace dkmpc::harness
