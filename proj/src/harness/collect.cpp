#include "dkmpc/harness/collect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dkmpc/control/mpc.hpp"

namespace dkmpc::harness {

void ExcitationSpec::validate() const
{
  if (trajectories < 1)
    throw std::invalid_argument("need at least one trajectory");
  if (!(duration > 0.0))
    throw std::invalid_argument("trajectory duration must be positive");
  if (!(mu > 0.0 && mu <= 1.2))
    throw std::invalid_argument("friction coefficient must lie in (0, 1.2]");
  if (!(v_min > vehicle::kMinSpeed && v_min < v_max))
    throw std::invalid_argument("speed range must satisfy kMinSpeed < v_min < v_max");
  if (!(steer_max > 0.0 && steer_max <= vehicle::kMaxSteer))
    throw std::invalid_argument("steering amplitude must lie in (0, 0.3] rad");
  if (!(chirp_f_min > 0.0 && chirp_f_min < chirp_f_max))
    throw std::invalid_argument("chirp band must satisfy 0 < f_min < f_max");
  if (!(kp > 0.0))
    throw std::invalid_argument("speed gain must be positive");
}

namespace {

enum class SteerMode { Chirp, Steps, Quiet };

class Excitation
{
public:
  Excitation(const vehicle::VehicleParams& params, const ExcitationSpec& spec, std::mt19937_64& rng)
      : params_(params), spec_(spec), rng_(rng)
  {
  }

  koopman::Trajectory run(std::string& failure)
  {
    const double ts = vehicle::kSampleTime;
    const int steps = static_cast<int>(std::ceil(spec_.duration / ts));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng_); };

    vehicle::VehicleState x{uniform(spec_.v_min, spec_.v_max), 0.0, 0.0};
    double v_ref = x.vx;
    double v_target = x.vx;
    double next_target = uniform(3.0, 6.0);
    double dither = 0.0;
    double next_dither = 0.0;

    SteerMode mode = SteerMode::Quiet;
    double seg_start = 0.0;
    double seg_len = 0.0;
    double amp = 0.0;
    double f0 = 0.0;
    double f1 = 0.0;
    double hold = 0.0;
    double next_hold = 0.0;

    koopman::Trajectory traj;
    traj.states.push_back(x);
    for (int k = 0; k < steps; ++k) {
      const double t = k * ts;
      if (t >= next_target) {
        v_target = uniform(spec_.v_min, spec_.v_max);
        next_target = t + uniform(3.0, 6.0);
      }
      v_ref += std::clamp(v_target - v_ref, -2.0 * ts, 2.0 * ts);
      if (t >= next_dither) {
        dither = uniform(-300.0, 300.0);
        next_dither = t + uniform(0.5, 2.0);
      }

      if (t >= seg_start + seg_len) {
        seg_start = t;
        seg_len = uniform(2.0, 5.0);
        const double r = unit(rng_);
        mode = r < 0.45 ? SteerMode::Chirp : (r < 0.9 ? SteerMode::Steps : SteerMode::Quiet);
        amp = uniform(0.2, 1.0) * amplitude_limit(x.vx);
        if (mode == SteerMode::Quiet)
          amp *= 0.1;
        f0 = uniform(spec_.chirp_f_min, 0.5 * (spec_.chirp_f_min + spec_.chirp_f_max));
        f1 = uniform(f0, spec_.chirp_f_max);
        next_hold = t;
      }
      double steer = 0.0;
      if (mode == SteerMode::Chirp) {
        const double tau = t - seg_start;
        steer = amp * std::sin(2.0 * std::numbers::pi * (f0 * tau + 0.5 * (f1 - f0) * tau * tau / seg_len));
      } else {
        if (t >= next_hold) {
          hold = uniform(-amp, amp);
          next_hold = t + uniform(0.3, 1.5);
        }
        steer = hold;
      }
      steer = std::clamp(steer, -spec_.steer_max, spec_.steer_max);
      const double torque = std::clamp(control::p_longitudinal(v_ref, x.vx, spec_.kp, params_.max_torque) + dither,
                                       -params_.max_torque, params_.max_torque);
      const vehicle::ControlInput u{torque, steer};
      try {
        x = vehicle::step_dynamics(x, u, spec_.mu, params_, ts);
      } catch (const std::exception& e) {
        failure = e.what();
        return {};
      }
      traj.inputs.push_back(u);
      traj.states.push_back(x);
    }
    return traj;
  }

private:
  // Steering that demands about the friction-limited lateral acceleration.
  double amplitude_limit(double vx) const
  {
    const double a_max = spec_.mu * vehicle::kGravity;
    const double lim = 1.0 * params_.wheelbase() * a_max / (vx * vx);
    return std::clamp(lim, 0.03, spec_.steer_max);
  }

  const vehicle::VehicleParams& params_;
  const ExcitationSpec& spec_;
  std::mt19937_64& rng_;
};

}  // namespace

CollectResult collect_trajectories(const vehicle::VehicleParams& params, const ExcitationSpec& spec,
                                   std::uint64_t seed)
{
  params.validate();
  spec.validate();
  CollectResult out;
  for (int i = 0; i < spec.trajectories; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::string failure;
    koopman::Trajectory t = Excitation(params, spec, rng).run(failure);
    if (t.states.empty())
      out.dropped.push_back("trajectory " + std::to_string(i) + ": " + failure);
    else
      out.trajectories.push_back(std::move(t));
  }
  return out;
}

bool Coverage::complete() const
{
  return std::all_of(vx.begin(), vx.end(), [](int c) { return c > 0; }) &&
         std::all_of(steer.begin(), steer.end(), [](int c) { return c > 0; });
}

Coverage coverage(const std::vector<koopman::Trajectory>& trajectories, const ExcitationSpec& spec)
{
  Coverage c;
  auto bin = [](double v, double lo, double hi) {
    const int b = static_cast<int>(std::floor(10.0 * (v - lo) / (hi - lo)));
    return b < 0 || b > 10 ? -1 : std::min(b, 9);
  };
  for (const auto& t : trajectories) {
    for (const auto& x : t.states)
      if (const int b = bin(x.vx, spec.v_min, spec.v_max); b >= 0)
        ++c.vx[static_cast<std::size_t>(b)];
    for (const auto& u : t.inputs)
      if (const int b = bin(std::abs(u.steer), 0.0, spec.steer_max); b >= 0)
        ++c.steer[static_cast<std::size_t>(b)];
  }
  return c;
}

void write_trajectories_csv(std::ostream& os, const std::vector<koopman::Trajectory>& trajectories)
{
  os << "traj,k,Vx,Vy,wr,T,delta_f\n";
  char buf[256];
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& t = trajectories[i];
    for (std::size_t k = 0; k < t.states.size(); ++k) {
      const auto& x = t.states[k];
      if (k < t.inputs.size())
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, k, x.vx, x.vy, x.wr,
                      t.inputs[k].torque, t.inputs[k].steer);
      else
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%.17g,%.17g,,\n", i, k, x.vx, x.vy, x.wr);
      os << buf;
    }
  }
}

std::vector<koopman::Trajectory> read_trajectories_csv(std::istream& is)
{
  std::string line;
  if (!std::getline(is, line) || line != "traj,k,Vx,Vy,wr,T,delta_f")
    throw std::runtime_error("trajectory CSV: unexpected header");
  std::vector<koopman::Trajectory> out;
  long current = -1;
  bool closed = true;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      f.push_back(cell);
    if (f.size() == 5 || f.size() == 6)
      f.resize(7);  // getline drops trailing empty cells
    if (f.size() != 7)
      throw std::runtime_error("trajectory CSV: bad field count on line " + std::to_string(lineno));
    try {
      const long id = std::stol(f[0]);
      if (id != current) {
        if (!closed)
          throw std::runtime_error("run ended without a final state");
        out.emplace_back();
        current = id;
      }
      if (closed && !out.back().states.empty())
        throw std::runtime_error("samples after a run's final state");
      out.back().states.push_back({std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
      closed = f[5].empty();
      if (!closed)
        out.back().inputs.push_back({std::stod(f[5]), std::stod(f[6])});
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("trajectory CSV line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::logic_error&) {
      throw std::runtime_error("trajectory CSV: unparsable number on line " + std::to_string(lineno));
    }
  }
  if (!closed)
    throw std::runtime_error("trajectory CSV: last run has no final state");
  return out;
}

}  // namespace dkmpc::harness
