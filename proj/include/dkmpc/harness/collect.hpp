#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dkmpc/koopman/dataset.hpp"
#include "dkmpc/vehicle/vehicle.hpp"

namespace dkmpc::harness {

struct ExcitationSpec
{
  int trajectories = 120;
  double duration = 20.0;
  double mu = 0.85;
  double v_min = 20.0 / 3.6;
  double v_max = 80.0 / 3.6;
  double steer_max = vehicle::kMaxSteer;
  double chirp_f_min = 0.1;
  double chirp_f_max = 1.0;
  double kp = 800.0;

  void validate() const;
};

struct CollectResult
{
  std::vector<koopman::Trajectory> trajectories;
  std::vector<std::string> dropped;  // one message per diverged run
};

/// Deterministic for a fixed seed.
CollectResult collect_trajectories(const vehicle::VehicleParams& params, const ExcitationSpec& spec,
                                   std::uint64_t seed);

/// Decile histograms of Vx over [v_min, v_max] and |steer| over [0, steer_max].
struct Coverage
{
  std::array<int, 10> vx{};
  std::array<int, 10> steer{};

  bool complete() const;
};

Coverage coverage(const std::vector<koopman::Trajectory>& trajectories, const ExcitationSpec& spec);

/// CSV with header traj,k,Vx,Vy,wr,T,delta_f (inputs empty on each run's final row).
void write_trajectories_csv(std::ostream& os, const std::vector<koopman::Trajectory>& trajectories);
std::vector<koopman::Trajectory> read_trajectories_csv(std::istream& is);

}  // namespace dkmpc::harness
