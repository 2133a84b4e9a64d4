#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "dkmpc/vehicle/vehicle.hpp"

namespace dkmpc::koopman {

/// One simulated run: states.size() == inputs.size() + 1.
struct Trajectory
{
  std::vector<vehicle::VehicleState> states;
  std::vector<vehicle::ControlInput> inputs;
};

/// p + 1 consecutive states (n x (p+1)) and the p inputs between them (m x p).
struct Sequence
{
  Eigen::MatrixXd states;
  Eigen::MatrixXd inputs;

  Eigen::Index length() const { return inputs.cols(); }
};

struct TrajectoryDataset
{
  std::vector<Sequence> train;
  std::vector<Sequence> validation;
  double sample_time = vehicle::kSampleTime;
};

Eigen::Vector3d to_vector(const vehicle::VehicleState& x);
vehicle::VehicleState to_state(const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::Vector2d to_vector(const vehicle::ControlInput& u);

/**
 * Cut trajectories into windows of p steps taken every `stride` samples.
 *
 * Whole trajectories are assigned to the validation split (a deterministic
 * shuffle seeded by `seed`) so that no window straddles both splits.
 */
TrajectoryDataset make_dataset(const std::vector<Trajectory>& trajectories, int p, double validation_fraction,
                               std::uint64_t seed, int stride = 0);

}  // namespace dkmpc::koopman
