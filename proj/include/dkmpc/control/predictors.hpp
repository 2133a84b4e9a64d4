#pragma once

#include <Eigen/Dense>

#include <vector>

#include "dkmpc/koopman/koopman_model.hpp"
#include "dkmpc/vehicle/vehicle.hpp"

namespace dkmpc::control {

/**
 * Predicted body velocities over the horizon as an affine function of the
 * free steering moves d (length N_c):  x_i = offset[i] + sensitivity[i] * d,
 * i = 0..N_p, where x_0 is the measured state and steering after step N_c - 1
 * holds the last move.
 */
struct VelocityPrediction
{
  std::vector<Eigen::Vector3d> offset;
  std::vector<Eigen::MatrixXd> sensitivity;  // 3 x N_c each

  int horizon() const { return static_cast<int>(offset.size()) - 1; }
  Eigen::Vector3d at(int i, const Eigen::VectorXd& steer) const { return offset[i] + sensitivity[i] * steer; }
};

/// Lifted-space prediction: z_{i+1} = A z_i + B u_s + c + w with torque fixed and w held constant.
VelocityPrediction koopman_prediction(const koopman::KoopmanModel& model, const vehicle::VehicleState& x,
                                      const Eigen::VectorXd& w, double torque, int np, int nc);

/// Linear single-track model in (Vy, wr) with Vx frozen at the measured value.
struct LinearBicycle
{
  double mass = 0.0;
  double yaw_inertia = 0.0;
  double lf = 0.0;
  double lr = 0.0;
  double front_stiffness = 0.0;  // axle cornering stiffness, N/rad
  double rear_stiffness = 0.0;

  /// Axle stiffness from the tire curve slope at zero slip and the static loads.
  static LinearBicycle from_params(const vehicle::VehicleParams& params, double mu);
};

VelocityPrediction bicycle_prediction(const LinearBicycle& model, const vehicle::VehicleState& x, int np, int nc,
                                      double ts = vehicle::kSampleTime);

}  // namespace dkmpc::control
