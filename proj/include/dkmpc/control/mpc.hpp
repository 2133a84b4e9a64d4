#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dkmpc/control/predictors.hpp"
#include "dkmpc/control/qp.hpp"
#include "dkmpc/eso/eso.hpp"
#include "dkmpc/koopman/koopman_model.hpp"
#include "dkmpc/vehicle/vehicle.hpp"

namespace dkmpc::control {

struct MpcConfig
{
  int np = 20;
  int nc = 5;
  Eigen::Matrix3d q = Eigen::Vector3d(10.0, 10.0, 50.0).asDiagonal();
  double r = 1.0;
  double p = 100.0;
  // Velocity bounds on (Vx, Vy, wr).
  Eigen::Vector3d x_min{vehicle::kMinSpeed, -5.0, -1.5};
  Eigen::Vector3d x_max{80.0, 5.0, 1.5};
  double steer_min = -vehicle::kMaxSteer;
  double steer_max = vehicle::kMaxSteer;
  int sqp_iterations = 5;
  double sqp_tolerance = 1e-4;

  /// Throws std::invalid_argument on violated invariants.
  void validate() const;
};

/// Reference poses for prediction steps 1..N_p (theta unwrapped) and the speed set-point.
struct ReferenceWindow
{
  std::vector<vehicle::Pose> poses;
  double vx_ref = 0.0;
};

struct MpcResult
{
  double steer = 0.0;                                 // first move, applied to the plant
  Eigen::VectorXd steer_sequence;                     // N_c free moves
  std::vector<vehicle::ControlInput> inputs;          // N_p inputs, torque pinned, terminal hold
  std::vector<vehicle::VehicleState> predicted_states;  // N_p + 1, index 0 = measured
  std::vector<vehicle::Pose> predicted_poses;           // N_p + 1, index 0 = measured
  double objective = 0.0;
  std::vector<double> objective_history;              // true cost at each accepted SQP iterate
  int sqp_iterations = 0;
  bool degraded = false;  // state bounds dropped or SQP stopped on a solver failure
  KktResiduals kkt;       // of the last QP solved
  double solve_ms = 0.0;
};

/// T = clamp(kp (vx_ref - vx), -t_max, t_max).
double p_longitudinal(double vx_ref, double vx, double kp, double t_max);

/**
 * Generic tracking MPC over an affine velocity prediction. Steering moves are
 * the only decision variables; the pose recursion is linearized around the
 * current iterate each SQP pass. `seed` is the linearization point (N_c);
 * when empty the previous steering is held.
 */
MpcResult solve_tracking(const VelocityPrediction& prediction, const vehicle::Pose& pose,
                         const ReferenceWindow& ref, double torque, double steer_prev, const MpcConfig& cfg,
                         const std::optional<Eigen::VectorXd>& seed = std::nullopt);

/// True tracking cost of a steering sequence under the given prediction.
double tracking_cost(const VelocityPrediction& prediction, const vehicle::Pose& pose, const ReferenceWindow& ref,
                     double steer_prev, const MpcConfig& cfg, const Eigen::VectorXd& steer);

MpcResult solve_eso_dkmpc(const koopman::KoopmanModel& model, const eso::EsoState& est, const vehicle::Pose& pose,
                          const vehicle::VehicleState& x, const ReferenceWindow& ref, double torque,
                          const vehicle::ControlInput& u_prev, const MpcConfig& cfg,
                          const std::optional<Eigen::VectorXd>& seed = std::nullopt);

MpcResult solve_dkmpc(const koopman::KoopmanModel& model, const vehicle::Pose& pose, const vehicle::VehicleState& x,
                      const ReferenceWindow& ref, double torque, const vehicle::ControlInput& u_prev,
                      const MpcConfig& cfg, const std::optional<Eigen::VectorXd>& seed = std::nullopt);

MpcResult solve_lmpc(const LinearBicycle& model, const vehicle::Pose& pose, const vehicle::VehicleState& x,
                     const ReferenceWindow& ref, double torque, const vehicle::ControlInput& u_prev,
                     const MpcConfig& cfg, const std::optional<Eigen::VectorXd>& seed = std::nullopt);

/// Previous solution shifted one step with the last move repeated.
Eigen::VectorXd shifted_seed(const Eigen::VectorXd& steer_sequence);

}  // namespace dkmpc::control
