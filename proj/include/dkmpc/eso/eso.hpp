#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

#include "dkmpc/koopman/koopman_model.hpp"

namespace dkmpc::eso {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class EigenError : public std::runtime_error
{
public:
  explicit EigenError(const std::string& what) : std::runtime_error(what) {}
};

class InfeasibleGainsError : public std::runtime_error
{
public:
  InfeasibleGainsError(const std::string& what, double best_rho) : std::runtime_error(what), best_rho(best_rho) {}
  double best_rho;
};

/// Lifted dynamics z' = a z + b u_s + drift + w, with u_s the scaled input.
struct LiftedLinearModel
{
  MatrixXd a;
  MatrixXd b;
  VectorXd drift;

  static LiftedLinearModel from(const koopman::KoopmanModel& model);
  Eigen::Index q() const { return a.rows(); }
};

/// Scalar observer gains. The checked constructor rejects gains whose error
/// dynamics are not contracting (spectral radius >= 1).
class EsoGains
{
public:
  EsoGains(const MatrixXd& a, double beta1, double beta2);
  static EsoGains unchecked(double beta1, double beta2);

  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }

private:
  EsoGains() = default;
  double beta1_ = 0.0;
  double beta2_ = 0.0;
};

struct EsoState
{
  VectorXd z_hat;  // estimated lifted state
  VectorXd w_hat;  // estimated total disturbance

  /// Estimate seeded with the first lifted measurement and zero disturbance.
  static EsoState initial(const VectorXd& z_meas);
};

/**
 * One observer update with linear correction on the estimation error e = z_hat - z_meas:
 *   z_hat' = a z_hat + b u_s + drift + w_hat - beta1 e
 *   w_hat' = w_hat - beta2 e
 */
EsoState eso_step(const LiftedLinearModel& model, const EsoGains& gains, const EsoState& est,
                  const VectorXd& z_meas, const VectorXd& u_scaled);
EsoState eso_step(const koopman::KoopmanModel& model, const EsoGains& gains, const EsoState& est,
                  const VectorXd& z_meas, const vehicle::ControlInput& u);

/// Disturbance estimate after the correction from z_meas; equals the w_hat of
/// eso_step(..., est, z_meas, u) for any u.
VectorXd corrected_disturbance(const EsoGains& gains, const EsoState& est, const VectorXd& z_meas);

/// Error dynamics [[a - beta1 I, I], [-beta2 I, I]] acting on (z_hat - z, w_hat - w).
MatrixXd error_matrix(const MatrixXd& a, const EsoGains& gains);

/// Largest eigenvalue magnitude; throws EigenError if the eigen routine fails.
double spectral_radius(const MatrixXd& m);

/// Deterministic grid search over beta1 in [0, 2], beta2 in [0, 1] (step 0.01)
/// for the smallest spectral radius, smallest gains breaking ties. Throws
/// InfeasibleGainsError when the best radius exceeds target_rho.
EsoGains design_gains(const MatrixXd& a, double target_rho);

}  // namespace dkmpc::eso
