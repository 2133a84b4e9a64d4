#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "dkmpc/koopman/dataset.hpp"
#include "dkmpc/koopman/koopman_model.hpp"
#include "dkmpc/nn/mlp.hpp"
#include "dkmpc/nn/scaler.hpp"

namespace testing {

inline dkmpc::nn::Layer linear_layer(const Eigen::MatrixXd& w)
{
  dkmpc::nn::Layer l;
  l.weight = w;
  l.activation = dkmpc::nn::Activation::Identity;
  return l;
}

/// Scaler with a zero center so that linear maps stay linear after scaling.
inline dkmpc::nn::MinMaxScaler centered_scaler(const Eigen::VectorXd& half_range)
{
  return dkmpc::nn::MinMaxScaler(-half_range, half_range);
}

/**
 * Model that reproduces x' = a0 x + b0 u exactly: identity encoder (phi = n)
 * and decoder, so the lifted state is [x_s; x_s] and both blocks follow the
 * same scaled dynamics.
 */
inline dkmpc::koopman::KoopmanModel exact_lti_model(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& b0,
                                                    const dkmpc::nn::MinMaxScaler& sx,
                                                    const dkmpc::nn::MinMaxScaler& su)
{
  const Eigen::Index n = a0.rows();
  const Eigen::Index m = b0.cols();
  const Eigen::MatrixXd hx = sx.half_range().asDiagonal();
  const Eigen::MatrixXd hu = su.half_range().asDiagonal();
  const Eigen::MatrixXd as = hx.inverse() * a0 * hx;
  const Eigen::MatrixXd bs = hx.inverse() * b0 * hu;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  a.topLeftCorner(n, n) = as;
  a.bottomRightCorner(n, n) = as;
  Eigen::MatrixXd b(2 * n, m);
  b << bs, bs;
  const dkmpc::nn::Mlp enc({linear_layer(Eigen::MatrixXd::Identity(n, n))});
  const dkmpc::nn::Mlp dec({linear_layer(Eigen::MatrixXd::Identity(n, n))});
  return dkmpc::koopman::KoopmanModel(enc, dec, a, b, sx, su);
}

/// Stable 3x3 system with coupled modes and a 3x2 input map.
inline void reference_lti(Eigen::MatrixXd& a0, Eigen::MatrixXd& b0)
{
  a0.resize(3, 3);
  a0 << 0.95, 0.05, 0.0,  //
      -0.04, 0.90, 0.03,  //
      0.01, 0.02, 0.85;
  b0.resize(3, 2);
  b0 << 0.10, 0.00,  //
      0.00, 0.05,  //
      0.02, 0.08;
}

/// Trajectories of x' = a0 x + b0 u under uniform random inputs in [-1, 1].
inline std::vector<dkmpc::koopman::Trajectory> lti_trajectories(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& b0,
                                                                int count, int steps, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<dkmpc::koopman::Trajectory> out;
  for (int t = 0; t < count; ++t) {
    dkmpc::koopman::Trajectory traj;
    Eigen::Vector3d x(uni(rng), uni(rng), uni(rng));
    traj.states.push_back(dkmpc::koopman::to_state(x));
    for (int k = 0; k < steps; ++k) {
      const Eigen::Vector2d u(uni(rng), uni(rng));
      x = a0 * x + b0 * u;
      traj.inputs.push_back({u(0), u(1)});
      traj.states.push_back(dkmpc::koopman::to_state(x));
    }
    out.push_back(std::move(traj));
  }
  return out;
}

}  // namespace testing

#include "dkmpc/control/predictors.hpp"

namespace testing {

/// Euler-discretized linear single-track model at speed vx, written as a
/// lifted model with identity basis (q = 6) and unit scalers.
inline dkmpc::koopman::KoopmanModel bicycle_as_lifted(const dkmpc::vehicle::VehicleParams& p, double mu, double vx)
{
  const auto b = dkmpc::control::LinearBicycle::from_params(p, mu);
  const double ts = dkmpc::vehicle::kSampleTime;
  const double cf = b.front_stiffness, cr = b.rear_stiffness;
  Eigen::MatrixXd a0 = Eigen::MatrixXd::Identity(3, 3);
  a0(1, 1) += ts * (-(cf + cr) / (b.mass * vx));
  a0(1, 2) += ts * (-vx - (b.lf * cf - b.lr * cr) / (b.mass * vx));
  a0(2, 1) += ts * (-(b.lf * cf - b.lr * cr) / (b.yaw_inertia * vx));
  a0(2, 2) += ts * (-(b.lf * b.lf * cf + b.lr * b.lr * cr) / (b.yaw_inertia * vx));
  Eigen::MatrixXd b0 = Eigen::MatrixXd::Zero(3, 2);
  b0(0, 0) = ts / (p.mass * p.wheel_radius);
  b0(1, 1) = ts * cf / b.mass;
  b0(2, 1) = ts * b.lf * cf / b.yaw_inertia;
  return exact_lti_model(a0, b0, dkmpc::nn::MinMaxScaler::identity(3), dkmpc::nn::MinMaxScaler::identity(2));
}

}  // namespace testing
