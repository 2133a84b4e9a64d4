#include "dkmpc/control/mpc.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace dkmpc::control {

using vehicle::Pose;
using vehicle::VehicleState;

void MpcConfig::validate() const
{
  if (nc < 1 || np < nc)
    throw std::invalid_argument("horizons must satisfy 1 <= N_c <= N_p");
  if (!q.allFinite() || (q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("Q must be finite and symmetric");
  if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(q).eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("Q must be positive semidefinite");
  if (!(r > 0.0) || !(p >= 0.0) || !std::isfinite(r) || !std::isfinite(p))
    throw std::invalid_argument("need R > 0 and P >= 0");
  if (!(steer_min < steer_max))
    throw std::invalid_argument("steering bounds are empty");
  if (!(x_min.array() < x_max.array()).all())
    throw std::invalid_argument("state bounds are empty");
  if (sqp_iterations < 1 || !(sqp_tolerance > 0.0))
    throw std::invalid_argument("SQP iterations and tolerance must be positive");
}

double p_longitudinal(double vx_ref, double vx, double kp, double t_max)
{
  if (!(kp > 0.0))
    throw std::invalid_argument("proportional gain must be positive");
  return std::clamp(kp * (vx_ref - vx), -t_max, t_max);
}

Eigen::VectorXd shifted_seed(const Eigen::VectorXd& steer_sequence)
{
  const Eigen::Index n = steer_sequence.size();
  Eigen::VectorXd s(n);
  if (n == 0)
    return s;
  s.head(n - 1) = steer_sequence.tail(n - 1);
  s(n - 1) = steer_sequence(n - 1);
  return s;
}

namespace {

VehicleState to_state(const Eigen::Vector3d& v)
{
  return {v(0), v(1), v(2)};
}

std::vector<Pose> rollout_poses(const VelocityPrediction& pred, const Pose& pose, const Eigen::VectorXd& steer)
{
  std::vector<Pose> poses{pose};
  for (int i = 0; i < pred.horizon(); ++i)
    poses.push_back(vehicle::step_pose(poses.back(), to_state(pred.at(i, steer))));
  return poses;
}

// Pose trajectory and its Jacobians (3 x N_c each) with respect to the steering moves.
void linearize(const VelocityPrediction& pred, const Pose& pose, const Eigen::VectorXd& steer,
               std::vector<Pose>& poses, std::vector<Eigen::MatrixXd>& jac)
{
  const Eigen::Index nc = steer.size();
  const double ts = vehicle::kSampleTime;
  poses.assign(1, pose);
  jac.assign(1, Eigen::MatrixXd::Zero(3, nc));
  for (int i = 0; i < pred.horizon(); ++i) {
    const Eigen::Vector3d v = pred.at(i, steer);
    const Eigen::MatrixXd& dv = pred.sensitivity[i];
    const Pose& p = poses.back();
    const Eigen::MatrixXd& dp = jac.back();
    const double c = std::cos(p.theta);
    const double s = std::sin(p.theta);
    Eigen::MatrixXd next = dp;
    const Eigen::RowVectorXd dth = dp.row(2);
    next.row(0) += ts * (c * dv.row(0) - s * dv.row(1) - (v(0) * s + v(1) * c) * dth);
    next.row(1) += ts * (s * dv.row(0) + c * dv.row(1) + (v(0) * c - v(1) * s) * dth);
    next.row(2) += ts * dv.row(2);
    poses.push_back(vehicle::step_pose(p, to_state(v)));
    jac.push_back(std::move(next));
  }
}

Eigen::Vector3d pose_error(const Pose& p, const Pose& r)
{
  return {p.x - r.x, p.y - r.y, p.theta - r.theta};
}

// Difference operator rows: (D d)_j = d_j - d_{j-1}, with d_{-1} = steer_prev moved to the offset.
Eigen::MatrixXd difference_matrix(Eigen::Index nc)
{
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(nc, nc);
  for (Eigen::Index j = 1; j < nc; ++j)
    d(j, j - 1) = -1.0;
  return d;
}

struct Constraints
{
  Eigen::MatrixXd g;
  Eigen::VectorXd h;
};

Constraints box_rows(Eigen::Index nc, const MpcConfig& cfg)
{
  Constraints c;
  c.g.resize(2 * nc, nc);
  c.g << Eigen::MatrixXd::Identity(nc, nc), -Eigen::MatrixXd::Identity(nc, nc);
  c.h.resize(2 * nc);
  c.h << Eigen::VectorXd::Constant(nc, cfg.steer_max), Eigen::VectorXd::Constant(nc, -cfg.steer_min);
  return c;
}

// Velocity bounds on predicted states 1..N_p. Rows with no steering influence
// cannot be acted on; a violated one is reported through `uncontrollable`.
Constraints state_rows(const VelocityPrediction& pred, const MpcConfig& cfg, bool& uncontrollable)
{
  const Eigen::Index nc = pred.sensitivity.front().cols();
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  uncontrollable = false;
  for (int i = 1; i <= pred.horizon(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::RowVectorXd s = pred.sensitivity[i].row(k);
      const double o = pred.offset[i](k);
      if (s.cwiseAbs().maxCoeff() < 1e-12) {
        if (o > cfg.x_max(k) || o < cfg.x_min(k))
          uncontrollable = true;
        continue;
      }
      rows.push_back(s);
      rhs.push_back(cfg.x_max(k) - o);
      rows.push_back(-s);
      rhs.push_back(o - cfg.x_min(k));
    }
  }
  Constraints c;
  c.g.resize(static_cast<Eigen::Index>(rows.size()), nc);
  c.h.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    c.g.row(static_cast<Eigen::Index>(i)) = rows[i];
    c.h(static_cast<Eigen::Index>(i)) = rhs[i];
  }
  return c;
}

Constraints stack(const Constraints& a, const Constraints& b)
{
  Constraints c;
  c.g.resize(a.g.rows() + b.g.rows(), a.g.cols());
  c.g << a.g, b.g;
  c.h.resize(a.h.size() + b.h.size());
  c.h << a.h, b.h;
  return c;
}

double max_pose_change(const std::vector<Pose>& a, const std::vector<Pose>& b)
{
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max({m, std::abs(a[i].x - b[i].x), std::abs(a[i].y - b[i].y), std::abs(a[i].theta - b[i].theta)});
  return m;
}

}  // namespace

double tracking_cost(const VelocityPrediction& pred, const Pose& pose, const ReferenceWindow& ref,
                     double steer_prev, const MpcConfig& cfg, const Eigen::VectorXd& steer)
{
  const std::vector<Pose> poses = rollout_poses(pred, pose, steer);
  double j = 0.0;
  for (int i = 1; i <= pred.horizon(); ++i) {
    const Eigen::Vector3d e = pose_error(poses[i], ref.poses[i - 1]);
    j += e.dot(cfg.q * e);
  }
  double prev = steer_prev;
  for (Eigen::Index k = 0; k < steer.size(); ++k) {
    j += cfg.r * steer(k) * steer(k) + cfg.p * (steer(k) - prev) * (steer(k) - prev);
    prev = steer(k);
  }
  return j;
}

MpcResult solve_tracking(const VelocityPrediction& pred, const Pose& pose, const ReferenceWindow& ref, double torque,
                         double steer_prev, const MpcConfig& cfg, const std::optional<Eigen::VectorXd>& seed)
{
  cfg.validate();
  if (pred.horizon() != cfg.np || static_cast<int>(pred.sensitivity.front().cols()) != cfg.nc)
    throw std::invalid_argument("prediction does not match the configured horizons");
  if (static_cast<int>(ref.poses.size()) != cfg.np)
    throw std::invalid_argument("reference window length must equal N_p");

  const Eigen::Index nc = cfg.nc;
  Eigen::VectorXd steer = seed ? *seed : Eigen::VectorXd::Constant(nc, steer_prev);
  if (steer.size() != nc)
    throw std::invalid_argument("SQP seed length must equal N_c");
  steer = steer.cwiseMax(cfg.steer_min).cwiseMin(cfg.steer_max);

  const Eigen::MatrixXd dmat = difference_matrix(nc);
  Eigen::VectorXd d0 = Eigen::VectorXd::Zero(nc);
  d0(0) = steer_prev;
  // Effort and rate terms are already quadratic in the moves.
  const Eigen::MatrixXd h_input = cfg.r * Eigen::MatrixXd::Identity(nc, nc) + cfg.p * dmat.transpose() * dmat;
  const Eigen::VectorXd f_input = -cfg.p * dmat.transpose() * d0;

  MpcResult res;
  const Constraints box = box_rows(nc, cfg);
  bool uncontrollable = false;
  const Constraints states = state_rows(pred, cfg, uncontrollable);
  const Constraints full = stack(box, states);
  res.degraded = uncontrollable;

  std::vector<Pose> poses;
  std::vector<Eigen::MatrixXd> jac;
  linearize(pred, pose, steer, poses, jac);
  double cost = tracking_cost(pred, pose, ref, steer_prev, cfg, steer);

  for (int it = 0; it < cfg.sqp_iterations; ++it) {
    QpProblem qp;
    qp.H = h_input;
    qp.f = f_input;
    for (int i = 1; i <= cfg.np; ++i) {
      const Eigen::Vector3d c = pose_error(poses[i], ref.poses[i - 1]) - jac[i] * steer;
      qp.H += jac[i].transpose() * cfg.q * jac[i];
      qp.f += jac[i].transpose() * cfg.q * c;
    }
    qp.H *= 2.0;
    qp.f *= 2.0;
    qp.H = 0.5 * (qp.H + qp.H.transpose());

    QpSolution sol;
    try {
      qp.G = full.g;
      qp.h = full.h;
      try {
        sol = qp_solve(qp);
      } catch (const QpInfeasibleError&) {
        qp.G = box.g;
        qp.h = box.h;
        sol = qp_solve(qp);
        res.degraded = true;
      }
    } catch (const QpSolverError&) {
      if (it == 0)
        throw;
      res.degraded = true;
      break;
    }
    res.kkt = sol.kkt;
    ++res.sqp_iterations;

    Eigen::VectorXd next = sol.x.cwiseMax(cfg.steer_min).cwiseMin(cfg.steer_max);
    double next_cost = tracking_cost(pred, pose, ref, steer_prev, cfg, next);
    if (it > 0) {
      // Backtrack on the true cost so accepted iterates never get worse.
      const Eigen::VectorXd dir = next - steer;
      double alpha = 1.0;
      while (next_cost > cost && alpha > 1e-4) {
        alpha *= 0.5;
        next = steer + alpha * dir;
        next_cost = tracking_cost(pred, pose, ref, steer_prev, cfg, next);
      }
      if (next_cost > cost) {
        res.objective_history.push_back(cost);
        break;
      }
    }
    std::vector<Pose> next_poses;
    linearize(pred, pose, next, next_poses, jac);
    const double change = max_pose_change(poses, next_poses);
    steer = std::move(next);
    poses = std::move(next_poses);
    cost = next_cost;
    res.objective_history.push_back(cost);
    if (change < cfg.sqp_tolerance)
      break;
  }

  res.steer_sequence = steer;
  res.steer = steer(0);
  res.objective = cost;
  res.predicted_poses = poses;
  for (int i = 0; i <= cfg.np; ++i)
    res.predicted_states.push_back(to_state(pred.at(i, steer)));
  for (int i = 0; i < cfg.np; ++i)
    res.inputs.push_back({torque, steer(std::min<Eigen::Index>(i, nc - 1))});
  return res;
}

namespace {

template <class F>
MpcResult timed(F&& f)
{
  const auto t0 = std::chrono::steady_clock::now();
  MpcResult r = f();
  r.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

MpcResult solve_eso_dkmpc(const koopman::KoopmanModel& model, const eso::EsoState& est, const Pose& pose,
                          const VehicleState& x, const ReferenceWindow& ref, double torque,
                          const vehicle::ControlInput& u_prev, const MpcConfig& cfg,
                          const std::optional<Eigen::VectorXd>& seed)
{
  return timed([&] {
    const VelocityPrediction pred = koopman_prediction(model, x, est.w_hat, torque, cfg.np, cfg.nc);
    return solve_tracking(pred, pose, ref, torque, u_prev.steer, cfg, seed);
  });
}

MpcResult solve_dkmpc(const koopman::KoopmanModel& model, const Pose& pose, const VehicleState& x,
                      const ReferenceWindow& ref, double torque, const vehicle::ControlInput& u_prev,
                      const MpcConfig& cfg, const std::optional<Eigen::VectorXd>& seed)
{
  return timed([&] {
    const Eigen::VectorXd w = Eigen::VectorXd::Zero(model.dims().q());
    const VelocityPrediction pred = koopman_prediction(model, x, w, torque, cfg.np, cfg.nc);
    return solve_tracking(pred, pose, ref, torque, u_prev.steer, cfg, seed);
  });
}

MpcResult solve_lmpc(const LinearBicycle& model, const Pose& pose, const VehicleState& x, const ReferenceWindow& ref,
                     double torque, const vehicle::ControlInput& u_prev, const MpcConfig& cfg,
                     const std::optional<Eigen::VectorXd>& seed)
{
  return timed([&] {
    const VelocityPrediction pred = bicycle_prediction(model, x, cfg.np, cfg.nc);
    return solve_tracking(pred, pose, ref, torque, u_prev.steer, cfg, seed);
  });
}

}  // namespace dkmpc::control
