#include "dkmpc/control/predictors.hpp"

#include <algorithm>

namespace dkmpc::control {

namespace {

void check_horizons(int np, int nc)
{
  if (nc < 1 || np < nc)
    throw std::invalid_argument("horizons must satisfy 1 <= N_c <= N_p");
}

}  // namespace

VelocityPrediction koopman_prediction(const koopman::KoopmanModel& model, const vehicle::VehicleState& x,
                                      const Eigen::VectorXd& w, double torque, int np, int nc)
{
  check_horizons(np, nc);
  const int q = model.dims().q();
  if (w.size() != q)
    throw nn::ShapeError("disturbance length does not match the lifted dimension");

  // Split B u_s into a torque part (fixed) and a steering slope.
  const Eigen::VectorXd center = model.input_scaler().center();
  const Eigen::VectorXd half = model.input_scaler().half_range();
  const Eigen::VectorXd steer_slope = model.B().col(1) / half(1);
  const Eigen::VectorXd constant = model.B().col(0) * ((torque - center(0)) / half(0)) -
                                   model.B().col(1) * (center(1) / half(1)) + model.drift() + w;

  VelocityPrediction out;
  out.offset.reserve(np + 1);
  out.sensitivity.reserve(np + 1);
  Eigen::VectorXd z = model.lift(x);
  Eigen::MatrixXd sz = Eigen::MatrixXd::Zero(q, nc);
  out.offset.emplace_back(z.head<3>());
  out.sensitivity.push_back(sz.topRows(3));
  for (int i = 0; i < np; ++i) {
    Eigen::VectorXd zn = model.A() * z + constant;
    Eigen::MatrixXd sn = model.A() * sz;
    sn.col(std::min(i, nc - 1)) += steer_slope;
    z = std::move(zn);
    sz = std::move(sn);
    out.offset.emplace_back(z.head<3>());
    out.sensitivity.push_back(sz.topRows(3));
  }
  return out;
}

LinearBicycle LinearBicycle::from_params(const vehicle::VehicleParams& params, double mu)
{
  const auto loads = vehicle::static_wheel_loads(params);
  LinearBicycle b;
  b.mass = params.mass;
  b.yaw_inertia = params.yaw_inertia;
  b.lf = params.lf;
  b.lr = params.lr;
  b.front_stiffness = 2.0 * vehicle::cornering_stiffness(loads[0], mu, params);
  b.rear_stiffness = 2.0 * vehicle::cornering_stiffness(loads[2], mu, params);
  return b;
}

VelocityPrediction bicycle_prediction(const LinearBicycle& model, const vehicle::VehicleState& x, int np, int nc,
                                      double ts)
{
  check_horizons(np, nc);
  if (!(x.vx > vehicle::kMinSpeed))
    throw vehicle::LowSpeedError("linear bicycle model needs forward speed");
  const double vx = x.vx;
  const double cf = model.front_stiffness;
  const double cr = model.rear_stiffness;
  const double m = model.mass;
  const double iz = model.yaw_inertia;

  Eigen::Matrix2d a;
  a << 1.0 - ts * (cf + cr) / (m * vx), ts * ((model.lr * cr - model.lf * cf) / (m * vx) - vx),
      ts * (model.lr * cr - model.lf * cf) / (iz * vx),
      1.0 - ts * (model.lf * model.lf * cf + model.lr * model.lr * cr) / (iz * vx);
  const Eigen::Vector2d b(ts * cf / m, ts * model.lf * cf / iz);

  VelocityPrediction out;
  Eigen::Vector2d lat(x.vy, x.wr);
  Eigen::MatrixXd sl = Eigen::MatrixXd::Zero(2, nc);
  auto push = [&]() {
    out.offset.emplace_back(vx, lat(0), lat(1));
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, nc);
    s.bottomRows(2) = sl;
    out.sensitivity.push_back(std::move(s));
  };
  push();
  for (int i = 0; i < np; ++i) {
    lat = a * lat;
    Eigen::MatrixXd sn = a * sl;
    sn.col(std::min(i, nc - 1)) += b;
    sl = std::move(sn);
    push();
  }
  return out;
}

}  // namespace dkmpc::control
