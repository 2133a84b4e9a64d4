#include <doctest.h>

#include <cmath>
#include <random>

#include "dkmpc/control/mpc.hpp"
#include "dkmpc/control/predictors.hpp"
#include "dkmpc/control/qp.hpp"
#include "dkmpc/harness/reference.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace dkmpc;
using namespace dkmpc::control;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_spd(int n, std::mt19937_64& rng)
{
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m(i) = g(rng);
  return m * m.transpose() + 0.1 * MatrixXd::Identity(n, n);
}

ReferenceWindow straight_window(double vx, int np)
{
  ReferenceWindow w;
  w.vx_ref = vx;
  for (int i = 1; i <= np; ++i)
    w.poses.push_back({vx * vehicle::kSampleTime * i, 0.0, 0.0});
  return w;
}

ReferenceWindow circle_window(double vx, double radius, int np)
{
  ReferenceWindow w;
  w.vx_ref = vx;
  for (int i = 1; i <= np; ++i) {
    const double phi = vx * vehicle::kSampleTime * i / radius;
    w.poses.push_back({radius * std::sin(phi), radius * (1.0 - std::cos(phi)), phi});
  }
  return w;
}

}  // namespace

TEST_CASE("qp: single bound")
{
  QpProblem qp;
  qp.H = MatrixXd::Constant(1, 1, 2.0);
  qp.f = VectorXd::Zero(1);
  qp.G = MatrixXd::Constant(1, 1, -1.0);
  qp.h = VectorXd::Constant(1, -1.0);
  const QpSolution s = qp_solve(qp);
  CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.lambda(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.kkt.max() < 1e-9);
}

TEST_CASE("qp: unconstrained equals the linear solve")
{
  std::mt19937_64 rng(1);
  for (int n : {1, 3, 8}) {
    QpProblem qp;
    qp.H = random_spd(n, rng);
    qp.f = VectorXd::Random(n);
    const QpSolution s = qp_solve(qp);
    CHECK((s.x - qp.H.ldlt().solve(-qp.f)).norm() < 1e-10);
  }
}

TEST_CASE("qp: random box problems match active-set enumeration")
{
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick(0, 9);
  for (int k = 0; k < 50; ++k) {
    QpProblem qp;
    qp.H = random_spd(10, rng);
    qp.f = VectorXd::Random(10) * 3.0;
    qp.G = MatrixXd::Zero(5, 10);
    qp.h = VectorXd::Zero(5);
    for (int r = 0; r < 5; ++r) {
      const double sign = (r % 2 == 0) ? 1.0 : -1.0;
      qp.G(r, pick(rng)) = sign;
      qp.h(r) = 0.2;
    }
    const QpSolution s = qp_solve(qp);
    CHECK(std::abs(s.objective - testing::brute_force_qp(qp)) < 1e-8);
    CHECK(s.kkt.max() < 1e-6);
  }
}

TEST_CASE("qp: general inequalities and equalities")
{
  std::mt19937_64 rng(3);
  for (int k = 0; k < 30; ++k) {
    QpProblem qp;
    qp.H = random_spd(4, rng);
    qp.f = VectorXd::Random(4);
    qp.G = MatrixXd::Random(6, 4);
    qp.h = VectorXd::Random(6).cwiseAbs();  // x = 0 is feasible
    const QpSolution s = qp_solve(qp);
    CHECK(std::abs(s.objective - testing::brute_force_qp(qp)) < 1e-8);
    CHECK(((qp.G * s.x - qp.h).array() <= 1e-9).all());
    CHECK((s.lambda.array() >= 0.0).all());
  }
  QpProblem eq;
  eq.H = MatrixXd::Identity(2, 2);
  eq.f = VectorXd::Zero(2);
  eq.Aeq = MatrixXd::Ones(1, 2);
  eq.beq = VectorXd::Constant(1, 1.0);
  const QpSolution s = qp_solve(eq);
  CHECK(s.x(0) == doctest::Approx(0.5));
  CHECK(s.x(1) == doctest::Approx(0.5));
  CHECK(s.kkt.max() < 1e-9);
}

TEST_CASE("qp: failures")
{
  QpProblem qp;
  qp.H = MatrixXd::Identity(1, 1);
  qp.f = VectorXd::Zero(1);
  qp.G.resize(2, 1);
  qp.G << 1.0, -1.0;
  qp.h.resize(2);
  qp.h << 0.0, -1.0;  // x <= 0 and x >= 1
  CHECK_THROWS_AS(qp_solve(qp), QpInfeasibleError);
  QpProblem bad;
  bad.H = -MatrixXd::Identity(2, 2);
  bad.f = VectorXd::Zero(2);
  CHECK_THROWS_AS(qp_solve(bad), QpSolverError);
}

TEST_CASE("qp: deterministic")
{
  std::mt19937_64 rng(4);
  QpProblem qp;
  qp.H = random_spd(6, rng);
  qp.f = VectorXd::Random(6);
  qp.G = MatrixXd::Random(4, 6);
  qp.h = VectorXd::Constant(4, 0.1);
  const QpSolution a = qp_solve(qp), b = qp_solve(qp);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("proportional speed control")
{
  CHECK(p_longitudinal(10.0, 10.0, 800.0, 2500.0) == 0.0);
  CHECK(p_longitudinal(11.0, 10.0, 500.0, 2500.0) == doctest::Approx(500.0));
  CHECK(p_longitudinal(30.0, 10.0, 800.0, 2500.0) == 2500.0);
  CHECK(p_longitudinal(0.0, 30.0, 800.0, 2500.0) == -2500.0);
  CHECK_THROWS_AS(p_longitudinal(1.0, 0.0, 0.0, 2500.0), std::invalid_argument);
}

TEST_CASE("configuration invariants")
{
  MpcConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.steer_max == 0.3);
  CHECK(c.steer_min == -0.3);
  c.nc = 30;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = MpcConfig{};
  c.r = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = MpcConfig{};
  c.q(0, 0) = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("linear bicycle stiffness is the tire slope at zero slip")
{
  const vehicle::VehicleParams p;
  const LinearBicycle b = LinearBicycle::from_params(p, 0.85);
  const auto fz = vehicle::static_wheel_loads(p);
  CHECK(b.front_stiffness == doctest::Approx(2.0 * 0.85 * p.mf_d * fz[0] * p.mf_b * p.mf_c));
  CHECK(b.rear_stiffness == doctest::Approx(2.0 * 0.85 * p.mf_d * fz[2] * p.mf_b * p.mf_c));
  CHECK_THROWS_AS(bicycle_prediction(b, {0.4, 0.0, 0.0}, 20, 5), vehicle::LowSpeedError);
}

TEST_CASE("velocity predictions are affine in the moves")
{
  const vehicle::VehicleParams p;
  const auto model = testing::bicycle_as_lifted(p, 0.85, 10.0);
  const vehicle::VehicleState x{10.0, 0.1, 0.05};
  const VectorXd w = VectorXd::Random(6) * 0.01;
  const VelocityPrediction pred = koopman_prediction(model, x, w, 300.0, 20, 5);
  REQUIRE(pred.horizon() == 20);
  CHECK(pred.offset[0] == koopman::to_vector(x));
  CHECK(pred.sensitivity[0].norm() == 0.0);

  const VectorXd d = VectorXd::Random(5) * 0.2;
  std::vector<vehicle::ControlInput> inputs;
  for (int i = 0; i < 20; ++i)
    inputs.push_back({300.0, d(std::min(i, 4))});
  const auto roll = model.rollout(x, inputs, w);
  for (int i = 1; i <= 20; ++i)
    CHECK((pred.at(i, d) - koopman::to_vector(roll[i - 1])).norm() < 1e-10);
}

TEST_CASE("on a straight reference the optimal steering is zero")
{
  const vehicle::VehicleParams p;
  const MpcConfig cfg;
  const double vx = 10.0;
  const auto model = testing::bicycle_as_lifted(p, 0.85, vx);
  const ReferenceWindow ref = straight_window(vx, cfg.np);
  const eso::EsoState est{model.lift(vehicle::VehicleState{vx, 0.0, 0.0}), VectorXd::Zero(6)};
  const MpcResult a = solve_eso_dkmpc(model, est, {}, {vx, 0.0, 0.0}, ref, 0.0, {0.0, 0.0}, cfg);
  CHECK(a.steer == 0.0);
  const MpcResult b = solve_lmpc(LinearBicycle::from_params(p, 0.85), {}, {vx, 0.0, 0.0}, ref, 0.0, {0.0, 0.0}, cfg);
  CHECK(b.steer == 0.0);
  CHECK(b.objective == 0.0);
}

TEST_CASE("steering saturates on a reference that is too tight")
{
  const vehicle::VehicleParams p;
  const MpcConfig cfg;
  const auto lmpc = LinearBicycle::from_params(p, 0.85);
  const MpcResult r = solve_lmpc(lmpc, {}, {10.0, 0.0, 0.0}, circle_window(10.0, 3.0, cfg.np), 0.0, {0.0, 0.3}, cfg);
  CHECK(r.steer == doctest::Approx(0.3).epsilon(1e-12));
  for (Eigen::Index i = 0; i < r.steer_sequence.size(); ++i)
    CHECK(r.steer_sequence(i) <= 0.3 + 1e-12);
}

TEST_CASE("single-step problem has a closed form")
{
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MpcConfig cfg;
  cfg.np = 1;
  cfg.nc = 1;
  for (int k = 0; k < 50; ++k) {
    // Synthetic prediction whose first velocity depends on the move, so the
    // single pose step is affine in it and the linearization is exact.
    VelocityPrediction pred;
    pred.offset = {Eigen::Vector3d(10.0 + u(rng), u(rng), 0.3 * u(rng)), Eigen::Vector3d::Zero()};
    pred.sensitivity = {Eigen::Vector3d(u(rng), 5.0 * u(rng), 2.0 * u(rng)), MatrixXd::Zero(3, 1)};
    const vehicle::Pose pose{u(rng), u(rng), 0.5 * u(rng)};
    ReferenceWindow ref;
    ref.poses = {{pose.x + 0.25 + 0.1 * u(rng), pose.y + 0.1 * u(rng), pose.theta + 0.05 * u(rng)}};
    const double prev = 0.3 * u(rng);

    const double ts = vehicle::kSampleTime;
    const double c = std::cos(pose.theta), s = std::sin(pose.theta);
    const Eigen::Vector3d& o = pred.offset[0];
    const Eigen::Vector3d sv = pred.sensitivity[0];
    const Eigen::Vector3d e0(pose.x + ts * (o(0) * c - o(1) * s) - ref.poses[0].x,
                             pose.y + ts * (o(0) * s + o(1) * c) - ref.poses[0].y,
                             pose.theta + ts * o(2) - ref.poses[0].theta);
    const Eigen::Vector3d j(ts * (sv(0) * c - sv(1) * s), ts * (sv(0) * s + sv(1) * c), ts * sv(2));
    const double num = -(j.dot(cfg.q * e0)) + cfg.p * prev;
    const double den = j.dot(cfg.q * j) + cfg.r + cfg.p;
    const double expect = std::clamp(num / den, cfg.steer_min, cfg.steer_max);

    const MpcResult r = solve_tracking(pred, pose, ref, 0.0, prev, cfg);
    CHECK(std::abs(r.steer - expect) < 1e-8);
  }
}

TEST_CASE("dkmpc is eso-dkmpc with a zero disturbance")
{
  const vehicle::VehicleParams p;
  const MpcConfig cfg;
  const auto model = testing::bicycle_as_lifted(p, 0.85, 12.0);
  const auto ref = circle_window(12.0, 60.0, cfg.np);
  const vehicle::VehicleState x{12.0, 0.05, 0.02};
  const eso::EsoState est{model.lift(x), VectorXd::Zero(6)};
  const MpcResult a = solve_eso_dkmpc(model, est, {}, x, ref, 100.0, {100.0, 0.01}, cfg);
  const MpcResult b = solve_dkmpc(model, {}, x, ref, 100.0, {100.0, 0.01}, cfg);
  CHECK(a.steer == b.steer);
  CHECK(a.steer_sequence == b.steer_sequence);
}

TEST_CASE("solutions respect bounds, pin the torque and hold the last move")
{
  const vehicle::VehicleParams p;
  MpcConfig cfg;
  cfg.x_max(2) = 0.25;  // tight yaw-rate bound that the reference wants to exceed
  cfg.x_min(2) = -0.25;
  const auto lmpc = LinearBicycle::from_params(p, 0.85);
  for (double radius : {200.0, 40.0, 15.0}) {
    const MpcResult r = solve_lmpc(lmpc, {}, {10.0, 0.0, 0.0}, circle_window(10.0, radius, cfg.np), 777.0,
                                   {777.0, 0.0}, cfg);
    CHECK(r.steer >= cfg.steer_min);
    CHECK(r.steer <= cfg.steer_max);
    REQUIRE(r.inputs.size() == 20);
    for (int i = 0; i < 20; ++i) {
      CHECK(r.inputs[i].torque == 777.0);
      CHECK(r.inputs[i].steer == r.steer_sequence(std::min(i, 4)));
    }
    if (!r.degraded) {
      for (int i = 1; i <= 20; ++i) {
        CHECK(r.predicted_states[i].wr <= 0.25 + 1e-6);
        CHECK(r.predicted_states[i].wr >= -0.25 - 1e-6);
      }
    }
    CHECK(r.kkt.max() < 1e-6);
  }
}

TEST_CASE("SQP objective is non-increasing on the lane change")
{
  const vehicle::VehicleParams p;
  const MpcConfig cfg;
  const auto lmpc = LinearBicycle::from_params(p, 0.85);
  const auto model = testing::bicycle_as_lifted(p, 0.85, 12.0);
  const harness::ReferencePath path = harness::gen_dlc_reference({});
  int checked = 0;
  for (double s = 10.0; s < 120.0; s += 5.0) {
    const vehicle::Pose foot = path.at(s);
    const vehicle::Pose pose{foot.x, foot.y + 0.4, foot.theta - 0.05};
    const vehicle::VehicleState x{12.0, 0.1, 0.05};
    const auto ref = harness::reference_window(path, pose, x.vx, x.vx, cfg.np);
    for (const MpcResult& r : {solve_lmpc(lmpc, pose, x, ref, 0.0, {0.0, 0.02}, cfg),
                               solve_dkmpc(model, pose, x, ref, 0.0, {0.0, 0.02}, cfg)}) {
      for (std::size_t i = 1; i < r.objective_history.size(); ++i)
        CHECK(r.objective_history[i] <= r.objective_history[i - 1] + 1e-9);
      CHECK(r.objective == r.objective_history.back());
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("receding horizon shift property in exact cases")
{
  const vehicle::VehicleParams p;
  const MpcConfig cfg;
  const auto lmpc = LinearBicycle::from_params(p, 0.85);

  SUBCASE("saturated turn")
  {
    const auto ref = circle_window(10.0, 3.0, cfg.np + 1);
    ReferenceWindow first = ref;
    first.poses.pop_back();
    const MpcResult r0 = solve_lmpc(lmpc, {}, {10.0, 0.0, 0.0}, first, 0.0, {0.0, 0.3}, cfg);
    REQUIRE(r0.steer_sequence.cwiseAbs().minCoeff() == doctest::Approx(0.3));
    ReferenceWindow second = ref;
    second.poses.erase(second.poses.begin());
    const MpcResult r1 = solve_lmpc(lmpc, r0.predicted_poses[1], r0.predicted_states[1], second, 0.0,
                                    {0.0, r0.steer}, cfg, shifted_seed(r0.steer_sequence));
    CHECK(std::abs(r1.steer - r0.steer_sequence(1)) < 1e-6);
  }
  SUBCASE("on a straight path")
  {
    const auto ref = straight_window(10.0, cfg.np + 1);
    ReferenceWindow first = ref;
    first.poses.pop_back();
    const MpcResult r0 = solve_lmpc(lmpc, {}, {10.0, 0.0, 0.0}, first, 0.0, {0.0, 0.0}, cfg);
    ReferenceWindow second = ref;
    second.poses.erase(second.poses.begin());
    const MpcResult r1 =
        solve_lmpc(lmpc, r0.predicted_poses[1], r0.predicted_states[1], second, 0.0, {0.0, r0.steer}, cfg);
    CHECK(std::abs(r1.steer - r0.steer_sequence(1)) < 1e-6);
  }
}

TEST_CASE("shifted seed")
{
  VectorXd s(4);
  s << 1, 2, 3, 4;
  VectorXd e(4);
  e << 2, 3, 4, 4;
  CHECK(shifted_seed(s) == e);
}

TEST_CASE("solver input checks")
{
  const MpcConfig cfg;
  const auto lmpc = LinearBicycle::from_params(vehicle::VehicleParams{}, 0.85);
  ReferenceWindow shortref = straight_window(10.0, 5);
  CHECK_THROWS_AS(solve_lmpc(lmpc, {}, {10.0, 0.0, 0.0}, shortref, 0.0, {}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(solve_lmpc(lmpc, {}, {10.0, 0.0, 0.0}, straight_window(10.0, 20), 0.0, {}, cfg,
                             VectorXd::Zero(3)),
                  std::invalid_argument);
}
