#include <doctest.h>

#include <cmath>
#include <random>

#include "dkmpc/vehicle/vehicle.hpp"

using namespace dkmpc::vehicle;

TEST_CASE("slip angles vanish when running straight")
{
  const VehicleParams p;
  for (double a : sideslip_angles({10.0, 0.0, 0.0}, 0.0, p))
    CHECK(a == 0.0);
}

TEST_CASE("slip angles are odd in (Vy, wr, steer)")
{
  const VehicleParams p;
  const auto a = sideslip_angles({12.0, 0.3, 0.2}, 0.04, p);
  const auto b = sideslip_angles({12.0, -0.3, -0.2}, -0.04, p);
  // Mirroring also swaps left and right wheels.
  CHECK(a[0] == doctest::Approx(-b[1]).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(-b[0]).epsilon(1e-14));
  CHECK(a[2] == doctest::Approx(-b[3]).epsilon(1e-14));
  CHECK(a[3] == doctest::Approx(-b[2]).epsilon(1e-14));
}

TEST_CASE("front-left slip angle by hand")
{
  VehicleParams p;
  p.lf = 1.2;
  p.track = 1.6;
  const auto a = sideslip_angles({10.0, 0.2, 0.1}, 0.05, p);
  // 0.05 - atan2(0.2 + 0.12, 10 - 0.08)
  CHECK(a[0] == doctest::Approx(0.05 - std::atan(0.32 / 9.92)).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(0.05 - std::atan(0.32 / 10.08)).epsilon(1e-14));
}

TEST_CASE("slip angles need forward speed")
{
  CHECK_THROWS_AS(sideslip_angles({0.5, 0.0, 0.0}, 0.0, VehicleParams{}), LowSpeedError);
  CHECK_NOTHROW(sideslip_angles({0.51, 0.0, 0.0}, 0.0, VehicleParams{}));
}

TEST_CASE("tire forces: no slip and no torque give no force")
{
  const WheelForces f = tire_forces({10.0, 0.0, 0.0}, {0.0, 0.0}, 0.85, VehicleParams{});
  for (int i = 0; i < 4; ++i) {
    CHECK(f.fx[i] == 0.0);
    CHECK(f.fy[i] == 0.0);
  }
}

TEST_CASE("static loads sum to the weight")
{
  const VehicleParams p;
  const auto fz = static_wheel_loads(p);
  CHECK(fz[0] + fz[1] + fz[2] + fz[3] == doctest::Approx(p.mass * kGravity).epsilon(1e-14));
  CHECK(fz[0] == doctest::Approx(p.mass * kGravity * p.lr / (2.0 * p.wheelbase())));
  for (double f : fz)
    CHECK(f > 0.0);
}

TEST_CASE("magic formula is odd and peaks at mu D Fz")
{
  const VehicleParams p;
  const double fz = 4000.0;
  const double mu = 0.85;
  double peak = 0.0;
  double peak_slip = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double a = -0.3 + 0.6 * i / 10000.0;
    const double f = magic_formula(a, fz, mu, p);
    CHECK(f == doctest::Approx(-magic_formula(-a, fz, mu, p)).epsilon(1e-14));
    if (std::abs(f) > peak) {
      peak = std::abs(f);
      peak_slip = std::abs(a);
    }
  }
  const double cap = mu * p.mf_d * fz;
  CHECK(peak <= cap * (1.0 + 1e-12));
  CHECK(peak > 0.999 * cap);
  // Peak of sin(C atan(.)) sits where C atan(.) = pi / 2, well inside the scan.
  CHECK(peak_slip > 0.05);
  CHECK(peak_slip < 0.3);
}

TEST_CASE("cornering stiffness is the curve slope at the origin")
{
  const VehicleParams p;
  const double h = 1e-6;
  const double fd = (magic_formula(h, 4000.0, 0.7, p) - magic_formula(-h, 4000.0, 0.7, p)) / (2 * h);
  CHECK(cornering_stiffness(4000.0, 0.7, p) == doctest::Approx(fd).epsilon(1e-8));
  CHECK(cornering_stiffness(4000.0, 0.7, p) == doctest::Approx(0.7 * p.mf_d * 4000.0 * p.mf_b * p.mf_c));
}

TEST_CASE("friction circle holds for every wheel")
{
  const VehicleParams p;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> vx(2.0, 30.0), vy(-3.0, 3.0), wr(-1.0, 1.0), steer(-0.3, 0.3),
      torque(-2500.0, 2500.0), mu(0.2, 1.2);
  for (int k = 0; k < 2000; ++k) {
    const double m = mu(rng);
    const WheelForces f = tire_forces({vx(rng), vy(rng), wr(rng)}, {torque(rng), steer(rng)}, m, p);
    for (int i = 0; i < 4; ++i)
      CHECK(std::hypot(f.fx[i], f.fy[i]) <= m * f.fz[i] * (1.0 + 1e-6));
  }
}

TEST_CASE("step dynamics examples")
{
  VehicleParams p;
  SUBCASE("coasting straight keeps the state")
  {
    const VehicleState s = step_dynamics({10.0, 0.0, 0.0}, {0.0, 0.0}, 0.85, p);
    CHECK(s.vx == 10.0);
    CHECK(s.vy == 0.0);
    CHECK(s.wr == 0.0);
  }
  SUBCASE("one Euler step under drive torque")
  {
    p.wheel_radius = 0.3;
    p.mass = 1848.0;
    const VehicleState s = step_dynamics({10.0, 0.0, 0.0}, {400.0, 0.0}, 0.85, p);
    CHECK(s.vx == doctest::Approx(10.0 + kSampleTime * (400.0 / 0.3) / 1848.0).epsilon(1e-14));
    CHECK(s.vy == 0.0);
    CHECK(s.wr == 0.0);
  }
  SUBCASE("mirrored steering mirrors the lateral response")
  {
    const VehicleState a = step_dynamics({10.0, 0.0, 0.0}, {100.0, 0.1}, 0.85, p);
    const VehicleState b = step_dynamics({10.0, 0.0, 0.0}, {100.0, -0.1}, 0.85, p);
    CHECK(a.vx == b.vx);
    CHECK(a.vy == doctest::Approx(-b.vy).epsilon(1e-14));
    CHECK(a.wr == doctest::Approx(-b.wr).epsilon(1e-14));
    CHECK(a.vy != 0.0);
  }
}

TEST_CASE("step dynamics rejects bad inputs")
{
  const VehicleParams p;
  CHECK_THROWS_AS(step_dynamics({10, 0, 0}, {0.0, 0.31}, 0.85, p), std::invalid_argument);
  CHECK_THROWS_AS(step_dynamics({10, 0, 0}, {3000.0, 0.0}, 0.85, p), std::invalid_argument);
  CHECK_THROWS_AS(step_dynamics({10, 0, 0}, {0.0, 0.0}, 0.85, p, 0.06), std::invalid_argument);
  CHECK_THROWS_AS(step_dynamics({0.4, 0, 0}, {0.0, 0.0}, 0.85, p), LowSpeedError);
  CHECK_THROWS_AS(check_state_bounds({std::nan(""), 0, 0}), StateBoundError);
}

TEST_CASE("pose update")
{
  const double ts = 0.025;
  SUBCASE("aligned frame")
  {
    const Pose q = step_pose({1.0, 2.0, 0.0}, {10.0, 0.0, 0.0}, ts);
    CHECK(q.x == doctest::Approx(1.0 + ts * 10.0));
    CHECK(q.y == 2.0);
    CHECK(q.theta == 0.0);
  }
  SUBCASE("rotated frame")
  {
    const Pose q = step_pose({1.0, 2.0, M_PI / 2}, {10.0, 0.0, 0.0}, ts);
    CHECK(q.x == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q.y == doctest::Approx(2.0 + ts * 10.0));
  }
  SUBCASE("general by hand")
  {
    const Pose q = step_pose({0.0, 0.0, 0.3}, {12.0, -0.4, 0.2}, ts);
    CHECK(q.x == doctest::Approx(ts * (12.0 * std::cos(0.3) + 0.4 * std::sin(0.3))).epsilon(1e-14));
    CHECK(q.y == doctest::Approx(ts * (12.0 * std::sin(0.3) - 0.4 * std::cos(0.3))).epsilon(1e-14));
    CHECK(q.theta == doctest::Approx(0.3 + ts * 0.2).epsilon(1e-14));
  }
}

TEST_CASE("trajectory under mirrored steering is the Y-mirror")
{
  const VehicleParams p;
  VehicleState a{15.0, 0.2, 0.05};
  VehicleState b{15.0, -0.2, -0.05};
  Pose pa{0.0, 1.0, 0.1};
  Pose pb{0.0, -1.0, -0.1};
  for (int k = 0; k < 400; ++k) {
    const double steer = 0.1 * std::sin(0.05 * k);
    pa = step_pose(pa, a);
    pb = step_pose(pb, b);
    a = step_dynamics(a, {200.0, steer}, 0.85, p);
    b = step_dynamics(b, {200.0, -steer}, 0.85, p);
    REQUIRE(std::abs(a.vx - b.vx) < 1e-9);
    REQUIRE(std::abs(a.vy + b.vy) < 1e-9);
    REQUIRE(std::abs(a.wr + b.wr) < 1e-9);
    REQUIRE(std::abs(pa.x - pb.x) < 1e-9);
    REQUIRE(std::abs(pa.y + pb.y) < 1e-9);
    REQUIRE(std::abs(pa.theta + pb.theta) < 1e-9);
  }
}

TEST_CASE("coasting straight keeps Vx exactly constant")
{
  const VehicleParams p;
  VehicleState s{20.0, 0.0, 0.0};
  for (int k = 0; k < 1000; ++k)
    s = step_dynamics(s, {0.0, 0.0}, 0.85, p);
  CHECK(s.vx == 20.0);
}

TEST_CASE("forward Euler error is first order in the sample time")
{
  const VehicleParams p;
  const VehicleState x0{15.0, 0.3, 0.1};
  const ControlInput u{300.0, 0.05};
  auto simulate = [&](double ts) {
    VehicleState s = x0;
    const int n = static_cast<int>(std::lround(1.0 / ts));
    for (int k = 0; k < n; ++k)
      s = step_dynamics(s, u, 0.85, p, ts);
    return s;
  };
  auto dist = [](const VehicleState& a, const VehicleState& b) {
    return std::sqrt((a.vx - b.vx) * (a.vx - b.vx) + (a.vy - b.vy) * (a.vy - b.vy) + (a.wr - b.wr) * (a.wr - b.wr));
  };
  const VehicleState ref = simulate(1e-4);
  const double e1 = dist(simulate(0.02), ref);
  const double e2 = dist(simulate(0.01), ref);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("parameter validation")
{
  VehicleParams p;
  CHECK_NOTHROW(p.validate());
  p.mass = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
