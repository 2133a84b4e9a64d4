#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dkmpc/control/mpc.hpp"
#include "dkmpc/eso/eso.hpp"
#include "dkmpc/harness/reference.hpp"
#include "dkmpc/koopman/koopman_model.hpp"
#include "dkmpc/vehicle/vehicle.hpp"

namespace dkmpc::harness {

class UsageError : public std::invalid_argument
{
public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Piecewise-linear speed set-point (t [s], v [m/s]); held after the last knot.
struct SpeedProfile
{
  std::vector<std::pair<double, double>> knots{{0.0, 35.0 / 3.6}};

  static SpeedProfile constant(double v) { return {{{0.0, v}}}; }
  double at(double t) const;
  void validate() const;
};

struct Scenario
{
  std::string name = "custom";
  double mu = 0.85;
  std::optional<double> mass;  // overrides the vehicle mass
  SpeedProfile speed;
  DlcGeometry path;
  double duration = 12.0;
  double lateral_force = 0.0;            // constant external lateral force at the CG [N]
  Eigen::Vector3d noise_std{0, 0, 0};    // additive Gaussian on measured (Vx, Vy, wr)
  double max_lateral_error = 5.0;        // |eY| beyond this counts as divergence

  void validate() const;
  int steps() const;
};

Scenario dlc_high_mu();
Scenario dlc_low_mu();

enum class ControllerKind { EsoDkmpc, Dkmpc, Lmpc };

std::string to_string(ControllerKind kind);
/// Accepts eso-dkmpc, dkmpc, lmpc; throws UsageError otherwise.
ControllerKind controller_from_string(const std::string& name);

struct ControllerSetup
{
  ControllerKind kind = ControllerKind::EsoDkmpc;
  const koopman::KoopmanModel* model = nullptr;  // required for the lifted controllers
  std::optional<eso::EsoGains> gains;            // required for eso-dkmpc
  control::MpcConfig mpc;
  vehicle::VehicleParams params;  // plant parameters (before scenario overrides)
  double kp = 800.0;
  double lmpc_mu = 0.85;  // friction the linear model's cornering stiffness assumes
  bool record_timing = false;  // false writes solve_ms = 0 so output is reproducible
};

struct TraceRow
{
  double t, x, y, theta, vx, vy, wr, torque, steer, xr, yr, theta_r, ey, dphi, w_norm, solve_ms;
};

struct RunTrace
{
  std::string controller;
  std::vector<TraceRow> rows;
  bool diverged = false;
  std::string reason;
};

/// Lifted controllers need a model; ESO additionally needs gains.
void validate(const ControllerSetup& setup);

RunTrace run_closed_loop(const Scenario& scenario, const ControllerSetup& setup, std::uint64_t seed);

void write_trace_csv(std::ostream& os, const RunTrace& trace);

}  // namespace dkmpc::harness
