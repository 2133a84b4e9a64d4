#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "dkmpc/control/mpc.hpp"
#include "dkmpc/harness/closed_loop.hpp"
#include "dkmpc/harness/collect.hpp"
#include "dkmpc/koopman/training.hpp"
#include "dkmpc/vehicle/vehicle.hpp"

namespace dkmpc::harness {

class ConfigError : public std::runtime_error
{
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct EsoConfig
{
  double target_rho = 0.95;
  std::optional<double> beta1;  // both set: used as given instead of the grid search
  std::optional<double> beta2;
};

struct HarnessConfig
{
  vehicle::VehicleParams vehicle;
  koopman::TrainingConfig training;
  EsoConfig eso;
  control::MpcConfig mpc;
  double kp = 800.0;
  double lmpc_mu = 0.85;
  ExcitationSpec collect;
  std::map<std::string, Scenario> scenarios;

  const Scenario& scenario(const std::string& name) const;
};

/// Built-in defaults, including the dlc_highmu and dlc_lowmu scenarios.
HarnessConfig default_config();

/**
 * INI text with sections [vehicle], [tire], [training], [eso], [mpc],
 * [collect] and [scenario.<name>]. Values override the defaults; unknown
 * sections or keys and malformed values throw ConfigError. A scenario section
 * starts from the built-in scenario of the same name, if any.
 */
HarnessConfig parse_config(std::istream& is);
HarnessConfig load_config(const std::string& path);

/// Explicit gains when configured, otherwise the grid-search design.
eso::EsoGains observer_gains(const EsoConfig& cfg, const koopman::KoopmanModel& model);

/// Controller setup from the configuration; `model` may be null for lmpc.
ControllerSetup make_setup(const HarnessConfig& cfg, ControllerKind kind, const koopman::KoopmanModel* model);

}  // namespace dkmpc::harness
