#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dkmpc/eso/eso.hpp"
#include "dkmpc/koopman/dim_study.hpp"
#include "dkmpc/koopman/koopman_model.hpp"
#include "dkmpc/vehicle/vehicle.hpp"

namespace dkmpc::harness {

/// Plant perturbation for the open-loop predictor comparison.
struct RobustnessCase
{
  std::string name;
  double mu = 0.85;
  double mass_delta = 0.0;  // added to the nominal mass [kg]
};

/// Default cases: nominal, +200 kg, mu = 0.55.
std::vector<RobustnessCase> default_robustness_cases();

struct RobustnessRow
{
  std::string name;
  koopman::ErrorStats plain[3];     // model without disturbance compensation, per channel
  koopman::ErrorStats observed[3];  // with the observer's disturbance estimate added
};

/**
 * Drives the perturbed plant through a mixed steering/speed maneuver starting
 * near 40 km/h and scores one-step predictions of both predictors against it.
 */
RobustnessRow robustness_case(const koopman::KoopmanModel& model, const eso::EsoGains& gains,
                              const vehicle::VehicleParams& params, const RobustnessCase& rc, std::uint64_t seed,
                              double duration = 20.0);

void write_robustness_csv(std::ostream& os, const std::vector<RobustnessRow>& rows);

}  // namespace dkmpc::harness
