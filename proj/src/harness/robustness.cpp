#include "dkmpc/harness/robustness.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "dkmpc/harness/collect.hpp"
#include "dkmpc/koopman/dataset.hpp"

namespace dkmpc::harness {

std::vector<RobustnessCase> default_robustness_cases()
{
  return {{"nominal", 0.85, 0.0}, {"mass_plus_200", 0.85, 200.0}, {"mu_0.55", 0.55, 0.0}};
}

RobustnessRow robustness_case(const koopman::KoopmanModel& model, const eso::EsoGains& gains,
                              const vehicle::VehicleParams& params, const RobustnessCase& rc, std::uint64_t seed,
                              double duration)
{
  vehicle::VehicleParams plant = params;
  plant.mass += rc.mass_delta;
  ExcitationSpec spec;
  spec.trajectories = 1;
  spec.duration = duration;
  spec.mu = rc.mu;
  spec.v_min = 35.0 / 3.6;
  spec.v_max = 45.0 / 3.6;
  const CollectResult data = collect_trajectories(plant, spec, seed);
  if (data.trajectories.empty())
    throw std::runtime_error("robustness maneuver diverged: " + data.dropped.front());
  const koopman::Trajectory& traj = data.trajectories.front();

  const auto n = static_cast<Eigen::Index>(traj.inputs.size());
  Eigen::MatrixXd plain(3, n);
  Eigen::MatrixXd observed(3, n);
  eso::EsoState est = eso::EsoState::initial(model.lift(traj.states.front()));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& u = traj.inputs[static_cast<std::size_t>(k)];
    const Eigen::VectorXd z = model.lift(traj.states[static_cast<std::size_t>(k)]);
    const Eigen::Vector3d actual = koopman::to_vector(traj.states[static_cast<std::size_t>(k) + 1]);
    const Eigen::VectorXd w = eso::corrected_disturbance(gains, est, z);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(z.size());
    plain.col(k) = model.predict_one(z, u, zero).head<3>() - actual;
    observed.col(k) = model.predict_one(z, u, w).head<3>() - actual;
    est = eso::eso_step(model, gains, est, z, u);
  }

  RobustnessRow row;
  row.name = rc.name;
  for (int c = 0; c < 3; ++c) {
    row.plain[c] = koopman::error_stats(plain.row(c).transpose());
    row.observed[c] = koopman::error_stats(observed.row(c).transpose());
  }
  return row;
}

void write_robustness_csv(std::ostream& os, const std::vector<RobustnessRow>& rows)
{
  os << "case,predictor,vx_rmse,vy_rmse,wr_rmse,vx_max,vy_max,wr_max\n";
  char buf[512];
  for (const auto& r : rows) {
    for (int which = 0; which < 2; ++which) {
      const koopman::ErrorStats* s = which == 0 ? r.plain : r.observed;
      std::snprintf(buf, sizeof buf, "%s,%s,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", r.name.c_str(),
                    which == 0 ? "dk" : "eso-dk", s[0].rmse, s[1].rmse, s[2].rmse, s[0].max, s[1].max, s[2].max);
      os << buf;
    }
  }
}

}  // namespace dkmpc::harness
