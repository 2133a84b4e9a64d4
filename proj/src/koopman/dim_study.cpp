#include "dkmpc/koopman/dim_study.hpp"

#include <cmath>

namespace dkmpc::koopman {

ErrorStats error_stats(const Eigen::Ref<const Eigen::VectorXd>& errors)
{
  ErrorStats s;
  if (errors.size() == 0)
    return s;
  const auto n = static_cast<double>(errors.size());
  s.max = errors.cwiseAbs().maxCoeff();
  s.avg = errors.cwiseAbs().sum() / n;
  s.rmse = std::sqrt(errors.squaredNorm() / n);
  return s;
}

Eigen::MatrixXd one_step_errors(const KoopmanModel& model, const std::vector<Sequence>& sequences)
{
  Eigen::Index total = 0;
  for (const auto& s : sequences)
    total += s.length();
  const int n = model.dims().n;
  Eigen::MatrixXd errs(n, total);
  const Eigen::VectorXd w = Eigen::VectorXd::Zero(model.dims().q());
  Eigen::Index k = 0;
  for (const auto& seq : sequences) {
    for (Eigen::Index i = 0; i < seq.length(); ++i) {
      const Eigen::VectorXd z = model.lift(Eigen::VectorXd(seq.states.col(i)));
      const vehicle::ControlInput u{seq.inputs(0, i), seq.inputs(1, i)};
      errs.col(k++) = project(model.predict_one(z, u, w), n) - seq.states.col(i + 1);
    }
  }
  return errs;
}

DimStudyResult one_step_error_study(const TrajectoryDataset& dataset, const std::vector<int>& dims,
                                    const TrainingConfig& cfg, const EpochCallback& on_epoch)
{
  if (dims.empty())
    throw std::invalid_argument("dimension list is empty");
  const std::vector<Sequence>& held_out = dataset.validation.empty() ? dataset.train : dataset.validation;
  DimStudyResult out;
  for (int phi : dims) {
    TrainingConfig c = cfg;
    c.phi = phi;
    TrainingResult tr = train(dataset, c, on_epoch);
    DimStudyRow row;
    row.phi = phi;
    row.errors = one_step_errors(tr.model, held_out);
    row.vx = error_stats(row.errors.row(0).transpose());
    row.vy = error_stats(row.errors.row(1).transpose());
    row.wr = error_stats(row.errors.row(2).transpose());
    out.rows.push_back(std::move(row));
    out.models.push_back(std::move(tr.model));
  }
  return out;
}

}  // namespace dkmpc::koopman
