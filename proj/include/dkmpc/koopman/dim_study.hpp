#pragma once

#include <Eigen/Dense>

#include <vector>

#include "dkmpc/koopman/training.hpp"

namespace dkmpc::koopman {

struct ErrorStats
{
  double max = 0.0;
  double avg = 0.0;  // mean absolute error
  double rmse = 0.0;
};

ErrorStats error_stats(const Eigen::Ref<const Eigen::VectorXd>& errors);

/// Signed one-step errors (predicted - actual) for every transition in `sequences`,
/// one row per state channel.
Eigen::MatrixXd one_step_errors(const KoopmanModel& model, const std::vector<Sequence>& sequences);

struct DimStudyRow
{
  int phi = 0;
  ErrorStats vx;
  ErrorStats vy;
  ErrorStats wr;
  Eigen::MatrixXd errors;  // raw one-step errors behind the statistics
};

struct DimStudyResult
{
  std::vector<DimStudyRow> rows;
  std::vector<KoopmanModel> models;
};

/// Train one model per basis dimension (cfg.phi is overridden) and score one-step
/// prediction on the validation split.
DimStudyResult one_step_error_study(const TrajectoryDataset& dataset, const std::vector<int>& dims,
                                    const TrainingConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace dkmpc::koopman
