#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dkmpc/koopman/dataset.hpp"
#include "dkmpc/koopman/koopman_model.hpp"

namespace dkmpc::koopman {

struct TrainingConfig
{
  int phi = 5;
  int seq_len = 10;
  int epochs = 50;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double momentum = 0.0;
  int plateau_patience = 10;  // epochs without validation improvement before halving lr
  std::uint64_t seed = 1;
  double validation_fraction = 0.2;
  std::vector<int> hidden{128, 128, 128};

  void validate() const;
};

struct EpochRecord
{
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainingResult
{
  KoopmanModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Mean composite loss over a set of sequences.
double mean_loss(const KoopmanModel& model, const std::vector<Sequence>& sequences);

using EpochCallback = std::function<void(const EpochRecord&)>;

/**
 * Fit scalers on the training split, then minimise the composite loss with
 * mini-batch steepest descent. The learning rate halves whenever validation
 * loss has not improved for `plateau_patience` epochs; the returned model is
 * the one with the lowest validation loss. Throws DivergenceError on a
 * non-finite loss.
 */
TrainingResult train(const TrajectoryDataset& dataset, const TrainingConfig& cfg,
                     const EpochCallback& on_epoch = {});

}  // namespace dkmpc::koopman
