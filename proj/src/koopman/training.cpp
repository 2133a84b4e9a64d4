#include "dkmpc/koopman/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace dkmpc::koopman {

void TrainingConfig::validate() const
{
  if (phi < 1)
    throw std::invalid_argument("phi must be at least 1");
  if (seq_len < 2)
    throw std::invalid_argument("sequence length must be at least 2");
  if (epochs < 1 || batch_size < 1)
    throw std::invalid_argument("epochs and batch size must be positive");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("learning rate must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
    throw std::invalid_argument("validation fraction must lie in (0, 0.5]");
  if (hidden.empty())
    throw std::invalid_argument("need at least one hidden layer");
}

double mean_loss(const KoopmanModel& model, const std::vector<Sequence>& sequences)
{
  if (sequences.empty())
    return 0.0;
  // Chunked batches keep the matrix products large; the batch loss is already a mean.
  constexpr std::size_t chunk = 256;
  double sum = 0.0;
  for (std::size_t i = 0; i < sequences.size(); i += chunk) {
    std::vector<const Sequence*> batch;
    for (std::size_t j = i; j < std::min(sequences.size(), i + chunk); ++j)
      batch.push_back(&sequences[j]);
    sum += loss_and_gradient(model, batch, false).loss.total * static_cast<double>(batch.size());
  }
  return sum / static_cast<double>(sequences.size());
}

namespace {

nn::MinMaxScaler fit_states(const std::vector<Sequence>& seqs)
{
  Eigen::Index cols = 0;
  for (const auto& s : seqs)
    cols += s.states.cols();
  Eigen::MatrixXd all(seqs.front().states.rows(), cols);
  Eigen::Index k = 0;
  for (const auto& s : seqs) {
    all.middleCols(k, s.states.cols()) = s.states;
    k += s.states.cols();
  }
  return nn::MinMaxScaler::fit(all);
}

nn::MinMaxScaler fit_inputs(const std::vector<Sequence>& seqs)
{
  Eigen::Index cols = 0;
  for (const auto& s : seqs)
    cols += s.inputs.cols();
  Eigen::MatrixXd all(seqs.front().inputs.rows(), cols);
  Eigen::Index k = 0;
  for (const auto& s : seqs) {
    all.middleCols(k, s.inputs.cols()) = s.inputs;
    k += s.inputs.cols();
  }
  return nn::MinMaxScaler::fit(all);
}

}  // namespace

TrainingResult train(const TrajectoryDataset& dataset, const TrainingConfig& cfg, const EpochCallback& on_epoch)
{
  cfg.validate();
  if (dataset.train.empty())
    throw std::invalid_argument("training split is empty");
  for (const auto& s : dataset.train)
    if (s.length() != dataset.train.front().length())
      throw std::invalid_argument("training sequences must share one length");

  std::mt19937_64 rng(cfg.seed);
  KoopmanDims dims;
  dims.n = static_cast<int>(dataset.train.front().states.rows());
  dims.m = static_cast<int>(dataset.train.front().inputs.rows());
  dims.phi = cfg.phi;
  KoopmanModel model =
      KoopmanModel::initialize(dims, cfg.hidden, fit_states(dataset.train), fit_inputs(dataset.train), rng);

  nn::SgdOptimizer opt(cfg.learning_rate, cfg.momentum);
  TrainingResult result;
  result.model = model;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::vector<const Sequence*> batch;
    for (std::size_t i = 0; i < order.size(); i += batch_size) {
      batch.clear();
      for (std::size_t j = i; j < std::min(order.size(), i + batch_size); ++j)
        batch.push_back(&dataset.train[order[j]]);
      LossGradient lg = loss_and_gradient(model, batch);
      if (!std::isfinite(lg.loss.total)) {
        std::ostringstream os;
        os << "training loss became non-finite at epoch " << epoch;
        throw DivergenceError(os.str());
      }
      epoch_loss += lg.loss.total * static_cast<double>(batch.size());
      opt.step(model.encoder(), lg.encoder, 0);
      opt.step(model.decoder(), lg.decoder, 1);
      opt.step(model.a_layer(), lg.a, 2);
      opt.step(model.b_layer(), lg.b, 3);
    }
    model.refresh();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.validation_loss = dataset.validation.empty() ? rec.train_loss : mean_loss(model, dataset.validation);
    rec.learning_rate = opt.learning_rate();
    if (!std::isfinite(rec.validation_loss))
      throw DivergenceError("validation loss became non-finite at epoch " + std::to_string(epoch));
    result.history.push_back(rec);
    if (on_epoch)
      on_epoch(rec);

    if (rec.validation_loss < best) {
      best = rec.validation_loss;
      since_best = 0;
      result.model = model;
      result.best_epoch = epoch;
    } else if (++since_best >= cfg.plateau_patience) {
      opt.set_learning_rate(0.5 * opt.learning_rate());
      since_best = 0;
    }
  }
  return result;
}

}  // namespace dkmpc::koopman
