#include "dkmpc/koopman/koopman_model.hpp"

#include <algorithm>
#include <numeric>

namespace dkmpc::koopman {

Eigen::Vector3d to_vector(const vehicle::VehicleState& x)
{
  return {x.vx, x.vy, x.wr};
}

vehicle::VehicleState to_state(const Eigen::Ref<const Eigen::VectorXd>& v)
{
  return {v(0), v(1), v(2)};
}

Eigen::Vector2d to_vector(const vehicle::ControlInput& u)
{
  return {u.torque, u.steer};
}

TrajectoryDataset make_dataset(const std::vector<Trajectory>& trajectories, int p, double validation_fraction,
                               std::uint64_t seed, int stride)
{
  if (p < 1)
    throw std::invalid_argument("sequence length must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction <= 0.5))
    throw std::invalid_argument("validation fraction must lie in (0, 0.5]");
  if (trajectories.size() < 2)
    throw std::invalid_argument("need at least two trajectories to split");
  if (stride <= 0)
    stride = p;

  std::vector<std::size_t> order(trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(validation_fraction * static_cast<double>(trajectories.size()) + 0.5));
  std::vector<bool> is_val(trajectories.size(), false);
  for (std::size_t i = 0; i < n_val; ++i)
    is_val[order[i]] = true;

  TrajectoryDataset ds;
  for (std::size_t t = 0; t < trajectories.size(); ++t) {
    const Trajectory& tr = trajectories[t];
    if (tr.states.size() != tr.inputs.size() + 1)
      throw std::invalid_argument("trajectory needs one more state than inputs");
    const auto steps = static_cast<int>(tr.inputs.size());
    for (int k = 0; k + p <= steps; k += stride) {
      Sequence seq;
      seq.states.resize(3, p + 1);
      seq.inputs.resize(2, p);
      for (int i = 0; i <= p; ++i)
        seq.states.col(i) = to_vector(tr.states[k + i]);
      for (int i = 0; i < p; ++i)
        seq.inputs.col(i) = to_vector(tr.inputs[k + i]);
      (is_val[t] ? ds.validation : ds.train).push_back(std::move(seq));
    }
  }
  return ds;
}

void KoopmanDims::validate() const
{
  if (n < 1 || m < 1 || phi < 1)
    throw std::invalid_argument("Koopman dimensions must be positive");
}

KoopmanModel::KoopmanModel(nn::Mlp encoder, nn::Mlp decoder, MatrixXd a_scaled, MatrixXd b_scaled,
                           nn::MinMaxScaler state_scaler, nn::MinMaxScaler input_scaler)
    : encoder_(std::move(encoder)),
      decoder_(std::move(decoder)),
      state_scaler_(std::move(state_scaler)),
      input_scaler_(std::move(input_scaler))
{
  dims_.n = static_cast<int>(encoder_.input_dim());
  dims_.phi = static_cast<int>(encoder_.output_dim());
  dims_.m = static_cast<int>(b_scaled.cols());
  dims_.validate();
  if (decoder_.input_dim() != dims_.phi || decoder_.output_dim() != dims_.n)
    throw nn::ShapeError("decoder must map phi -> n");
  if (a_scaled.rows() != dims_.q() || a_scaled.cols() != dims_.q())
    throw nn::ShapeError("A must be q x q");
  if (b_scaled.rows() != dims_.q())
    throw nn::ShapeError("B must be q x m");
  if (state_scaler_.dim() != dims_.n || input_scaler_.dim() != dims_.m)
    throw nn::ShapeError("scaler dimensions do not match model");

  nn::Layer a;
  a.weight = std::move(a_scaled);
  nn::Layer b;
  b.weight = std::move(b_scaled);
  a_layer_ = nn::Mlp({std::move(a)});
  b_layer_ = nn::Mlp({std::move(b)});
  refresh();
}

KoopmanModel KoopmanModel::initialize(const KoopmanDims& dims, const std::vector<int>& hidden,
                                      nn::MinMaxScaler state_scaler, nn::MinMaxScaler input_scaler,
                                      std::mt19937_64& rng)
{
  dims.validate();
  std::vector<int> enc_sizes{dims.n};
  enc_sizes.insert(enc_sizes.end(), hidden.begin(), hidden.end());
  enc_sizes.push_back(dims.phi);
  std::vector<int> dec_sizes{dims.phi};
  dec_sizes.insert(dec_sizes.end(), hidden.rbegin(), hidden.rend());
  dec_sizes.push_back(dims.n);

  nn::Mlp enc = nn::Mlp::make(enc_sizes, rng);
  nn::Mlp dec = nn::Mlp::make(dec_sizes, rng);
  nn::Mlp a = nn::Mlp::linear_no_bias(dims.q(), dims.q(), rng);
  nn::Mlp b = nn::Mlp::linear_no_bias(dims.m, dims.q(), rng);
  return KoopmanModel(std::move(enc), std::move(dec), a.layers().front().weight, b.layers().front().weight,
                      std::move(state_scaler), std::move(input_scaler));
}

void KoopmanModel::refresh()
{
  const int n = dims_.n;
  const int q = dims_.q();
  VectorXd t_diag = VectorXd::Ones(q);
  t_diag.head(n) = state_scaler_.half_range();
  VectorXd offset = VectorXd::Zero(q);
  offset.head(n) = state_scaler_.center();

  // z = T z_s + t  =>  A = T A_s T^-1, B = T B_s, c = t - A t.
  a_ = t_diag.asDiagonal() * a_scaled() * t_diag.cwiseInverse().asDiagonal();
  b_ = t_diag.asDiagonal() * b_scaled();
  drift_ = offset - a_ * offset;
}

VectorXd KoopmanModel::lift(const VectorXd& x) const
{
  if (x.size() != dims_.n)
    throw nn::ShapeError("state length does not match model");
  VectorXd z(dims_.q());
  z.head(dims_.n) = x;
  z.tail(dims_.phi) = encoder_.forward(state_scaler_.apply(x));
  return z;
}

VectorXd KoopmanModel::lift(const vehicle::VehicleState& x) const
{
  return lift(VectorXd(to_vector(x)));
}

VectorXd KoopmanModel::scale_input(const vehicle::ControlInput& u) const
{
  return input_scaler_.apply(VectorXd(to_vector(u)));
}

VectorXd KoopmanModel::predict_one(const VectorXd& z, const vehicle::ControlInput& u, const VectorXd& w) const
{
  if (z.size() != dims_.q() || w.size() != dims_.q())
    throw nn::ShapeError("lifted state or disturbance length does not match model");
  return a_ * z + b_ * scale_input(u) + drift_ + w;
}

std::vector<vehicle::VehicleState> KoopmanModel::rollout(const vehicle::VehicleState& x0,
                                                         const std::vector<vehicle::ControlInput>& inputs,
                                                         const VectorXd& w) const
{
  if (inputs.empty())
    throw std::invalid_argument("rollout needs at least one input");
  std::vector<vehicle::VehicleState> out;
  out.reserve(inputs.size());
  VectorXd z = lift(x0);
  for (const auto& u : inputs) {
    z = predict_one(z, u, w);
    out.push_back(project_state(z));
  }
  return out;
}

LossTerms KoopmanModel::loss(const Sequence& seq) const
{
  const int n = dims_.n;
  const MatrixXd s = state_scaler_.apply(seq.states);
  const MatrixXd us = input_scaler_.apply(seq.inputs);
  const MatrixXd enc = encoder_.forward(s);
  const MatrixXd rec = decoder_.forward(enc);

  LossTerms out;
  VectorXd z(dims_.q());
  z.head(n) = s.col(0);
  z.tail(dims_.phi) = enc.col(0);
  for (Eigen::Index i = 1; i <= seq.length(); ++i) {
    z = a_scaled() * z + b_scaled() * us.col(i - 1);
    out.prediction += (s.col(i) - z.head(n)).squaredNorm();
  }
  out.reconstruction = (s - rec).squaredNorm();
  out.total = out.prediction + out.reconstruction;
  return out;
}

VectorXd project(const VectorXd& z, int n)
{
  if (z.size() < n)
    throw nn::ShapeError("lifted state shorter than the projection");
  return z.head(n);
}

vehicle::VehicleState project_state(const VectorXd& z)
{
  return to_state(project(z, 3));
}

LossGradient loss_and_gradient(const KoopmanModel& model, const std::vector<const Sequence*>& batch,
                               bool with_gradient)
{
  if (batch.empty())
    throw std::invalid_argument("empty batch");
  const KoopmanDims& dims = model.dims();
  const int n = dims.n;
  const int q = dims.q();
  const Eigen::Index p = batch.front()->length();
  const auto nb = static_cast<Eigen::Index>(batch.size());

  // Time-major packing: column t * nb + b holds sample b at step t.
  MatrixXd states(n, (p + 1) * nb);
  MatrixXd inputs(dims.m, p * nb);
  for (Eigen::Index b = 0; b < nb; ++b) {
    const Sequence& seq = *batch[static_cast<std::size_t>(b)];
    if (seq.length() != p)
      throw nn::ShapeError("sequences in a batch must share one length");
    for (Eigen::Index t = 0; t <= p; ++t)
      states.col(t * nb + b) = seq.states.col(t);
    for (Eigen::Index t = 0; t < p; ++t)
      inputs.col(t * nb + b) = seq.inputs.col(t);
  }
  const MatrixXd s = model.state_scaler().apply(states);
  const MatrixXd us = model.input_scaler().apply(inputs);

  nn::ForwardCache enc_cache, dec_cache;
  const MatrixXd enc = model.encoder().forward(s, with_gradient ? &enc_cache : nullptr);
  const MatrixXd rec = model.decoder().forward(enc, with_gradient ? &dec_cache : nullptr);

  const MatrixXd& a = model.a_scaled();
  const MatrixXd& bm = model.b_scaled();
  const double inv_nb = 1.0 / static_cast<double>(nb);

  std::vector<MatrixXd> z(static_cast<std::size_t>(p + 1));
  z[0].resize(q, nb);
  z[0].topRows(n) = s.leftCols(nb);
  z[0].bottomRows(dims.phi) = enc.leftCols(nb);
  LossGradient out;
  std::vector<MatrixXd> err(static_cast<std::size_t>(p + 1));
  for (Eigen::Index i = 1; i <= p; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    z[ui].noalias() = a * z[ui - 1];
    z[ui].noalias() += bm * us.middleCols((i - 1) * nb, nb);
    err[ui] = s.middleCols(i * nb, nb) - z[ui].topRows(n);
    out.loss.prediction += err[ui].squaredNorm();
  }
  const MatrixXd rec_err = s - rec;
  out.loss.reconstruction = rec_err.squaredNorm();
  out.loss.prediction *= inv_nb;
  out.loss.reconstruction *= inv_nb;
  out.loss.total = out.loss.prediction + out.loss.reconstruction;
  if (!with_gradient)
    return out;

  // Reverse pass through the lifted recursion.
  out.a = model.a_layer().zero_grad();
  out.b = model.b_layer().zero_grad();
  MatrixXd& ga = out.a.weight.front();
  MatrixXd& gb = out.b.weight.front();
  MatrixXd g = MatrixXd::Zero(q, nb);
  for (Eigen::Index i = p; i >= 1; --i) {
    const auto ui = static_cast<std::size_t>(i);
    g.topRows(n) -= (2.0 * inv_nb) * err[ui];
    ga.noalias() += g * z[ui - 1].transpose();
    gb.noalias() += g * us.middleCols((i - 1) * nb, nb).transpose();
    MatrixXd prev = a.transpose() * g;
    g = std::move(prev);
  }

  MatrixXd dec_in_cot;
  out.decoder = model.decoder().backward(dec_cache, (-2.0 * inv_nb) * rec_err, &dec_in_cot);
  dec_in_cot.leftCols(nb) += g.bottomRows(dims.phi);
  out.encoder = model.encoder().backward(enc_cache, dec_in_cot);
  return out;
}

}  // namespace dkmpc::koopman
