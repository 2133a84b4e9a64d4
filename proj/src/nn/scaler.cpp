#include "dkmpc/nn/scaler.hpp"

#include "dkmpc/nn/mlp.hpp"

namespace dkmpc::nn {

MinMaxScaler::MinMaxScaler(Eigen::VectorXd min, Eigen::VectorXd max) : min_(std::move(min)), max_(std::move(max))
{
  if (min_.size() != max_.size())
    throw ShapeError("scaler min/max length mismatch");
  if (!(max_.array() > min_.array()).all())
    throw std::invalid_argument("scaler needs max > min in every dimension");
}

MinMaxScaler MinMaxScaler::identity(Eigen::Index dim)
{
  return MinMaxScaler(Eigen::VectorXd::Constant(dim, -1.0), Eigen::VectorXd::Constant(dim, 1.0));
}

MinMaxScaler MinMaxScaler::fit(const Eigen::MatrixXd& samples)
{
  if (samples.cols() < 2)
    throw std::invalid_argument("scaler fit needs at least two samples");
  Eigen::VectorXd lo = samples.rowwise().minCoeff();
  Eigen::VectorXd hi = samples.rowwise().maxCoeff();
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(hi(i) > lo(i))) {
      lo(i) -= 1e-6;
      hi(i) += 1e-6;
    }
  }
  return MinMaxScaler(lo, hi);
}

Eigen::VectorXd MinMaxScaler::apply(const Eigen::VectorXd& x) const
{
  if (x.size() != dim())
    throw ShapeError("scaler input length mismatch");
  return ((x - center()).array() / half_range().array()).matrix();
}

Eigen::MatrixXd MinMaxScaler::apply(const Eigen::MatrixXd& x) const
{
  if (x.rows() != dim())
    throw ShapeError("scaler input rows mismatch");
  const Eigen::VectorXd h = half_range();
  return ((x.colwise() - center()).array().colwise() / h.array()).matrix();
}

Eigen::VectorXd MinMaxScaler::invert(const Eigen::VectorXd& s) const
{
  if (s.size() != dim())
    throw ShapeError("scaler input length mismatch");
  return (s.array() * half_range().array()).matrix() + center();
}

Eigen::MatrixXd MinMaxScaler::invert(const Eigen::MatrixXd& s) const
{
  if (s.rows() != dim())
    throw ShapeError("scaler input rows mismatch");
  const Eigen::VectorXd h = half_range();
  return (s.array().colwise() * h.array()).matrix().colwise() + center();
}

}  // namespace dkmpc::nn
