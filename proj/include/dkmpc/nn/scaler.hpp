#pragma once

#include <Eigen/Dense>

namespace dkmpc::nn {

/// Per-dimension affine map of the fitted [min, max] range onto [-1, 1].
/// Values outside the fitted range are not clamped.
class MinMaxScaler
{
public:
  MinMaxScaler() = default;
  MinMaxScaler(Eigen::VectorXd min, Eigen::VectorXd max);

  /// Identity map on `dim` dimensions (min = -1, max = 1).
  static MinMaxScaler identity(Eigen::Index dim);

  /// Fit on samples stored one per column. Needs at least two samples;
  /// a constant dimension is widened by 1e-6 on each side.
  static MinMaxScaler fit(const Eigen::MatrixXd& samples);

  Eigen::Index dim() const { return min_.size(); }
  const Eigen::VectorXd& min() const { return min_; }
  const Eigen::VectorXd& max() const { return max_; }
  Eigen::VectorXd center() const { return 0.5 * (min_ + max_); }
  Eigen::VectorXd half_range() const { return 0.5 * (max_ - min_); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd invert(const Eigen::VectorXd& s) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& s) const;

private:
  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
};

}  // namespace dkmpc::nn
