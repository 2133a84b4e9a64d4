#pragma once

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dkmpc/koopman/dataset.hpp"
#include "dkmpc/nn/mlp.hpp"
#include "dkmpc/nn/scaler.hpp"
#include "dkmpc/vehicle/vehicle.hpp"

namespace dkmpc::koopman {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class DivergenceError : public std::runtime_error
{
public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct KoopmanDims
{
  int n = 3;    // original state
  int m = 2;    // input
  int phi = 5;  // learned basis functions

  int q() const { return n + phi; }  // lifted state
  int d() const { return q() + m; }  // lifted state plus input
  void validate() const;
};

struct LossTerms
{
  double total = 0.0;
  double prediction = 0.0;      // multi-step prediction error
  double reconstruction = 0.0;  // encoder/decoder round trip
};

/**
 * Deep Koopman model: z = [x; Phi(scale(x))] evolves as z' = A z + B u_s + c.
 *
 * The learned operator (a_scaled, b_scaled) acts on the scaled lifted state
 * [scale(x); Phi(scale(x))] and scaled input u_s. The public operator (A, B,
 * drift c) is the same map expressed with the unscaled state in the top block,
 * so project(lift(x)) returns x verbatim. With identity state scaling c = 0 and
 * A, B coincide with the learned matrices.
 */
class KoopmanModel
{
public:
  KoopmanModel() = default;
  KoopmanModel(nn::Mlp encoder, nn::Mlp decoder, MatrixXd a_scaled, MatrixXd b_scaled,
               nn::MinMaxScaler state_scaler, nn::MinMaxScaler input_scaler);

  /// Randomly initialised model, encoder n -> hidden -> phi and a mirrored decoder.
  static KoopmanModel initialize(const KoopmanDims& dims, const std::vector<int>& hidden,
                                 nn::MinMaxScaler state_scaler, nn::MinMaxScaler input_scaler,
                                 std::mt19937_64& rng);

  const KoopmanDims& dims() const { return dims_; }
  const nn::Mlp& encoder() const { return encoder_; }
  const nn::Mlp& decoder() const { return decoder_; }
  const MatrixXd& a_scaled() const { return a_layer_.layers().front().weight; }
  const MatrixXd& b_scaled() const { return b_layer_.layers().front().weight; }
  const nn::MinMaxScaler& state_scaler() const { return state_scaler_; }
  const nn::MinMaxScaler& input_scaler() const { return input_scaler_; }

  const MatrixXd& A() const { return a_; }
  const MatrixXd& B() const { return b_; }
  const VectorXd& drift() const { return drift_; }

  VectorXd lift(const VectorXd& x) const;
  VectorXd lift(const vehicle::VehicleState& x) const;
  VectorXd scale_input(const vehicle::ControlInput& u) const;

  VectorXd predict_one(const VectorXd& z, const vehicle::ControlInput& u, const VectorXd& w) const;

  /// Lift x0 once, iterate predict_one with w held constant, project every step.
  std::vector<vehicle::VehicleState> rollout(const vehicle::VehicleState& x0,
                                             const std::vector<vehicle::ControlInput>& inputs,
                                             const VectorXd& w) const;

  /// Composite loss of one sequence, evaluated in scaled coordinates.
  LossTerms loss(const Sequence& seq) const;

  // Mutable access for the trainer.
  nn::Mlp& encoder() { return encoder_; }
  nn::Mlp& decoder() { return decoder_; }
  nn::Mlp& a_layer() { return a_layer_; }
  nn::Mlp& b_layer() { return b_layer_; }
  const nn::Mlp& a_layer() const { return a_layer_; }
  const nn::Mlp& b_layer() const { return b_layer_; }

  /// Recompute the unscaled operator after the learned parameters change.
  void refresh();

private:
  KoopmanDims dims_;
  nn::Mlp encoder_;
  nn::Mlp decoder_;
  nn::Mlp a_layer_;
  nn::Mlp b_layer_;
  nn::MinMaxScaler state_scaler_;
  nn::MinMaxScaler input_scaler_;
  MatrixXd a_;
  MatrixXd b_;
  VectorXd drift_;
};

/// First n entries of a lifted state.
VectorXd project(const VectorXd& z, int n = 3);
vehicle::VehicleState project_state(const VectorXd& z);

/// Loss and exact parameter gradients over a batch of equal-length sequences.
/// The batch loss is the mean of the per-sequence losses.
struct LossGradient
{
  LossTerms loss;
  nn::GradBuffer encoder;
  nn::GradBuffer decoder;
  nn::GradBuffer a;
  nn::GradBuffer b;
};

LossGradient loss_and_gradient(const KoopmanModel& model, const std::vector<const Sequence*>& batch,
                               bool with_gradient = true);

}  // namespace dkmpc::koopman
