#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dkmpc::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class ShapeError : public std::invalid_argument
{
public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

enum class Activation { Tanh, Identity };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct Layer
{
  MatrixXd weight;  // out x in
  VectorXd bias;    // empty when the layer has no bias
  Activation activation = Activation::Identity;

  bool has_bias() const { return bias.size() > 0; }
  Eigen::Index in() const { return weight.cols(); }
  Eigen::Index out() const { return weight.rows(); }
};

/// Per-parameter gradients, shape-matched to the owning network's layers.
struct GradBuffer
{
  std::vector<MatrixXd> weight;
  std::vector<VectorXd> bias;

  void set_zero();
  GradBuffer& operator+=(const GradBuffer& other);
  VectorXd flatten() const;
};

/// Activations recorded by a forward pass; column j belongs to sample j.
struct ForwardCache
{
  std::vector<MatrixXd> inputs;   // input of each layer
  std::vector<MatrixXd> outputs;  // post-activation output of each layer
};

/**
 * Feed-forward network with dense layers.
 *
 * Batched calls take one sample per column. Layers built by linear_no_bias()
 * carry no bias and an identity activation, so their weight matrix is the
 * linear map itself.
 */
class Mlp
{
public:
  Mlp() = default;
  explicit Mlp(std::vector<Layer> layers);

  /// Dense net with tanh hidden layers and an identity output layer.
  /// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.
  static Mlp make(const std::vector<int>& sizes, std::mt19937_64& rng);
  static Mlp linear_no_bias(int in, int out, std::mt19937_64& rng);

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  MatrixXd forward(const MatrixXd& x, ForwardCache* cache = nullptr) const;
  VectorXd forward(const VectorXd& x) const;

  /// Gradient of <cotangent, output> w.r.t. every parameter. When input_cotangent
  /// is non-null it receives the gradient w.r.t. the input batch.
  GradBuffer backward(const ForwardCache& cache, const MatrixXd& cotangent,
                      MatrixXd* input_cotangent = nullptr) const;

  GradBuffer zero_grad() const;

  Eigen::Index parameter_count() const;
  VectorXd flatten() const;
  void unflatten(const VectorXd& params);

private:
  std::vector<Layer> layers_;
};

/// Steepest descent with optional heavy-ball momentum; momentum 0 is p -= lr * g.
class SgdOptimizer
{
public:
  SgdOptimizer(double learning_rate, double momentum = 0.0);

  void step(Mlp& net, const GradBuffer& grads, std::size_t slot);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr);

private:
  double lr_;
  double momentum_;
  std::vector<GradBuffer> velocity_;
};

/// In-place p' = p - lr * g.
void sgd_step(Mlp& net, const GradBuffer& grads, double lr);

}  // namespace dkmpc::nn
