#include "dkmpc/nn/mlp.hpp"

#include <cmath>

namespace dkmpc::nn {

std::string to_string(Activation act)
{
  return act == Activation::Tanh ? "tanh" : "identity";
}

Activation activation_from_string(const std::string& name)
{
  if (name == "tanh")
    return Activation::Tanh;
  if (name == "identity")
    return Activation::Identity;
  throw std::invalid_argument("unknown activation: " + name);
}

void GradBuffer::set_zero()
{
  for (auto& w : weight)
    w.setZero();
  for (auto& b : bias)
    b.setZero();
}

GradBuffer& GradBuffer::operator+=(const GradBuffer& other)
{
  if (other.weight.size() != weight.size())
    throw ShapeError("gradient buffers have different layer counts");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    if (bias[i].size() > 0)
      bias[i] += other.bias[i];
  }
  return *this;
}

VectorXd GradBuffer::flatten() const
{
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < weight.size(); ++i)
    n += weight[i].size() + bias[i].size();
  VectorXd out(n);
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.segment(k, weight[i].size()) = weight[i].reshaped();
    k += weight[i].size();
    out.segment(k, bias[i].size()) = bias[i];
    k += bias[i].size();
  }
  return out;
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers))
{
  if (layers_.empty())
    throw ShapeError("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.has_bias() && l.bias.size() != l.out())
      throw ShapeError("bias length does not match layer output");
    if (i > 0 && layers_[i - 1].out() != l.in())
      throw ShapeError("adjacent layer dimensions do not chain");
  }
}

namespace {

MatrixXd glorot(int out, int in, std::mt19937_64& rng)
{
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  MatrixXd w(out, in);
  // Fill row-major so the draw order is independent of Eigen's storage order.
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c)
      w(r, c) = dist(rng);
  return w;
}

}  // namespace

Mlp Mlp::make(const std::vector<int>& sizes, std::mt19937_64& rng)
{
  if (sizes.size() < 2)
    throw ShapeError("network needs input and output sizes");
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    Layer l;
    l.weight = glorot(sizes[i + 1], sizes[i], rng);
    l.bias = VectorXd::Zero(sizes[i + 1]);
    l.activation = (i + 2 == sizes.size()) ? Activation::Identity : Activation::Tanh;
    layers.push_back(std::move(l));
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::linear_no_bias(int in, int out, std::mt19937_64& rng)
{
  Layer l;
  l.weight = glorot(out, in, rng);
  l.activation = Activation::Identity;
  return Mlp({std::move(l)});
}

Eigen::Index Mlp::input_dim() const
{
  return layers_.empty() ? 0 : layers_.front().in();
}

Eigen::Index Mlp::output_dim() const
{
  return layers_.empty() ? 0 : layers_.back().out();
}

MatrixXd Mlp::forward(const MatrixXd& x, ForwardCache* cache) const
{
  if (x.rows() != input_dim())
    throw ShapeError("input has " + std::to_string(x.rows()) + " rows, network expects " +
                     std::to_string(input_dim()));
  if (cache) {
    cache->inputs.clear();
    cache->outputs.clear();
  }
  MatrixXd h = x;
  for (const Layer& l : layers_) {
    MatrixXd a = l.weight * h;
    if (l.has_bias())
      a.colwise() += l.bias;
    if (l.activation == Activation::Tanh)
      a = a.array().tanh().matrix();
    if (cache)
      cache->inputs.push_back(std::move(h));
    h = std::move(a);
    if (cache)
      cache->outputs.push_back(h);
  }
  return h;
}

VectorXd Mlp::forward(const VectorXd& x) const
{
  return forward(MatrixXd(x), nullptr).col(0);
}

GradBuffer Mlp::zero_grad() const
{
  GradBuffer g;
  for (const Layer& l : layers_) {
    g.weight.push_back(MatrixXd::Zero(l.out(), l.in()));
    g.bias.push_back(VectorXd::Zero(l.bias.size()));
  }
  return g;
}

GradBuffer Mlp::backward(const ForwardCache& cache, const MatrixXd& cotangent,
                         MatrixXd* input_cotangent) const
{
  if (cache.inputs.size() != layers_.size())
    throw ShapeError("forward cache does not belong to this network");
  if (cotangent.rows() != output_dim() || cotangent.cols() != cache.outputs.back().cols())
    throw ShapeError("cotangent shape does not match network output");

  GradBuffer g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  MatrixXd delta = cotangent;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Layer& l = layers_[k];
    if (l.activation == Activation::Tanh)
      delta.array() *= 1.0 - cache.outputs[k].array().square();
    g.weight[k].noalias() = delta * cache.inputs[k].transpose();
    g.bias[k] = l.has_bias() ? VectorXd(delta.rowwise().sum()) : VectorXd();
    if (k > 0 || input_cotangent) {
      MatrixXd prev = l.weight.transpose() * delta;
      delta = std::move(prev);
    }
  }
  if (input_cotangent)
    *input_cotangent = std::move(delta);
  return g;
}

Eigen::Index Mlp::parameter_count() const
{
  Eigen::Index n = 0;
  for (const Layer& l : layers_)
    n += l.weight.size() + l.bias.size();
  return n;
}

VectorXd Mlp::flatten() const
{
  VectorXd out(parameter_count());
  Eigen::Index k = 0;
  for (const Layer& l : layers_) {
    out.segment(k, l.weight.size()) = l.weight.reshaped();
    k += l.weight.size();
    out.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return out;
}

void Mlp::unflatten(const VectorXd& params)
{
  if (params.size() != parameter_count())
    throw ShapeError("parameter vector length mismatch");
  Eigen::Index k = 0;
  for (Layer& l : layers_) {
    l.weight.reshaped() = params.segment(k, l.weight.size());
    k += l.weight.size();
    l.bias = params.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

SgdOptimizer::SgdOptimizer(double learning_rate, double momentum) : lr_(learning_rate), momentum_(momentum)
{
  set_learning_rate(learning_rate);
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("momentum must lie in [0, 1)");
}

void SgdOptimizer::set_learning_rate(double lr)
{
  if (!(lr > 0.0))
    throw std::invalid_argument("learning rate must be positive");
  lr_ = lr;
}

void SgdOptimizer::step(Mlp& net, const GradBuffer& grads, std::size_t slot)
{
  if (momentum_ == 0.0) {
    sgd_step(net, grads, lr_);
    return;
  }
  if (velocity_.size() <= slot)
    velocity_.resize(slot + 1);
  GradBuffer& v = velocity_[slot];
  if (v.weight.empty())
    v = net.zero_grad();
  auto& layers = net.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    v.weight[i] = momentum_ * v.weight[i] + grads.weight[i];
    layers[i].weight -= lr_ * v.weight[i];
    if (layers[i].has_bias()) {
      v.bias[i] = momentum_ * v.bias[i] + grads.bias[i];
      layers[i].bias -= lr_ * v.bias[i];
    }
  }
}

void sgd_step(Mlp& net, const GradBuffer& grads, double lr)
{
  if (!(lr > 0.0))
    throw std::invalid_argument("learning rate must be positive");
  auto& layers = net.layers();
  if (grads.weight.size() != layers.size())
    throw ShapeError("gradient buffer does not match network");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads.weight[i].rows() != layers[i].weight.rows() || grads.weight[i].cols() != layers[i].weight.cols())
      throw ShapeError("gradient shape does not match weight shape");
    layers[i].weight -= lr * grads.weight[i];
    if (layers[i].has_bias())
      layers[i].bias -= lr * grads.bias[i];
  }
}

}  // namespace dkmpc::nn
