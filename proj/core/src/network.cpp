// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#include "gradperm/network.hpp"

#include <cmath>
#include <string>

#include "gradperm/errors.hpp"
#include "gradperm/rng.hpp"

namespace gradperm {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& Z) {
  return Z.unaryExpr([](double z) { return sigmoid(z); });
}

// Stable per-element binary cross-entropy in terms of the pre-activation s:
//   -y log sigmoid(s) - (1-y) log(1 - sigmoid(s))
double bce_from_preactivation(double s, double y) {
  const double softplus = s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
  return softplus - s * y;
}

}  // namespace

double NetworkConfig::learning_rate_at(int epoch) const {
  return initial_learning_rate * std::pow(1.0 - lr_decay_per_epoch, epoch);
}

void NetworkConfig::validate() const {
  if (hidden_sizes.empty() || hidden_sizes.size() > 2)
    throw ConfigError("hidden_sizes must have 1 or 2 entries");
  for (const int h : hidden_sizes)
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (!(initial_learning_rate > 0.0))
    throw ConfigError("initial_learning_rate must be positive");
  if (!(lr_decay_per_epoch >= 0.0 && lr_decay_per_epoch < 1.0))
    throw ConfigError("lr_decay_per_epoch must lie in [0, 1)");
  if (l2_lambda < 0.0) throw ConfigError("l2_lambda must be nonnegative");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (init_scale && !(*init_scale >= 0.0 && std::isfinite(*init_scale)))
    throw ConfigError("init_scale must be finite and nonnegative");
}

int Network::input_dim() const {
  if (hidden_weights.empty()) return 0;
  return static_cast<int>(hidden_weights.front().cols());
}

void Network::validate() const {
  if (hidden_weights.empty() || hidden_weights.size() > 2)
    throw ShapeError("network must have 1 or 2 hidden layers");
  if (hidden_weights.size() != hidden_biases.size())
    throw ShapeError("hidden weight/bias layer counts differ");

  Eigen::Index fan_in = hidden_weights.front().cols();
  if (fan_in < 1) throw ShapeError("network input dimension must be >= 1");
  for (std::size_t l = 0; l < hidden_weights.size(); ++l) {
    if (hidden_weights[l].cols() != fan_in)
      throw ShapeError("hidden layer " + std::to_string(l + 1) +
                       " does not chain with previous layer width");
    if (hidden_weights[l].rows() != hidden_biases[l].size())
      throw ShapeError("hidden layer " + std::to_string(l + 1) +
                       " bias length does not match node count");
    if (!hidden_weights[l].allFinite() || !hidden_biases[l].allFinite())
      throw ShapeError("network parameters contain non-finite entries");
    fan_in = hidden_weights[l].rows();
  }
  if (output_weights.size() != fan_in)
    throw ShapeError("output weight length does not match last hidden width");
  if (!output_weights.allFinite() || !std::isfinite(output_bias))
    throw ShapeError("network parameters contain non-finite entries");
}

Network init_network(int p, const NetworkConfig& config) {
  config.validate();
  if (p < 1) throw ConfigError("input dimension must be >= 1");

  RandomStream stream(derive_seed(config.seed, 0));
  Network net;
  net.output_activation = config.output_activation;

  int fan_in = p;
  for (const int h : config.hidden_sizes) {
    const double scale =
        config.init_scale ? *config.init_scale : 1.0 / std::sqrt(fan_in);
    Eigen::MatrixXd W(h, fan_in);
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      for (Eigen::Index j = 0; j < W.cols(); ++j)
        W(i, j) = stream.uniform(-scale, scale);
    net.hidden_weights.push_back(std::move(W));
    net.hidden_biases.push_back(Eigen::VectorXd::Zero(h));
    fan_in = h;
  }

  const double scale =
      config.init_scale ? *config.init_scale : 1.0 / std::sqrt(fan_in);
  net.output_weights.resize(fan_in);
  for (Eigen::Index i = 0; i < fan_in; ++i)
    net.output_weights(i) = stream.uniform(-scale, scale);
  net.output_bias = 0.0;

  return net;
}

double forward(const Network& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim())
    throw ShapeError("forward: input length does not match network");

  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < net.hidden_weights.size(); ++l) {
    Eigen::VectorXd z = net.hidden_weights[l] * a + net.hidden_biases[l];
    a = z.unaryExpr([](double v) { return sigmoid(v); });
  }
  const double s = net.output_weights.dot(a) + net.output_bias;
  return net.output_activation == OutputActivation::sigmoid ? sigmoid(s) : s;
}

Eigen::VectorXd forward_batch(const Network& net, const Eigen::MatrixXd& X) {
  if (X.cols() != net.input_dim())
    throw ShapeError("forward_batch: column count does not match network");

  Eigen::MatrixXd A = X;
  for (std::size_t l = 0; l < net.hidden_weights.size(); ++l) {
    Eigen::MatrixXd Z =
        (A * net.hidden_weights[l].transpose()).rowwise() +
        net.hidden_biases[l].transpose();
    A = sigmoid(Z);
  }
  Eigen::VectorXd s =
      (A * net.output_weights).array() + net.output_bias;
  if (net.output_activation == OutputActivation::sigmoid)
    return s.unaryExpr([](double v) { return sigmoid(v); });
  return s;
}

TrainResult train(const Network& net, const Dataset& data,
                  const NetworkConfig& config) {
  config.validate();
  data.validate();
  net.validate();
  if (net.input_dim() != data.n_features())
    throw ShapeError("train: dataset width does not match network input");

  const bool binary = net.output_activation == OutputActivation::sigmoid;
  if (binary &&
      (data.y.minCoeff() < 0.0 || data.y.maxCoeff() > 1.0))
    throw ConfigError(
        "sigmoid output trains on binary cross-entropy; outcomes must lie in "
        "[0, 1]");

  TrainResult result{net, {}};
  if (config.epochs == 0) return result;
  result.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));

  Network& current = result.network;
  const int depth = current.depth();
  const Eigen::Index n = data.n_rows();
  const Eigen::Index p = data.n_features();
  const double lambda = config.l2_lambda;

  RandomStream shuffle_stream(derive_seed(config.seed, 1));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);

  std::vector<Eigen::MatrixXd> A(static_cast<std::size_t>(depth) + 1);
  std::vector<Eigen::MatrixXd> D(static_cast<std::size_t>(depth));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate_at(epoch);
    shuffle_stream.shuffle(order);

    double epoch_data_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index m = std::min<Eigen::Index>(config.batch_size, n - start);

      Eigen::MatrixXd Xb(m, p);
      Eigen::VectorXd yb(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        const int row = order[static_cast<std::size_t>(start + r)];
        Xb.row(r) = data.X.row(row);
        yb(r) = data.y(row);
      }

      // Forward, keeping activations for the backward pass.
      A[0] = std::move(Xb);
      for (int l = 0; l < depth; ++l) {
        Eigen::MatrixXd Z =
            (A[static_cast<std::size_t>(l)] * current.hidden_weights[static_cast<std::size_t>(l)].transpose())
                .rowwise() +
            current.hidden_biases[static_cast<std::size_t>(l)].transpose();
        A[static_cast<std::size_t>(l) + 1] = sigmoid(Z);
      }
      const Eigen::MatrixXd& Alast = A[static_cast<std::size_t>(depth)];
      Eigen::VectorXd s = (Alast * current.output_weights).array() + current.output_bias;

      double batch_loss = 0.0;
      Eigen::VectorXd ds(m);  // dL/ds
      if (binary) {
        for (Eigen::Index r = 0; r < m; ++r)
          batch_loss += bce_from_preactivation(s(r), yb(r));
        batch_loss /= static_cast<double>(m);
        ds = (s.unaryExpr([](double v) { return sigmoid(v); }) - yb) /
             static_cast<double>(m);
      } else {
        const Eigen::VectorXd err = s - yb;
        batch_loss = err.squaredNorm() / static_cast<double>(m);
        ds = 2.0 * err / static_cast<double>(m);
      }
      if (!std::isfinite(batch_loss))
        throw DivergenceError(epoch + 1,
                              "training loss diverged at epoch " +
                                  std::to_string(epoch + 1));
      epoch_data_loss += batch_loss * static_cast<double>(m);

      // Backward.
      Eigen::VectorXd grad_wout = Alast.transpose() * ds;
      if (lambda > 0.0) grad_wout += 2.0 * lambda * current.output_weights;
      const double grad_bout = ds.sum();

      Eigen::MatrixXd upstream = ds * current.output_weights.transpose();  // m x h_last
      for (int l = depth - 1; l >= 0; --l) {
        const Eigen::MatrixXd& Al = A[static_cast<std::size_t>(l) + 1];
        D[static_cast<std::size_t>(l)] =
            upstream.array() * (Al.array() * (1.0 - Al.array()));
        if (l > 0)
          upstream = D[static_cast<std::size_t>(l)] *
                     current.hidden_weights[static_cast<std::size_t>(l)];
      }

      for (int l = 0; l < depth; ++l) {
        Eigen::MatrixXd grad_W =
            D[static_cast<std::size_t>(l)].transpose() * A[static_cast<std::size_t>(l)];
        if (lambda > 0.0)
          grad_W += 2.0 * lambda * current.hidden_weights[static_cast<std::size_t>(l)];
        current.hidden_weights[static_cast<std::size_t>(l)].noalias() -= lr * grad_W;
        current.hidden_biases[static_cast<std::size_t>(l)].noalias() -=
            lr * D[static_cast<std::size_t>(l)].colwise().sum().transpose();
      }
      current.output_weights.noalias() -= lr * grad_wout;
      current.output_bias -= lr * grad_bout;
    }

    result.epoch_loss.push_back(epoch_data_loss / static_cast<double>(n));
  }

  // Catch an exploding final update that no later batch loss would flag.
  for (const auto& W : current.hidden_weights)
    if (!W.allFinite())
      throw DivergenceError(config.epochs, "training diverged at epoch " +
                                               std::to_string(config.epochs));
  if (!current.output_weights.allFinite() || !std::isfinite(current.output_bias))
    throw DivergenceError(config.epochs, "training diverged at epoch " +
                                             std::to_string(config.epochs));

  return result;
}

double input_gradient_closed_form(const Network& net, const Eigen::VectorXd& x,
                                  int j) {
  if (net.depth() != 1)
    throw UnsupportedError(
        "closed-form input gradient covers one hidden layer; use "
        "input_gradient_backprop for deeper networks");
  if (x.size() != net.input_dim())
    throw ShapeError("input_gradient_closed_form: input length mismatch");
  if (j < 0 || j >= net.input_dim())
    throw ShapeError("input_gradient_closed_form: feature index out of range");

  const Eigen::MatrixXd& W1 = net.hidden_weights[0];
  const Eigen::VectorXd z1 = W1 * x + net.hidden_biases[0];
  const Eigen::VectorXd a1 = z1.unaryExpr([](double v) { return sigmoid(v); });
  const double s = net.output_weights.dot(a1) + net.output_bias;

  double g0_prime = 1.0;
  if (net.output_activation == OutputActivation::sigmoid) {
    const double mu = sigmoid(s);
    g0_prime = mu * (1.0 - mu);
  }

  const Eigen::ArrayXd g1_prime = a1.array() * (1.0 - a1.array());
  return g0_prime *
         (net.output_weights.array() * g1_prime * W1.col(j).array()).sum();
}

double input_gradient_backprop(const Network& net, const Eigen::VectorXd& x,
                               int j) {
  net.validate();
  if (x.size() != net.input_dim())
    throw ShapeError("input_gradient_backprop: input length mismatch");
  if (j < 0 || j >= net.input_dim())
    throw ShapeError("input_gradient_backprop: feature index out of range");

  const int depth = net.depth();
  std::vector<Eigen::VectorXd> activations(static_cast<std::size_t>(depth));
  Eigen::VectorXd a = x;
  for (int l = 0; l < depth; ++l) {
    Eigen::VectorXd z = net.hidden_weights[static_cast<std::size_t>(l)] * a +
                        net.hidden_biases[static_cast<std::size_t>(l)];
    a = z.unaryExpr([](double v) { return sigmoid(v); });
    activations[static_cast<std::size_t>(l)] = a;
  }
  const double s = net.output_weights.dot(a) + net.output_bias;

  double g0_prime = 1.0;
  if (net.output_activation == OutputActivation::sigmoid) {
    const double mu = sigmoid(s);
    g0_prime = mu * (1.0 - mu);
  }

  Eigen::VectorXd delta = g0_prime * net.output_weights;
  for (int l = depth - 1; l >= 0; --l) {
    const Eigen::ArrayXd& al = activations[static_cast<std::size_t>(l)].array();
    const Eigen::VectorXd gated = (delta.array() * al * (1.0 - al)).matrix();
    delta = net.hidden_weights[static_cast<std::size_t>(l)].transpose() * gated;
  }
  return delta(j);
}

Eigen::VectorXd input_gradients(const Network& net, const Eigen::MatrixXd& X,
                                int j) {
  net.validate();
  if (X.cols() != net.input_dim())
    throw ShapeError("input_gradients: column count does not match network");
  if (j < 0 || j >= net.input_dim())
    throw ShapeError("input_gradients: feature index out of range");

  const int depth = net.depth();
  std::vector<Eigen::MatrixXd> activations(static_cast<std::size_t>(depth));
  Eigen::MatrixXd A = X;
  for (int l = 0; l < depth; ++l) {
    Eigen::MatrixXd Z =
        (A * net.hidden_weights[static_cast<std::size_t>(l)].transpose()).rowwise() +
        net.hidden_biases[static_cast<std::size_t>(l)].transpose();
    A = sigmoid(Z);
    activations[static_cast<std::size_t>(l)] = A;
  }
  Eigen::VectorXd s = (A * net.output_weights).array() + net.output_bias;

  Eigen::VectorXd g0_prime = Eigen::VectorXd::Ones(X.rows());
  if (net.output_activation == OutputActivation::sigmoid) {
    const Eigen::ArrayXd mu =
        s.unaryExpr([](double v) { return sigmoid(v); }).array();
    g0_prime = (mu * (1.0 - mu)).matrix();
  }

  Eigen::MatrixXd D = g0_prime * net.output_weights.transpose();  // m x h_last
  for (int l = depth - 1; l >= 0; --l) {
    const Eigen::ArrayXXd al = activations[static_cast<std::size_t>(l)].array();
    D = (D.array() * al * (1.0 - al)).matrix();
    if (l > 0) D = D * net.hidden_weights[static_cast<std::size_t>(l)];
  }
  return D * net.hidden_weights[0].col(j);
}

}  // namespace gradperm
