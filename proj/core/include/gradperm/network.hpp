// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "gradperm/dataset.hpp"

namespace gradperm {

enum class OutputActivation { identity, sigmoid };

/// Training configuration for the small feed-forward networks used by the
/// permutation tests. Hidden activations are always sigmoid.
struct NetworkConfig {
  std::vector<int> hidden_sizes{40};  // 1 or 2 hidden layers
  OutputActivation output_activation = OutputActivation::identity;
  int epochs = 150;
  double initial_learning_rate = 0.1;
  double lr_decay_per_epoch = 0.015;  // fraction removed each epoch, in [0, 1)
  double l2_lambda = 1e-4;            // weights only; biases unpenalized
  int batch_size = 32;
  std::optional<double> init_scale;   // unset: per-layer 1/sqrt(fan_in)
  std::uint64_t seed = 0;

  /// initial_learning_rate * (1 - lr_decay_per_epoch)^epoch, epoch 0-based.
  double learning_rate_at(int epoch) const;

  void validate() const;
};

struct Network {
  std::vector<Eigen::MatrixXd> hidden_weights;  // layer l: (h_l x fan_in_l)
  std::vector<Eigen::VectorXd> hidden_biases;
  Eigen::VectorXd output_weights;
  double output_bias = 0.0;
  OutputActivation output_activation = OutputActivation::identity;

  int input_dim() const;
  int depth() const { return static_cast<int>(hidden_weights.size()); }

  /// Checks the dimension chain inputs -> hidden sizes -> 1 and finiteness.
  void validate() const;
};

/// Weights i.i.d. uniform on [-s, s] from the seeded generator, biases zero.
/// Identical (p, config) pairs produce bit-identical networks.
Network init_network(int p, const NetworkConfig& config);

double forward(const Network& net, const Eigen::VectorXd& x);

/// Row-wise forward pass.
Eigen::VectorXd forward_batch(const Network& net, const Eigen::MatrixXd& X);

struct TrainResult {
  Network network;
  std::vector<double> epoch_loss;  // mean data loss per epoch
};

/// Minibatch SGD: each epoch shuffles row order with the seeded generator,
/// applies gradient steps with the L2 penalty added to the loss, and decays
/// the learning rate. Identity output trains on mean squared error, sigmoid
/// output on binary cross-entropy (y must lie in [0, 1]).
/// Throws DivergenceError naming the epoch if the loss goes non-finite.
TrainResult train(const Network& net, const Dataset& data,
                  const NetworkConfig& config);

/// Partial derivative of the output with respect to input j at x, using the
/// single-hidden-layer closed form
///   g0'(w0 . a1 + d0) * w0 . (g1'(W1 x + d1) o W1[:, j]).
/// Throws UnsupportedError for deeper networks.
double input_gradient_closed_form(const Network& net, const Eigen::VectorXd& x,
                                  int j);

/// Same derivative by reverse-mode accumulation; any supported depth.
double input_gradient_backprop(const Network& net, const Eigen::VectorXd& x,
                               int j);

/// dmu/dx_j evaluated at every row of X.
Eigen::VectorXd input_gradients(const Network& net, const Eigen::MatrixXd& X,
                                int j);

}  // namespace gradperm
