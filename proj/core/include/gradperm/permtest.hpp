// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gradperm/dataset.hpp"
#include "gradperm/network.hpp"
#include "gradperm/splines.hpp"

namespace gradperm {

enum class TestKind { association, nonlinearity };

struct TestConfig {
  int permutations = 500;  // B
  NetworkConfig network;
  int q = 10;  // spline basis dimension for the nonlinearity statistic
  SmoothingPolicy smoothing;
  std::uint64_t master_seed = 0;
  int workers = 0;     // 0: GRADPERM_WORKERS env var, then hardware count
  double alpha = 0.05; // level used by the combined protocol
  bool add_one_pvalue = false;        // (1 + #) / (B + 1) instead of # / B
  bool shared_observed_fit = true;    // combined protocol reuses one fit
  double max_replicate_failure_rate = 0.05;
  double correlation_warning_threshold = 0.3;

  void validate() const;
};

struct TestResult {
  TestKind kind = TestKind::association;
  int feature_index = 0;
  std::string feature_name;
  double t_observed = 0.0;
  std::vector<double> t_null;  // successful replicates, in replicate order
  double p_value = 1.0;
  int permutations = 0;  // B requested
  int n_failed = 0;
  std::vector<std::string> warnings;

  // Diagnostics.
  Eigen::VectorXd observed_gradients;       // length n
  std::vector<double> observed_epoch_loss;  // observed fit loss curve
  std::vector<double> replicate_final_loss; // aligned with t_null
  double smoothing_lambda = 0.0;            // nonlinearity only
  double additive_lambda = 0.0;             // nonlinearity only
};

/// Mean squared entry: (1/n) sum grads_i^2.
double assoc_statistic(const Eigen::VectorXd& grads);

/// Mean squared spline coefficient: (1/q) sum theta_l^2. The fit's intercept
/// is not part of theta and never enters the statistic.
double nonlin_statistic(const SmoothFit& fit);

/// Copy of X with column j replaced by a uniform random permutation of its
/// entries; every other column is untouched.
Eigen::MatrixXd permute_column(const Eigen::MatrixXd& X, int j,
                               std::uint64_t seed);

/// fitted + permuted(residuals).
Eigen::VectorXd permute_residual_response(const Eigen::VectorXd& fitted,
                                          const Eigen::VectorXd& residuals,
                                          std::uint64_t seed);

/// Plain permutation p-value (1/B) #{b : t_null[b] >= t_observed}; ties count.
double p_value(double t_observed, const std::vector<double>& t_null);

/// Add-one convention (1 + #) / (B + 1).
double p_value_add_one(double t_observed, const std::vector<double>& t_null);

/// Permutation test of H0: feature j is not associated with the outcome.
/// Trains on the observed data, then per replicate permutes column j and
/// retrains a freshly initialized network with a replicate-derived seed.
/// Replicates that diverge are dropped; more than
/// max_replicate_failure_rate of them aborts with DivergenceError.
TestResult association_test(const Dataset& data, int j, const TestConfig& cfg);

/// Permutation test of H0: feature j enters linearly. The null response is
/// rebuilt from an additive model with feature j restricted to a linear term
/// by permuting its residuals. Requires an identity-output network
/// (UnsupportedError for sigmoid output).
TestResult nonlinearity_test(const Dataset& data, int j, const TestConfig& cfg);

enum class Verdict { none, linear, nonlinear };

const char* to_string(Verdict verdict);

struct ProtocolResult {
  Verdict verdict = Verdict::none;
  std::optional<TestResult> association;
  std::optional<TestResult> nonlinearity;
};

/// Association test first; stop on p >= alpha (verdict "none"), otherwise
/// run the nonlinearity test and report "linear" or "nonlinear". With
/// shared_observed_fit the observed network is trained once and reused.
ProtocolResult combined_protocol(const Dataset& data, int j,
                                 const TestConfig& cfg);

}  // namespace gradperm
