// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#include "gradperm/permtest.hpp"

#include <cmath>
#include <limits>

#include "gradperm/errors.hpp"
#include "gradperm/parallel.hpp"
#include "gradperm/rng.hpp"

namespace gradperm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom == 0.0) return 0.0;
  return (da * db).sum() / denom;
}

std::vector<std::string> correlation_warnings(const Dataset& data, int j,
                                              double threshold) {
  std::vector<std::string> warnings;
  for (Eigen::Index k = 0; k < data.n_features(); ++k) {
    if (k == j) continue;
    const double r = pearson(data.X.col(j), data.X.col(k));
    if (std::abs(r) > threshold) {
      char buffer[64];
      std::snprintf(buffer, sizeof(buffer), "%.3f", r);
      warnings.push_back(
          "tested feature '" + data.feature_names[static_cast<std::size_t>(j)] +
          "' correlates with '" + data.feature_names[static_cast<std::size_t>(k)] +
          "' (r = " + buffer +
          "); permuting it breaks the joint predictor distribution and can "
          "inflate the Type-I error of the association test");
    }
  }
  return warnings;
}

struct ObservedState {
  TrainResult trained;
  Eigen::VectorXd gradients;
};

ObservedState compute_observed(const Dataset& data, int j,
                               const TestConfig& cfg) {
  NetworkConfig net_cfg = cfg.network;
  net_cfg.seed = derive_seed(cfg.master_seed, 0);
  ObservedState state{
      train(init_network(static_cast<int>(data.n_features()), net_cfg), data,
            net_cfg),
      {}};
  state.gradients = input_gradients(state.trained.network, data.X, j);
  return state;
}

// Shared replicate scaffolding: run `replicate` for b = 1..B, collect
// statistics in replicate order, enforce the failure policy.
template <typename Replicate>
void run_replicates(const TestConfig& cfg, TestResult& result,
                    const Replicate& replicate) {
  const int B = cfg.permutations;
  std::vector<double> stats(static_cast<std::size_t>(B), kNaN);
  std::vector<double> losses(static_cast<std::size_t>(B), kNaN);
  std::vector<int> failed_at(static_cast<std::size_t>(B), 0);

  parallel_for(static_cast<std::size_t>(B), resolve_workers(cfg.workers),
               [&](std::size_t idx) {
                 const std::uint64_t seed_b =
                     derive_seed(cfg.master_seed, idx + 1);
                 try {
                   replicate(seed_b, stats[idx], losses[idx]);
                 } catch (const DivergenceError& e) {
                   failed_at[idx] = e.epoch() > 0 ? e.epoch() : 1;
                 }
               });

  int first_failed_epoch = 0;
  for (int b = 0; b < B; ++b) {
    const std::size_t idx = static_cast<std::size_t>(b);
    if (failed_at[idx] == 0) {
      result.t_null.push_back(stats[idx]);
      result.replicate_final_loss.push_back(losses[idx]);
    } else {
      ++result.n_failed;
      if (first_failed_epoch == 0) first_failed_epoch = failed_at[idx];
    }
  }

  if (result.n_failed >
      cfg.max_replicate_failure_rate * static_cast<double>(B)) {
    throw DivergenceError(
        first_failed_epoch,
        std::to_string(result.n_failed) + " of " + std::to_string(B) +
            " permutation replicates diverged during training; lower the "
            "learning rate or raise regularization");
  }
  if (result.t_null.empty())
    throw DivergenceError(first_failed_epoch,
                          "every permutation replicate diverged");

  result.p_value = cfg.add_one_pvalue
                       ? p_value_add_one(result.t_observed, result.t_null)
                       : p_value(result.t_observed, result.t_null);
}

TestResult association_test_impl(const Dataset& data, int j,
                                 const TestConfig& cfg,
                                 const ObservedState& observed) {
  TestResult result;
  result.kind = TestKind::association;
  result.feature_index = j;
  result.feature_name = data.feature_names[static_cast<std::size_t>(j)];
  result.permutations = cfg.permutations;
  result.warnings =
      correlation_warnings(data, j, cfg.correlation_warning_threshold);

  result.observed_gradients = observed.gradients;
  result.observed_epoch_loss = observed.trained.epoch_loss;
  result.t_observed = assoc_statistic(observed.gradients);

  const int p = static_cast<int>(data.n_features());
  run_replicates(cfg, result,
                 [&](std::uint64_t seed_b, double& stat, double& loss) {
                   NetworkConfig net_cfg = cfg.network;
                   net_cfg.seed = derive_seed(seed_b, 1);
                   Dataset permuted = data;
                   permuted.X =
                       permute_column(data.X, j, derive_seed(seed_b, 2));
                   const TrainResult trained =
                       train(init_network(p, net_cfg), permuted, net_cfg);
                   stat = assoc_statistic(
                       input_gradients(trained.network, permuted.X, j));
                   loss = trained.epoch_loss.empty() ? 0.0
                                                     : trained.epoch_loss.back();
                 });
  return result;
}

TestResult nonlinearity_test_impl(const Dataset& data, int j,
                                  const TestConfig& cfg,
                                  const ObservedState& observed) {
  if (cfg.network.output_activation != OutputActivation::identity)
    throw UnsupportedError(
        "nonlinearity test requires a continuous outcome (identity output "
        "activation)");

  TestResult result;
  result.kind = TestKind::nonlinearity;
  result.feature_index = j;
  result.feature_name = data.feature_names[static_cast<std::size_t>(j)];
  result.permutations = cfg.permutations;

  const Eigen::VectorXd t = data.X.col(j);
  const SmoothSolver solver(make_basis(t, cfg.q, /*centered=*/true), t,
                            cfg.smoothing);

  result.observed_gradients = observed.gradients;
  result.observed_epoch_loss = observed.trained.epoch_loss;

  const Eigen::VectorXd centered =
      observed.gradients.array() - observed.gradients.mean();
  const SmoothFit observed_smooth = solver.fit(centered);
  result.t_observed = nonlin_statistic(observed_smooth);
  result.smoothing_lambda = observed_smooth.penalty_lambda;

  const AdditiveFit additive = fit_additive(data, j, cfg.q, cfg.smoothing);
  result.additive_lambda = additive.penalty_lambda;

  const int p = static_cast<int>(data.n_features());
  run_replicates(
      cfg, result, [&](std::uint64_t seed_b, double& stat, double& loss) {
        NetworkConfig net_cfg = cfg.network;
        net_cfg.seed = derive_seed(seed_b, 1);
        Dataset permuted = data;
        permuted.y = permute_residual_response(additive.fitted,
                                               additive.residuals,
                                               derive_seed(seed_b, 2));
        const TrainResult trained =
            train(init_network(p, net_cfg), permuted, net_cfg);
        const Eigen::VectorXd grads =
            input_gradients(trained.network, permuted.X, j);
        const Eigen::VectorXd r = grads.array() - grads.mean();
        stat = nonlin_statistic(solver.fit(r));
        loss = trained.epoch_loss.empty() ? 0.0 : trained.epoch_loss.back();
      });
  return result;
}

void check_feature_index(const Dataset& data, int j) {
  if (j < 0 || j >= data.n_features())
    throw ConfigError("feature index out of range");
}

}  // namespace

void TestConfig::validate() const {
  if (permutations < 1) throw ConfigError("permutations (B) must be >= 1");
  if (q < 3) throw ConfigError("spline basis dimension q must be >= 3");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("alpha must lie in (0, 1)");
  if (!(max_replicate_failure_rate >= 0.0 && max_replicate_failure_rate <= 1.0))
    throw ConfigError("max_replicate_failure_rate must lie in [0, 1]");
  network.validate();
}

double assoc_statistic(const Eigen::VectorXd& grads) {
  if (grads.size() == 0)
    throw ConfigError("assoc_statistic: empty gradient vector");
  return grads.squaredNorm() / static_cast<double>(grads.size());
}

double nonlin_statistic(const SmoothFit& fit) {
  if (fit.theta.size() == 0)
    throw ConfigError("nonlin_statistic: fit has no coefficients");
  return fit.theta.squaredNorm() / static_cast<double>(fit.theta.size());
}

Eigen::MatrixXd permute_column(const Eigen::MatrixXd& X, int j,
                               std::uint64_t seed) {
  if (j < 0 || j >= X.cols())
    throw ShapeError("permute_column: column index out of range");
  RandomStream stream(seed);
  const std::vector<int> order =
      stream.permutation(static_cast<int>(X.rows()));
  Eigen::MatrixXd out = X;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    out(i, j) = X(order[static_cast<std::size_t>(i)], j);
  return out;
}

Eigen::VectorXd permute_residual_response(const Eigen::VectorXd& fitted,
                                          const Eigen::VectorXd& residuals,
                                          std::uint64_t seed) {
  if (fitted.size() != residuals.size())
    throw ShapeError("permute_residual_response: length mismatch");
  RandomStream stream(seed);
  const std::vector<int> order =
      stream.permutation(static_cast<int>(residuals.size()));
  Eigen::VectorXd out(fitted.size());
  for (Eigen::Index i = 0; i < fitted.size(); ++i)
    out(i) = fitted(i) + residuals(order[static_cast<std::size_t>(i)]);
  return out;
}

double p_value(double t_observed, const std::vector<double>& t_null) {
  if (t_null.empty()) throw ConfigError("p_value: need at least one replicate");
  std::size_t count = 0;
  for (const double t : t_null)
    if (t >= t_observed) ++count;
  return static_cast<double>(count) / static_cast<double>(t_null.size());
}

double p_value_add_one(double t_observed, const std::vector<double>& t_null) {
  if (t_null.empty()) throw ConfigError("p_value: need at least one replicate");
  std::size_t count = 0;
  for (const double t : t_null)
    if (t >= t_observed) ++count;
  return static_cast<double>(1 + count) /
         static_cast<double>(1 + t_null.size());
}

TestResult association_test(const Dataset& data, int j, const TestConfig& cfg) {
  cfg.validate();
  data.validate();
  check_feature_index(data, j);
  return association_test_impl(data, j, cfg, compute_observed(data, j, cfg));
}

TestResult nonlinearity_test(const Dataset& data, int j, const TestConfig& cfg) {
  cfg.validate();
  data.validate();
  check_feature_index(data, j);
  if (cfg.network.output_activation != OutputActivation::identity)
    throw UnsupportedError(
        "nonlinearity test requires a continuous outcome (identity output "
        "activation)");
  return nonlinearity_test_impl(data, j, cfg, compute_observed(data, j, cfg));
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::none: return "none";
    case Verdict::linear: return "linear";
    case Verdict::nonlinear: return "nonlinear";
  }
  return "none";
}

ProtocolResult combined_protocol(const Dataset& data, int j,
                                 const TestConfig& cfg) {
  cfg.validate();
  data.validate();
  check_feature_index(data, j);

  ObservedState observed = compute_observed(data, j, cfg);
  ProtocolResult protocol;
  protocol.association = association_test_impl(data, j, cfg, observed);

  if (protocol.association->p_value >= cfg.alpha) {
    protocol.verdict = Verdict::none;
    return protocol;
  }

  if (!cfg.shared_observed_fit) observed = compute_observed(data, j, cfg);
  protocol.nonlinearity = nonlinearity_test_impl(data, j, cfg, observed);
  protocol.verdict = protocol.nonlinearity->p_value < cfg.alpha
                         ? Verdict::nonlinear
                         : Verdict::linear;
  return protocol;
}

}  // namespace gradperm
