// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gradperm/dataset.hpp"
#include "gradperm/permtest.hpp"

namespace gradperm {

enum class SimKind { nonlin5, linear, smooth, nonsmooth, correlated };
enum class Hypothesis { null_h, alternative };

/// How the second argument of a noise specification N(0, v) is read.
enum class NoiseConvention { sd, variance };

const char* to_string(SimKind kind);
const char* to_string(Hypothesis hypothesis);
SimKind sim_kind_from_string(const std::string& name);

struct SimSetting {
  SimKind kind = SimKind::linear;
  int n = 500;
  /// Signal strength: the m of the association settings, beta of the
  /// five-feature nonlinear model, or the shared coefficient mean of the
  /// correlated setting.
  double beta_mean = 0.30;
  Hypothesis hypothesis = Hypothesis::alternative;
  std::optional<Eigen::MatrixXd> correlation;  // correlated kind only
  double noise = 0.3;
  NoiseConvention noise_convention = NoiseConvention::sd;
  std::uint64_t seed = 0;

  int p() const;  // 5 for nonlin5, 4 for the association kinds, 8 correlated
  void validate() const;
};

/// Kind-appropriate defaults (signal strength and noise level).
SimSetting default_setting(SimKind kind);

/// Whether a signal level belongs to the study grid for this kind; other
/// values run fine but are flagged by the CLI as off-grid.
bool is_study_signal_level(SimKind kind, double m);

/// Five independent standard-normal features;
/// y = -b x1 + b x2^2 - b x3^3 + b sin(2 x4) - b |x5| + noise.
Dataset gen_nonlin5(int n, std::uint64_t seed, double beta = 0.2,
                    double noise = 0.2,
                    NoiseConvention convention = NoiseConvention::sd);

/// Four independent standard-normal features with linear, smooth-nonlinear,
/// or nonsmooth-nonlinear response. Under the null the fourth coefficient is
/// zero; under the alternative all four coefficient means equal m.
Dataset gen_assoc(SimKind kind, int n, double m, Hypothesis hypothesis,
                  std::uint64_t seed, double noise = 0.3,
                  NoiseConvention convention = NoiseConvention::sd);

/// Eight features drawn multivariate normal with the given correlation via
/// a symmetric eigenvalue square root; x1 carries no signal.
Dataset gen_correlated(int n, const Eigen::MatrixXd& sigma, std::uint64_t seed,
                       double beta_mean = 0.1, double noise = 0.1,
                       NoiseConvention convention = NoiseConvention::sd);

/// Dispatch on setting.kind.
Dataset generate(const SimSetting& setting);

/// Symmetric positive-definite square root of a correlation matrix; throws
/// RankError when the matrix is not positive semidefinite.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& sigma);

/// Unit-diagonal matrix with constant off-diagonal rho; the mean magnitude
/// of pairwise correlation is exactly |rho|.
Eigen::MatrixXd equicorrelation(int p, double rho);

/// Named 8x8 presets: "identity", "low" (mean |corr| 0.13), and "high"
/// (mean |corr| 0.60). The low/high matrices are synthetic stand-ins that
/// match published summary statistics of real clinical batteries.
Eigen::MatrixXd correlation_preset(const std::string& name);

/// Two-sided t-test p-value for coefficient j in an OLS fit of y on all
/// features plus intercept.
double lm_t_test(const Dataset& data, int j);

enum class TestSelector { nn_association, nn_nonlinearity, lm };

const char* to_string(TestSelector test);
TestSelector test_selector_from_string(const std::string& name);

struct StudyConfig {
  SimSetting setting;
  TestSelector test = TestSelector::nn_association;
  int feature_index = 3;
  int n_sims = 100;
  double alpha = 0.05;
  TestConfig test_config;  // per-sim master seeds are derived internally

  void validate() const;
};

struct StudyReport {
  SimSetting setting;
  TestSelector test = TestSelector::nn_association;
  int feature_index = 0;
  int n_sims = 0;
  double alpha = 0.05;
  int permutations = 0;
  double rejection_rate = 0.0;
  std::vector<double> p_values;        // successful sims, in sim order
  std::vector<std::uint64_t> sim_seeds;  // aligned with p_values
  std::vector<int> failed_sims;        // sim indices whose test failed
  double wall_time_seconds = 0.0;
};

/// Generate n_sims independent datasets (seeds derived from setting.seed),
/// run the selected test on each, and aggregate the rejection rate at level
/// alpha. Failed sims are excluded and counted. Deterministic for any
/// worker count.
StudyReport run_study(const StudyConfig& config);

enum class ScalePreset { desk, paper };

/// Preconfigured study: `desk` keeps binomial error bars able to separate
/// the effect tiers at workstation runtimes; `paper` uses the full-scale
/// settings (n = 500, B = 500, hundreds of simulations).
StudyConfig study_preset(SimKind kind, TestSelector test, ScalePreset scale,
                         Hypothesis hypothesis, int feature_index = -1);

}  // namespace gradperm
