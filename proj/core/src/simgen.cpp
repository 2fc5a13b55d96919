// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#include "gradperm/simgen.hpp"

#include <chrono>
#include <cmath>

#include "gradperm/errors.hpp"
#include "gradperm/linreg.hpp"
#include "gradperm/rng.hpp"

namespace gradperm {

namespace {

double noise_sd(double noise, NoiseConvention convention) {
  if (!(noise >= 0.0)) throw ConfigError("noise level must be nonnegative");
  return convention == NoiseConvention::sd ? noise : std::sqrt(noise);
}

Eigen::MatrixXd standard_normal_matrix(int n, int p, RandomStream& stream) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = stream.normal();
  return X;
}

Eigen::VectorXd noise_vector(int n, double sd, RandomStream& stream) {
  Eigen::VectorXd eps(n);
  for (int i = 0; i < n; ++i) eps(i) = stream.normal(0.0, sd);
  return eps;
}

}  // namespace

const char* to_string(SimKind kind) {
  switch (kind) {
    case SimKind::nonlin5: return "nonlin5";
    case SimKind::linear: return "linear";
    case SimKind::smooth: return "smooth";
    case SimKind::nonsmooth: return "nonsmooth";
    case SimKind::correlated: return "correlated";
  }
  return "linear";
}

const char* to_string(Hypothesis hypothesis) {
  return hypothesis == Hypothesis::null_h ? "null" : "alternative";
}

SimKind sim_kind_from_string(const std::string& name) {
  if (name == "nonlin5") return SimKind::nonlin5;
  if (name == "linear") return SimKind::linear;
  if (name == "smooth") return SimKind::smooth;
  if (name == "nonsmooth") return SimKind::nonsmooth;
  if (name == "correlated") return SimKind::correlated;
  throw ConfigError("unknown simulation kind: " + name);
}

int SimSetting::p() const {
  switch (kind) {
    case SimKind::nonlin5: return 5;
    case SimKind::correlated: return 8;
    default: return 4;
  }
}

void SimSetting::validate() const {
  if (n < 1) throw ConfigError("sample size must be >= 1");
  if (!(noise >= 0.0)) throw ConfigError("noise level must be nonnegative");
  if (kind == SimKind::correlated && correlation &&
      (correlation->rows() != 8 || correlation->cols() != 8))
    throw ConfigError("correlated setting needs an 8x8 correlation matrix");
}

SimSetting default_setting(SimKind kind) {
  SimSetting setting;
  setting.kind = kind;
  switch (kind) {
    case SimKind::nonlin5:
      setting.beta_mean = 0.2;
      setting.noise = 0.2;
      break;
    case SimKind::correlated:
      setting.beta_mean = 0.1;
      setting.noise = 0.1;
      setting.correlation = Eigen::MatrixXd::Identity(8, 8);
      break;
    default:
      setting.beta_mean = 0.30;
      setting.noise = 0.3;
      break;
  }
  return setting;
}

bool is_study_signal_level(SimKind kind, double m) {
  const auto close = [m](double v) { return std::abs(m - v) < 1e-12; };
  if (kind == SimKind::nonsmooth)
    return close(0.12) || close(0.24) || close(0.36) || close(0.48) ||
           close(0.60);
  if (kind == SimKind::linear || kind == SimKind::smooth)
    return close(0.24) || close(0.27) || close(0.30) || close(0.33) ||
           close(0.36);
  return true;
}

Dataset gen_nonlin5(int n, std::uint64_t seed, double beta, double noise,
                    NoiseConvention convention) {
  if (n < 1) throw ConfigError("sample size must be >= 1");
  const double sd = noise_sd(noise, convention);

  RandomStream stream(seed);
  Eigen::MatrixXd X = standard_normal_matrix(n, 5, stream);
  const Eigen::VectorXd eps = noise_vector(n, sd, stream);

  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y(i) = -beta * X(i, 0) + beta * X(i, 1) * X(i, 1) -
           beta * X(i, 2) * X(i, 2) * X(i, 2) + beta * std::sin(2.0 * X(i, 3)) -
           beta * std::abs(X(i, 4)) + eps(i);
  }
  return make_dataset(std::move(X), std::move(y));
}

Dataset gen_assoc(SimKind kind, int n, double m, Hypothesis hypothesis,
                  std::uint64_t seed, double noise,
                  NoiseConvention convention) {
  if (kind != SimKind::linear && kind != SimKind::smooth &&
      kind != SimKind::nonsmooth)
    throw ConfigError("gen_assoc covers the linear, smooth, and nonsmooth kinds");
  if (n < 1) throw ConfigError("sample size must be >= 1");
  const double sd = noise_sd(noise, convention);
  constexpr double kCoefSd = 0.01;

  RandomStream stream(seed);
  Eigen::Vector4d beta;
  if (hypothesis == Hypothesis::null_h) {
    const double null_mean = kind == SimKind::nonsmooth ? 0.18 : 0.30;
    for (int j = 0; j < 3; ++j) beta(j) = stream.normal(null_mean, kCoefSd);
    beta(3) = 0.0;
  } else {
    for (int j = 0; j < 4; ++j) beta(j) = stream.normal(m, kCoefSd);
  }

  Eigen::MatrixXd X = standard_normal_matrix(n, 4, stream);
  const Eigen::VectorXd eps = noise_vector(n, sd, stream);

  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double x1 = X(i, 0), x2 = X(i, 1), x3 = X(i, 2), x4 = X(i, 3);
    double signal = 0.0;
    switch (kind) {
      case SimKind::linear:
        signal = beta(0) * x1 + beta(1) * x2 + beta(2) * x3 + beta(3) * x4;
        break;
      case SimKind::smooth:
        signal = beta(0) * x1 * x1 * x1 + beta(1) * std::cos(x2) +
                 beta(2) * std::tanh(x3) + beta(3) * std::sin(3.0 * x4);
        break;
      default: {  // nonsmooth
        const double z1 = x1 * x2 < 0.0 ? x1 * x2 : 0.0;
        const double z2 = x2 * x3 > 0.0 ? x2 * x3 : 0.0;
        const double z3 = x3 * x4 < 0.0 ? x3 * x4 : 0.0;
        const double z4 = x4 * x1 > 0.0 ? x4 * x1 : 0.0;
        signal = beta(0) * z1 + beta(1) * z2 + beta(2) * z3 + beta(3) * z4;
        break;
      }
    }
    y(i) = signal + eps(i);
  }
  return make_dataset(std::move(X), std::move(y));
}

Dataset gen_correlated(int n, const Eigen::MatrixXd& sigma, std::uint64_t seed,
                       double beta_mean, double noise,
                       NoiseConvention convention) {
  if (n < 1) throw ConfigError("sample size must be >= 1");
  if (sigma.rows() != 8 || sigma.cols() != 8)
    throw ConfigError("correlated setting needs an 8x8 correlation matrix");
  const double sd = noise_sd(noise, convention);
  const Eigen::MatrixXd root = symmetric_sqrt(sigma);

  RandomStream stream(seed);
  const double beta = stream.normal(beta_mean, 0.01);
  Eigen::MatrixXd X = standard_normal_matrix(n, 8, stream) * root.transpose();
  const Eigen::VectorXd eps = noise_vector(n, sd, stream);

  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    y(i) = beta * (X(i, 1) * X(i, 1) + std::cos(X(i, 2)) +
                   std::sin(2.0 * X(i, 3)) + X(i, 4) + X(i, 5) + X(i, 6) +
                   X(i, 7)) +
           eps(i);
  }
  return make_dataset(std::move(X), std::move(y));
}

Dataset generate(const SimSetting& setting) {
  setting.validate();
  switch (setting.kind) {
    case SimKind::nonlin5:
      return gen_nonlin5(setting.n, setting.seed, setting.beta_mean,
                         setting.noise, setting.noise_convention);
    case SimKind::correlated: {
      const Eigen::MatrixXd sigma =
          setting.correlation ? *setting.correlation
                              : Eigen::MatrixXd::Identity(8, 8);
      return gen_correlated(setting.n, sigma, setting.seed, setting.beta_mean,
                            setting.noise, setting.noise_convention);
    }
    default:
      return gen_assoc(setting.kind, setting.n, setting.beta_mean,
                       setting.hypothesis, setting.seed, setting.noise,
                       setting.noise_convention);
  }
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols())
    throw ShapeError("symmetric_sqrt: matrix must be square");
  if (!sigma.isApprox(sigma.transpose(), 1e-10))
    throw RankError("correlation matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
  if (solver.info() != Eigen::Success)
    throw RankError("eigendecomposition of correlation matrix failed");

  Eigen::VectorXd values = solver.eigenvalues();
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < -1e-8)
      throw RankError("correlation matrix is not positive semidefinite");
    values(i) = std::max(values(i), 0.0);
  }
  return solver.eigenvectors() * values.cwiseSqrt().asDiagonal() *
         solver.eigenvectors().transpose();
}

Eigen::MatrixXd equicorrelation(int p, double rho) {
  if (p < 1) throw ConfigError("equicorrelation: p must be >= 1");
  if (!(rho > -1.0 / (p - 1.0) && rho < 1.0))
    throw ConfigError("equicorrelation: rho outside the positive-definite range");
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(p, p, rho);
  sigma.diagonal().setOnes();
  return sigma;
}

Eigen::MatrixXd correlation_preset(const std::string& name) {
  if (name == "identity") return Eigen::MatrixXd::Identity(8, 8);
  if (name == "low") return equicorrelation(8, 0.13);
  if (name == "high") return equicorrelation(8, 0.60);
  throw ConfigError("unknown correlation preset: " + name +
                    " (expected identity, low, or high)");
}

double lm_t_test(const Dataset& data, int j) {
  data.validate();
  if (j < 0 || j >= data.n_features())
    throw ConfigError("lm_t_test: feature index out of range");
  if (data.n_rows() <= data.n_features() + 1)
    throw ConfigError("lm_t_test: need n > p + 1");

  Eigen::MatrixXd design(data.n_rows(), data.n_features() + 1);
  design.col(0).setOnes();
  design.rightCols(data.n_features()) = data.X;

  const OlsFit fit = ols(design, data.y);
  const double sigma2 = fit.sse / static_cast<double>(fit.df_residual);
  const double se = std::sqrt(sigma2 * fit.xtx_inverse(j + 1, j + 1));
  const double t = fit.coef(j + 1) / se;
  return two_sided_t_pvalue(t, static_cast<double>(fit.df_residual));
}

const char* to_string(TestSelector test) {
  switch (test) {
    case TestSelector::nn_association: return "nn_association";
    case TestSelector::nn_nonlinearity: return "nn_nonlinearity";
    case TestSelector::lm: return "lm";
  }
  return "nn_association";
}

TestSelector test_selector_from_string(const std::string& name) {
  if (name == "assoc" || name == "nn_association") return TestSelector::nn_association;
  if (name == "nonlin" || name == "nn_nonlinearity") return TestSelector::nn_nonlinearity;
  if (name == "lm") return TestSelector::lm;
  throw ConfigError("unknown test selector: " + name +
                    " (expected assoc, nonlin, or lm)");
}

void StudyConfig::validate() const {
  setting.validate();
  if (n_sims < 1) throw ConfigError("n_sims must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ConfigError("alpha must lie in (0, 1]");
  if (feature_index < 0 || feature_index >= setting.p())
    throw ConfigError("feature index out of range for this setting");
  if (test != TestSelector::lm) test_config.validate();
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  StudyReport report;
  report.setting = config.setting;
  report.test = config.test;
  report.feature_index = config.feature_index;
  report.n_sims = config.n_sims;
  report.alpha = config.alpha;
  report.permutations =
      config.test == TestSelector::lm ? 0 : config.test_config.permutations;

  int rejections = 0;
  for (int s = 0; s < config.n_sims; ++s) {
    const std::uint64_t sim_seed = derive_seed(config.setting.seed,
                                               static_cast<std::uint64_t>(s));
    SimSetting per_sim = config.setting;
    per_sim.seed = derive_seed(sim_seed, 1);

    try {
      const Dataset data = generate(per_sim);
      double p = 1.0;
      switch (config.test) {
        case TestSelector::lm:
          p = lm_t_test(data, config.feature_index);
          break;
        case TestSelector::nn_association: {
          TestConfig cfg = config.test_config;
          cfg.master_seed = derive_seed(sim_seed, 2);
          p = association_test(data, config.feature_index, cfg).p_value;
          break;
        }
        case TestSelector::nn_nonlinearity: {
          TestConfig cfg = config.test_config;
          cfg.master_seed = derive_seed(sim_seed, 2);
          p = nonlinearity_test(data, config.feature_index, cfg).p_value;
          break;
        }
      }
      report.p_values.push_back(p);
      report.sim_seeds.push_back(sim_seed);
      if (p <= config.alpha) ++rejections;
    } catch (const DivergenceError&) {
      report.failed_sims.push_back(s);
    } catch (const RankError&) {
      report.failed_sims.push_back(s);
    }
  }

  const int successes = static_cast<int>(report.p_values.size());
  report.rejection_rate =
      successes > 0 ? static_cast<double>(rejections) / successes : 0.0;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

StudyConfig study_preset(SimKind kind, TestSelector test, ScalePreset scale,
                         Hypothesis hypothesis, int feature_index) {
  StudyConfig config;
  config.setting = default_setting(kind);
  config.setting.hypothesis = hypothesis;
  config.test = test;

  if (feature_index >= 0) {
    config.feature_index = feature_index;
  } else {
    switch (kind) {
      case SimKind::nonlin5: config.feature_index = 1; break;   // quadratic term
      case SimKind::correlated: config.feature_index = 0; break; // null feature
      default: config.feature_index = 3; break;                  // X4
    }
  }

  NetworkConfig& net = config.test_config.network;
  net.output_activation = OutputActivation::identity;

  // Sigmoid hidden layers train slowly under plain SGD; the epoch budgets
  // here only reach a good fit with small minibatches, so the presets pin
  // batch sizes well below the NetworkConfig default.
  if (scale == ScalePreset::paper) {
    config.setting.n = 500;
    config.test_config.permutations = 500;
    net.epochs = 150;
    net.lr_decay_per_epoch = 0.015;
    net.l2_lambda = 1e-4;
    net.batch_size = 1;
    switch (kind) {
      case SimKind::nonlin5:
        config.n_sims = 300;
        net.hidden_sizes = {40};
        net.initial_learning_rate = 0.1;
        break;
      case SimKind::correlated:
        config.n_sims = 300;
        net.hidden_sizes = {30};
        net.initial_learning_rate = 0.06;
        break;
      default:
        config.n_sims = 500;
        net.hidden_sizes = {30};
        net.initial_learning_rate = 0.1;
        break;
    }
    return config;
  }

  // Desk scale: small enough for a workstation, large enough that the
  // binomial error bars still separate the effect tiers.
  config.test_config.permutations = 199;
  net.epochs = 100;
  net.lr_decay_per_epoch = 0.01;
  net.l2_lambda = 1e-4;
  net.batch_size = 4;
  switch (kind) {
    case SimKind::nonlin5:
      config.setting.n = 300;
      config.n_sims = 50;
      net.hidden_sizes = {25};
      net.initial_learning_rate = 0.1;
      break;
    case SimKind::correlated:
      config.setting.n = 200;
      config.n_sims = 50;
      net.hidden_sizes = {20};
      net.initial_learning_rate = 0.08;
      break;
    case SimKind::nonsmooth:
      config.setting.n = 300;
      config.n_sims = 50;
      net.hidden_sizes = {20};
      net.initial_learning_rate = 0.1;
      break;
    default:
      config.setting.n = 200;
      config.n_sims = 100;
      net.hidden_sizes = {20};
      net.initial_learning_rate = 0.1;
      break;
  }
  return config;
}

}  // namespace gradperm
