// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Each criterion prints exactly one [PASS]/[FAIL] line;
// run a single criterion with --criterion N or everything with --all.
// Criterion 7 is the full-scale study reproduction and takes hours; it is
// excluded from the default ctest run (see tests/CMakeLists.txt).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gradperm/csv.hpp"
#include "gradperm/errors.hpp"
#include "gradperm/network.hpp"
#include "gradperm/permtest.hpp"
#include "gradperm/rng.hpp"
#include "gradperm/simgen.hpp"
#include "gradperm/splines.hpp"
#include "test_helpers.hpp"

using namespace gradperm;
using gradperm::testutil::finite_difference_gradient;
using gradperm::testutil::random_network;

namespace {

constexpr std::uint64_t kSuiteSeed = 20260808;

struct Outcome {
  bool passed;
  std::string detail;
};

// --------------------------------------------------------------------------
// C1: analytic input gradients against central finite differences, plus the
// closed-form/backprop route agreement on one-layer networks.
Outcome criterion_gradient_oracle() {
  RandomStream stream(kSuiteSeed);
  double max_rel = 0.0;
  double max_route_gap = 0.0;
  int one_layer_pairs = 0;

  for (int trial = 0; trial < 200; ++trial) {
    const int p = 2 + static_cast<int>(stream.below(5));
    const int depth = (trial % 2) + 1;
    const OutputActivation activation = (trial / 2) % 2 == 0
                                            ? OutputActivation::identity
                                            : OutputActivation::sigmoid;
    const Network net = random_network(stream, p, depth, activation);
    Eigen::VectorXd x(p);
    for (int j = 0; j < p; ++j) x(j) = stream.normal();
    const int j = static_cast<int>(stream.below(static_cast<std::uint64_t>(p)));

    const double analytic = input_gradient_backprop(net, x, j);
    const double fd = finite_difference_gradient(net, x, j, 1e-5);
    max_rel = std::max(max_rel,
                       std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));

    if (depth == 1) {
      ++one_layer_pairs;
      max_route_gap = std::max(
          max_route_gap,
          std::abs(input_gradient_closed_form(net, x, j) - analytic));
    }
  }

  std::ostringstream detail;
  detail << "max relative error " << max_rel << " over 200 pairs, route gap "
         << max_route_gap << " over " << one_layer_pairs << " one-layer nets";
  return {max_rel < 1e-6 && max_route_gap < 1e-10, detail.str()};
}

// --------------------------------------------------------------------------
// C2: exact statistic units.
Outcome criterion_statistic_units() {
  Eigen::VectorXd grads(3);
  grads << 1, 2, 3;
  const bool assoc_ok = assoc_statistic(grads) == 14.0 / 3.0;

  SmoothFit fit;
  fit.theta.resize(2);
  fit.theta << 3, 4;
  const bool nonlin_ok = nonlin_statistic(fit) == 12.5;

  const bool p_ok = p_value(5.0, {1, 2, 3}) == 0.0 &&
                    p_value(0.0, {0.5, 1.0, 0.0}) == 1.0 &&
                    p_value(2.0, {1, 2, 3, 4}) == 0.75;

  std::ostringstream detail;
  detail << "assoc " << (assoc_ok ? "exact" : "WRONG") << ", nonlin "
         << (nonlin_ok ? "exact" : "WRONG") << ", p-value ties "
         << (p_ok ? "exact" : "WRONG");
  return {assoc_ok && nonlin_ok && p_ok, detail.str()};
}

// --------------------------------------------------------------------------
// C3: association-test Type-I on the linear null generator at desk scale,
// plus the exchangeability sanity study: on pure-noise outcomes the p-value
// distribution over repetitions must be close to uniform.
Outcome criterion_null_calibration() {
  StudyConfig study = study_preset(SimKind::linear, TestSelector::nn_association,
                                   ScalePreset::desk, Hypothesis::null_h);
  study.setting.seed = kSuiteSeed;
  const StudyReport report = run_study(study);

  TestConfig cfg = study.test_config;
  cfg.permutations = 99;
  std::vector<double> p_values;
  for (int rep = 0; rep < 100; ++rep) {
    RandomStream stream(derive_seed(kSuiteSeed + 1, static_cast<std::uint64_t>(rep)));
    Eigen::MatrixXd X(200, 4);
    Eigen::VectorXd y(200);
    for (int i = 0; i < 200; ++i) {
      for (int j = 0; j < 4; ++j) X(i, j) = stream.normal();
      y(i) = stream.normal();  // independent of every feature
    }
    cfg.master_seed = derive_seed(kSuiteSeed + 2, static_cast<std::uint64_t>(rep));
    p_values.push_back(association_test(make_dataset(X, y), 0, cfg).p_value);
  }
  const double ks = gradperm::testutil::ks_distance_uniform(p_values);

  std::ostringstream detail;
  detail << "rejection rate " << report.rejection_rate << " over "
         << report.n_sims << " sims (band [0.00, 0.11]), "
         << report.failed_sims.size() << " failures; pure-noise p-value KS "
         << ks << " (needs < 0.15); wall " << report.wall_time_seconds << "s";
  return {report.rejection_rate <= 0.11 && report.failed_sims.empty() &&
              ks < 0.15,
          detail.str()};
}

// --------------------------------------------------------------------------
// C4: nonlinearity-test power separation on the five-feature generator.
Outcome criterion_power_separation() {
  StudyConfig quadratic = study_preset(SimKind::nonlin5, TestSelector::nn_nonlinearity,
                                       ScalePreset::desk, Hypothesis::alternative,
                                       /*feature_index=*/1);
  quadratic.setting.seed = kSuiteSeed;
  const StudyReport quad_report = run_study(quadratic);

  StudyConfig linear = quadratic;
  linear.feature_index = 0;
  linear.setting.seed = kSuiteSeed + 1;
  const StudyReport lin_report = run_study(linear);

  // Repetition study: a single feature with an exactly linear effect and
  // tiny noise must rarely be called nonlinear.
  TestConfig cfg = quadratic.test_config;
  cfg.permutations = 99;
  int kept_null = 0;
  for (int rep = 0; rep < 100; ++rep) {
    RandomStream stream(derive_seed(kSuiteSeed + 2, static_cast<std::uint64_t>(rep)));
    Eigen::MatrixXd X(300, 1);
    Eigen::VectorXd y(300);
    for (int i = 0; i < 300; ++i) {
      X(i, 0) = stream.normal();
      y(i) = 1.5 * X(i, 0) + stream.normal(0.0, 1e-3);
    }
    cfg.master_seed = derive_seed(kSuiteSeed + 3, static_cast<std::uint64_t>(rep));
    if (nonlinearity_test(make_dataset(X, y), 0, cfg).p_value > 0.05)
      ++kept_null;
  }

  std::ostringstream detail;
  detail << "quadratic power " << quad_report.rejection_rate
         << " (needs >= 0.80), linear Type-I " << lin_report.rejection_rate
         << " (needs <= 0.15), linear truth kept in " << kept_null
         << "/100 reps (needs >= 90), wall " << quad_report.wall_time_seconds
         << "s + " << lin_report.wall_time_seconds << "s";
  return {quad_report.rejection_rate >= 0.80 &&
              lin_report.rejection_rate <= 0.15 && kept_null >= 90,
          detail.str()};
}

// --------------------------------------------------------------------------
// C5: NN association power beats the linear-model t-test on the nonsmooth
// generator at the top signal level.
Outcome criterion_nonsmooth_superiority() {
  StudyConfig nn = study_preset(SimKind::nonsmooth, TestSelector::nn_association,
                                ScalePreset::desk, Hypothesis::alternative);
  nn.setting.beta_mean = 0.60;
  nn.setting.seed = kSuiteSeed;
  const StudyReport nn_report = run_study(nn);

  StudyConfig lm = nn;
  lm.test = TestSelector::lm;
  const StudyReport lm_report = run_study(lm);

  const double gap = nn_report.rejection_rate - lm_report.rejection_rate;
  std::ostringstream detail;
  detail << "NN power " << nn_report.rejection_rate << ", LM power "
         << lm_report.rejection_rate << ", gap " << gap
         << " (needs >= 0.3), wall " << nn_report.wall_time_seconds << "s";
  return {gap >= 0.3, detail.str()};
}

// --------------------------------------------------------------------------
// C6: Type-I inflation under correlated predictors, direction only.
Outcome criterion_correlation_sensitivity() {
  StudyConfig independent = study_preset(SimKind::correlated,
                                         TestSelector::nn_association,
                                         ScalePreset::desk, Hypothesis::null_h);
  independent.setting.correlation = correlation_preset("identity");
  independent.setting.seed = kSuiteSeed;
  const StudyReport identity_report = run_study(independent);

  StudyConfig high = independent;
  high.setting.correlation = correlation_preset("high");
  high.setting.seed = kSuiteSeed + 1;
  const StudyReport high_report = run_study(high);

  std::ostringstream detail;
  detail << "identity Type-I " << identity_report.rejection_rate
         << " (needs <= 0.11), high-correlation Type-I "
         << high_report.rejection_rate << " (needs > 0.15), wall "
         << identity_report.wall_time_seconds << "s + "
         << high_report.wall_time_seconds << "s";
  return {identity_report.rejection_rate <= 0.11 &&
              high_report.rejection_rate > 0.15,
          detail.str()};
}

// --------------------------------------------------------------------------
// C7: full-scale table reproduction (long-running, opt-in).
Outcome criterion_full_scale() {
  std::cerr << "note: full-scale reproduction trains hundreds of thousands of "
               "networks; expect many hours.\n";

  // Power/Type-I table of the nonlinearity test, five features.
  const double expected_power[5] = {0.05, 1.00, 1.00, 0.86, 0.94};
  bool pass = true;
  std::ostringstream detail;
  for (int feature = 0; feature < 5; ++feature) {
    StudyConfig study = study_preset(SimKind::nonlin5, TestSelector::nn_nonlinearity,
                                     ScalePreset::paper, Hypothesis::alternative,
                                     feature);
    study.setting.seed = kSuiteSeed + static_cast<std::uint64_t>(feature);
    const StudyReport report = run_study(study);
    const double gap = std::abs(report.rejection_rate - expected_power[feature]);
    pass = pass && gap <= 0.05;
    detail << "x" << feature + 1 << " " << report.rejection_rate << " (ref "
           << expected_power[feature] << ") ";
  }

  // One-hidden-layer association Type-I row across the three generators.
  const double expected_t1[3] = {0.030, 0.026, 0.028};
  const SimKind kinds[3] = {SimKind::linear, SimKind::smooth, SimKind::nonsmooth};
  for (int s = 0; s < 3; ++s) {
    StudyConfig study = study_preset(kinds[s], TestSelector::nn_association,
                                     ScalePreset::paper, Hypothesis::null_h);
    study.setting.seed = kSuiteSeed + 10 + static_cast<std::uint64_t>(s);
    const StudyReport report = run_study(study);
    const double gap = std::abs(report.rejection_rate - expected_t1[s]);
    pass = pass && gap <= 0.03;
    detail << to_string(kinds[s]) << " " << report.rejection_rate << " (ref "
           << expected_t1[s] << ") ";
  }
  return {pass, detail.str()};
}

// --------------------------------------------------------------------------
// C8: byte-identical outputs from manifests and across worker counts,
// driven through the CLI binary.
Outcome criterion_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gradperm_acceptance_c8";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const auto shell = [](const std::string& command) {
    return std::system((command + " > /dev/null 2>&1").c_str());
  };
  const auto read_file = [](const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream body;
    body << in.rdbuf();
    return body.str();
  };

  // Library level: worker count must not change test results.
  const Dataset data = gen_nonlin5(120, kSuiteSeed);
  TestConfig cfg;
  cfg.permutations = 24;
  cfg.network.hidden_sizes = {10};
  cfg.network.epochs = 25;
  cfg.network.initial_learning_rate = 0.15;
  cfg.master_seed = 99;
  cfg.workers = 1;
  const TestResult serial = association_test(data, 1, cfg);
  cfg.workers = 5;
  const TestResult threaded = association_test(data, 1, cfg);
  const bool library_ok = serial.t_null == threaded.t_null &&
                          serial.p_value == threaded.p_value;

  // CLI level: rerun from the manifest and a different worker count.
  const fs::path csv = dir / "data.csv";
  write_dataset_csv(csv.string(), data, "y");
  const fs::path out = dir / "results.json";
  const std::string base =
      std::string(GRADPERM_CLI_PATH) + " test --input " + csv.string() +
      " --outcome y --feature x2 --test assoc --permutations 19 --seed 7"
      " --hidden 8 --epochs 25 --lr 0.15 --out " + out.string();
  bool cli_ok = shell(base + " --workers 1") == 0;
  const std::string first = read_file(out);
  cli_ok = cli_ok && shell(base + " --workers 4 --force") == 0 &&
           read_file(out) == first;
  cli_ok = cli_ok &&
           shell(std::string(GRADPERM_CLI_PATH) + " rerun " + out.string() +
                 ".manifest.json") == 0 &&
           read_file(out) == first;

  // Simulate path as well.
  const fs::path study_dir = dir / "study";
  const std::string simulate =
      std::string(GRADPERM_CLI_PATH) +
      " simulate --kind linear --test lm --hypothesis null --sims 15 --n 80"
      " --seed 13 --outdir " + study_dir.string();
  cli_ok = cli_ok && shell(simulate) == 0;
  const std::string study_first = read_file(study_dir / "study.json");
  cli_ok = cli_ok &&
           shell(std::string(GRADPERM_CLI_PATH) + " rerun " +
                 (study_dir / "manifest.json").string()) == 0 &&
           read_file(study_dir / "study.json") == study_first;

  fs::remove_all(dir);
  std::ostringstream detail;
  detail << "library worker-invariance " << (library_ok ? "ok" : "BROKEN")
         << ", CLI rerun/worker byte-identity " << (cli_ok ? "ok" : "BROKEN");
  return {library_ok && cli_ok, detail.str()};
}

// --------------------------------------------------------------------------
// C9: additive-model and smooth-recovery oracles.
Outcome criterion_additive_oracle() {
  RandomStream stream(kSuiteSeed);

  // All-linear data: penalized additive fit must match OLS SSE within 1%.
  const int n = 400, p = 3;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = stream.normal();
    y(i) = 0.8 * X(i, 0) - 1.2 * X(i, 1) + 0.4 * X(i, 2) +
           stream.normal(0.0, 0.5);
  }
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = X;
  const Eigen::VectorXd beta =
      (design.transpose() * design).ldlt().solve(design.transpose() * y);
  const double ols_sse = (y - design * beta).squaredNorm();

  SmoothingPolicy policy;
  const AdditiveFit fit = fit_additive(make_dataset(X, y), 0, 10, policy);
  const double sse_gap = std::abs(fit.residuals.squaredNorm() - ols_sse) / ols_sse;

  // Smooth recovery: sin(2t) within 0.1 RMS at n = 500.
  Eigen::VectorXd t(500), r(500), truth(500);
  for (int i = 0; i < 500; ++i) {
    t(i) = stream.uniform(-2.0, 2.0);
    truth(i) = std::sin(2.0 * t(i));
    r(i) = truth(i) + stream.normal(0.0, 0.05);
  }
  const SmoothFit smooth = fit_smooth(t, r, 10, policy);
  const double rms =
      std::sqrt((truth - smooth.evaluate(t)).squaredNorm() / 500.0);

  std::ostringstream detail;
  detail << "additive/OLS SSE gap " << sse_gap * 100 << "% (needs <= 1%), "
         << "sin(2t) RMS " << rms << " (needs < 0.1)";
  return {sse_gap <= 0.01 && rms < 0.1, detail.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "gradient-oracle", criterion_gradient_oracle},
      {2, "statistic-units", criterion_statistic_units},
      {3, "null-calibration", criterion_null_calibration},
      {4, "power-separation", criterion_power_separation},
      {5, "nonsmooth-superiority", criterion_nonsmooth_superiority},
      {6, "correlation-sensitivity", criterion_correlation_sensitivity},
      {7, "full-scale-reproduction", criterion_full_scale},
      {8, "determinism", criterion_determinism},
      {9, "additive-oracle", criterion_additive_oracle},
  };
  return all;
}

bool run_criterion(const Criterion& criterion) {
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome{false, ""};
  try {
    outcome = criterion.run();
  } catch (const std::exception& e) {
    outcome = {false, std::string("exception: ") + e.what()};
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  std::printf("[%s] C%d %s: %s (%.1fs)\n", outcome.passed ? "PASS" : "FAIL",
              criterion.id, criterion.name, outcome.detail.c_str(), seconds);
  std::fflush(stdout);
  return outcome.passed;
}

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;
  bool all = false;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected = std::atoi(argv[++i]);
    } else if (arg == "--all") {
      all = true;
    } else if (arg == "--list") {
      for (const Criterion& criterion : criteria())
        std::printf("C%d %s\n", criterion.id, criterion.name);
      return 0;
    } else {
      std::fprintf(stderr,
                   "usage: acceptance [--criterion N | --all | --list]\n");
      return 2;
    }
  }

  bool passed = true;
  bool matched = false;
  for (const Criterion& criterion : criteria()) {
    if (!all && selected != 0 && criterion.id != selected) continue;
    if (!all && selected == 0 && criterion.id == 7) continue;  // opt-in
    matched = true;
    passed = run_criterion(criterion) && passed;
  }
  if (!matched) {
    std::fprintf(stderr, "no such criterion: %d\n", selected);
    return 2;
  }
  return passed ? 0 : 1;
}
