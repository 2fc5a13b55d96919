// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#include "gradperm/serialize.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "gradperm/csv.hpp"
#include "gradperm/errors.hpp"
#include "gradperm/version.hpp"

namespace gradperm {

namespace {

Json vector_to_json(const std::vector<double>& values) {
  return Json(values);
}

Json vector_to_json(const Eigen::VectorXd& values) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < values.size(); ++i) out.push_back(values(i));
  return out;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* to_string(TestKind kind) {
  return kind == TestKind::association ? "association" : "nonlinearity";
}

}  // namespace

Json to_json(const NetworkConfig& config) {
  Json out;
  out["hidden_sizes"] = config.hidden_sizes;
  out["output_activation"] =
      config.output_activation == OutputActivation::sigmoid ? "sigmoid"
                                                            : "identity";
  out["epochs"] = config.epochs;
  out["initial_learning_rate"] = config.initial_learning_rate;
  out["lr_decay_per_epoch"] = config.lr_decay_per_epoch;
  out["l2_lambda"] = config.l2_lambda;
  out["batch_size"] = config.batch_size;
  if (config.init_scale)
    out["init_scale"] = *config.init_scale;
  else
    out["init_scale"] = nullptr;  // per-layer 1/sqrt(fan_in)
  out["seed"] = config.seed;
  return out;
}

Json to_json(const SmoothingPolicy& policy) {
  Json out;
  out["use_gcv"] = policy.use_gcv;
  if (policy.use_gcv) {
    out["gcv_grid_size"] = policy.gcv_grid_size;
    out["gcv_log10_min"] = policy.gcv_log10_min;
    out["gcv_log10_max"] = policy.gcv_log10_max;
  } else {
    out["fixed_lambda"] = policy.fixed_lambda;
  }
  return out;
}

Json to_json(const TestConfig& config) {
  Json out;
  out["permutations"] = config.permutations;
  out["q"] = config.q;
  out["alpha"] = config.alpha;
  out["master_seed"] = config.master_seed;
  out["add_one_pvalue"] = config.add_one_pvalue;
  out["shared_observed_fit"] = config.shared_observed_fit;
  out["max_replicate_failure_rate"] = config.max_replicate_failure_rate;
  out["smoothing"] = to_json(config.smoothing);
  out["network"] = to_json(config.network);
  return out;
}

Json to_json(const TestResult& result, const TestConfig& config) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["kind"] = to_string(result.kind);
  out["feature"] = Json{{"index", result.feature_index},
                        {"name", result.feature_name}};
  out["T_observed"] = result.t_observed;
  out["p_value"] = result.p_value;
  out["permutations"] = result.permutations;
  out["n_failed_replicates"] = result.n_failed;
  out["null_statistics"] = vector_to_json(result.t_null);
  out["warnings"] = result.warnings;
  out["settings"] = to_json(config);

  Json diagnostics;
  diagnostics["observed_gradients"] = vector_to_json(result.observed_gradients);
  diagnostics["observed_epoch_loss"] = vector_to_json(result.observed_epoch_loss);
  diagnostics["replicate_final_loss"] =
      vector_to_json(result.replicate_final_loss);
  if (result.kind == TestKind::nonlinearity) {
    diagnostics["smoothing_lambda"] = result.smoothing_lambda;
    diagnostics["additive_lambda"] = result.additive_lambda;
  }
  out["diagnostics"] = diagnostics;
  return out;
}

Json to_json(const ProtocolResult& protocol, const TestConfig& config) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["verdict"] = to_string(protocol.verdict);
  out["association"] = protocol.association
                           ? to_json(*protocol.association, config)
                           : Json(nullptr);
  out["nonlinearity"] = protocol.nonlinearity
                            ? to_json(*protocol.nonlinearity, config)
                            : Json(nullptr);
  return out;
}

Json to_json(const SimSetting& setting) {
  Json out;
  out["kind"] = to_string(setting.kind);
  out["n"] = setting.n;
  out["beta_mean"] = setting.beta_mean;
  out["hypothesis"] = to_string(setting.hypothesis);
  out["noise"] = setting.noise;
  out["noise_convention"] =
      setting.noise_convention == NoiseConvention::sd ? "sd" : "variance";
  out["seed"] = setting.seed;
  if (setting.correlation) out["correlation"] = matrix_to_json(*setting.correlation);
  return out;
}

Json to_json(const StudyReport& report, const TestConfig& config) {
  Json out;
  out["schema_version"] = kSchemaVersion;
  out["setting"] = to_json(report.setting);
  out["test"] = to_string(report.test);
  out["feature_index"] = report.feature_index;
  out["n_sims"] = report.n_sims;
  out["alpha"] = report.alpha;
  out["rejection_rate"] = report.rejection_rate;
  out["p_values"] = vector_to_json(report.p_values);
  out["sim_seeds"] = report.sim_seeds;
  out["failed_sims"] = report.failed_sims;
  // Wall time is volatile run metadata; it travels in the manifest so that
  // reruns stay byte-identical.
  if (report.test != TestSelector::lm) out["test_settings"] = to_json(config);
  return out;
}

std::string study_csv(const StudyReport& report) {
  std::ostringstream out;
  out << "sim,seed,p_value,reject\n";
  for (std::size_t i = 0; i < report.p_values.size(); ++i) {
    out << i << ',' << report.sim_seeds[i] << ','
        << format_double(report.p_values[i]) << ','
        << (report.p_values[i] <= report.alpha ? 1 : 0) << '\n';
  }
  for (const int failed : report.failed_sims)
    out << failed << ",,,failed\n";
  return out.str();
}

std::string study_summary_table(const StudyReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "Setting" << std::setw(18) << "Test"
      << std::setw(14) << "Hypothesis" << std::setw(8) << "Signal"
      << std::setw(8) << "n" << std::setw(8) << "Sims"
      << "Pr(Reject H0)\n";
  out << std::left << std::setw(12) << to_string(report.setting.kind)
      << std::setw(18) << to_string(report.test) << std::setw(14)
      << to_string(report.setting.hypothesis) << std::setw(8)
      << report.setting.beta_mean << std::setw(8) << report.setting.n
      << std::setw(8) << report.n_sims;
  out << std::fixed << std::setprecision(3) << report.rejection_rate << '\n';
  return out.str();
}

std::string nonlin5_summary_table(const std::vector<StudyReport>& reports) {
  static const char* kLabels[5] = {"linear", "quadratic", "cubic",
                                   "trigonometric", "nonsmooth"};
  std::ostringstream out;
  out << std::left << std::setw(10) << "Variable" << std::setw(16)
      << "Association" << "Pr(Reject H0)\n";
  for (const StudyReport& report : reports) {
    const int j = report.feature_index;
    out << std::left << std::setw(10) << ("x" + std::to_string(j + 1))
        << std::setw(16) << (j >= 0 && j < 5 ? kLabels[j] : "?");
    out << std::fixed << std::setprecision(3) << report.rejection_rate << '\n';
    out.unsetf(std::ios_base::floatfield);
  }
  return out.str();
}

void write_json_file(const std::string& path, const Json& value) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << value.dump(2) << '\n';
}

}  // namespace gradperm
