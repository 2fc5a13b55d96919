// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
//
// gradperm: permutation tests for feature associations in small feed-forward
// networks, plus the simulation-study harness. See README.md for the file
// formats and exit codes (0 success, 2 validation error, 3 divergence).

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gradperm/csv.hpp"
#include "gradperm/errors.hpp"
#include "gradperm/parallel.hpp"
#include "gradperm/permtest.hpp"
#include "gradperm/rng.hpp"
#include "gradperm/serialize.hpp"
#include "gradperm/simgen.hpp"
#include "gradperm/version.hpp"

namespace fs = std::filesystem;
using namespace gradperm;

namespace {

int run_command(const std::vector<std::string>& args);

std::string timestamp_utc() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::vector<int> parse_hidden(const std::string& text) {
  std::vector<int> sizes;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      sizes.push_back(std::stoi(token));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse hidden layer sizes: " + text);
    }
  }
  if (sizes.empty()) throw ConfigError("empty hidden layer specification");
  return sizes;
}

void apply_lambda_option(SmoothingPolicy& policy, const std::string& text) {
  if (text.empty() || text == "gcv") {
    policy.use_gcv = true;
    return;
  }
  try {
    policy.fixed_lambda = std::stod(text);
    policy.use_gcv = false;
  } catch (const std::exception&) {
    throw ConfigError("--lambda expects 'gcv' or a number, got: " + text);
  }
}

void require_writable(const fs::path& path, bool force) {
  if (fs::exists(path) && !force)
    throw ConfigError("refusing to overwrite existing " + path.string() +
                      " (pass --force)");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

Json make_manifest(const std::string& command,
                   const std::vector<std::string>& argv,
                   std::uint64_t master_seed,
                   const std::vector<std::string>& inputs,
                   const std::vector<std::string>& outputs,
                   const std::string& started_at) {
  Json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["tool"] = "gradperm";
  manifest["version"] = kVersion;
  manifest["command"] = command;
  manifest["argv"] = argv;
  manifest["master_seed"] = master_seed;
  manifest["inputs"] = inputs;
  manifest["outputs"] = outputs;
  manifest["started_at"] = started_at;
  manifest["finished_at"] = timestamp_utc();
  return manifest;
}

// ---------------------------------------------------------------------------
// gradperm test

struct TestCliOptions {
  std::string input;
  std::string outcome;
  std::vector<std::string> features;
  std::string test_kind = "both";
  std::string hidden = "40";
  std::string lambda_text = "gcv";
  std::string out_path = "results.json";
  std::string format = "json";
  std::string outcome_type = "continuous";
  TestConfig config;
  std::uint64_t seed = 0;
  bool standardize_inputs = false;
  bool force = false;
};

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (const char c : value) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += '"';
  return quoted;
}

void append_test_csv_row(std::ostringstream& out, const TestResult& result,
                         const std::string& verdict) {
  out << result.feature_index << ',' << csv_escape(result.feature_name) << ','
      << (result.kind == TestKind::association ? "association" : "nonlinearity")
      << ',' << format_double(result.t_observed) << ','
      << format_double(result.p_value) << ',' << result.permutations << ','
      << result.n_failed << ',' << verdict << '\n';
}

int cmd_test(const TestCliOptions& options,
             const std::vector<std::string>& argv) {
  const std::string started_at = timestamp_utc();

  TestConfig cfg = options.config;
  cfg.network.hidden_sizes = parse_hidden(options.hidden);
  cfg.network.output_activation = options.outcome_type == "binary"
                                      ? OutputActivation::sigmoid
                                      : OutputActivation::identity;
  cfg.validate();
  if (options.outcome_type == "binary" && options.test_kind != "assoc")
    throw ConfigError(
        "binary outcomes support --test assoc only; the nonlinearity test "
        "needs a continuous outcome");

  Dataset data = read_dataset_csv(options.input, options.outcome);
  if (options.standardize_inputs) data = standardize(data);

  std::vector<int> feature_ids;
  if (options.features.empty()) {
    for (Eigen::Index j = 0; j < data.n_features(); ++j)
      feature_ids.push_back(static_cast<int>(j));
  } else {
    for (const std::string& name : options.features)
      feature_ids.push_back(feature_index(data, name));
  }

  const fs::path out_path(options.out_path);
  require_writable(out_path, options.force);

  Json results = Json::array();
  std::ostringstream csv;
  csv << "feature_index,feature_name,test,T_observed,p_value,permutations,"
         "n_failed_replicates,verdict\n";

  for (const int j : feature_ids) {
    TestConfig per_feature = cfg;
    per_feature.master_seed = derive_seed(options.seed,
                                          static_cast<std::uint64_t>(j));
    if (options.test_kind == "assoc") {
      const TestResult result = association_test(data, j, per_feature);
      results.push_back(to_json(result, per_feature));
      append_test_csv_row(csv, result, "");
    } else if (options.test_kind == "nonlin") {
      const TestResult result = nonlinearity_test(data, j, per_feature);
      results.push_back(to_json(result, per_feature));
      append_test_csv_row(csv, result, "");
    } else {
      const ProtocolResult protocol = combined_protocol(data, j, per_feature);
      results.push_back(to_json(protocol, per_feature));
      const std::string verdict = to_string(protocol.verdict);
      if (protocol.association) append_test_csv_row(csv, *protocol.association, verdict);
      if (protocol.nonlinearity) append_test_csv_row(csv, *protocol.nonlinearity, verdict);
    }
  }

  if (options.format == "csv") {
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot open output file: " + out_path.string());
    out << csv.str();
  } else {
    Json document;
    document["schema_version"] = kSchemaVersion;
    document["tool"] = "gradperm";
    document["version"] = kVersion;
    document["command"] = "test";
    document["input"] = options.input;
    document["outcome"] = options.outcome;
    document["standardized"] = options.standardize_inputs;
    document["seed"] = options.seed;
    document["results"] = results;
    write_json_file(out_path.string(), document);
  }

  const fs::path manifest_path =
      out_path.parent_path() / (out_path.filename().string() + ".manifest.json");
  write_json_file(manifest_path.string(),
                  make_manifest("test", argv, options.seed, {options.input},
                                {out_path.string()}, started_at));

  std::cout << "wrote " << out_path.string() << " (" << feature_ids.size()
            << " feature" << (feature_ids.size() == 1 ? "" : "s") << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gradperm simulate

struct SimulateCliOptions {
  std::string kind = "linear";
  std::string test = "assoc";
  std::string hypothesis = "null";
  std::string scale = "desk";
  std::string correlation = "identity";
  std::string noise_convention = "sd";
  std::string outdir;
  std::string hidden;       // empty: preset value
  std::string lambda_text;  // empty: preset value
  int n = 0;                // 0: preset value
  int permutations = 0;
  int sims = 0;
  int feature = -1;
  int epochs = 0;
  int batch_size = 0;
  int workers = 0;
  double alpha = 0.05;
  double m = -1.0;  // <0: preset value
  double noise = -1.0;
  double lr = 0.0;
  double decay = -1.0;
  double l2 = -1.0;
  int q = 0;
  std::uint64_t seed = 0;
  bool force = false;
};

int cmd_simulate(const SimulateCliOptions& options,
                 const std::vector<std::string>& argv) {
  const std::string started_at = timestamp_utc();

  const SimKind kind = sim_kind_from_string(options.kind);
  const TestSelector test = test_selector_from_string(options.test);
  const Hypothesis hypothesis = options.hypothesis == "null"
                                    ? Hypothesis::null_h
                                    : Hypothesis::alternative;
  const ScalePreset scale =
      options.scale == "paper" ? ScalePreset::paper : ScalePreset::desk;
  if (options.scale != "paper" && options.scale != "desk")
    throw ConfigError("--scale expects desk or paper");

  StudyConfig study = study_preset(kind, test, scale, hypothesis,
                                   options.feature);
  study.setting.seed = options.seed;
  study.alpha = options.alpha;
  if (options.n > 0) study.setting.n = options.n;
  if (options.sims > 0) study.n_sims = options.sims;
  if (options.m >= 0.0) study.setting.beta_mean = options.m;
  if (options.noise >= 0.0) study.setting.noise = options.noise;
  study.setting.noise_convention = options.noise_convention == "variance"
                                       ? NoiseConvention::variance
                                       : NoiseConvention::sd;
  if (kind == SimKind::correlated)
    study.setting.correlation = correlation_preset(options.correlation);

  if (options.permutations > 0)
    study.test_config.permutations = options.permutations;
  if (!options.hidden.empty())
    study.test_config.network.hidden_sizes = parse_hidden(options.hidden);
  if (options.epochs > 0) study.test_config.network.epochs = options.epochs;
  if (options.lr > 0.0)
    study.test_config.network.initial_learning_rate = options.lr;
  if (options.decay >= 0.0)
    study.test_config.network.lr_decay_per_epoch = options.decay;
  if (options.l2 >= 0.0) study.test_config.network.l2_lambda = options.l2;
  if (options.batch_size > 0)
    study.test_config.network.batch_size = options.batch_size;
  if (options.q > 0) study.test_config.q = options.q;
  if (!options.lambda_text.empty())
    apply_lambda_option(study.test_config.smoothing, options.lambda_text);
  study.test_config.workers = options.workers;
  study.validate();

  if (!is_study_signal_level(kind, study.setting.beta_mean) &&
      study.setting.hypothesis == Hypothesis::alternative)
    std::cerr << "note: signal level " << study.setting.beta_mean
              << " is off the study grid for kind '" << options.kind << "'\n";

  // Without an explicit --feature, the five-feature setting runs one study
  // per predictor and reports the whole power table.
  std::vector<int> features{study.feature_index};
  const bool whole_table = kind == SimKind::nonlin5 && options.feature < 0;
  if (whole_table) features = {0, 1, 2, 3, 4};

  const fs::path outdir(options.outdir);
  fs::create_directories(outdir);
  const auto study_path = [&](int j) {
    return whole_table ? outdir / ("study_x" + std::to_string(j + 1) + ".json")
                       : outdir / "study.json";
  };
  const auto persim_path = [&](int j) {
    return whole_table
               ? outdir / ("per_sim_x" + std::to_string(j + 1) + ".csv")
               : outdir / "per_sim.csv";
  };
  const fs::path summary_path = outdir / "summary.txt";
  require_writable(summary_path, options.force);
  for (const int j : features) {
    require_writable(study_path(j), options.force);
    require_writable(persim_path(j), options.force);
  }

  std::vector<StudyReport> reports;
  std::vector<std::string> outputs;
  double total_wall = 0.0;
  int total_failed = 0;
  for (const int j : features) {
    StudyConfig per_feature = study;
    per_feature.feature_index = j;
    const StudyReport report = run_study(per_feature);
    total_wall += report.wall_time_seconds;
    total_failed += static_cast<int>(report.failed_sims.size());

    write_json_file(study_path(j).string(),
                    to_json(report, per_feature.test_config));
    std::ofstream persim(persim_path(j));
    if (!persim) throw ConfigError("cannot open " + persim_path(j).string());
    persim << study_csv(report);
    outputs.push_back(study_path(j).string());
    outputs.push_back(persim_path(j).string());
    reports.push_back(report);
  }

  const std::string summary = whole_table ? nonlin5_summary_table(reports)
                                          : study_summary_table(reports.front());
  {
    std::ofstream out(summary_path);
    if (!out) throw ConfigError("cannot open " + summary_path.string());
    out << summary;
  }
  outputs.push_back(summary_path.string());

  Json manifest =
      make_manifest("simulate", argv, options.seed, {}, outputs, started_at);
  manifest["wall_time_seconds"] = total_wall;
  write_json_file((outdir / "manifest.json").string(), manifest);

  std::cout << summary;
  if (total_failed > 0)
    std::cout << total_failed
              << " simulations failed and were excluded (see failed_sims)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gradperm rerun

int cmd_rerun(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot open manifest: " + manifest_path);
  Json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    throw ConfigError("cannot parse manifest: " + std::string(e.what()));
  }
  if (!manifest.contains("argv") || !manifest["argv"].is_array())
    throw ConfigError("manifest has no argv array");
  const std::string command = manifest.value("command", "");
  if (command != "test" && command != "simulate")
    throw ConfigError("manifest command must be test or simulate");

  std::vector<std::string> args;
  for (const auto& part : manifest["argv"])
    args.push_back(part.get<std::string>());
  args.push_back("--force");  // rerun regenerates its own outputs
  return run_command(args);
}

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Permutation tests for feature association and nonlinearity "
               "in feed-forward networks"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // ---- test ----
  TestCliOptions test_options;
  CLI::App* test_cmd = app.add_subcommand(
      "test", "Run association/nonlinearity tests on CSV data");
  test_cmd->add_option("--input", test_options.input, "CSV file with header row")
      ->required();
  test_cmd->add_option("--outcome", test_options.outcome,
                       "Name of the outcome column")
      ->required();
  test_cmd->add_option("--feature", test_options.features,
                       "Feature column to test (repeatable; default: all)");
  test_cmd->add_option("--test", test_options.test_kind,
                       "assoc, nonlin, or both (combined protocol)")
      ->check(CLI::IsMember({"assoc", "nonlin", "both"}));
  test_cmd->add_option("--permutations", test_options.config.permutations,
                       "Permutation replicates B");
  test_cmd->add_option("--hidden", test_options.hidden,
                       "Hidden layer sizes, e.g. 40 or 20,10");
  test_cmd->add_option("--epochs", test_options.config.network.epochs,
                       "Training epochs");
  test_cmd->add_option("--lr",
                       test_options.config.network.initial_learning_rate,
                       "Initial learning rate");
  test_cmd->add_option("--decay",
                       test_options.config.network.lr_decay_per_epoch,
                       "Learning-rate fraction removed each epoch");
  test_cmd->add_option("--l2", test_options.config.network.l2_lambda,
                       "L2 penalty on weights");
  test_cmd->add_option("--batch-size", test_options.config.network.batch_size,
                       "Minibatch size");
  test_cmd->add_option("--q", test_options.config.q,
                       "Spline basis dimension for the nonlinearity statistic");
  test_cmd->add_option("--lambda", test_options.lambda_text,
                       "Smoothing penalty: 'gcv' or a fixed value");
  test_cmd->add_option("--seed", test_options.seed, "Master seed");
  test_cmd->add_option("--alpha", test_options.config.alpha,
                       "Level used by the combined protocol");
  test_cmd->add_option("--workers", test_options.config.workers,
                       "Worker threads (default: GRADPERM_WORKERS or cores)");
  test_cmd->add_option("--outcome-type", test_options.outcome_type,
                       "continuous (identity output) or binary (sigmoid)")
      ->check(CLI::IsMember({"continuous", "binary"}));
  test_cmd->add_flag("--standardize", test_options.standardize_inputs,
                     "Z-score features first (gradients then refer to the "
                     "standardized scale)");
  test_cmd->add_flag("--add-one-pvalue", test_options.config.add_one_pvalue,
                     "Use the (1+#)/(B+1) p-value convention");
  test_cmd->add_option("--out", test_options.out_path, "Output file path");
  test_cmd->add_option("--format", test_options.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  test_cmd->add_flag("--force", test_options.force,
                     "Overwrite existing outputs");

  // ---- simulate ----
  SimulateCliOptions sim_options;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "Run a Monte Carlo power/Type-I study");
  sim_cmd->add_option("--kind", sim_options.kind,
                      "nonlin5, linear, smooth, nonsmooth, or correlated")
      ->required();
  sim_cmd->add_option("--test", sim_options.test, "assoc, nonlin, or lm");
  sim_cmd->add_option("--hypothesis", sim_options.hypothesis, "null or alt")
      ->check(CLI::IsMember({"null", "alt"}));
  sim_cmd->add_option("--scale", sim_options.scale, "desk or paper");
  sim_cmd->add_option("--n", sim_options.n, "Sample size per simulation");
  sim_cmd->add_option("--permutations", sim_options.permutations,
                      "Permutation replicates B");
  sim_cmd->add_option("--sims", sim_options.sims, "Number of simulations");
  sim_cmd->add_option("--feature", sim_options.feature,
                      "Tested feature index (0-based; default per kind)");
  sim_cmd->add_option("--alpha", sim_options.alpha, "Rejection level");
  sim_cmd->add_option("--m", sim_options.m, "Signal level (beta mean)");
  sim_cmd->add_option("--noise", sim_options.noise, "Noise level");
  sim_cmd->add_option("--noise-convention", sim_options.noise_convention,
                      "Interpret noise as sd or variance")
      ->check(CLI::IsMember({"sd", "variance"}));
  sim_cmd->add_option("--correlation", sim_options.correlation,
                      "identity, low, or high (correlated kind)");
  sim_cmd->add_option("--hidden", sim_options.hidden, "Hidden layer sizes");
  sim_cmd->add_option("--epochs", sim_options.epochs, "Training epochs");
  sim_cmd->add_option("--lr", sim_options.lr, "Initial learning rate");
  sim_cmd->add_option("--decay", sim_options.decay, "LR decay per epoch");
  sim_cmd->add_option("--l2", sim_options.l2, "L2 penalty");
  sim_cmd->add_option("--batch-size", sim_options.batch_size, "Minibatch size");
  sim_cmd->add_option("--q", sim_options.q, "Spline basis dimension");
  sim_cmd->add_option("--lambda", sim_options.lambda_text,
                      "Smoothing penalty: 'gcv' or a fixed value");
  sim_cmd->add_option("--seed", sim_options.seed, "Master seed");
  sim_cmd->add_option("--workers", sim_options.workers, "Worker threads");
  sim_cmd->add_option("--outdir", sim_options.outdir, "Output directory")
      ->required();
  sim_cmd->add_flag("--force", sim_options.force,
                    "Overwrite existing outputs");

  // ---- rerun ----
  std::string manifest_path;
  CLI::App* rerun_cmd = app.add_subcommand(
      "rerun", "Re-execute a command from its manifest; outputs are "
               "regenerated byte-identically");
  rerun_cmd->add_option("manifest", manifest_path, "Path to a manifest JSON")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (test_cmd->parsed()) return cmd_test(test_options, args);
    if (sim_cmd->parsed()) return cmd_simulate(sim_options, args);
    return cmd_rerun(manifest_path);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const RankError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const UnsupportedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args);
}
