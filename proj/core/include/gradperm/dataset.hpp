// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gradperm {

/// Predictor matrix plus outcome vector with feature names.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;

  Eigen::Index n_rows() const { return X.rows(); }
  Eigen::Index n_features() const { return X.cols(); }

  /// Throws ConfigError on n < 2, p < 1, non-finite entries, or mismatched
  /// lengths.
  void validate() const;
};

/// Build a dataset; empty `names` auto-fills x1..xp.
Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y,
                     std::vector<std::string> names = {});

/// Index of a named feature; throws ConfigError when absent.
int feature_index(const Dataset& data, const std::string& name);

/// Seeded random row split, validation fraction in (0, 1). Used for
/// validation-based hyperparameter choice; both halves keep feature names.
std::pair<Dataset, Dataset> holdout_split(const Dataset& data,
                                          double validation_fraction,
                                          std::uint64_t seed);

struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Column-wise z-scoring of X; y is untouched. Constant columns throw
/// RankError. When `info` is given the applied transform is written to it.
Dataset standardize(const Dataset& data, Standardization* info = nullptr);

}  // namespace gradperm
