// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#include "gradperm/dataset.hpp"

#include <cmath>

#include "gradperm/errors.hpp"
#include "gradperm/rng.hpp"

namespace gradperm {

void Dataset::validate() const {
  if (X.rows() < 2) throw ConfigError("dataset needs at least 2 rows");
  if (X.cols() < 1) throw ConfigError("dataset needs at least 1 feature");
  if (y.size() != X.rows())
    throw ConfigError("outcome length does not match predictor row count");
  if (static_cast<Eigen::Index>(feature_names.size()) != X.cols())
    throw ConfigError("feature name count does not match predictor columns");
  if (!X.allFinite() || !y.allFinite())
    throw ConfigError("dataset contains non-finite entries");
}

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y,
                     std::vector<std::string> names) {
  if (names.empty()) {
    names.reserve(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      names.push_back("x" + std::to_string(j + 1));
  }
  Dataset data{std::move(X), std::move(y), std::move(names)};
  data.validate();
  return data;
}

int feature_index(const Dataset& data, const std::string& name) {
  for (std::size_t j = 0; j < data.feature_names.size(); ++j)
    if (data.feature_names[j] == name) return static_cast<int>(j);
  throw ConfigError("unknown feature name: " + name);
}

std::pair<Dataset, Dataset> holdout_split(const Dataset& data,
                                          double validation_fraction,
                                          std::uint64_t seed) {
  data.validate();
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation fraction must lie in (0, 1)");

  const Eigen::Index n = data.n_rows();
  const Eigen::Index n_val = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::lround(validation_fraction * static_cast<double>(n))));
  if (n_val >= n) throw ConfigError("validation split leaves no training rows");

  RandomStream stream(seed);
  const std::vector<int> order = stream.permutation(static_cast<int>(n));

  auto take = [&](Eigen::Index offset, Eigen::Index count) {
    Dataset part;
    part.X.resize(count, data.n_features());
    part.y.resize(count);
    part.feature_names = data.feature_names;
    for (Eigen::Index i = 0; i < count; ++i) {
      part.X.row(i) = data.X.row(order[static_cast<std::size_t>(offset + i)]);
      part.y(i) = data.y(order[static_cast<std::size_t>(offset + i)]);
    }
    return part;
  };

  return {take(n_val, n - n_val), take(0, n_val)};
}

Dataset standardize(const Dataset& data, Standardization* info) {
  data.validate();
  const Eigen::Index n = data.n_rows();
  const Eigen::Index p = data.n_features();

  Eigen::VectorXd mean = data.X.colwise().mean();
  Eigen::VectorXd sd(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var =
        (data.X.col(j).array() - mean(j)).square().sum() / static_cast<double>(n - 1);
    sd(j) = std::sqrt(var);
    // Relative threshold: exact-constant columns only reach ~1e-15 spread
    // through summation noise.
    if (!(sd(j) > 1e-12 * std::max(1.0, std::abs(mean(j)))))
      throw RankError("cannot standardize constant feature " +
                      data.feature_names[static_cast<std::size_t>(j)]);
  }

  Dataset out = data;
  for (Eigen::Index j = 0; j < p; ++j)
    out.X.col(j) = (data.X.col(j).array() - mean(j)) / sd(j);
  if (info) *info = Standardization{std::move(mean), std::move(sd)};
  return out;
}

}  // namespace gradperm
