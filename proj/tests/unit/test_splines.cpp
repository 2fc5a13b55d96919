// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradperm/errors.hpp"
#include "gradperm/rng.hpp"
#include "gradperm/splines.hpp"

using namespace gradperm;

namespace {

// Type-7 quantile, recomputed independently of the library.
double quantile_oracle(std::vector<double> values, double prob) {
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

Eigen::VectorXd random_sample(int n, std::uint64_t seed, double lo = 0.0,
                              double hi = 1.0) {
  RandomStream stream(seed);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) t(i) = stream.uniform(lo, hi);
  return t;
}

double penalized_objective(const SmoothFit& fit, const Eigen::VectorXd& t,
                           const Eigen::VectorXd& r,
                           const Eigen::VectorXd& theta, double intercept) {
  const Eigen::MatrixXd B = fit.basis.design(t);
  const Eigen::VectorXd fitted = (B * theta).array() + intercept;
  return (r - fitted).squaredNorm() +
         fit.penalty_lambda * theta.dot(fit.basis.penalty_matrix * theta);
}

}  // namespace

TEST_CASE("make_basis places interior knots at evenly spaced quantiles") {
  const Eigen::VectorXd sample = random_sample(100, 1);
  const SplineBasis basis = make_basis(sample, 4);
  REQUIRE(basis.q == 4);
  REQUIRE(basis.knots.size() == 4);

  std::vector<double> values(sample.data(), sample.data() + sample.size());
  CHECK(basis.knots(0) == doctest::Approx(sample.minCoeff()).epsilon(1e-15));
  CHECK(basis.knots(1) ==
        doctest::Approx(quantile_oracle(values, 1.0 / 3.0)).epsilon(1e-12));
  CHECK(basis.knots(2) ==
        doctest::Approx(quantile_oracle(values, 2.0 / 3.0)).epsilon(1e-12));
  CHECK(basis.knots(3) == doctest::Approx(sample.maxCoeff()).epsilon(1e-15));
}

TEST_CASE("make_basis enforces q >= 3 and distinct values") {
  const Eigen::VectorXd sample = random_sample(50, 2);
  CHECK_THROWS_AS(make_basis(sample, 2), ConfigError);

  Eigen::VectorXd ties(30);
  for (int i = 0; i < 30; ++i) ties(i) = static_cast<double>(i % 4);
  CHECK_THROWS_AS(make_basis(ties, 5), RankError);
  CHECK_NOTHROW(make_basis(ties, 4));
}

TEST_CASE("basis evaluation is continuous at every knot") {
  const Eigen::VectorXd sample = random_sample(200, 3, -2.0, 5.0);
  const SplineBasis basis = make_basis(sample, 7, /*centered=*/false);
  const double eps = 1e-9;
  for (int k = 0; k < basis.q; ++k) {
    const double knot = basis.knots(k);
    const Eigen::RowVectorXd left = basis.eval_row(knot - eps);
    const Eigen::RowVectorXd at = basis.eval_row(knot);
    const Eigen::RowVectorXd right = basis.eval_row(knot + eps);
    CHECK((left - at).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((right - at).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("basis spans cubics inside an interior inter-knot interval") {
  const Eigen::VectorXd sample = random_sample(400, 4);
  const SplineBasis basis = make_basis(sample, 10, /*centered=*/false);

  // 60 evaluation points strictly inside a middle interval.
  const double lo = basis.knots(4), hi = basis.knots(5);
  Eigen::VectorXd t(60);
  for (int i = 0; i < 60; ++i)
    t(i) = lo + (hi - lo) * (i + 0.5) / 60.0;

  Eigen::MatrixXd design(60, basis.q + 1);
  design.col(0).setOnes();
  design.rightCols(basis.q) = basis.design(t);
  const Eigen::VectorXd target = t.array().cube();

  // Least-squares projection oracle.
  const Eigen::VectorXd coef =
      design.colPivHouseholderQr().solve(target);
  const double residual = (target - design * coef).norm();
  CHECK(residual < 1e-6);
}

TEST_CASE("fit_smooth of a zero target returns zero coefficients") {
  const Eigen::VectorXd t = random_sample(80, 5);
  const SmoothFit fit = fit_smooth(t, Eigen::VectorXd::Zero(80), 6, 0.5);
  CHECK(fit.theta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(fit.theta.squaredNorm() / fit.theta.size() == 0.0);
}

TEST_CASE("fit_smooth recovers sin(2t) within 0.1 RMS") {
  RandomStream stream(6);
  const int n = 500;
  Eigen::VectorXd t(n), r(n), truth(n);
  for (int i = 0; i < n; ++i) {
    t(i) = stream.uniform(-2.0, 2.0);
    truth(i) = std::sin(2.0 * t(i));
    r(i) = truth(i) + stream.normal(0.0, 0.05);
  }

  // Oracle: a dense degree-7 polynomial least-squares fit can reach the
  // same target, so the task is attainable at this noise level.
  Eigen::MatrixXd poly(n, 8);
  for (int i = 0; i < n; ++i) {
    double power = 1.0;
    for (int d = 0; d < 8; ++d) {
      poly(i, d) = power;
      power *= t(i);
    }
  }
  const Eigen::VectorXd poly_coef = poly.colPivHouseholderQr().solve(r);
  const double poly_rms = std::sqrt((truth - poly * poly_coef).squaredNorm() / n);
  CHECK(poly_rms < 0.1);

  SmoothingPolicy policy;  // GCV default
  const SmoothFit fit = fit_smooth(t, r, 10, policy);
  const Eigen::VectorXd fitted = fit.evaluate(t);
  const double rms = std::sqrt((truth - fitted).squaredNorm() / n);
  CHECK(rms < 0.1);
}

TEST_CASE("overwhelming penalty flattens curvature to a line") {
  RandomStream stream(7);
  const int n = 300;
  Eigen::VectorXd t(n), r(n);
  for (int i = 0; i < n; ++i) {
    t(i) = stream.uniform(0.0, 1.0);
    r(i) = std::sin(6.0 * t(i)) + stream.normal(0.0, 0.1);
  }
  const SmoothFit fit = fit_smooth(t, r, 10, 1e9);
  CHECK(integrated_abs_curvature(fit.basis, fit.theta) < 1e-3);
}

TEST_CASE("penalized objective is minimized at the fitted coefficients") {
  RandomStream stream(8);
  const int n = 120;
  Eigen::VectorXd t(n), r(n);
  for (int i = 0; i < n; ++i) {
    t(i) = stream.uniform(0.0, 1.0);
    r(i) = std::cos(3.0 * t(i)) + stream.normal(0.0, 0.2);
  }
  const SmoothFit fit = fit_smooth(t, r, 8, 0.01);
  const double at_optimum =
      penalized_objective(fit, t, r, fit.theta, fit.intercept);
  for (int l = 0; l < fit.theta.size(); ++l) {
    for (const double delta : {-1e-3, 1e-3}) {
      Eigen::VectorXd theta = fit.theta;
      theta(l) += delta;
      CHECK(penalized_objective(fit, t, r, theta, fit.intercept) >=
            at_optimum - 1e-12);
    }
  }
}

TEST_CASE("unpenalized residuals are orthogonal to the basis") {
  RandomStream stream(9);
  const int n = 200;
  Eigen::VectorXd t(n), r(n);
  for (int i = 0; i < n; ++i) {
    t(i) = stream.uniform(-1.0, 1.0);
    r(i) = t(i) * t(i) + stream.normal(0.0, 0.3);
  }
  const SmoothFit fit = fit_smooth(t, r, 8, 0.0);
  const Eigen::MatrixXd B = fit.basis.design(t);
  const Eigen::VectorXd fitted = fit.evaluate(t);
  const Eigen::VectorXd residual = r - fitted;
  CHECK((B.transpose() * residual).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::abs(residual.sum()) < 1e-6);  // intercept column too
}

TEST_CASE("fit_smooth needs a nonsingular design at lambda zero") {
  // Basis built from a rich sample but evaluated on only three distinct
  // points: the design cannot have full column rank.
  const Eigen::VectorXd sample = random_sample(100, 99);
  const SplineBasis basis = make_basis(sample, 8);

  Eigen::VectorXd t(20);
  for (int i = 0; i < 20; ++i) t(i) = 0.25 * (i % 3 + 1);

  SmoothingPolicy fixed_zero;
  fixed_zero.use_gcv = false;
  fixed_zero.fixed_lambda = 0.0;
  CHECK_THROWS_WITH_AS(SmoothSolver(basis, t, fixed_zero),
                       doctest::Contains("lambda"), RankError);
}

TEST_CASE("additive fit on all-linear data matches the OLS oracle") {
  RandomStream stream(10);
  const int n = 400, p = 3;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = stream.normal();
    y(i) = 1.0 + 2.0 * X(i, 0) - X(i, 1) + 0.5 * X(i, 2) +
           stream.normal(0.0, 0.4);
  }
  const Dataset data = make_dataset(X, y);

  // Oracle: plain multiple linear regression by normal equations.
  Eigen::MatrixXd design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = X;
  const Eigen::VectorXd beta =
      (design.transpose() * design).ldlt().solve(design.transpose() * y);
  const double ols_sse = (y - design * beta).squaredNorm();

  SmoothingPolicy policy;  // GCV
  const AdditiveFit fit = fit_additive(data, 0, 10, policy);
  CHECK(std::abs(fit.residuals.squaredNorm() - ols_sse) <= 0.01 * ols_sse);

  // Departure-from-linear energy of each smooth stays negligible relative
  // to the component's variance.
  for (std::size_t c = 0; c < fit.smooth_components.size(); ++c) {
    const SmoothFit& component = fit.smooth_components[c];
    const double energy =
        component.theta.dot(component.basis.penalty_matrix * component.theta);
    const Eigen::VectorXd values =
        component.evaluate(data.X.col(fit.smooth_feature_index[c]));
    const double variance =
        (values.array() - values.mean()).square().sum() / (n - 1);
    CHECK(energy < 1e-2 * std::max(variance, 1e-12));
  }
}

TEST_CASE("additive fit with one feature reduces to simple regression") {
  RandomStream stream(11);
  const int n = 150;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = stream.normal();
    y(i) = 3.0 - 1.7 * X(i, 0) + stream.normal(0.0, 0.5);
  }
  const Dataset data = make_dataset(X, y);
  const AdditiveFit fit = fit_additive(data, 0, 10, 1.0);

  Eigen::MatrixXd design(n, 2);
  design.col(0).setOnes();
  design.col(1) = X.col(0);
  const Eigen::VectorXd beta =
      (design.transpose() * design).ldlt().solve(design.transpose() * y);
  CHECK(fit.linear_coef == doctest::Approx(beta(1)).epsilon(1e-8));
  CHECK(fit.intercept == doctest::Approx(beta(0)).epsilon(1e-8));
  CHECK(fit.smooth_components.empty());
}

TEST_CASE("additive fit captures curvature the linear model misses") {
  RandomStream stream(12);
  const int n = 400;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = stream.normal();
    X(i, 1) = stream.normal();
    y(i) = -0.2 * X(i, 0) + 0.2 * X(i, 1) * X(i, 1) + stream.normal(0.0, 0.2);
  }
  const Dataset data = make_dataset(X, y);

  SmoothingPolicy policy;
  const AdditiveFit fit = fit_additive(data, 0, 10, policy);

  Eigen::MatrixXd design(n, 3);
  design.col(0).setOnes();
  design.rightCols(2) = X;
  const Eigen::VectorXd beta =
      (design.transpose() * design).ldlt().solve(design.transpose() * y);
  const double lm_sse = (y - design * beta).squaredNorm();
  CHECK(fit.residuals.squaredNorm() < lm_sse);
}

TEST_CASE("additive fitted plus residuals reassembles the outcome") {
  RandomStream stream(13);
  const int n = 250;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = stream.normal();
    X(i, 1) = stream.uniform(-2.0, 2.0);
    y(i) = X(i, 0) + std::sin(X(i, 1)) + stream.normal(0.0, 0.3);
  }
  const Dataset data = make_dataset(X, y);
  const AdditiveFit fit = fit_additive(data, 0, 8, 0.1);
  CHECK((fit.fitted + fit.residuals - y).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("predict_additive reproduces training fitted values") {
  RandomStream stream(14);
  const int n = 220;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = stream.normal();
    X(i, 1) = stream.normal();
    y(i) = 0.5 * X(i, 0) + X(i, 1) * X(i, 1) + stream.normal(0.0, 0.2);
  }
  const Dataset data = make_dataset(X, y);
  const AdditiveFit fit = fit_additive(data, 0, 8, 0.05);

  int outside = 0;
  const Eigen::VectorXd prediction = predict_additive(fit, data.X, &outside);
  CHECK((prediction - fit.fitted).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(outside == 0);
}

TEST_CASE("zeroed smooth coefficients predict intercept plus linear term") {
  RandomStream stream(15);
  const int n = 150;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = stream.normal();
    X(i, 1) = stream.normal();
    y(i) = X(i, 0) - 0.5 * X(i, 1) + stream.normal(0.0, 0.1);
  }
  AdditiveFit fit = fit_additive(make_dataset(X, y), 0, 8, 0.1);
  for (SmoothFit& component : fit.smooth_components) component.theta.setZero();

  const Eigen::VectorXd prediction = predict_additive(fit, X);
  const Eigen::VectorXd expected =
      (fit.linear_coef * X.col(0)).array() + fit.intercept;
  CHECK((prediction - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("prediction is continuous at the boundary knot") {
  RandomStream stream(16);
  const int n = 200;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = stream.normal();
    X(i, 1) = stream.uniform(0.0, 1.0);
    y(i) = X(i, 0) + std::cos(2.0 * X(i, 1)) + stream.normal(0.0, 0.1);
  }
  const AdditiveFit fit = fit_additive(make_dataset(X, y), 0, 8, 0.01);
  const SmoothFit& component = fit.smooth_components[0];
  const double boundary = component.basis.knots(component.basis.knots.size() - 1);

  const double at = component.evaluate(boundary);
  double inside = component.evaluate(boundary - 1e-8);
  CHECK(std::abs(at - inside) < 1e-6);

  // Outside the boundary the extrapolation is flagged.
  Eigen::MatrixXd X_out = X.topRows(2);
  X_out(0, 1) = boundary + 5.0;
  int outside = 0;
  predict_additive(fit, X_out, &outside);
  CHECK(outside > 0);
}

TEST_CASE("additive fit rejects unsupported inputs") {
  RandomStream stream(18);
  Eigen::MatrixXd X(100, 2);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = stream.normal();

  Eigen::VectorXd binary(100);
  for (int i = 0; i < 100; ++i) binary(i) = i % 2;
  CHECK_THROWS_AS(fit_additive(make_dataset(X, binary), 0, 8, 0.1),
                  UnsupportedError);

  Eigen::VectorXd y = X.col(0);
  y(0) += 0.5;  // not binary
  CHECK_THROWS_AS(fit_additive(make_dataset(X.topRows(15), y.head(15)), 0, 10, 0.1),
                  ConfigError);  // n <= p*q
}
