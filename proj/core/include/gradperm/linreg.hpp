// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace gradperm {

/// Ordinary least squares fit of y on a design matrix (no implicit
/// intercept; prepend a ones column if one is wanted).
struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx_inverse;
  double sse = 0.0;
  Eigen::Index df_residual = 0;
};

/// Throws RankError when the design is rank deficient.
OlsFit ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y);

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation (modified Lentz).
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// Two-sided p-value for a t statistic.
double two_sided_t_pvalue(double t, double df);

}  // namespace gradperm
