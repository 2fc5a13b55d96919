// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#include "gradperm/linreg.hpp"

#include <cmath>
#include <limits>

#include "gradperm/errors.hpp"

namespace gradperm {

OlsFit ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  if (design.rows() != y.size())
    throw ShapeError("ols: design rows do not match outcome length");
  if (design.rows() <= design.cols())
    throw ConfigError("ols: need more rows than columns");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols())
    throw RankError("ols: design matrix is rank deficient");

  OlsFit fit;
  fit.coef = qr.solve(y);
  fit.fitted = design * fit.coef;
  fit.residuals = y - fit.fitted;
  fit.sse = fit.residuals.squaredNorm();
  fit.df_residual = design.rows() - design.cols();
  fit.xtx_inverse =
      (design.transpose() * design)
          .ldlt()
          .solve(Eigen::MatrixXd::Identity(design.cols(), design.cols()));
  return fit;
}

namespace {

// Continued fraction for the incomplete beta, modified Lentz. Converges
// quickly for x < (a+1)/(a+b+2); the caller flips otherwise.
double incbeta_cf(double a, double b, double x) {
  constexpr int kMaxIterations = 300;
  constexpr double kEpsilon = 1e-15;
  const double tiny = std::numeric_limits<double>::min() / kEpsilon;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;

  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double numerator = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + numerator * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + numerator / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;

    numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + numerator * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + numerator / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ConfigError("regularized_incomplete_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * incbeta_cf(a, b, x) / a;
  return 1.0 - front * incbeta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (df <= 0.0) throw ConfigError("student_t_cdf: df must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double two_sided_t_pvalue(double t, double df) {
  if (df <= 0.0) throw ConfigError("two_sided_t_pvalue: df must be positive");
  const double x = df / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

}  // namespace gradperm
