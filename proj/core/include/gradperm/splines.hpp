// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <vector>

#include "gradperm/dataset.hpp"

namespace gradperm {

/// Cubic regression spline basis with natural boundary conditions.
///
/// Knots sit at evenly spaced quantiles of the construction sample with
/// boundary knots at min/max. Coefficients are the spline's values at the
/// knots; second derivatives at the knots follow from the natural-spline
/// continuity system, which also yields the exact curvature penalty
/// P = D^T B^-1 D with theta^T P theta = integral of s''(t)^2.
struct SplineBasis {
  Eigen::VectorXd knots;  // strictly increasing, size q
  int q = 0;              // number of basis functions
  bool centered = false;
  Eigen::VectorXd col_means;       // reference means when centered, else zero
  Eigen::MatrixXd curvature_map;   // q x q: knot values -> knot curvatures
  Eigen::MatrixXd penalty_matrix;  // q x q roughness penalty

  /// Raw (uncentered) basis row b(t)^T. Outside the boundary knots the
  /// spline extrapolates linearly; `extrapolated` is set when provided.
  Eigen::RowVectorXd eval_row(double t, bool* extrapolated = nullptr) const;

  /// Design matrix over a vector of evaluation points, centered when the
  /// basis is centered. Counts boundary extrapolations if asked.
  Eigen::MatrixXd design(const Eigen::VectorXd& t,
                         int* n_extrapolated = nullptr) const;

  const Eigen::MatrixXd& penalty() const { return penalty_matrix; }
};

/// Basis over `sample` with q functions. Requires q >= 3 and at least q
/// distinct sample values (RankError otherwise).
SplineBasis make_basis(const Eigen::VectorXd& sample, int q,
                       bool centered = true);

/// Integral of |s''| over the knot range for coefficient vector `coef`.
double integrated_abs_curvature(const SplineBasis& basis,
                                const Eigen::VectorXd& coef);

/// A fitted smooth: value = intercept + centered-basis row . theta.
/// The intercept is excluded from theta so a pure level shift never loads
/// on the spline coefficients.
struct SmoothFit {
  SplineBasis basis;
  Eigen::VectorXd theta;
  double intercept = 0.0;
  double penalty_lambda = 0.0;

  double evaluate(double t) const;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& t,
                           int* n_extrapolated = nullptr) const;
};

/// Smoothing-parameter policy: generalized cross-validation over a fixed
/// log-spaced grid (default), or a caller-pinned constant. gcv_gamma
/// inflates each effective degree of freedom in the GCV score; values
/// around 1.4 counteract GCV's tendency to undersmooth.
struct SmoothingPolicy {
  bool use_gcv = true;
  double fixed_lambda = 1.0;
  int gcv_grid_size = 20;
  double gcv_log10_min = -6.0;
  double gcv_log10_max = 6.0;
  double gcv_gamma = 1.4;

  std::vector<double> lambda_grid() const;
};

/// Penalized least squares ||r - B theta||^2 + lambda theta^T P theta with an
/// explicit unpenalized intercept. Requires n > q. A singular system at
/// lambda = 0 raises RankError suggesting lambda > 0.
SmoothFit fit_smooth(const Eigen::VectorXd& t, const Eigen::VectorXd& r, int q,
                     double penalty_lambda);

/// As above with lambda chosen by the policy (GCV by default).
SmoothFit fit_smooth(const Eigen::VectorXd& t, const Eigen::VectorXd& r, int q,
                     const SmoothingPolicy& policy);

/// Reusable solver for repeated smooth fits against a fixed abscissa: the
/// design and one factorization per candidate lambda are precomputed, so each
/// fit costs one solve per candidate. Used by the permutation loop.
class SmoothSolver {
 public:
  SmoothSolver(SplineBasis basis, const Eigen::VectorXd& t,
               const SmoothingPolicy& policy);

  SmoothFit fit(const Eigen::VectorXd& r) const;
  const SplineBasis& basis() const { return basis_; }

 private:
  struct Candidate {
    double lambda;
    Eigen::LDLT<Eigen::MatrixXd> factor;
    double edf;
  };
  SplineBasis basis_;
  Eigen::MatrixXd constraint_;  // q x (q-1) sum-to-zero reparameterization
  Eigen::MatrixXd design_;      // [1 | centered basis * constraint]
  std::vector<Candidate> candidates_;
  double gcv_gamma_ = 1.4;
};

/// Additive model in which feature `linear_index` enters linearly and every
/// other feature through a centered smooth, fitted jointly by penalized
/// least squares with one shared lambda.
struct AdditiveFit {
  int linear_index = 0;
  double linear_coef = 0.0;
  double intercept = 0.0;
  std::vector<int> smooth_feature_index;  // ascending, skips linear_index
  std::vector<SmoothFit> smooth_components;
  double penalty_lambda = 0.0;
  Eigen::VectorXd fitted;
  Eigen::VectorXd residuals;
};

/// Requires n > p*q and a continuous outcome (UnsupportedError when y is
/// binary). Throws RankError on design rank deficiency.
AdditiveFit fit_additive(const Dataset& data, int j, int q,
                         double penalty_lambda);
AdditiveFit fit_additive(const Dataset& data, int j, int q,
                         const SmoothingPolicy& policy);

/// f-hat evaluated row-wise; on the training matrix this reproduces
/// fit.fitted. Boundary extrapolations are counted when asked.
Eigen::VectorXd predict_additive(const AdditiveFit& fit,
                                 const Eigen::MatrixXd& X,
                                 int* n_extrapolated = nullptr);

}  // namespace gradperm
