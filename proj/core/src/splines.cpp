// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#include "gradperm/splines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gradperm/errors.hpp"

namespace gradperm {

namespace {

// Type-7 quantile (linear interpolation) of a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double prob) {
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * prob;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= n) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Interval index j such that knots[j] <= t < knots[j+1], clamped to the
// boundary intervals.
Eigen::Index interval_of(const Eigen::VectorXd& knots, double t) {
  const Eigen::Index q = knots.size();
  if (t <= knots(0)) return 0;
  if (t >= knots(q - 1)) return q - 2;
  const double* begin = knots.data();
  const double* pos = std::upper_bound(begin, begin + q, t);
  return std::min<Eigen::Index>(q - 2, static_cast<Eigen::Index>(pos - begin) - 1);
}

struct LocalWeights {
  double a_minus, a_plus, c_minus, c_plus;
};

LocalWeights value_weights(const Eigen::VectorXd& knots, Eigen::Index j, double t) {
  const double h = knots(j + 1) - knots(j);
  const double u = knots(j + 1) - t;
  const double v = t - knots(j);
  return {u / h, v / h, (u * u * u / h - h * u) / 6.0,
          (v * v * v / h - h * v) / 6.0};
}

LocalWeights derivative_weights(const Eigen::VectorXd& knots, Eigen::Index j,
                                double t) {
  const double h = knots(j + 1) - knots(j);
  const double u = knots(j + 1) - t;
  const double v = t - knots(j);
  return {-1.0 / h, 1.0 / h, (h - 3.0 * u * u / h) / 6.0,
          (3.0 * v * v / h - h) / 6.0};
}

Eigen::RowVectorXd local_row(const SplineBasis& basis, Eigen::Index j,
                             const LocalWeights& w) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(basis.q);
  row(j) += w.a_minus;
  row(j + 1) += w.a_plus;
  row += w.c_minus * basis.curvature_map.row(j);
  row += w.c_plus * basis.curvature_map.row(j + 1);
  return row;
}

// The raw basis is a partition of unity, so mean-centered columns sum to
// exactly zero and the centered design plus an intercept is rank deficient
// by one. Fits therefore run in the (q-1)-dimensional complement of the
// ones vector and map back to length-q coefficients with 1^T theta = 0.
Eigen::MatrixXd sum_to_zero_basis(int q) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::VectorXd::Ones(q));
  const Eigen::MatrixXd Q = qr.householderQ();
  return Q.rightCols(q - 1);
}

}  // namespace

Eigen::RowVectorXd SplineBasis::eval_row(double t, bool* extrapolated) const {
  const Eigen::Index last = knots.size() - 1;
  if (t < knots(0)) {
    if (extrapolated) *extrapolated = true;
    const Eigen::RowVectorXd value = local_row(*this, 0, value_weights(knots, 0, knots(0)));
    const Eigen::RowVectorXd slope = local_row(*this, 0, derivative_weights(knots, 0, knots(0)));
    return value + (t - knots(0)) * slope;
  }
  if (t > knots(last)) {
    if (extrapolated) *extrapolated = true;
    const Eigen::Index j = last - 1;
    const Eigen::RowVectorXd value = local_row(*this, j, value_weights(knots, j, knots(last)));
    const Eigen::RowVectorXd slope = local_row(*this, j, derivative_weights(knots, j, knots(last)));
    return value + (t - knots(last)) * slope;
  }
  if (extrapolated) *extrapolated = false;
  const Eigen::Index j = interval_of(knots, t);
  return local_row(*this, j, value_weights(knots, j, t));
}

Eigen::MatrixXd SplineBasis::design(const Eigen::VectorXd& t,
                                    int* n_extrapolated) const {
  Eigen::MatrixXd B(t.size(), q);
  int outside = 0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    bool ex = false;
    B.row(i) = eval_row(t(i), &ex);
    if (ex) ++outside;
  }
  if (centered) B.rowwise() -= col_means.transpose();
  if (n_extrapolated) *n_extrapolated = outside;
  return B;
}

SplineBasis make_basis(const Eigen::VectorXd& sample, int q, bool centered) {
  if (q < 3) throw ConfigError("spline basis dimension q must be >= 3");
  if (sample.size() < q)
    throw RankError("sample smaller than requested basis dimension");

  std::vector<double> sorted(sample.data(), sample.data() + sample.size());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> distinct;
  distinct.reserve(sorted.size());
  for (const double v : sorted)
    if (distinct.empty() || v > distinct.back()) distinct.push_back(v);
  if (static_cast<int>(distinct.size()) < q)
    throw RankError("fewer than q distinct sample values for spline basis");

  Eigen::VectorXd knots(q);
  for (int i = 0; i < q; ++i)
    knots(i) = quantile_sorted(sorted, static_cast<double>(i) / (q - 1));

  bool increasing = true;
  for (int i = 0; i + 1 < q; ++i)
    if (!(knots(i) < knots(i + 1))) increasing = false;
  if (!increasing) {
    // Quantiles collided on heavily tied data; fall back to evenly spaced
    // distinct values, which are strictly increasing by construction.
    const std::size_t d = distinct.size();
    for (int i = 0; i < q; ++i) {
      const std::size_t idx = static_cast<std::size_t>(
          std::llround(static_cast<double>(i) * static_cast<double>(d - 1) /
                       static_cast<double>(q - 1)));
      knots(i) = distinct[idx];
    }
  }

  SplineBasis basis;
  basis.knots = knots;
  basis.q = q;
  basis.centered = centered;

  // Natural-spline continuity system: B * gamma_interior = D * beta.
  const int m = q - 2;
  Eigen::VectorXd h(q - 1);
  for (int i = 0; i + 1 < q; ++i) h(i) = knots(i + 1) - knots(i);

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, q);
  for (int r = 0; r < m; ++r) {
    B(r, r) = (h(r) + h(r + 1)) / 3.0;
    if (r > 0) B(r, r - 1) = h(r) / 6.0;
    if (r + 1 < m) B(r, r + 1) = h(r + 1) / 6.0;
    D(r, r) = 1.0 / h(r);
    D(r, r + 1) = -1.0 / h(r) - 1.0 / h(r + 1);
    D(r, r + 2) = 1.0 / h(r + 1);
  }

  const Eigen::MatrixXd F = B.ldlt().solve(D);  // m x q
  basis.curvature_map = Eigen::MatrixXd::Zero(q, q);
  basis.curvature_map.block(1, 0, m, q) = F;

  Eigen::MatrixXd P = D.transpose() * F;
  basis.penalty_matrix = 0.5 * (P + P.transpose());

  basis.col_means = Eigen::VectorXd::Zero(q);
  if (centered) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(q);
    for (Eigen::Index i = 0; i < sample.size(); ++i)
      mean += basis.eval_row(sample(i));
    basis.col_means = (mean / static_cast<double>(sample.size())).transpose();
  }
  return basis;
}

double integrated_abs_curvature(const SplineBasis& basis,
                                const Eigen::VectorXd& coef) {
  if (coef.size() != basis.q)
    throw ShapeError("integrated_abs_curvature: coefficient length mismatch");
  const Eigen::VectorXd gamma = basis.curvature_map * coef;
  double total = 0.0;
  for (Eigen::Index j = 0; j + 1 < basis.knots.size(); ++j) {
    const double h = basis.knots(j + 1) - basis.knots(j);
    const double g0 = gamma(j);
    const double g1 = gamma(j + 1);
    if (g0 * g1 >= 0.0) {
      total += h * (std::abs(g0) + std::abs(g1)) / 2.0;
    } else {
      // s'' is linear on the interval and crosses zero inside it.
      total += h * (g0 * g0 + g1 * g1) / (2.0 * (std::abs(g0) + std::abs(g1)));
    }
  }
  return total;
}

double SmoothFit::evaluate(double t) const {
  Eigen::RowVectorXd row = basis.eval_row(t);
  if (basis.centered) row -= basis.col_means.transpose();
  return intercept + row.dot(theta);
}

Eigen::VectorXd SmoothFit::evaluate(const Eigen::VectorXd& t,
                                    int* n_extrapolated) const {
  const Eigen::MatrixXd B = basis.design(t, n_extrapolated);
  return (B * theta).array() + intercept;
}

std::vector<double> SmoothingPolicy::lambda_grid() const {
  if (!use_gcv) return {fixed_lambda};
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(gcv_grid_size));
  for (int i = 0; i < gcv_grid_size; ++i) {
    const double step = gcv_grid_size > 1
                            ? (gcv_log10_max - gcv_log10_min) / (gcv_grid_size - 1)
                            : 0.0;
    grid.push_back(std::pow(10.0, gcv_log10_min + step * i));
  }
  return grid;
}

SmoothSolver::SmoothSolver(SplineBasis basis, const Eigen::VectorXd& t,
                           const SmoothingPolicy& policy)
    : basis_(std::move(basis)),
      constraint_(sum_to_zero_basis(basis_.q)),
      gcv_gamma_(policy.gcv_gamma) {
  const Eigen::Index n = t.size();
  if (n <= basis_.q)
    throw ConfigError("fit_smooth: need n > q observations");

  const Eigen::Index width = basis_.q - 1;
  design_.resize(n, width + 1);
  design_.col(0).setOnes();
  design_.rightCols(width) = basis_.design(t) * constraint_;

  const Eigen::MatrixXd ZtZ = design_.transpose() * design_;
  Eigen::MatrixXd penalty =
      Eigen::MatrixXd::Zero(width + 1, width + 1);
  penalty.block(1, 1, width, width) =
      constraint_.transpose() * basis_.penalty_matrix * constraint_;

  for (const double lambda : policy.lambda_grid()) {
    if (lambda == 0.0) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design_);
      if (qr.rank() < design_.cols())
        throw RankError(
            "smooth design is singular at lambda = 0; use penalty_lambda > 0");
    }
    Candidate candidate;
    candidate.lambda = lambda;
    candidate.factor.compute(ZtZ + lambda * penalty);
    if (candidate.factor.info() != Eigen::Success)
      throw RankError("smooth normal equations could not be factorized");
    candidate.edf = candidate.factor.solve(ZtZ).trace();
    candidates_.push_back(std::move(candidate));
  }
}

SmoothFit SmoothSolver::fit(const Eigen::VectorXd& r) const {
  if (r.size() != design_.rows())
    throw ShapeError("SmoothSolver::fit: target length mismatch");

  const Eigen::VectorXd Ztr = design_.transpose() * r;
  const double n = static_cast<double>(r.size());

  double best_gcv = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_coef;
  double best_lambda = candidates_.front().lambda;

  for (const Candidate& candidate : candidates_) {
    const Eigen::VectorXd coef = candidate.factor.solve(Ztr);
    if (!coef.allFinite())
      throw RankError("smooth fit produced non-finite coefficients");
    if (candidates_.size() == 1) {
      best_coef = coef;
      best_lambda = candidate.lambda;
      break;
    }
    const double rss = (r - design_ * coef).squaredNorm();
    const double denom = n - gcv_gamma_ * candidate.edf;
    if (denom <= 0.0) continue;
    const double gcv = n * rss / (denom * denom);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_coef = coef;
      best_lambda = candidate.lambda;
    }
  }
  if (best_coef.size() == 0)
    throw RankError("no smoothing candidate had positive residual df");

  SmoothFit fit;
  fit.basis = basis_;
  fit.intercept = best_coef(0);
  fit.theta = constraint_ * best_coef.tail(basis_.q - 1);
  fit.penalty_lambda = best_lambda;
  return fit;
}

SmoothFit fit_smooth(const Eigen::VectorXd& t, const Eigen::VectorXd& r, int q,
                     double penalty_lambda) {
  if (penalty_lambda < 0.0)
    throw ConfigError("penalty_lambda must be nonnegative");
  SmoothingPolicy policy;
  policy.use_gcv = false;
  policy.fixed_lambda = penalty_lambda;
  return SmoothSolver(make_basis(t, q, /*centered=*/true), t, policy).fit(r);
}

SmoothFit fit_smooth(const Eigen::VectorXd& t, const Eigen::VectorXd& r, int q,
                     const SmoothingPolicy& policy) {
  return SmoothSolver(make_basis(t, q, /*centered=*/true), t, policy).fit(r);
}

namespace {

bool looks_binary(const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) != 0.0 && y(i) != 1.0) return false;
  return true;
}

struct AdditiveDesign {
  Eigen::MatrixXd Z;           // [1 | X_j | constrained smooth blocks]
  Eigen::MatrixXd penalty;     // block diagonal, zero on intercept + linear
  Eigen::MatrixXd constraint;  // shared q x (q-1) sum-to-zero map
  std::vector<int> smooth_features;
  std::vector<SplineBasis> bases;
};

AdditiveDesign build_additive_design(const Dataset& data, int j, int q) {
  data.validate();
  const Eigen::Index n = data.n_rows();
  const Eigen::Index p = data.n_features();
  if (j < 0 || j >= p) throw ConfigError("fit_additive: feature index out of range");
  if (n <= p * q)
    throw ConfigError("fit_additive: need n > p*q observations");
  if (looks_binary(data.y))
    throw UnsupportedError(
        "fit_additive covers continuous outcomes only; binary outcomes are "
        "not supported");

  AdditiveDesign out;
  out.constraint = sum_to_zero_basis(q);
  const Eigen::Index block = q - 1;
  const Eigen::Index width = 2 + (p - 1) * block;
  out.Z.resize(n, width);
  out.Z.col(0).setOnes();
  out.Z.col(1) = data.X.col(j);
  out.penalty = Eigen::MatrixXd::Zero(width, width);

  Eigen::Index offset = 2;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (k == j) continue;
    SplineBasis basis = make_basis(data.X.col(k), q, /*centered=*/true);
    out.Z.middleCols(offset, block) = basis.design(data.X.col(k)) * out.constraint;
    out.penalty.block(offset, offset, block, block) =
        out.constraint.transpose() * basis.penalty_matrix * out.constraint;
    out.smooth_features.push_back(static_cast<int>(k));
    out.bases.push_back(std::move(basis));
    offset += q - 1;
  }
  return out;
}

AdditiveFit solve_additive(const Dataset& data, int j, int q,
                           const SmoothingPolicy& policy) {
  AdditiveDesign design = build_additive_design(data, j, q);
  const Eigen::MatrixXd ZtZ = design.Z.transpose() * design.Z;
  const Eigen::VectorXd Zty = design.Z.transpose() * data.y;
  const double n = static_cast<double>(data.n_rows());

  double best_gcv = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_coef;
  double best_lambda = 0.0;
  bool have_fit = false;

  const std::vector<double> grid = policy.lambda_grid();
  for (const double lambda : grid) {
    if (lambda == 0.0) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.Z);
      if (qr.rank() < design.Z.cols())
        throw RankError("additive design is rank deficient at lambda = 0");
    }
    Eigen::LDLT<Eigen::MatrixXd> factor(ZtZ + lambda * design.penalty);
    if (factor.info() != Eigen::Success)
      throw RankError("additive normal equations could not be factorized");
    const Eigen::VectorXd coef = factor.solve(Zty);
    if (!coef.allFinite())
      throw RankError("additive fit produced non-finite coefficients");
    if (grid.size() == 1) {
      best_coef = coef;
      best_lambda = lambda;
      have_fit = true;
      break;
    }
    const double rss = (data.y - design.Z * coef).squaredNorm();
    const double edf = factor.solve(ZtZ).trace();
    const double denom = n - policy.gcv_gamma * edf;
    if (denom <= 0.0) continue;
    const double gcv = n * rss / (denom * denom);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_coef = coef;
      best_lambda = lambda;
      have_fit = true;
    }
  }
  if (!have_fit) throw RankError("additive fit failed on every lambda");

  AdditiveFit fit;
  fit.linear_index = j;
  fit.intercept = best_coef(0);
  fit.linear_coef = best_coef(1);
  fit.penalty_lambda = best_lambda;
  fit.smooth_feature_index = design.smooth_features;

  Eigen::Index offset = 2;
  for (std::size_t c = 0; c < design.bases.size(); ++c) {
    SmoothFit component;
    component.basis = std::move(design.bases[c]);
    component.theta = design.constraint * best_coef.segment(offset, q - 1);
    component.intercept = 0.0;
    component.penalty_lambda = best_lambda;
    fit.smooth_components.push_back(std::move(component));
    offset += q - 1;
  }

  fit.fitted = design.Z * best_coef;
  fit.residuals = data.y - fit.fitted;
  return fit;
}

}  // namespace

AdditiveFit fit_additive(const Dataset& data, int j, int q,
                         double penalty_lambda) {
  if (penalty_lambda < 0.0)
    throw ConfigError("penalty_lambda must be nonnegative");
  SmoothingPolicy policy;
  policy.use_gcv = false;
  policy.fixed_lambda = penalty_lambda;
  return solve_additive(data, j, q, policy);
}

AdditiveFit fit_additive(const Dataset& data, int j, int q,
                         const SmoothingPolicy& policy) {
  return solve_additive(data, j, q, policy);
}

Eigen::VectorXd predict_additive(const AdditiveFit& fit,
                                 const Eigen::MatrixXd& X,
                                 int* n_extrapolated) {
  const int p = static_cast<int>(fit.smooth_components.size()) + 1;
  if (X.cols() != p)
    throw ShapeError("predict_additive: column count does not match fit");

  Eigen::VectorXd prediction =
      (fit.linear_coef * X.col(fit.linear_index)).array() + fit.intercept;
  int outside = 0;
  for (std::size_t c = 0; c < fit.smooth_components.size(); ++c) {
    int component_outside = 0;
    prediction += fit.smooth_components[c].evaluate(
        X.col(fit.smooth_feature_index[c]), &component_outside);
    outside += component_outside;
  }
  if (n_extrapolated) *n_extrapolated = outside;
  return prediction;
}

}  // namespace gradperm
