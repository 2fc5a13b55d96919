// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "gradperm/errors.hpp"
#include "gradperm/linreg.hpp"
#include "gradperm/rng.hpp"

using namespace gradperm;

TEST_CASE("ols solves a hand-checked system") {
  // y = 1 + 2 x, exact.
  Eigen::MatrixXd design(4, 2);
  design << 1, 0, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd y(4);
  y << 1, 3, 5, 7;
  const OlsFit fit = ols(design, y);
  CHECK(fit.coef(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.coef(1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.sse == doctest::Approx(0.0).epsilon(1e-18));
  CHECK(fit.df_residual == 2);
}

TEST_CASE("ols rejects rank-deficient designs") {
  Eigen::MatrixXd design(5, 2);
  design.col(0).setOnes();
  design.col(1).setOnes();  // duplicate column
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, 0, 4);
  CHECK_THROWS_AS(ols(design, y), RankError);
}

TEST_CASE("student t CDF matches the boost oracle") {
  const double dfs[] = {1.0, 2.0, 5.0, 17.0, 100.0, 450.0};
  const double ts[] = {-8.0, -2.5, -0.7, 0.0, 0.3, 1.96, 4.2, 12.0};
  for (const double df : dfs) {
    boost::math::students_t dist(df);
    for (const double t : ts) {
      const double expected = boost::math::cdf(dist, t);
      CHECK(student_t_cdf(t, df) == doctest::Approx(expected).epsilon(1e-12));
      const double expected_p =
          2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
      CHECK(two_sided_t_pvalue(t, df) ==
            doctest::Approx(expected_p).epsilon(1e-10));
    }
  }
}

TEST_CASE("two-sided p-value is symmetric and bounded") {
  RandomStream stream(4);
  for (int i = 0; i < 200; ++i) {
    const double t = stream.uniform(-6.0, 6.0);
    const double df = 2.0 + stream.below(200);
    const double p = two_sided_t_pvalue(t, df);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(p == doctest::Approx(two_sided_t_pvalue(-t, df)).epsilon(1e-13));
  }
  CHECK(two_sided_t_pvalue(0.0, 10.0) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("regularized incomplete beta hits known values") {
  // I_x(1, 1) = x.
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) ==
        doctest::Approx(0.37).epsilon(1e-13));
  // I_x(2, 2) = x^2 (3 - 2x).
  const double x = 0.42;
  CHECK(regularized_incomplete_beta(2.0, 2.0, x) ==
        doctest::Approx(x * x * (3 - 2 * x)).epsilon(1e-12));
  CHECK(regularized_incomplete_beta(3.5, 2.25, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(3.5, 2.25, 1.0) == 1.0);
  CHECK_THROWS_AS(regularized_incomplete_beta(0.0, 1.0, 0.5), ConfigError);
}
