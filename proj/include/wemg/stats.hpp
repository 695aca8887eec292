// Copyright 2026 The wemg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Normality testing, one-way ANOVA with Tukey post hoc comparisons, and
// Pearson regression, with the special functions they need.
//
// All functions are pure and safe to call concurrently.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace wemg::stats {

// ---------------------------------------------------------------------------
// Special functions

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
double incomplete_beta(double a, double b, double x);

double normal_cdf(double z);
/// Inverse of normal_cdf for p in (0, 1).
double normal_quantile(double p);

/// P(F > f) for F ~ F(d1, d2).
double f_sf(double f, double d1, double d2);
/// P(|T| > |t|) for T ~ t(df).
double t_sf_two_sided(double t, double df);
/// Quantile of t(df) for p in (0, 1).
double t_quantile(double p, double df);

/// CDF of the studentized range of k normal means with df error degrees of
/// freedom (df = infinity allowed). Double integral by adaptive
/// Gauss-Legendre quadrature.
double ptukey(double q, int k, double df);
/// Inverse of ptukey in q for p in (0, 1).
double qtukey(double p, int k, double df);

/// n-point Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendreRule gauss_legendre(std::size_t n);

// ---------------------------------------------------------------------------
// Tests

struct ShapiroWilkResult {
  double w = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
};

/// Royston's algorithm for 3 <= n <= 5000. Throws on a constant sample
/// ("zero variance") or a size out of range.
ShapiroWilkResult shapiro_wilk(std::span<const double> sample);

struct AnovaResult {
  double f = 0.0;  // +infinity when degenerate
  double p_value = 1.0;
  double df_between = 0.0;
  double df_within = 0.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ms_within = 0.0;
  /// Zero within-group variance with nonzero between-group variance; p is
  /// then reported as 0.
  bool degenerate = false;
  std::vector<double> means;
  std::vector<std::size_t> sizes;
};

/// Needs k >= 2 groups of >= 2 values and nonzero total variance.
AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

struct PairComparison {
  std::size_t i = 0;
  std::size_t j = 0;
  double mean_diff = 0.0;  // mean_i - mean_j
  // Tukey-Kramer
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_value = 1.0;
  // Unadjusted two-sample t on the pooled within-group variance
  double t_ci_low = 0.0;
  double t_ci_high = 0.0;
  double t_p_value = 1.0;
};

struct TukeyResult {
  AnovaResult anova;
  double alpha = 0.05;
  double q_crit = 0.0;
  double t_crit = 0.0;
  std::vector<PairComparison> pairs;  // (0,1), (0,2), ..., (k-2,k-1)
};

TukeyResult tukey_hsd(std::span<const std::vector<double>> groups, double alpha = 0.05);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Least squares y = slope * x + intercept with Pearson r and the two-sided
/// p of t = r sqrt((n - 2) / (1 - r^2)). Needs n >= 3 and var(x) > 0.
RegressionResult pearson_regression(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Serialization

/// FNV-1a over the IEEE-754 bit patterns, as 16 hex digits.
std::string digest(std::span<const double> values);
std::string digest(std::span<const std::vector<double>> groups);

/// Each record carries "test", "inputs_digest", "parameters" and the
/// statistic fields. Non-finite numbers serialize as null.
nlohmann::json to_json(const ShapiroWilkResult& r, std::span<const double> sample);
nlohmann::json to_json(const AnovaResult& r, std::span<const std::vector<double>> groups);
nlohmann::json to_json(const TukeyResult& r, std::span<const std::vector<double>> groups);
nlohmann::json to_json(const RegressionResult& r, std::span<const double> x, std::span<const double> y);

}  // namespace wemg::stats
