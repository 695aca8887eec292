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


#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>

#include "wemg/error.hpp"
#include "wemg/stats.hpp"

namespace wemg::stats {
namespace {

// c[0] + c[1] x + ... + c[n-1] x^(n-1)
double poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * x + c[i];
  return r;
}

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

ShapiroWilkResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) throw Error("Shapiro-Wilk needs 3 <= n <= 5000, got " + std::to_string(n));
  std::vector<double> x(sample.begin(), sample.end());
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericError("Shapiro-Wilk sample contains a non-finite value");
  }
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 0.0)) throw NumericError("zero variance");

  // Coefficients for the lower half (positive, applied to x[n-1-i] - x[i]).
  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
  } else {
    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));  // negative
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
      first = 2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
      first = 1;
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W as the squared correlation of the antisymmetric coefficient vector with
  // the sample, computed as 1 - w1 from centered sums for accuracy near 1.
  std::vector<double> coef(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    coef[i] = -a[i];
    coef[n - 1 - i] = a[i];
  }
  const double ca = mean_of(coef);
  double sx = 0.0;
  for (double v : x) sx += v / range;
  sx /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coef[i] - ca;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  const double w = 1.0 - w1;

  ShapiroWilkResult r;
  r.n = n;
  r.w = w;
  if (n == 3) {
    // Exact for n = 3.
    r.p_value = std::max(0.0, 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::numbers::pi / 3.0));
    r.p_value = std::min(r.p_value, 1.0);
    return r;
  }
  static constexpr double g[] = {-2.273, 0.459};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  double y = std::log(w1);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly(g, an);
    if (y >= gamma) {
      r.p_value = 1e-99;
      return r;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, an);
    sigma = std::exp(poly(c4, an));
  } else {
    const double ln = std::log(an);
    mu = poly(c5, ln);
    sigma = std::exp(poly(c6, ln));
  }
  r.p_value = std::clamp(0.5 * std::erfc((y - mu) / sigma / std::numbers::sqrt2), 0.0, 1.0);
  return r;
}

AnovaResult one_way_anova(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw Error("ANOVA needs at least 2 groups");
  AnovaResult r;
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw Error("ANOVA needs at least 2 values per group");
    for (double v : g) {
      if (!std::isfinite(v)) throw NumericError("ANOVA input contains a non-finite value");
    }
    r.means.push_back(mean_of(g));
    r.sizes.push_back(g.size());
    total += std::accumulate(g.begin(), g.end(), 0.0);
    count += g.size();
  }
  const double grand = total / static_cast<double>(count);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double d = r.means[i] - grand;
    r.ss_between += static_cast<double>(r.sizes[i]) * d * d;
    for (double v : groups[i]) r.ss_within += (v - r.means[i]) * (v - r.means[i]);
  }
  r.df_between = static_cast<double>(groups.size() - 1);
  r.df_within = static_cast<double>(count - groups.size());
  r.ms_within = r.ss_within / r.df_within;
  if (r.ss_within == 0.0) {
    if (r.ss_between == 0.0) throw NumericError("ANOVA on data with zero total variance");
    r.degenerate = true;
    r.f = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.f = (r.ss_between / r.df_between) / r.ms_within;
  r.p_value = f_sf(r.f, r.df_between, r.df_within);
  return r;
}

TukeyResult tukey_hsd(std::span<const std::vector<double>> groups, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must be in (0, 1)");
  TukeyResult r;
  r.alpha = alpha;
  r.anova = one_way_anova(groups);
  const int k = static_cast<int>(groups.size());
  const double df = r.anova.df_within;
  r.q_crit = qtukey(1.0 - alpha, k, df);
  r.t_crit = t_quantile(1.0 - 0.5 * alpha, df);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      PairComparison pc;
      pc.i = i;
      pc.j = j;
      pc.mean_diff = r.anova.means[i] - r.anova.means[j];
      const double inv = 1.0 / static_cast<double>(r.anova.sizes[i]) + 1.0 / static_cast<double>(r.anova.sizes[j]);
      // Tukey-Kramer standard error of the range statistic.
      const double se_q = std::sqrt(0.5 * r.anova.ms_within * inv);
      const double se_t = std::sqrt(r.anova.ms_within * inv);
      pc.ci_low = pc.mean_diff - r.q_crit * se_q;
      pc.ci_high = pc.mean_diff + r.q_crit * se_q;
      pc.t_ci_low = pc.mean_diff - r.t_crit * se_t;
      pc.t_ci_high = pc.mean_diff + r.t_crit * se_t;
      if (se_q == 0.0) {
        pc.p_value = pc.mean_diff == 0.0 ? 1.0 : 0.0;
        pc.t_p_value = pc.p_value;
      } else {
        pc.p_value = std::clamp(1.0 - ptukey(std::abs(pc.mean_diff) / se_q, k, df), 0.0, 1.0);
        pc.t_p_value = t_sf_two_sided(pc.mean_diff / se_t, df);
      }
      r.pairs.push_back(pc);
    }
  }
  return r;
}

RegressionResult pearson_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("regression needs x and y of equal length");
  if (x.size() < 3) throw Error("regression needs at least 3 points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw NumericError("regression input is not finite");
  }
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericError("zero variance in x");
  RegressionResult r;
  r.n = x.size();
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.r = syy > 0.0 ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : 0.0;
  const double df = static_cast<double>(r.n - 2);
  if (std::abs(r.r) >= 1.0) {
    r.p_value = 0.0;
  } else {
    const double t = r.r * std::sqrt(df / (1.0 - r.r * r.r));
    r.p_value = t_sf_two_sided(t, df);
  }
  return r;
}

std::string digest(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string digest(std::span<const std::vector<double>> groups) {
  std::vector<double> flat;
  for (const auto& g : groups) {
    // Group sizes are mixed in so that regrouping changes the digest.
    flat.push_back(static_cast<double>(g.size()));
    flat.insert(flat.end(), g.begin(), g.end());
  }
  return digest(flat);
}

nlohmann::json to_json(const ShapiroWilkResult& r, std::span<const double> sample) {
  return {{"test", "shapiro_wilk"},
          {"inputs_digest", digest(sample)},
          {"parameters", {{"n", r.n}}},
          {"statistic", r.w},
          {"W", r.w},
          {"p_value", r.p_value}};
}

nlohmann::json to_json(const AnovaResult& r, std::span<const std::vector<double>> groups) {
  return {{"test", "one_way_anova"},
          {"inputs_digest", digest(groups)},
          {"parameters", {{"groups", r.sizes.size()}, {"sizes", r.sizes}}},
          {"statistic", finite_or_null(r.f)},
          {"F", finite_or_null(r.f)},
          {"p_value", r.p_value},
          {"df_between", r.df_between},
          {"df_within", r.df_within},
          {"ss_between", r.ss_between},
          {"ss_within", r.ss_within},
          {"means", r.means},
          {"degenerate", r.degenerate}};
}

nlohmann::json to_json(const TukeyResult& r, std::span<const std::vector<double>> groups) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"i", p.i},
                     {"j", p.j},
                     {"mean_diff", p.mean_diff},
                     {"tukey", {{"ci_low", p.ci_low}, {"ci_high", p.ci_high}, {"p_value", p.p_value}}},
                     {"unadjusted_t", {{"ci_low", p.t_ci_low}, {"ci_high", p.t_ci_high}, {"p_value", p.t_p_value}}}});
  }
  return {{"test", "tukey_hsd"},
          {"inputs_digest", digest(groups)},
          {"parameters", {{"alpha", r.alpha}, {"groups", r.anova.sizes.size()}, {"sizes", r.anova.sizes}}},
          {"anova", to_json(r.anova, groups)},
          {"q_crit", r.q_crit},
          {"t_crit", r.t_crit},
          {"pairs", pairs}};
}

nlohmann::json to_json(const RegressionResult& r, std::span<const double> x, std::span<const double> y) {
  std::vector<double> xy(x.begin(), x.end());
  xy.insert(xy.end(), y.begin(), y.end());
  return {{"test", "pearson_regression"},
          {"inputs_digest", digest(xy)},
          {"parameters", {{"n", r.n}}},
          {"statistic", r.r},
          {"R", r.r},
          {"slope", r.slope},
          {"intercept", r.intercept},
          {"p_value", r.p_value}};
}

}  // namespace wemg::stats
