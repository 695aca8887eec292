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
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "wemg/error.hpp"
#include "wemg/stats.hpp"

namespace wemg::stats {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Continued fraction for I_x(a, b) evaluated by the modified Lentz method;
// converges quickly for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

// Root of a continuous increasing g on [lo, hi] with g(lo) < 0 < g(hi):
// regula falsi with the Illinois modification, falling back to bisection
// when the secant step stalls.
double solve_increasing(const std::function<double(double)>& g, double lo, double hi, double xtol) {
  double glo = g(lo), ghi = g(hi);
  int side = 0;
  for (int it = 0; it < 300; ++it) {
    if (hi - lo <= xtol * std::max(1.0, std::abs(lo))) break;
    double x = (lo * ghi - hi * glo) / (ghi - glo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double gx = g(x);
    if (gx == 0.0) return x;
    if (gx < 0.0) {
      lo = x;
      glo = gx;
      if (side == -1) ghi *= 0.5;
      side = -1;
    } else {
      hi = x;
      ghi = gx;
      if (side == 1) glo *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (lo + hi);
}

// Integral of f over [a, b] by recursive bisection with a 15-point
// Gauss-Legendre rule, accepting an interval when the two-halves estimate
// agrees with the whole-interval estimate within tol.
double gl15(const std::function<double(double)>& f, double a, double b) {
  static const GaussLegendreRule rule = gauss_legendre(15);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return s * half;
}

double adaptive(const std::function<double(double)>& f, double a, double b, double whole, double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gl15(f, a, mid);
  const double right = gl15(f, mid, b);
  const double split = left + right;
  if (depth <= 0 || std::abs(split - whole) <= tol) return split;
  return adaptive(f, a, mid, left, 0.5 * tol, depth - 1) + adaptive(f, mid, b, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  return adaptive(f, a, b, gl15(f, a, b), tol, 40);
}

// Phi(z) - Phi(z - w) for w >= 0, computed from whichever tail keeps both
// terms small.
double normal_interval(double z, double w) {
  constexpr double r2 = std::numbers::sqrt2;
  if (z - 0.5 * w > 0.0) return 0.5 * (std::erfc((z - w) / r2) - std::erfc(z / r2));
  return 0.5 * (std::erfc(-z / r2) - std::erfc(-(z - w) / r2));
}

// CDF of the range of k iid standard normals.
double range_cdf(double w, int k) {
  if (w <= 0.0) return 0.0;
  const auto integrand = [w, k](double z) {
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return phi * std::pow(normal_interval(z, w), k - 1);
  };
  // phi(8.5) ~ 1e-16, so the tails beyond contribute nothing at double
  // precision.
  const double v = static_cast<double>(k) * integrate(integrand, -8.5, 8.5, 1e-11);
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace

GaussLegendreRule gauss_legendre(std::size_t n) {
  if (n < 1) throw Error("Gauss-Legendre rule needs n >= 1");
  GaussLegendreRule r{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n from the Tricomi initial guess.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / static_cast<double>(j);
        p0 = p1;
        p1 = p2;
      }
      // P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      a * std::log(x) + b * std::log1p(-x) - (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("normal quantile needs p in (0, 1)");
  // Acklam's rational approximation (relative error < 1.2e-9) followed by
  // one Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step on Phi(x) - p; for x > 0 that residual is formed as
  // (1 - p) - Q(x) from the upper tail so p close to 1 keeps its precision.
  const double e = x <= 0.0 ? normal_cdf(x) - p : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double f_sf(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error("F distribution needs positive degrees of freedom");
  if (std::isnan(f)) throw NumericError("F statistic is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

double t_sf_two_sided(double t, double df) {
  if (!(df > 0.0)) throw Error("t distribution needs positive degrees of freedom");
  if (std::isnan(t)) throw NumericError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw Error("t quantile needs p in (0, 1)");
  if (p == 0.5) return 0.0;
  const double tail = p > 0.5 ? 1.0 - p : p;  // one-sided tail to match
  auto g = [&](double t) { return tail - 0.5 * t_sf_two_sided(t, df); };  // increasing in t
  double hi = 1.0;
  while (g(hi) < 0.0) hi *= 2.0;
  const double t = solve_increasing(g, 0.0, hi, 1e-15);
  return p > 0.5 ? t : -t;
}

double ptukey(double q, int k, double df) {
  if (k < 2) throw Error("studentized range needs k >= 2");
  if (!(df >= 1.0)) throw Error("studentized range needs df >= 1");
  if (std::isnan(q)) throw NumericError("studentized range statistic is NaN");
  if (q <= 0.0) return 0.0;
  if (std::isinf(q)) return 1.0;
  if (std::isinf(df)) return range_cdf(q, k);

  // s = sqrt(chi2_df / df) has log density below; the range CDF is averaged
  // over it.
  const double log_norm = std::log(2.0) + 0.5 * df * std::log(0.5 * df) - std::lgamma(0.5 * df);
  const auto log_density = [&](double s) { return log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s; };
  const double mode = df > 1.0 ? std::sqrt((df - 1.0) / df) : 0.0;
  const double peak = df > 1.0 ? log_density(mode) : log_norm;
  constexpr double drop = 40.0;  // e^-40 ~ 4e-18 of the peak

  double lo = 0.0;
  if (mode > 0.0 && log_density(mode * 1e-12) < peak - drop) {
    lo = solve_increasing([&](double s) { return log_density(s) - (peak - drop); }, mode * 1e-12, mode, 1e-10);
  }
  double hi = std::max(mode, 1.0);
  while (log_density(hi) > peak - drop) hi *= 2.0;
  const double lower = std::max(mode, 1e-300);
  hi = solve_increasing([&](double s) { return (peak - drop) - log_density(s); }, lower, hi, 1e-10);

  const auto integrand = [&](double s) { return std::exp(log_density(s)) * range_cdf(q * s, k); };
  const double v = integrate(integrand, lo, mode, 1e-10) + integrate(integrand, mode, hi, 1e-10);
  return std::clamp(v, 0.0, 1.0);
}

double qtukey(double p, int k, double df) {
  if (!(p > 0.0 && p < 1.0)) throw Error("studentized range quantile needs p in (0, 1)");
  auto g = [&](double q) { return ptukey(q, k, df) - p; };
  double hi = 2.0;
  while (g(hi) < 0.0) hi *= 2.0;
  return solve_increasing(g, 0.0, hi, 1e-10);
}

}  // namespace wemg::stats
