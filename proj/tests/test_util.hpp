// Shared oracles and statistical helpers for the test suite.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace testutil {

// Dense AR(1) covariance over standardized points: Gamma_jk = rho^|s_j - s_k|.
inline Eigen::MatrixXd dense_gamma(double rho, const std::vector<double>& s) {
  const int T = static_cast<int>(s.size());
  Eigen::MatrixXd G(T, T);
  for (int j = 0; j < T; ++j)
    for (int k = 0; k < T; ++k) G(j, k) = std::pow(rho, std::abs(s[j] - s[k]));
  return G;
}

// Closed-form Legendre values P_0..P_7.
inline double legendre_ref(int k, double x) {
  const double x2 = x * x;
  switch (k) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return 0.5 * (3 * x2 - 1);
    case 3: return 0.5 * x * (5 * x2 - 3);
    case 4: return 0.125 * (35 * x2 * x2 - 30 * x2 + 3);
    case 5: return 0.125 * x * (63 * x2 * x2 - 70 * x2 + 15);
    case 6: return 0.0625 * (231 * x2 * x2 * x2 - 315 * x2 * x2 + 105 * x2 - 5);
    case 7: return 0.0625 * x * (429 * x2 * x2 * x2 - 693 * x2 * x2 + 315 * x2 - 35);
    default: throw std::invalid_argument("legendre_ref: k > 7");
  }
}

// Kolmogorov tail Q(t) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2).
inline double kolmogorov_q(double t) {
  if (t < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, sum));
}

// One-sample KS p-value against a CDF, Stephens' small-sample correction.
inline double ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return kolmogorov_q((std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d);
}

// Two-sample KS p-value.
inline double ks2_test(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
}

inline double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// Random strictly increasing grid in [-1, 1] with T points.
inline std::vector<double> random_grid(int T, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> s(T);
  for (double& v : s) v = unif(rng);
  std::sort(s.begin(), s.end());
  for (int l = 1; l < T; ++l)
    if (s[l] - s[l - 1] < 1e-4) s[l] = s[l - 1] + 1e-4;
  return s;
}

inline std::vector<double> gaps_of(const std::vector<double>& s) {
  std::vector<double> g;
  for (std::size_t l = 1; l < s.size(); ++l) g.push_back(s[l] - s[l - 1]);
  return g;
}

}  // namespace testutil
