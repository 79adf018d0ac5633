#include "fgwas/ar1.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fgwas {

void ar1_validate(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) {
    std::ostringstream os;
    os << "ar1: rho = " << rho << " outside (0, 1)";
    throw std::domain_error(os.str());
  }
}

void ar1_validate(const Ar1Kernel& kernel) {
  ar1_validate(kernel.rho);
  if (!(kernel.sigma2 > 0.0)) throw std::domain_error("ar1: sigma2 must be positive");
}

namespace {

void check_gaps(std::span<const double> gaps) {
  for (double d : gaps)
    if (!(d > 0.0)) throw std::invalid_argument("ar1: gaps must be positive");
}

}  // namespace

double ar1_quadratic(double rho, std::span<const double> gaps, std::span<const double> x,
                     std::span<const double> y) {
  ar1_validate(rho);
  check_gaps(gaps);
  const std::size_t T = x.size();
  if (y.size() != T || T == 0 || gaps.size() + 1 != T)
    throw std::invalid_argument("ar1_quadratic: size mismatch");
  double acc = x[0] * y[0];
  for (std::size_t l = 0; l + 1 < T; ++l) {
    const double r = std::pow(rho, gaps[l]);
    acc += (x[l + 1] - r * x[l]) * (y[l + 1] - r * y[l]) / (1.0 - r * r);
  }
  return acc;
}

double ar1_logdet(double rho, std::span<const double> gaps) {
  ar1_validate(rho);
  check_gaps(gaps);
  double acc = 0.0;
  for (double d : gaps) {
    const double r = std::pow(rho, d);
    acc += std::log1p(-r * r);
  }
  return acc;
}

void ar1_solve_inplace(double rho, std::span<const double> gaps, std::span<double> x) {
  ar1_validate(rho);
  check_gaps(gaps);
  const std::size_t T = x.size();
  if (T == 0 || gaps.size() + 1 != T) throw std::invalid_argument("ar1_solve: size mismatch");
  if (T == 1) return;  // Gamma = [1]

  // Gamma^{-1} = L' L with L the whitening map: (Lx)_1 = x_1,
  // (Lx)_{l+1} = (x_{l+1} - rho_l x_l) / sqrt(1 - rho_l^2).
  std::vector<double> c(T - 1);
  double prev = x[0];
  for (std::size_t l = 0; l + 1 < T; ++l) {
    const double r = std::pow(rho, gaps[l]);
    c[l] = std::sqrt(1.0 - r * r);
    const double cur = x[l + 1];
    x[l + 1] = (cur - r * prev) / c[l];
    prev = cur;
  }
  for (std::size_t l = 0; l < T; ++l) {
    const double diag = (l == 0) ? 1.0 : 1.0 / c[l - 1];
    double v = diag * x[l];
    if (l + 1 < T) {
      const double r = std::pow(rho, gaps[l]);
      v -= r / c[l] * x[l + 1];
    }
    x[l] = v;
  }
}

double ar1_quadratic(const Ar1Kernel& kernel, const TimeGrid& grid, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y) {
  const auto gaps = grid.gaps();
  return ar1_quadratic(kernel.rho, gaps, {x.data(), static_cast<std::size_t>(x.size())},
                       {y.data(), static_cast<std::size_t>(y.size())});
}

Eigen::MatrixXd ar1_solve(double rho, const TimeGrid& grid, const Eigen::MatrixXd& rhs) {
  if (rhs.rows() != grid.size()) throw std::invalid_argument("ar1_solve: size mismatch");
  const auto gaps = grid.gaps();
  Eigen::MatrixXd out = rhs;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    ar1_solve_inplace(rho, gaps, {out.col(j).data(), static_cast<std::size_t>(out.rows())});
  return out;
}

Eigen::MatrixXd ar1_gamma(double rho, const TimeGrid& grid) {
  ar1_validate(rho);
  const int T = grid.size();
  Eigen::MatrixXd g(T, T);
  for (int j = 0; j < T; ++j)
    for (int k = 0; k < T; ++k) g(j, k) = std::pow(rho, std::abs(grid.s[j] - grid.s[k]));
  return g;
}

Eigen::MatrixXd ar1_precision(double rho, const TimeGrid& grid) {
  ar1_validate(rho);
  const int T = grid.size();
  const auto gaps = grid.gaps();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(T, T);
  if (T == 1) {
    p(0, 0) = 1.0;
    return p;
  }
  std::vector<double> r(T - 1), q(T - 1);
  for (int l = 0; l + 1 < T; ++l) {
    r[l] = std::pow(rho, gaps[l]);
    q[l] = 1.0 - r[l] * r[l];
  }
  for (int l = 0; l < T; ++l) {
    double d = (l == 0) ? 1.0 : 1.0 / q[l - 1];
    if (l + 1 < T) d += r[l] * r[l] / q[l];
    p(l, l) = d;
    if (l + 1 < T) {
      p(l, l + 1) = -r[l] / q[l];
      p(l + 1, l) = p(l, l + 1);
    }
  }
  return p;
}

std::vector<double> ar1_noise(const Ar1Kernel& kernel, std::span<const double> gaps,
                              std::mt19937_64& rng) {
  ar1_validate(kernel);
  check_gaps(gaps);
  const std::size_t T = gaps.size() + 1;
  const double sigma = std::sqrt(kernel.sigma2);
  std::normal_distribution<double> z;
  std::vector<double> e(T);
  e[0] = sigma * z(rng);
  for (std::size_t l = 0; l + 1 < T; ++l) {
    const double r = std::pow(kernel.rho, gaps[l]);
    e[l + 1] = r * e[l] + sigma * std::sqrt(1.0 - r * r) * z(rng);
  }
  return e;
}

}  // namespace fgwas
