// AR(1) correlation over irregular standardized time grids.
//
// Gamma_jk = rho^{|s_j - s_k|}. The process is Markov, so the precision is
// tridiagonal and every operation below runs in O(T) off the successive gaps
// d_l = s_{l+1} - s_l. With rho_l = rho^{d_l}:
//   x' Gamma^{-1} y = x_1 y_1 + sum_l (x_{l+1} - rho_l x_l)(y_{l+1} - rho_l y_l) / (1 - rho_l^2)
//   log det Gamma   = sum_l log(1 - rho_l^2)
// rho is restricted to (0, 1): fractional powers of a negative rho are
// undefined on irregular gaps.
#pragma once

#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fgwas/basis.hpp"

namespace fgwas {

// Marginal covariance Sigma = sigma2 * Gamma.
struct Ar1Kernel {
  double rho = 0.5;
  double sigma2 = 1.0;
};

void ar1_validate(double rho);
void ar1_validate(const Ar1Kernel& kernel);

double ar1_quadratic(double rho, std::span<const double> gaps, std::span<const double> x,
                     std::span<const double> y);
double ar1_logdet(double rho, std::span<const double> gaps);

// x := Gamma^{-1} x.
void ar1_solve_inplace(double rho, std::span<const double> gaps, std::span<double> x);

double ar1_quadratic(const Ar1Kernel& kernel, const TimeGrid& grid, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y);
Eigen::MatrixXd ar1_solve(double rho, const TimeGrid& grid, const Eigen::MatrixXd& rhs);

// Dense Gamma and Gamma^{-1}; O(T^2) storage, for small T and inspection.
Eigen::MatrixXd ar1_gamma(double rho, const TimeGrid& grid);
Eigen::MatrixXd ar1_precision(double rho, const TimeGrid& grid);

// Correlated noise by the sequential construction
//   e_1 = sigma z_1,  e_{l+1} = rho_l e_l + sigma sqrt(1 - rho_l^2) z_{l+1}.
std::vector<double> ar1_noise(const Ar1Kernel& kernel, std::span<const double> gaps,
                              std::mt19937_64& rng);

}  // namespace fgwas
