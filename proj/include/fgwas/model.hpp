// Varying-coefficient model state and reference per-subject operations.
//
// Subject mean: mu_i = U_i m + sum_k X_ik U_i r_k + sum_j xi_ij U_i b_j
//                            + sum_j zeta_ij U_i c_j,
// residual covariance sigma2 * Gamma_i with AR(1) Gamma_i over the subject's
// standardized grid. These routines are the plain, uncached evaluation path;
// the sampler keeps its own incremental caches and is tested against them.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fgwas/ar1.hpp"
#include "fgwas/data.hpp"

namespace fgwas {

// Row-major so a block (row) is contiguous for the sampler kernels.
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ParameterState {
  Eigen::VectorXd m;          // v
  RowMatrixXd r;              // q x v, row k = r_k
  RowMatrixXd b;              // p x v, row j = additive block b_j
  RowMatrixXd c;              // p x v, row j = dominant block c_j
  Eigen::VectorXd tau2;       // p additive group scales
  Eigen::VectorXd tau2_star;  // p dominant group scales
  double lambda2 = 1.0;
  double lambda2_star = 1.0;
  double sigma2 = 1.0;
  double rho = 0.5;

  int order() const { return static_cast<int>(m.size()); }
  static ParameterState zeros(int order, int q, int p);
};

void validate_state(const ParameterState& state, int q, int p);

// Per-subject Legendre designs for one basis order.
struct DesignMatrices {
  int order = 0;
  std::vector<Eigen::MatrixXd> U;

  static DesignMatrices build(const LongitudinalDataset& data, int order);
};

enum class BlockKind { Mean, Covariate, Additive, Dominant };

struct BlockRef {
  BlockKind kind = BlockKind::Mean;
  int index = 0;  // covariate k or SNP j; ignored for Mean
};

// Sum of all block coefficients as seen by subject i:
// theta_i = m + sum_k X_ik r_k + sum_j xi_ij b_j + sum_j zeta_ij c_j.
Eigen::VectorXd coefficient_total(const ParameterState& state, const LongitudinalDataset& data,
                                  int i);

Eigen::VectorXd mean_vector(const ParameterState& state, const LongitudinalDataset& data,
                            const DesignMatrices& design, int i);

// y_i minus every mean term except `block`: the working response for that
// block's conditional draw.
Eigen::VectorXd partial_residual(const ParameterState& state, const LongitudinalDataset& data,
                                 const DesignMatrices& design, int i, const BlockRef& block);

// Gaussian log density of the full dataset at `state`:
// sum_i [ -T_i/2 log(2 pi sigma2) - 1/2 log|Gamma_i| - e_i' Gamma_i^{-1} e_i / (2 sigma2) ].
double log_likelihood(const ParameterState& state, const LongitudinalDataset& data,
                      const DesignMatrices& design);

}  // namespace fgwas
