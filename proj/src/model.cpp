#include "fgwas/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fgwas {

ParameterState ParameterState::zeros(int order, int q, int p) {
  ParameterState s;
  s.m = Eigen::VectorXd::Zero(order);
  s.r = RowMatrixXd::Zero(q, order);
  s.b = RowMatrixXd::Zero(p, order);
  s.c = RowMatrixXd::Zero(p, order);
  s.tau2 = Eigen::VectorXd::Ones(p);
  s.tau2_star = Eigen::VectorXd::Ones(p);
  return s;
}

void validate_state(const ParameterState& state, int q, int p) {
  const int v = state.order();
  if (v < 1 || v > 8) throw std::invalid_argument("state: basis order outside 1..8");
  if (state.r.rows() != q || state.r.cols() != v) throw std::invalid_argument("state: r shape");
  if (state.b.rows() != p || state.b.cols() != v) throw std::invalid_argument("state: b shape");
  if (state.c.rows() != p || state.c.cols() != v) throw std::invalid_argument("state: c shape");
  if (state.tau2.size() != p || state.tau2_star.size() != p)
    throw std::invalid_argument("state: tau2 length");
  for (int j = 0; j < p; ++j)
    if (!(state.tau2(j) > 0.0) || !(state.tau2_star(j) > 0.0))
      throw std::invalid_argument("state: tau2 must be positive");
  if (!(state.lambda2 > 0.0) || !(state.lambda2_star > 0.0))
    throw std::invalid_argument("state: lambda2 must be positive");
  if (!(state.sigma2 > 0.0)) throw std::invalid_argument("state: sigma2 must be positive");
  ar1_validate(state.rho);
}

DesignMatrices DesignMatrices::build(const LongitudinalDataset& data, int order) {
  DesignMatrices d;
  d.order = order;
  d.U.reserve(data.n());
  for (const auto& s : data.subjects) d.U.push_back(legendre_design(s.grid, order).U);
  return d;
}

Eigen::VectorXd coefficient_total(const ParameterState& state, const LongitudinalDataset& data,
                                  int i) {
  Eigen::VectorXd theta = state.m;
  const auto& subj = data.subjects[i];
  for (int k = 0; k < data.q; ++k) theta += subj.x(k) * state.r.row(k).transpose();
  for (int j = 0; j < data.p(); ++j) {
    const int xi = data.geno.xi(i, j);
    if (xi != 0) theta += static_cast<double>(xi) * state.b.row(j).transpose();
    if (data.geno.zeta(i, j) != 0) theta += state.c.row(j).transpose();
  }
  return theta;
}

Eigen::VectorXd mean_vector(const ParameterState& state, const LongitudinalDataset& data,
                            const DesignMatrices& design, int i) {
  return design.U[i] * coefficient_total(state, data, i);
}

Eigen::VectorXd partial_residual(const ParameterState& state, const LongitudinalDataset& data,
                                 const DesignMatrices& design, int i, const BlockRef& block) {
  Eigen::VectorXd theta = coefficient_total(state, data, i);
  switch (block.kind) {
    case BlockKind::Mean:
      theta -= state.m;
      break;
    case BlockKind::Covariate:
      theta -= data.subjects[i].x(block.index) * state.r.row(block.index).transpose();
      break;
    case BlockKind::Additive:
      theta -= static_cast<double>(data.geno.xi(i, block.index)) *
               state.b.row(block.index).transpose();
      break;
    case BlockKind::Dominant:
      theta -= static_cast<double>(data.geno.zeta(i, block.index)) *
               state.c.row(block.index).transpose();
      break;
  }
  return data.subjects[i].y - design.U[i] * theta;
}

double log_likelihood(const ParameterState& state, const LongitudinalDataset& data,
                      const DesignMatrices& design) {
  double ll = 0.0;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  for (int i = 0; i < data.n(); ++i) {
    const auto& subj = data.subjects[i];
    const Eigen::VectorXd e = subj.y - mean_vector(state, data, design, i);
    const auto gaps = subj.grid.gaps();
    const std::size_t T = static_cast<std::size_t>(e.size());
    const double quad = ar1_quadratic(state.rho, gaps, {e.data(), T}, {e.data(), T});
    ll += -0.5 * T * (log2pi + std::log(state.sigma2)) - 0.5 * ar1_logdet(state.rho, gaps) -
          quad / (2.0 * state.sigma2);
  }
  return ll;
}

}  // namespace fgwas
