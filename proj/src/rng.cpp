#include "fgwas/rng.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace fgwas {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (stream_id + 1));
  std::uint64_t init[4];
  for (auto& w : init) w = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(init[0]), static_cast<std::uint32_t>(init[0] >> 32),
                    static_cast<std::uint32_t>(init[1]), static_cast<std::uint32_t>(init[1] >> 32),
                    static_cast<std::uint32_t>(init[2]), static_cast<std::uint32_t>(init[2] >> 32),
                    static_cast<std::uint32_t>(init[3]), static_cast<std::uint32_t>(init[3] >> 32)};
  return std::mt19937_64(seq);
}

double draw_inverse_gaussian(double mu, double lambda, std::mt19937_64& rng) {
  if (!(mu > 0.0) || !(lambda > 0.0))
    throw std::domain_error("inverse_gaussian: mu and lambda must be positive");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double z = normal(rng);
  const double w = mu * z * z;
  // x = mu (1 + (w - sqrt(w (4 lambda + w))) / (2 lambda)) <= mu.
  double x = mu * (1.0 + (w - std::sqrt(w * (4.0 * lambda + w))) / (2.0 * lambda));
  if (!(x > 0.0)) x = std::numeric_limits<double>::min();  // cancellation at huge w
  return (unif(rng) <= mu / (mu + x)) ? x : mu * mu / x;
}

double draw_scaled_inv_chisq(double nu, double s2, std::mt19937_64& rng) {
  if (!(nu > 0.0) || !(s2 > 0.0))
    throw std::domain_error("scaled_inv_chisq: nu and s2 must be positive");
  std::gamma_distribution<double> chi2(nu / 2.0, 2.0);
  double d = chi2(rng);
  if (!(d > 0.0)) d = std::numeric_limits<double>::min();
  return nu * s2 / d;
}

double draw_gamma_rate(double shape, double rate, std::mt19937_64& rng) {
  if (!(shape > 0.0) || !(rate > 0.0))
    throw std::domain_error("gamma: shape and rate must be positive");
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  return g(rng);
}

Eigen::VectorXd draw_mvn_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& h,
                                   std::mt19937_64& rng) {
  const Eigen::Index d = precision.rows();
  if (precision.cols() != d || h.size() != d)
    throw std::invalid_argument("draw_mvn_precision: shape mismatch");

  Eigen::LLT<Eigen::MatrixXd> llt;
  const double scale = precision.diagonal().maxCoeff();
  double jitter = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    llt.compute(attempt == 0 ? precision
                             : (precision + jitter * Eigen::MatrixXd::Identity(d, d)).eval());
    if (llt.info() == Eigen::Success) break;
    jitter = scale * ((attempt == 0) ? 1e-10 : (attempt == 1) ? 1e-8 : 1e-6);
    if (attempt == 3)
      throw std::runtime_error("draw_mvn_precision: precision not positive definite");
  }

  const Eigen::VectorXd mean = llt.solve(h);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
  // x = mean + L^{-T} z has covariance P^{-1}.
  llt.matrixU().solveInPlace(z);
  return mean + z;
}

}  // namespace fgwas
