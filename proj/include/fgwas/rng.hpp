// RNG stream derivation and the non-standard samplers the Gibbs updates need.
#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace fgwas {

// splitmix64 step; used to derive independent stream seeds from (seed, id).
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic sub-stream: same (seed, stream_id) always yields the same
// generator, distinct ids yield decorrelated ones.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream_id);

// Inverse-Gaussian(mean mu, shape lambda) by transformation with a root
// choice (Michael, Schucany & Haas). mu, lambda > 0.
double draw_inverse_gaussian(double mu, double lambda, std::mt19937_64& rng);

// Scaled-Inv-chi^2(nu, s2) = nu s2 / chi^2_nu.
double draw_scaled_inv_chisq(double nu, double s2, std::mt19937_64& rng);

// Gamma with a rate (not scale) parameter.
double draw_gamma_rate(double shape, double rate, std::mt19937_64& rng);

// N(mean, P^{-1}) given precision P and linear term h = P mean: Cholesky
// P = LL', mean from two triangular solves, draw mean + L^{-T} z. Retries
// with diagonal jitter (1e-10, 1e-8, 1e-6 of max diagonal) before throwing.
Eigen::VectorXd draw_mvn_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& h,
                                   std::mt19937_64& rng);

}  // namespace fgwas
