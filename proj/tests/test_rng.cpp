#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/distributions/gamma.hpp>

#include "fgwas/rng.hpp"
#include "test_util.hpp"

using namespace fgwas;

TEST_CASE("stream determinism and decorrelation") {
  auto a1 = make_stream(7, 3);
  auto a2 = make_stream(7, 3);
  CHECK(a1() == a2());
  CHECK(a1() == a2());

  auto b = make_stream(7, 4);
  auto c = make_stream(8, 3);
  int agree_b = 0, agree_c = 0;
  auto a3 = make_stream(7, 3);
  for (int i = 0; i < 64; ++i) {
    const auto x = a3();
    agree_b += x == b();
    agree_c += x == c();
  }
  CHECK(agree_b == 0);
  CHECK(agree_c == 0);
}

TEST_CASE("inverse gaussian moments") {
  // mean mu, variance mu^3 / lambda; 1e6 draws, 4 MC standard errors.
  auto rng = make_stream(11, 0);
  const int N = 1000000;
  for (const auto& [mu, lambda] : {std::pair{1.0, 1.0}, {3.0, 2.0}, {0.5, 8.0}, {20.0, 1.5}}) {
    std::vector<double> x(N);
    for (double& v : x) v = draw_inverse_gaussian(mu, lambda, rng);
    const double m = testutil::mean_of(x);
    const double var = testutil::var_of(x);
    const double true_var = mu * mu * mu / lambda;
    const double se_mean = std::sqrt(true_var / N);
    CHECK(std::abs(m - mu) < 4 * se_mean);
    // SE of the sample variance from the empirical fourth moment.
    double m4 = 0.0;
    for (double v : x) m4 += std::pow(v - m, 4);
    m4 /= N;
    const double se_var = std::sqrt((m4 - var * var) / N);
    CHECK(std::abs(var - true_var) < 4 * se_var);
  }
}

TEST_CASE("inverse gaussian against reciprocal identity") {
  // X ~ IG(mu, lambda) has E[1/X] = 1/mu + 1/lambda.
  auto rng = make_stream(13, 0);
  const int N = 500000;
  const double mu = 2.5, lambda = 4.0;
  double s = 0.0;
  for (int i = 0; i < N; ++i) s += 1.0 / draw_inverse_gaussian(mu, lambda, rng);
  const double expect = 1.0 / mu + 1.0 / lambda;
  CHECK(s / N == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("gamma rate parametrization") {
  auto rng = make_stream(17, 0);
  const int N = 400000;
  const double shape = 3.5, rate = 0.25;
  std::vector<double> x(N);
  for (double& v : x) v = draw_gamma_rate(shape, rate, rng);
  CHECK(testutil::mean_of(x) == doctest::Approx(shape / rate).epsilon(0.01));
  CHECK(testutil::var_of(x) == doctest::Approx(shape / (rate * rate)).epsilon(0.02));

  boost::math::gamma_distribution<double> ref(shape, 1.0 / rate);
  const double p =
      testutil::ks_test(std::move(x), [&](double t) { return boost::math::cdf(ref, t); });
  CHECK(p > 1e-4);
}

TEST_CASE("scaled inverse chi-squared moments") {
  // mean nu s2 / (nu - 2).
  auto rng = make_stream(19, 0);
  const int N = 400000;
  const double nu = 10.0, s2 = 3.0;
  std::vector<double> x(N);
  for (double& v : x) v = draw_scaled_inv_chisq(nu, s2, rng);
  CHECK(testutil::mean_of(x) == doctest::Approx(nu * s2 / (nu - 2.0)).epsilon(0.01));
}

TEST_CASE("mvn precision draw moments") {
  auto rng = make_stream(23, 0);
  Eigen::MatrixXd prec(2, 2);
  prec << 4.0, 1.0, 1.0, 2.0;
  Eigen::VectorXd h(2);
  h << 2.0, -1.0;
  const Eigen::MatrixXd cov = prec.inverse();
  const Eigen::VectorXd mean = cov * h;

  const int N = 200000;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd x = draw_mvn_precision(prec, h, rng);
    s += x;
    ss += x * x.transpose();
  }
  const Eigen::VectorXd m = s / N;
  const Eigen::MatrixXd c = ss / N - m * m.transpose();
  CHECK(m(0) == doctest::Approx(mean(0)).epsilon(0.02));
  CHECK(m(1) == doctest::Approx(mean(1)).epsilon(0.05));
  CHECK(c(0, 0) == doctest::Approx(cov(0, 0)).epsilon(0.03));
  CHECK(c(1, 1) == doctest::Approx(cov(1, 1)).epsilon(0.03));
  CHECK(c(0, 1) == doctest::Approx(cov(0, 1)).epsilon(0.06));
}
