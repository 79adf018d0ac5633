#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "fgwas/ar1.hpp"
#include "test_util.hpp"

using namespace fgwas;

namespace {

TimeGrid grid_from(const std::vector<double>& s) {
  TimeGrid g;
  g.s = s;
  g.raw = s;
  g.range = {-1.0, 1.0};
  return g;
}

}  // namespace

TEST_CASE("frozen two-point example") {
  // s = (0, 0.5), rho = 0.5: r = sqrt(0.5), Gamma = [[1, r], [r, 1]].
  // x = (1, 1): quad = x' Gamma^{-1} x = 2 / (1 + r) = 4 - 2 sqrt(2),
  // logdet = log(1 - 1/2), solve = (1/(1+r), 1/(1+r)).
  const std::vector<double> gaps{0.5};
  const std::vector<double> x{1.0, 1.0};
  const double r = std::sqrt(0.5);
  CHECK(ar1_quadratic(0.5, gaps, x, x) == doctest::Approx(2.0 / (1.0 + r)).epsilon(1e-12));
  CHECK(ar1_logdet(0.5, gaps) == doctest::Approx(std::log(0.5)).epsilon(1e-12));

  auto g = grid_from({0.0, 0.5});
  Eigen::VectorXd rhs(2);
  rhs << 1.0, 1.0;
  const Eigen::VectorXd sol = ar1_solve(0.5, g, rhs);
  CHECK(sol(0) == doctest::Approx(1.0 / (1.0 + r)).epsilon(1e-12));
  CHECK(sol(1) == doctest::Approx(1.0 / (1.0 + r)).epsilon(1e-12));
}

TEST_CASE("equal unit gaps frozen values") {
  // T = 3, gaps (1, 1), rho = 0.5; dense oracle computed by hand:
  // Gamma = [[1,.5,.25],[.5,1,.5],[.25,.5,1]], logdet = 2 log(0.75).
  const std::vector<double> gaps{1.0, 1.0};
  CHECK(ar1_logdet(0.5, gaps) == doctest::Approx(2.0 * std::log(0.75)).epsilon(1e-12));
  // x = (1, 0, 1): whitened z = (1, -2/3, 1.2/ sqrt? ) use closed form:
  // quad = x1^2 + sum (x_{l+1} - r x_l)^2 / (1 - r^2) with r = 0.5:
  //      = 1 + (0 - .5)^2/.75 + (1 - 0)^2/.75 = 1 + 1/3 + 4/3 = 8/3.
  const std::vector<double> x{1.0, 0.0, 1.0};
  CHECK(ar1_quadratic(0.5, gaps, x, x) == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("random instances match dense oracles") {
  std::mt19937_64 rng(991);
  std::uniform_real_distribution<double> rho_dist(0.02, 0.98);
  std::uniform_int_distribution<int> T_dist(1, 12);
  std::normal_distribution<double> normal;

  for (int rep = 0; rep < 400; ++rep) {
    const int T = T_dist(rng);
    const double rho = rho_dist(rng);
    const auto s = testutil::random_grid(T, rng);
    const auto gaps = testutil::gaps_of(s);
    const Eigen::MatrixXd Gd = testutil::dense_gamma(rho, s);

    Eigen::VectorXd x(T), y(T);
    for (int l = 0; l < T; ++l) {
      x(l) = normal(rng);
      y(l) = normal(rng);
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(Gd);
    REQUIRE(llt.info() == Eigen::Success);

    const std::vector<double> xv(x.data(), x.data() + T), yv(y.data(), y.data() + T);
    const double quad_ref = x.dot(llt.solve(y));
    CHECK(ar1_quadratic(rho, gaps, xv, yv) == doctest::Approx(quad_ref).epsilon(1e-10));

    const double logdet_ref = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    CHECK(ar1_logdet(rho, gaps) - logdet_ref == doctest::Approx(0.0).epsilon(1e-10));

    auto g = grid_from(s);
    const Eigen::VectorXd sol = ar1_solve(rho, g, x);
    const Eigen::VectorXd sol_ref = llt.solve(x);
    for (int l = 0; l < T; ++l) CHECK(sol(l) == doctest::Approx(sol_ref(l)).epsilon(1e-9));

    // Dense builders agree with each other: precision * gamma = I.
    const Eigen::MatrixXd P = ar1_precision(rho, g);
    const Eigen::MatrixXd I = P * ar1_gamma(rho, g);
    CHECK((I - Eigen::MatrixXd::Identity(T, T)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("single point degenerates to identity") {
  auto g = grid_from({0.3});
  Eigen::VectorXd x(1);
  x << 2.5;
  CHECK(ar1_solve(0.7, g, x)(0) == doctest::Approx(2.5));
  const std::vector<double> no_gaps;
  const std::vector<double> x1{2.0}, y1{3.0};
  CHECK(ar1_logdet(0.7, no_gaps) == doctest::Approx(0.0));
  CHECK(ar1_quadratic(0.7, no_gaps, x1, y1) == doctest::Approx(6.0));
}

TEST_CASE("rho validation") {
  CHECK_THROWS(ar1_validate(0.0));
  CHECK_THROWS(ar1_validate(1.0));
  CHECK_THROWS(ar1_validate(-0.2));
  CHECK_NOTHROW(ar1_validate(0.5));
  CHECK_THROWS(ar1_validate(Ar1Kernel{0.5, -1.0}));
}

TEST_CASE("sequential noise has the AR(1) covariance") {
  // Two-point grid: corr(e_1, e_2) = rho^gap, both variances sigma^2.
  std::mt19937_64 rng(4242);
  Ar1Kernel k{0.6, 2.0};
  const std::vector<double> gaps{0.8};
  const int N = 200000;
  double s11 = 0, s22 = 0, s12 = 0;
  for (int i = 0; i < N; ++i) {
    const auto e = ar1_noise(k, gaps, rng);
    s11 += e[0] * e[0];
    s22 += e[1] * e[1];
    s12 += e[0] * e[1];
  }
  const double r = std::pow(0.6, 0.8);
  CHECK(s11 / N == doctest::Approx(2.0).epsilon(0.02));
  CHECK(s22 / N == doctest::Approx(2.0).epsilon(0.02));
  CHECK(s12 / N == doctest::Approx(2.0 * r).epsilon(0.03));
}
