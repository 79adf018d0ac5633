#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fgwas/model.hpp"
#include "fgwas/simgen.hpp"
#include "test_util.hpp"

using namespace fgwas;

namespace {

LongitudinalDataset small_data(int n = 15, int p = 6, std::uint64_t seed = 3) {
  SimDesign design = SimDesign::desk_default();
  design.n = n;
  design.p = p;
  design.truth = TruthTable::cubic_default(p);
  return simulate_dataset(design, seed).data;
}

ParameterState random_state(int order, int q, int p, std::uint64_t seed) {
  ParameterState s = ParameterState::zeros(order, q, p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (Eigen::Index k = 0; k < s.m.size(); ++k) s.m(k) = normal(rng);
  for (Eigen::Index a = 0; a < s.r.size(); ++a) s.r.data()[a] = normal(rng);
  for (Eigen::Index a = 0; a < s.b.size(); ++a) s.b.data()[a] = 0.5 * normal(rng);
  for (Eigen::Index a = 0; a < s.c.size(); ++a) s.c.data()[a] = 0.5 * normal(rng);
  s.sigma2 = 2.3;
  s.rho = 0.45;
  return s;
}

}  // namespace

TEST_CASE("population mean curve hits 9.00 at the right edge") {
  const TruthTable t = TruthTable::cubic_default(5);
  const Eigen::RowVectorXd row = legendre_row(1.0, 4);
  CHECK(row.dot(t.m) == doctest::Approx(13.40 - 3.08 + 1.88 - 3.20).epsilon(1e-12));
  CHECK(row.dot(t.m) == doctest::Approx(9.00).epsilon(1e-12));
}

TEST_CASE("coefficient totals sum the genotype-weighted blocks") {
  const auto data = small_data();
  const int v = 4;
  const auto s = random_state(v, data.q, data.p(), 11);

  for (int i = 0; i < data.n(); ++i) {
    Eigen::VectorXd ref = s.m;
    for (int k = 0; k < data.q; ++k) ref += data.subjects[i].x(k) * s.r.row(k).transpose();
    for (int j = 0; j < data.p(); ++j) {
      ref += static_cast<double>(data.geno.xi(i, j)) * s.b.row(j).transpose();
      ref += static_cast<double>(data.geno.zeta(i, j)) * s.c.row(j).transpose();
    }
    const Eigen::VectorXd got = coefficient_total(s, data, i);
    CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("partial residual removes every term except the block") {
  const auto data = small_data();
  const int v = 4;
  const auto s = random_state(v, data.q, data.p(), 23);
  const auto design = DesignMatrices::build(data, v);

  const std::vector<BlockRef> blocks = {
      {BlockKind::Mean, 0},     {BlockKind::Covariate, 0}, {BlockKind::Additive, 0},
      {BlockKind::Additive, 4}, {BlockKind::Dominant, 2},  {BlockKind::Dominant, 5}};

  for (int i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd mu = mean_vector(s, data, design, i);
    CHECK((mu - design.U[i] * coefficient_total(s, data, i)).cwiseAbs().maxCoeff() < 1e-12);

    for (const auto& blk : blocks) {
      double wt = 1.0;
      Eigen::VectorXd coef;
      switch (blk.kind) {
        case BlockKind::Mean: coef = s.m; break;
        case BlockKind::Covariate:
          coef = s.r.row(blk.index).transpose();
          wt = data.subjects[i].x(blk.index);
          break;
        case BlockKind::Additive:
          coef = s.b.row(blk.index).transpose();
          wt = static_cast<double>(data.geno.xi(i, blk.index));
          break;
        case BlockKind::Dominant:
          coef = s.c.row(blk.index).transpose();
          wt = static_cast<double>(data.geno.zeta(i, blk.index));
          break;
      }
      const Eigen::VectorXd pr = partial_residual(s, data, design, i, blk);
      const Eigen::VectorXd ref = data.subjects[i].y - mu + wt * (design.U[i] * coef);
      CHECK((pr - ref).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("log likelihood matches the dense multivariate normal") {
  const auto data = small_data(10, 5, 9);
  const int v = 4;
  const auto s = random_state(v, data.q, data.p(), 31);
  const auto design = DesignMatrices::build(data, v);

  double ref = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd e = data.subjects[i].y - mean_vector(s, data, design, i);
    const Eigen::MatrixXd G = testutil::dense_gamma(s.rho, data.subjects[i].grid.s);
    const Eigen::LLT<Eigen::MatrixXd> llt(G);
    const int T = data.subjects[i].grid.size();
    double logdet = 0.0;
    for (int l = 0; l < T; ++l) logdet += 2.0 * std::log(llt.matrixL()(l, l));
    const double quad = e.dot(llt.solve(e));
    ref += -0.5 * T * std::log(2.0 * M_PI * s.sigma2) - 0.5 * logdet - quad / (2.0 * s.sigma2);
  }
  CHECK(log_likelihood(s, data, design) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("state validation rejects broken shapes and scales") {
  const auto data = small_data();
  auto s = random_state(4, data.q, data.p(), 41);
  CHECK_NOTHROW(validate_state(s, data.q, data.p()));

  auto bad = s;
  bad.sigma2 = -1.0;
  CHECK_THROWS(validate_state(bad, data.q, data.p()));
  bad = s;
  bad.rho = 1.0;
  CHECK_THROWS(validate_state(bad, data.q, data.p()));
  bad = s;
  bad.b.conservativeResize(data.p() - 1, 4);
  CHECK_THROWS(validate_state(bad, data.q, data.p()));
  bad = s;
  bad.tau2(0) = 0.0;
  CHECK_THROWS(validate_state(bad, data.q, data.p()));
}
