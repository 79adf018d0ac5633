#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fgwas/ar1.hpp"
#include "fgwas/kernels.hpp"
#include "fgwas/model.hpp"
#include "fgwas/parallel.hpp"
#include "fgwas/simgen.hpp"
#include "test_util.hpp"

using namespace fgwas;
namespace kn = fgwas::kernels;

namespace {

struct Fixture {
  LongitudinalDataset data;
  kn::PackedDesign d;
  kn::Workspace ws;
  ParameterState state;

  explicit Fixture(int n = 40, int p = 12, int order = 4, std::uint64_t seed = 5) {
    SimDesign design = SimDesign::desk_default();
    design.n = n;
    design.p = p;
    design.truth = TruthTable::cubic_default(p);
    data = simulate_dataset(design, seed).data;
    d = kn::PackedDesign::build(data, order);
    ws.allocate(d);
    state = ParameterState::zeros(order, data.q, p);
    std::mt19937_64 rng(seed * 31 + 7);
    std::normal_distribution<double> normal;
    for (Eigen::Index k = 0; k < state.m.size(); ++k) state.m(k) = normal(rng);
    for (Eigen::Index a = 0; a < state.r.size(); ++a) state.r.data()[a] = normal(rng);
    for (Eigen::Index a = 0; a < state.b.size(); ++a) state.b.data()[a] = 0.3 * normal(rng);
    for (Eigen::Index a = 0; a < state.c.size(); ++a) state.c.data()[a] = 0.3 * normal(rng);
  }
};

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, rel_diff(a[i], b[i]));
  return m;
}

}  // namespace

TEST_CASE("gamma caches match the dense oracle") {
  Fixture f;
  const double rho = 0.37;
  kn::build_gamma_caches(f.d, rho, f.ws);

  for (int i = 0; i < f.d.n; ++i) {
    const auto& grid = f.data.subjects[i].grid;
    const int T = grid.size();
    const Eigen::MatrixXd Gd = testutil::dense_gamma(rho, grid.s);
    Eigen::MatrixXd U(T, f.d.v);
    for (int l = 0; l < T; ++l)
      for (int k = 0; k < f.d.v; ++k) U(l, k) = f.d.U[(f.d.off[i] + l) * f.d.v + k];

    const Eigen::MatrixXd W_ref = Gd.llt().solve(U);
    const Eigen::MatrixXd G_ref = U.transpose() * W_ref;
    for (int l = 0; l < T; ++l)
      for (int k = 0; k < f.d.v; ++k)
        CHECK(rel_diff(f.ws.W[(f.d.off[i] + l) * f.d.v + k], W_ref(l, k)) < 1e-10);
    for (int a = 0; a < f.d.v; ++a)
      for (int bb = 0; bb < f.d.v; ++bb)
        CHECK(rel_diff(f.ws.G[static_cast<long>(i) * f.d.v * f.d.v + a * f.d.v + bb],
                       G_ref(a, bb)) < 1e-10);
  }
}

TEST_CASE("block grams sum the right subjects") {
  Fixture f;
  kn::build_gamma_caches(f.d, 0.52, f.ws);
  kn::build_block_grams(f.d, f.ws);
  const int vv = f.d.v * f.d.v;

  for (int j = 0; j < f.d.p; ++j) {
    std::vector<double> ab(vv, 0.0), ac(vv, 0.0);
    for (int i = 0; i < f.d.n; ++i) {
      const double* G = f.ws.G.data() + static_cast<long>(i) * vv;
      if (f.data.geno.xi(i, j) != 0)
        for (int k = 0; k < vv; ++k) ab[k] += G[k];
      if (f.data.geno.zeta(i, j) != 0)
        for (int k = 0; k < vv; ++k) ac[k] += G[k];
    }
    for (int k = 0; k < vv; ++k) {
      CHECK(rel_diff(f.ws.Ab[static_cast<long>(j) * vv + k], ab[k]) < 1e-12);
      CHECK(rel_diff(f.ws.Ac[static_cast<long>(j) * vv + k], ac[k]) < 1e-12);
    }
  }
}

TEST_CASE("residual and scores match the model oracle") {
  Fixture f;
  kn::build_gamma_caches(f.d, 0.44, f.ws);
  kn::refresh_residual(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                       f.state.c.data(), f.ws);
  kn::rebuild_scores(f.d, f.ws);

  DesignMatrices dm = DesignMatrices::build(f.data, f.d.v);
  for (int i = 0; i < f.d.n; ++i) {
    const Eigen::VectorXd mu = dm.U[i] * coefficient_total(f.state, f.data, i);
    const int T = f.d.T[i];
    for (int l = 0; l < T; ++l)
      CHECK(rel_diff(f.ws.e[f.d.off[i] + l], f.data.subjects[i].y(l) - mu(l)) < 1e-10);

    const Eigen::MatrixXd Gd = testutil::dense_gamma(0.44, f.data.subjects[i].grid.s);
    Eigen::VectorXd e(T);
    for (int l = 0; l < T; ++l) e(l) = f.ws.e[f.d.off[i] + l];
    const Eigen::VectorXd w_ref = dm.U[i].transpose() * Gd.llt().solve(e);
    for (int k = 0; k < f.d.v; ++k)
      CHECK(rel_diff(f.ws.w[static_cast<long>(i) * f.d.v + k], w_ref(k)) < 1e-10);
  }
}

TEST_CASE("quad and logdet match the ar1 oracle") {
  Fixture f;
  kn::build_gamma_caches(f.d, 0.61, f.ws);
  kn::refresh_residual(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                       f.state.c.data(), f.ws);
  const auto ql = kn::quad_logdet(f.d, 0.61, f.ws.e);

  double quad_ref = 0.0, logdet_ref = 0.0;
  for (int i = 0; i < f.d.n; ++i) {
    const auto gaps = f.data.subjects[i].grid.gaps();
    const int T = f.d.T[i];
    std::vector<double> e(f.ws.e.begin() + f.d.off[i], f.ws.e.begin() + f.d.off[i] + T);
    quad_ref += ar1_quadratic(0.61, gaps, e, e);
    logdet_ref += ar1_logdet(0.61, gaps);
  }
  CHECK(rel_diff(ql.quad, quad_ref) < 1e-10);
  CHECK(rel_diff(ql.logdet, logdet_ref) < 1e-10);
}

TEST_CASE("incremental deltas equal a fresh refresh") {
  Fixture f;
  kn::build_gamma_caches(f.d, 0.3, f.ws);
  kn::build_block_grams(f.d, f.ws);
  kn::refresh_residual(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                       f.state.c.data(), f.ws);
  kn::rebuild_scores(f.d, f.ws);

  // Move a few blocks through the incremental path.
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  double dlt[8];

  for (int rep = 0; rep < 5; ++rep) {
    for (int k = 0; k < f.d.v; ++k) dlt[k] = 0.2 * normal(rng);
    kn::dense_apply_delta(f.d, f.ws, {}, dlt);
    for (int k = 0; k < f.d.v; ++k) f.state.m(k) += dlt[k];

    const int j = rep * 2 % f.d.p;
    for (int k = 0; k < f.d.v; ++k) dlt[k] = 0.1 * normal(rng);
    kn::snp_apply_delta(f.d, f.ws, f.d.xi_col(j), dlt);
    for (int k = 0; k < f.d.v; ++k) f.state.b(j, k) += dlt[k];

    kn::WeightView xw{f.d.X.data(), f.d.q};
    for (int k = 0; k < f.d.v; ++k) dlt[k] = 0.05 * normal(rng);
    kn::dense_apply_delta(f.d, f.ws, xw, dlt);
    for (int k = 0; k < f.d.v; ++k) f.state.r(0, k) += dlt[k];
  }
  kn::flush_delta(f.d, f.ws);

  kn::Workspace fresh;
  fresh.allocate(f.d);
  kn::build_gamma_caches(f.d, 0.3, fresh);
  kn::refresh_residual(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                       f.state.c.data(), fresh);
  kn::rebuild_scores(f.d, fresh);

  CHECK(max_rel_diff(f.ws.e, fresh.e) < 1e-9);
  CHECK(max_rel_diff(f.ws.w, fresh.w) < 1e-9);
}

TEST_CASE("scores and grams feed the right normal equations") {
  // dense_score with unit weights equals sum_i w_i.
  Fixture f;
  kn::build_gamma_caches(f.d, 0.5, f.ws);
  kn::build_block_grams(f.d, f.ws);
  kn::refresh_residual(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                       f.state.c.data(), f.ws);
  kn::rebuild_scores(f.d, f.ws);

  double s[8];
  kn::dense_score(f.d, f.ws, {}, s);
  for (int k = 0; k < f.d.v; ++k) {
    double ref = 0.0;
    for (int i = 0; i < f.d.n; ++i) ref += f.ws.w[static_cast<long>(i) * f.d.v + k];
    CHECK(rel_diff(s[k], ref) < 1e-12);
  }

  // snp_score equals sum over the support with signs.
  for (int j : {0, 3, 7}) {
    kn::snp_score(f.d, f.ws, f.d.xi_col(j), s);
    for (int k = 0; k < f.d.v; ++k) {
      double ref = 0.0;
      for (int i = 0; i < f.d.n; ++i)
        ref += static_cast<double>(f.data.geno.xi(i, j)) * f.ws.w[static_cast<long>(i) * f.d.v + k];
      CHECK(rel_diff(s[k], ref) < 1e-12);
    }
  }
}

TEST_CASE("serial twins agree with the parallel kernels") {
  Fixture f(60, 20);
  kn::Workspace ws2;
  ws2.allocate(f.d);

  kn::build_gamma_caches(f.d, 0.42, f.ws);
  kn::build_gamma_caches_serial(f.d, 0.42, ws2);
  CHECK(max_rel_diff(f.ws.W, ws2.W) < 1e-12);
  CHECK(max_rel_diff(f.ws.G, ws2.G) < 1e-12);
  CHECK(max_rel_diff(f.ws.Gsum, ws2.Gsum) < 1e-12);

  kn::build_block_grams(f.d, f.ws);
  kn::build_block_grams_serial(f.d, ws2);
  CHECK(max_rel_diff(f.ws.Ab, ws2.Ab) < 1e-12);
  CHECK(max_rel_diff(f.ws.Ac, ws2.Ac) < 1e-12);
  CHECK(max_rel_diff(f.ws.Ar, ws2.Ar) < 1e-12);

  kn::refresh_residual(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                       f.state.c.data(), f.ws);
  kn::refresh_residual_serial(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                              f.state.c.data(), ws2);
  CHECK(max_rel_diff(f.ws.e, ws2.e) < 1e-12);

  kn::rebuild_scores(f.d, f.ws);
  kn::rebuild_scores_serial(f.d, ws2);
  CHECK(max_rel_diff(f.ws.w, ws2.w) < 1e-12);

  const auto a = kn::quad_logdet(f.d, 0.42, f.ws.e);
  const auto b = kn::quad_logdet_serial(f.d, 0.42, ws2.e);
  CHECK(rel_diff(a.quad, b.quad) < 1e-12);
  CHECK(rel_diff(a.logdet, b.logdet) < 1e-12);

  std::vector<double> t1(static_cast<std::size_t>(f.d.n) * f.d.v);
  std::vector<double> t2(t1.size());
  kn::coefficient_totals(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                         f.state.c.data(), t1.data());
  kn::coefficient_totals_serial(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                                f.state.c.data(), t2.data());
  CHECK(max_rel_diff(t1, t2) < 1e-12);
}

TEST_CASE("parallel results do not depend on the thread count") {
  Fixture f(70, 16);
  const int ambient = max_threads();

  std::vector<std::vector<double>> quads;
  for (int threads : {1, 2, 3}) {
    set_threads(threads);
    kn::Workspace ws;
    ws.allocate(f.d);
    kn::build_gamma_caches(f.d, 0.33, ws);
    kn::refresh_residual(f.d, f.state.m.data(), f.state.r.data(), f.state.b.data(),
                         f.state.c.data(), ws);
    const auto ql = kn::quad_logdet(f.d, 0.33, ws.e);
    quads.push_back({ql.quad, ql.logdet});
    quads.back().insert(quads.back().end(), ws.e.begin(), ws.e.end());
    quads.back().insert(quads.back().end(), ws.G.begin(), ws.G.end());
  }
  set_threads(ambient);

  // Bitwise equality across thread counts.
  CHECK(quads[0] == quads[1]);
  CHECK(quads[0] == quads[2]);
}

TEST_CASE("small cholesky matches Eigen") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int v : {1, 2, 4, 8}) {
    Eigen::MatrixXd B(v, v);
    for (int a = 0; a < v; ++a)
      for (int bb = 0; bb < v; ++bb) B(a, bb) = normal(rng);
    Eigen::MatrixXd K = B * B.transpose() + 0.5 * Eigen::MatrixXd::Identity(v, v);

    std::vector<double> Krow(v * v);
    for (int a = 0; a < v; ++a)
      for (int bb = 0; bb < v; ++bb) Krow[a * v + bb] = K(a, bb);
    REQUIRE(kn::chol_small(v, Krow.data()));

    Eigen::VectorXd rhs(v);
    for (int a = 0; a < v; ++a) rhs(a) = normal(rng);
    std::vector<double> x(rhs.data(), rhs.data() + v);
    kn::chol_solve_small(v, Krow.data(), x.data());
    const Eigen::VectorXd ref = K.llt().solve(rhs);
    for (int a = 0; a < v; ++a) CHECK(rel_diff(x[a], ref(a)) < 1e-10);

    // L^{-T} solve: L' x = rhs.
    std::vector<double> x2(rhs.data(), rhs.data() + v);
    kn::chol_lt_solve_small(v, Krow.data(), x2.data());
    const Eigen::MatrixXd L = K.llt().matrixL();
    const Eigen::VectorXd ref2 = L.transpose().triangularView<Eigen::Upper>().solve(rhs);
    for (int a = 0; a < v; ++a) CHECK(rel_diff(x2[a], ref2(a)) < 1e-10);
  }

  // Non-PD input is rejected.
  std::vector<double> bad{1.0, 2.0, 2.0, 1.0};
  CHECK_FALSE(kn::chol_small(2, bad.data()));
}
