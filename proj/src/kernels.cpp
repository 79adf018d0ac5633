#include "fgwas/kernels.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "fgwas/ar1.hpp"

namespace fgwas::kernels {

namespace {

// rho^d = exp(d log rho); one log per rho, one exp per gap. Shared by the
// serial and parallel variants so the twins differ only in scheduling.
inline double pow_rho(double log_rho, double d) { return std::exp(d * log_rho); }

// Whitens rows in place: row_1 unchanged, row_{l+1} := (row_{l+1} - r_l row_l)/c_l,
// then applies the transpose pass, leaving Gamma^{-1} X for row-major X.
inline void gamma_solve_rows(double log_rho, const double* gaps, int T, int cols, double* X,
                             double* cbuf) {
  if (T == 1) return;
  // Descending order keeps every prev row original until its own update.
  for (int l = T - 2; l >= 0; --l) {
    const double r = pow_rho(log_rho, gaps[l]);
    const double c = std::sqrt(1.0 - r * r);
    cbuf[l] = c;
    double* cur = X + static_cast<long>(l + 1) * cols;
    const double* prev = X + static_cast<long>(l) * cols;
    for (int k = 0; k < cols; ++k) cur[k] = (cur[k] - r * prev[k]) / c;
  }
  for (int l = 0; l < T; ++l) {
    double* cur = X + static_cast<long>(l) * cols;
    const double diag = (l == 0) ? 1.0 : 1.0 / cbuf[l - 1];
    if (l + 1 < T) {
      const double r = pow_rho(log_rho, gaps[l]);
      const double f = r / cbuf[l];
      const double* next = X + static_cast<long>(l + 1) * cols;
      for (int k = 0; k < cols; ++k) cur[k] = diag * cur[k] - f * next[k];
    } else {
      for (int k = 0; k < cols; ++k) cur[k] *= diag;
    }
  }
}

inline void subject_gamma_cache(const PackedDesign& d, double log_rho, int i, Workspace& ws) {
  const int T = d.T[i];
  const int v = d.v;
  const double* U = d.U.data() + d.off[i] * v;
  double* W = ws.W.data() + d.off[i] * v;
  std::memcpy(W, U, sizeof(double) * static_cast<std::size_t>(T) * v);
  double cbuf[64];
  double* heap_c = nullptr;
  double* c = cbuf;
  if (T > 64) c = heap_c = new double[T];
  gamma_solve_rows(log_rho, d.gaps.data() + d.goff[i], T, v, W, c);
  delete[] heap_c;

  double* G = ws.G.data() + static_cast<long>(i) * v * v;
  std::memset(G, 0, sizeof(double) * static_cast<std::size_t>(v) * v);
  for (int l = 0; l < T; ++l) {
    const double* u = U + static_cast<long>(l) * v;
    const double* w = W + static_cast<long>(l) * v;
    for (int a = 0; a < v; ++a) {
      const double ua = u[a];
      double* g = G + static_cast<long>(a) * v;
      for (int bb = 0; bb < v; ++bb) g[bb] += ua * w[bb];
    }
  }
}

inline void subject_theta(const PackedDesign& d, int i, const double* m, const double* r,
                          const double* b, const double* c, double* theta) {
  const int v = d.v;
  for (int k = 0; k < v; ++k) theta[k] = m[k];
  for (int k = 0; k < d.q; ++k) {
    const double x = d.X[static_cast<long>(i) * d.q + k];
    const double* rk = r + static_cast<long>(k) * v;
    for (int a = 0; a < v; ++a) theta[a] += x * rk[a];
  }
  for (int j = 0; j < d.p; ++j) {
    const double g = static_cast<double>(d.xi_col(j)[i]);
    if (g != 0.0) {
      const double* bj = b + static_cast<long>(j) * v;
      for (int a = 0; a < v; ++a) theta[a] += g * bj[a];
    }
    if (d.zeta_col(j)[i] != 0) {
      const double* cj = c + static_cast<long>(j) * v;
      for (int a = 0; a < v; ++a) theta[a] += cj[a];
    }
  }
}

inline void subject_residual(const PackedDesign& d, int i, const double* theta, Workspace& ws) {
  const int T = d.T[i];
  const int v = d.v;
  const double* U = d.U.data() + d.off[i] * v;
  double* e = ws.e.data() + d.off[i];
  const double* y = d.y.data() + d.off[i];
  for (int l = 0; l < T; ++l) {
    double mu = 0.0;
    const double* u = U + static_cast<long>(l) * v;
    for (int k = 0; k < v; ++k) mu += u[k] * theta[k];
    e[l] = y[l] - mu;
  }
  double* dl = ws.delta.data() + static_cast<long>(i) * v;
  for (int k = 0; k < v; ++k) dl[k] = 0.0;
}

inline void subject_scores(const PackedDesign& d, int i, Workspace& ws) {
  const int T = d.T[i];
  const int v = d.v;
  const double* W = ws.W.data() + d.off[i] * v;
  const double* e = ws.e.data() + d.off[i];
  double* w = ws.w.data() + static_cast<long>(i) * v;
  for (int k = 0; k < v; ++k) w[k] = 0.0;
  for (int l = 0; l < T; ++l) {
    const double el = e[l];
    const double* wr = W + static_cast<long>(l) * v;
    for (int k = 0; k < v; ++k) w[k] += wr[k] * el;
  }
}

inline void subject_flush(const PackedDesign& d, int i, Workspace& ws) {
  const int T = d.T[i];
  const int v = d.v;
  double* dl = ws.delta.data() + static_cast<long>(i) * v;
  const double* U = d.U.data() + d.off[i] * v;
  double* e = ws.e.data() + d.off[i];
  for (int l = 0; l < T; ++l) {
    double mu = 0.0;
    const double* u = U + static_cast<long>(l) * v;
    for (int k = 0; k < v; ++k) mu += u[k] * dl[k];
    e[l] -= mu;
  }
  for (int k = 0; k < v; ++k) dl[k] = 0.0;
}

inline void subject_quad_logdet(const PackedDesign& d, double log_rho, int i, const double* e_all,
                                double& quad, double& logdet) {
  const int T = d.T[i];
  const double* e = e_all + d.off[i];
  const double* gaps = d.gaps.data() + d.goff[i];
  double q = e[0] * e[0];
  double ld = 0.0;
  for (int l = 0; l + 1 < T; ++l) {
    const double r = pow_rho(log_rho, gaps[l]);
    const double one_r2 = 1.0 - r * r;
    const double z = e[l + 1] - r * e[l];
    q += z * z / one_r2;
    ld += std::log1p(-r * r);
  }
  quad = q;
  logdet = ld;
}

}  // namespace

PackedDesign PackedDesign::build(const LongitudinalDataset& data, int order) {
  PackedDesign d;
  d.n = data.n();
  d.v = order;
  d.q = data.q;
  d.p = data.p();
  d.xi = &data.geno.xi;
  d.zeta = &data.geno.zeta;
  d.T.resize(d.n);
  d.off.resize(d.n + 1);
  d.goff.resize(d.n + 1);
  d.off[0] = 0;
  d.goff[0] = 0;
  for (int i = 0; i < d.n; ++i) {
    d.T[i] = data.subjects[i].grid.size();
    d.off[i + 1] = d.off[i] + d.T[i];
    d.goff[i + 1] = d.off[i + 1] - (i + 1);
  }
  d.total = d.off[d.n];
  d.y.resize(d.total);
  d.gaps.resize(d.total - d.n);
  d.U.resize(d.total * order);
  d.X.resize(static_cast<long>(d.n) * d.q);
  for (int i = 0; i < d.n; ++i) {
    const auto& subj = data.subjects[i];
    for (int l = 0; l < d.T[i]; ++l) {
      d.y[d.off[i] + l] = subj.y(l);
      const Eigen::RowVectorXd row = legendre_row(subj.grid.s[l], order);
      for (int k = 0; k < order; ++k) d.U[(d.off[i] + l) * order + k] = row(k);
    }
    const auto g = subj.grid.gaps();
    for (int l = 0; l + 1 < d.T[i]; ++l) d.gaps[d.goff[i] + l] = g[l];
    for (int k = 0; k < d.q; ++k) d.X[static_cast<long>(i) * d.q + k] = subj.x(k);
  }
  return d;
}

void Workspace::allocate(const PackedDesign& d) {
  W.assign(d.U.size(), 0.0);
  G.assign(static_cast<long>(d.n) * d.v * d.v, 0.0);
  Gsum.assign(static_cast<std::size_t>(d.v) * d.v, 0.0);
  Ar.assign(static_cast<std::size_t>(d.q) * d.v * d.v, 0.0);
  Ab.assign(static_cast<long>(d.p) * d.v * d.v, 0.0);
  Ac.assign(static_cast<long>(d.p) * d.v * d.v, 0.0);
  e.assign(d.y.size(), 0.0);
  w.assign(static_cast<long>(d.n) * d.v, 0.0);
  delta.assign(static_cast<long>(d.n) * d.v, 0.0);
  grams_valid = false;
  delta_dirty = false;
}

void build_gamma_caches(const PackedDesign& d, double rho, Workspace& ws) {
  ar1_validate(rho);
  const double log_rho = std::log(rho);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < d.n; ++i) subject_gamma_cache(d, log_rho, i, ws);
  const int vv = d.v * d.v;
  for (int k = 0; k < vv; ++k) ws.Gsum[k] = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double* G = ws.G.data() + static_cast<long>(i) * vv;
    for (int k = 0; k < vv; ++k) ws.Gsum[k] += G[k];
  }
  ws.grams_valid = false;
}

void build_gamma_caches_serial(const PackedDesign& d, double rho, Workspace& ws) {
  ar1_validate(rho);
  const double log_rho = std::log(rho);
  for (int i = 0; i < d.n; ++i) subject_gamma_cache(d, log_rho, i, ws);
  const int vv = d.v * d.v;
  for (int k = 0; k < vv; ++k) ws.Gsum[k] = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double* G = ws.G.data() + static_cast<long>(i) * vv;
    for (int k = 0; k < vv; ++k) ws.Gsum[k] += G[k];
  }
  ws.grams_valid = false;
}

namespace {

inline void snp_gram(const PackedDesign& d, const Workspace& ws, const std::int8_t* col,
                     double* A) {
  const int vv = d.v * d.v;
  for (int k = 0; k < vv; ++k) A[k] = 0.0;
  for (int i = 0; i < d.n; ++i) {
    if (col[i] == 0) continue;  // xi^2 = 1 when nonzero, zeta^2 = zeta
    const double* G = ws.G.data() + static_cast<long>(i) * vv;
    for (int k = 0; k < vv; ++k) A[k] += G[k];
  }
}

inline void covariate_grams(const PackedDesign& d, Workspace& ws) {
  const int vv = d.v * d.v;
  for (int k = 0; k < d.q; ++k) {
    double* A = ws.Ar.data() + static_cast<std::size_t>(k) * vv;
    for (int t = 0; t < vv; ++t) A[t] = 0.0;
    for (int i = 0; i < d.n; ++i) {
      const double x = d.X[static_cast<long>(i) * d.q + k];
      if (x == 0.0) continue;
      const double x2 = x * x;
      const double* G = ws.G.data() + static_cast<long>(i) * vv;
      for (int t = 0; t < vv; ++t) A[t] += x2 * G[t];
    }
  }
}

}  // namespace

void build_block_grams(const PackedDesign& d, Workspace& ws) {
  const int vv = d.v * d.v;
#pragma omp parallel for schedule(static)
  for (int j = 0; j < d.p; ++j) {
    snp_gram(d, ws, d.xi_col(j), ws.Ab.data() + static_cast<long>(j) * vv);
    snp_gram(d, ws, d.zeta_col(j), ws.Ac.data() + static_cast<long>(j) * vv);
  }
  covariate_grams(d, ws);
  ws.grams_valid = true;
}

void build_block_grams_serial(const PackedDesign& d, Workspace& ws) {
  const int vv = d.v * d.v;
  for (int j = 0; j < d.p; ++j) {
    snp_gram(d, ws, d.xi_col(j), ws.Ab.data() + static_cast<long>(j) * vv);
    snp_gram(d, ws, d.zeta_col(j), ws.Ac.data() + static_cast<long>(j) * vv);
  }
  covariate_grams(d, ws);
  ws.grams_valid = true;
}

void coefficient_totals(const PackedDesign& d, const double* m, const double* r, const double* b,
                        const double* c, double* theta) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < d.n; ++i)
    subject_theta(d, i, m, r, b, c, theta + static_cast<long>(i) * d.v);
}

void coefficient_totals_serial(const PackedDesign& d, const double* m, const double* r,
                               const double* b, const double* c, double* theta) {
  for (int i = 0; i < d.n; ++i)
    subject_theta(d, i, m, r, b, c, theta + static_cast<long>(i) * d.v);
}

void refresh_residual(const PackedDesign& d, const double* m, const double* r, const double* b,
                      const double* c, Workspace& ws) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < d.n; ++i) {
    double theta[8];
    subject_theta(d, i, m, r, b, c, theta);
    subject_residual(d, i, theta, ws);
  }
  ws.delta_dirty = false;
}

void refresh_residual_serial(const PackedDesign& d, const double* m, const double* r,
                             const double* b, const double* c, Workspace& ws) {
  for (int i = 0; i < d.n; ++i) {
    double theta[8];
    subject_theta(d, i, m, r, b, c, theta);
    subject_residual(d, i, theta, ws);
  }
  ws.delta_dirty = false;
}

void rebuild_scores(const PackedDesign& d, Workspace& ws) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < d.n; ++i) subject_scores(d, i, ws);
}

void rebuild_scores_serial(const PackedDesign& d, Workspace& ws) {
  for (int i = 0; i < d.n; ++i) subject_scores(d, i, ws);
}

void flush_delta(const PackedDesign& d, Workspace& ws) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < d.n; ++i) subject_flush(d, i, ws);
  ws.delta_dirty = false;
}

void flush_delta_serial(const PackedDesign& d, Workspace& ws) {
  for (int i = 0; i < d.n; ++i) subject_flush(d, i, ws);
  ws.delta_dirty = false;
}

QuadLogdet quad_logdet(const PackedDesign& d, double rho, const std::vector<double>& e) {
  ar1_validate(rho);
  const double log_rho = std::log(rho);
  const int nb = (d.n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> part(static_cast<std::size_t>(nb) * 2, 0.0);
#pragma omp parallel for schedule(static)
  for (int bi = 0; bi < nb; ++bi) {
    const int lo = bi * kReduceBlock;
    const int hi = std::min(d.n, lo + kReduceBlock);
    double q = 0.0, ld = 0.0;
    for (int i = lo; i < hi; ++i) {
      double qi, ldi;
      subject_quad_logdet(d, log_rho, i, e.data(), qi, ldi);
      q += qi;
      ld += ldi;
    }
    part[2 * bi] = q;
    part[2 * bi + 1] = ld;
  }
  QuadLogdet out;
  for (int bi = 0; bi < nb; ++bi) {
    out.quad += part[2 * bi];
    out.logdet += part[2 * bi + 1];
  }
  return out;
}

QuadLogdet quad_logdet_serial(const PackedDesign& d, double rho, const std::vector<double>& e) {
  ar1_validate(rho);
  const double log_rho = std::log(rho);
  QuadLogdet out;
  for (int i = 0; i < d.n; ++i) {
    double qi, ldi;
    subject_quad_logdet(d, log_rho, i, e.data(), qi, ldi);
    out.quad += qi;
    out.logdet += ldi;
  }
  return out;
}

void dense_gram(const PackedDesign& d, const Workspace& ws, WeightView wt, double* A) {
  const int vv = d.v * d.v;
  for (int k = 0; k < vv; ++k) A[k] = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double x = wt(i);
    if (x == 0.0) continue;
    const double x2 = x * x;
    const double* G = ws.G.data() + static_cast<long>(i) * vv;
    for (int k = 0; k < vv; ++k) A[k] += x2 * G[k];
  }
}

void dense_score(const PackedDesign& d, const Workspace& ws, WeightView wt, double* s) {
  const int v = d.v;
  for (int k = 0; k < v; ++k) s[k] = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double x = wt(i);
    if (x == 0.0) continue;
    const double* w = ws.w.data() + static_cast<long>(i) * v;
    for (int k = 0; k < v; ++k) s[k] += x * w[k];
  }
}

void dense_apply_delta(const PackedDesign& d, Workspace& ws, WeightView wt, const double* dlt) {
  const int v = d.v;
  const int vv = v * v;
  for (int i = 0; i < d.n; ++i) {
    const double x = wt(i);
    if (x == 0.0) continue;
    const double* G = ws.G.data() + static_cast<long>(i) * vv;
    double* w = ws.w.data() + static_cast<long>(i) * v;
    double* dl = ws.delta.data() + static_cast<long>(i) * v;
    for (int a = 0; a < v; ++a) {
      double acc = 0.0;
      const double* g = G + static_cast<long>(a) * v;
      for (int bb = 0; bb < v; ++bb) acc += g[bb] * dlt[bb];
      w[a] -= x * acc;
      dl[a] += x * dlt[a];
    }
  }
  ws.delta_dirty = true;
}

void snp_score(const PackedDesign& d, const Workspace& ws, const std::int8_t* col, double* s) {
  const int v = d.v;
  for (int k = 0; k < v; ++k) s[k] = 0.0;
  for (int i = 0; i < d.n; ++i) {
    const double g = static_cast<double>(col[i]);
    const double* w = ws.w.data() + static_cast<long>(i) * v;
    for (int k = 0; k < v; ++k) s[k] += g * w[k];
  }
}

void snp_apply_delta(const PackedDesign& d, Workspace& ws, const std::int8_t* col,
                     const double* dlt) {
  const int v = d.v;
  const int vv = v * v;
  for (int i = 0; i < d.n; ++i) {
    const double x = static_cast<double>(col[i]);
    if (x == 0.0) continue;
    const double* G = ws.G.data() + static_cast<long>(i) * vv;
    double* w = ws.w.data() + static_cast<long>(i) * v;
    double* dl = ws.delta.data() + static_cast<long>(i) * v;
    for (int a = 0; a < v; ++a) {
      double acc = 0.0;
      const double* g = G + static_cast<long>(a) * v;
      for (int bb = 0; bb < v; ++bb) acc += g[bb] * dlt[bb];
      w[a] -= x * acc;
      dl[a] += x * dlt[a];
    }
  }
  ws.delta_dirty = true;
}

bool chol_small(int v, double* K) {
  for (int a = 0; a < v; ++a) {
    for (int bb = 0; bb <= a; ++bb) {
      double sum = K[static_cast<long>(a) * v + bb];
      for (int k = 0; k < bb; ++k)
        sum -= K[static_cast<long>(a) * v + k] * K[static_cast<long>(bb) * v + k];
      if (a == bb) {
        if (!(sum > 0.0)) return false;
        K[static_cast<long>(a) * v + a] = std::sqrt(sum);
      } else {
        K[static_cast<long>(a) * v + bb] = sum / K[static_cast<long>(bb) * v + bb];
      }
    }
  }
  return true;
}

void chol_solve_small(int v, const double* L, double* x) {
  for (int a = 0; a < v; ++a) {
    double sum = x[a];
    for (int k = 0; k < a; ++k) sum -= L[static_cast<long>(a) * v + k] * x[k];
    x[a] = sum / L[static_cast<long>(a) * v + a];
  }
  for (int a = v - 1; a >= 0; --a) {
    double sum = x[a];
    for (int k = a + 1; k < v; ++k) sum -= L[static_cast<long>(k) * v + a] * x[k];
    x[a] = sum / L[static_cast<long>(a) * v + a];
  }
}

void chol_lt_solve_small(int v, const double* L, double* x) {
  for (int a = v - 1; a >= 0; --a) {
    double sum = x[a];
    for (int k = a + 1; k < v; ++k) sum -= L[static_cast<long>(k) * v + a] * x[k];
    x[a] = sum / L[static_cast<long>(a) * v + a];
  }
}

}  // namespace fgwas::kernels
