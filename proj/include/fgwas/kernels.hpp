// Packed per-subject buffers and the sweep kernels of the Gibbs sampler.
//
// Every kernel ships in two variants: the default one parallelizes across
// subjects (or SNPs) with OpenMP, the *_serial twin is a plain loop kept as
// the reference implementation. Reductions in the parallel variants run over
// fixed-size subject blocks that are summed serially, so results are bitwise
// identical for any thread count; the serial twins accumulate directly and
// are compared against the parallel ones at 1e-12 relative tolerance.
#pragma once

#include <cstdint>
#include <vector>

#include "fgwas/data.hpp"

namespace fgwas::kernels {

// Fixed reduction granularity (subjects per partial sum).
inline constexpr int kReduceBlock = 64;

// Dataset flattened for the sampler: per-subject rows concatenated, Legendre
// designs row-major. Genotype columns are borrowed from the dataset, which
// must outlive the design.
struct PackedDesign {
  int n = 0, v = 0, q = 0, p = 0;
  long total = 0;                 // sum of T_i
  std::vector<int> T;             // n
  std::vector<long> off;          // n+1, observation offsets
  std::vector<long> goff;         // n+1, gap offsets (off[i] - i)
  std::vector<double> y;          // total
  std::vector<double> gaps;       // total - n, standardized time gaps
  std::vector<double> U;          // sum T_i * v, row-major per subject
  std::vector<double> X;          // n x q row-major covariates
  const Int8Matrix* xi = nullptr;
  const Int8Matrix* zeta = nullptr;

  static PackedDesign build(const LongitudinalDataset& data, int order);

  const std::int8_t* xi_col(int j) const { return xi->data() + static_cast<long>(j) * n; }
  const std::int8_t* zeta_col(int j) const { return zeta->data() + static_cast<long>(j) * n; }
};

// Mutable sweep state. Gamma-dependent caches (W, G, Gsum, block grams) are
// rebuilt whenever rho moves; e/w/delta track the residual incrementally.
struct Workspace {
  std::vector<double> W;     // Gamma^{-1} U, layout of U
  std::vector<double> G;     // n x v^2, G_i = U_i' Gamma^{-1} U_i
  std::vector<double> Gsum;  // v^2
  std::vector<double> Ar;    // q x v^2, sum_i X_ik^2 G_i
  std::vector<double> Ab;    // p x v^2, sum_{xi_ij != 0} G_i
  std::vector<double> Ac;    // p x v^2, sum_{zeta_ij = 1} G_i
  std::vector<double> e;     // residual, layout of y
  std::vector<double> w;     // n x v scores W_i' e_i
  std::vector<double> delta; // n x v coefficient deltas pending in e
  bool grams_valid = false;
  bool delta_dirty = false;

  void allocate(const PackedDesign& d);
};

// W_i = Gamma_i^{-1} U_i, G_i, Gsum at the given rho. Invalidates grams.
void build_gamma_caches(const PackedDesign& d, double rho, Workspace& ws);
void build_gamma_caches_serial(const PackedDesign& d, double rho, Workspace& ws);

// Ar / Ab / Ac from the current G.
void build_block_grams(const PackedDesign& d, Workspace& ws);
void build_block_grams_serial(const PackedDesign& d, Workspace& ws);

// theta_i = m + sum_k X_ik r_k + sum_j xi_ij b_j + sum_j zeta_ij c_j into an
// n x v row-major buffer. r/b/c are row-major (q x v, p x v).
void coefficient_totals(const PackedDesign& d, const double* m, const double* r, const double* b,
                        const double* c, double* theta);
void coefficient_totals_serial(const PackedDesign& d, const double* m, const double* r,
                               const double* b, const double* c, double* theta);

// Residual from scratch: e_i = y_i - U_i theta_i with theta_i the summed
// coefficient vector implied by (m, r, b, c); clears delta.
void refresh_residual(const PackedDesign& d, const double* m, const double* r, const double* b,
                      const double* c, Workspace& ws);
void refresh_residual_serial(const PackedDesign& d, const double* m, const double* r,
                             const double* b, const double* c, Workspace& ws);

// w_i = W_i' e_i.
void rebuild_scores(const PackedDesign& d, Workspace& ws);
void rebuild_scores_serial(const PackedDesign& d, Workspace& ws);

// Folds pending deltas into the residual: e_i -= U_i delta_i, delta_i = 0.
void flush_delta(const PackedDesign& d, Workspace& ws);
void flush_delta_serial(const PackedDesign& d, Workspace& ws);

struct QuadLogdet {
  double quad = 0.0;    // sum_i e_i' Gamma_i^{-1} e_i
  double logdet = 0.0;  // sum_i log |Gamma_i|
};
QuadLogdet quad_logdet(const PackedDesign& d, double rho, const std::vector<double>& e);
QuadLogdet quad_logdet_serial(const PackedDesign& d, double rho, const std::vector<double>& e);

// Weight stream over subjects: constant 1 (data == nullptr) or a strided
// column (covariate k of X is {X.data() + k, q}).
struct WeightView {
  const double* data = nullptr;
  int stride = 1;
  double operator()(int i) const { return data ? data[static_cast<long>(i) * stride] : 1.0; }
};

// A += sum_i wt_i^2 G_i, s += sum_i wt_i w_i (A, s zeroed here).
void dense_gram(const PackedDesign& d, const Workspace& ws, WeightView wt, double* A);
void dense_score(const PackedDesign& d, const Workspace& ws, WeightView wt, double* s);
// After a block moves by dlt: w_i -= wt_i G_i dlt, delta_i += wt_i dlt.
void dense_apply_delta(const PackedDesign& d, Workspace& ws, WeightView wt, const double* dlt);

// Same pair for a genotype column (values in {-1, 0, 1}); serial on purpose,
// they sit inside the sequential per-SNP Gibbs scan.
void snp_score(const PackedDesign& d, const Workspace& ws, const std::int8_t* col, double* s);
void snp_apply_delta(const PackedDesign& d, Workspace& ws, const std::int8_t* col,
                     const double* dlt);

// In-place Cholesky of a row-major SPD v x v matrix (v <= 8), lower factor.
bool chol_small(int v, double* K);
// Solves L L' x = rhs in place.
void chol_solve_small(int v, const double* L, double* x);
// x := L^{-T} x.
void chol_lt_solve_small(int v, const double* L, double* x);

}  // namespace fgwas::kernels
