// File formats for the command-line tools.
//
//   phenotype.csv   subject_id,time,value          (long format)
//   covariates.csv  subject_id,x1,...,xq
//   genotype.csv    subject_id,<snp>,...           (calls 0/1/2, NA missing)
//   summary.csv     param,snp,coef,mean,sd,q_lo,q_med,q_hi,psrf
//   selection.csv   snp,additive,dominant
//   bic.csv         degree,bic,converged,selected_blocks
//   band CSVs       t,mean,lo,hi
//   meta.json, truth.json, draws.jsonl (one JSON object per draw)
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fgwas/data.hpp"
#include "fgwas/inference.hpp"
#include "fgwas/sampler.hpp"
#include "fgwas/simgen.hpp"

namespace fgwas {

struct LoadedDataset {
  LongitudinalDataset data;
  std::vector<std::string> warnings;
};

// covariates_csv may be empty (q = 0). Missing genotype calls are imputed
// from the SNP's observed frequencies with a stream derived from impute_seed.
LoadedDataset load_dataset(const std::string& phenotype_csv, const std::string& genotype_csv,
                           const std::string& covariates_csv, std::uint64_t impute_seed);

// Writes phenotype.csv, covariates.csv (when q > 0) and genotype.csv.
void save_dataset(const LongitudinalDataset& data, const std::string& dir);

void write_truth_json(const std::string& path, const SimDesign& design, const TruthTable& truth,
                      std::uint64_t seed);

struct SummaryRow {
  std::string param;  // m, r, b, c, sigma2, rho, lambda2, lambda2_star
  std::string snp;    // SNP name (b/c) or covariate index (r), else empty
  int coef = -1;      // coefficient index within the block, -1 for scalars
  double mean = 0.0, sd = 0.0, q_lo = 0.0, q_med = 0.0, q_hi = 0.0;
  double psrf = std::numeric_limits<double>::quiet_NaN();
};

void write_summary_csv(const std::string& path, const ChainSet& chains,
                       const std::vector<std::string>& snp_names, double level);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

struct RunMeta {
  std::string kind;  // simulate | fit | refit | sweep
  int order = 0, chains = 0, n = 0, p = 0, q = 0;
  long total_obs = 0;
  std::uint64_t seed = 0;
  double level = 0.95;
  bool converged = false;
  double max_psrf = std::numeric_limits<double>::quiet_NaN();
  TimeRange range;
  bool has_draws = false;
  // refit extras
  double log_lik = 0.0, bic = 0.0;
  long k = 0;
};

void write_meta_json(const std::string& path, const RunMeta& meta);
RunMeta read_meta_json(const std::string& path);

void write_draws_jsonl(const std::string& path, const ChainSet& chains,
                       const std::vector<std::string>& snp_names);

// Pooled per-coefficient draws of the SNP blocks, for selection at a level
// other than the one summarized.
struct DrawsTable {
  int p = 0, order = 0;
  std::vector<std::string> snp_names;
  std::vector<std::vector<double>> b;  // [j * order + k]
  std::vector<std::vector<double>> c;
};
DrawsTable read_draws_jsonl(const std::string& path);

void write_selection_csv(const std::string& path, const SelectionReport& selection);
SelectionReport read_selection_csv(const std::string& path);

void write_bic_csv(const std::string& path, const BicSweepResult& result);

void write_band_csv(const std::string& path, const std::vector<BandPoint>& band);

}  // namespace fgwas
