// Dataset containers: genotypes in the signed functional-mapping coding,
// irregular longitudinal phenotypes, and model hyperparameters.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fgwas/basis.hpp"

namespace fgwas {

using Int8Matrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr int kMissingCall = -1;  // missing genotype call in int matrices

// Signed coding with A the minor allele:
//   AA -> (xi, zeta) = (+1, 0),  Aa -> (0, 1),  aa -> (-1, 0).
// Call values in files count copies of the file's A allele: 2 = AA, 1 = Aa,
// 0 = aa, NA = missing.
struct GenotypeMatrix {
  Int8Matrix xi;     // n x p, additive scores in {-1, 0, +1}
  Int8Matrix zeta;   // n x p, heterozygote indicators in {0, 1}
  std::vector<std::string> snp_names;
  std::vector<double> maf;      // empirical minor-allele frequency, in (0, 0.5]
  std::vector<bool> flipped;    // file orientation had freq(A) > 0.5; coding flipped

  int n() const { return static_cast<int>(xi.rows()); }
  int p() const { return static_cast<int>(xi.cols()); }
};

// Encodes integer calls (0/1/2, kMissingCall for missing). Missing calls are
// imputed by sampling from the SNP's observed genotype frequencies with the
// caller's rng; an all-missing SNP is an error. When the empirical frequency
// of the file's A allele exceeds 1/2 the coding is flipped so that A is the
// minor allele (ties keep the file orientation).
GenotypeMatrix encode_genotypes(const Eigen::MatrixXi& calls,
                                std::vector<std::string> snp_names, std::mt19937_64& rng);

// Inverse of the coding, restoring file orientation via `flipped`.
Eigen::MatrixXi decode_genotypes(const GenotypeMatrix& geno);

struct Subject {
  std::string id;
  TimeGrid grid;
  Eigen::VectorXd y;  // one phenotype per grid point
  Eigen::VectorXd x;  // q covariates
};

struct LongitudinalDataset {
  std::vector<Subject> subjects;
  GenotypeMatrix geno;   // row i corresponds to subjects[i]
  TimeRange range;       // shared standardization range
  int q = 0;

  int n() const { return static_cast<int>(subjects.size()); }
  int p() const { return geno.p(); }
  long total_obs() const;
};

// Hard structural checks throw; soft issues (T_i == 1, monomorphic SNP) come
// back as warnings. `strict` promotes warnings to errors.
std::vector<std::string> validate_dataset(const LongitudinalDataset& data, bool strict = false);

struct Hyperparameters {
  Eigen::MatrixXd sigma_m0;  // prior covariance of m, v x v
  Eigen::MatrixXd sigma_r0;  // prior covariance of each r_k
  double a = 0.01;           // lambda^2   ~ Gamma(a, rate b)
  double b = 0.01;
  double a_star = 0.01;      // lambda*^2  ~ Gamma(a_star, rate b_star)
  double b_star = 0.01;
  double a_sigma = 0.0;      // sigma^2 ~ InvGamma(a_sigma, b_sigma); (0,0) = 1/sigma^2
  double b_sigma = 0.0;

  static Hyperparameters defaults(int order);  // diffuse: sigma_m0 = sigma_r0 = 1e4 I
};

void validate_hyperparameters(const Hyperparameters& hyper, int order);

}  // namespace fgwas
