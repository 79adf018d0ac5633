#include "fgwas/data.hpp"

#include <Eigen/Cholesky>
#include <sstream>
#include <stdexcept>

namespace fgwas {

GenotypeMatrix encode_genotypes(const Eigen::MatrixXi& calls,
                                std::vector<std::string> snp_names, std::mt19937_64& rng) {
  const int n = static_cast<int>(calls.rows());
  const int p = static_cast<int>(calls.cols());
  if (static_cast<int>(snp_names.size()) != p)
    throw std::invalid_argument("encode_genotypes: name count does not match column count");

  GenotypeMatrix g;
  g.xi.resize(n, p);
  g.zeta.resize(n, p);
  g.snp_names = std::move(snp_names);
  g.maf.resize(p);
  g.flipped.assign(p, false);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> col(n);
  for (int j = 0; j < p; ++j) {
    long count[3] = {0, 0, 0};
    long observed = 0;
    for (int i = 0; i < n; ++i) {
      const int v = calls(i, j);
      if (v == kMissingCall) continue;
      if (v < 0 || v > 2) {
        std::ostringstream os;
        os << "encode_genotypes: SNP '" << g.snp_names[j] << "' has invalid call " << v;
        throw std::invalid_argument(os.str());
      }
      ++count[v];
      ++observed;
    }
    if (observed == 0) {
      std::ostringstream os;
      os << "encode_genotypes: SNP '" << g.snp_names[j] << "' has no observed calls";
      throw std::invalid_argument(os.str());
    }

    // Impute from the observed genotype frequencies.
    const double f1 = static_cast<double>(count[1]) / observed;
    const double f2 = static_cast<double>(count[2]) / observed;
    for (int i = 0; i < n; ++i) {
      int v = calls(i, j);
      if (v == kMissingCall) {
        const double u = unif(rng);
        v = (u < f2) ? 2 : (u < f2 + f1) ? 1 : 0;
      }
      col[i] = v;
    }

    // freq of the file's A allele over observed calls only.
    const double freq_a = (2.0 * count[2] + count[1]) / (2.0 * observed);
    const bool flip = freq_a > 0.5;
    g.flipped[j] = flip;
    g.maf[j] = flip ? 1.0 - freq_a : freq_a;

    for (int i = 0; i < n; ++i) {
      const int v = flip ? 2 - col[i] : col[i];
      g.xi(i, j) = static_cast<std::int8_t>(v - 1);
      g.zeta(i, j) = static_cast<std::int8_t>(v == 1 ? 1 : 0);
    }
  }
  return g;
}

Eigen::MatrixXi decode_genotypes(const GenotypeMatrix& geno) {
  Eigen::MatrixXi calls(geno.n(), geno.p());
  for (int j = 0; j < geno.p(); ++j)
    for (int i = 0; i < geno.n(); ++i) {
      const int v = geno.xi(i, j) + 1;
      calls(i, j) = geno.flipped[j] ? 2 - v : v;
    }
  return calls;
}

long LongitudinalDataset::total_obs() const {
  long t = 0;
  for (const auto& s : subjects) t += s.grid.size();
  return t;
}

std::vector<std::string> validate_dataset(const LongitudinalDataset& data, bool strict) {
  std::vector<std::string> warnings;
  const int n = data.n();
  if (n == 0) throw std::invalid_argument("dataset: no subjects");
  if (data.geno.n() != n) {
    std::ostringstream os;
    os << "dataset: genotype rows (" << data.geno.n() << ") != subjects (" << n << ")";
    throw std::invalid_argument(os.str());
  }
  if (!(data.range.t_min < data.range.t_max))
    throw std::invalid_argument("dataset: degenerate time range");

  for (const auto& s : data.subjects) {
    const int T = s.grid.size();
    if (T == 0) throw std::invalid_argument("dataset: subject '" + s.id + "' has no observations");
    if (s.y.size() != T) {
      std::ostringstream os;
      os << "dataset: subject '" << s.id << "' has " << s.y.size() << " phenotypes for " << T
         << " times";
      throw std::invalid_argument(os.str());
    }
    if (s.x.size() != data.q) {
      std::ostringstream os;
      os << "dataset: subject '" << s.id << "' has " << s.x.size() << " covariates, expected "
         << data.q;
      throw std::invalid_argument(os.str());
    }
    for (int l = 0; l < T; ++l) {
      if (!std::isfinite(s.y(l)))
        throw std::invalid_argument("dataset: subject '" + s.id + "' has non-finite phenotype");
      if (s.grid.s[l] < -1.0 || s.grid.s[l] > 1.0)
        throw std::invalid_argument("dataset: subject '" + s.id + "' has unstandardized times");
    }
    if (T == 1) warnings.push_back("subject '" + s.id + "' has a single observation");
  }

  for (int j = 0; j < data.p(); ++j) {
    bool poly = false;
    for (int i = 1; i < n && !poly; ++i)
      poly = data.geno.xi(i, j) != data.geno.xi(0, j) || data.geno.zeta(i, j) != data.geno.zeta(0, j);
    if (!poly && n > 1)
      warnings.push_back("SNP '" + data.geno.snp_names[j] + "' is monomorphic");
    if (!(data.geno.maf[j] > 0.0) || data.geno.maf[j] > 0.5 + 1e-12)
      warnings.push_back("SNP '" + data.geno.snp_names[j] + "' has minor-allele frequency outside (0, 0.5]");
  }

  if (strict && !warnings.empty())
    throw std::invalid_argument("dataset (strict): " + warnings.front());
  return warnings;
}

Hyperparameters Hyperparameters::defaults(int order) {
  Hyperparameters h;
  h.sigma_m0 = 1e4 * Eigen::MatrixXd::Identity(order, order);
  h.sigma_r0 = h.sigma_m0;
  return h;
}

void validate_hyperparameters(const Hyperparameters& hyper, int order) {
  if (hyper.sigma_m0.rows() != order || hyper.sigma_m0.cols() != order ||
      hyper.sigma_r0.rows() != order || hyper.sigma_r0.cols() != order)
    throw std::invalid_argument("hyperparameters: prior covariance dimension != basis order");
  Eigen::LLT<Eigen::MatrixXd> llt_m(hyper.sigma_m0), llt_r(hyper.sigma_r0);
  if (llt_m.info() != Eigen::Success || llt_r.info() != Eigen::Success)
    throw std::invalid_argument("hyperparameters: prior covariance not positive definite");
  if (!(hyper.a > 0.0) || !(hyper.b > 0.0) || !(hyper.a_star > 0.0) || !(hyper.b_star > 0.0))
    throw std::invalid_argument("hyperparameters: Gamma hyperparameters must be positive");
  if (hyper.a_sigma < 0.0 || hyper.b_sigma < 0.0)
    throw std::invalid_argument("hyperparameters: sigma^2 prior parameters must be >= 0");
}

}  // namespace fgwas
