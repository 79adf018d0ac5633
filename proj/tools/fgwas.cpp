// fgwas: simulate / fit / select / refit / sweep / report for the
// varying-coefficient group-lasso sampler.
//
// Exit codes: 0 success, 1 usage, 2 data or validation error,
// 3 convergence failure (outputs are still written).
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fgwas/inference.hpp"
#include "fgwas/io.hpp"
#include "fgwas/parallel.hpp"
#include "fgwas/sampler.hpp"
#include "fgwas/simgen.hpp"

namespace {

constexpr int kExitData = 2;
constexpr int kExitNoConverge = 3;

struct DataArgs {
  std::string phen, geno, cov;
  bool strict = false;
};

void add_data_flags(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--phen", args.phen, "Phenotype CSV (subject_id,time,value)")->required();
  cmd->add_option("--geno", args.geno, "Genotype CSV (subject_id,<snp>,... calls 0/1/2/NA)")
      ->required();
  cmd->add_option("--cov", args.cov, "Covariate CSV (subject_id,x1,...)");
  cmd->add_flag("--strict", args.strict, "Treat dataset warnings as errors");
}

void add_sampler_flags(CLI::App* cmd, fgwas::SamplerConfig& config) {
  cmd->add_option("--chains", config.chains, "Number of chains")->capture_default_str();
  cmd->add_option("--seed", config.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--burn-in", config.burn_in, "Burn-in sweeps")->capture_default_str();
  cmd->add_option("--post-iters", config.post_convergence_iters,
                  "Sweeps recorded after convergence")
      ->capture_default_str();
  cmd->add_option("--thin", config.thin, "Thinning interval")->capture_default_str();
  cmd->add_option("--check-every", config.psrf_check_every, "Sweeps between PSRF checks")
      ->capture_default_str();
  cmd->add_option("--max-monitor", config.max_monitor_iters,
                  "Post-burn-in monitoring budget before giving up")
      ->capture_default_str();
  cmd->add_option("--psrf-threshold", config.psrf_threshold, "Convergence threshold")
      ->capture_default_str();
  cmd->add_option("--rho-step", config.rho_step, "Initial MH step for rho")
      ->capture_default_str();
  cmd->add_flag_callback(
      "--no-adapt", [&config] { config.adapt_rho_step = false; },
      "Disable burn-in step-size adaptation");
  cmd->add_option("--threads", config.threads, "OpenMP threads (0 = ambient)")
      ->envname("FGWAS_THREADS")
      ->capture_default_str();
}

void add_hyper_flags(CLI::App* cmd, fgwas::Hyperparameters& hyper) {
  cmd->add_option("--a", hyper.a, "Gamma shape for lambda^2")->capture_default_str();
  cmd->add_option("--b", hyper.b, "Gamma rate for lambda^2")->capture_default_str();
  cmd->add_option("--a-star", hyper.a_star, "Gamma shape for lambda*^2")->capture_default_str();
  cmd->add_option("--b-star", hyper.b_star, "Gamma rate for lambda*^2")->capture_default_str();
  cmd->add_option("--a-sigma", hyper.a_sigma, "InvGamma shape for sigma^2")
      ->capture_default_str();
  cmd->add_option("--b-sigma", hyper.b_sigma, "InvGamma scale for sigma^2")
      ->capture_default_str();
}

fgwas::LongitudinalDataset load_or_die(const DataArgs& args, std::uint64_t seed) {
  auto loaded = fgwas::load_dataset(args.phen, args.geno, args.cov, seed);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  if (args.strict && !loaded.warnings.empty())
    throw std::runtime_error("dataset has warnings and --strict is set: " + loaded.warnings[0]);
  return std::move(loaded.data);
}

fgwas::RunMeta base_meta(const std::string& kind, const fgwas::LongitudinalDataset& data,
                         int order, const fgwas::SamplerConfig& config, double level) {
  fgwas::RunMeta meta;
  meta.kind = kind;
  meta.order = order;
  meta.chains = config.chains;
  meta.n = data.n();
  meta.p = data.p();
  meta.q = data.q;
  meta.total_obs = data.total_obs();
  meta.seed = config.seed;
  meta.level = level;
  return meta;
}

void report_convergence(const fgwas::ChainSet& chains) {
  if (chains.converged) {
    std::cerr << "converged at post-burn-in sweep " << chains.convergence_sweep
              << " (max PSRF " << chains.monitor.max_psrf << ")\n";
    return;
  }
  std::cerr << "convergence not reached; worst monitored quantities:\n";
  auto entries = chains.monitor.entries;
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.value > b.value; });
  const std::size_t show = std::min<std::size_t>(5, entries.size());
  for (std::size_t i = 0; i < show; ++i)
    std::cerr << "  " << entries[i].name << "  psrf=" << entries[i].value << '\n';
}

// Selection from an existing summary at the level it was written for: a block
// is selected when any coefficient interval strictly excludes zero.
fgwas::SelectionReport select_from_summary(const std::vector<fgwas::SummaryRow>& rows, int order,
                                           double level) {
  std::vector<std::string> names;
  std::map<std::string, std::size_t> index;
  std::vector<std::pair<bool, bool>> hits;
  for (const auto& row : rows) {
    if (row.param != "b" && row.param != "c") continue;
    auto [it, inserted] = index.try_emplace(row.snp, names.size());
    if (inserted) {
      names.push_back(row.snp);
      hits.emplace_back(false, false);
    }
    const bool excludes = row.q_lo > 0.0 || row.q_hi < 0.0;
    if (!excludes) continue;
    if (row.param == "b")
      hits[it->second].first = true;
    else
      hits[it->second].second = true;
  }
  fgwas::SelectionReport rep;
  rep.level = level;
  rep.order = order;
  for (std::size_t j = 0; j < names.size(); ++j) {
    fgwas::SelectionEntry e;
    e.snp = names[j];
    e.additive = hits[j].first;
    e.dominant = hits[j].second;
    rep.entries.push_back(e);
    if (e.additive) rep.additive_blocks.push_back(static_cast<int>(j));
    if (e.dominant) rep.dominant_blocks.push_back(static_cast<int>(j));
    if (e.additive || e.dominant) rep.selected.push_back(static_cast<int>(j));
  }
  return rep;
}

fgwas::SelectionReport select_from_draws(const fgwas::DrawsTable& table, double level) {
  fgwas::SelectionReport rep;
  rep.level = level;
  rep.order = table.order;
  auto excludes = [&](const std::vector<double>& draws) {
    const auto ci = fgwas::credible_interval(draws, level);
    return ci.lo > 0.0 || ci.hi < 0.0;
  };
  for (int j = 0; j < table.p; ++j) {
    fgwas::SelectionEntry e;
    e.snp = table.snp_names[j];
    for (int k = 0; k < table.order; ++k) {
      const std::size_t idx = static_cast<std::size_t>(j) * table.order + k;
      e.additive = e.additive || excludes(table.b[idx]);
      e.dominant = e.dominant || excludes(table.c[idx]);
    }
    rep.entries.push_back(e);
    if (e.additive) rep.additive_blocks.push_back(j);
    if (e.dominant) rep.dominant_blocks.push_back(j);
    if (e.additive || e.dominant) rep.selected.push_back(j);
  }
  return rep;
}

// Realigns a selection file to the dataset's SNP order by name.
fgwas::SelectionReport align_selection(const fgwas::SelectionReport& raw,
                                       const std::vector<std::string>& snp_names, int order,
                                       double level) {
  std::map<std::string, const fgwas::SelectionEntry*> by_name;
  for (const auto& e : raw.entries) {
    if (!by_name.emplace(e.snp, &e).second)
      throw std::runtime_error("selection lists SNP '" + e.snp + "' twice");
  }
  fgwas::SelectionReport rep;
  rep.level = level;
  rep.order = order;
  for (std::size_t j = 0; j < snp_names.size(); ++j) {
    const auto it = by_name.find(snp_names[j]);
    if (it == by_name.end())
      throw std::runtime_error("selection is missing SNP '" + snp_names[j] + "'");
    rep.entries.push_back(*it->second);
    if (it->second->additive) rep.additive_blocks.push_back(static_cast<int>(j));
    if (it->second->dominant) rep.dominant_blocks.push_back(static_cast<int>(j));
    if (it->second->additive || it->second->dominant)
      rep.selected.push_back(static_cast<int>(j));
  }
  if (rep.entries.size() != raw.entries.size())
    throw std::runtime_error("selection lists SNPs absent from the dataset");
  return rep;
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian group-lasso varying-coefficient GWAS"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset");
  fgwas::SimDesign design = fgwas::SimDesign::desk_default();
  std::string sim_out;
  std::uint64_t sim_seed = 1;
  sim_cmd->add_option("--out", sim_out, "Output directory")->required();
  sim_cmd->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();
  sim_cmd->add_option("--n", design.n, "Subjects")->capture_default_str();
  sim_cmd->add_option("--p", design.p, "SNPs (>= 5)")->capture_default_str();
  sim_cmd->add_option("--maf", design.maf, "Minor-allele frequency")->capture_default_str();
  sim_cmd->add_option("--rho-g", design.rho_g, "Liability equicorrelation")
      ->capture_default_str();
  sim_cmd->add_option("--sigma2", design.sigma2, "Noise variance")->capture_default_str();
  sim_cmd->add_option("--rho", design.rho, "Noise AR(1) correlation")->capture_default_str();
  sim_cmd->add_option("--min-obs", design.min_obs, "Fewest observations per subject")
      ->capture_default_str();
  sim_cmd->add_option("--max-obs", design.max_obs, "Most observations per subject")
      ->capture_default_str();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Run the sampler and select SNPs");
  DataArgs fit_data;
  fgwas::SamplerConfig fit_config;
  fgwas::Hyperparameters fit_hyper;  // sigma_m0/r0 filled once the degree is known
  std::string fit_out;
  int fit_degree = 3;
  double fit_level = 0.95;
  bool fit_draws = false;
  add_data_flags(fit_cmd, fit_data);
  fit_cmd->add_option("--out", fit_out, "Output directory")->required();
  fit_cmd->add_option("--degree", fit_degree, "Legendre degree (order = degree + 1)")
      ->check(CLI::Range(0, 7))
      ->capture_default_str();
  fit_cmd->add_option("--level", fit_level, "Credible level for intervals and selection")
      ->check(CLI::Range(0.5, 0.9999))
      ->capture_default_str();
  fit_cmd->add_flag("--draws", fit_draws, "Also write draws.jsonl");
  add_sampler_flags(fit_cmd, fit_config);
  add_hyper_flags(fit_cmd, fit_hyper);

  // select
  auto* sel_cmd = app.add_subcommand("select", "Re-run selection on a completed fit");
  std::string sel_run, sel_out;
  double sel_level = 0.95;
  sel_cmd->add_option("--run", sel_run, "Directory written by fit")->required();
  sel_cmd->add_option("--level", sel_level, "Credible level")
      ->check(CLI::Range(0.5, 0.9999))
      ->capture_default_str();
  sel_cmd->add_option("--out", sel_out, "Output CSV (default <run>/selection.csv)");

  // refit
  auto* ref_cmd = app.add_subcommand("refit", "Flat-prior rerun on selected blocks");
  DataArgs ref_data;
  fgwas::SamplerConfig ref_config;
  fgwas::Hyperparameters ref_hyper;
  std::string ref_selection, ref_out;
  int ref_degree = 3;
  double ref_level = 0.95;
  add_data_flags(ref_cmd, ref_data);
  ref_cmd->add_option("--selection", ref_selection, "selection.csv from a fit")->required();
  ref_cmd->add_option("--out", ref_out, "Output directory")->required();
  ref_cmd->add_option("--degree", ref_degree, "Legendre degree")
      ->check(CLI::Range(0, 7))
      ->capture_default_str();
  ref_cmd->add_option("--level", ref_level, "Credible level for the summary")
      ->check(CLI::Range(0.5, 0.9999))
      ->capture_default_str();
  add_sampler_flags(ref_cmd, ref_config);
  add_hyper_flags(ref_cmd, ref_hyper);

  // sweep
  auto* swp_cmd = app.add_subcommand("sweep", "Choose the Legendre degree by BIC");
  DataArgs swp_data;
  fgwas::SamplerConfig swp_config;
  std::string swp_out;
  int swp_max_degree = 4;
  double swp_level = 0.95;
  add_data_flags(swp_cmd, swp_data);
  swp_cmd->add_option("--out", swp_out, "Output directory")->required();
  swp_cmd->add_option("--max-degree", swp_max_degree, "Largest degree to try")
      ->check(CLI::Range(0, 7))
      ->capture_default_str();
  swp_cmd->add_option("--level", swp_level, "Selection level inside the sweep")
      ->check(CLI::Range(0.5, 0.9999))
      ->capture_default_str();
  add_sampler_flags(swp_cmd, swp_config);

  // report
  auto* rep_cmd = app.add_subcommand("report", "Effect-band CSVs from a completed run");
  std::string rep_run, rep_out;
  int rep_grid = 101;
  rep_cmd->add_option("--run", rep_run, "Directory written by fit or refit")->required();
  rep_cmd->add_option("--out", rep_out, "Output directory")->required();
  rep_cmd->add_option("--grid-points", rep_grid, "Band grid size")
      ->check(CLI::Range(2, 100000))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (sim_cmd->parsed()) {
    design.truth = fgwas::TruthTable::cubic_default(design.p);
    const auto sim = fgwas::simulate_dataset(design, sim_seed);
    std::filesystem::create_directories(sim_out);
    fgwas::save_dataset(sim.data, sim_out);
    fgwas::write_truth_json(sim_out + "/truth.json", design, sim.truth, sim_seed);
    std::cerr << "wrote " << sim.data.n() << " subjects, " << sim.data.p() << " SNPs, "
              << sim.data.total_obs() << " observations to " << sim_out << '\n';
    return 0;
  }

  if (fit_cmd->parsed()) {
    const auto data = load_or_die(fit_data, fit_config.seed);
    const int order = fit_degree + 1;
    const auto defaults = fgwas::Hyperparameters::defaults(order);
    fit_hyper.sigma_m0 = defaults.sigma_m0;
    fit_hyper.sigma_r0 = defaults.sigma_r0;
    const auto chains = fgwas::run_chains(data, order, fit_hyper, fit_config);
    const auto selection = fgwas::select_snps(chains, data.geno.snp_names, fit_level);

    std::filesystem::create_directories(fit_out);
    fgwas::write_summary_csv(fit_out + "/summary.csv", chains, data.geno.snp_names, fit_level);
    fgwas::write_selection_csv(fit_out + "/selection.csv", selection);
    if (fit_draws) fgwas::write_draws_jsonl(fit_out + "/draws.jsonl", chains, data.geno.snp_names);
    auto meta = base_meta("fit", data, order, fit_config, fit_level);
    meta.converged = chains.converged;
    meta.max_psrf = chains.monitor.max_psrf;
    meta.range = data.range;
    meta.has_draws = fit_draws;
    fgwas::write_meta_json(fit_out + "/meta.json", meta);

    report_convergence(chains);
    std::cerr << "selected " << selection.selected.size() << " of " << data.p() << " SNPs\n";
    return chains.converged ? 0 : kExitNoConverge;
  }

  if (sel_cmd->parsed()) {
    const auto meta = fgwas::read_meta_json(sel_run + "/meta.json");
    fgwas::SelectionReport selection;
    if (std::abs(sel_level - meta.level) < 1e-12) {
      selection = select_from_summary(fgwas::read_summary_csv(sel_run + "/summary.csv"),
                                      meta.order, sel_level);
    } else if (meta.has_draws) {
      selection = select_from_draws(fgwas::read_draws_jsonl(sel_run + "/draws.jsonl"), sel_level);
    } else {
      throw std::runtime_error("selection at level " + std::to_string(sel_level) +
                               " needs draws.jsonl; rerun fit with --draws or use level " +
                               std::to_string(meta.level));
    }
    const std::string out = sel_out.empty() ? sel_run + "/selection.csv" : sel_out;
    fgwas::write_selection_csv(out, selection);
    std::cerr << "selected " << selection.selected.size() << " SNPs at level " << sel_level
              << '\n';
    return 0;
  }

  if (ref_cmd->parsed()) {
    const auto data = load_or_die(ref_data, ref_config.seed);
    const int order = ref_degree + 1;
    const auto defaults = fgwas::Hyperparameters::defaults(order);
    ref_hyper.sigma_m0 = defaults.sigma_m0;
    ref_hyper.sigma_r0 = defaults.sigma_r0;
    const auto selection = align_selection(fgwas::read_selection_csv(ref_selection),
                                           data.geno.snp_names, order, ref_level);
    const auto result = fgwas::refit(data, order, selection, ref_hyper, ref_config);

    std::filesystem::create_directories(ref_out);
    fgwas::write_summary_csv(ref_out + "/summary.csv", result.chains, data.geno.snp_names,
                             ref_level);
    fgwas::write_selection_csv(ref_out + "/selection.csv", selection);
    auto meta = base_meta("refit", data, order, ref_config, ref_level);
    meta.converged = result.chains.converged;
    meta.max_psrf = result.chains.monitor.max_psrf;
    meta.range = data.range;
    meta.log_lik = result.log_lik;
    meta.bic = result.bic;
    meta.k = result.k;
    fgwas::write_meta_json(ref_out + "/meta.json", meta);

    report_convergence(result.chains);
    std::cerr << "BIC " << result.bic << " (k = " << result.k << ")\n";
    return result.chains.converged ? 0 : kExitNoConverge;
  }

  if (swp_cmd->parsed()) {
    const auto data = load_or_die(swp_data, swp_config.seed);
    std::vector<int> degrees;
    for (int d = 0; d <= swp_max_degree; ++d) degrees.push_back(d);
    const auto result = fgwas::bic_degree_sweep(data, degrees, swp_config, swp_level);

    std::filesystem::create_directories(swp_out);
    fgwas::write_bic_csv(swp_out + "/bic.csv", result);
    auto meta = base_meta("sweep", data, result.chosen_degree + 1, swp_config, swp_level);
    bool chosen_converged = false;
    for (const auto& e : result.table)
      if (e.degree == result.chosen_degree) chosen_converged = e.converged;
    meta.converged = chosen_converged;
    meta.range = data.range;
    fgwas::write_meta_json(swp_out + "/meta.json", meta);

    std::cerr << "chose degree " << result.chosen_degree << '\n';
    return chosen_converged ? 0 : kExitNoConverge;
  }

  // report
  const auto meta = fgwas::read_meta_json(rep_run + "/meta.json");
  const auto rows = fgwas::read_summary_csv(rep_run + "/summary.csv");
  const auto selection = fgwas::read_selection_csv(rep_run + "/selection.csv");
  if (meta.order <= 0) throw std::runtime_error(rep_run + "/meta.json: missing order");

  // Per-block means and intervals from the summary rows.
  auto block_of = [&](const std::string& param, const std::string& snp) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(meta.order);
    std::vector<fgwas::CredibleInterval> ci(meta.order);
    int found = 0;
    for (const auto& row : rows) {
      if (row.param != param || row.snp != snp) continue;
      if (row.coef < 0 || row.coef >= meta.order)
        throw std::runtime_error("summary row for " + param + "/" + snp +
                                 " has coefficient index " + std::to_string(row.coef));
      mean(row.coef) = row.mean;
      ci[row.coef] = {row.q_lo, row.q_hi};
      ++found;
    }
    if (found != meta.order)
      throw std::runtime_error("summary is missing coefficients of " + param +
                               (snp.empty() ? "" : " " + snp));
    return std::make_pair(mean, ci);
  };

  std::filesystem::create_directories(rep_out);
  const auto [m_mean, m_ci] = block_of("m", "");
  fgwas::write_band_csv(rep_out + "/band_mean.csv",
                        fgwas::effect_band(m_mean, m_ci, meta.range, rep_grid));
  int bands = 1;
  for (const auto& e : selection.entries) {
    if (e.additive) {
      const auto [mean, ci] = block_of("b", e.snp);
      fgwas::write_band_csv(rep_out + "/band_add_" + e.snp + ".csv",
                            fgwas::effect_band(mean, ci, meta.range, rep_grid));
      ++bands;
    }
    if (e.dominant) {
      const auto [mean, ci] = block_of("c", e.snp);
      fgwas::write_band_csv(rep_out + "/band_dom_" + e.snp + ".csv",
                            fgwas::effect_band(mean, ci, meta.range, rep_grid));
      ++bands;
    }
  }
  std::cerr << "wrote " << bands << " band files to " << rep_out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
