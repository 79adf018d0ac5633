#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fgwas/io.hpp"

using namespace fgwas;
namespace fs = std::filesystem;

namespace {

// FGWAS_CLI_PATH is injected by the build as the fgwas binary location.
const std::string kCli = FGWAS_CLI_PATH;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("fgwas_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string dir(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args, const std::string& log) {
  const int rc = std::system((kCli + " " + args + " > " + log + " 2>&1").c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long line_count(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  long count = 0;
  while (std::getline(in, line)) ++count;
  return count;
}

}  // namespace

TEST_CASE("simulate, fit, select, refit, sweep and report chain together") {
  TempDir ws("cli_pipeline");
  const std::string log = ws.dir("log.txt");
  const std::string data = ws.dir("data");

  REQUIRE(run_cli("simulate --out " + data + " --n 24 --p 6 --seed 7", log) == 0);
  for (const char* name : {"phenotype.csv", "covariates.csv", "genotype.csv", "truth.json"})
    CHECK(fs::exists(data + "/" + std::string(name)));
  const auto loaded =
      load_dataset(data + "/phenotype.csv", data + "/genotype.csv", data + "/covariates.csv", 1);
  REQUIRE(loaded.data.n() == 24);
  REQUIRE(loaded.data.p() == 6);
  CHECK(loaded.data.q == 1);

  const std::string dflags = " --phen " + data + "/phenotype.csv --geno " + data +
                             "/genotype.csv --cov " + data + "/covariates.csv";
  const std::string sflags =
      " --chains 2 --seed 11 --burn-in 400 --check-every 100 --max-monitor 4000"
      " --post-iters 400 --thin 2";

  // fit: degree 3 on the cubic truth, draws retained for re-selection.
  const std::string fit = ws.dir("fit");
  const int fit_rc = run_cli("fit" + dflags + " --out " + fit + " --degree 3 --draws" + sflags, log);
  const RunMeta fmeta = read_meta_json(fit + "/meta.json");
  CHECK(fmeta.kind == "fit");
  CHECK(fmeta.order == 4);
  CHECK(fmeta.n == 24);
  CHECK(fmeta.p == 6);
  CHECK(fmeta.q == 1);
  CHECK(fmeta.chains == 2);
  CHECK(fmeta.has_draws);
  CHECK(fit_rc == (fmeta.converged ? 0 : 3));
  const auto rows = read_summary_csv(fit + "/summary.csv");
  CHECK(rows.size() == 4 + 4 + 24 + 24 + 4);
  const auto fsel = read_selection_csv(fit + "/selection.csv");
  REQUIRE(fsel.entries.size() == 6);
  for (int j = 0; j < 6; ++j) CHECK(fsel.entries[j].snp == loaded.data.geno.snp_names[j]);
  const DrawsTable draws = read_draws_jsonl(fit + "/draws.jsonl");
  CHECK(draws.p == 6);
  CHECK(draws.order == 4);
  CHECK(draws.snp_names == loaded.data.geno.snp_names);
  CHECK(draws.b[0].size() == 400);  // 2 chains x post-iters / thin

  // select at the summary's own level reproduces the fit's selection file.
  const std::string resel = ws.dir("selection_re.csv");
  REQUIRE(run_cli("select --run " + fit + " --out " + resel, log) == 0);
  CHECK(read_file(resel) == read_file(fit + "/selection.csv"));

  // A lower level widens the selection, never narrows it.
  const std::string loose = ws.dir("selection_80.csv");
  REQUIRE(run_cli("select --run " + fit + " --level 0.8 --out " + loose, log) == 0);
  const auto sel80 = read_selection_csv(loose);
  REQUIRE(sel80.entries.size() == 6);
  for (int j = 0; j < 6; ++j) {
    if (fsel.entries[j].additive) CHECK(sel80.entries[j].additive);
    if (fsel.entries[j].dominant) CHECK(sel80.entries[j].dominant);
  }

  // refit: flat-prior rerun on the selected blocks, BIC bookkeeping in meta.
  const std::string ref = ws.dir("refit");
  const int ref_rc = run_cli("refit" + dflags + " --selection " + fit + "/selection.csv --out " +
                                 ref + " --degree 3" + sflags,
                             log);
  const RunMeta rmeta = read_meta_json(ref + "/meta.json");
  CHECK(rmeta.kind == "refit");
  CHECK(ref_rc == (rmeta.converged ? 0 : 3));
  const long blocks = static_cast<long>(fsel.additive_blocks.size() + fsel.dominant_blocks.size());
  CHECK(rmeta.k == 4 * (2 + blocks) + 2);
  CHECK(rmeta.bic == doctest::Approx(-2.0 * rmeta.log_lik +
                                     static_cast<double>(rmeta.k) *
                                         std::log(static_cast<double>(rmeta.total_obs)))
                         .epsilon(1e-9));
  CHECK(read_file(ref + "/selection.csv") == read_file(fit + "/selection.csv"));

  // sweep: one BIC row per degree, meta carries the chosen order.
  const std::string swp = ws.dir("sweep");
  const int swp_rc =
      run_cli("sweep" + dflags + " --out " + swp + " --max-degree 1" + sflags, log);
  CHECK((swp_rc == 0 || swp_rc == 3));
  CHECK(line_count(swp + "/bic.csv") == 3);  // header + degrees 0, 1
  const RunMeta smeta = read_meta_json(swp + "/meta.json");
  CHECK(smeta.kind == "sweep");
  CHECK(smeta.order >= 1);
  CHECK(smeta.order <= 2);

  // report: a band for the mean curve plus one per selected block.
  const std::string rep = ws.dir("report");
  REQUIRE(run_cli("report --run " + fit + " --out " + rep + " --grid-points 11", log) == 0);
  CHECK(line_count(rep + "/band_mean.csv") == 12);
  long bands = 0;
  for (const auto& entry : fs::directory_iterator(rep)) {
    (void)entry;
    ++bands;
  }
  CHECK(bands == 1 + blocks);
  for (const auto& e : fsel.entries) {
    if (e.additive) CHECK(fs::exists(rep + "/band_add_" + e.snp + ".csv"));
    if (e.dominant) CHECK(fs::exists(rep + "/band_dom_" + e.snp + ".csv"));
  }
}

TEST_CASE("usage and data errors map to distinct exit codes") {
  TempDir ws("cli_errors");
  const std::string log = ws.dir("log.txt");
  CHECK(run_cli("", log) == 1);
  CHECK(run_cli("--help", log) == 0);
  CHECK(run_cli("fit --phen a --geno b", log) == 1);           // missing --out
  CHECK(run_cli("frobnicate", log) == 1);                      // unknown subcommand
  CHECK(run_cli("fit --degree 9 --phen a --geno b --out c", log) == 1);
  CHECK(run_cli("fit --phen " + ws.dir("absent.csv") + " --geno " + ws.dir("absent.csv") +
                    " --out " + ws.dir("out"),
                log) == 2);
  CHECK(run_cli("report --run " + ws.dir("nothing") + " --out " + ws.dir("out"), log) == 2);

  // Re-selection at a new level requires retained draws.
  const std::string run = ws.dir("run");
  fs::create_directories(run);
  RunMeta meta;
  meta.kind = "fit";
  meta.order = 4;
  meta.level = 0.95;
  meta.has_draws = false;
  write_meta_json(run + "/meta.json", meta);
  CHECK(run_cli("select --run " + run + " --level 0.8", log) == 2);
  CHECK(read_file(log).find("draws.jsonl") != std::string::npos);
}
