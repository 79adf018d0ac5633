#include "fgwas/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fgwas/rng.hpp"

namespace fgwas {

namespace {

using nlohmann::json;

[[noreturn]] void io_error(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) io_error(path, "cannot open for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) io_error(path, "cannot open for writing");
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    std::ostringstream os;
    os << "line " << line_no << ": '" << s << "' is not a number";
    io_error(path, os.str());
  }
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == ".";
}

}  // namespace

LoadedDataset load_dataset(const std::string& phenotype_csv, const std::string& genotype_csv,
                           const std::string& covariates_csv, std::uint64_t impute_seed) {
  LoadedDataset out;
  LongitudinalDataset& data = out.data;

  // Phenotypes: subjects in order of first appearance, rows sorted by time.
  std::vector<std::string> ids;
  std::map<std::string, std::size_t> id_index;
  std::vector<std::vector<std::pair<double, double>>> rows;
  {
    auto in = open_in(phenotype_csv);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) io_error(phenotype_csv, "empty file");
    ++line_no;
    const auto header = split_csv(line);
    if (header.size() != 3 || header[0] != "subject_id")
      io_error(phenotype_csv, "expected header subject_id,time,value");
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (f.size() != 3) {
        std::ostringstream os;
        os << "line " << line_no << ": expected 3 fields, got " << f.size();
        io_error(phenotype_csv, os.str());
      }
      auto [it, inserted] = id_index.try_emplace(f[0], ids.size());
      if (inserted) {
        ids.push_back(f[0]);
        rows.emplace_back();
      }
      rows[it->second].emplace_back(parse_double(f[1], phenotype_csv, line_no),
                                    parse_double(f[2], phenotype_csv, line_no));
    }
  }
  if (ids.empty()) io_error(phenotype_csv, "no phenotype rows");

  const int n = static_cast<int>(ids.size());
  data.subjects.resize(n);
  std::vector<std::vector<double>> all_times(n);
  for (int i = 0; i < n; ++i) {
    auto& rw = rows[i];
    std::sort(rw.begin(), rw.end());
    for (std::size_t l = 0; l + 1 < rw.size(); ++l)
      if (!(rw[l].first < rw[l + 1].first))
        io_error(phenotype_csv, "subject '" + ids[i] + "' has duplicate time " +
                                    fmt(rw[l].first));
    Subject& subj = data.subjects[i];
    subj.id = ids[i];
    subj.y.resize(static_cast<Eigen::Index>(rw.size()));
    all_times[i].reserve(rw.size());
    for (std::size_t l = 0; l < rw.size(); ++l) {
      all_times[i].push_back(rw[l].first);
      subj.y(static_cast<Eigen::Index>(l)) = rw[l].second;
    }
  }
  data.range = dataset_time_range(all_times);
  for (int i = 0; i < n; ++i)
    data.subjects[i].grid = standardize_times(all_times[i], data.range, ids[i]);

  // Covariates.
  if (!covariates_csv.empty()) {
    auto in = open_in(covariates_csv);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) io_error(covariates_csv, "empty file");
    ++line_no;
    const auto header = split_csv(line);
    if (header.size() < 2 || header[0] != "subject_id")
      io_error(covariates_csv, "expected header subject_id,x1,...");
    data.q = static_cast<int>(header.size()) - 1;
    std::vector<bool> seen(n, false);
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (static_cast<int>(f.size()) != data.q + 1) {
        std::ostringstream os;
        os << "line " << line_no << ": expected " << data.q + 1 << " fields";
        io_error(covariates_csv, os.str());
      }
      const auto it = id_index.find(f[0]);
      if (it == id_index.end())
        io_error(covariates_csv, "subject '" + f[0] + "' not in phenotype file");
      Subject& subj = data.subjects[it->second];
      subj.x.resize(data.q);
      for (int k = 0; k < data.q; ++k)
        subj.x(k) = parse_double(f[k + 1], covariates_csv, line_no);
      seen[it->second] = true;
    }
    for (int i = 0; i < n; ++i)
      if (!seen[i]) io_error(covariates_csv, "subject '" + ids[i] + "' missing");
  } else {
    data.q = 0;
    for (auto& subj : data.subjects) subj.x.resize(0);
  }

  // Genotypes.
  {
    auto in = open_in(genotype_csv);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) io_error(genotype_csv, "empty file");
    ++line_no;
    auto header = split_csv(line);
    if (header.size() < 2 || header[0] != "subject_id")
      io_error(genotype_csv, "expected header subject_id,<snp>,...");
    std::vector<std::string> snp_names(header.begin() + 1, header.end());
    const int p = static_cast<int>(snp_names.size());
    Eigen::MatrixXi calls = Eigen::MatrixXi::Constant(n, p, kMissingCall);
    std::vector<bool> seen(n, false);
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (static_cast<int>(f.size()) != p + 1) {
        std::ostringstream os;
        os << "line " << line_no << ": expected " << p + 1 << " fields";
        io_error(genotype_csv, os.str());
      }
      const auto it = id_index.find(f[0]);
      if (it == id_index.end())
        io_error(genotype_csv, "subject '" + f[0] + "' not in phenotype file");
      if (seen[it->second])
        io_error(genotype_csv, "subject '" + f[0] + "' appears twice");
      seen[it->second] = true;
      for (int j = 0; j < p; ++j) {
        const std::string& cell = f[j + 1];
        if (is_missing(cell)) continue;
        if (cell != "0" && cell != "1" && cell != "2") {
          std::ostringstream os;
          os << "line " << line_no << ": call '" << cell << "' for SNP '" << snp_names[j]
             << "' is not 0/1/2/NA";
          io_error(genotype_csv, os.str());
        }
        calls(static_cast<int>(it->second), j) = cell[0] - '0';
      }
    }
    for (int i = 0; i < n; ++i)
      if (!seen[i]) io_error(genotype_csv, "subject '" + ids[i] + "' missing");
    auto rng = make_stream(impute_seed, 0x67656e6fULL);
    data.geno = encode_genotypes(calls, std::move(snp_names), rng);
  }

  out.warnings = validate_dataset(data, false);
  return out;
}

void save_dataset(const LongitudinalDataset& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir + "/phenotype.csv");
    out << "subject_id,time,value\n";
    for (const auto& subj : data.subjects)
      for (int l = 0; l < subj.grid.size(); ++l)
        out << subj.id << ',' << fmt(subj.grid.raw[l]) << ',' << fmt(subj.y(l)) << '\n';
  }
  if (data.q > 0) {
    auto out = open_out(dir + "/covariates.csv");
    out << "subject_id";
    for (int k = 1; k <= data.q; ++k) out << ",x" << k;
    out << '\n';
    for (const auto& subj : data.subjects) {
      out << subj.id;
      for (int k = 0; k < data.q; ++k) out << ',' << fmt(subj.x(k));
      out << '\n';
    }
  }
  {
    auto out = open_out(dir + "/genotype.csv");
    out << "subject_id";
    for (const auto& name : data.geno.snp_names) out << ',' << name;
    out << '\n';
    const Eigen::MatrixXi calls = decode_genotypes(data.geno);
    for (int i = 0; i < data.n(); ++i) {
      out << data.subjects[i].id;
      for (int j = 0; j < data.p(); ++j) out << ',' << calls(i, j);
      out << '\n';
    }
  }
}

void write_truth_json(const std::string& path, const SimDesign& design, const TruthTable& truth,
                      std::uint64_t seed) {
  json j;
  j["order"] = design.order;
  j["n"] = design.n;
  j["p"] = design.p;
  j["maf"] = design.maf;
  j["rho_g"] = design.rho_g;
  j["sigma2"] = design.sigma2;
  j["rho"] = design.rho;
  j["seed"] = seed;
  j["m"] = std::vector<double>(truth.m.data(), truth.m.data() + truth.m.size());
  json r = json::array();
  for (Eigen::Index k = 0; k < truth.r.rows(); ++k) {
    json row = json::array();
    for (Eigen::Index a = 0; a < truth.r.cols(); ++a) row.push_back(truth.r(k, a));
    r.push_back(row);
  }
  j["r"] = r;
  json add = json::object(), dom = json::object();
  const int width = static_cast<int>(std::to_string(design.p).size());
  for (int jx = 0; jx < design.p; ++jx) {
    std::string num = std::to_string(jx + 1);
    while (static_cast<int>(num.size()) < width) num.insert(num.begin(), '0');
    const std::string name = "snp" + num;
    if (truth.additive_causal(jx)) {
      json row = json::array();
      for (Eigen::Index a = 0; a < truth.b.cols(); ++a) row.push_back(truth.b(jx, a));
      add[name] = row;
    }
    if (truth.dominant_causal(jx)) {
      json row = json::array();
      for (Eigen::Index a = 0; a < truth.c.cols(); ++a) row.push_back(truth.c(jx, a));
      dom[name] = row;
    }
  }
  j["additive"] = add;
  j["dominant"] = dom;
  open_out(path) << j.dump(2) << '\n';
}

namespace {

struct PooledStats {
  double mean, sd, q_lo, q_med, q_hi, psrf_val;
};

PooledStats pooled_stats(const ChainSet& chains, double level,
                         const std::function<double(const ParameterState&)>& get,
                         std::vector<double>& scratch,
                         std::vector<std::vector<double>>& per_chain) {
  scratch.clear();
  per_chain.assign(chains.draws.size(), {});
  for (std::size_t ch = 0; ch < chains.draws.size(); ++ch) {
    per_chain[ch].reserve(chains.draws[ch].size());
    for (const auto& st : chains.draws[ch]) {
      const double x = get(st);
      scratch.push_back(x);
      per_chain[ch].push_back(x);
    }
  }
  PooledStats st{};
  const std::size_t nd = scratch.size();
  double s = 0.0, s2 = 0.0;
  for (double x : scratch) {
    s += x;
    s2 += x * x;
  }
  st.mean = s / nd;
  const double var = std::max(0.0, s2 / nd - st.mean * st.mean);
  st.sd = std::sqrt(nd > 1 ? var * nd / (nd - 1) : 0.0);
  std::sort(scratch.begin(), scratch.end());
  const double tail = (1.0 - level) / 2.0;
  st.q_lo = quantile_type7(scratch, tail);
  st.q_med = quantile_type7(scratch, 0.5);
  st.q_hi = quantile_type7(scratch, 1.0 - tail);
  st.psrf_val = std::numeric_limits<double>::quiet_NaN();
  if (per_chain.size() >= 2 && per_chain.front().size() >= 2) st.psrf_val = psrf(per_chain);
  return st;
}

void write_row(std::ofstream& out, const std::string& param, const std::string& snp, int coef,
               const PooledStats& st) {
  out << param << ',' << snp << ',';
  if (coef >= 0) out << coef;
  out << ',' << fmt(st.mean) << ',' << fmt(st.sd) << ',' << fmt(st.q_lo) << ',' << fmt(st.q_med)
      << ',' << fmt(st.q_hi) << ',';
  if (std::isfinite(st.psrf_val)) out << fmt(st.psrf_val);
  else if (std::isinf(st.psrf_val)) out << "inf";
  out << '\n';
}

}  // namespace

void write_summary_csv(const std::string& path, const ChainSet& chains,
                       const std::vector<std::string>& snp_names, double level) {
  if (static_cast<int>(snp_names.size()) != chains.p)
    throw std::invalid_argument("write_summary_csv: name count != p");
  auto out = open_out(path);
  out << "param,snp,coef,mean,sd,q_lo,q_med,q_hi,psrf\n";
  std::vector<double> scratch;
  std::vector<std::vector<double>> per_chain;
  auto emit = [&](const std::string& param, const std::string& snp, int coef,
                  std::function<double(const ParameterState&)> get) {
    write_row(out, param, snp, coef, pooled_stats(chains, level, get, scratch, per_chain));
  };

  for (int k = 0; k < chains.order; ++k)
    emit("m", "", k, [k](const ParameterState& s) { return s.m(k); });
  for (int kq = 0; kq < chains.q; ++kq)
    for (int k = 0; k < chains.order; ++k)
      emit("r", std::to_string(kq), k,
           [kq, k](const ParameterState& s) { return s.r(kq, k); });
  for (int j = 0; j < chains.p; ++j)
    for (int k = 0; k < chains.order; ++k)
      emit("b", snp_names[j], k, [j, k](const ParameterState& s) { return s.b(j, k); });
  for (int j = 0; j < chains.p; ++j)
    for (int k = 0; k < chains.order; ++k)
      emit("c", snp_names[j], k, [j, k](const ParameterState& s) { return s.c(j, k); });
  emit("sigma2", "", -1, [](const ParameterState& s) { return s.sigma2; });
  emit("rho", "", -1, [](const ParameterState& s) { return s.rho; });
  emit("lambda2", "", -1, [](const ParameterState& s) { return s.lambda2; });
  emit("lambda2_star", "", -1, [](const ParameterState& s) { return s.lambda2_star; });
}

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) io_error(path, "empty file");
  ++line_no;
  if (split_csv(line).size() != 9) io_error(path, "unexpected summary header");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 9) {
      std::ostringstream os;
      os << "line " << line_no << ": expected 9 fields";
      io_error(path, os.str());
    }
    SummaryRow row;
    row.param = f[0];
    row.snp = f[1];
    row.coef = f[2].empty() ? -1 : static_cast<int>(parse_double(f[2], path, line_no));
    row.mean = parse_double(f[3], path, line_no);
    row.sd = parse_double(f[4], path, line_no);
    row.q_lo = parse_double(f[5], path, line_no);
    row.q_med = parse_double(f[6], path, line_no);
    row.q_hi = parse_double(f[7], path, line_no);
    if (f[8] == "inf")
      row.psrf = std::numeric_limits<double>::infinity();
    else if (!f[8].empty())
      row.psrf = parse_double(f[8], path, line_no);
    rows.push_back(row);
  }
  return rows;
}

void write_meta_json(const std::string& path, const RunMeta& meta) {
  json j;
  j["kind"] = meta.kind;
  j["order"] = meta.order;
  j["degree"] = meta.order - 1;
  j["chains"] = meta.chains;
  j["n"] = meta.n;
  j["p"] = meta.p;
  j["q"] = meta.q;
  j["total_obs"] = meta.total_obs;
  j["seed"] = meta.seed;
  j["level"] = meta.level;
  j["converged"] = meta.converged;
  if (std::isfinite(meta.max_psrf)) j["max_psrf"] = meta.max_psrf;
  j["t_min"] = meta.range.t_min;
  j["t_max"] = meta.range.t_max;
  j["has_draws"] = meta.has_draws;
  if (meta.kind == "refit") {
    j["log_lik"] = meta.log_lik;
    j["bic"] = meta.bic;
    j["k"] = meta.k;
  }
  open_out(path) << j.dump(2) << '\n';
}

RunMeta read_meta_json(const std::string& path) {
  json j;
  try {
    open_in(path) >> j;
  } catch (const json::exception& e) {
    io_error(path, e.what());
  }
  RunMeta m;
  m.kind = j.value("kind", "");
  m.order = j.value("order", 0);
  m.chains = j.value("chains", 0);
  m.n = j.value("n", 0);
  m.p = j.value("p", 0);
  m.q = j.value("q", 0);
  m.total_obs = j.value("total_obs", 0L);
  m.seed = j.value("seed", static_cast<std::uint64_t>(0));
  m.level = j.value("level", 0.95);
  m.converged = j.value("converged", false);
  m.max_psrf = j.value("max_psrf", std::numeric_limits<double>::quiet_NaN());
  m.range.t_min = j.value("t_min", 0.0);
  m.range.t_max = j.value("t_max", 0.0);
  m.has_draws = j.value("has_draws", false);
  m.log_lik = j.value("log_lik", 0.0);
  m.bic = j.value("bic", 0.0);
  m.k = j.value("k", 0L);
  return m;
}

void write_draws_jsonl(const std::string& path, const ChainSet& chains,
                       const std::vector<std::string>& snp_names) {
  auto out = open_out(path);
  json names = snp_names;
  for (std::size_t ch = 0; ch < chains.draws.size(); ++ch) {
    for (std::size_t t = 0; t < chains.draws[ch].size(); ++t) {
      const ParameterState& s = chains.draws[ch][t];
      json j;
      j["chain"] = ch;
      j["draw"] = t;
      j["sigma2"] = s.sigma2;
      j["rho"] = s.rho;
      j["lambda2"] = s.lambda2;
      j["lambda2_star"] = s.lambda2_star;
      j["m"] = std::vector<double>(s.m.data(), s.m.data() + s.m.size());
      json r = json::array();
      for (Eigen::Index k = 0; k < s.r.rows(); ++k) {
        json row = json::array();
        for (Eigen::Index a = 0; a < s.r.cols(); ++a) row.push_back(s.r(k, a));
        r.push_back(row);
      }
      j["r"] = r;
      json b = json::array(), c = json::array();
      for (Eigen::Index jx = 0; jx < s.b.rows(); ++jx) {
        json brow = json::array(), crow = json::array();
        for (Eigen::Index a = 0; a < s.b.cols(); ++a) {
          brow.push_back(s.b(jx, a));
          crow.push_back(s.c(jx, a));
        }
        b.push_back(brow);
        c.push_back(crow);
      }
      j["b"] = b;
      j["c"] = c;
      if (ch == 0 && t == 0) j["snp_names"] = names;
      out << j.dump() << '\n';
    }
  }
}

DrawsTable read_draws_jsonl(const std::string& path) {
  auto in = open_in(path);
  DrawsTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      std::ostringstream os;
      os << "line " << line_no << ": " << e.what();
      io_error(path, os.str());
    }
    const auto& b = j.at("b");
    const auto& c = j.at("c");
    if (table.p == 0) {
      table.p = static_cast<int>(b.size());
      table.order = static_cast<int>(b.at(0).size());
      table.b.resize(static_cast<std::size_t>(table.p) * table.order);
      table.c.resize(static_cast<std::size_t>(table.p) * table.order);
      if (j.contains("snp_names"))
        table.snp_names = j["snp_names"].get<std::vector<std::string>>();
    }
    for (int jx = 0; jx < table.p; ++jx)
      for (int k = 0; k < table.order; ++k) {
        table.b[static_cast<std::size_t>(jx) * table.order + k].push_back(
            b.at(jx).at(k).get<double>());
        table.c[static_cast<std::size_t>(jx) * table.order + k].push_back(
            c.at(jx).at(k).get<double>());
      }
  }
  if (table.p == 0) io_error(path, "no draws");
  if (table.snp_names.empty())
    for (int jx = 0; jx < table.p; ++jx) table.snp_names.push_back("snp" + std::to_string(jx + 1));
  return table;
}

void write_selection_csv(const std::string& path, const SelectionReport& selection) {
  auto out = open_out(path);
  out << "snp,additive,dominant\n";
  for (const auto& e : selection.entries)
    out << e.snp << ',' << (e.additive ? 1 : 0) << ',' << (e.dominant ? 1 : 0) << '\n';
}

SelectionReport read_selection_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) io_error(path, "empty file");
  ++line_no;
  const auto header = split_csv(line);
  if (header.size() != 3 || header[0] != "snp")
    io_error(path, "expected header snp,additive,dominant");
  SelectionReport rep;
  int j = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 3) {
      std::ostringstream os;
      os << "line " << line_no << ": expected 3 fields";
      io_error(path, os.str());
    }
    SelectionEntry e;
    e.snp = f[0];
    e.additive = f[1] == "1";
    e.dominant = f[2] == "1";
    if ((f[1] != "0" && f[1] != "1") || (f[2] != "0" && f[2] != "1")) {
      std::ostringstream os;
      os << "line " << line_no << ": flags must be 0 or 1";
      io_error(path, os.str());
    }
    rep.entries.push_back(e);
    if (e.additive) rep.additive_blocks.push_back(j);
    if (e.dominant) rep.dominant_blocks.push_back(j);
    if (e.additive || e.dominant) rep.selected.push_back(j);
    ++j;
  }
  return rep;
}

void write_bic_csv(const std::string& path, const BicSweepResult& result) {
  auto out = open_out(path);
  out << "degree,bic,converged,selected_blocks\n";
  for (const auto& e : result.table)
    out << e.degree << ',' << fmt(e.bic) << ',' << (e.converged ? 1 : 0) << ','
        << e.selected_blocks << '\n';
}

void write_band_csv(const std::string& path, const std::vector<BandPoint>& band) {
  auto out = open_out(path);
  out << "t,mean,lo,hi\n";
  for (const auto& pt : band)
    out << fmt(pt.t) << ',' << fmt(pt.mean) << ',' << fmt(pt.lo) << ',' << fmt(pt.hi) << '\n';
}

}  // namespace fgwas
