// Apache License, Version 2.0, refer to LICENSE.txt
//
// hdphom: coefficient tables, exact means, asymptotic variances, weight
// sampling, and Monte Carlo limit-theorem experiments for hierarchical
// Dirichlet weight models, behind a single binary.
//
// Exit codes: 0 success, 1 execution error, 2 verification or statistical
// failure, 64 usage error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hdphom/asymptotics.hpp"
#include "hdphom/combinatorics.hpp"
#include "hdphom/montecarlo.hpp"
#include "hdphom/rational.hpp"
#include "hdphom/rng.hpp"
#include "hdphom/sampling.hpp"
#include "hdphom/statistics.hpp"
#include "hdphom/verify.hpp"
#include "hdphom/version.hpp"

namespace {

using namespace hdphom;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 2;

// Every emitted file starts with '#' metadata lines carrying the subcommand,
// version, and the full effective parameter set, so a run can be reproduced
// from its header alone.
void write_meta(std::ostream& os, const std::string& subcommand, const KvPairs& params) {
  os << "# subcommand=" << subcommand << "\n";
  os << "# version=" << kVersion << "\n";
  for (const auto& [k, v] : params) os << "# " << k << "=" << v << "\n";
}

class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output file: " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::string join_parts(const std::vector<int>& parts) {
  std::string s;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) s += '|';
    s += std::to_string(parts[i]);
  }
  return s;
}

// ---- coeffs ----

struct CoeffsArgs {
  int m = 2;
  int L = 1;
  double c = 1.0;
  uint64_t cap = 1000000;
  std::string format = "text";
  std::string out;
};

int run_coeffs(const CoeffsArgs& a) {
  CoefficientSet cs = make_coefficient_set(a.m, a.L, a.c, default_stirling_table(), a.cap);
  OutputTarget target(a.out);
  std::ostream& os = target.os();
  KvPairs params;
  params.emplace_back("m", std::to_string(a.m));
  params.emplace_back("L", std::to_string(a.L));
  params.emplace_back("c", format_double(a.c));
  params.emplace_back("cap", std::to_string(a.cap));
  write_meta(os, "coeffs", params);
  if (a.format == "csv") {
    os << "kind,composition,j,value\n";
    for (int j = 1; j <= a.m; ++j) os << "A,," << j << "," << to_string(cs.A[j]) << "\n";
    for (int j = 1; j <= 2 * a.m; ++j)
      os << "Atilde,," << j << "," << to_string(cs.A_tilde[j]) << "\n";
    for (const auto& [parts, aj] : cs.a)
      for (int j = 1; j <= a.m; ++j)
        os << "a," << join_parts(parts) << "," << j << "," << to_string(aj[j]) << "\n";
    for (const auto& [parts, C] : cs.C)
      os << "C," << join_parts(parts) << ",," << format_double(C) << "\n";
  } else {
    os << "A_j (j=1.." << a.m << "):";
    for (int j = 1; j <= a.m; ++j) os << " " << to_string(cs.A[j]);
    os << "\nA~_j (j=1.." << 2 * a.m << "):";
    for (int j = 1; j <= 2 * a.m; ++j) os << " " << to_string(cs.A_tilde[j]);
    os << "\n";
    for (const auto& [parts, aj] : cs.a) {
      os << "a(" << join_parts(parts) << "):";
      for (int j = 1; j <= a.m; ++j) os << " " << to_string(aj[j]);
      os << "  C=" << format_double(cs.C.at(parts)) << "\n";
    }
  }
  return kExitOk;
}

// ---- mean ----

struct MeanArgs {
  std::string model = "hdp";
  int m = 2;
  double alpha = 0.0;
  double beta = 0.0;
  long long n = 0;
  int L = 1;
  std::string format = "text";
  std::string out;
};

int run_mean(const MeanArgs& a) {
  Model model = model_from_string(a.model);
  const StirlingTable& table = default_stirling_table();
  double mean = 0.0;
  Rational exact;
  CoefficientSet cs;
  switch (model) {
    case Model::Hdp:
      mean = exact_mean_hdp(a.alpha, a.beta, a.m, table);
      exact = exact_mean_hdp_rational(a.alpha, a.beta, a.m, table);
      break;
    case Model::Fdhdp:
      if (a.n < 1) throw std::invalid_argument("mean: the fdhdp model requires --n");
      mean = exact_mean_fdhdp(a.alpha, a.beta, a.n, a.m, table);
      exact = exact_mean_fdhdp_rational(a.alpha, a.beta, a.n, a.m, table);
      break;
    case Model::Groups:
      cs = make_coefficient_set(a.m, a.L, a.alpha / a.beta, table);
      mean = exact_mean_groups(a.alpha, a.beta, a.m, a.L, cs);
      exact = exact_mean_groups_rational(a.alpha, a.beta, a.m, a.L, cs);
      break;
  }
  OutputTarget target(a.out);
  std::ostream& os = target.os();
  KvPairs params;
  params.emplace_back("model", a.model);
  params.emplace_back("m", std::to_string(a.m));
  params.emplace_back("alpha", format_double(a.alpha));
  params.emplace_back("beta", format_double(a.beta));
  params.emplace_back("n", std::to_string(a.n));
  params.emplace_back("L", std::to_string(a.L));
  write_meta(os, "mean", params);
  if (a.format == "csv") {
    os << "model,m,alpha,beta,n,L,mean\n";
    os << a.model << "," << a.m << "," << format_double(a.alpha) << "," << format_double(a.beta)
       << "," << a.n << "," << a.L << "," << format_double(mean) << "\n";
  } else {
    os << "mean=" << format_double(mean) << "\n";
    if (exact.valid) os << "mean_exact=" << exact.str() << "\n";
  }
  return kExitOk;
}

// ---- variance / sweep ----

struct VarianceArgs {
  std::string model = "hdp";
  int m = 2;
  double c = 1.0;
  double d = 1.0;
  int L = 1;
  std::string format = "text";
  std::string out;
};

AsymptoticVariances evaluate_variance(const std::string& model, int m, double c, double d, int L) {
  switch (model_from_string(model)) {
    case Model::Hdp: return variance_hdp(m, c);
    case Model::Fdhdp: return variance_fdhdp(m, c, d);
    case Model::Groups: return variance_groups(m, L, c);
  }
  throw std::logic_error("unreachable");
}

int run_variance(const VarianceArgs& a) {
  AsymptoticVariances v = evaluate_variance(a.model, a.m, a.c, a.d, a.L);
  OutputTarget target(a.out);
  std::ostream& os = target.os();
  KvPairs params;
  params.emplace_back("model", a.model);
  params.emplace_back("m", std::to_string(a.m));
  params.emplace_back("c", format_double(a.c));
  params.emplace_back("d", format_double(a.d));
  params.emplace_back("L", std::to_string(a.L));
  write_meta(os, "variance", params);
  if (a.format == "csv") {
    os << "model,m,L,c,d,level1,level2,correction,total\n";
    os << a.model << "," << a.m << "," << a.L << "," << format_double(a.c) << ","
       << format_double(a.d) << "," << format_double(v.level1) << "," << format_double(v.level2)
       << "," << format_double(v.correction) << "," << format_double(v.total) << "\n";
  } else {
    os << "level1=" << format_double(v.level1) << "\n";
    os << "level2=" << format_double(v.level2) << "\n";
    os << "correction=" << format_double(v.correction) << "\n";
    os << "total=" << format_double(v.total) << "\n";
  }
  return kExitOk;
}

struct SweepArgs {
  std::string model = "hdp";
  int m = 2;
  int L = 1;
  std::string vary = "c";
  double lo = 0.1;
  double hi = 10.0;
  int points = 25;
  double c_fixed = 1.0;
  double d_fixed = 1.0;
  std::string out;
};

int run_sweep(const SweepArgs& a) {
  if (a.vary != "c" && a.vary != "d") throw std::invalid_argument("sweep: --vary must be c or d");
  if (a.vary == "d" && a.model != "fdhdp")
    throw std::invalid_argument("sweep: only the fdhdp model has a d parameter");
  OutputTarget target(a.out);
  std::ostream& os = target.os();
  KvPairs params;
  params.emplace_back("model", a.model);
  params.emplace_back("m", std::to_string(a.m));
  params.emplace_back("L", std::to_string(a.L));
  params.emplace_back("vary", a.vary);
  params.emplace_back("min", format_double(a.lo));
  params.emplace_back("max", format_double(a.hi));
  params.emplace_back("points", std::to_string(a.points));
  params.emplace_back("c", format_double(a.c_fixed));
  params.emplace_back("d", format_double(a.d_fixed));
  write_meta(os, "sweep", params);
  os << "c,d,level1,level2,total\n";
  for (int i = 0; i < a.points; ++i) {
    const double t = a.points == 1 ? 0.0 : double(i) / (a.points - 1);
    const double x = std::exp(std::log(a.lo) + t * (std::log(a.hi) - std::log(a.lo)));
    const double c = a.vary == "c" ? x : a.c_fixed;
    const double d = a.vary == "d" ? x : a.d_fixed;
    AsymptoticVariances v = evaluate_variance(a.model, a.m, c, d, a.L);
    const double d_out = a.model == "fdhdp" ? d : 0.0;
    os << format_double(c) << "," << format_double(d_out) << "," << format_double(v.level1) << ","
       << format_double(v.level2) << "," << format_double(v.total) << "\n";
  }
  return kExitOk;
}

// ---- sample ----

struct SampleArgs {
  std::string model = "gem";
  double alpha = 1.0;
  double beta = 1.0;
  long long n = 0;
  int L = 1;
  long long replicates = 1;
  uint64_t seed = 1;
  double eps = 1e-10;
  std::string out;
};

int run_sample(const SampleArgs& a) {
  OutputTarget target(a.out);
  std::ostream& os = target.os();
  KvPairs params;
  params.emplace_back("model", a.model);
  params.emplace_back("alpha", format_double(a.alpha));
  params.emplace_back("beta", format_double(a.beta));
  params.emplace_back("n", std::to_string(a.n));
  params.emplace_back("L", std::to_string(a.L));
  params.emplace_back("eps", format_double(a.eps));
  params.emplace_back("seed", std::to_string(a.seed));
  params.emplace_back("replicates", std::to_string(a.replicates));

  if (a.model == "groups") {
    std::vector<GroupFamily> fams;
    for (long long r = 0; r < a.replicates; ++r)
      fams.push_back(sample_hdp_groups(a.alpha, a.beta, a.L, a.eps, StreamFamily{a.seed, uint64_t(r)}));
    write_meta(os, "sample", params);
    for (long long r = 0; r < a.replicates; ++r)
      for (int k = 0; k < a.L; ++k)
        os << "# tail_mass." << r << "." << (k + 1) << "="
           << format_double(fams[size_t(r)].groups[size_t(k)].tail_mass) << "\n";
    os << "replicate,group,index,weight\n";
    for (long long r = 0; r < a.replicates; ++r)
      for (int k = 0; k < a.L; ++k) {
        const WeightVector& w = fams[size_t(r)].groups[size_t(k)];
        for (size_t i = 0; i < w.weights.size(); ++i)
          os << r << "," << (k + 1) << "," << i << "," << format_double(w.weights[i]) << "\n";
      }
    return kExitOk;
  }

  std::vector<WeightVector> draws;
  for (long long r = 0; r < a.replicates; ++r) {
    StreamFamily fam{a.seed, uint64_t(r)};
    if (a.model == "gem") {
      RngStream s = fam.level1();
      draws.push_back(sample_gem(a.alpha, a.eps, s));
    } else if (a.model == "hdp") {
      draws.push_back(sample_hdp(a.alpha, a.beta, a.eps, fam));
    } else if (a.model == "fdhdp") {
      if (a.n < 1) throw std::invalid_argument("sample: the fdhdp model requires --n");
      draws.push_back(sample_fdhdp(a.alpha, a.beta, int(a.n), fam));
    } else {
      throw std::invalid_argument("sample: unknown model " + a.model);
    }
  }
  write_meta(os, "sample", params);
  for (long long r = 0; r < a.replicates; ++r)
    os << "# tail_mass." << r << "=" << format_double(draws[size_t(r)].tail_mass) << "\n";
  os << "replicate,index,weight\n";
  for (long long r = 0; r < a.replicates; ++r) {
    const WeightVector& w = draws[size_t(r)];
    for (size_t i = 0; i < w.weights.size(); ++i)
      os << r << "," << i << "," << format_double(w.weights[i]) << "\n";
  }
  return kExitOk;
}

// ---- mc-clt / mc-lln ----

struct McArgs {
  std::string config_path;
  std::string model = "hdp";
  int m = 2;
  double alpha = 500.0;
  double beta = 500.0;
  long long n = 0;
  int L = 1;
  long long replicates = 1000;
  uint64_t seed = 1;
  double eps = 1e-10;
  std::string centering = "exact-mean";
  double ks_threshold = 0.0;
  double lln_delta = 0.2;
  double lln_mean_band = 0.05;
  double lln_fraction_min = 0.95;
  int threads = 0;
  std::string out;
  std::string csv;
};

struct McOptionSet {
  CLI::Option* model = nullptr;
  CLI::Option* m = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* beta = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* L = nullptr;
  CLI::Option* replicates = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* eps = nullptr;
  CLI::Option* centering = nullptr;
  CLI::Option* ks_threshold = nullptr;
  CLI::Option* lln_delta = nullptr;
  CLI::Option* lln_mean_band = nullptr;
  CLI::Option* lln_fraction_min = nullptr;
  CLI::Option* threads = nullptr;
};

McOptionSet add_mc_options(CLI::App* sub, McArgs& a) {
  McOptionSet o;
  sub->add_option("--config", a.config_path, "key=value config file; flags take precedence");
  o.model = sub->add_option("--model", a.model, "hdp, fdhdp, or groups")
                ->check(CLI::IsMember({"hdp", "fdhdp", "groups"}));
  o.m = sub->add_option("--m", a.m, "homozygosity order")->check(CLI::Range(2, 16));
  o.alpha = sub->add_option("--alpha", a.alpha)->check(CLI::PositiveNumber);
  o.beta = sub->add_option("--beta", a.beta)->check(CLI::PositiveNumber);
  o.n = sub->add_option("--n", a.n, "dimension (fdhdp)")->check(CLI::PositiveNumber);
  o.L = sub->add_option("--L", a.L, "group count (groups)")->check(CLI::Range(1, 14));
  o.replicates = sub->add_option("--replicates", a.replicates)->check(CLI::Range(100, 100000000));
  o.seed = sub->add_option("--seed", a.seed, "root seed")->envname("HDPHOM_SEED");
  o.eps = sub->add_option("--eps", a.eps, "stick truncation tolerance");
  o.centering = sub->add_option("--centering", a.centering, "theorem or exact-mean")
                    ->check(CLI::IsMember({"theorem", "exact-mean"}));
  o.ks_threshold = sub->add_option("--ks-threshold", a.ks_threshold,
                                   "KS verdict threshold; 0 selects 1.95/sqrt(R)");
  o.lln_delta = sub->add_option("--delta", a.lln_delta, "LLN concentration band half-width");
  o.lln_mean_band = sub->add_option("--mean-band", a.lln_mean_band, "LLN mean verdict band");
  o.lln_fraction_min =
      sub->add_option("--fraction-min", a.lln_fraction_min, "LLN fraction verdict threshold");
  o.threads = sub->add_option("--threads", a.threads, "worker threads; 0 = auto");
  sub->add_option("--out", a.out, "report path (default stdout)");
  sub->add_option("--csv", a.csv, "also write per-replicate values as CSV");
  return o;
}

// Config-file values fill in whatever the command line left untouched.
void merge_config_file(const McArgs& args_in, const McOptionSet& o, McArgs& a) {
  if (args_in.config_path.empty()) return;
  std::ifstream in(args_in.config_path);
  if (!in) throw std::runtime_error("cannot read config file: " + args_in.config_path);
  std::stringstream ss;
  ss << in.rdbuf();
  KvMap kv = parse_kv_text(ss.str());
  auto take = [&](const char* key, CLI::Option* opt, auto setter) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    if (opt->count() == 0) setter(it->second);
    kv.erase(it);
  };
  take("model", o.model, [&](const std::string& v) { a.model = v; });
  take("m", o.m, [&](const std::string& v) { a.m = std::stoi(v); });
  take("alpha", o.alpha, [&](const std::string& v) { a.alpha = std::stod(v); });
  take("beta", o.beta, [&](const std::string& v) { a.beta = std::stod(v); });
  take("n", o.n, [&](const std::string& v) { a.n = std::stoll(v); });
  take("L", o.L, [&](const std::string& v) { a.L = std::stoi(v); });
  take("replicates", o.replicates, [&](const std::string& v) { a.replicates = std::stoll(v); });
  take("seed", o.seed, [&](const std::string& v) { a.seed = std::stoull(v); });
  take("eps", o.eps, [&](const std::string& v) { a.eps = std::stod(v); });
  take("centering", o.centering, [&](const std::string& v) { a.centering = v; });
  take("ks_threshold", o.ks_threshold, [&](const std::string& v) { a.ks_threshold = std::stod(v); });
  take("lln_delta", o.lln_delta, [&](const std::string& v) { a.lln_delta = std::stod(v); });
  take("lln_mean_band", o.lln_mean_band,
       [&](const std::string& v) { a.lln_mean_band = std::stod(v); });
  take("lln_fraction_min", o.lln_fraction_min,
       [&](const std::string& v) { a.lln_fraction_min = std::stod(v); });
  take("threads", o.threads, [&](const std::string& v) { a.threads = std::stoi(v); });
  for (const auto& [k, v] : kv)
    std::cerr << "warning: ignoring unknown config key '" << k << "'\n";
}

ExperimentConfig config_from_args(const McArgs& a) {
  ExperimentConfig cfg;
  cfg.model = model_from_string(a.model);
  cfg.m = a.m;
  cfg.alpha = a.alpha;
  cfg.beta = a.beta;
  cfg.n = a.n;
  cfg.L = a.L;
  cfg.replicates = a.replicates;
  cfg.root_seed = a.seed;
  cfg.eps = a.eps;
  cfg.centering = centering_from_string(a.centering);
  cfg.ks_threshold = a.ks_threshold;
  cfg.lln_delta = a.lln_delta;
  cfg.lln_mean_band = a.lln_mean_band;
  cfg.lln_fraction_min = a.lln_fraction_min;
  cfg.validate();
  return cfg;
}

int run_mc_clt(const McArgs& a) {
  ExperimentConfig cfg = config_from_args(a);
  RunOptions opt;
  opt.threads = a.threads;
  CltRun run = run_clt(cfg, opt);
  OutputTarget target(a.out);
  std::ostream& os = target.os();
  write_meta(os, "mc-clt", {});
  os << kv_to_text(run.report.to_kv());
  if (!a.csv.empty()) {
    OutputTarget csv_target(a.csv);
    std::ostream& cs = csv_target.os();
    write_meta(cs, "mc-clt", cfg.to_kv());
    cs << "replicate,h_raw,h_scaled\n";
    for (long long r = 0; r < cfg.replicates; ++r)
      cs << r << "," << format_double(run.h_raw[size_t(r)]) << ","
         << format_double(run.h_scaled[size_t(r)]) << "\n";
  }
  return run.report.all_ok() ? kExitOk : kExitFailure;
}

int run_mc_lln(const McArgs& a) {
  ExperimentConfig cfg = config_from_args(a);
  RunOptions opt;
  opt.threads = a.threads;
  LlnRun run = run_lln(cfg, opt);
  OutputTarget target(a.out);
  std::ostream& os = target.os();
  write_meta(os, "mc-lln", {});
  os << kv_to_text(run.report.to_kv());
  if (!a.csv.empty()) {
    OutputTarget csv_target(a.csv);
    std::ostream& cs = csv_target.os();
    write_meta(cs, "mc-lln", cfg.to_kv());
    cs << "replicate,ratio\n";
    for (long long r = 0; r < cfg.replicates; ++r)
      cs << r << "," << format_double(run.ratios[size_t(r)]) << "\n";
  }
  return run.report.all_ok() ? kExitOk : kExitFailure;
}

// ---- verify ----

struct VerifyArgs {
  uint64_t seed = 20240801;
  bool skip_mc_oracle = false;
  bool corrupt_table = false;  // test hook
  std::string out;
};

int run_verify(const VerifyArgs& a) {
  StirlingTable table(StirlingTable::kMaxSupported);
  if (a.corrupt_table) {
    std::vector<std::vector<uint128>> rows;
    for (int n = 0; n <= table.max_n(); ++n) {
      std::vector<uint128> row(size_t(n) + 1);
      for (int k = 0; k <= n; ++k) row[size_t(k)] = table.at(n, k);
      rows.push_back(std::move(row));
    }
    rows[4][2] += 1;
    table = StirlingTable::from_rows_unchecked(std::move(rows));
  }

  OutputTarget target(a.out);
  std::ostream& os = target.os();
  KvPairs params;
  params.emplace_back("seed", std::to_string(a.seed));
  params.emplace_back("mc_oracle", a.skip_mc_oracle ? "skipped" : "enabled");
  write_meta(os, "verify", params);

  std::vector<VerifyResult> results = run_identity_suite(table, a.seed);

  bool algebraic_plus = false;
  for (const VerifyResult& r : results)
    if (r.name == "sigma-star-consistency") algebraic_plus = r.pass;

  if (!a.skip_mc_oracle) {
    SigmaStarMcResult mc = sigma_star_mc_oracle(3, 1.0, 2000, 10000, a.seed);
    std::ostringstream detail;
    detail << "max_z_" << to_string(mc.selected) << "="
           << format_double(std::min(mc.max_z_plus, mc.max_z_minus)) << " max_z_"
           << to_string(mc.selected == SigmaStarSign::Plus ? SigmaStarSign::Minus
                                                           : SigmaStarSign::Plus)
           << "=" << format_double(std::max(mc.max_z_plus, mc.max_z_minus));
    results.push_back({"sigma-star-mc-oracle", mc.decisive && mc.selected == SigmaStarSign::Plus,
                       std::min(mc.max_z_plus, mc.max_z_minus), detail.str()});
    results.push_back({"sigma-star-agreement",
                       algebraic_plus && mc.selected == SigmaStarSign::Plus, 0.0,
                       std::string("algebraic=") + (algebraic_plus ? "plus" : "other") +
                           " mc=" + to_string(mc.selected)});
  }

  int failures = 0;
  for (const VerifyResult& r : results) {
    os << (r.pass ? "PASS " : "FAIL ") << r.name << " residual=" << format_double(r.residual);
    if (!r.detail.empty()) os << " " << r.detail;
    os << "\n";
    if (!r.pass) ++failures;
  }
  os << "verify: " << (results.size() - size_t(failures)) << "/" << results.size()
     << " identities passed\n";
  return failures == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"homozygosity of hierarchical Dirichlet weight models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CoeffsArgs coeffs_args;
  {
    CLI::App* sub = app.add_subcommand("coeffs", "Stirling-derived coefficient tables");
    sub->add_option("--m", coeffs_args.m, "order")->required()->check(CLI::Range(2, 16));
    sub->add_option("--L", coeffs_args.L, "group count")->check(CLI::Range(1, 14));
    sub->add_option("--c", coeffs_args.c, "concentration ratio")->check(CLI::PositiveNumber);
    sub->add_option("--cap", coeffs_args.cap, "composition enumeration cap");
    sub->add_option("--format", coeffs_args.format)->check(CLI::IsMember({"text", "csv"}));
    sub->add_option("--out", coeffs_args.out, "output path (default stdout)");
  }

  MeanArgs mean_args;
  {
    CLI::App* sub = app.add_subcommand("mean", "exact homozygosity means");
    sub->add_option("--model", mean_args.model)->required()
        ->check(CLI::IsMember({"hdp", "fdhdp", "groups"}));
    sub->add_option("--m", mean_args.m)->required()->check(CLI::Range(2, 16));
    sub->add_option("--alpha", mean_args.alpha)->required()->check(CLI::PositiveNumber);
    sub->add_option("--beta", mean_args.beta)->required()->check(CLI::PositiveNumber);
    sub->add_option("--n", mean_args.n)->check(CLI::PositiveNumber);
    sub->add_option("--L", mean_args.L)->check(CLI::Range(1, 14));
    sub->add_option("--format", mean_args.format)->check(CLI::IsMember({"text", "csv"}));
    sub->add_option("--out", mean_args.out);
  }

  VarianceArgs variance_args;
  {
    CLI::App* sub = app.add_subcommand("variance", "asymptotic variances");
    sub->add_option("--model", variance_args.model)->required()
        ->check(CLI::IsMember({"hdp", "fdhdp", "groups"}));
    sub->add_option("--m", variance_args.m)->required()->check(CLI::Range(2, 16));
    sub->add_option("--c", variance_args.c)->required()->check(CLI::PositiveNumber);
    sub->add_option("--d", variance_args.d)->check(CLI::PositiveNumber);
    sub->add_option("--L", variance_args.L)->check(CLI::Range(1, 14));
    sub->add_option("--format", variance_args.format)->check(CLI::IsMember({"text", "csv"}));
    sub->add_option("--out", variance_args.out);
  }

  SweepArgs sweep_args;
  {
    CLI::App* sub = app.add_subcommand("sweep", "variance curves over c or d grids");
    sub->add_option("--model", sweep_args.model)->required()
        ->check(CLI::IsMember({"hdp", "fdhdp", "groups"}));
    sub->add_option("--m", sweep_args.m)->required()->check(CLI::Range(2, 16));
    sub->add_option("--L", sweep_args.L)->check(CLI::Range(1, 14));
    sub->add_option("--vary", sweep_args.vary, "grid variable: c or d")
        ->check(CLI::IsMember({"c", "d"}));
    sub->add_option("--min", sweep_args.lo)->check(CLI::PositiveNumber);
    sub->add_option("--max", sweep_args.hi)->check(CLI::PositiveNumber);
    sub->add_option("--points", sweep_args.points)->check(CLI::Range(1, 100000));
    sub->add_option("--c", sweep_args.c_fixed, "fixed c when varying d")
        ->check(CLI::PositiveNumber);
    sub->add_option("--d", sweep_args.d_fixed, "fixed d when varying c")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", sweep_args.out);
  }

  SampleArgs sample_args;
  {
    CLI::App* sub = app.add_subcommand("sample", "weight vector draws as CSV");
    sub->add_option("--model", sample_args.model)->required()
        ->check(CLI::IsMember({"gem", "hdp", "groups", "fdhdp"}));
    sub->add_option("--alpha", sample_args.alpha)->required()->check(CLI::PositiveNumber);
    sub->add_option("--beta", sample_args.beta)->check(CLI::PositiveNumber);
    sub->add_option("--n", sample_args.n)->check(CLI::PositiveNumber);
    sub->add_option("--L", sample_args.L)->check(CLI::Range(1, 14));
    sub->add_option("--replicates", sample_args.replicates)->check(CLI::Range(1, 1000000));
    sub->add_option("--seed", sample_args.seed)->envname("HDPHOM_SEED");
    sub->add_option("--eps", sample_args.eps);
    sub->add_option("--out", sample_args.out);
  }

  McArgs clt_args, lln_args;
  McOptionSet clt_opts, lln_opts;
  {
    CLI::App* sub = app.add_subcommand("mc-clt", "replicate experiment against the CLT prediction");
    clt_opts = add_mc_options(sub, clt_args);
  }
  {
    CLI::App* sub = app.add_subcommand("mc-lln", "replicate experiment against the LLN prediction");
    lln_opts = add_mc_options(sub, lln_args);
  }

  VerifyArgs verify_args;
  {
    CLI::App* sub = app.add_subcommand("verify", "deterministic identity suite");
    sub->add_option("--seed", verify_args.seed)->envname("HDPHOM_SEED");
    sub->add_flag("--skip-mc-oracle", verify_args.skip_mc_oracle,
                  "skip the simulation oracle for the bracket-sign check");
    sub->add_flag("--test-corrupt-table", verify_args.corrupt_table)->group("");
    sub->add_option("--out", verify_args.out);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 64;
  }

  try {
    if (app.got_subcommand("coeffs")) return run_coeffs(coeffs_args);
    if (app.got_subcommand("mean")) return run_mean(mean_args);
    if (app.got_subcommand("variance")) return run_variance(variance_args);
    if (app.got_subcommand("sweep")) return run_sweep(sweep_args);
    if (app.got_subcommand("sample")) return run_sample(sample_args);
    if (app.got_subcommand("mc-clt")) {
      merge_config_file(clt_args, clt_opts, clt_args);
      return run_mc_clt(clt_args);
    }
    if (app.got_subcommand("mc-lln")) {
      merge_config_file(lln_args, lln_opts, lln_args);
      return run_mc_lln(lln_args);
    }
    if (app.got_subcommand("verify")) return run_verify(verify_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 64;
}
