// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hdphom/asymptotics.hpp"
#include "hdphom/sampling.hpp"
#include "hdphom/statistics.hpp"
#include "hdphom/version.hpp"

namespace hdphom {

// ---- key=value serialization (lossless for doubles) ----

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using KvPairs = std::vector<std::pair<std::string, std::string>>;
using KvMap = std::map<std::string, std::string>;

inline std::string kv_to_text(const KvPairs& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

// Flat key=value lines; '#' starts a comment, blank lines are skipped.
inline KvMap parse_kv_text(const std::string& text) {
  KvMap out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("malformed key=value line: " + line);
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    size_t vb = val.find_first_not_of(" \t");
    val = vb == std::string::npos ? std::string() : val.substr(vb);
    out[key] = val;
  }
  return out;
}

namespace detail {

inline const std::string& kv_get(const KvMap& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::invalid_argument("missing key: " + key);
  return it->second;
}
inline double kv_double(const KvMap& kv, const std::string& key) {
  return std::strtod(kv_get(kv, key).c_str(), nullptr);
}
inline long long kv_ll(const KvMap& kv, const std::string& key) {
  return std::strtoll(kv_get(kv, key).c_str(), nullptr, 10);
}
inline uint64_t kv_u64(const KvMap& kv, const std::string& key) {
  return std::strtoull(kv_get(kv, key).c_str(), nullptr, 10);
}
inline bool kv_bool(const KvMap& kv, const std::string& key) {
  const std::string& v = kv_get(kv, key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("bad boolean for " + key + ": " + v);
}

}  // namespace detail

inline Model model_from_string(const std::string& s) {
  if (s == "hdp") return Model::Hdp;
  if (s == "fdhdp") return Model::Fdhdp;
  if (s == "groups") return Model::Groups;
  throw std::invalid_argument("unknown model: " + s);
}

inline Centering centering_from_string(const std::string& s) {
  if (s == "theorem") return Centering::Theorem;
  if (s == "exact-mean") return Centering::ExactMean;
  throw std::invalid_argument("unknown centering mode: " + s);
}

// ---- one-pass mergeable central-moment accumulator ----

// Tracks the first four central moments; merge is associative up to floating
// rounding, so disjoint replicate ranges can be combined in any fixed order.
class MomentAccumulator {
 public:
  void add(double x) {
    const double n1 = n_;
    n_ += 1.0;
    const double delta = x - mean_;
    const double dn = delta / n_;
    const double dn2 = dn * dn;
    const double term1 = delta * dn * n1;
    mean_ += dn;
    m4_ += term1 * dn2 * (n_ * n_ - 3.0 * n_ + 3.0) + 6.0 * dn2 * m2_ - 4.0 * dn * m3_;
    m3_ += term1 * dn * (n_ - 2.0) - 3.0 * dn * m2_;
    m2_ += term1;
  }

  static MomentAccumulator merged(const MomentAccumulator& a, const MomentAccumulator& b) {
    if (a.n_ == 0.0) return b;
    if (b.n_ == 0.0) return a;
    MomentAccumulator out;
    const double na = a.n_, nb = b.n_, n = na + nb;
    const double delta = b.mean_ - a.mean_;
    const double d2 = delta * delta;
    out.n_ = n;
    out.mean_ = a.mean_ + delta * nb / n;
    out.m2_ = a.m2_ + b.m2_ + d2 * na * nb / n;
    out.m3_ = a.m3_ + b.m3_ + d2 * delta * na * nb * (na - nb) / (n * n) +
              3.0 * delta * (na * b.m2_ - nb * a.m2_) / n;
    out.m4_ = a.m4_ + b.m4_ +
              d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
              6.0 * d2 * (na * na * b.m2_ + nb * nb * a.m2_) / (n * n) +
              4.0 * delta * (na * b.m3_ - nb * a.m3_) / n;
    return out;
  }

  double count() const { return n_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  double m3() const { return m3_; }
  double m4() const { return m4_; }
  double variance_unbiased() const { return n_ > 1.0 ? m2_ / (n_ - 1.0) : 0.0; }
  double variance_population() const { return n_ > 0.0 ? m2_ / n_ : 0.0; }
  double sd() const { return std::sqrt(variance_unbiased()); }
  double skewness() const {
    return m2_ > 0.0 ? std::sqrt(n_) * m3_ / std::pow(m2_, 1.5) : 0.0;
  }
  double excess_kurtosis() const {
    return m2_ > 0.0 ? n_ * m4_ / (m2_ * m2_) - 3.0 : 0.0;
  }
  // Standard error of the sample variance via the fourth-moment formula.
  double se_variance() const {
    if (n_ < 2.0) return 0.0;
    const double mu2 = m2_ / n_;
    const double mu4 = m4_ / n_;
    const double v = (mu4 - mu2 * mu2 * (n_ - 3.0) / (n_ - 1.0)) / n_;
    return v > 0.0 ? std::sqrt(v) : 0.0;
  }

 private:
  double n_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

inline double normal_cdf(double x, double sd) {
  return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0)));
}

// Sup distance between the empirical CDF and the centered normal CDF with the
// given variance.
inline double ks_distance(const std::vector<double>& samples, double variance) {
  if (samples.size() < 100)
    throw std::invalid_argument("ks_distance: at least 100 samples required");
  if (!(variance > 0.0)) throw std::domain_error("ks_distance: variance must be positive");
  std::vector<double> x = samples;
  std::sort(x.begin(), x.end());
  const double sd = std::sqrt(variance);
  const double n = double(x.size());
  double dmax = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf(x[i], sd);
    dmax = std::max(dmax, std::max(f - double(i) / n, double(i + 1) / n - f));
  }
  return dmax;
}

// ---- experiment configuration ----

struct ExperimentConfig {
  Model model = Model::Hdp;
  int m = 2;
  double alpha = 500.0;
  double beta = 500.0;
  long long n = 0;  // finite-dimensional model only
  int L = 1;        // grouped model only
  long long replicates = 1000;
  uint64_t root_seed = 1;
  double eps = 1e-10;
  Centering centering = Centering::ExactMean;
  double ks_threshold = 0.0;     // 0 selects 1.95/sqrt(R)
  double lln_delta = 0.2;        // half-width of the concentration band around 1
  double lln_mean_band = 0.05;   // |mean - 1| verdict band
  double lln_fraction_min = 0.95;

  double c() const { return alpha / beta; }
  double d() const { return alpha / double(n); }
  double effective_ks_threshold() const {
    return ks_threshold > 0.0 ? ks_threshold : 1.95 / std::sqrt(double(replicates));
  }

  void validate() const {
    if (m < 2) throw std::invalid_argument("config: m must be >= 2");
    if (!(alpha > 0.0) || !(beta > 0.0))
      throw std::invalid_argument("config: alpha and beta must be positive");
    if (replicates < 100) throw std::invalid_argument("config: at least 100 replicates required");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("config: eps must lie in (0,1)");
    if (model == Model::Fdhdp && n < 1)
      throw std::invalid_argument("config: the finite-dimensional model requires n >= 1");
    if (model == Model::Groups && (L < 1 || L > kMaxGroups))
      throw std::invalid_argument("config: L must lie in [1, 14]");
  }

  KvPairs to_kv() const {
    KvPairs kv;
    kv.emplace_back("model", to_string(model));
    kv.emplace_back("m", std::to_string(m));
    kv.emplace_back("alpha", format_double(alpha));
    kv.emplace_back("beta", format_double(beta));
    kv.emplace_back("n", std::to_string(n));
    kv.emplace_back("L", std::to_string(L));
    kv.emplace_back("replicates", std::to_string(replicates));
    kv.emplace_back("seed", std::to_string(root_seed));
    kv.emplace_back("eps", format_double(eps));
    kv.emplace_back("centering", to_string(centering));
    kv.emplace_back("ks_threshold", format_double(ks_threshold));
    kv.emplace_back("lln_delta", format_double(lln_delta));
    kv.emplace_back("lln_mean_band", format_double(lln_mean_band));
    kv.emplace_back("lln_fraction_min", format_double(lln_fraction_min));
    return kv;
  }

  static ExperimentConfig from_kv(const KvMap& kv) {
    ExperimentConfig c;
    c.model = model_from_string(detail::kv_get(kv, "model"));
    c.m = int(detail::kv_ll(kv, "m"));
    c.alpha = detail::kv_double(kv, "alpha");
    c.beta = detail::kv_double(kv, "beta");
    c.n = detail::kv_ll(kv, "n");
    c.L = int(detail::kv_ll(kv, "L"));
    c.replicates = detail::kv_ll(kv, "replicates");
    c.root_seed = detail::kv_u64(kv, "seed");
    c.eps = detail::kv_double(kv, "eps");
    c.centering = centering_from_string(detail::kv_get(kv, "centering"));
    c.ks_threshold = detail::kv_double(kv, "ks_threshold");
    c.lln_delta = detail::kv_double(kv, "lln_delta");
    c.lln_mean_band = detail::kv_double(kv, "lln_mean_band");
    c.lln_fraction_min = detail::kv_double(kv, "lln_fraction_min");
    return c;
  }
};

struct RunOptions {
  int threads = 0;  // 0 = hardware concurrency, capped at 8
};

struct CltReport {
  ExperimentConfig config;
  long long replicates_done = 0;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
  double predicted_variance = 0.0;
  double ks = 0.0;
  double mean_tolerance = 0.0;
  double variance_tolerance = 0.0;
  double ks_tolerance = 0.0;
  bool mean_ok = false;
  bool variance_ok = false;
  bool ks_ok = false;

  bool all_ok() const { return mean_ok && variance_ok && ks_ok; }

  KvPairs to_kv() const {
    KvPairs kv = config.to_kv();
    kv.emplace_back("replicates_done", std::to_string(replicates_done));
    kv.emplace_back("mean", format_double(mean));
    kv.emplace_back("variance", format_double(variance));
    kv.emplace_back("skewness", format_double(skewness));
    kv.emplace_back("excess_kurtosis", format_double(excess_kurtosis));
    kv.emplace_back("se_mean", format_double(se_mean));
    kv.emplace_back("se_variance", format_double(se_variance));
    kv.emplace_back("predicted_variance", format_double(predicted_variance));
    kv.emplace_back("ks_distance", format_double(ks));
    kv.emplace_back("mean_tolerance", format_double(mean_tolerance));
    kv.emplace_back("variance_tolerance", format_double(variance_tolerance));
    kv.emplace_back("ks_tolerance", format_double(ks_tolerance));
    kv.emplace_back("mean_ok", mean_ok ? "true" : "false");
    kv.emplace_back("variance_ok", variance_ok ? "true" : "false");
    kv.emplace_back("ks_ok", ks_ok ? "true" : "false");
    return kv;
  }

  static CltReport from_kv(const KvMap& kv) {
    CltReport r;
    r.config = ExperimentConfig::from_kv(kv);
    r.replicates_done = detail::kv_ll(kv, "replicates_done");
    r.mean = detail::kv_double(kv, "mean");
    r.variance = detail::kv_double(kv, "variance");
    r.skewness = detail::kv_double(kv, "skewness");
    r.excess_kurtosis = detail::kv_double(kv, "excess_kurtosis");
    r.se_mean = detail::kv_double(kv, "se_mean");
    r.se_variance = detail::kv_double(kv, "se_variance");
    r.predicted_variance = detail::kv_double(kv, "predicted_variance");
    r.ks = detail::kv_double(kv, "ks_distance");
    r.mean_tolerance = detail::kv_double(kv, "mean_tolerance");
    r.variance_tolerance = detail::kv_double(kv, "variance_tolerance");
    r.ks_tolerance = detail::kv_double(kv, "ks_tolerance");
    r.mean_ok = detail::kv_bool(kv, "mean_ok");
    r.variance_ok = detail::kv_bool(kv, "variance_ok");
    r.ks_ok = detail::kv_bool(kv, "ks_ok");
    return r;
  }
};

struct LlnReport {
  ExperimentConfig config;
  long long replicates_done = 0;
  double mean = 0.0;  // of H/f
  double sd = 0.0;
  double fraction_within = 0.0;
  bool judged = false;  // verdicts only apply inside the asymptotic grid
  bool mean_ok = false;
  bool fraction_ok = false;

  bool all_ok() const { return !judged || (mean_ok && fraction_ok); }

  KvPairs to_kv() const {
    KvPairs kv = config.to_kv();
    kv.emplace_back("replicates_done", std::to_string(replicates_done));
    kv.emplace_back("mean", format_double(mean));
    kv.emplace_back("sd", format_double(sd));
    kv.emplace_back("fraction_within", format_double(fraction_within));
    kv.emplace_back("judged", judged ? "true" : "false");
    kv.emplace_back("mean_ok", mean_ok ? "true" : "false");
    kv.emplace_back("fraction_ok", fraction_ok ? "true" : "false");
    return kv;
  }

  static LlnReport from_kv(const KvMap& kv) {
    LlnReport r;
    r.config = ExperimentConfig::from_kv(kv);
    r.replicates_done = detail::kv_ll(kv, "replicates_done");
    r.mean = detail::kv_double(kv, "mean");
    r.sd = detail::kv_double(kv, "sd");
    r.fraction_within = detail::kv_double(kv, "fraction_within");
    r.judged = detail::kv_bool(kv, "judged");
    r.mean_ok = detail::kv_bool(kv, "mean_ok");
    r.fraction_ok = detail::kv_bool(kv, "fraction_ok");
    return r;
  }
};

namespace detail {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return int(std::min(hc == 0 ? 1u : hc, 8u));
}

// One replicate's raw homozygosity for the configured model.
inline double replicate_homozygosity(const ExperimentConfig& cfg, uint64_t r) {
  StreamFamily fam{cfg.root_seed, r};
  switch (cfg.model) {
    case Model::Hdp:
      return power_sum(sample_hdp(cfg.alpha, cfg.beta, cfg.eps, fam), cfg.m).value;
    case Model::Fdhdp:
      return power_sum(sample_fdhdp(cfg.alpha, cfg.beta, int(cfg.n), fam), cfg.m).value;
    case Model::Groups:
      return group_homozygosity(sample_hdp_groups(cfg.alpha, cfg.beta, cfg.L, cfg.eps, fam), cfg.m)
          .value;
  }
  throw std::logic_error("unreachable model");
}

// Replicates are partitioned into fixed blocks; workers claim blocks and fill
// disjoint slots, and per-block accumulators are merged in block order. The
// result is therefore identical for any thread count.
inline constexpr long long kReplicateBlock = 1024;

template <typename PerReplicate>
inline MomentAccumulator run_replicates(const ExperimentConfig& cfg, const RunOptions& opt,
                                        std::vector<double>& values, PerReplicate per_replicate) {
  const long long R = cfg.replicates;
  const long long nblocks = (R + kReplicateBlock - 1) / kReplicateBlock;
  values.assign(size_t(R), 0.0);
  std::vector<MomentAccumulator> blocks(static_cast<size_t>(nblocks));
  std::atomic<long long> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  std::string first_error;

  auto worker = [&]() {
    for (;;) {
      const long long b = next.fetch_add(1);
      if (b >= nblocks || failed.load()) return;
      const long long lo = b * kReplicateBlock;
      const long long hi = std::min(R, lo + kReplicateBlock);
      try {
        for (long long r = lo; r < hi; ++r) {
          const double v = per_replicate(uint64_t(r));
          values[size_t(r)] = v;
          blocks[size_t(b)].add(v);
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!failed.exchange(true))
          first_error = "replicate block starting at " + std::to_string(lo) + ": " + e.what();
        return;
      }
    }
  };

  const int nthreads = resolve_threads(opt.threads);
  std::vector<std::thread> pool;
  pool.reserve(size_t(nthreads));
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failed.load())
    throw std::runtime_error("experiment aborted, partial results discarded (" + first_error + ")");

  MomentAccumulator acc;
  for (const MomentAccumulator& blk : blocks) acc = MomentAccumulator::merged(acc, blk);
  return acc;
}

}  // namespace detail

struct CltRun {
  CltReport report;
  std::vector<double> h_raw;
  std::vector<double> h_scaled;
};

inline CltRun run_clt(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  cfg.validate();
  const StirlingTable& table = default_stirling_table();
  CoefficientSet coeffs;
  if (cfg.model == Model::Groups) coeffs = make_coefficient_set(cfg.m, cfg.L, cfg.c(), table);

  ScalingParams sp;
  sp.model = cfg.model;
  sp.alpha = cfg.alpha;
  sp.beta = cfg.beta;
  sp.n = cfg.n;
  sp.L = cfg.L;
  sp.centering = cfg.centering;
  sp.coeffs = cfg.model == Model::Groups ? &coeffs : nullptr;
  const ScaledStatistic probe = scaled_statistic({cfg.m, 0.0, 0.0}, sp, table);
  const double center = probe.centering;
  const double scale = probe.scale;
  const double sqrt_beta = std::sqrt(cfg.beta);

  double predicted = 0.0;
  switch (cfg.model) {
    case Model::Hdp: predicted = variance_hdp(cfg.m, cfg.c(), table).total; break;
    case Model::Fdhdp: predicted = variance_fdhdp(cfg.m, cfg.c(), cfg.d(), table).total; break;
    case Model::Groups: predicted = variance_groups(cfg.m, cfg.L, cfg.c(), coeffs).total; break;
  }

  CltRun run;
  run.h_raw.assign(size_t(cfg.replicates), 0.0);
  std::vector<double>& raw = run.h_raw;
  MomentAccumulator acc =
      detail::run_replicates(cfg, opt, run.h_scaled, [&](uint64_t r) {
        const double h = detail::replicate_homozygosity(cfg, r);
        raw[size_t(r)] = h;
        return sqrt_beta * (h - center) / scale;
      });

  CltReport& rep = run.report;
  rep.config = cfg;
  rep.replicates_done = cfg.replicates;
  rep.mean = acc.mean();
  rep.variance = acc.variance_unbiased();
  rep.skewness = acc.skewness();
  rep.excess_kurtosis = acc.excess_kurtosis();
  rep.se_mean = acc.sd() / std::sqrt(acc.count());
  rep.se_variance = acc.se_variance();
  rep.predicted_variance = predicted;
  rep.ks = ks_distance(run.h_scaled, predicted);
  rep.mean_tolerance = 4.0 * rep.se_mean;
  rep.variance_tolerance = std::max(0.10 * predicted, 4.0 * rep.se_variance);
  rep.ks_tolerance = cfg.effective_ks_threshold();
  rep.mean_ok = std::abs(rep.mean) <= rep.mean_tolerance;
  rep.variance_ok = std::abs(rep.variance - predicted) <= rep.variance_tolerance;
  rep.ks_ok = rep.ks < rep.ks_tolerance;
  return run;
}

struct LlnRun {
  LlnReport report;
  std::vector<double> ratios;  // H/f per replicate
};

inline LlnRun run_lln(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  cfg.validate();
  const StirlingTable& table = default_stirling_table();
  CoefficientSet coeffs;
  double f = 0.0;
  switch (cfg.model) {
    case Model::Hdp: f = scaling_hdp(cfg.beta, cfg.m, cfg.c(), table); break;
    case Model::Fdhdp: f = scaling_fdhdp(cfg.beta, cfg.m, cfg.c(), cfg.d(), table); break;
    case Model::Groups:
      coeffs = make_coefficient_set(cfg.m, cfg.L, cfg.c(), table);
      f = scaling_groups(cfg.beta, cfg.m, cfg.L, cfg.c(), coeffs);
      break;
  }

  LlnRun run;
  MomentAccumulator acc = detail::run_replicates(
      cfg, opt, run.ratios, [&](uint64_t r) { return detail::replicate_homozygosity(cfg, r) / f; });

  long long within = 0;
  for (double x : run.ratios)
    if (std::abs(x - 1.0) <= cfg.lln_delta) ++within;

  LlnReport& rep = run.report;
  rep.config = cfg;
  rep.replicates_done = cfg.replicates;
  rep.mean = acc.mean();
  rep.sd = acc.sd();
  rep.fraction_within = double(within) / double(cfg.replicates);
  rep.judged = cfg.alpha >= 500.0 && cfg.beta >= 500.0;
  rep.mean_ok = std::abs(rep.mean - 1.0) <= cfg.lln_mean_band;
  rep.fraction_ok = rep.fraction_within >= cfg.lln_fraction_min;
  return run;
}

}  // namespace hdphom
