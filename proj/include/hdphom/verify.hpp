// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hdphom/asymptotics.hpp"
#include "hdphom/montecarlo.hpp"
#include "hdphom/rng.hpp"

namespace hdphom {

// Deterministic identity suite behind the `verify` command. Each identity
// reports its worst residual; tolerances are fixed here, not configurable.

struct VerifyResult {
  std::string name;
  bool pass = false;
  double residual = 0.0;
  std::string detail;
};

namespace detail {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((flo > 0) == (fm > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline std::vector<VerifyResult> run_identity_suite(
    const StirlingTable& table = default_stirling_table(), uint64_t seed = 20240801) {
  std::vector<VerifyResult> out;
  const std::vector<double> c_grid = {0.1, 1.0, 10.0};
  const std::vector<double> d_grid = {0.1, 1.0, 10.0};

  auto push = [&](const std::string& name, double residual, double tol, std::string detail = {}) {
    out.push_back({name, residual <= tol, residual, std::move(detail)});
  };

  // total = level1 + level2 - correction, evaluated via two distinct routes
  {
    double worst = 0.0;
    for (int m = 2; m <= 6; ++m)
      for (double c : c_grid) {
        AsymptoticVariances v = variance_hdp(m, c, table);
        worst = std::max(worst,
                         detail::rel_err(v.total, v.level1 + v.level2 - v.correction));
      }
    push("decomposition-hdp", worst, 1e-12);
  }
  {
    double worst = 0.0;
    for (int m = 2; m <= 6; ++m)
      for (double c : c_grid)
        for (double d : d_grid) {
          AsymptoticVariances v = variance_fdhdp(m, c, d, table);
          worst = std::max(worst,
                           detail::rel_err(v.total, v.level1 + v.level2 - v.correction));
        }
    push("decomposition-fdhdp", worst, 1e-12);
  }
  {
    double worst = 0.0;
    for (int m = 2; m <= 6; ++m)
      for (int L = 1; L <= 3; ++L)
        for (double c : c_grid) {
          AsymptoticVariances v = variance_groups(m, L, c, make_coefficient_set(m, L, c, table));
          worst = std::max(worst,
                           detail::rel_err(v.total, v.level1 + v.level2 - v.correction));
        }
    push("decomposition-groups", worst, 1e-12);
  }

  // grouped model with one group reduces to the plain two-level model
  {
    double worst = 0.0;
    for (int m = 2; m <= 6; ++m)
      for (double c : c_grid) {
        AsymptoticVariances g = variance_groups(m, 1, c, make_coefficient_set(m, 1, c, table));
        AsymptoticVariances h = variance_hdp(m, c, table);
        worst = std::max({worst, detail::rel_err(g.level1, h.level1),
                          detail::rel_err(g.level2, h.level2),
                          detail::rel_err(g.correction, h.correction),
                          detail::rel_err(g.total, h.total)});
      }
    push("groups-reduction", worst, 1e-12);
  }

  // the finite-dimensional variance approaches the two-level variance as d -> 0
  {
    double worst = 0.0;
    for (int m = 2; m <= 6; ++m)
      for (double c : c_grid)
        worst = std::max(worst, detail::rel_err(variance_fdhdp(m, c, 1e-8, table).total,
                                                variance_hdp(m, c, table).total));
    push("fdhdp-small-d-limit", worst, 1e-5);
  }

  // large c recovers the one-level limit Gamma(2m)/Gamma(m)^2 - m^2
  {
    double worst = 0.0;
    for (int m = 2; m <= 6; ++m) {
      const double want = gamma_int(2 * m) / (gamma_int(m) * gamma_int(m)) - double(m) * m;
      worst = std::max(worst, detail::rel_err(variance_hdp(m, 1e8, table).total, want));
    }
    push("hdp-large-c-limit", worst, 1e-5);
  }

  // the unique c with total variance 2 at m = 2 is the golden ratio
  {
    const double root = detail::bisect_root(
        [](double c) { return variance_hdp_m2_closed(c) - 2.0; }, 1.0, 2.0);
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    push("golden-ratio-root", std::abs(root - phi), 1e-9,
         "root=" + format_double(root));
  }

  // sum_k [n k] x^k equals the rising factorial, n <= 12
  {
    RngStream xs(seed, 0);
    double worst = 0.0;
    for (int n = 1; n <= 12; ++n) {
      for (int t = 0; t < 20; ++t) {
        const double x = -5.0 + 10.0 * xs.next_unit();
        NeumaierSum poly;
        for (int k = 0; k <= n; ++k) poly.add(to_double(table.at(n, k)) * std::pow(x, k));
        const double want = rising_factorial(x, n);
        worst = std::max(worst, std::abs(poly.value() - want) / std::max(1.0, std::abs(want)));
      }
    }
    push("stirling-rising-identity", worst, 1e-12);
  }

  // m = 2 closed form against the general evaluator, 50 log-spaced c
  {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double c = std::pow(10.0, -2.0 + 4.0 * i / 49.0);
      worst = std::max(worst,
                       detail::rel_err(variance_hdp(2, c, table).total, variance_hdp_m2_closed(c)));
    }
    push("m2-closed-form", worst, 1e-12);
  }

  // one-level limiting variances are positive
  {
    double worst = 0.0;
    for (int i = 2; i <= 10; ++i) worst = std::min(worst, jkk_covariance(i, i));
    out.push_back({"jkk-positivity", worst >= 0.0 && jkk_covariance(2, 2) > 0.0, worst,
                   "min diagonal over orders 2..10"});
  }

  // level-one variance vanishes as c grows
  {
    const double v = variance_hdp(2, 1e6, table).level1;
    push("level1-vanishes-large-c", v, 1e-5);
  }

  // the composition constants C_m sum to one
  {
    double worst = 0.0;
    for (int m = 2; m <= 6; ++m)
      for (int L = 1; L <= 4; ++L)
        for (double c : c_grid) {
          CoefficientSet cs = make_coefficient_set(m, L, c, table);
          NeumaierSum s;
          for (const auto& [parts, C] : cs.C) s.add(C);
          worst = std::max(worst, std::abs(s.value() - 1.0));
        }
    push("coeff-C-normalization", worst, 1e-12);
  }

  // joint covariance off-diagonal collapses to m when L = 1
  {
    double worst = 0.0;
    for (int m = 2; m <= 6; ++m)
      for (double c : c_grid) {
        CoefficientSet cs = make_coefficient_set(m, 1, c, table);
        worst = std::max(worst,
                         std::abs(covariance_joint_groups(m, 1, c, 1, cs).at(0, 1) - double(m)));
      }
    push("joint-covariance-reduction", worst, 1e-12);
  }

  // bracket-sign cross-check: reassembled level-one variance matches only one
  // convention of the delta-method matrix
  {
    double worst_plus = 0.0, best_minus = 1e300;
    bool all_plus = true;
    for (int m = 2; m <= 5; ++m)
      for (double c : c_grid)
        for (double d : d_grid) {
          SigmaStarResolution r = resolve_sigma_star_sign(m, c, d, table);
          worst_plus = std::max(worst_plus, r.residual_plus);
          best_minus = std::min(best_minus, r.residual_minus);
          all_plus = all_plus && r.selected == SigmaStarSign::Plus;
        }
    std::ostringstream detail;
    detail << "residual_plus=" << format_double(worst_plus)
           << " residual_minus=" << format_double(best_minus)
           << " selected=" << (all_plus ? "plus" : "mixed");
    out.push_back({"sigma-star-consistency", all_plus && worst_plus <= 1e-12, worst_plus,
                   detail.str()});
  }

  return out;
}

// Simulation oracle for the delta-method covariance matrix at d = 1: the
// sample covariance of the scaled centered Dirichlet power sums must match
// one bracket convention within 4 standard errors and reject the other.
struct SigmaStarMcResult {
  double max_z_plus = 0.0;
  double max_z_minus = 0.0;
  SigmaStarSign selected = SigmaStarSign::Plus;
  bool decisive = false;
};

inline SigmaStarMcResult sigma_star_mc_oracle(int m, double d, int n, long long replicates,
                                              uint64_t seed) {
  if (m < 3) throw std::domain_error("sigma_star_mc_oracle: m >= 3 required");
  const double alpha = d * double(n);
  const int dim = m - 1;

  std::vector<double> exact_moment(m + 1, 0.0);  // E[W^j]
  for (int j = 2; j <= m; ++j)
    exact_moment[j] =
        rising_factorial(alpha / n, j) / rising_factorial(alpha, j);

  std::vector<double> mean_s(dim, 0.0);
  std::vector<double> sum_prod(size_t(dim) * dim, 0.0);
  std::vector<double> sum_prod2(size_t(dim) * dim, 0.0);
  std::vector<double> g(n), s(dim);
  for (long long r = 0; r < replicates; ++r) {
    RngStream stream(seed, uint64_t(r));
    NeumaierSum total;
    for (int i = 0; i < n; ++i) {
      g[i] = gamma_variate(alpha / n, stream);
      total.add(g[i]);
    }
    const double t = total.value();
    std::vector<NeumaierSum> pow_sums(static_cast<size_t>(dim));
    for (int i = 0; i < n; ++i) {
      const double w = g[i] / t;
      double p = w;
      for (int j = 2; j <= m; ++j) {
        p *= w;
        pow_sums[size_t(j - 2)].add(p);
      }
    }
    for (int j = 2; j <= m; ++j)
      s[j - 2] = std::pow(double(n), j - 0.5) * (pow_sums[size_t(j - 2)].value() -
                                                 double(n) * exact_moment[j]);
    for (int a = 0; a < dim; ++a) {
      mean_s[a] += s[a];
      for (int b = 0; b < dim; ++b) {
        const double p = s[a] * s[b];
        sum_prod[size_t(a) * dim + b] += p;
        sum_prod2[size_t(a) * dim + b] += p * p;
      }
    }
  }

  const double R = double(replicates);
  CovarianceMatrix plus = covariance_sigma_star(m, d, SigmaStarSign::Plus);
  CovarianceMatrix minus = covariance_sigma_star(m, d, SigmaStarSign::Minus);
  SigmaStarMcResult out;
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      const double mprod = sum_prod[size_t(a) * dim + b] / R;
      const double cov = mprod - (mean_s[a] / R) * (mean_s[b] / R);
      const double var_cov = (sum_prod2[size_t(a) * dim + b] / R - mprod * mprod) / R;
      const double se = std::sqrt(std::max(var_cov, 1e-300));
      out.max_z_plus = std::max(out.max_z_plus, std::abs(cov - plus.at(a, b)) / se);
      out.max_z_minus = std::max(out.max_z_minus, std::abs(cov - minus.at(a, b)) / se);
    }
  }
  out.selected = out.max_z_plus <= out.max_z_minus ? SigmaStarSign::Plus : SigmaStarSign::Minus;
  const double sel = std::min(out.max_z_plus, out.max_z_minus);
  const double rej = std::max(out.max_z_plus, out.max_z_minus);
  out.decisive = sel <= 4.0 && rej > 4.0;
  return out;
}

}  // namespace hdphom
