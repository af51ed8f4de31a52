// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdphom/combinatorics.hpp"
#include "hdphom/statistics.hpp"

namespace hdphom {

// Asymptotic variances of the scaled homozygosity. level1 and level2 are the
// limiting variances of the two decomposition terms, correction is the
// squared coupling with the total-mass fluctuation, and
// total = level1 + level2 - correction. The total stored here is evaluated
// from the closed-form display rather than assembled from the components, so
// the decomposition identity is a real consistency check.
struct AsymptoticVariances {
  Model model = Model::Hdp;
  double level1 = 0.0;
  double level2 = 0.0;
  double correction = 0.0;
  double total = 0.0;
};

struct CovarianceMatrix {
  std::string kind;
  int first_order = 1;  // order attached to row/column 0
  int dim = 0;
  std::vector<double> entries;  // row-major

  double at(int r, int c) const { return entries[size_t(r) * dim + c]; }
  double& at(int r, int c) { return entries[size_t(r) * dim + c]; }
};

namespace detail {

// Series in u = 1/c evaluated as mantissa * u^upow. The pivot sits at the
// dominant term, keeping intermediates in double range when u is extreme.
struct PoweredSum {
  double mantissa = 0.0;
  int upow = 0;
};

inline PoweredSum powered_series(const std::vector<double>& w, double u) {
  const int J = int(w.size()) - 1;
  const double logu = std::log(u);
  int pivot = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (int j = 1; j <= J; ++j) {
    if (w[j] == 0.0) continue;
    double mag = std::log(std::abs(w[j])) + (j - 1) * logu;
    if (mag > best) {
      best = mag;
      pivot = j - 1;
    }
  }
  if (pivot < 0) return {0.0, 0};
  NeumaierSum s;
  for (int j = 1; j <= J; ++j)
    if (w[j] != 0.0) s.add(w[j] * std::pow(u, double(j - 1 - pivot)));
  return {s.value(), pivot};
}

inline PoweredSum powered_sub(PoweredSum a, PoweredSum b, double u) {
  if (a.mantissa == 0.0) return {-b.mantissa * 1.0, b.upow};
  if (b.mantissa == 0.0) return a;
  const int p = std::max(a.upow, b.upow);
  const double va = a.mantissa * std::pow(u, double(a.upow - p));
  const double vb = b.mantissa * std::pow(u, double(b.upow - p));
  return {va - vb, p};
}

inline double powered_ratio_over_square(PoweredSum num, PoweredSum den, double u) {
  return num.mantissa / (den.mantissa * den.mantissa) *
         std::pow(u, double(num.upow - 2 * den.upow));
}

}  // namespace detail

// cov(H_i, H_j) of the one-level limit: (Gamma(i+j) - Gamma(i+1)Gamma(j+1)) /
// (Gamma(i) Gamma(j)), with the numerator difference taken in exact integers.
inline double jkk_covariance(int i, int j) {
  if (i < 2 || j < 2) throw std::domain_error("jkk_covariance: orders must be >= 2");
  uint128 num = factorial_exact(i + j - 1) - checked_mul(factorial_exact(i), factorial_exact(j));
  return to_double(num) / (gamma_int(i) * gamma_int(j));
}

inline AsymptoticVariances variance_hdp(int m, double c,
                                        const StirlingTable& table = default_stirling_table()) {
  if (m < 2) throw std::domain_error("variance_hdp: order must be >= 2");
  if (!(c > 0)) throw std::domain_error("variance_hdp: c must be positive");
  const double u = 1.0 / c;
  std::vector<double> row_m = table.row_as_double(m);
  std::vector<double> row_2m = table.row_as_double(2 * m);

  std::vector<double> wD(m + 1, 0.0), w2m(2 * m + 1, 0.0);
  for (int j = 1; j <= m; ++j) wD[j] = row_m[j] * gamma_int(j);
  for (int j = 1; j <= 2 * m; ++j) w2m[j] = row_2m[j] * gamma_int(j);

  // cross sums collapsed by total power e = i + j (series index e)
  std::vector<double> wGamma(2 * m + 1, 0.0), wProd(2 * m + 1, 0.0), wDiff(2 * m + 1, 0.0);
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      const double ss = row_m[i] * row_m[j];
      const double g = gamma_int(i + j);
      const double p = gamma_int(i + 1) * gamma_int(j + 1);
      wGamma[i + j] += ss * g;
      wProd[i + j] += ss * p;
      wDiff[i + j] += ss * (g - p);
    }
  }
  const auto D = detail::powered_series(wD, u);
  const auto S2m = detail::powered_series(w2m, u);
  const auto G = detail::powered_series(wGamma, u);
  const auto P = detail::powered_series(wProd, u);
  const auto Diff = detail::powered_series(wDiff, u);

  AsymptoticVariances out;
  out.model = Model::Hdp;
  out.level1 = detail::powered_ratio_over_square(Diff, D, u);
  out.level2 = detail::powered_ratio_over_square(detail::powered_sub(S2m, G, u), D, u);
  out.correction = double(m) * double(m);
  out.total = detail::powered_ratio_over_square(detail::powered_sub(S2m, P, u), D, u) -
              out.correction;
  return out;
}

// Closed form of the m = 2 total: 2 - 2(c^2 - c - 1) / (c (c+1)^2).
inline double variance_hdp_m2_closed(double c) {
  if (!(c > 0)) throw std::domain_error("variance_hdp_m2_closed: c must be positive");
  return 2.0 - 2.0 * (c * c - c - 1.0) / (c * (c + 1.0) * (c + 1.0));
}

inline AsymptoticVariances variance_fdhdp(int m, double c, double d,
                                          const StirlingTable& table = default_stirling_table()) {
  if (m < 2) throw std::domain_error("variance_fdhdp: order must be >= 2");
  if (!(c > 0) || !(d > 0)) throw std::domain_error("variance_fdhdp: c and d must be positive");
  const double u = 1.0 / c;
  std::vector<double> row_m = table.row_as_double(m);
  std::vector<double> row_2m = table.row_as_double(2 * m);

  std::vector<double> rf(2 * m + 1);  // (d+1)_(j-1), index j
  for (int j = 0; j <= 2 * m; ++j) rf[j] = j >= 1 ? rising_factorial(d + 1.0, j - 1) : 0.0;

  std::vector<double> wD(m + 1, 0.0), w2m(2 * m + 1, 0.0);
  for (int j = 1; j <= m; ++j) wD[j] = row_m[j] * rf[j];
  for (int j = 1; j <= 2 * m; ++j) w2m[j] = row_2m[j] * rf[j];

  std::vector<double> wRise(2 * m + 1, 0.0), wProd(2 * m + 1, 0.0), wDiff(2 * m + 1, 0.0);
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      const double ss = row_m[i] * row_m[j];
      const double rise = rf[i + j];  // (d+1)_(i+j-1)
      const double prod = rf[i] * rf[j] * (double(i) * double(j) + d);
      wRise[i + j] += ss * rise;
      wProd[i + j] += ss * prod;
      wDiff[i + j] += ss * (rise - prod);
    }
  }
  const auto D = detail::powered_series(wD, u);
  const auto S2m = detail::powered_series(w2m, u);
  const auto R = detail::powered_series(wRise, u);
  const auto P = detail::powered_series(wProd, u);
  const auto Diff = detail::powered_series(wDiff, u);

  AsymptoticVariances out;
  out.model = Model::Fdhdp;
  out.level1 = detail::powered_ratio_over_square(Diff, D, u);
  out.level2 = detail::powered_ratio_over_square(detail::powered_sub(S2m, R, u), D, u);
  out.correction = double(m) * double(m);
  out.total = detail::powered_ratio_over_square(detail::powered_sub(S2m, P, u), D, u) -
              out.correction;
  return out;
}

inline AsymptoticVariances variance_groups(int m, int L, double c, const CoefficientSet& coeffs) {
  if (m < 2 || L < 1) throw std::domain_error("variance_groups: m >= 2 and L >= 1 required");
  if (!(c > 0)) throw std::domain_error("variance_groups: c must be positive");
  if (coeffs.m != m || coeffs.L != L)
    throw std::invalid_argument("variance_groups: coefficient set does not match (m, L)");
  const double u = 1.0 / c;

  std::vector<double> A(m + 1, 0.0), At(2 * m + 1, 0.0);
  for (int j = 1; j <= m; ++j) A[j] = to_double(coeffs.A[j]);
  for (int j = 1; j <= 2 * m; ++j) At[j] = to_double(coeffs.A_tilde[j]);

  std::vector<double> wD(m + 1, 0.0), w2m(2 * m + 1, 0.0);
  for (int j = 1; j <= m; ++j) wD[j] = A[j] * gamma_int(j);
  for (int j = 1; j <= 2 * m; ++j) w2m[j] = At[j] * gamma_int(j);

  std::vector<double> wGamma(2 * m + 1, 0.0), wProd(2 * m + 1, 0.0), wDiff(2 * m + 1, 0.0);
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= m; ++j) {
      const double ss = A[i] * A[j];
      const double g = gamma_int(i + j);
      const double p = gamma_int(i + 1) * gamma_int(j + 1);
      wGamma[i + j] += ss * g;
      wProd[i + j] += ss * p;
      wDiff[i + j] += ss * (g - p);
    }
  }
  const auto D = detail::powered_series(wD, u);
  const auto S2m = detail::powered_series(w2m, u);
  const auto G = detail::powered_series(wGamma, u);
  const auto P = detail::powered_series(wProd, u);
  const auto Diff = detail::powered_series(wDiff, u);

  NeumaierSum corr;
  for (int k = 0; k < L; ++k) {
    NeumaierSum mk;
    for (const auto& [parts, C] : coeffs.C) mk.add(C * parts[k]);
    corr.add(mk.value() * mk.value());
  }

  AsymptoticVariances out;
  out.model = Model::Groups;
  out.level1 = detail::powered_ratio_over_square(Diff, D, u);
  out.level2 = detail::powered_ratio_over_square(detail::powered_sub(S2m, G, u), D, u);
  out.correction = corr.value();
  out.total = detail::powered_ratio_over_square(detail::powered_sub(S2m, P, u), D, u) -
              out.correction;
  return out;
}

inline AsymptoticVariances variance_groups(int m, int L, double c,
                                           const StirlingTable& table = default_stirling_table()) {
  return variance_groups(m, L, c, make_coefficient_set(m, L, c, table));
}

// Covariance of the power sums of iid Gamma(d,1) draws:
// Sigma_ij = (d)_(i+j) - (d)_(i) (d)_(j), orders i, j = 1..m.
inline CovarianceMatrix covariance_sigma_gamma(int m, double d) {
  if (m < 1) throw std::domain_error("covariance_sigma_gamma: m must be >= 1");
  if (!(d > 0)) throw std::domain_error("covariance_sigma_gamma: d must be positive");
  CovarianceMatrix out;
  out.kind = "sigma";
  out.first_order = 1;
  out.dim = m;
  out.entries.assign(size_t(m) * m, 0.0);
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= m; ++j)
      out.at(i - 1, j - 1) =
          rising_factorial(d, i + j) - rising_factorial(d, i) * rising_factorial(d, j);
  return out;
}

enum class SigmaStarSign { Minus, Plus };

inline const char* to_string(SigmaStarSign s) {
  return s == SigmaStarSign::Minus ? "minus" : "plus";
}

// Delta-method covariance of the centered symmetric-Dirichlet power sums,
// rows/columns attached to orders 2..m. The bracket sign is selectable; the
// two conventions are discriminated by resolve_sigma_star_sign below.
inline CovarianceMatrix covariance_sigma_star(int m, double d, SigmaStarSign sign) {
  if (m < 2) throw std::domain_error("covariance_sigma_star: m must be >= 2");
  if (!(d > 0)) throw std::domain_error("covariance_sigma_star: d must be positive");
  const double s = sign == SigmaStarSign::Plus ? 1.0 : -1.0;
  CovarianceMatrix out;
  out.kind = "sigma-star";
  out.first_order = 2;
  out.dim = m - 1;
  out.entries.assign(size_t(m - 1) * (m - 1), 0.0);
  for (int i = 1; i <= m - 1; ++i) {
    for (int j = 1; j <= m - 1; ++j) {
      const double bracket = double(i + 1) * double(j + 1) + s * d;
      const double num = rising_factorial(d + 1.0, i + j + 1) -
                         rising_factorial(d + 1.0, i) * rising_factorial(d + 1.0, j) * bracket;
      out.at(i - 1, j - 1) = num / std::pow(d, i + j - 1);
    }
  }
  return out;
}

// Joint covariance of the total-mass fluctuation and the level-two term:
// [[1, m], [m, level2]].
inline CovarianceMatrix covariance_joint_hdp(int m, double c,
                                             const StirlingTable& table = default_stirling_table()) {
  const double s2 = variance_hdp(m, c, table).level2;
  CovarianceMatrix out;
  out.kind = "joint";
  out.first_order = 1;
  out.dim = 2;
  out.entries = {1.0, double(m), double(m), s2};
  return out;
}

// Grouped version for group k (1-based); off-diagonal sum_m C_m m_k.
inline CovarianceMatrix covariance_joint_groups(int m, int L, double c, int k,
                                                const CoefficientSet& coeffs) {
  if (k < 1 || k > L) throw std::domain_error("covariance_joint_groups: group index out of range");
  const double s2 = variance_groups(m, L, c, coeffs).level2;
  NeumaierSum off;
  for (const auto& [parts, C] : coeffs.C) off.add(C * parts[k - 1]);
  CovarianceMatrix out;
  out.kind = "joint";
  out.first_order = 1;
  out.dim = 2;
  out.entries = {1.0, off.value(), off.value(), s2};
  return out;
}

// Level-one variance reassembled from the delta-method matrix. The matrix
// rows carry the stated d^{i+j-1} denominators, so the assembly weights
// restore those powers before attaching the c powers of the level-one
// formula. With the Plus bracket this reproduces variance_fdhdp(...).level1.
inline double sigma_star_assembled_level1(int m, double c, double d, SigmaStarSign sign,
                                          const StirlingTable& table = default_stirling_table()) {
  if (m < 2) throw std::domain_error("sigma_star_assembled_level1: m must be >= 2");
  CovarianceMatrix S = covariance_sigma_star(m, d, sign);
  std::vector<double> row_m = table.row_as_double(m);
  const double u = 1.0 / c;
  std::vector<double> w(2 * m + 1, 0.0);
  for (int i = 2; i <= m; ++i)
    for (int j = 2; j <= m; ++j)
      w[i + j] += row_m[i] * row_m[j] * S.at(i - 2, j - 2) * std::pow(d, i + j - 3);
  std::vector<double> wD(m + 1, 0.0);
  for (int j = 1; j <= m; ++j) wD[j] = row_m[j] * rising_factorial(d + 1.0, j - 1);
  const auto N = detail::powered_series(w, u);
  const auto D = detail::powered_series(wD, u);
  return detail::powered_ratio_over_square(N, D, u);
}

struct SigmaStarResolution {
  double residual_plus = 0.0;
  double residual_minus = 0.0;
  SigmaStarSign selected = SigmaStarSign::Plus;
};

// Algebraic cross-check: which bracket sign makes the reassembled level-one
// variance agree with variance_fdhdp? Residuals are relative to the target.
inline SigmaStarResolution resolve_sigma_star_sign(int m, double c, double d,
                                                   const StirlingTable& table = default_stirling_table()) {
  const double target = variance_fdhdp(m, c, d, table).level1;
  const double denom = std::max(1.0, std::abs(target));
  SigmaStarResolution r;
  r.residual_plus =
      std::abs(sigma_star_assembled_level1(m, c, d, SigmaStarSign::Plus, table) - target) / denom;
  r.residual_minus =
      std::abs(sigma_star_assembled_level1(m, c, d, SigmaStarSign::Minus, table) - target) / denom;
  r.selected = r.residual_plus <= r.residual_minus ? SigmaStarSign::Plus : SigmaStarSign::Minus;
  return r;
}

}  // namespace hdphom
