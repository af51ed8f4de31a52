// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hdphom/combinatorics.hpp"
#include "hdphom/sampling.hpp"

namespace hdphom {

enum class Model { Hdp, Fdhdp, Groups };

inline const char* to_string(Model m) {
  switch (m) {
    case Model::Hdp: return "hdp";
    case Model::Fdhdp: return "fdhdp";
    case Model::Groups: return "groups";
  }
  return "?";
}

struct HomozygosityValue {
  int order = 2;
  double value = 0.0;
  double tail_bound = 0.0;  // certified bound on the truncated contribution
};

namespace detail {

inline double pow_int(double x, int m) {
  double p = 1.0;
  for (int i = 0; i < m; ++i) p *= x;
  return p;
}

}  // namespace detail

// sum_i w_i^m over the stored weights, accumulated in descending magnitude
// with compensated summation. The omitted tail contributes at most tail_mass.
inline HomozygosityValue power_sum(const WeightVector& w, int m) {
  if (m < 2) throw std::domain_error("power_sum: order must be >= 2");
  std::vector<double> sorted = w.weights;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  NeumaierSum s;
  for (double x : sorted) s.add(detail::pow_int(x, m));
  return {m, s.value(), w.tail_mass};
}

enum class GroupWeighting {
  PaperDisplay,  // plain sum over compositions (complete homogeneous polynomial)
  Multinomial,   // compositions weighted by m!/(m_1! ... m_L!)
};

// sum_i sum_{compositions m of order m into L parts} prod_k Z_{k,i}^{m_k} / L^m,
// i.e. per atom the complete homogeneous symmetric polynomial of degree m in
// the group weights, scaled by L^{-m}. The composition list is enumerated once
// and reused across atoms.
inline HomozygosityValue group_homozygosity(const GroupFamily& g, int m,
                                            GroupWeighting weighting = GroupWeighting::PaperDisplay) {
  if (m < 2) throw std::domain_error("group_homozygosity: order must be >= 2");
  const int L = int(g.groups.size());
  if (L < 1) throw std::invalid_argument("group_homozygosity: empty family");
  const size_t K = g.groups[0].weights.size();
  for (const WeightVector& z : g.groups)
    if (z.weights.size() != K)
      throw std::invalid_argument("group_homozygosity: groups truncated at different indices");
  if (L == 1) return power_sum(g.groups[0], m);

  std::vector<Composition> comps = compositions(m, L);
  std::vector<double> weight(comps.size(), 1.0);
  if (weighting == GroupWeighting::Multinomial) {
    const double mfact = to_double(factorial_exact(m));
    for (size_t c = 0; c < comps.size(); ++c) {
      double den = 1.0;
      for (int p : comps[c].parts) den *= to_double(factorial_exact(p));
      weight[c] = mfact / den;
    }
  }
  NeumaierSum total;
  for (size_t i = 0; i < K; ++i) {
    NeumaierSum atom;
    for (size_t c = 0; c < comps.size(); ++c) {
      double term = weight[c];
      for (int k = 0; k < L; ++k) term *= detail::pow_int(g.groups[k].weights[i], comps[c].parts[k]);
      atom.add(term);
    }
    total.add(atom.value());
  }
  double tail = 0.0;
  for (const WeightVector& z : g.groups) tail = std::max(tail, z.tail_mass);
  return {m, total.value() / detail::pow_int(double(L), m), tail};
}

// E(Z_k^m) = (1/(beta)_(m)) sum_j [m j] beta^j j!/(alpha+1)_(j) (alpha/(alpha+j))^{k-1}
inline double exact_mean_z_power(double alpha, double beta, long long k, int m,
                                 const StirlingTable& table = default_stirling_table()) {
  if (!(alpha > 0 && beta > 0)) throw std::domain_error("exact_mean_z_power: parameters must be positive");
  if (k < 1 || m < 1) throw std::domain_error("exact_mean_z_power: k >= 1 and m >= 1 required");
  NeumaierSum s;
  for (int j = 1; j <= m; ++j) {
    double term = to_double(table.at(m, j)) * std::pow(beta, j) *
                  to_double(factorial_exact(j)) / rising_factorial(alpha + 1.0, j) *
                  std::pow(alpha / (alpha + j), double(k - 1));
    s.add(term);
  }
  return s.value() / rising_factorial(beta, m);
}

// E(H_m) for the two-level model:
// (1/(beta)_(m)) sum_j [m j] beta^j Gamma(j)/(alpha+1)_(j-1)
inline double exact_mean_hdp(double alpha, double beta, int m,
                             const StirlingTable& table = default_stirling_table()) {
  if (!(alpha > 0 && beta > 0)) throw std::domain_error("exact_mean_hdp: parameters must be positive");
  if (m < 2) throw std::domain_error("exact_mean_hdp: order must be >= 2");
  NeumaierSum s;
  for (int j = 1; j <= m; ++j)
    s.add(to_double(table.at(m, j)) * std::pow(beta, j) * gamma_int(j) /
          rising_factorial(alpha + 1.0, j - 1));
  return s.value() / rising_factorial(beta, m);
}

// E(H_{m,n}) for the finite-dimensional model:
// (1/(beta)_(m)) sum_j [m j] beta^j (alpha/n + 1)_(j-1) / (alpha+1)_(j-1)
inline double exact_mean_fdhdp(double alpha, double beta, long long n, int m,
                               const StirlingTable& table = default_stirling_table()) {
  if (!(alpha > 0 && beta > 0)) throw std::domain_error("exact_mean_fdhdp: parameters must be positive");
  if (n < 1) throw std::domain_error("exact_mean_fdhdp: n must be >= 1");
  if (m < 2) throw std::domain_error("exact_mean_fdhdp: order must be >= 2");
  NeumaierSum s;
  for (int j = 1; j <= m; ++j)
    s.add(to_double(table.at(m, j)) * std::pow(beta, j) *
          rising_factorial(alpha / double(n) + 1.0, j - 1) /
          rising_factorial(alpha + 1.0, j - 1));
  return s.value() / rising_factorial(beta, m);
}

// E(H^L_m) for the grouped model:
// (1/L^m) sum_m (1/prod_k (beta)_(m_k)) sum_j a_j beta^j Gamma(j)/(alpha+1)_(j-1)
inline double exact_mean_groups(double alpha, double beta, int m, int L,
                                const CoefficientSet& coeffs) {
  if (!(alpha > 0 && beta > 0)) throw std::domain_error("exact_mean_groups: parameters must be positive");
  if (m < 2 || L < 1) throw std::domain_error("exact_mean_groups: m >= 2 and L >= 1 required");
  if (coeffs.m != m || coeffs.L != L)
    throw std::invalid_argument("exact_mean_groups: coefficient set does not match (m, L)");
  NeumaierSum outer;
  for (const auto& [parts, a] : coeffs.a) {
    double den = 1.0;
    for (int p : parts) den *= rising_factorial(beta, p);
    NeumaierSum inner;
    for (int j = 1; j <= m; ++j)
      inner.add(to_double(a[j]) * std::pow(beta, j) * gamma_int(j) /
                rising_factorial(alpha + 1.0, j - 1));
    outer.add(inner.value() / den);
  }
  return outer.value() / detail::pow_int(double(L), m);
}

// ---- Limit-theorem scalings and centerings ----

// f(beta; m, c) = beta^{1-m} sum_j [m j] Gamma(j)/c^{j-1}
inline double scaling_hdp(double beta, int m, double c,
                          const StirlingTable& table = default_stirling_table()) {
  NeumaierSum s;
  for (int j = 1; j <= m; ++j)
    s.add(to_double(table.at(m, j)) * gamma_int(j) / std::pow(c, j - 1));
  return s.value() / std::pow(beta, m - 1);
}

// The asymptotic centering with the finite ratio alpha/beta in place of c.
inline double centering_hdp(double alpha, double beta, int m,
                            const StirlingTable& table = default_stirling_table()) {
  return scaling_hdp(beta, m, alpha / beta, table);
}

// f(beta; m, c, d) = beta^{1-m} sum_j [m j] (d+1)_(j-1)/c^{j-1}
inline double scaling_fdhdp(double beta, int m, double c, double d,
                            const StirlingTable& table = default_stirling_table()) {
  NeumaierSum s;
  for (int j = 1; j <= m; ++j)
    s.add(to_double(table.at(m, j)) * rising_factorial(d + 1.0, j - 1) / std::pow(c, j - 1));
  return s.value() / std::pow(beta, m - 1);
}

// Centering with the exact finite-(alpha, n) rising-factorial ratio.
inline double centering_fdhdp(double alpha, double beta, long long n, int m,
                              const StirlingTable& table = default_stirling_table()) {
  NeumaierSum s;
  for (int j = 1; j <= m; ++j)
    s.add(to_double(table.at(m, j)) * std::pow(beta, j - 1) *
          rising_factorial(alpha / double(n) + 1.0, j - 1) /
          rising_factorial(alpha + 1.0, j - 1));
  return s.value() / std::pow(beta, m - 1);
}

// f(beta; m, L, c) = (L^m beta^{m-1})^{-1} sum_j A_j(m,L) Gamma(j)/c^{j-1}
inline double scaling_groups(double beta, int m, int L, double c,
                             const CoefficientSet& coeffs) {
  if (coeffs.m != m || coeffs.L != L)
    throw std::invalid_argument("scaling_groups: coefficient set does not match (m, L)");
  NeumaierSum s;
  for (int j = 1; j <= m; ++j)
    s.add(to_double(coeffs.A[j]) * gamma_int(j) / std::pow(c, j - 1));
  return s.value() / (detail::pow_int(double(L), m) * std::pow(beta, m - 1));
}

inline double centering_groups(double alpha, double beta, int m, int L,
                               const CoefficientSet& coeffs) {
  return scaling_groups(beta, m, L, alpha / beta, coeffs);
}

enum class Centering { Theorem, ExactMean };

inline const char* to_string(Centering c) {
  return c == Centering::Theorem ? "theorem" : "exact-mean";
}

struct ScalingParams {
  Model model = Model::Hdp;
  double alpha = 1.0;
  double beta = 1.0;
  long long n = 0;  // finite-dimensional model only
  int L = 1;        // grouped model only
  Centering centering = Centering::Theorem;
  const CoefficientSet* coeffs = nullptr;  // required for Model::Groups
};

struct ScaledStatistic {
  double value = 0.0;
  double centering = 0.0;
  double scale = 1.0;
  Model model = Model::Hdp;
};

// sqrt(beta) * (raw - centering) / scale with the centering and scale of the
// matching limit theorem. ExactMean centering substitutes the exact
// finite-parameter mean; the scale is unchanged.
inline ScaledStatistic scaled_statistic(const HomozygosityValue& raw, const ScalingParams& p,
                                        const StirlingTable& table = default_stirling_table()) {
  if (!(p.alpha > 0 && p.beta > 0))
    throw std::invalid_argument("scaled_statistic: alpha and beta must be positive");
  const int m = raw.order;
  const double c = p.alpha / p.beta;
  double center = 0.0, scale = 0.0;
  switch (p.model) {
    case Model::Hdp:
      center = p.centering == Centering::Theorem ? centering_hdp(p.alpha, p.beta, m, table)
                                                 : exact_mean_hdp(p.alpha, p.beta, m, table);
      scale = scaling_hdp(p.beta, m, c, table);
      break;
    case Model::Fdhdp: {
      if (p.n < 1) throw std::invalid_argument("scaled_statistic: n required for the finite-dimensional model");
      const double d = p.alpha / double(p.n);
      center = p.centering == Centering::Theorem
                   ? centering_fdhdp(p.alpha, p.beta, p.n, m, table)
                   : exact_mean_fdhdp(p.alpha, p.beta, p.n, m, table);
      scale = scaling_fdhdp(p.beta, m, c, d, table);
      break;
    }
    case Model::Groups: {
      if (p.coeffs == nullptr)
        throw std::invalid_argument("scaled_statistic: coefficient set required for the grouped model");
      if (p.coeffs->m != m || p.coeffs->L != p.L)
        throw std::invalid_argument("scaled_statistic: coefficient set does not match (m, L)");
      center = p.centering == Centering::Theorem
                   ? centering_groups(p.alpha, p.beta, m, p.L, *p.coeffs)
                   : exact_mean_groups(p.alpha, p.beta, m, p.L, *p.coeffs);
      scale = scaling_groups(p.beta, m, p.L, c, *p.coeffs);
      break;
    }
  }
  if (!(scale > 0.0)) throw std::runtime_error("scaled_statistic: nonpositive scale");
  return {std::sqrt(p.beta) * (raw.value - center) / scale, center, scale, p.model};
}

}  // namespace hdphom
