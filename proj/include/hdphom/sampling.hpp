// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hdphom/combinatorics.hpp"
#include "hdphom/rng.hpp"

namespace hdphom {

enum class WeightModel { Gem, Hdp, FdhdpRow };

inline const char* to_string(WeightModel m) {
  switch (m) {
    case WeightModel::Gem: return "gem";
    case WeightModel::Hdp: return "hdp";
    case WeightModel::FdhdpRow: return "fdhdp";
  }
  return "?";
}

// A finite truncation of a random element of the simplex. The stored weights
// plus tail_mass sum to 1 up to float rounding; the tail's contribution to
// any power sum of order m >= 1 is at most tail_mass, since
// sum_tail x_i^m <= (sum_tail x_i)^m for nonnegative x summing below 1.
struct WeightVector {
  std::vector<double> weights;
  double tail_mass = 0.0;
  WeightModel model = WeightModel::Gem;
};

// One shared level-one stick vector and L level-two weight vectors truncated
// at the same index.
struct GroupFamily {
  WeightVector base;
  std::vector<WeightVector> groups;
};

inline constexpr uint64_t kMaxSticks = 10000000;

// Gamma(shape, 1) draw. Marsaglia-Tsang for shape >= 1; below 1 the boost
// identity Gamma(a) = Gamma(a+1) * U^{1/a} with the power taken in log scale.
// Results below the smallest positive normal flush to exact zero.
inline double gamma_variate(double shape, RngStream& stream) {
  if (!(shape > 0.0)) throw std::domain_error("gamma_variate: shape must be positive");
  if (shape < 1.0) {
    double g = gamma_variate(shape + 1.0, stream);
    double x = g * std::exp(std::log(stream.next_unit()) / shape);
    return x < std::numeric_limits<double>::min() ? 0.0 : x;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = stream.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = stream.next_unit();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

namespace detail {

inline double gamma_or_zero(double shape, RngStream& stream) {
  return shape == 0.0 ? 0.0 : gamma_variate(shape, stream);
}

}  // namespace detail

// Stick-breaking weights V_1 = U_1, V_n = prod_{k<n}(1-U_k) U_n with
// U_k ~ Beta(1, alpha) drawn as 1 - U^{1/alpha} in log scale. Stops at the
// first index where the remaining stick mass drops below eps; that mass is
// recorded as tail_mass.
inline WeightVector sample_gem(double alpha, double eps, RngStream& stream) {
  if (!(alpha > 0.0)) throw std::domain_error("sample_gem: alpha must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("sample_gem: eps must lie in (0,1)");
  WeightVector out;
  out.model = WeightModel::Gem;
  double remaining = 1.0;
  for (uint64_t i = 0; i < kMaxSticks; ++i) {
    double t = std::log(stream.next_unit()) / alpha;  // log(1 - U_k)
    out.weights.push_back(remaining * -std::expm1(t));
    remaining *= std::exp(t);
    if (remaining < eps) {
      out.tail_mass = remaining;
      return out;
    }
  }
  throw std::runtime_error("sample_gem: stick cap exceeded, parameters are pathological");
}

// L conditionally independent level-two weight vectors sharing one stick
// vector: per group, gamma variates with shapes beta*V_i on the common stick
// boundaries plus one lump for the truncated remainder, normalized by the
// group total. Group k draws from its own derived stream.
inline GroupFamily sample_hdp_groups(double alpha, double beta, int L, double eps,
                                     const StreamFamily& streams) {
  if (!(beta > 0.0)) throw std::domain_error("sample_hdp_groups: beta must be positive");
  if (L < 1 || L > kMaxGroups)
    throw std::invalid_argument("sample_hdp_groups: L must lie in [1, 14]");
  RngStream level1 = streams.level1();
  GroupFamily fam;
  fam.base = sample_gem(alpha, eps, level1);
  const size_t K = fam.base.weights.size();
  fam.groups.reserve(L);
  std::vector<double> g(K + 1);
  for (int k = 1; k <= L; ++k) {
    RngStream gs = streams.group(k);
    for (size_t i = 0; i < K; ++i) g[i] = detail::gamma_or_zero(beta * fam.base.weights[i], gs);
    g[K] = detail::gamma_or_zero(beta * fam.base.tail_mass, gs);
    NeumaierSum total;
    for (double v : g) total.add(v);
    const double t = total.value();
    if (!(t > 0.0) || !std::isfinite(t))
      throw std::runtime_error(
          "sample_hdp_groups: total gamma mass is zero (eps too large or beta too small)");
    WeightVector z;
    z.model = WeightModel::Hdp;
    z.weights.resize(K);
    for (size_t i = 0; i < K; ++i) z.weights[i] = g[i] / t;
    z.tail_mass = g[K] / t;
    fam.groups.push_back(std::move(z));
  }
  return fam;
}

// Single-group case; identical draws to sample_hdp_groups with L = 1.
inline WeightVector sample_hdp(double alpha, double beta, double eps,
                               const StreamFamily& streams) {
  GroupFamily fam = sample_hdp_groups(alpha, beta, 1, eps, streams);
  return std::move(fam.groups[0]);
}

// Two nested symmetric Dirichlet layers: (W_1..W_n) ~ Dir(alpha/n, ...) from
// normalized gammas, then Z ~ Dir(beta*W_1, ..., beta*W_n). Exactly n weights
// and no truncation tail.
inline WeightVector sample_fdhdp(double alpha, double beta, int n,
                                 const StreamFamily& streams) {
  if (!(alpha > 0.0)) throw std::domain_error("sample_fdhdp: alpha must be positive");
  if (!(beta > 0.0)) throw std::domain_error("sample_fdhdp: beta must be positive");
  if (n < 1) throw std::domain_error("sample_fdhdp: n must be >= 1");
  RngStream level1 = streams.level1();
  RngStream level2 = streams.fdhdp_layer2();
  std::vector<double> w(n);
  {
    const double shape = alpha / double(n);
    NeumaierSum total;
    for (int i = 0; i < n; ++i) {
      w[i] = detail::gamma_or_zero(shape, level1);
      total.add(w[i]);
    }
    const double t = total.value();
    if (!(t > 0.0) || !std::isfinite(t))
      throw std::runtime_error("sample_fdhdp: level-one gamma mass is zero");
    for (int i = 0; i < n; ++i) w[i] /= t;
  }
  WeightVector out;
  out.model = WeightModel::FdhdpRow;
  out.tail_mass = 0.0;
  out.weights.resize(n);
  NeumaierSum total;
  for (int i = 0; i < n; ++i) {
    out.weights[i] = detail::gamma_or_zero(beta * w[i], level2);
    total.add(out.weights[i]);
  }
  const double t = total.value();
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::runtime_error("sample_fdhdp: level-two gamma mass is zero");
  for (int i = 0; i < n; ++i) out.weights[i] /= t;
  return out;
}

}  // namespace hdphom
