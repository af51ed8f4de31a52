// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <string>

#include "hdphom/combinatorics.hpp"

namespace hdphom {

// Nonnegative exact fractions for the mean formulas at integer parameters.
// Arithmetic that would overflow 128 bits marks the value invalid; callers
// then fall back to the decimal evaluation.
struct Rational {
  bool valid = false;
  uint128 num = 0;
  uint128 den = 1;

  static Rational of(uint128 n, uint128 d) {
    Rational r;
    r.valid = d != 0;
    r.num = n;
    r.den = d == 0 ? 1 : d;
    r.reduce();
    return r;
  }

  void reduce() {
    uint128 a = num, b = den;
    while (b != 0) {
      uint128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      num /= a;
      den /= a;
    }
  }

  Rational operator+(const Rational& o) const {
    if (!valid || !o.valid) return {};
    try {
      return of(checked_add(checked_mul(num, o.den), checked_mul(o.num, den)),
                checked_mul(den, o.den));
    } catch (const std::range_error&) {
      return {};
    }
  }

  Rational operator*(const Rational& o) const {
    if (!valid || !o.valid) return {};
    // cross-reduce first to keep intermediates small
    Rational a = of(num, o.den), b = of(o.num, den);
    try {
      return of(checked_mul(a.num, b.num), checked_mul(a.den, b.den));
    } catch (const std::range_error&) {
      return {};
    }
  }

  std::string str() const { return to_string(num) + "/" + to_string(den); }
};

namespace detail {

inline bool small_integer(double x, long long* out) {
  if (!(x > 0) || x != std::floor(x) || x > 9e15) return false;
  *out = (long long)x;
  return true;
}

inline Rational rising_factorial_rational(uint128 base, int n) {
  // base (base+1) ... (base+n-1) as an exact integer over 1
  try {
    uint128 p = 1;
    for (int i = 0; i < n; ++i) p = checked_mul(p, base + uint128(i));
    return Rational::of(p, 1);
  } catch (const std::range_error&) {
    return {};
  }
}

}  // namespace detail

// E(H_m) as an exact fraction when alpha and beta are integers.
inline Rational exact_mean_hdp_rational(double alpha, double beta, int m,
                                        const StirlingTable& table = default_stirling_table()) {
  long long a, b;
  if (!detail::small_integer(alpha, &a) || !detail::small_integer(beta, &b)) return {};
  try {
    Rational sum = Rational::of(0, 1);
    uint128 beta_pow = 1;
    for (int j = 1; j <= m; ++j) {
      beta_pow = checked_mul(beta_pow, uint128(b));
      uint128 num = checked_mul(checked_mul(table.at(m, j), beta_pow), factorial_exact(j - 1));
      Rational den = detail::rising_factorial_rational(uint128(a) + 1, j - 1);
      if (!den.valid) return {};
      sum = sum + Rational::of(num, den.num);
      if (!sum.valid) return {};
    }
    Rational total_den = detail::rising_factorial_rational(uint128(b), m);
    if (!total_den.valid) return {};
    return sum * Rational::of(1, total_den.num);
  } catch (const std::range_error&) {
    return {};
  }
}

// E(H_{m,n}) as an exact fraction when alpha, beta, n are integers.
inline Rational exact_mean_fdhdp_rational(double alpha, double beta, long long n, int m,
                                          const StirlingTable& table = default_stirling_table()) {
  long long a, b;
  if (!detail::small_integer(alpha, &a) || !detail::small_integer(beta, &b) || n < 1) return {};
  try {
    Rational sum = Rational::of(0, 1);
    uint128 beta_pow = 1;
    for (int j = 1; j <= m; ++j) {
      beta_pow = checked_mul(beta_pow, uint128(b));
      // (alpha/n + 1)_(j-1) = prod_i (a + n(1+i)) / n^{j-1}
      uint128 rise_num = 1, n_pow = 1;
      for (int i = 0; i < j - 1; ++i) {
        rise_num = checked_mul(rise_num, uint128(a) + checked_mul(uint128(n), uint128(1 + i)));
        n_pow = checked_mul(n_pow, uint128(n));
      }
      Rational den = detail::rising_factorial_rational(uint128(a) + 1, j - 1);
      if (!den.valid) return {};
      Rational term = Rational::of(checked_mul(table.at(m, j), beta_pow), 1) *
                      Rational::of(rise_num, checked_mul(n_pow, den.num));
      sum = sum + term;
      if (!sum.valid) return {};
    }
    Rational total_den = detail::rising_factorial_rational(uint128(b), m);
    if (!total_den.valid) return {};
    return sum * Rational::of(1, total_den.num);
  } catch (const std::range_error&) {
    return {};
  }
}

// E(H^L_m) as an exact fraction when alpha and beta are integers.
inline Rational exact_mean_groups_rational(double alpha, double beta, int m, int L,
                                           const CoefficientSet& coeffs) {
  long long a, b;
  if (!detail::small_integer(alpha, &a) || !detail::small_integer(beta, &b)) return {};
  try {
    Rational outer = Rational::of(0, 1);
    for (const auto& [parts, aj] : coeffs.a) {
      uint128 den_rf = 1;
      for (int p : parts) {
        Rational rf = detail::rising_factorial_rational(uint128(b), p);
        if (!rf.valid) return {};
        den_rf = checked_mul(den_rf, rf.num);
      }
      Rational inner = Rational::of(0, 1);
      uint128 beta_pow = 1;
      for (int j = 1; j <= m; ++j) {
        beta_pow = checked_mul(beta_pow, uint128(b));
        Rational den = detail::rising_factorial_rational(uint128(a) + 1, j - 1);
        if (!den.valid) return {};
        inner = inner + Rational::of(checked_mul(checked_mul(aj[j], beta_pow),
                                                 factorial_exact(j - 1)),
                                     den.num);
        if (!inner.valid) return {};
      }
      outer = outer + inner * Rational::of(1, den_rf);
      if (!outer.valid) return {};
    }
    uint128 lm = 1;
    for (int i = 0; i < m; ++i) lm = checked_mul(lm, uint128(L));
    return outer * Rational::of(1, lm);
  } catch (const std::range_error&) {
    return {};
  }
}

}  // namespace hdphom
