// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hdphom {

// Exact unsigned arithmetic for the coefficient systems. All values are kept
// as 128-bit integers and converted to double only at the final evaluation
// step. Overflow raises std::range_error instead of wrapping.

using uint128 = unsigned __int128;

inline constexpr uint128 kUint128Max = ~uint128{0};

inline uint128 checked_add(uint128 a, uint128 b) {
  uint128 s = a + b;
  if (s < a) throw std::range_error("exact integer overflow in addition");
  return s;
}

inline uint128 checked_mul(uint128 a, uint128 b) {
  if (a != 0 && b > kUint128Max / a)
    throw std::range_error("exact integer overflow in multiplication");
  return a * b;
}

inline std::string to_string(uint128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(char('0' + int(v % 10)));
    v /= 10;
  }
  return std::string(s.rbegin(), s.rend());
}

inline double to_double(uint128 v) { return static_cast<double>(v); }

// n! as an exact integer. Representable through n = 34.
inline uint128 factorial_exact(int n) {
  if (n < 0) throw std::domain_error("factorial of negative integer");
  uint128 f = 1;
  for (int i = 2; i <= n; ++i) f = checked_mul(f, uint128(i));
  return f;
}

// Gamma(j) for integer j >= 1, i.e. (j-1)! converted to double at the end.
inline double gamma_int(int j) {
  if (j < 1) throw std::domain_error("gamma_int requires j >= 1");
  return to_double(factorial_exact(j - 1));
}

// x(x+1)...(x+n-1); empty product for n = 0.
inline double rising_factorial(double x, int n) {
  if (n < 0) throw std::domain_error("rising_factorial requires n >= 0");
  double p = 1.0;
  for (int i = 0; i < n; ++i) p *= x + i;
  return p;
}

// Compensated accumulation (Neumaier variant of Kahan summation).
class NeumaierSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Unsigned Stirling numbers of the first kind, [n k]: the coefficient of x^k
// in x(x+1)...(x+n-1), equivalently the number of n-permutations with k
// cycles. The table is exact and immutable after construction; rows beyond
// kMaxSupported would overflow 128-bit integers, so construction refuses them.
class StirlingTable {
 public:
  static constexpr int kMaxSupported = 33;

  explicit StirlingTable(int max_n) : max_n_(max_n) {
    if (max_n < 0) throw std::domain_error("StirlingTable: max_n must be >= 0");
    if (max_n > kMaxSupported)
      throw std::range_error("StirlingTable: rows beyond n = 33 exceed the exact-arithmetic range");
    rows_.resize(max_n + 1);
    rows_[0] = {uint128{1}};
    for (int n = 0; n < max_n; ++n) {
      rows_[n + 1].assign(n + 2, 0);
      for (int k = 0; k <= n; ++k) {
        // [n+1, k] = n*[n, k] + [n, k-1]
        uint128 v = checked_mul(uint128(n), rows_[n][k]);
        if (k + 1 <= n + 1) rows_[n + 1][k + 1] = checked_add(rows_[n + 1][k + 1], rows_[n][k]);
        rows_[n + 1][k] = checked_add(rows_[n + 1][k], v);
      }
    }
  }

  int max_n() const { return max_n_; }

  uint128 at(int n, int k) const {
    if (n < 0 || k < 0) throw std::domain_error("StirlingTable: negative index");
    if (n > max_n_)
      throw std::range_error("StirlingTable: n exceeds the exact-arithmetic bound of this table");
    if (k > n) return 0;
    return rows_[n][k];
  }

  // Row [n 0..n] as doubles, index k.
  std::vector<double> row_as_double(int n) const {
    std::vector<double> r(n + 1);
    for (int k = 0; k <= n; ++k) r[k] = to_double(at(n, k));
    return r;
  }

  // Test hook: builds a table from raw rows without validating the recurrence.
  static StirlingTable from_rows_unchecked(std::vector<std::vector<uint128>> rows) {
    StirlingTable t(0);
    t.max_n_ = int(rows.size()) - 1;
    t.rows_ = std::move(rows);
    return t;
  }

 private:
  int max_n_;
  std::vector<std::vector<uint128>> rows_;
};

inline const StirlingTable& default_stirling_table() {
  static const StirlingTable table(StirlingTable::kMaxSupported);
  return table;
}

inline uint128 stirling_first_unsigned(int n, int k) {
  return default_stirling_table().at(n, k);
}

// An ordered tuple of L nonnegative parts with their sum.
struct Composition {
  std::vector<int> parts;
  int total = 0;

  static Composition of(std::vector<int> parts) {
    Composition c;
    c.total = 0;
    for (int p : parts) {
      if (p < 0) throw std::domain_error("Composition parts must be nonnegative");
      c.total += p;
    }
    c.parts = std::move(parts);
    return c;
  }
};

inline constexpr uint128 kDefaultCompositionCap = 1000000;

// Number of L-tuples of nonnegative integers summing to total:
// binomial(total + L - 1, L - 1), exact.
inline uint128 composition_count(int total, int L) {
  if (total < 0 || L < 1) throw std::domain_error("composition_count: total >= 0 and L >= 1 required");
  uint128 c = 1;
  // binomial(total + L - 1, L - 1), multiplicative form; each step divides evenly
  for (int i = 1; i <= L - 1; ++i) {
    c = checked_mul(c, uint128(total + i));
    c /= uint128(i);
  }
  return c;
}

// All compositions of `total` into exactly L parts, lexicographically
// ascending on parts. Throws std::length_error when the count exceeds `cap`.
inline std::vector<Composition> compositions(int total, int L,
                                             uint128 cap = kDefaultCompositionCap) {
  if (composition_count(total, L) > cap)
    throw std::length_error("compositions: enumeration would exceed the configured cap");
  std::vector<Composition> out;
  std::vector<int> parts(L, 0);
  // Recursive descent over part positions; kept iterative-friendly by depth L <= ~16.
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == L - 1) {
      parts[pos] = remaining;
      out.push_back(Composition::of(parts));
      return;
    }
    for (int p = 0; p <= remaining; ++p) {
      parts[pos] = p;
      self(self, pos + 1, remaining - p);
    }
  };
  rec(rec, 0, total);
  return out;
}

namespace detail {

// Coefficients of prod_k (x)_{(s_k)} for the parts of a composition, exact.
// Index j holds the x^j coefficient; the vector has size total+1.
inline std::vector<uint128> rising_product_coefficients(const std::vector<int>& parts,
                                                        const StirlingTable& table) {
  std::vector<uint128> poly{uint128{1}};
  for (int s : parts) {
    std::vector<uint128> next(poly.size() + size_t(s), 0);
    for (size_t a = 0; a < poly.size(); ++a) {
      if (poly[a] == 0) continue;
      for (int k = 0; k <= s; ++k) {
        uint128 st = table.at(s, k);
        if (st == 0) continue;
        next[a + size_t(k)] = checked_add(next[a + size_t(k)], checked_mul(poly[a], st));
      }
    }
    poly = std::move(next);
  }
  return poly;
}

}  // namespace detail

// a_j(m_vec, L) = sum over j-compositions (j_1..j_L) of prod_k [m_k, j_k],
// returned for j = 1..m (index j; slot 0 unused). Equals the x^j coefficient
// of prod_k (x)_{(m_k)}, so it is evaluated by exact polynomial convolution
// of Stirling rows.
inline std::vector<uint128> coeff_a(const Composition& m_vec, int L,
                                    const StirlingTable& table) {
  if (int(m_vec.parts.size()) != L)
    throw std::invalid_argument("coeff_a: composition length does not match L");
  if (m_vec.total < 1) throw std::domain_error("coeff_a: total order must be >= 1");
  std::vector<uint128> poly = detail::rising_product_coefficients(m_vec.parts, table);
  poly.resize(size_t(m_vec.total) + 1, 0);
  poly[0] = 0;  // no constant term once some part is positive
  return poly;
}

// A_j(m, L) = sum over compositions of m into L parts of a_j, j = 1..m.
inline std::vector<uint128> coeff_A(int m, int L, const StirlingTable& table,
                                    uint128 cap = kDefaultCompositionCap) {
  if (m < 1 || L < 1) throw std::domain_error("coeff_A: m >= 1 and L >= 1 required");
  std::vector<uint128> A(size_t(m) + 1, 0);
  for (const Composition& mv : compositions(m, L, cap)) {
    std::vector<uint128> a = coeff_a(mv, L, table);
    for (int j = 1; j <= m; ++j) A[j] = checked_add(A[j], a[j]);
  }
  return A;
}

// A~_j(m, L) = sum over ordered pairs (m1, m2) of compositions of m of the
// a_j-style coefficient of the componentwise sum m1 + m2, j = 1..2m.
inline std::vector<uint128> coeff_A_tilde(int m, int L, const StirlingTable& table,
                                          uint128 cap = kDefaultCompositionCap) {
  if (m < 1 || L < 1) throw std::domain_error("coeff_A_tilde: m >= 1 and L >= 1 required");
  std::vector<Composition> comps = compositions(m, L, cap);
  if (checked_mul(uint128(comps.size()), uint128(comps.size())) > cap)
    throw std::length_error("coeff_A_tilde: pair enumeration would exceed the configured cap");
  std::vector<uint128> At(size_t(2 * m) + 1, 0);
  std::map<std::vector<int>, std::vector<uint128>> memo;  // per distinct pair sum
  std::vector<int> sum(L);
  for (const Composition& m1 : comps) {
    for (const Composition& m2 : comps) {
      for (int k = 0; k < L; ++k) sum[k] = m1.parts[k] + m2.parts[k];
      auto it = memo.find(sum);
      if (it == memo.end()) {
        std::vector<uint128> g = detail::rising_product_coefficients(sum, table);
        g.resize(size_t(2 * m) + 1, 0);
        it = memo.emplace(sum, std::move(g)).first;
      }
      const std::vector<uint128>& g = it->second;
      for (int j = 1; j <= 2 * m; ++j) At[j] = checked_add(At[j], g[j]);
    }
  }
  return At;
}

// C_m = (sum_j a_j(m_vec) Gamma(j)/c^{j-1}) / (sum_j A_j Gamma(j)/c^{j-1}).
inline double coeff_C(const Composition& m_vec, int L, double c,
                      const StirlingTable& table,
                      uint128 cap = kDefaultCompositionCap) {
  if (!(c > 0)) throw std::domain_error("coeff_C: c must be positive");
  std::vector<uint128> a = coeff_a(m_vec, L, table);
  std::vector<uint128> A = coeff_A(m_vec.total, L, table, cap);
  NeumaierSum num, den;
  double cpow = 1.0;
  for (int j = 1; j <= m_vec.total; ++j) {
    double g = gamma_int(j) / cpow;
    num.add(to_double(a[j]) * g);
    den.add(to_double(A[j]) * g);
    cpow *= c;
  }
  return num.value() / den.value();
}

// The Stirling-derived coefficient families for one (m, L, c).
struct CoefficientSet {
  int m = 0;
  int L = 1;
  double c = 1.0;
  std::map<std::vector<int>, std::vector<uint128>> a;  // composition parts -> a_j (index j)
  std::vector<uint128> A;                              // index j = 1..m
  std::vector<uint128> A_tilde;                        // index j = 1..2m
  std::map<std::vector<int>, double> C;                // composition parts -> C_m
};

inline CoefficientSet make_coefficient_set(int m, int L, double c,
                                           const StirlingTable& table = default_stirling_table(),
                                           uint128 cap = kDefaultCompositionCap) {
  if (m < 2) throw std::domain_error("make_coefficient_set: m >= 2 required");
  if (L < 1) throw std::domain_error("make_coefficient_set: L >= 1 required");
  if (!(c > 0)) throw std::domain_error("make_coefficient_set: c must be positive");
  CoefficientSet cs;
  cs.m = m;
  cs.L = L;
  cs.c = c;
  cs.A.assign(size_t(m) + 1, 0);
  for (const Composition& mv : compositions(m, L, cap)) {
    std::vector<uint128> a = coeff_a(mv, L, table);
    for (int j = 1; j <= m; ++j) cs.A[j] = checked_add(cs.A[j], a[j]);
    cs.a.emplace(mv.parts, std::move(a));
  }
  cs.A_tilde = coeff_A_tilde(m, L, table, cap);
  // C_m shares the A-denominator across compositions
  NeumaierSum den;
  {
    double cpow = 1.0;
    for (int j = 1; j <= m; ++j) {
      den.add(to_double(cs.A[j]) * gamma_int(j) / cpow);
      cpow *= c;
    }
  }
  for (const auto& [parts, a] : cs.a) {
    NeumaierSum num;
    double cpow = 1.0;
    for (int j = 1; j <= m; ++j) {
      num.add(to_double(a[j]) * gamma_int(j) / cpow);
      cpow *= c;
    }
    cs.C.emplace(parts, num.value() / den.value());
  }
  return cs;
}

}  // namespace hdphom
