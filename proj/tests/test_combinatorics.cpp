// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hdphom/combinatorics.hpp"
#include "hdphom/rng.hpp"

using namespace hdphom;

namespace {

// Oracle: count permutations of n elements with k cycles by enumeration.
long long cycles_of(const std::vector<int>& perm) {
  std::vector<bool> seen(perm.size(), false);
  long long cycles = 0;
  for (size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    ++cycles;
    size_t j = i;
    while (!seen[j]) {
      seen[j] = true;
      j = size_t(perm[j]);
    }
  }
  return cycles;
}

long long stirling_by_permutations(int n, int k) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  long long count = 0;
  do {
    if (cycles_of(perm) == k) ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return count;
}

// Oracle: coefficients of x(x+1)...(x+n-1) by direct integer polynomial
// expansion. Independent of the recurrence used by the library table.
std::vector<long long> rising_poly_coefficients(int n) {
  std::vector<long long> poly{1};
  for (int i = 0; i < n; ++i) {
    std::vector<long long> next(poly.size() + 1, 0);
    for (size_t a = 0; a < poly.size(); ++a) {
      next[a + 1] += poly[a];        // x * poly
      next[a] += poly[a] * i;        // i * poly
    }
    poly = std::move(next);
  }
  return poly;
}

void enumerate_compositions(int total, int L, std::vector<std::vector<int>>& out,
                            std::vector<int>& cur) {
  if (int(cur.size()) == L - 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int p = 0; p <= total; ++p) {
    cur.push_back(p);
    enumerate_compositions(total - p, L, out, cur);
    cur.pop_back();
  }
}

std::vector<std::vector<int>> all_compositions(int total, int L) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  enumerate_compositions(total, L, out, cur);
  return out;
}

// Oracle: a_j by direct enumeration of j-compositions, using the polynomial
// oracle for the Stirling values.
long long brute_a_j(const std::vector<int>& m_parts, int j) {
  const int L = int(m_parts.size());
  long long total = 0;
  for (const std::vector<int>& jc : all_compositions(j, L)) {
    long long prod = 1;
    for (int k = 0; k < L; ++k) {
      const std::vector<long long> row = rising_poly_coefficients(m_parts[k]);
      prod *= jc[k] < int(row.size()) ? row[size_t(jc[k])] : 0;
      if (prod == 0) break;
    }
    total += prod;
  }
  return total;
}

}  // namespace

TEST_CASE("stirling basic values and zeros") {
  CHECK(stirling_first_unsigned(0, 0) == uint128{1});
  CHECK(stirling_first_unsigned(5, 0) == uint128{0});
  CHECK(stirling_first_unsigned(5, 5) == uint128{1});
  CHECK(stirling_first_unsigned(3, 7) == uint128{0});
  CHECK(stirling_first_unsigned(3, 2) == uint128(stirling_by_permutations(3, 2)));
  CHECK(stirling_first_unsigned(3, 2) == uint128{3});
  CHECK(stirling_first_unsigned(4, 2) == uint128(rising_poly_coefficients(4)[2]));
  CHECK(stirling_first_unsigned(4, 2) == uint128{11});
}

TEST_CASE("stirling rows satisfy the recurrence and sum to n!") {
  const StirlingTable& t = default_stirling_table();
  for (int n = 0; n < 20; ++n) {
    uint128 row_sum = 0;
    for (int k = 0; k <= n; ++k) row_sum = checked_add(row_sum, t.at(n, k));
    CHECK(row_sum == factorial_exact(n));
    for (int k = 1; k <= n + 1; ++k)
      CHECK(t.at(n + 1, k) == checked_add(checked_mul(uint128(n), t.at(n, k)), t.at(n, k - 1)));
  }
}

TEST_CASE("stirling range limits") {
  CHECK_THROWS_AS(stirling_first_unsigned(34, 1), std::range_error);
  CHECK_THROWS_AS(StirlingTable(40), std::range_error);
  CHECK_THROWS_AS(factorial_exact(35), std::range_error);
  CHECK_NOTHROW(StirlingTable(33));
}

TEST_CASE("rising factorial") {
  CHECK(rising_factorial(3.7, 0) == 1.0);
  CHECK(rising_factorial(2.0, 3) == 24.0);
  for (int n = 1; n <= 12; ++n)
    CHECK(rising_factorial(1.0, n) == Catch::Approx(to_double(factorial_exact(n))).epsilon(1e-14));
}

TEST_CASE("stirling generating identity against rising factorial") {
  // Near negative-integer roots the rising factorial is tiny while the
  // polynomial terms are huge, so the error is measured against the term
  // magnitude (backward-relative), not the result.
  const StirlingTable& t = default_stirling_table();
  RngStream xs(123, 0);
  for (int n = 1; n <= 12; ++n) {
    for (int rep = 0; rep < 20; ++rep) {
      const double x = -5.0 + 10.0 * xs.next_unit();
      NeumaierSum s, mag;
      for (int k = 0; k <= n; ++k) {
        s.add(to_double(t.at(n, k)) * std::pow(x, k));
        mag.add(to_double(t.at(n, k)) * std::pow(std::abs(x), k));
      }
      const double want = rising_factorial(x, n);
      CHECK(std::abs(s.value() - want) <= 1e-12 * std::max(1.0, mag.value()));
    }
  }
}

TEST_CASE("composition enumeration order and counts") {
  std::vector<Composition> c22 = compositions(2, 2);
  REQUIRE(c22.size() == 3);
  CHECK(c22[0].parts == std::vector<int>{0, 2});
  CHECK(c22[1].parts == std::vector<int>{1, 1});
  CHECK(c22[2].parts == std::vector<int>{2, 0});
  for (const Composition& c : c22) CHECK(c.total == 2);

  for (int m = 1; m <= 6; ++m) {
    std::vector<Composition> single = compositions(m, 1);
    REQUIRE(single.size() == 1);
    CHECK(single[0].parts == std::vector<int>{m});
  }

  CHECK(composition_count(4, 3) == uint128{15});
  CHECK(compositions(4, 3).size() == 15);
  CHECK(compositions(0, 3).size() == 1);

  for (int total = 0; total <= 7; ++total)
    for (int L = 1; L <= 4; ++L)
      CHECK(compositions(total, L).size() == size_t(to_double(composition_count(total, L))));
}

TEST_CASE("composition cap is enforced") {
  CHECK(composition_count(50, 6) > kDefaultCompositionCap);
  CHECK_THROWS_AS(compositions(50, 6), std::length_error);
  CHECK_NOTHROW(compositions(50, 6, kUint128Max));
}

TEST_CASE("coeff_a worked examples") {
  const StirlingTable& t = default_stirling_table();
  {
    std::vector<uint128> a = coeff_a(Composition::of({2, 0}), 2, t);
    CHECK(a[1] == uint128{1});
    CHECK(a[2] == uint128{1});
  }
  {
    std::vector<uint128> a = coeff_a(Composition::of({1, 1}), 2, t);
    CHECK(a[1] == uint128{0});
    CHECK(a[2] == uint128{1});
  }
  for (int m = 1; m <= 8; ++m) {
    std::vector<uint128> a = coeff_a(Composition::of({m}), 1, t);
    for (int j = 1; j <= m; ++j) CHECK(a[j] == t.at(m, j));
  }
}

TEST_CASE("coeff_a matches the brute-force composition oracle") {
  const StirlingTable& t = default_stirling_table();
  for (int m = 1; m <= 6; ++m) {
    for (int L = 1; L <= 4; ++L) {
      for (const std::vector<int>& parts : all_compositions(m, L)) {
        std::vector<uint128> a = coeff_a(Composition::of(parts), L, t);
        for (int j = 1; j <= m; ++j) CHECK(a[j] == uint128(brute_a_j(parts, j)));
        CHECK(a[m] == uint128{1});  // leading coefficient of a monic product
      }
    }
  }
}

TEST_CASE("coeff_A worked examples and oracle") {
  const StirlingTable& t = default_stirling_table();
  {
    std::vector<uint128> A = coeff_A(2, 2, t);
    CHECK(A[1] == uint128{2});
    CHECK(A[2] == uint128{3});
  }
  {
    std::vector<uint128> A = coeff_A(2, 1, t);
    CHECK(A[1] == uint128{1});
    CHECK(A[2] == uint128{1});
  }
  for (int m = 1; m <= 8; ++m) {
    std::vector<uint128> A = coeff_A(m, 1, t);
    for (int j = 1; j <= m; ++j) CHECK(A[j] == t.at(m, j));
  }
  for (int m = 1; m <= 6; ++m)
    for (int L = 1; L <= 4; ++L) {
      std::vector<uint128> A = coeff_A(m, L, t);
      for (int j = 1; j <= m; ++j) {
        long long want = 0;
        for (const std::vector<int>& parts : all_compositions(m, L)) want += brute_a_j(parts, j);
        CHECK(A[j] == uint128(want));
      }
    }
}

TEST_CASE("coeff_A_tilde examples and oracle") {
  const StirlingTable& t = default_stirling_table();
  {
    std::vector<uint128> At = coeff_A_tilde(2, 1, t);
    CHECK(At[1] == uint128{6});
    CHECK(At[2] == uint128{11});
    CHECK(At[3] == uint128{6});
    CHECK(At[4] == uint128{1});
  }
  for (int m = 1; m <= 8; ++m) {
    std::vector<uint128> At = coeff_A_tilde(m, 1, t);
    for (int j = 1; j <= 2 * m; ++j) CHECK(At[j] == t.at(2 * m, j));
  }
  {
    // ordered-pair brute force with the polynomial oracle
    std::vector<uint128> At = coeff_A_tilde(2, 2, t);
    CHECK(At[4] == uint128{9});
    for (int j = 1; j <= 4; ++j) {
      long long want = 0;
      for (const std::vector<int>& m1 : all_compositions(2, 2))
        for (const std::vector<int>& m2 : all_compositions(2, 2)) {
          std::vector<int> sum = {m1[0] + m2[0], m1[1] + m2[1]};
          want += brute_a_j(sum, j);
        }
      CHECK(At[j] == uint128(want));
    }
  }
}

TEST_CASE("coeff_C examples and normalization") {
  const StirlingTable& t = default_stirling_table();
  for (double c : {0.1, 1.0, 10.0})
    for (int m = 2; m <= 6; ++m)
      CHECK(coeff_C(Composition::of({m}), 1, c, t) == Catch::Approx(1.0).margin(1e-14));

  CHECK(coeff_C(Composition::of({1, 1}), 2, 1.0, t) == Catch::Approx(0.2).margin(1e-14));

  for (int m = 2; m <= 6; ++m)
    for (int L = 1; L <= 4; ++L)
      for (double c : {0.1, 1.0, 10.0}) {
        CoefficientSet cs = make_coefficient_set(m, L, c, t);
        NeumaierSum s;
        for (const auto& [parts, C] : cs.C) s.add(C);
        CHECK(std::abs(s.value() - 1.0) <= 1e-12);
      }
}

TEST_CASE("coefficient set is internally consistent") {
  const StirlingTable& t = default_stirling_table();
  CoefficientSet cs = make_coefficient_set(3, 2, 0.7, t);
  CHECK(cs.a.size() == 4);
  for (int j = 1; j <= 3; ++j) {
    uint128 sum = 0;
    for (const auto& [parts, a] : cs.a) sum = checked_add(sum, a[j]);
    CHECK(sum == cs.A[j]);
  }
  CHECK(cs.A_tilde.size() == 7);
}

TEST_CASE("uint128 string conversion") {
  CHECK(to_string(uint128{0}) == "0");
  CHECK(to_string(uint128{1234567890123456789ULL}) == "1234567890123456789");
  CHECK(to_string(factorial_exact(25)) == "15511210043330985984000000");
}
