#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

#include "zeckpell/pell.hpp"

using namespace zeckpell;

namespace {

bool is_square(const BigInt& n) { return n >= 0 && mpz_perfect_square_p(n.get_mpz_t()) != 0; }

bool small_square(long n) {
  long r = static_cast<long>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r * r == n;
}

std::vector<long> sample_d() { return {2, 3, 5, 6, 7, 11, 13, 30, 61, 109, 219, 14401}; }

}  // namespace

TEST_CASE("continued fraction of sqrt d") {
  PeriodicCF c2 = sqrt_cf(2);
  CHECK(c2.a0 == 1);
  CHECK(c2.period == std::vector<BigInt>{2});
  PeriodicCF c3 = sqrt_cf(3);
  CHECK(c3.a0 == 1);
  CHECK(c3.period == std::vector<BigInt>{1, 2});
  // the convergent just before the end of the period is the unit
  PeriodicCF c219 = sqrt_cf(219);
  BigInt p0 = 1, q0 = 0, p1 = c219.a0, q1 = 1;
  for (std::size_t i = 0; i + 1 < c219.period.size(); ++i) {
    BigInt p2 = c219.period[i] * p1 + p0, q2 = c219.period[i] * q1 + q0;
    p0 = p1, q0 = q1, p1 = p2, q1 = q2;
  }
  CHECK(p1 == 74);
  CHECK(q1 == 5);
  CHECK_THROWS_AS(sqrt_cf(49), PerfectSquare);
  CHECK_THROWS_AS(sqrt_cf(1), DomainError);
}

TEST_CASE("fundamental solutions") {
  CHECK(fundamental_solution(2) == PellSolution{2, 1, 1, -1});
  CHECK(fundamental_solution(3) == PellSolution{3, 2, 1, 1});
  CHECK(fundamental_solution(30) == PellSolution{30, 11, 2, 1});
  CHECK(fundamental_solution(14401) == PellSolution{14401, 120, 1, -1});
  CHECK(fundamental_solution(219) == PellSolution{219, 74, 5, 1});
  CHECK(fundamental_solution(11) == PellSolution{11, 10, 3, 1});
  CHECK(fundamental_solution(61).X1 == BigInt("29718"));
  CHECK(fundamental_solution(61).epsilon == -1);
  CHECK_THROWS_AS(fundamental_solution(16), PerfectSquare);
}

TEST_CASE("x values") {
  CHECK(x_value(fundamental_solution(3), 4) == 97);
  CHECK(x_value(fundamental_solution(11), 2) == 199);
  CHECK(x_value(fundamental_solution(2), 0) == 1);
  CHECK(x_value(fundamental_solution(2), 3) == 7);
  CHECK(x_value(fundamental_solution(219), 2) == 10951);
  CHECK(x_value(fundamental_solution(14401), 2) == 28801);
}

TEST_CASE("P polynomials") {
  CHECK(p_poly_eval(2, 1, 2) == 7);
  CHECK(p_poly_eval(3, -1, 1) == 7);
  for (long x : {1L, 2L, 17L}) {
    CHECK(p_poly_eval(1, 1, x) == x);
    CHECK(p_poly_eval(1, -1, x) == x);
  }
  CHECK(p_poly_invert(2, 1, 241) == BigInt(11));
  CHECK(p_poly_invert(2, -1, 28801) == BigInt(120));
  CHECK(!p_poly_invert(2, 1, 8));
  CHECK(!p_poly_invert(3, 1, 1000));
}

TEST_CASE("squarefree parts and factoring") {
  CHECK(squarefree_part(48) == SquarefreeSplit{3, 4});
  CHECK(squarefree_part(5475) == SquarefreeSplit{219, 5});
  CHECK(squarefree_part(1) == SquarefreeSplit{1, 1});
  auto f = factorize(BigInt("1000000016000000063"));  // (10^9 + 7)(10^9 + 9)
  REQUIRE(f.size() == 2);
  CHECK(f[0].first == BigInt(1000000007));
  CHECK(f[1].first == BigInt(1000000009));
  CHECK_THROWS_AS(factorize(BigInt("100000000000000000000000"), BigInt(1000000)), FactoringCeilingExceeded);
}

TEST_CASE("normalization to the fundamental unit") {
  NormalizedPell a = normalize_to_fundamental(7, 1);
  CHECK(a.base == PellSolution{3, 2, 1, 1});
  CHECK(a.ell == 2);
  NormalizedPell b = normalize_to_fundamental(2, 1);
  CHECK(b.base.d == 3);
  CHECK(b.ell == 1);
  // 3^2 - 2*2^2 = 1 comes from the second power of 1 + sqrt 2
  NormalizedPell c = normalize_to_fundamental(3, 1);
  CHECK(c.base == PellSolution{2, 1, 1, -1});
  CHECK(c.ell == 2);
  // while 3^2 - 10 = -1 is fundamental for d = 10
  NormalizedPell c2 = normalize_to_fundamental(3, -1);
  CHECK(c2.base == PellSolution{10, 3, 1, -1});
  CHECK(c2.ell == 1);
  NormalizedPell d = normalize_to_fundamental(10951, 1);
  CHECK(d.base.d == 219);
  CHECK(d.ell == 2);
  CHECK_THROWS_AS(normalize_to_fundamental(1, 1), DomainError);
}

TEST_CASE("property: fundamental solutions for d <= 500") {
  for (long d = 2; d <= 500; ++d) {
    if (is_square(BigInt(d))) continue;
    PellSolution s = fundamental_solution(d);
    CHECK(s.X1 * s.X1 - d * s.Y1 * s.Y1 == s.epsilon);
    // minimality by search over y < Y1, capped where Y1 is astronomically large
    long limit = s.Y1 < 200000 ? s.Y1.get_si() : 200000;
    for (long y = 1; y < limit; ++y) {
      long dy2 = d * y * y;
      if (small_square(dy2 + 1) || small_square(dy2 - 1)) {
        FAIL("smaller solution for d=" << d << " at y=" << y);
        break;
      }
    }
  }
}

TEST_CASE("property: recurrence against the closed form, bounds and doubling") {
  ConstExpr alpha2 = pow(ConstExpr::alpha(), 2);
  for (long d : sample_d()) {
    PellSolution s = fundamental_solution(d);
    ConstExpr delta = s.delta_expr();
    ConstExpr eta = ConstExpr(s.epsilon) / delta;
    for (long l = 1; l <= 50; ++l) {
      BigInt x = x_value(s, l);
      RealInterval closed = eval((pow(delta, l) + pow(eta, l)) / ConstExpr(2), 256 + 20 * l);
      CHECK(closed.certain_round() == x);
      CHECK(compare_certified(pow(delta, l) / alpha2, ConstExpr(x)) == Ordering::Less);
      CHECK(compare_certified(ConstExpr(x), pow(delta, l)) == Ordering::Less);
      if (l <= 25) {
        int sign = (l % 2 == 1) ? s.epsilon : 1;
        CHECK(x_value(s, 2 * l) == 2 * x * x - sign);
      }
    }
    CHECK(compare_certified(delta, ConstExpr(1) + sqrt(ConstExpr(2))) != Ordering::Less);
  }
}

TEST_CASE("property: P inversion round trip") {
  for (int eps : {1, -1}) {
    for (long l = 2; l <= 20; ++l) {
      for (long x = 1; x <= 1000; x += (l <= 4 ? 1 : 7)) {
        BigInt v = p_poly_eval(l, eps, x);
        auto back = p_poly_invert(l, eps, v);
        if (eps == 1 && x == 1) {
          CHECK(back == BigInt(1));
          continue;
        }
        if (back != BigInt(x)) {
          FAIL("P inversion failed for l=" << l << " eps=" << eps << " x=" << x);
        }
        auto next = p_poly_invert(l, eps, v + 1);
        bool next_ok = !next || p_poly_eval(l, eps, *next) == v + 1;
        CHECK(next_ok);
      }
    }
  }
}

TEST_CASE("property: squarefree decomposition") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    BigInt n = BigInt(static_cast<unsigned long>(rng() % 1000000000ULL)) + 1;
    if (i % 3 == 0) n *= BigInt(static_cast<unsigned long>(rng() % 1000 + 1)) * BigInt(static_cast<unsigned long>(rng() % 1000 + 1));
    SquarefreeSplit sp = squarefree_part(n);
    CHECK(sp.d * sp.y * sp.y == n);
    for (const auto& [p, e] : factorize(sp.d)) CHECK(e == 1u);
  }
}

TEST_CASE("XSequence under concurrent readers") {
  XSequence seq(fundamental_solution(30));
  std::vector<BigInt> got(8);
  std::vector<std::thread> pool;
  for (int t = 0; t < 8; ++t) {
    pool.emplace_back([&, t] {
      for (long l = 0; l <= 60; ++l) got[t] = seq.at(60 - (l + t) % 61);
      got[t] = seq.at(60);
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& g : got) CHECK(g == x_value(fundamental_solution(30), 60));
  CHECK(seq.at(2) == 241);
}
