#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "zeckpell/sequences.hpp"

using namespace zeckpell;

TEST_CASE("fibonacci and lucas values") {
  CHECK(fib(0) == 0);
  CHECK(fib(1) == 1);
  CHECK(fib(6) == 8);
  CHECK(fib(21) == 10946);
  CHECK(lucas(0) == 2);
  CHECK(lucas(9) == 76);
  CHECK(fib(100) == BigInt("354224848179261915075"));
  CHECK(fib_index(BigInt(1)) == 1L);
  CHECK(fib_index(BigInt(10946)) == 21L);
  CHECK(!fib_index(BigInt(4)));
}

TEST_CASE("zeckendorf examples") {
  CHECK(zeckendorf_encode(10951).indices == std::vector<long>{5, 21});
  CHECK(zeckendorf_encode(38).indices == std::vector<long>{2, 4, 9});
  CHECK(zeckendorf_encode(38).terms() == 3);
  CHECK(zeckendorf_encode(0).indices.empty());
  CHECK(zeckendorf_decode({}) == 0);
}

TEST_CASE("two-term representations") {
  CHECK(two_term_reps(7, GapPolicy::StrictGap2) == std::vector<TwoTermSum>{{3, 5}});
  auto r26 = two_term_reps(26, GapPolicy::Relaxed);
  CHECK(std::find(r26.begin(), r26.end(), TwoTermSum{7, 7}) != r26.end());
  CHECK(std::find(r26.begin(), r26.end(), TwoTermSum{5, 8}) != r26.end());
  CHECK(two_term_reps(4, GapPolicy::StrictGap2) == std::vector<TwoTermSum>{{2, 4}});
  // 2 = F_0 + F_3 only with zero allowed
  auto with0 = two_term_reps(2, GapPolicy::Relaxed, true);
  auto without0 = two_term_reps(2, GapPolicy::Relaxed, false);
  CHECK(std::find(with0.begin(), with0.end(), TwoTermSum{0, 3}) != with0.end());
  CHECK(std::find(without0.begin(), without0.end(), TwoTermSum{0, 3}) == without0.end());
  CHECK(two_term_reps(38, GapPolicy::Relaxed).empty());
}

TEST_CASE("two-term representations agree with brute force") {
  std::map<BigInt, std::vector<TwoTermSum>> brute;
  for (long m = 0; m <= 25; ++m)
    for (long n = m; n <= 25; ++n) brute[fib(m) + fib(n)].push_back({m, n});
  for (long v = 1; v <= 5000; ++v) {
    auto it = brute.find(BigInt(v));
    std::vector<TwoTermSum> expect = it == brute.end() ? std::vector<TwoTermSum>{} : it->second;
    std::sort(expect.begin(), expect.end());
    CHECK_MESSAGE(two_term_reps(BigInt(v), GapPolicy::Relaxed, true) == expect, v);
    std::vector<TwoTermSum> strict;
    for (const auto& t : expect)
      if (t.m >= 2 && t.n - t.m >= 2) strict.push_back(t);
    CHECK_MESSAGE(two_term_reps(BigInt(v), GapPolicy::StrictGap2) == strict, v);
  }
}

TEST_CASE("identity checks at small n") {
  CHECK(lucas_half_identity_check(3) == 0);
  CHECK(lucas_half_identity_check(6) == 0);
  CHECK(lucas_half_identity_check(9) == 0);
  CHECK_THROWS_AS(lucas_half_identity_check(4), DomainError);
  CHECK(parity_identity_check(3) == -4);
  CHECK(parity_identity_check(4) == 4);
  CHECK(parity_identity_check(50) == 4);
  CHECK(norm_one_plus_alpha_pow(1) == 1);
  CHECK(norm_one_plus_alpha_pow(2) == 5);
  CHECK(norm_one_plus_alpha_pow(8) == 49);
}

TEST_CASE("property: parity identity for 3 <= n <= 200") {
  for (long n = 3; n <= 200; ++n) CHECK(parity_identity_check(n) == (n % 2 == 0 ? 4 : -4));
}

TEST_CASE("property: lucas half identity for 3 | n <= 300") {
  for (long n = 3; n <= 300; n += 3) CHECK(lucas_half_identity_check(n) == 0);
}

TEST_CASE("property: norm of 1 + alpha^k against 1 + (-1)^k + L_k") {
  for (long k = 1; k <= 200; ++k) {
    BigInt expansion = 1 + (k % 2 == 0 ? 1 : -1) + lucas(k);
    CHECK_MESSAGE(norm_one_plus_alpha_pow(k) == expansion, k);
  }
}

TEST_CASE("property: zeckendorf round trip up to 10^6") {
  for (long v = 0; v <= 1000000; ++v) {
    ZeckendorfRep z = zeckendorf_encode(v);
    bool ok = zeckendorf_decode(z) == v;
    for (std::size_t i = 0; i < z.indices.size(); ++i) {
      ok = ok && z.indices[i] >= 2;
      if (i > 0) ok = ok && z.indices[i] - z.indices[i - 1] >= 2;
    }
    if (!ok) {
      FAIL("round trip failed at " << v);
      break;
    }
  }
}

TEST_CASE("property: zeckendorf uniqueness up to 10^4") {
  // every subset of non-consecutive indices in [2, 20] gives a distinct value
  // and that value encodes back to the same subset
  std::set<BigInt> seen;
  long count = 0;
  std::vector<long> idx;
  std::function<void(long)> walk = [&](long from) {
    BigInt v = 0;
    for (long i : idx) v += fib(i);
    if (v <= 10000) {
      CHECK(seen.insert(v).second);
      CHECK(zeckendorf_encode(v).indices == idx);
      ++count;
    }
    for (long i = from; i <= 20; ++i) {
      idx.push_back(i);
      walk(i + 2);
      idx.pop_back();
    }
  };
  walk(2);
  CHECK(seen.size() == static_cast<std::size_t>(count));
  CHECK(seen.size() == 10001);  // every value 0..10^4
}

TEST_CASE("property: binet residual and growth") {
  ConstExpr a = ConstExpr::alpha();
  ConstExpr b = ConstExpr(1) - a;
  ConstExpr s5 = sqrt(ConstExpr(5));
  for (long k = 1; k <= 500; k += (k < 60 ? 1 : 37)) {
    RealInterval r = eval((pow(a, k) - pow(b, k)) / s5 - ConstExpr(fib(k)), 512);
    CHECK(r.contains_zero());
    Ordering lo = compare_certified(k >= 2 ? pow(a, k - 2) : ConstExpr(1) / a, ConstExpr(fib(k)));
    Ordering hi = compare_certified(ConstExpr(fib(k)), pow(a, k - 1));
    CHECK(lo != Ordering::Greater);
    CHECK(lo != Ordering::Undecided);
    CHECK(hi != Ordering::Greater);
    CHECK(hi != Ordering::Undecided);
  }
}
