#include <doctest.h>

#include <random>

#include "zeckpell/realnum.hpp"

using namespace zeckpell;

namespace {

BigRational rat(const char* s) { return BigRational(s); }

// Random tree over the grammar; sqrt/log/div only see arguments kept away from 0.
ConstExpr random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
  std::uniform_int_distribution<long> small(-50, 50);
  auto positive = [&](const ConstExpr& e) { return abs(e) + ConstExpr(BigRational(1, 3)); };
  switch (pick(rng)) {
    case 0: return ConstExpr(small(rng));
    case 1: return ConstExpr(BigRational(small(rng), 1 + std::abs(small(rng))));
    case 2: return ConstExpr::alpha();
    case 3: return random_tree(rng, depth - 1) + random_tree(rng, depth - 1);
    case 4: return random_tree(rng, depth - 1) - random_tree(rng, depth - 1);
    case 5: return random_tree(rng, depth - 1) * random_tree(rng, depth - 1);
    case 6: return random_tree(rng, depth - 1) / positive(random_tree(rng, depth - 1));
    case 7: return sqrt(positive(random_tree(rng, depth - 1)));
    case 8: return log(positive(random_tree(rng, depth - 1)));
    default: return pow(random_tree(rng, depth - 1), static_cast<long>(rng() % 4));
  }
}

}  // namespace

TEST_CASE("sqrt 2 enclosure squares around 2") {
  RealInterval r = eval(sqrt(ConstExpr(2)), 64);
  CHECK(r.contains(rat("141421356/100000000")) == false);  // 1.41421356 < sqrt 2
  CHECK(r.lo() > BigFloat::from_rational(rat("141421356/100000000"), 64, MPFR_RNDN));
  CHECK(r.hi() < BigFloat::from_rational(rat("141421357/100000000"), 64, MPFR_RNDN));
  RealInterval sq = r * r;
  CHECK(sq.contains(BigRational(2)));
}

TEST_CASE("alpha, 2 + sqrt 3 enclosures") {
  RealInterval a = eval(ConstExpr::alpha(), 64);
  CHECK(a.lo() > BigFloat::from_double(1.61803398, 64));
  CHECK(a.hi() < BigFloat::from_double(1.61803399, 64));
  // alpha^2 - alpha - 1 contains 0 at every precision
  for (long p : {64L, 128L, 1000L}) {
    RealInterval x = eval(ConstExpr::alpha(), p);
    CHECK((x * x - x - RealInterval::point(BigInt(1), p)).contains_zero());
  }
  RealInterval d = eval(ConstExpr(2) + sqrt(ConstExpr(3)), 64);
  CHECK(d.lo() > BigFloat::from_double(3.7320508, 64));
  CHECK(d.hi() < BigFloat::from_double(3.7320509, 64));
}

TEST_CASE("width bound holds") {
  ConstExpr e = log(ConstExpr::alpha()) * ConstExpr(BigInt("1000000000000"));
  for (long p : {64L, 256L, 2048L}) {
    RealInterval r = eval(e, p);
    // width <= 2^(3-p) max(1,|v|) with |v| < 2^40
    BigFloat bound(p + 64);
    mpfr_set_ui_2exp(bound.get(), 1, 3 - p + 40, MPFR_RNDU);
    CHECK(r.width() <= bound);
  }
}

TEST_CASE("log of a non-positive argument") {
  CHECK_THROWS_AS(eval(log(ConstExpr(-3)), 64), NonPositiveLogArgument);
  CHECK_THROWS_AS(eval(log(ConstExpr::alpha() - ConstExpr::alpha()), 64), NonPositiveLogArgument);
  CHECK_THROWS_AS(eval(sqrt(ConstExpr(-1)), 64), DomainError);
}

TEST_CASE("certified comparisons") {
  ConstExpr a = ConstExpr::alpha();
  CHECK(compare_certified(pow(a, 2), a + ConstExpr(1)) == Ordering::Equal);
  CHECK(compare_certified(log(sqrt(ConstExpr(5)) / ConstExpr(2)), ConstExpr(0)) == Ordering::Greater);
  CHECK(compare_certified(ConstExpr(2) + sqrt(ConstExpr(3)), pow(a, 2)) == Ordering::Greater);
  CHECK(compare_certified(pow(a, 2), ConstExpr(2) + sqrt(ConstExpr(3))) == Ordering::Less);
  // (1 + sqrt 2)^3 = 7 + 5 sqrt 2
  CHECK(compare_certified(pow(ConstExpr(1) + sqrt(ConstExpr(2)), 3), ConstExpr(7) + ConstExpr(5) * sqrt(ConstExpr(2))) ==
        Ordering::Equal);
  // equal values the exact layer cannot see stay undecided
  CHECK(compare_certified(log(ConstExpr(6)), log(ConstExpr(2)) + log(ConstExpr(3)), 512) == Ordering::Undecided);
}

TEST_CASE("exact quadratic values") {
  auto v = exact_value(pow(ConstExpr::alpha(), 5));
  REQUIRE(v);
  // alpha^5 = (11 + 5 sqrt 5) / 2
  CHECK(v->a == BigRational(11, 2));
  CHECK(v->b == BigRational(5, 2));
  CHECK(v->r == 5);
  CHECK(!exact_value(log(ConstExpr(2))));
}

TEST_CASE("decimal literals and prefix round-trip") {
  CHECK(ConstExpr::decimal("7.2e150").literal() == BigRational(BigInt("72") * BigInt("1" + std::string(149, '0'))));
  CHECK(ConstExpr::decimal("-0.16").literal() == BigRational(-4, 25));
  ConstExpr e = log(sqrt(ConstExpr(5)) / ConstExpr(2)) / log(ConstExpr::alpha());
  std::string text = e.to_prefix();
  CHECK(text == "(div (log (div (sqrt 5) 2)) (log alpha))");
  ConstExpr back = ConstExpr::parse(text);
  CHECK(back.to_prefix() == text);
  CHECK(back.canonical_hash() == e.canonical_hash());
  CHECK_THROWS_AS(ConstExpr::parse("(log"), ParseError);
  CHECK_THROWS_AS(ConstExpr::parse("(frob 2)"), ParseError);
}

TEST_CASE("certain floor and round") {
  RealInterval x = eval(ConstExpr(BigRational(7, 2)), 64);
  CHECK(x.certain_floor() == BigInt(3));
  CHECK(x.certain_round() == BigInt(4));  // ties to even
  RealInterval y = eval(ConstExpr(BigRational(5, 2)), 64);
  CHECK(y.certain_round() == BigInt(2));
  RealInterval z = eval(sqrt(ConstExpr(2)) * ConstExpr(1000), 64);
  CHECK(z.certain_floor() == BigInt(1414));
}

TEST_CASE("property: nested enclosures on random trees") {
  std::mt19937_64 rng(20261017);
  int evaluated = 0;
  for (int i = 0; i < 1000; ++i) {
    ConstExpr e = random_tree(rng, 4);
    long p = 64 + static_cast<long>(rng() % 200);
    try {
      RealInterval lo = eval(e, p);
      RealInterval hi = eval(e, 2 * p);
      CHECK_MESSAGE(hi.is_subset_of(lo), e.to_prefix());
      CHECK(hi.width() <= lo.width());
      ++evaluated;
    } catch (const PrecisionExhausted&) {
      // an exact 0 under a log/sqrt guard cannot happen; cancellation to a
      // huge exponent can, and is allowed to give up
    }
  }
  CHECK(evaluated > 990);
}

TEST_CASE("property: comparisons agree with deeper evaluation") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 300; ++i) {
    ConstExpr a = random_tree(rng, 3), b = random_tree(rng, 3);
    Ordering o;
    try {
      o = compare_certified(a, b, 2048);
    } catch (const Error&) {
      continue;
    }
    if (o == Ordering::Undecided) continue;
    RealInterval x = eval(a, 8192), y = eval(b, 8192);
    if (o == Ordering::Less) CHECK(!(x.lo() > y.hi()));
    if (o == Ordering::Greater) CHECK(!(x.hi() < y.lo()));
    if (o == Ordering::Equal) CHECK(x.overlaps(y));
  }
}
