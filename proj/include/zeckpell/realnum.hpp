#pragma once

// Certified arbitrary-precision real arithmetic.
//
// RealInterval is a closed interval with MPFR endpoints; every operation rounds
// its lower endpoint down and its upper endpoint up, so the exact result of the
// operation on any points of the operands lies in the returned interval.
// ConstExpr is an immutable expression tree over a closed grammar (integers,
// rationals, the golden ratio, field operations, integer powers, square roots,
// natural logarithms and absolute value). eval() turns it into an enclosure.

#include <gmpxx.h>
#include <mpfr.h>

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "zeckpell/errors.hpp"

namespace zeckpell {

using BigInt = mpz_class;
using BigRational = mpq_class;

inline constexpr long kDefaultStartPrecision = 128;
inline constexpr long kDefaultPrecisionCap = 1048576;

// RAII wrapper over mpfr_t. Copies keep the source precision.
class BigFloat {
 public:
  explicit BigFloat(long precision_bits = 64);
  BigFloat(const BigFloat& other);
  BigFloat(BigFloat&& other) noexcept;
  BigFloat& operator=(const BigFloat& other);
  BigFloat& operator=(BigFloat&& other) noexcept;
  ~BigFloat();

  static BigFloat from_int(const BigInt& v, long precision_bits, mpfr_rnd_t rnd);
  static BigFloat from_rational(const BigRational& v, long precision_bits, mpfr_rnd_t rnd);
  static BigFloat from_double(double v, long precision_bits);

  long precision() const { return static_cast<long>(mpfr_get_prec(v_)); }
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }

  // Exact value as a rational (endpoints are dyadic rationals).
  BigRational to_rational() const;
  // floor / ceil as exact integers.
  BigInt floor_int() const;
  BigInt ceil_int() const;
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  // log10(|x|) estimate; used for display only.
  double log10_abs() const;
  std::string to_string(int digits = 20) const;

  friend int cmp(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_); }
  friend bool operator<(const BigFloat& a, const BigFloat& b) { return cmp(a, b) < 0; }
  friend bool operator>(const BigFloat& a, const BigFloat& b) { return cmp(a, b) > 0; }
  friend bool operator<=(const BigFloat& a, const BigFloat& b) { return cmp(a, b) <= 0; }
  friend bool operator>=(const BigFloat& a, const BigFloat& b) { return cmp(a, b) >= 0; }
  friend bool operator==(const BigFloat& a, const BigFloat& b) { return cmp(a, b) == 0; }

 private:
  mpfr_t v_;
};

class RealInterval {
 public:
  RealInterval(BigFloat lo, BigFloat hi, long precision_bits);

  static RealInterval point(const BigInt& v, long precision_bits);
  static RealInterval point(const BigRational& v, long precision_bits);

  const BigFloat& lo() const { return lo_; }
  const BigFloat& hi() const { return hi_; }
  long precision_bits() const { return precision_; }

  bool contains(const BigRational& v) const;
  bool contains_zero() const { return lo_.sign() <= 0 && hi_.sign() >= 0; }
  bool certainly_positive() const { return lo_.sign() > 0; }
  bool certainly_negative() const { return hi_.sign() < 0; }
  bool is_subset_of(const RealInterval& other) const;
  bool overlaps(const RealInterval& other) const;

  // hi - lo, rounded up.
  BigFloat width() const;
  // max(|lo|, |hi|), exact.
  BigFloat magnitude() const;
  BigFloat midpoint() const;

  // Integer part when it is the same for every point of the interval.
  std::optional<BigInt> certain_floor() const;
  // Nearest integer (ties to even) when it is the same for every point.
  std::optional<BigInt> certain_round() const;

  std::string to_string(int digits = 20) const;

  friend RealInterval operator+(const RealInterval& a, const RealInterval& b);
  friend RealInterval operator-(const RealInterval& a, const RealInterval& b);
  friend RealInterval operator*(const RealInterval& a, const RealInterval& b);
  // Throws PrecisionInsufficient when the divisor contains zero.
  friend RealInterval operator/(const RealInterval& a, const RealInterval& b);
  friend RealInterval operator-(const RealInterval& a);

 private:
  BigFloat lo_;
  BigFloat hi_;
  long precision_;
};

RealInterval abs(const RealInterval& x);
// Throws PrecisionInsufficient if x straddles 0, DomainError if x < 0.
RealInterval sqrt(const RealInterval& x);
// Throws PrecisionInsufficient if x straddles 0, NonPositiveLogArgument if x <= 0.
RealInterval log(const RealInterval& x);
RealInterval pow(const RealInterval& x, long k);
RealInterval intersect(const RealInterval& a, const RealInterval& b);
// Interval hull of both.
RealInterval hull(const RealInterval& a, const RealInterval& b);

// Exact element a + b*sqrt(r) of a real quadratic field (r squarefree, r = 1
// means the value is the rational a + b).
struct QuadraticValue {
  BigRational a;
  BigRational b;
  BigInt r{1};

  int sign() const;
  bool operator==(const QuadraticValue& o) const;
};

class ConstExpr {
 public:
  enum class Kind { Integer, Rational, Alpha, Add, Sub, Mul, Div, Neg, Abs, Sqrt, Log, Pow };

  ConstExpr();  // the integer 0
  ConstExpr(long v);  // NOLINT(google-explicit-constructor)
  ConstExpr(const BigInt& v);  // NOLINT(google-explicit-constructor)
  ConstExpr(const BigRational& v);  // NOLINT(google-explicit-constructor)

  static ConstExpr integer(const BigInt& v);
  static ConstExpr rational(const BigRational& v);
  // Exact decimal literal, e.g. "7.2e150" or "-0.16".
  static ConstExpr decimal(std::string_view text);
  // Golden ratio (1 + sqrt 5) / 2.
  static ConstExpr alpha();
  // Parses the prefix text form produced by to_prefix(), e.g.
  // "(div (log (div (sqrt 5) 2)) (log alpha))".
  static ConstExpr parse(std::string_view text);

  Kind kind() const;
  const std::vector<ConstExpr>& children() const;
  const BigRational& literal() const;  // Integer / Rational
  long exponent() const;               // Pow

  std::string to_prefix() const;
  // Stable 64-bit FNV-1a hash of to_prefix().
  std::uint64_t canonical_hash() const;

  friend ConstExpr operator+(const ConstExpr& a, const ConstExpr& b);
  friend ConstExpr operator-(const ConstExpr& a, const ConstExpr& b);
  friend ConstExpr operator*(const ConstExpr& a, const ConstExpr& b);
  friend ConstExpr operator/(const ConstExpr& a, const ConstExpr& b);
  friend ConstExpr operator-(const ConstExpr& a);
  friend ConstExpr sqrt(const ConstExpr& a);
  friend ConstExpr log(const ConstExpr& a);
  friend ConstExpr abs(const ConstExpr& a);
  friend ConstExpr pow(const ConstExpr& a, long k);

  struct Node;

 private:
  explicit ConstExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static ConstExpr make(Kind kind, std::vector<ConstExpr> children, long exponent = 0);

  std::shared_ptr<const Node> node_;
};

// Enclosure of expr whose width is at most 2^(3 - precision_bits) * max(1, |value|).
// Results at p and 2p bits are nested. Throws NonPositiveLogArgument,
// DomainError or PrecisionExhausted.
RealInterval eval(const ConstExpr& expr, long precision_bits);

// Exact value when expr reduces to a single real quadratic field element.
std::optional<QuadraticValue> exact_value(const ConstExpr& expr);

enum class Ordering { Less, Greater, Equal, Undecided };
const char* to_string(Ordering o);

// Less/Greater only when enclosures separate at some precision up to the cap;
// Equal only when both sides reduce to identical exact quadratic values.
Ordering compare_certified(const ConstExpr& a, const ConstExpr& b,
                           long max_precision_bits = kDefaultPrecisionCap);

// Largest working precision used by eval() since the last reset.
long precision_high_water();
void reset_precision_high_water();

}  // namespace zeckpell
