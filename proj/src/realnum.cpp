#include "zeckpell/realnum.hpp"

#include <algorithm>
#include <map>
#include <cctype>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace zeckpell {

// ---------------------------------------------------------------------------
// BigFloat

BigFloat::BigFloat(long precision_bits) {
  mpfr_init2(v_, std::max<long>(precision_bits, MPFR_PREC_MIN));
  mpfr_set_zero(v_, 1);
}

BigFloat::BigFloat(const BigFloat& other) {
  mpfr_init2(v_, mpfr_get_prec(other.v_));
  mpfr_set(v_, other.v_, MPFR_RNDN);  // same precision: exact
}

BigFloat::BigFloat(BigFloat&& other) noexcept {
  mpfr_init2(v_, MPFR_PREC_MIN);
  mpfr_swap(v_, other.v_);
}

BigFloat& BigFloat::operator=(const BigFloat& other) {
  if (this != &other) {
    mpfr_set_prec(v_, mpfr_get_prec(other.v_));
    mpfr_set(v_, other.v_, MPFR_RNDN);
  }
  return *this;
}

BigFloat& BigFloat::operator=(BigFloat&& other) noexcept {
  mpfr_swap(v_, other.v_);
  return *this;
}

BigFloat::~BigFloat() { mpfr_clear(v_); }

BigFloat BigFloat::from_int(const BigInt& v, long precision_bits, mpfr_rnd_t rnd) {
  BigFloat r(precision_bits);
  mpfr_set_z(r.v_, v.get_mpz_t(), rnd);
  return r;
}

BigFloat BigFloat::from_rational(const BigRational& v, long precision_bits, mpfr_rnd_t rnd) {
  BigFloat r(precision_bits);
  mpfr_set_q(r.v_, v.get_mpq_t(), rnd);
  return r;
}

BigFloat BigFloat::from_double(double v, long precision_bits) {
  BigFloat r(std::max<long>(precision_bits, 53));
  mpfr_set_d(r.v_, v, MPFR_RNDN);
  return r;
}

BigRational BigFloat::to_rational() const {
  BigRational q;
  mpfr_get_q(q.get_mpq_t(), v_);
  return q;
}

BigInt BigFloat::floor_int() const {
  BigInt z;
  mpfr_get_z(z.get_mpz_t(), v_, MPFR_RNDD);
  return z;
}

BigInt BigFloat::ceil_int() const {
  BigInt z;
  mpfr_get_z(z.get_mpz_t(), v_, MPFR_RNDU);
  return z;
}

double BigFloat::log10_abs() const {
  if (is_zero()) return -HUGE_VAL;
  long e = 0;
  double d = mpfr_get_d_2exp(&e, v_, MPFR_RNDN);
  return std::log10(std::fabs(d)) + static_cast<double>(e) * std::log10(2.0);
}

std::string BigFloat::to_string(int digits) const {
  char* buf = nullptr;
  mpfr_asprintf(&buf, "%.*Re", std::max(digits - 1, 0), v_);
  std::string s(buf);
  mpfr_free_str(buf);
  return s;
}

// ---------------------------------------------------------------------------
// RealInterval

namespace {

BigFloat fresh(long prec) { return BigFloat(prec); }

}  // namespace

RealInterval::RealInterval(BigFloat lo, BigFloat hi, long precision_bits)
    : lo_(std::move(lo)), hi_(std::move(hi)), precision_(precision_bits) {
  if (!(lo_ <= hi_)) throw std::logic_error("RealInterval: lo > hi");
}

RealInterval RealInterval::point(const BigInt& v, long precision_bits) {
  return RealInterval(BigFloat::from_int(v, precision_bits, MPFR_RNDD),
                      BigFloat::from_int(v, precision_bits, MPFR_RNDU), precision_bits);
}

RealInterval RealInterval::point(const BigRational& v, long precision_bits) {
  return RealInterval(BigFloat::from_rational(v, precision_bits, MPFR_RNDD),
                      BigFloat::from_rational(v, precision_bits, MPFR_RNDU), precision_bits);
}

bool RealInterval::contains(const BigRational& v) const {
  return mpfr_cmp_q(lo_.get(), v.get_mpq_t()) <= 0 && mpfr_cmp_q(hi_.get(), v.get_mpq_t()) >= 0;
}

bool RealInterval::is_subset_of(const RealInterval& other) const {
  return other.lo_ <= lo_ && hi_ <= other.hi_;
}

bool RealInterval::overlaps(const RealInterval& other) const {
  return lo_ <= other.hi_ && other.lo_ <= hi_;
}

BigFloat RealInterval::width() const {
  BigFloat w(precision_ + 2);
  mpfr_sub(w.get(), hi_.get(), lo_.get(), MPFR_RNDU);
  return w;
}

BigFloat RealInterval::magnitude() const {
  BigFloat a(lo_), b(hi_);
  mpfr_abs(a.get(), a.get(), MPFR_RNDN);
  mpfr_abs(b.get(), b.get(), MPFR_RNDN);
  return a < b ? b : a;
}

BigFloat RealInterval::midpoint() const {
  BigFloat m(precision_ + 1);
  mpfr_add(m.get(), lo_.get(), hi_.get(), MPFR_RNDN);
  mpfr_div_2ui(m.get(), m.get(), 1, MPFR_RNDN);
  return m;
}

std::optional<BigInt> RealInterval::certain_floor() const {
  BigInt a = lo_.floor_int();
  BigInt b = hi_.floor_int();
  if (a == b) return a;
  return std::nullopt;
}

std::optional<BigInt> RealInterval::certain_round() const {
  auto nearest = [](const BigFloat& x) {
    BigFloat r(x.precision());
    mpfr_rint_roundeven(r.get(), x.get(), MPFR_RNDN);
    BigInt z;
    mpfr_get_z(z.get_mpz_t(), r.get(), MPFR_RNDN);
    return z;
  };
  BigInt a = nearest(lo_);
  BigInt b = nearest(hi_);
  if (a == b) return a;
  return std::nullopt;
}

std::string RealInterval::to_string(int digits) const {
  return "[" + lo_.to_string(digits) + ", " + hi_.to_string(digits) + "]";
}

RealInterval operator+(const RealInterval& a, const RealInterval& b) {
  long p = std::max(a.precision_, b.precision_);
  BigFloat lo = fresh(p), hi = fresh(p);
  mpfr_add(lo.get(), a.lo_.get(), b.lo_.get(), MPFR_RNDD);
  mpfr_add(hi.get(), a.hi_.get(), b.hi_.get(), MPFR_RNDU);
  return RealInterval(std::move(lo), std::move(hi), p);
}

RealInterval operator-(const RealInterval& a, const RealInterval& b) {
  long p = std::max(a.precision_, b.precision_);
  BigFloat lo = fresh(p), hi = fresh(p);
  mpfr_sub(lo.get(), a.lo_.get(), b.hi_.get(), MPFR_RNDD);
  mpfr_sub(hi.get(), a.hi_.get(), b.lo_.get(), MPFR_RNDU);
  return RealInterval(std::move(lo), std::move(hi), p);
}

RealInterval operator-(const RealInterval& a) {
  BigFloat lo(a.hi_), hi(a.lo_);
  mpfr_neg(lo.get(), lo.get(), MPFR_RNDN);
  mpfr_neg(hi.get(), hi.get(), MPFR_RNDN);
  return RealInterval(std::move(lo), std::move(hi), a.precision_);
}

namespace {

using BinaryOp = int (*)(mpfr_ptr, mpfr_srcptr, mpfr_srcptr, mpfr_rnd_t);

RealInterval corner_hull(const RealInterval& a, const RealInterval& b, BinaryOp op, long p) {
  const BigFloat* xs[2] = {&a.lo(), &a.hi()};
  const BigFloat* ys[2] = {&b.lo(), &b.hi()};
  BigFloat lo = fresh(p), hi = fresh(p), t = fresh(p);
  bool first = true;
  for (const BigFloat* x : xs) {
    for (const BigFloat* y : ys) {
      op(t.get(), x->get(), y->get(), MPFR_RNDD);
      if (first || t < lo) lo = t;
      op(t.get(), x->get(), y->get(), MPFR_RNDU);
      if (first || t > hi) hi = t;
      first = false;
    }
  }
  return RealInterval(std::move(lo), std::move(hi), p);
}

}  // namespace

RealInterval operator*(const RealInterval& a, const RealInterval& b) {
  return corner_hull(a, b, mpfr_mul, std::max(a.precision_, b.precision_));
}

RealInterval operator/(const RealInterval& a, const RealInterval& b) {
  if (b.contains_zero()) throw PrecisionInsufficient("division by an interval containing zero");
  return corner_hull(a, b, mpfr_div, std::max(a.precision_, b.precision_));
}

RealInterval abs(const RealInterval& x) {
  if (x.lo().sign() >= 0) return x;
  if (x.hi().sign() <= 0) return -x;
  BigFloat lo(x.precision_bits());
  return RealInterval(std::move(lo), x.magnitude(), x.precision_bits());
}

RealInterval sqrt(const RealInterval& x) {
  long p = x.precision_bits();
  if (x.hi().sign() < 0) throw DomainError("sqrt of a negative number");
  // An enclosure dipping below zero is clamped: the argument is non-negative
  // by the grammar's contract.
  BigFloat lo = fresh(p), hi = fresh(p);
  if (x.lo().sign() > 0) mpfr_sqrt(lo.get(), x.lo().get(), MPFR_RNDD);
  mpfr_sqrt(hi.get(), x.hi().get(), MPFR_RNDU);
  return RealInterval(std::move(lo), std::move(hi), p);
}

RealInterval log(const RealInterval& x) {
  if (x.hi().sign() <= 0) throw NonPositiveLogArgument("log of a non-positive number");
  if (x.lo().sign() <= 0) throw PrecisionInsufficient("log argument not certifiably positive");
  long p = x.precision_bits();
  BigFloat lo = fresh(p), hi = fresh(p);
  mpfr_log(lo.get(), x.lo().get(), MPFR_RNDD);
  mpfr_log(hi.get(), x.hi().get(), MPFR_RNDU);
  return RealInterval(std::move(lo), std::move(hi), p);
}

RealInterval pow(const RealInterval& x, long k) {
  long p = x.precision_bits();
  if (k == 0) return RealInterval::point(BigInt(1), p);
  if (k < 0) {
    if (x.contains_zero()) throw PrecisionInsufficient("negative power of an interval containing zero");
    return RealInterval::point(BigInt(1), p) / pow(x, -k);
  }
  BigFloat lo = fresh(p), hi = fresh(p);
  bool even = (k % 2) == 0;
  if (!even || x.lo().sign() >= 0) {
    mpfr_pow_si(lo.get(), x.lo().get(), k, MPFR_RNDD);
    mpfr_pow_si(hi.get(), x.hi().get(), k, MPFR_RNDU);
  } else if (x.hi().sign() <= 0) {
    mpfr_pow_si(lo.get(), x.hi().get(), k, MPFR_RNDD);
    mpfr_pow_si(hi.get(), x.lo().get(), k, MPFR_RNDU);
  } else {
    BigFloat m = x.magnitude();
    mpfr_pow_si(hi.get(), m.get(), k, MPFR_RNDU);
  }
  return RealInterval(std::move(lo), std::move(hi), p);
}

RealInterval intersect(const RealInterval& a, const RealInterval& b) {
  long p = std::max(a.precision_bits(), b.precision_bits());
  const BigFloat& lo = a.lo() < b.lo() ? b.lo() : a.lo();
  const BigFloat& hi = a.hi() < b.hi() ? a.hi() : b.hi();
  if (hi < lo) throw std::logic_error("intersect: disjoint enclosures of one value");
  return RealInterval(lo, hi, p);
}

RealInterval hull(const RealInterval& a, const RealInterval& b) {
  long p = std::max(a.precision_bits(), b.precision_bits());
  const BigFloat& lo = a.lo() < b.lo() ? a.lo() : b.lo();
  const BigFloat& hi = a.hi() < b.hi() ? b.hi() : a.hi();
  return RealInterval(lo, hi, p);
}

// ---------------------------------------------------------------------------
// QuadraticValue

int QuadraticValue::sign() const {
  if (r == 1) return sgn(BigRational(a + b));
  int sa = sgn(a), sb = sgn(b);
  if (sa == 0) return sb;
  if (sb == 0 || sa == sb) return sa;
  BigRational lhs = a * a;
  BigRational rhs = b * b * BigRational(r);
  return lhs > rhs ? sa : sb;
}

bool QuadraticValue::operator==(const QuadraticValue& o) const {
  auto norm = [](const QuadraticValue& v) {
    return v.r == 1 ? QuadraticValue{v.a + v.b, 0, 1} : v;
  };
  QuadraticValue x = norm(*this), y = norm(o);
  if (x.b == 0 && y.b == 0) return x.a == y.a;
  return x.r == y.r && x.a == y.a && x.b == y.b;
}

// ---------------------------------------------------------------------------
// ConstExpr

struct ConstExpr::Node {
  Kind kind;
  std::vector<ConstExpr> children;
  BigRational literal;
  long exponent = 0;
};

ConstExpr ConstExpr::make(Kind kind, std::vector<ConstExpr> children, long exponent) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->children = std::move(children);
  n->exponent = exponent;
  return ConstExpr(std::shared_ptr<const Node>(std::move(n)));
}

ConstExpr::ConstExpr() : ConstExpr(BigRational(0)) {}
ConstExpr::ConstExpr(long v) : ConstExpr(BigRational(v)) {}
ConstExpr::ConstExpr(const BigInt& v) : ConstExpr(BigRational(v)) {}

ConstExpr::ConstExpr(const BigRational& v) {
  auto n = std::make_shared<Node>();
  n->literal = v;
  n->literal.canonicalize();
  n->kind = n->literal.get_den() == 1 ? Kind::Integer : Kind::Rational;
  node_ = std::move(n);
}

ConstExpr ConstExpr::integer(const BigInt& v) { return ConstExpr(v); }
ConstExpr ConstExpr::rational(const BigRational& v) { return ConstExpr(v); }

ConstExpr ConstExpr::decimal(std::string_view text) {
  std::string s(text);
  size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
  std::string digits;
  long scale = 0;
  bool seen_point = false, seen_digit = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) --scale;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw ParseError("bad decimal literal: " + s);
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') throw ParseError("bad decimal literal: " + s);
    ++i;
    std::string ex = s.substr(i);
    if (ex.empty()) throw ParseError("bad decimal literal: " + s);
    size_t used = 0;
    long e = 0;
    try {
      e = std::stol(ex, &used);
    } catch (const std::exception&) {
      throw ParseError("bad decimal exponent: " + s);
    }
    if (used != ex.size()) throw ParseError("bad decimal exponent: " + s);
    scale += e;
  }
  BigInt mant(digits, 10);
  if (neg) mant = -mant;
  BigInt ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
  BigRational v = scale >= 0 ? BigRational(mant * ten_pow) : BigRational(mant, ten_pow);
  v.canonicalize();
  return ConstExpr(v);
}

ConstExpr ConstExpr::alpha() { return make(Kind::Alpha, {}); }

ConstExpr::Kind ConstExpr::kind() const { return node_->kind; }
const std::vector<ConstExpr>& ConstExpr::children() const { return node_->children; }
const BigRational& ConstExpr::literal() const { return node_->literal; }
long ConstExpr::exponent() const { return node_->exponent; }

ConstExpr operator+(const ConstExpr& a, const ConstExpr& b) { return ConstExpr::make(ConstExpr::Kind::Add, {a, b}); }
ConstExpr operator-(const ConstExpr& a, const ConstExpr& b) { return ConstExpr::make(ConstExpr::Kind::Sub, {a, b}); }
ConstExpr operator*(const ConstExpr& a, const ConstExpr& b) { return ConstExpr::make(ConstExpr::Kind::Mul, {a, b}); }
ConstExpr operator/(const ConstExpr& a, const ConstExpr& b) { return ConstExpr::make(ConstExpr::Kind::Div, {a, b}); }
ConstExpr operator-(const ConstExpr& a) { return ConstExpr::make(ConstExpr::Kind::Neg, {a}); }
ConstExpr sqrt(const ConstExpr& a) { return ConstExpr::make(ConstExpr::Kind::Sqrt, {a}); }
ConstExpr log(const ConstExpr& a) { return ConstExpr::make(ConstExpr::Kind::Log, {a}); }
ConstExpr abs(const ConstExpr& a) { return ConstExpr::make(ConstExpr::Kind::Abs, {a}); }
ConstExpr pow(const ConstExpr& a, long k) { return ConstExpr::make(ConstExpr::Kind::Pow, {a}, k); }

namespace {

const char* op_name(ConstExpr::Kind k) {
  switch (k) {
    case ConstExpr::Kind::Add: return "add";
    case ConstExpr::Kind::Sub: return "sub";
    case ConstExpr::Kind::Mul: return "mul";
    case ConstExpr::Kind::Div: return "div";
    case ConstExpr::Kind::Neg: return "neg";
    case ConstExpr::Kind::Abs: return "abs";
    case ConstExpr::Kind::Sqrt: return "sqrt";
    case ConstExpr::Kind::Log: return "log";
    case ConstExpr::Kind::Pow: return "pow";
    default: return "";
  }
}

void write_prefix(const ConstExpr& e, std::string& out) {
  switch (e.kind()) {
    case ConstExpr::Kind::Integer:
    case ConstExpr::Kind::Rational:
      out += e.literal().get_str();
      return;
    case ConstExpr::Kind::Alpha:
      out += "alpha";
      return;
    default:
      break;
  }
  out += '(';
  out += op_name(e.kind());
  for (const auto& c : e.children()) {
    out += ' ';
    write_prefix(c, out);
  }
  if (e.kind() == ConstExpr::Kind::Pow) out += ' ' + std::to_string(e.exponent());
  out += ')';
}

class PrefixParser {
 public:
  explicit PrefixParser(std::string_view text) : s_(text) {}

  ConstExpr parse_all() {
    ConstExpr e = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression parse error at offset " + std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string token() {
    skip_ws();
    size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
           s_[pos_] != ')')
      ++pos_;
    if (start == pos_) fail("expected a token");
    return std::string(s_.substr(start, pos_ - start));
  }

  static ConstExpr atom(const std::string& t) {
    if (t == "alpha" || t == "phi") return ConstExpr::alpha();
    auto slash = t.find('/');
    if (slash != std::string::npos) {
      BigInt num, den;
      if (num.set_str(t.substr(0, slash), 10) != 0 || den.set_str(t.substr(slash + 1), 10) != 0 || den == 0)
        throw ParseError("bad rational literal: " + t);
      return ConstExpr(BigRational(num, den));
    }
    return ConstExpr::decimal(t);
  }

  ConstExpr parse_expr() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (s_[pos_] != '(') return atom(token());
    ++pos_;
    std::string op = token();
    std::vector<ConstExpr> args;
    long exponent = 0;
    while (true) {
      skip_ws();
      if (pos_ >= s_.size()) fail("missing ')'");
      if (s_[pos_] == ')') {
        ++pos_;
        break;
      }
      if (op == "pow" && args.size() == 1) {
        std::string t = token();
        try {
          size_t used = 0;
          exponent = std::stol(t, &used);
          if (used != t.size()) fail("pow exponent must be an integer");
        } catch (const std::logic_error&) {
          fail("pow exponent must be an integer");
        }
        args.emplace_back(exponent);
        continue;
      }
      args.push_back(parse_expr());
    }
    auto need = [&](size_t n) {
      if (args.size() != n) fail("operator '" + op + "' expects " + std::to_string(n) + " operands");
    };
    auto fold = [&](auto f) {
      if (args.size() < 2) fail("operator '" + op + "' expects at least 2 operands");
      ConstExpr acc = args[0];
      for (size_t i = 1; i < args.size(); ++i) acc = f(acc, args[i]);
      return acc;
    };
    if (op == "add") return fold([](const ConstExpr& a, const ConstExpr& b) { return a + b; });
    if (op == "mul") return fold([](const ConstExpr& a, const ConstExpr& b) { return a * b; });
    if (op == "sub") { need(2); return args[0] - args[1]; }
    if (op == "div") { need(2); return args[0] / args[1]; }
    if (op == "neg") { need(1); return -args[0]; }
    if (op == "abs") { need(1); return abs(args[0]); }
    if (op == "sqrt") { need(1); return sqrt(args[0]); }
    if (op == "log") { need(1); return log(args[0]); }
    if (op == "pow") { need(2); return pow(args[0], exponent); }
    fail("unknown operator '" + op + "'");
  }

  std::string_view s_;
  size_t pos_ = 0;
};

}  // namespace

ConstExpr ConstExpr::parse(std::string_view text) { return PrefixParser(text).parse_all(); }

std::string ConstExpr::to_prefix() const {
  std::string out;
  write_prefix(*this, out);
  return out;
}

std::uint64_t ConstExpr::canonical_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_prefix()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Exact reduction to a quadratic field element

namespace {

// Writes n = s^2 * r with r squarefree; nullopt if n has a large cofactor that
// trial division cannot settle.
std::optional<std::pair<BigInt, BigInt>> square_split(BigInt n) {
  BigInt s = 1, r = 1;
  constexpr unsigned long kTrialLimit = 1UL << 16;
  for (unsigned long p = 2; p <= kTrialLimit; p += (p == 2 ? 1 : 2)) {
    if (BigInt(p) * p > n) break;
    int e = 0;
    while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
      mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), p);
      ++e;
    }
    for (int i = 0; i + 1 < e; i += 2) s *= p;
    if (e % 2) r *= p;
  }
  if (n > 1) {
    if (mpz_perfect_square_p(n.get_mpz_t())) {
      BigInt root;
      mpz_sqrt(root.get_mpz_t(), n.get_mpz_t());
      s *= root;
    } else if (n < BigInt(kTrialLimit) * kTrialLimit) {
      r *= n;  // no factor up to its square root: prime
    } else {
      return std::nullopt;
    }
  }
  return std::make_pair(s, r);
}

std::optional<BigInt> common_radicand(const QuadraticValue& x, const QuadraticValue& y) {
  if (x.b == 0 || x.r == 1) return y.r;
  if (y.b == 0 || y.r == 1) return x.r;
  if (x.r == y.r) return x.r;
  return std::nullopt;
}

QuadraticValue normalized(QuadraticValue v) {
  if (v.r == 1) {
    v.a += v.b;
    v.b = 0;
  }
  if (v.b == 0) v.r = 1;
  return v;
}

std::optional<QuadraticValue> qmul(const QuadraticValue& x, const QuadraticValue& y) {
  auto r = common_radicand(x, y);
  if (!r) return std::nullopt;
  QuadraticValue z{x.a * y.a + x.b * y.b * BigRational(*r), x.a * y.b + x.b * y.a, *r};
  return normalized(z);
}

std::optional<QuadraticValue> qinv(const QuadraticValue& x) {
  BigRational norm = x.a * x.a - x.b * x.b * BigRational(x.r);
  if (norm == 0) return std::nullopt;
  return normalized(QuadraticValue{x.a / norm, -x.b / norm, x.r});
}

std::optional<QuadraticValue> exact_rec(const ConstExpr& e) {
  using K = ConstExpr::Kind;
  switch (e.kind()) {
    case K::Integer:
    case K::Rational:
      return QuadraticValue{e.literal(), 0, 1};
    case K::Alpha:
      return QuadraticValue{BigRational(1, 2), BigRational(1, 2), 5};
    case K::Add:
    case K::Sub: {
      auto x = exact_rec(e.children()[0]);
      if (!x) return std::nullopt;
      auto y = exact_rec(e.children()[1]);
      if (!y) return std::nullopt;
      auto r = common_radicand(*x, *y);
      if (!r) return std::nullopt;
      x->r = y->r = *r;
      if (e.kind() == K::Add) return normalized(QuadraticValue{x->a + y->a, x->b + y->b, *r});
      return normalized(QuadraticValue{x->a - y->a, x->b - y->b, *r});
    }
    case K::Mul: {
      auto x = exact_rec(e.children()[0]);
      if (!x) return std::nullopt;
      auto y = exact_rec(e.children()[1]);
      if (!y) return std::nullopt;
      return qmul(*x, *y);
    }
    case K::Div: {
      auto x = exact_rec(e.children()[0]);
      if (!x) return std::nullopt;
      auto y = exact_rec(e.children()[1]);
      if (!y) return std::nullopt;
      auto inv = qinv(*y);
      if (!inv) return std::nullopt;
      return qmul(*x, *inv);
    }
    case K::Neg: {
      auto x = exact_rec(e.children()[0]);
      if (!x) return std::nullopt;
      return QuadraticValue{-x->a, -x->b, x->r};
    }
    case K::Abs: {
      auto x = exact_rec(e.children()[0]);
      if (!x) return std::nullopt;
      if (x->sign() < 0) return QuadraticValue{-x->a, -x->b, x->r};
      return x;
    }
    case K::Pow: {
      long k = e.exponent();
      if (k > 4096 || k < -4096) return std::nullopt;
      auto base = exact_rec(e.children()[0]);
      if (!base) return std::nullopt;
      if (k < 0) {
        base = qinv(*base);
        if (!base) return std::nullopt;
        k = -k;
      }
      QuadraticValue acc{1, 0, 1};
      QuadraticValue sq = *base;
      while (k > 0) {
        if (k & 1) {
          auto m = qmul(acc, sq);
          if (!m) return std::nullopt;
          acc = *m;
        }
        k >>= 1;
        if (k) {
          auto m = qmul(sq, sq);
          if (!m) return std::nullopt;
          sq = *m;
        }
      }
      return acc;
    }
    case K::Sqrt: {
      auto x = exact_rec(e.children()[0]);
      if (!x || x->b != 0 || x->a < 0) return std::nullopt;
      BigInt num = x->a.get_num(), den = x->a.get_den();
      auto split = square_split(num * den);
      if (!split) return std::nullopt;
      BigRational coeff(split->first, den);
      coeff.canonicalize();
      return normalized(QuadraticValue{0, coeff, split->second});
    }
    case K::Log: {
      auto x = exact_rec(e.children()[0]);
      if (x && x->b == 0 && x->a == 1) return QuadraticValue{0, 0, 1};
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Evaluation

std::atomic<long> g_high_water{0};

void note_precision(long w) {
  long cur = g_high_water.load(std::memory_order_relaxed);
  while (w > cur && !g_high_water.compare_exchange_weak(cur, w, std::memory_order_relaxed)) {
  }
}

class Evaluator {
 public:
  explicit Evaluator(long working_bits) : w_(working_bits) {}

  RealInterval operator()(const ConstExpr& e) {
    const void* key = &e.literal();  // unique per node
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    RealInterval r = compute(e);
    memo_.emplace(key, r);
    return r;
  }

 private:
  RealInterval compute(const ConstExpr& e) {
    using K = ConstExpr::Kind;
    const auto& ch = e.children();
    switch (e.kind()) {
      case K::Integer:
        return RealInterval::point(e.literal().get_num(), w_);
      case K::Rational:
        return RealInterval::point(e.literal(), w_);
      case K::Alpha: {
        RealInterval five = RealInterval::point(BigInt(5), w_);
        RealInterval one = RealInterval::point(BigInt(1), w_);
        RealInterval two = RealInterval::point(BigInt(2), w_);
        return (one + sqrt(five)) / two;
      }
      case K::Add: return (*this)(ch[0]) + (*this)(ch[1]);
      case K::Sub: return (*this)(ch[0]) - (*this)(ch[1]);
      case K::Mul: return (*this)(ch[0]) * (*this)(ch[1]);
      case K::Div: {
        RealInterval den = (*this)(ch[1]);
        if (den.contains_zero()) {
          auto exact = exact_rec(ch[1]);
          if (exact && exact->sign() == 0) throw DomainError("division by zero");
        }
        return (*this)(ch[0]) / den;
      }
      case K::Neg: return -(*this)(ch[0]);
      case K::Abs: return abs((*this)(ch[0]));
      case K::Sqrt: return sqrt((*this)(ch[0]));
      case K::Pow: return pow((*this)(ch[0]), e.exponent());
      case K::Log: {
        RealInterval arg = (*this)(ch[0]);
        if (!arg.certainly_positive() && arg.hi().sign() > 0) {
          auto exact = exact_rec(ch[0]);
          if (exact && exact->sign() <= 0) throw NonPositiveLogArgument("log of a non-positive number");
        }
        return log(arg);
      }
    }
    throw std::logic_error("unknown expression kind");
  }

  long w_;
  std::unordered_map<const void*, RealInterval> memo_;
};

bool width_ok(const RealInterval& r, long precision_bits) {
  BigFloat bound = r.magnitude();
  if (mpfr_cmp_ui(bound.get(), 1) < 0) mpfr_set_ui(bound.get(), 1, MPFR_RNDN);
  mpfr_mul_2si(bound.get(), bound.get(), 3 - precision_bits, MPFR_RNDD);
  return r.width() <= bound;
}

RealInterval eval_adaptive(const ConstExpr& expr, long precision_bits) {
  long limit = std::min<long>(2 * kDefaultPrecisionCap, 8 * precision_bits + 8192);
  long w = precision_bits + 32;
  while (true) {
    if (w > limit) {
      throw PrecisionExhausted("could not reach " + std::to_string(precision_bits) +
                               " bits for " + expr.to_prefix().substr(0, 200));
    }
    try {
      RealInterval r = Evaluator(w)(expr);
      note_precision(w);
      if (width_ok(r, precision_bits)) return r;
    } catch (const PrecisionInsufficient&) {
      note_precision(w);
      if (w * 2 > limit) {
        // A log argument that stays uncertified up to the cap.
        throw NonPositiveLogArgument("argument not certifiably positive up to " + std::to_string(w) + " bits");
      }
    }
    w *= 2;
  }
}

}  // namespace

std::optional<QuadraticValue> exact_value(const ConstExpr& expr) { return exact_rec(expr); }

RealInterval eval(const ConstExpr& expr, long precision_bits) {
  if (precision_bits < 2) throw std::invalid_argument("eval: precision must be at least 2 bits");
  RealInterval r = eval_adaptive(expr, precision_bits);
  if (precision_bits > 64) r = intersect(r, eval(expr, precision_bits / 2));
  return r;
}

const char* to_string(Ordering o) {
  switch (o) {
    case Ordering::Less: return "Less";
    case Ordering::Greater: return "Greater";
    case Ordering::Equal: return "Equal";
    case Ordering::Undecided: return "Undecided";
  }
  return "?";
}

namespace {

// Rational linear combination of opaque subexpressions keyed by prefix text;
// the empty key is the rational constant. Enough to see that 2 log x and
// 4 (1/2 log x) agree.
using LinearForm = std::map<std::string, BigRational>;

void add_scaled(LinearForm& into, const LinearForm& from, const BigRational& k) {
  for (const auto& [key, c] : from) {
    BigRational v = into[key] + k * c;
    if (v == 0)
      into.erase(key);
    else
      into[key] = v;
  }
}

std::optional<BigRational> as_constant(const LinearForm& f) {
  if (f.empty()) return BigRational(0);
  if (f.size() == 1 && f.begin()->first.empty()) return f.begin()->second;
  return std::nullopt;
}

LinearForm linear_form(const ConstExpr& e) {
  using K = ConstExpr::Kind;
  LinearForm out;
  const auto& ch = e.children();
  switch (e.kind()) {
    case K::Integer:
    case K::Rational:
      if (e.literal() != 0) out[""] = e.literal();
      return out;
    case K::Add:
      add_scaled(out, linear_form(ch[0]), 1);
      add_scaled(out, linear_form(ch[1]), 1);
      return out;
    case K::Sub:
      add_scaled(out, linear_form(ch[0]), 1);
      add_scaled(out, linear_form(ch[1]), -1);
      return out;
    case K::Neg:
      add_scaled(out, linear_form(ch[0]), -1);
      return out;
    case K::Mul: {
      LinearForm l = linear_form(ch[0]), r = linear_form(ch[1]);
      if (auto c = as_constant(l)) {
        add_scaled(out, r, *c);
        return out;
      }
      if (auto c = as_constant(r)) {
        add_scaled(out, l, *c);
        return out;
      }
      break;
    }
    case K::Div: {
      LinearForm r = linear_form(ch[1]);
      auto c = as_constant(r);
      if (c && *c != 0) {
        add_scaled(out, linear_form(ch[0]), 1 / *c);
        return out;
      }
      break;
    }
    default:
      break;
  }
  out[e.to_prefix()] = 1;
  return out;
}

}  // namespace

Ordering compare_certified(const ConstExpr& a, const ConstExpr& b, long max_precision_bits) {
  auto ea = exact_value(a);
  if (ea) {
    auto eb = exact_value(b);
    if (eb && common_radicand(*ea, *eb)) {
      auto r = common_radicand(*ea, *eb);
      QuadraticValue diff{ea->a - eb->a, ea->b - eb->b, *r};
      int s = normalized(diff).sign();
      return s < 0 ? Ordering::Less : (s > 0 ? Ordering::Greater : Ordering::Equal);
    }
  }
  {
    LinearForm diff = linear_form(a);
    add_scaled(diff, linear_form(b), -1);
    if (diff.empty()) return Ordering::Equal;
  }
  try {
    for (long p = kDefaultStartPrecision; p <= max_precision_bits; p *= 2) {
      RealInterval ia = eval(a, p);
      RealInterval ib = eval(b, p);
      if (ia.hi() < ib.lo()) return Ordering::Less;
      if (ia.lo() > ib.hi()) return Ordering::Greater;
    }
  } catch (const Error&) {
    return Ordering::Undecided;
  }
  return Ordering::Undecided;
}

long precision_high_water() { return g_high_water.load(std::memory_order_relaxed); }
void reset_precision_high_water() { g_high_water.store(0, std::memory_order_relaxed); }

}  // namespace zeckpell
