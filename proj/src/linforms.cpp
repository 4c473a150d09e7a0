#include "zeckpell/linforms.hpp"

#include <algorithm>

namespace zeckpell {

namespace {

const ConstExpr& alpha_c() {
  static const ConstExpr a = ConstExpr::alpha();
  return a;
}

ConstExpr lit(const char* decimal) { return ConstExpr::decimal(decimal); }
ConstExpr q(const BigRational& v) { return ConstExpr(v); }

ConstExpr log_one_plus_alpha_pow(long k) { return log(ConstExpr(1) + pow(alpha_c(), k)); }

}  // namespace

ConstExpr log_alpha() { return log(alpha_c()); }
ConstExpr c1_constant() { return ConstExpr(1) / log_alpha(); }
ConstExpr log_sqrt5_over_2() { return log(sqrt(ConstExpr(5)) / ConstExpr(2)); }

BigRational upper_rational(const ConstExpr& e, long precision_bits) {
  return eval(e, precision_bits).hi().to_rational();
}

BigRational lower_rational(const ConstExpr& e, long precision_bits) {
  return eval(e, precision_bits).lo().to_rational();
}

// ---------------------------------------------------------------------------

AlgebraicDescriptor AlgebraicDescriptor::pell_unit(const PellSolution& sol) {
  AlgebraicDescriptor d;
  d.kind_ = Kind::PellUnit;
  d.value_ = sol.delta_expr();
  return d;
}

AlgebraicDescriptor AlgebraicDescriptor::pell_unit(const BigInt& x1, int epsilon) {
  AlgebraicDescriptor d;
  d.kind_ = Kind::PellUnit;
  d.value_ = ConstExpr(x1) + sqrt(ConstExpr(BigInt(x1 * x1 - epsilon)));
  return d;
}

AlgebraicDescriptor AlgebraicDescriptor::sqrt5_over_2() {
  AlgebraicDescriptor d;
  d.kind_ = Kind::Sqrt5Over2;
  d.value_ = sqrt(ConstExpr(5)) / ConstExpr(2);
  return d;
}

AlgebraicDescriptor AlgebraicDescriptor::golden_ratio() {
  AlgebraicDescriptor d;
  d.kind_ = Kind::GoldenRatio;
  d.value_ = alpha_c();
  return d;
}

AlgebraicDescriptor AlgebraicDescriptor::one_plus_alpha_pow(long k) {
  if (k == 0) throw DomainError("1 + alpha^0 is rational");
  AlgebraicDescriptor d;
  d.kind_ = Kind::OnePlusAlphaPow;
  d.k_ = k;
  d.value_ = ConstExpr(1) + pow(alpha_c(), k);
  return d;
}

ConstExpr AlgebraicDescriptor::value() const { return value_; }

int AlgebraicDescriptor::degree() const { return 2; }

std::optional<LogCoords> one_plus_alpha_inv_coords(long k) {
  switch (k) {
    case 1: return LogCoords{0, 0, 1};
    case 2: return LogCoords{0, 1, -1};
    case 3: return LogCoords{1, 0, -1};
    case 6: return LogCoords{1, 1, -3};
    case 10: return LogCoords{0, 3, -5};
    default: return std::nullopt;
  }
}

ConstExpr height_bound(const AlgebraicDescriptor& desc) {
  ConstExpr half = ConstExpr(BigRational(1, 2));
  switch (desc.kind()) {
    case AlgebraicDescriptor::Kind::PellUnit:
      // A unit > 1 whose conjugate has absolute value < 1.
      return half * log(desc.value());
    case AlgebraicDescriptor::Kind::Sqrt5Over2:
      return half * log(ConstExpr(5));
    case AlgebraicDescriptor::Kind::GoldenRatio:
      return half * log_alpha();
    case AlgebraicDescriptor::Kind::OnePlusAlphaPow: {
      long k = desc.exponent() < 0 ? -desc.exponent() : desc.exponent();
      // h(1 + g) <= h(g) + log 2 and h(alpha^k) = |k| h(alpha).
      return ConstExpr(BigRational(k, 2)) * log_alpha() + log(ConstExpr(2));
    }
  }
  throw std::logic_error("unknown descriptor");
}

ConstExpr matveev_constant(int l, int d_L) {
  ConstExpr L(static_cast<long>(l));
  ConstExpr dl(static_cast<long>(d_L));
  return ConstExpr(3) * pow(ConstExpr(30), l + 3) * pow(L, 4) * sqrt(L) * pow(dl, 2) *
         (ConstExpr(1) + log(dl));
}

namespace {

bool certified_at_least(const ConstExpr& a, const ConstExpr& b) {
  Ordering o = compare_certified(a, b, 1 << 14);
  return o == Ordering::Greater || o == Ordering::Equal;
}

}  // namespace

ConstExpr matveev_lower_bound(const MatveevInstance& inst) {
  if (inst.l < 1 || inst.d_L < 1) throw HypothesisViolation("l and d_L must be positive");
  if (static_cast<int>(inst.A.size()) != inst.l) throw HypothesisViolation("need exactly l height parameters");
  if (inst.D < 3) throw HypothesisViolation("D must be at least 3");
  for (const auto& c : inst.coefficients) {
    if (abs(c) > inst.D) throw HypothesisViolation("coefficient " + c.get_str() + " exceeds D");
  }
  bool check_etas = static_cast<int>(inst.etas.size()) == inst.l;
  ConstExpr product(1);
  for (int i = 0; i < inst.l; ++i) {
    const ConstExpr& a = inst.A[i];
    if (!certified_at_least(a, lit("0.16")))
      throw HypothesisViolation("A_" + std::to_string(i + 1) + " < 0.16");
    if (check_etas) {
      const auto& eta = inst.etas[i];
      if (!certified_at_least(a, ConstExpr(static_cast<long>(inst.d_L)) * height_bound(eta)))
        throw HypothesisViolation("A_" + std::to_string(i + 1) + " < d_L h(eta)");
      if (!certified_at_least(a, abs(log(eta.value()))))
        throw HypothesisViolation("A_" + std::to_string(i + 1) + " < |log eta|");
    }
    product = product * a;
  }
  return matveev_constant(inst.l, inst.d_L) * (ConstExpr(1) + log(ConstExpr(inst.D))) * product;
}

// ---------------------------------------------------------------------------

GammaForm GammaForm::gamma1(const ConstExpr& delta, long ell, long n, long m) {
  if (ell < 1 || m < 0 || n <= m) throw DomainError("Gamma_1 needs ell >= 1 and n > m >= 0");
  GammaForm f;
  f.which = Which::G1;
  f.delta = delta;
  f.first = {m, n, ell};
  return f;
}

GammaForm GammaForm::gamma2(const ConstExpr& delta, long ell, long n) {
  if (ell < 1 || n < 0) throw DomainError("Gamma_2 needs ell >= 1 and n >= 0");
  GammaForm f;
  f.which = Which::G2;
  f.delta = delta;
  f.first = {0, n, ell};
  return f;
}

GammaForm GammaForm::gamma3(long ell1, long ell2, long n1, long n2) {
  if (ell1 < 1 || ell1 >= ell2) throw DomainError("Gamma_3 needs 1 <= ell1 < ell2");
  GammaForm f;
  f.which = Which::G3;
  f.first = {0, n1, ell1};
  f.second = {0, n2, ell2};
  return f;
}

GammaForm GammaForm::gamma4(const SolutionTriple& i, const SolutionTriple& j) {
  if (i.ell == j.ell || i.ell < 1 || j.ell < 1) throw DomainError("Gamma_4 needs distinct positive ell");
  if (i.n <= i.m) throw DomainError("Gamma_4 needs n_i > m_i");
  GammaForm f;
  f.which = Which::G4;
  f.first = i;
  f.second = j;
  return f;
}

GammaForm GammaForm::gamma5(const SolutionTriple& s1, const SolutionTriple& s2) {
  if (s1.ell < 1 || s1.ell >= s2.ell) throw DomainError("Gamma_5 needs 1 <= ell1 < ell2");
  if (s1.n <= s1.m || s2.n <= s2.m) throw DomainError("Gamma_5 needs n_i > m_i");
  GammaForm f;
  f.which = Which::G5;
  f.first = s1;
  f.second = s2;
  return f;
}

ConstExpr gamma_expr(const GammaForm& f) {
  ConstExpr ls = log_sqrt5_over_2();
  ConstExpr la = log_alpha();
  auto I = [](long v) { return ConstExpr(v); };
  const SolutionTriple& a = f.first;
  const SolutionTriple& b = f.second;
  switch (f.which) {
    case GammaForm::Which::G1:
      return I(a.ell) * log(f.delta) + ls - I(a.n) * la - log_one_plus_alpha_pow(a.m - a.n);
    case GammaForm::Which::G2:
      return I(a.ell) * log(f.delta) + ls - I(a.n) * la;
    case GammaForm::Which::G3:
      return I(b.ell - a.ell) * ls + I(a.ell * b.n - b.ell * a.n) * la;
    case GammaForm::Which::G4:
      return I(a.ell - b.ell) * ls + I(a.n * b.ell - b.n * a.ell) * la +
             I(b.ell) * log_one_plus_alpha_pow(a.m - a.n);
    case GammaForm::Which::G5:
      return I(a.ell - b.ell) * ls + I(a.n * b.ell - b.n * a.ell) * la +
             I(b.ell) * log_one_plus_alpha_pow(a.m - a.n) - I(a.ell) * log_one_plus_alpha_pow(b.m - b.n);
  }
  throw std::logic_error("unknown form");
}

RealInterval gamma_eval(const GammaForm& form, long precision_bits) {
  return eval(gamma_expr(form), precision_bits);
}

// ---------------------------------------------------------------------------

BigInt solve_log_poly_bound(const ConstExpr& A, int k) {
  if (k < 1) throw DomainError("solve_log_poly_bound needs k >= 1");
  if (compare_certified(A, ConstExpr(0)) != Ordering::Greater) throw DomainError("A must be positive");
  auto satisfies = [&](const BigInt& n) {
    ConstExpr ne(n);
    return compare_certified(ne, A * pow(log(ne), k)) == Ordering::Greater;
  };
  // n / (log n)^k decreases up to e^k and increases afterwards.
  BigFloat ek(64);
  mpfr_set_ui(ek.get(), static_cast<unsigned long>(k), MPFR_RNDU);
  mpfr_exp(ek.get(), ek.get(), MPFR_RNDU);
  BigInt n0 = std::max(BigInt(2), ek.ceil_int());
  if (satisfies(n0)) {
    if (n0 > 2 && !satisfies(n0 - 1)) return n0;
    // n0 - 1 satisfies too, and so does everything below it.
    return 2;
  }
  BigInt lo = n0, hi = 2 * n0;
  while (!satisfies(hi)) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    BigInt mid = (lo + hi) / 2;
    if (satisfies(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

const char* to_string(ConstantMode mode) {
  return mode == ConstantMode::Rigorous ? "rigorous" : "paper-compat";
}

BigInt LogPowerBound::at(const BigInt& n2) const {
  return eval(q(coeff) * pow(log(ConstExpr(n2)), power), 128).hi().ceil_int();
}

BigRational log_delta_from_n1(long n1_max, ConstantMode mode) {
  long factor = mode == ConstantMode::Rigorous ? n1_max + 1 : n1_max;
  return upper_rational(ConstExpr(factor) * log_alpha() + log(ConstExpr(1) + pow(alpha_c(), -2)));
}

namespace {

struct ChainBuilder {
  Stage1Chain& out;
  void step(const std::string& name, const std::string& meaning, const BigRational& v) {
    out.steps.push_back({name, meaning, v});
  }
};

void rigorous_chain(Stage1Chain& ch) {
  ChainBuilder b{ch};
  ch.n2_floor = BigInt("100000000000000000000");  // 1e20
  ConstExpr la = log_alpha(), l2 = log(ConstExpr(2)), l5 = log(ConstExpr(5));
  // L is a lower bound for log n2 on the folded range.
  BigRational L = lower_rational(log(ConstExpr(ch.n2_floor)));
  ConstExpr Lc = q(L);
  ConstExpr log_delta_min = log(ConstExpr(1) + sqrt(ConstExpr(2)));
  ConstExpr g = ConstExpr(1) + ConstExpr(1) / Lc;  // 1 + log n <= g log n

  // Gamma_2: l = 3, d_L = 4, A = 2 log delta, 2 log 5, 2 log alpha, D = n.
  BigRational K2 = upper_rational(matveev_constant(3, 4) * ConstExpr(8) * l5 * la);
  b.step("K2", "Gamma_2: log|G2| > -K2 (1+log n) log delta", K2);
  BigRational cb = upper_rational((q(K2) * g + l2 / (Lc * log_delta_min)) / la);
  b.step("c_nm", "n - m < c_nm (log n) log delta", cb);

  // Gamma_1: l = 4, d_L = 4, A_4 = 2(n-m) log alpha + 4 log 2 <= (n-m)(2 log alpha + 2 log 2).
  BigRational K1 = upper_rational(matveev_constant(4, 4) * ConstExpr(8) * l5 * la *
                                  (ConstExpr(2) * la + ConstExpr(2) * l2));
  b.step("K1", "Gamma_1: log|G1| > -K1 (n-m) (1+log n) log delta", K1);
  ch.n_coeff = upper_rational((q(K1) * g * q(cb) + log(ConstExpr(23)) / (Lc * Lc * log_delta_min * log_delta_min)) / la);
  b.step("c_n", "n < c_n (log n)^2 (log delta)^2", ch.n_coeff);
  ch.ell_coeff = upper_rational(q(ch.n_coeff) * la +
                                (la + log(ConstExpr(1) + pow(alpha_c(), -2))) / (Lc * Lc * log_delta_min));
  b.step("c_ell", "ell < c_ell (log n)^2 log delta", ch.ell_coeff);

  // Gamma_3: l = 2, d_L = 2, A = log 5, log alpha, D = 3.5 n2.
  ConstExpr C22 = matveev_constant(2, 2);
  ConstExpr l35 = log(ConstExpr(BigRational(7, 2)));
  ch.lambda_fn = {upper_rational((log(ConstExpr(4)) / Lc + ConstExpr(1) +
                                  C22 * l5 * la * (ConstExpr(1) + (ConstExpr(1) + l35) / Lc)) / la),
                  1};
  b.step("c_lambda", "lambda < c_lambda log n2", ch.lambda_fn.coeff);

  // Gamma_4: l = 3, d_L = 2, A_3 = lambda log alpha + 2 log 2, D = 25 n2.
  ConstExpr C32 = matveev_constant(3, 2);
  ConstExpr l25 = log(ConstExpr(25));
  ConstExpr a3 = q(ch.lambda_fn.coeff) * la + ConstExpr(2) * l2 / Lc;
  ch.rho_fn = {upper_rational(((l25 / Lc + ConstExpr(1)) / Lc +
                               C32 * (ConstExpr(1) + (ConstExpr(1) + l25) / Lc) * l5 * la * a3) / la),
               2};
  b.step("c_rho", "rho < c_rho (log n2)^2", ch.rho_fn.coeff);

  // Gamma_5: l = 4, d_L = 2, A_3 A_4 from lambda and chi = max(n_i - m_i), D = 100 n2.
  ConstExpr C42 = matveev_constant(4, 2);
  ConstExpr l100 = log(ConstExpr(100));
  BigRational c_chi = std::max(ch.rho_fn.coeff, BigRational(ch.lambda_fn.coeff / L));
  ConstExpr a4 = q(c_chi) * la + ConstExpr(2) * l2 / (Lc * Lc);
  BigRational c_n1 = upper_rational(((ConstExpr(2) * la + log(ConstExpr(46))) / pow(Lc, 4) + ConstExpr(1) / pow(Lc, 3) +
                                     C42 * (ConstExpr(1) + (ConstExpr(1) + l100) / Lc) * l5 * la * a3 * a4) / la);
  // The case rho = n1 gives n1 < c_rho (log n2)^2.
  c_n1 = std::max(c_n1, BigRational(ch.rho_fn.coeff / (L * L)));
  ch.n1_fn = {c_n1, 4};
  b.step("c_n1", "n1 < c_n1 (log n2)^4", c_n1);

  ch.log_delta_fn = {upper_rational(q(c_n1) * la + (la + log(ConstExpr(1) + pow(alpha_c(), -2))) / pow(Lc, 4)), 4};
  b.step("c_delta", "log delta < c_delta (log n2)^4", ch.log_delta_fn.coeff);
  ch.final_coeff = ch.n_coeff * ch.log_delta_fn.coeff * ch.log_delta_fn.coeff;
  b.step("A", "n2 < A (log n2)^10", ch.final_coeff);
}

void compat_chain(Stage1Chain& ch) {
  ChainBuilder b{ch};
  ch.n2_floor = 2;
  auto dec = [](const char* s) { return ConstExpr::decimal(s).literal(); };
  BigRational c_a = dec("1.5e16"), c_b = dec("3.2e14");
  b.step("c_a", "n < c_a (n-m) (log n) log delta", c_a);
  b.step("c_nm", "n - m < c_nm (log n) log delta", c_b);
  ch.n_coeff = dec("4.8e30");
  ch.ell_coeff = dec("1.6e30");
  b.step("c_n", "n < c_n (log n)^2 (log delta)^2", ch.n_coeff);
  b.step("c_ell", "ell < c_ell (log n)^2 log delta", ch.ell_coeff);
  ch.lambda_fn = {dec("2.7e10"), 1};
  b.step("c_lambda", "lambda < c_lambda log n2", ch.lambda_fn.coeff);
  ch.rho_fn = {dec("2e22"), 2};
  b.step("c_rho", "rho < c_rho (log n2)^2", ch.rho_fn.coeff);
  BigRational five = dec("5e14");
  b.step("c_g5", "n1 < c_g5 (n1-m1)(n2-m2) log n2", five);
  ch.n1_fn = {dec("2.7e47"), 4};
  b.step("c_n1", "n1 < c_n1 (log n2)^4", ch.n1_fn.coeff);
  ch.log_delta_fn = {dec("1.3e47"), 4};
  b.step("c_delta", "log delta < c_delta (log n2)^4", ch.log_delta_fn.coeff);
  ch.final_coeff = dec("8.2e124");
  b.step("A", "n2 < A (log n2)^10", ch.final_coeff);
  // Consistency of the injected numbers with their products.
  b.step("check_n", "c_a c_nm", c_a * c_b);
  b.step("check_n1", "c_g5 c_lambda c_rho", five * ch.lambda_fn.coeff * ch.rho_fn.coeff);
  b.step("check_A", "c_n c_delta^2", ch.n_coeff * ch.log_delta_fn.coeff * ch.log_delta_fn.coeff);
}

}  // namespace

Stage1Chain stage1_bound_chain(ConstantMode mode) {
  Stage1Chain ch;
  ch.mode = mode;
  if (mode == ConstantMode::Rigorous) {
    rigorous_chain(ch);
  } else {
    compat_chain(ch);
  }
  BigInt n2 = std::max(ch.n2_floor, solve_log_poly_bound(q(ch.final_coeff), 10));
  ch.bound_n2 = n2;
  ch.bound_n1 = ch.n1_fn.at(n2);
  ch.steps.push_back({"n2", "absolute bound on n2", BigRational(ch.bound_n2)});
  ch.steps.push_back({"n1", "absolute bound on n1", BigRational(ch.bound_n1)});
  return ch;
}

BigInt close_n2_bound(const Stage1Chain& chain, const BigRational& log_delta_bound) {
  BigRational c = chain.n_coeff;
  if (chain.mode == ConstantMode::PaperCompat) {
    // The printed cycle constant 3e37 at log delta < 3150.
    c = ConstExpr::decimal("3e37").literal() / BigRational(3150 * 3150);
  }
  BigRational A = c * log_delta_bound * log_delta_bound;
  return std::max(chain.n2_floor, solve_log_poly_bound(q(A), 2));
}

}  // namespace zeckpell
