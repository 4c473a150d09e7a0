#pragma once

// Linear forms in logarithms: heights of the few algebraic numbers that
// occur, Matveev's lower bound, the forms Gamma_1..Gamma_5, and the chain of
// inequalities that bounds n_1 and n_2 absolutely.

#include <optional>
#include <string>
#include <vector>

#include "zeckpell/pell.hpp"
#include "zeckpell/realnum.hpp"

namespace zeckpell {

// 1 / log(alpha).
ConstExpr c1_constant();
ConstExpr log_alpha();
// log(sqrt 5 / 2).
ConstExpr log_sqrt5_over_2();

class AlgebraicDescriptor {
 public:
  enum class Kind { PellUnit, Sqrt5Over2, GoldenRatio, OnePlusAlphaPow };

  static AlgebraicDescriptor pell_unit(const PellSolution& sol);
  // Unit given only numerically, x + sqrt(x^2 - eps).
  static AlgebraicDescriptor pell_unit(const BigInt& x1, int epsilon);
  static AlgebraicDescriptor sqrt5_over_2();
  static AlgebraicDescriptor golden_ratio();
  // 1 + alpha^k, k != 0.
  static AlgebraicDescriptor one_plus_alpha_pow(long k);

  Kind kind() const { return kind_; }
  long exponent() const { return k_; }
  ConstExpr value() const;
  // Degree over Q.
  int degree() const;

 private:
  Kind kind_ = Kind::GoldenRatio;
  ConstExpr value_;
  long k_ = 0;
};

// Coordinates of log(1 + alpha^-k) on log 2, log sqrt5, log alpha. Only
// k in {1, 2, 3, 6, 10} qualify: the norm of 1 + alpha^k must be built from
// 2 and 5 alone. Two such logarithms together with log(sqrt5/2) and log alpha
// are linearly dependent, so four-term forms over them need these coordinates.
struct LogCoords {
  long log2 = 0;
  long log_sqrt5 = 0;
  long log_alpha = 0;
};
std::optional<LogCoords> one_plus_alpha_inv_coords(long k);
inline constexpr LogCoords kLogSqrt5Over2Coords{-1, 1, 0};

// Upper bound on the logarithmic height.
ConstExpr height_bound(const AlgebraicDescriptor& desc);

// 3 * 30^(l+3) * l^4.5 * d_L^2 * (1 + log d_L).
ConstExpr matveev_constant(int l, int d_L);

struct MatveevInstance {
  int l = 0;
  int d_L = 0;
  BigInt D;
  std::vector<AlgebraicDescriptor> etas;
  std::vector<ConstExpr> A;
  std::vector<BigInt> coefficients;
};

// B with log|Lambda| > -B, provided Lambda != 0. Throws HypothesisViolation
// when D or some A_i cannot be certified against the hypotheses.
ConstExpr matveev_lower_bound(const MatveevInstance& inst);

struct SolutionTriple {
  long m = 0;
  long n = 0;
  long ell = 1;
};

struct GammaForm {
  enum class Which { G1, G2, G3, G4, G5 };

  Which which = Which::G1;
  ConstExpr delta;        // G1, G2 only
  SolutionTriple first;   // G1/G2: the solution; G3/G5: i = 1; G4: index i
  SolutionTriple second;  // G3/G5: i = 2; G4: index j
  // Nonvanishing is argued by hand for every form, never checked here.
  bool nonvanishing_assumed = true;

  static GammaForm gamma1(const ConstExpr& delta, long ell, long n, long m);
  static GammaForm gamma2(const ConstExpr& delta, long ell, long n);
  static GammaForm gamma3(long ell1, long ell2, long n1, long n2);
  static GammaForm gamma4(const SolutionTriple& i, const SolutionTriple& j);
  static GammaForm gamma5(const SolutionTriple& s1, const SolutionTriple& s2);
};

ConstExpr gamma_expr(const GammaForm& form);
RealInterval gamma_eval(const GammaForm& form, long precision_bits);

// Smallest N >= 2 such that every integer n >= N has n > A (log n)^k, with
// N - 1 certified to violate it (unless N == 2).
BigInt solve_log_poly_bound(const ConstExpr& A, int k);

enum class ConstantMode { Rigorous, PaperCompat };
const char* to_string(ConstantMode mode);

// value < coeff * (log n2)^power, valid for n2 >= the chain's floor.
struct LogPowerBound {
  BigRational coeff;
  int power = 1;

  BigInt at(const BigInt& n2) const;  // ceiling of coeff (log n2)^power
};

struct ChainStep {
  std::string name;
  std::string meaning;
  BigRational value;
};

struct Stage1Chain {
  ConstantMode mode = ConstantMode::Rigorous;
  BigInt n2_floor;                  // the folding assumes n2 >= this
  BigRational n_coeff;              // n < n_coeff (log n)^2 (log delta)^2
  BigRational ell_coeff;            // ell < ell_coeff (log n)^2 log delta
  LogPowerBound lambda_fn;          // lambda < ... (power 1)
  LogPowerBound rho_fn;             // rho < ... (power 2)
  LogPowerBound n1_fn;              // n1 < ... (power 4)
  LogPowerBound log_delta_fn;       // log delta < ... (power 4)
  BigRational final_coeff;          // n2 < final_coeff (log n2)^10
  BigInt bound_n2;
  BigInt bound_n1;
  std::vector<ChainStep> steps;

  BigInt bound_lambda(const BigInt& n2) const { return lambda_fn.at(n2); }
  BigInt bound_rho(const BigInt& n2) const { return rho_fn.at(n2); }
};

Stage1Chain stage1_bound_chain(ConstantMode mode);

// n2 bound once log delta <= log_delta_bound is known: solves
// n2 < c (log n2)^2 log_delta_bound^2 with the chain's c.
BigInt close_n2_bound(const Stage1Chain& chain, const BigRational& log_delta_bound);

// Upper bound on log delta from n1 <= n1_max: (n1_max + 1) log alpha +
// log(1 + alpha^-2); the compat mode drops the +1 as printed.
BigRational log_delta_from_n1(long n1_max, ConstantMode mode);

// Rounded-up / rounded-down rationals enclosing a constant.
BigRational upper_rational(const ConstExpr& e, long precision_bits = 128);
BigRational lower_rational(const ConstExpr& e, long precision_bits = 128);

}  // namespace zeckpell
