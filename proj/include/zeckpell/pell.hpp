#pragma once

// Pell equations x^2 - d y^2 = +-1: the periodic continued fraction of sqrt d,
// fundamental solutions, the X_l sequence, the polynomials P_l^{+-} and
// squarefree decomposition.

#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "zeckpell/realnum.hpp"

namespace zeckpell {

inline const BigInt kDefaultFactorCeiling = BigInt("10000000000000000000000000000000000000000");  // 1e40

struct PeriodicCF {
  BigInt a0;
  std::vector<BigInt> period;
};

// Throws PerfectSquare (or DomainError for d < 2).
PeriodicCF sqrt_cf(const BigInt& d);

struct PellSolution {
  BigInt d;
  BigInt X1;
  BigInt Y1;
  int epsilon = 1;

  // delta = X1 + Y1 sqrt d, built as X1 + sqrt(X1^2 - epsilon) so that it
  // stays exact without factoring.
  ConstExpr delta_expr() const;
  bool operator==(const PellSolution&) const = default;
};

// Minimal solution from the convergents of sqrt d; epsilon = -1 exactly when
// the period is odd.
PellSolution fundamental_solution(const BigInt& d);

// X_l via X_{l+1} = 2 X1 X_l - eps X_{l-1}, X_0 = 1.
BigInt x_value(const PellSolution& sol, long ell);

// Thread-safe cache of X_0, X_1, ... for one equation.
class XSequence {
 public:
  explicit XSequence(PellSolution base);
  const PellSolution& base() const { return base_; }
  BigInt at(long ell) const;

 private:
  PellSolution base_;
  mutable std::mutex mu_;
  mutable std::vector<BigInt> values_;
};

// P_l^eps(x) = ((x + sqrt(x^2 - eps))^l + (x - sqrt(x^2 - eps))^l) / 2.
BigInt p_poly_eval(long ell, int epsilon, const BigInt& x);

// The x >= 1 with P_l^eps(x) == target, if any.
std::optional<BigInt> p_poly_invert(long ell, int epsilon, const BigInt& target);

// Prime factorization (ascending primes with exponents). Throws
// FactoringCeilingExceeded when n exceeds the ceiling.
std::vector<std::pair<BigInt, unsigned>> factorize(const BigInt& n,
                                                   const BigInt& ceiling = kDefaultFactorCeiling);

struct SquarefreeSplit {
  BigInt d;
  BigInt y;
  bool operator==(const SquarefreeSplit&) const = default;
};

// n = d y^2 with d squarefree.
SquarefreeSplit squarefree_part(const BigInt& n, const BigInt& ceiling = kDefaultFactorCeiling);

struct NormalizedPell {
  PellSolution base;  // fundamental solution of the squarefree d
  long ell = 1;       // x == X_ell(base)
};

// Locates x (a solution of x^2 - d y^2 = eps for the squarefree part d of
// x^2 - eps) as a power of the fundamental unit. Throws DomainError for the
// degenerate x = 1, eps = +1.
NormalizedPell normalize_to_fundamental(const BigInt& x, int epsilon,
                                        const BigInt& ceiling = kDefaultFactorCeiling);

}  // namespace zeckpell
