#pragma once

// Reduction engines: certified continued fractions with the Legendre bound,
// the Dujella-Petho inhomogeneous reduction, integral LLL and the lattice
// lower bound for small linear forms with bounded coefficients.

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zeckpell/realnum.hpp"

namespace zeckpell {

using Json = nlohmann::json;

struct ContinuedFraction {
  ConstExpr source;
  std::vector<BigInt> a;  // a_0..a_N
  std::vector<BigInt> p;  // convergent numerators
  std::vector<BigInt> q;  // convergent denominators
  long precision_bits = 0;  // working precision that certified the expansion

  long certified_through() const { return static_cast<long>(a.size()) - 1; }
};

struct CfTarget {
  enum class Kind { Count, QExceeds };
  Kind kind = Kind::Count;
  BigInt value;

  // a_0..a_{n-1}
  static CfTarget count(long n) { return {Kind::Count, BigInt(n)}; }
  // through the minimal N with q_N > M
  static CfTarget q_exceeds(const BigInt& M) { return {Kind::QExceeds, M}; }
};

// The source is assumed irrational. Quotients are taken only when both
// endpoints of an enclosure agree on them; precision doubles until the target
// is met. Throws PrecisionExhausted past max_precision_bits.
ContinuedFraction real_cf(const ConstExpr& x, const CfTarget& until,
                          long max_precision_bits = kDefaultPrecisionCap);

// Expansions are memoized in-process; with a directory set they are also
// persisted as <hash>-<bits>.json and checked before reuse.
void set_cf_cache_dir(const std::optional<std::filesystem::path>& dir);
void clear_cf_cache();

struct LegendreBound {
  long N = 0;        // minimal index with q_N > M (0-based)
  long ordinal = 0;  // N + 1, counting p_1/q_1 = a_0 as the first convergent
  BigInt aM;         // max a_0..a_N
  long argmax = 0;   // first index attaining aM
};

// Throws InsufficientExpansion when cf never exceeds M.
LegendreBound legendre_bound(const ContinuedFraction& cf, const BigInt& M);

struct ReductionOutcome {
  BigInt new_bound;
  Json certificate;
  Json inputs;
};

// base^lambda < coeff (a(M)+2) M^2 gives lambda <= ceil(log(...)/log base).
ReductionOutcome homogeneous_reduce(const ContinuedFraction& cf, const BigInt& M,
                                    const BigRational& rhs_coeff, const ConstExpr& base);

// 0 < |m tau - n + mu| < A B^-k with m <= M gives k <= h.
// Throws NoUsableConvergent after max_tries convergents past q > 6M.
ReductionOutcome dujella_petho(const ConstExpr& tau, const ConstExpr& mu, const ConstExpr& A,
                               const ConstExpr& B, const BigInt& M, int max_tries = 25);

// Reruns the engine named in the certificate on the echoed inputs.
ReductionOutcome replay(const ReductionOutcome& outcome);

using IntMatrix = std::vector<std::vector<BigInt>>;

struct LllResult {
  IntMatrix basis;                     // rows are the reduced vectors
  std::vector<BigRational> gs_norms_sq;  // |b_i*|^2
  long swaps = 0;
};

// Integral LLL with delta = 3/4 on the rows. Throws SingularBasis.
LllResult lll_reduce(const IntMatrix& basis);

// Exact check of size reduction and the Lovasz condition.
bool is_lll_reduced(const IntMatrix& basis);

// Rational Gram-Schmidt norms |b_i*|^2.
std::vector<BigRational> gram_schmidt_norms(const IntMatrix& basis);

struct LatticeProblem {
  std::vector<ConstExpr> tau;
  std::vector<BigInt> X;
  BigInt C;

  int t() const { return static_cast<int>(tau.size()); }
};

struct FlacotadasResult {
  ConstExpr bound;  // lower bound on |sum x_i tau_i|
  BigRational lattice_delta_sq;
  BigRational Q;
  BigRational T;
  std::vector<BigInt> rounded;  // round(C tau_j)
  LllResult reduced;
  double log10_bound = 0;

  Json certificate() const;
};

// Throws DomainError if C <= (t max X)^t, HypothesisFailed when the reduced
// lattice is too short for the given X (the caller raises C).
FlacotadasResult flacotadas_lower_bound(const LatticeProblem& prob);

// Largest integer e with base^e < X, certified upper estimate.
BigInt exponent_below(const ConstExpr& X, const ConstExpr& base);

}  // namespace zeckpell
