#pragma once

// Fibonacci / Lucas numbers, Zeckendorf representations and a handful of
// exact identities between them.

#include <optional>
#include <vector>

#include "zeckpell/realnum.hpp"

namespace zeckpell {

// F_k and L_k for k >= 0, served from a process-wide append-only table.
BigInt fib(long k);
BigInt lucas(long k);

// Smallest k with F_k == v (so 1 maps to 1), or nullopt.
std::optional<long> fib_index(const BigInt& v);

struct ZeckendorfRep {
  std::vector<long> indices;  // strictly increasing, >= 2, gaps >= 2

  std::size_t terms() const { return indices.size(); }
  bool operator==(const ZeckendorfRep&) const = default;
};

ZeckendorfRep zeckendorf_encode(const BigInt& n);
BigInt zeckendorf_decode(const ZeckendorfRep& rep);

struct TwoTermSum {
  long m = 0;
  long n = 0;

  BigInt value() const { return fib(m) + fib(n); }
  auto operator<=>(const TwoTermSum&) const = default;
};

enum class GapPolicy {
  StrictGap2,  // Zeckendorf shape: 2 <= m, n - m >= 2
  Relaxed,     // any 1 <= m <= n (and m = 0 when include_zero)
};

// Every (m, n) with m <= n and F_m + F_n == n_value allowed by the policy,
// ascending by (m, n).
std::vector<TwoTermSum> two_term_reps(const BigInt& n_value, GapPolicy policy, bool include_zero = true);

// L_n/2 - F_n - F_{n-3}/2; zero for every n divisible by 3.
BigRational lucas_half_identity_check(long n);

// F_{2n+1} + F_{2n-5} - 2 (F_n + F_{n-2})^2, which is 4 (-1)^n.
BigInt parity_identity_check(long n);

// Norm of 1 + alpha^k from Q(sqrt 5) to Q, by residue of k mod 4.
BigInt norm_one_plus_alpha_pow(long k);

}  // namespace zeckpell
