#include "zeckpell/pell.hpp"

#include <algorithm>
#include <cmath>

namespace zeckpell {

PeriodicCF sqrt_cf(const BigInt& d) {
  if (d < 2) throw DomainError("sqrt_cf needs d >= 2");
  if (mpz_perfect_square_p(d.get_mpz_t())) throw PerfectSquare("d = " + d.get_str() + " is a perfect square");
  PeriodicCF cf;
  mpz_sqrt(cf.a0.get_mpz_t(), d.get_mpz_t());
  BigInt m = 0, den = 1, a = cf.a0;
  do {
    m = den * a - m;
    den = (d - m * m) / den;
    a = (cf.a0 + m) / den;
    cf.period.push_back(a);
  } while (a != 2 * cf.a0);
  return cf;
}

ConstExpr PellSolution::delta_expr() const {
  ConstExpr root = sqrt(ConstExpr(d));
  if (Y1 == 1) return ConstExpr(X1) + root;
  return ConstExpr(X1) + ConstExpr(Y1) * root;
}

PellSolution fundamental_solution(const BigInt& d) {
  PeriodicCF cf = sqrt_cf(d);
  std::size_t r = cf.period.size();
  // Convergent p_{r-1}/q_{r-1} of [a0; period...].
  BigInt p_prev = 1, q_prev = 0, p = cf.a0, q = 1;
  for (std::size_t i = 0; i + 1 < r; ++i) {
    BigInt pn = cf.period[i] * p + p_prev;
    BigInt qn = cf.period[i] * q + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
  }
  PellSolution s{d, p, q, r % 2 == 1 ? -1 : 1};
  if (p * p - d * q * q != s.epsilon) throw std::logic_error("fundamental_solution: norm check failed");
  return s;
}

BigInt x_value(const PellSolution& sol, long ell) {
  return p_poly_eval(ell, sol.epsilon, sol.X1);
}

XSequence::XSequence(PellSolution base) : base_(std::move(base)), values_{BigInt(1), base_.X1} {}

BigInt XSequence::at(long ell) const {
  if (ell < 0) throw DomainError("negative Pell index");
  std::lock_guard lock(mu_);
  while (static_cast<long>(values_.size()) <= ell) {
    std::size_t s = values_.size();
    values_.push_back(2 * base_.X1 * values_[s - 1] - base_.epsilon * values_[s - 2]);
  }
  return values_[ell];
}

BigInt p_poly_eval(long ell, int epsilon, const BigInt& x) {
  if (ell < 0) throw DomainError("negative Pell index");
  if (ell == 0) return 1;
  BigInt prev = 1, cur = x, two_x = 2 * x;
  for (long k = 1; k < ell; ++k) {
    BigInt next = two_x * cur - epsilon * prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

std::optional<BigInt> p_poly_invert(long ell, int epsilon, const BigInt& target) {
  if (ell < 1) throw DomainError("p_poly_invert needs ell >= 1");
  if (target < 1) return std::nullopt;
  if (ell == 1) return target;
  // x + sqrt(x^2 -+ 1) is within 1/(2x) of 2x, so (2 target)^(1/ell) / 2 is
  // within one unit of the root.
  long bits = static_cast<long>(mpz_sizeinbase(target.get_mpz_t(), 2));
  BigFloat seed(bits / ell + 64);
  BigFloat two_t = BigFloat::from_int(2 * target, bits + 2, MPFR_RNDN);
  mpfr_rootn_ui(seed.get(), two_t.get(), static_cast<unsigned long>(ell), MPFR_RNDN);
  mpfr_div_2ui(seed.get(), seed.get(), 1, MPFR_RNDN);
  BigInt base = seed.floor_int();
  for (int delta : {0, 1, -1, 2}) {
    BigInt x = base + delta;
    if (x < 1) continue;
    if (p_poly_eval(ell, epsilon, x) == target) return x;
  }
  return std::nullopt;
}

namespace {

BigInt pollard_brent(const BigInt& n, unsigned long c_value) {
  if (mpz_even_p(n.get_mpz_t())) return 2;
  BigInt c = c_value, y = 2 + c_value, x, ys, q = 1, g = 1, diff;
  const unsigned long block = 128;
  unsigned long r = 1;
  auto step = [&](BigInt& v) {
    v = v * v + c;
    mpz_mod(v.get_mpz_t(), v.get_mpz_t(), n.get_mpz_t());
  };
  while (g == 1) {
    x = y;
    for (unsigned long i = 0; i < r; ++i) step(y);
    unsigned long k = 0;
    while (k < r && g == 1) {
      ys = y;
      unsigned long lim = std::min(block, r - k);
      for (unsigned long i = 0; i < lim; ++i) {
        step(y);
        diff = x - y;
        q = q * abs(diff);
        mpz_mod(q.get_mpz_t(), q.get_mpz_t(), n.get_mpz_t());
      }
      mpz_gcd(g.get_mpz_t(), q.get_mpz_t(), n.get_mpz_t());
      k += lim;
    }
    r *= 2;
  }
  if (g == n) {
    do {
      step(ys);
      diff = x - ys;
      mpz_gcd(g.get_mpz_t(), diff.get_mpz_t(), n.get_mpz_t());
    } while (g == 1);
  }
  return g;
}

bool is_prime(const BigInt& n) { return mpz_probab_prime_p(n.get_mpz_t(), 40) > 0; }

void split_into(const BigInt& n, std::vector<BigInt>& primes) {
  if (n == 1) return;
  if (is_prime(n)) {
    primes.push_back(n);
    return;
  }
  for (unsigned long k = 2; k < mpz_sizeinbase(n.get_mpz_t(), 2); ++k) {
    BigInt root;
    if (mpz_root(root.get_mpz_t(), n.get_mpz_t(), k)) {
      for (unsigned long i = 0; i < k; ++i) split_into(root, primes);
      return;
    }
  }
  for (unsigned long c = 1;; ++c) {
    BigInt g = pollard_brent(n, c);
    if (g != n && g != 1) {
      split_into(g, primes);
      split_into(n / g, primes);
      return;
    }
  }
}

}  // namespace

std::vector<std::pair<BigInt, unsigned>> factorize(const BigInt& n, const BigInt& ceiling) {
  if (n < 1) throw DomainError("factorize needs n >= 1");
  if (n > ceiling) throw FactoringCeilingExceeded(n.get_str() + " exceeds the factoring ceiling");
  std::vector<BigInt> primes;
  BigInt rest = n;
  for (unsigned long p = 2; p < 10000; p += (p == 2 ? 1 : 2)) {
    if (BigInt(p) * p > rest) break;
    while (mpz_divisible_ui_p(rest.get_mpz_t(), p)) {
      mpz_divexact_ui(rest.get_mpz_t(), rest.get_mpz_t(), p);
      primes.emplace_back(p);
    }
  }
  split_into(rest, primes);
  std::sort(primes.begin(), primes.end());
  std::vector<std::pair<BigInt, unsigned>> out;
  for (const auto& p : primes) {
    if (!out.empty() && out.back().first == p) {
      ++out.back().second;
    } else {
      out.emplace_back(p, 1);
    }
  }
  return out;
}

SquarefreeSplit squarefree_part(const BigInt& n, const BigInt& ceiling) {
  SquarefreeSplit s{1, 1};
  for (const auto& [p, e] : factorize(n, ceiling)) {
    if (e % 2) s.d *= p;
    for (unsigned i = 0; i < e / 2; ++i) s.y *= p;
  }
  return s;
}

NormalizedPell normalize_to_fundamental(const BigInt& x, int epsilon, const BigInt& ceiling) {
  if (epsilon != 1 && epsilon != -1) throw DomainError("epsilon must be +1 or -1");
  if (x < 1) throw DomainError("x must be positive");
  BigInt norm = x * x - epsilon;
  if (norm == 0) throw DomainError("x = 1 with epsilon = +1 has y = 0");
  SquarefreeSplit split = squarefree_part(norm, ceiling);
  const BigInt& d = split.d;
  // The fundamental unit is the ell-th root of x + y sqrt d with ell largest.
  // X_ell >= (1 + sqrt 2)^ell / 2 > 2^ell / 2.
  long max_ell = static_cast<long>(mpz_sizeinbase(x.get_mpz_t(), 2)) + 1;
  for (long ell = max_ell; ell >= 1; --ell) {
    for (int eps0 : {1, -1}) {
      int power_sign = (ell % 2 == 0) ? 1 : eps0;
      if (power_sign != epsilon) continue;
      auto x0 = p_poly_invert(ell, eps0, x);
      if (!x0) continue;
      BigInt n0 = (*x0) * (*x0) - eps0;
      if (n0 <= 0 || !mpz_divisible_p(n0.get_mpz_t(), d.get_mpz_t())) continue;
      BigInt y2 = n0 / d, y0;
      if (!mpz_perfect_square_p(y2.get_mpz_t())) continue;
      mpz_sqrt(y0.get_mpz_t(), y2.get_mpz_t());
      return {PellSolution{d, *x0, y0, eps0}, ell};
    }
  }
  throw std::logic_error("normalize_to_fundamental: no root found");
}

}  // namespace zeckpell
