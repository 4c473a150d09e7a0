#include "zeckpell/sequences.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <shared_mutex>

namespace zeckpell {

namespace {

class RecurrenceTable {
 public:
  RecurrenceTable(long a0, long a1) : values_{BigInt(a0), BigInt(a1)} {}

  BigInt at(long k) {
    {
      std::shared_lock lock(mu_);
      if (k < static_cast<long>(values_.size())) return values_[k];
    }
    std::unique_lock lock(mu_);
    while (static_cast<long>(values_.size()) <= k) {
      std::size_t s = values_.size();
      values_.push_back(values_[s - 1] + values_[s - 2]);
    }
    return values_[k];
  }

  // Smallest index whose value equals v, assuming values are non-decreasing
  // from index 1 on.
  std::optional<long> index_of(const BigInt& v) {
    if (v < 0) return std::nullopt;
    if (v == values0()) return 0;
    long hi = 2;
    while (at(hi) < v) hi *= 2;
    long lo = 1;
    std::shared_lock lock(mu_);
    auto first = values_.begin() + lo;
    auto last = values_.begin() + hi + 1;
    auto it = std::lower_bound(first, last, v);
    if (it != last && *it == v) return static_cast<long>(it - values_.begin());
    return std::nullopt;
  }

 private:
  BigInt values0() {
    std::shared_lock lock(mu_);
    return values_[0];
  }

  std::shared_mutex mu_;
  std::deque<BigInt> values_;
};

RecurrenceTable& fib_table() {
  static RecurrenceTable t(0, 1);
  return t;
}

RecurrenceTable& lucas_table() {
  static RecurrenceTable t(2, 1);
  return t;
}

void require_index(long k) {
  if (k < 0) throw DomainError("negative sequence index");
}

}  // namespace

BigInt fib(long k) {
  require_index(k);
  return fib_table().at(k);
}

BigInt lucas(long k) {
  require_index(k);
  return lucas_table().at(k);
}

std::optional<long> fib_index(const BigInt& v) { return fib_table().index_of(v); }

ZeckendorfRep zeckendorf_encode(const BigInt& n) {
  if (n < 0) throw DomainError("Zeckendorf representation of a negative number");
  ZeckendorfRep rep;
  if (n == 0) return rep;
  std::vector<BigInt> f{BigInt(0), BigInt(1)};
  while (f.back() <= n) f.push_back(f[f.size() - 1] + f[f.size() - 2]);
  BigInt rest = n;
  long k = static_cast<long>(f.size()) - 2;  // largest F_k <= n
  while (rest > 0) {
    while (f[k] > rest) --k;
    rep.indices.push_back(k);
    rest -= f[k];
    k -= 2;
  }
  std::reverse(rep.indices.begin(), rep.indices.end());
  return rep;
}

BigInt zeckendorf_decode(const ZeckendorfRep& rep) {
  BigInt s = 0;
  for (long k : rep.indices) s += fib(k);
  return s;
}

std::vector<TwoTermSum> two_term_reps(const BigInt& value, GapPolicy policy, bool include_zero) {
  std::vector<TwoTermSum> out;
  if (value < 1) return out;
  // F_m <= F_n, so F_n <= value <= 2 F_n.
  for (long n = 1;; ++n) {
    BigInt fn = fib(n);
    if (fn > value) break;
    if (2 * fn < value) continue;
    BigInt rest = value - fn;
    std::vector<long> ms;
    if (rest == 0) {
      ms.push_back(0);
    } else if (rest == 1) {
      ms = {1, 2};
    } else if (auto k = fib_index(rest)) {
      ms.push_back(*k);
    }
    for (long m : ms) {
      if (m > n) continue;
      bool ok = policy == GapPolicy::StrictGap2 ? (m >= 2 && n - m >= 2) : (m >= 1 || include_zero);
      if (ok) out.push_back({m, n});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

BigRational lucas_half_identity_check(long n) {
  if (n < 3 || n % 3 != 0) throw DomainError("Lucas half identity needs n >= 3 divisible by 3");
  BigRational r = BigRational(lucas(n), 2) - BigRational(fib(n)) - BigRational(fib(n - 3), 2);
  r.canonicalize();
  return r;
}

BigInt parity_identity_check(long n) {
  if (n < 3) throw DomainError("parity identity needs n >= 3");
  BigInt s = fib(n) + fib(n - 2);
  return fib(2 * n + 1) + fib(2 * n - 5) - 2 * s * s;
}

BigInt norm_one_plus_alpha_pow(long k) {
  if (k < 1) throw DomainError("norm of 1 + alpha^k needs k >= 1");
  if (k % 2 == 1) return lucas(k);
  if (k % 4 == 2) {
    BigInt f = fib(k / 2);
    return 5 * f * f;
  }
  BigInt l = lucas(k / 2);
  return l * l;
}

}  // namespace zeckpell
