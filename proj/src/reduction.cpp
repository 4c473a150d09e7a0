#include "zeckpell/reduction.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

namespace zeckpell {

namespace {

// ---------------------------------------------------------------------------
// continued fractions

struct Euclid {
  BigRational r;
  bool done = false;

  // Next quotient, or nothing once r was an integer (the terminal quotient is
  // ambiguous for the points around r and is never reported).
  std::optional<BigInt> next() {
    if (done) return std::nullopt;
    BigInt a;
    mpz_fdiv_q(a.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
    BigRational frac = r - BigRational(a);
    if (frac == 0) {
      done = true;
      return std::nullopt;
    }
    r = 1 / frac;
    return a;
  }
};

void push_quotient(ContinuedFraction& cf, const BigInt& a) {
  std::size_t k = cf.a.size();
  cf.a.push_back(a);
  BigInt p1 = k >= 1 ? cf.p[k - 1] : BigInt(1);
  BigInt q1 = k >= 1 ? cf.q[k - 1] : BigInt(0);
  BigInt p2 = k >= 2 ? cf.p[k - 2] : BigInt(k == 1 ? 1 : 0);
  BigInt q2 = k >= 2 ? cf.q[k - 2] : BigInt(k == 1 ? 0 : 1);
  cf.p.push_back(a * p1 + p2);
  cf.q.push_back(a * q1 + q2);
}

bool target_met(const ContinuedFraction& cf, const CfTarget& until) {
  if (until.kind == CfTarget::Kind::Count) return BigInt(static_cast<long>(cf.a.size())) >= until.value;
  return !cf.q.empty() && cf.q.back() > until.value;
}

void truncate_to(ContinuedFraction& cf, const CfTarget& until) {
  std::size_t n = cf.a.size();
  if (until.kind == CfTarget::Kind::Count) {
    n = std::min<std::size_t>(n, until.value.get_ui());
  } else {
    for (std::size_t i = 0; i < cf.q.size(); ++i) {
      if (cf.q[i] > until.value) {
        n = i + 1;
        break;
      }
    }
  }
  cf.a.resize(n);
  cf.p.resize(n);
  cf.q.resize(n);
}

// One pass at fixed precision: the common prefix of the expansions of both
// enclosure endpoints.
ContinuedFraction cf_at(const ConstExpr& x, long bits, const CfTarget& until) {
  RealInterval enc = eval(x, bits);
  Euclid lo{enc.lo().to_rational()}, hi{enc.hi().to_rational()};
  ContinuedFraction cf;
  cf.source = x;
  cf.precision_bits = bits;
  while (!target_met(cf, until)) {
    auto a = lo.next();
    auto b = hi.next();
    if (!a || !b || *a != *b) break;
    push_quotient(cf, *a);
  }
  return cf;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string quotient_digest(const std::vector<BigInt>& a) {
  std::string s;
  for (const auto& v : a) {
    s += v.get_str();
    s += ',';
  }
  return hex64(fnv(s));
}

struct CfCache {
  std::mutex mu;
  std::map<std::string, ContinuedFraction> mem;
  std::optional<std::filesystem::path> dir;
};

CfCache& cache() {
  static CfCache c;
  return c;
}

std::optional<ContinuedFraction> load_from_dir(const std::filesystem::path& dir, const ConstExpr& x) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return std::nullopt;
  std::string prefix = hex64(x.canonical_hash()) + "-";
  std::string src = x.to_prefix();
  std::optional<ContinuedFraction> best;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) != 0) continue;
    try {
      std::ifstream in(entry.path());
      Json j = Json::parse(in);
      if (j.at("source").get<std::string>() != src) continue;
      std::vector<BigInt> a;
      for (const auto& s : j.at("a")) a.emplace_back(s.get<std::string>());
      if (a.empty() || quotient_digest(a) != j.at("checksum").get<std::string>()) continue;
      ContinuedFraction cf;
      cf.source = x;
      cf.precision_bits = j.at("precision").get<long>();
      for (const auto& v : a) push_quotient(cf, v);
      if (!best || cf.a.size() > best->a.size()) best = std::move(cf);
    } catch (const std::exception&) {
      // unreadable entries are simply recomputed
    }
  }
  return best;
}

void save_to_dir(const std::filesystem::path& dir, const ContinuedFraction& cf) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  Json j;
  j["source"] = cf.source.to_prefix();
  j["precision"] = cf.precision_bits;
  Json a = Json::array();
  for (const auto& v : cf.a) a.push_back(v.get_str());
  j["a"] = a;
  j["checksum"] = quotient_digest(cf.a);
  auto path = dir / (hex64(cf.source.canonical_hash()) + "-" + std::to_string(cf.precision_bits) + ".json");
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump();
  }
  std::filesystem::rename(tmp, path, ec);
}

long initial_bits(const CfTarget& until) {
  if (until.kind == CfTarget::Kind::Count) return 128 + 4 * static_cast<long>(until.value.get_si());
  return 128 + 2 * static_cast<long>(mpz_sizeinbase(until.value.get_mpz_t(), 2));
}

}  // namespace

void set_cf_cache_dir(const std::optional<std::filesystem::path>& dir) {
  std::lock_guard<std::mutex> lock(cache().mu);
  cache().dir = dir;
}

void clear_cf_cache() {
  std::lock_guard<std::mutex> lock(cache().mu);
  cache().mem.clear();
}

ContinuedFraction real_cf(const ConstExpr& x, const CfTarget& until, long max_precision_bits) {
  if (until.kind == CfTarget::Kind::Count && until.value < 1) throw DomainError("need at least one quotient");
  std::string key = x.to_prefix();
  std::optional<std::filesystem::path> dir;
  {
    std::lock_guard<std::mutex> lock(cache().mu);
    dir = cache().dir;
    auto it = cache().mem.find(key);
    if (it != cache().mem.end() && target_met(it->second, until)) {
      ContinuedFraction cf = it->second;
      truncate_to(cf, until);
      return cf;
    }
  }
  if (dir) {
    if (auto cf = load_from_dir(*dir, x); cf && target_met(*cf, until)) {
      {
        std::lock_guard<std::mutex> lock(cache().mu);
        auto& slot = cache().mem[key];
        if (slot.a.size() < cf->a.size()) slot = *cf;
      }
      truncate_to(*cf, until);
      return *cf;
    }
  }

  long bits = initial_bits(until);
  for (;;) {
    ContinuedFraction cf = cf_at(x, bits, until);
    if (target_met(cf, until)) {
      {
        std::lock_guard<std::mutex> lock(cache().mu);
        auto& slot = cache().mem[key];
        if (slot.a.size() < cf.a.size()) slot = cf;
      }
      if (dir) save_to_dir(*dir, cf);
      return cf;
    }
    if (bits >= max_precision_bits) {
      throw PrecisionExhausted("continued fraction stalls after " + std::to_string(cf.a.size()) +
                               " quotients at " + std::to_string(bits) + " bits");
    }
    bits = std::min(2 * bits, max_precision_bits);
  }
}

LegendreBound legendre_bound(const ContinuedFraction& cf, const BigInt& M) {
  for (std::size_t i = 0; i < cf.q.size(); ++i) {
    if (cf.q[i] > M) {
      LegendreBound b;
      b.N = static_cast<long>(i);
      b.ordinal = b.N + 1;
      auto it = std::max_element(cf.a.begin(), cf.a.begin() + static_cast<long>(i) + 1);
      b.aM = *it;
      b.argmax = static_cast<long>(it - cf.a.begin());
      return b;
    }
  }
  throw InsufficientExpansion("no convergent denominator exceeds " + M.get_str());
}

BigInt exponent_below(const ConstExpr& X, const ConstExpr& base) {
  RealInterval v = eval(log(X) / log(base), 128);
  return v.hi().ceil_int() - 1;
}

ReductionOutcome homogeneous_reduce(const ContinuedFraction& cf, const BigInt& M,
                                    const BigRational& rhs_coeff, const ConstExpr& base) {
  LegendreBound lb = legendre_bound(cf, M);
  ConstExpr X = ConstExpr(rhs_coeff) * ConstExpr(BigInt(lb.aM + 2)) * ConstExpr(BigInt(M * M));
  RealInterval v = eval(log(X) / log(base), 128);
  ReductionOutcome out;
  out.new_bound = v.hi().ceil_int();
  out.inputs = {{"source", cf.source.to_prefix()},
                {"M", M.get_str()},
                {"rhs_coeff", rhs_coeff.get_str()},
                {"base", base.to_prefix()}};
  out.certificate = {{"engine", "homogeneous"},
                     {"N", lb.N},
                     {"ordinal", lb.ordinal},
                     {"aM", lb.aM.get_str()},
                     {"argmax", lb.argmax},
                     {"q_N", cf.q[lb.N].get_str()},
                     {"log_ratio", v.to_string(12)}};
  return out;
}

namespace {

RealInterval dist_to_int(const RealInterval& x) {
  auto r = x.certain_round();
  if (!r) throw PrecisionInsufficient("nearest integer not certain");
  return abs(x - RealInterval::point(*r, x.precision_bits()));
}

}  // namespace

ReductionOutcome dujella_petho(const ConstExpr& tau, const ConstExpr& mu, const ConstExpr& A,
                               const ConstExpr& B, const BigInt& M, int max_tries) {
  if (M < 1) throw DomainError("M must be positive");
  BigInt sixM = 6 * M;
  ContinuedFraction cf = real_cf(tau, CfTarget::q_exceeds(sixM));
  long start = cf.certified_through();
  ReductionOutcome out;
  out.inputs = {{"tau", tau.to_prefix()},
                {"mu", mu.to_prefix()},
                {"A", A.to_prefix()},
                {"B", B.to_prefix()},
                {"M", M.get_str()},
                {"max_tries", max_tries}};
  for (long j = start; j < start + max_tries; ++j) {
    if (j > cf.certified_through()) cf = real_cf(tau, CfTarget::count(j + 1));
    const BigInt& q = cf.q[j];
    long bits = 96 + static_cast<long>(mpz_sizeinbase(q.get_mpz_t(), 2) + mpz_sizeinbase(M.get_mpz_t(), 2));
    std::optional<RealInterval> eps;
    for (int attempt = 0; attempt < 4 && !eps; ++attempt, bits *= 2) {
      try {
        RealInterval mq = eval(mu * ConstExpr(q), bits);
        RealInterval tq = eval(tau * ConstExpr(q), bits);
        RealInterval e = dist_to_int(mq) - RealInterval::point(M, bits) * dist_to_int(tq);
        if (e.certainly_positive() || e.hi().sign() <= 0) eps = e;
      } catch (const PrecisionInsufficient&) {
      }
    }
    if (!eps || !eps->certainly_positive()) continue;
    BigRational eps_lo = eps->lo().to_rational();
    RealInterval k = eval(log(A * ConstExpr(q) / ConstExpr(eps_lo)) / log(B), 128);
    out.new_bound = k.hi().floor_int();
    out.certificate = {{"engine", "dujella_petho"},
                       {"index", j},
                       {"ordinal", j + 1},
                       {"first_index", start},
                       {"q", q.get_str()},
                       {"epsilon_lower", eps_lo.get_str()},
                       {"epsilon", eps->lo().to_string(8)},
                       {"h", out.new_bound.get_str()}};
    return out;
  }
  throw NoUsableConvergent("no convergent with epsilon > 0 among " + std::to_string(max_tries) +
                           " after q > 6M for tau = " + tau.to_prefix());
}

ReductionOutcome replay(const ReductionOutcome& outcome) {
  const std::string engine = outcome.certificate.at("engine").get<std::string>();
  const Json& in = outcome.inputs;
  if (engine == "homogeneous") {
    BigInt M(in.at("M").get<std::string>());
    ConstExpr src = ConstExpr::parse(in.at("source").get<std::string>());
    return homogeneous_reduce(real_cf(src, CfTarget::q_exceeds(M)), M,
                              BigRational(in.at("rhs_coeff").get<std::string>()),
                              ConstExpr::parse(in.at("base").get<std::string>()));
  }
  if (engine == "dujella_petho") {
    return dujella_petho(ConstExpr::parse(in.at("tau").get<std::string>()),
                         ConstExpr::parse(in.at("mu").get<std::string>()),
                         ConstExpr::parse(in.at("A").get<std::string>()),
                         ConstExpr::parse(in.at("B").get<std::string>()), BigInt(in.at("M").get<std::string>()),
                         in.at("max_tries").get<int>());
  }
  throw DomainError("unknown engine " + engine);
}

// ---------------------------------------------------------------------------
// LLL

namespace {

BigInt dot(const std::vector<BigInt>& a, const std::vector<BigInt>& b) {
  BigInt s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// round(a / b) for b > 0, halves away from -infinity
BigInt round_div(const BigInt& a, const BigInt& b) {
  BigInt num = 2 * a + b, den = 2 * b, r;
  mpz_fdiv_q(r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return r;
}

void check_shape(const IntMatrix& basis) {
  if (basis.empty()) throw SingularBasis("empty basis");
  for (const auto& row : basis) {
    if (row.size() != basis[0].size()) throw DomainError("ragged basis");
  }
  if (basis.size() > basis[0].size()) throw SingularBasis("more vectors than the dimension");
}

// Integral version: all quantities stay in Z (Cohen, Alg. 2.6.7).
class IntegralLll {
 public:
  explicit IntegralLll(IntMatrix b) : n_(static_cast<int>(b.size())), b_(std::move(b)) {
    d_.assign(n_ + 1, BigInt(0));
    lam_.assign(n_, std::vector<BigInt>(n_, BigInt(0)));
  }

  LllResult run() {
    d_[0] = 1;
    d_[1] = dot(b_[0], b_[0]);
    if (d_[1] == 0) throw SingularBasis("zero vector in basis");
    int k = 2, kmax = 1;
    while (k <= n_) {
      if (k > kmax) {
        kmax = k;
        for (int j = 1; j <= k; ++j) {
          BigInt u = dot(B(k), B(j));
          for (int i = 1; i < j; ++i) u = (d_[i] * u - L(k, i) * L(j, i)) / d_[i - 1];
          if (j < k) {
            L(k, j) = u;
          } else {
            if (u == 0) throw SingularBasis("basis vectors are linearly dependent");
            d_[k] = u;
          }
        }
      }
      redi(k, k - 1);
      if (4 * d_[k] * d_[k - 2] < 3 * d_[k - 1] * d_[k - 1] - 4 * L(k, k - 1) * L(k, k - 1)) {
        swapi(k, kmax);
        k = std::max(2, k - 1);
        continue;
      }
      for (int l = k - 2; l >= 1; --l) redi(k, l);
      ++k;
    }
    LllResult res;
    res.basis = b_;
    res.swaps = swaps_;
    for (int i = 1; i <= n_; ++i) res.gs_norms_sq.emplace_back(d_[i], d_[i - 1]);
    for (auto& v : res.gs_norms_sq) v.canonicalize();
    return res;
  }

 private:
  std::vector<BigInt>& B(int i) { return b_[i - 1]; }
  BigInt& L(int k, int j) { return lam_[k - 1][j - 1]; }

  void redi(int k, int l) {
    if (2 * abs(L(k, l)) <= d_[l]) return;
    BigInt q = round_div(L(k, l), d_[l]);
    auto& bk = B(k);
    const auto& bl = B(l);
    for (std::size_t c = 0; c < bk.size(); ++c) bk[c] -= q * bl[c];
    L(k, l) -= q * d_[l];
    for (int i = 1; i < l; ++i) L(k, i) -= q * L(l, i);
  }

  void swapi(int k, int kmax) {
    ++swaps_;
    std::swap(B(k), B(k - 1));
    for (int j = 1; j <= k - 2; ++j) std::swap(L(k, j), L(k - 1, j));
    BigInt lam = L(k, k - 1);
    BigInt nb = (d_[k - 2] * d_[k] + lam * lam) / d_[k - 1];
    for (int i = k + 1; i <= kmax; ++i) {
      BigInt t = L(i, k);
      L(i, k) = (d_[k] * L(i, k - 1) - lam * t) / d_[k - 1];
      L(i, k - 1) = (nb * t + lam * L(i, k)) / d_[k];
    }
    d_[k - 1] = nb;
  }

  int n_;
  IntMatrix b_;
  std::vector<BigInt> d_;
  std::vector<std::vector<BigInt>> lam_;
  long swaps_ = 0;
};

struct RationalGs {
  std::vector<BigRational> norms;
  std::vector<std::vector<BigRational>> mu;
};

RationalGs rational_gs(const IntMatrix& basis) {
  check_shape(basis);
  std::size_t n = basis.size(), dim = basis[0].size();
  std::vector<std::vector<BigRational>> star(n, std::vector<BigRational>(dim));
  RationalGs gs;
  gs.norms.assign(n, BigRational(0));
  gs.mu.assign(n, std::vector<BigRational>(n, BigRational(0)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dim; ++c) star[i][c] = basis[i][c];
    for (std::size_t j = 0; j < i; ++j) {
      BigRational num = 0;
      for (std::size_t c = 0; c < dim; ++c) num += BigRational(basis[i][c]) * star[j][c];
      gs.mu[i][j] = num / gs.norms[j];
      for (std::size_t c = 0; c < dim; ++c) star[i][c] -= gs.mu[i][j] * star[j][c];
    }
    BigRational nn = 0;
    for (std::size_t c = 0; c < dim; ++c) nn += star[i][c] * star[i][c];
    if (nn == 0) throw SingularBasis("basis vectors are linearly dependent");
    gs.norms[i] = nn;
  }
  return gs;
}

}  // namespace

LllResult lll_reduce(const IntMatrix& basis) {
  check_shape(basis);
  return IntegralLll(basis).run();
}

std::vector<BigRational> gram_schmidt_norms(const IntMatrix& basis) { return rational_gs(basis).norms; }

bool is_lll_reduced(const IntMatrix& basis) {
  RationalGs gs = rational_gs(basis);
  BigRational half(1, 2), three_q(3, 4);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (abs(gs.mu[i][j]) > half) return false;
    }
    if (i > 0) {
      const BigRational& m = gs.mu[i][i - 1];
      if (gs.norms[i] < (three_q - m * m) * gs.norms[i - 1]) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// lattice lower bound

namespace {

BigInt round_scaled(const ConstExpr& tau, const BigInt& C) {
  long bits = 96 + static_cast<long>(mpz_sizeinbase(C.get_mpz_t(), 2));
  for (; bits <= kDefaultPrecisionCap; bits *= 2) {
    RealInterval v = eval(tau, bits) * RealInterval::point(C, bits);
    if (auto r = v.certain_round()) return *r;
  }
  throw PrecisionExhausted("cannot round C*tau for " + tau.to_prefix());
}

}  // namespace

FlacotadasResult flacotadas_lower_bound(const LatticeProblem& prob) {
  int t = prob.t();
  if (t < 2) throw DomainError("need at least two logarithms");
  if (static_cast<int>(prob.X.size()) != t) throw DomainError("need one bound per logarithm");
  BigInt xmax = *std::max_element(prob.X.begin(), prob.X.end());
  BigInt floor_c;
  mpz_pow_ui(floor_c.get_mpz_t(), BigInt(t * xmax).get_mpz_t(), static_cast<unsigned long>(t));
  if (prob.C <= floor_c) throw DomainError("C must exceed (t max X)^t");

  FlacotadasResult res;
  for (const auto& tau : prob.tau) res.rounded.push_back(round_scaled(tau, prob.C));
  if (res.rounded.back() == 0) throw SingularBasis("last scaled logarithm rounds to zero");

  IntMatrix basis(t, std::vector<BigInt>(t, BigInt(0)));
  for (int j = 0; j + 1 < t; ++j) {
    basis[j][j] = 1;
    basis[j][t - 1] = res.rounded[j];
  }
  basis[t - 1][t - 1] = res.rounded[t - 1];
  res.reduced = lll_reduce(basis);
  res.lattice_delta_sq = *std::min_element(res.reduced.gs_norms_sq.begin(), res.reduced.gs_norms_sq.end());

  res.Q = 0;
  BigRational sum = 1;
  for (int i = 0; i < t; ++i) {
    if (i + 1 < t) res.Q += BigRational(prob.X[i] * prob.X[i]);
    sum += BigRational(prob.X[i]);
  }
  res.T = sum / 2;
  if (res.lattice_delta_sq < res.T * res.T + res.Q) {
    throw HypothesisFailed("reduced lattice too short: delta^2 < T^2 + Q; raise C");
  }
  res.bound = (sqrt(ConstExpr(BigRational(res.lattice_delta_sq - res.Q))) - ConstExpr(res.T)) / ConstExpr(prob.C);
  res.log10_bound = eval(res.bound, 128).lo().log10_abs();
  return res;
}

Json FlacotadasResult::certificate() const {
  Json j;
  j["engine"] = "flacotadas";
  Json r = Json::array();
  for (const auto& v : rounded) r.push_back(v.get_str());
  j["rounded"] = r;
  Json b = Json::array();
  for (const auto& row : reduced.basis) {
    Json jr = Json::array();
    for (const auto& v : row) jr.push_back(v.get_str());
    b.push_back(jr);
  }
  j["reduced_basis"] = b;
  j["delta_sq"] = lattice_delta_sq.get_str();
  j["Q"] = Q.get_str();
  j["T"] = T.get_str();
  j["bound"] = bound.to_prefix();
  j["log10_bound"] = log10_bound;
  j["swaps"] = reduced.swaps;
  return j;
}

}  // namespace zeckpell
