#include "zeckpell/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace zeckpell {

const char* to_string(Profile p) { return p == Profile::Ci ? "ci" : "full"; }

const char* to_string(GapClass g) { return g == GapClass::Strict ? "strict" : "relaxed"; }

GapClass classify_gap(long m, long n) {
  return (m >= 1 && n - m >= 2) ? GapClass::Strict : GapClass::Relaxed;
}

long Config::effective_lambda_stride() const {
  if (lambda_stride > 0) return lambda_stride;
  return profile == Profile::Ci ? 97 : 1;
}

long Config::effective_gamma5_pairs() const {
  if (gamma5_pairs > 0) return gamma5_pairs;
  return profile == Profile::Ci ? 4 : 0;  // 0: the full grid
}

int Config::effective_jobs() const {
  if (jobs > 0) return jobs;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(long count, int jobs, const std::function<void(long)>& body) {
  if (count <= 0) return;
  long workers = std::max<long>(1, std::min<long>(jobs, count));
  if (workers == 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex mu;
  long failed_at = count;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (long w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

using Clock = std::chrono::steady_clock;

struct StageTimer {
  StageReport& report;
  Clock::time_point start = Clock::now();
  explicit StageTimer(StageReport& r) : report(r) { reset_precision_high_water(); }
  ~StageTimer() {
    report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report.precision_high_water = precision_high_water();
  }
};

BigInt dec_int(const char* text) {
  BigRational v = ConstExpr::decimal(text).literal();
  BigInt r;
  mpz_cdiv_q(r.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
  return r;
}

std::string sci(const BigInt& v) {
  std::string s = BigInt(abs(v)).get_str();
  if (s.size() <= 12) return v.get_str();
  std::string out = (v < 0 ? "-" : "") + s.substr(0, 1) + "." + s.substr(1, 3) + "e" + std::to_string(s.size() - 1);
  return out;
}

// Carries a printed upper bound only when the computed one does not exceed it.
BigInt carry_upper(const BigInt& computed, const std::optional<BigInt>& printed, const std::string& name,
                   StageReport& rep) {
  if (!printed) return computed;
  if (computed <= *printed) {
    rep.notes.push_back(name + ": printed " + sci(*printed) + " carried (computed " + sci(computed) + ")");
    return *printed;
  }
  rep.notes.push_back(name + ": printed " + sci(*printed) + " is below the computed " + sci(computed) +
                      "; computed value kept");
  return computed;
}

// Lower bounds: the printed value is used only when the computed one is at least as large.
BigRational carry_lower(const BigRational& computed, const std::optional<BigRational>& printed,
                        const std::string& name, StageReport& rep) {
  if (!printed) return computed;
  if (computed >= *printed) {
    rep.notes.push_back(name + ": printed lower bound carried");
    return *printed;
  }
  rep.notes.push_back(name + ": printed lower bound exceeds the computed one; computed kept");
  return computed;
}

const ConstExpr& alpha() {
  static const ConstExpr a = ConstExpr::alpha();
  return a;
}

ConstExpr log_one_plus_alpha_inv(long k) { return log(ConstExpr(1) + pow(alpha(), -k)); }

}  // namespace

// ---------------------------------------------------------------------------

D5Result d5_analysis(long n_bound) {
  D5Result res;
  res.report.id = "d5";
  StageTimer timer(res.report);
  res.report.inputs = {{"n_bound", n_bound}};
  PellSolution base = fundamental_solution(5);
  Json ident = Json::array();
  bool identities_ok = true;
  for (long ell = 1; 3 * ell <= n_bound; ++ell) {
    long n = 3 * ell;
    BigInt x = x_value(base, ell);
    bool ok = 2 * x == lucas(n) && lucas_half_identity_check(n) == 0;
    identities_ok = identities_ok && ok;
    int eps = (ell % 2 == 1) ? base.epsilon : 1;
    for (const auto& r : two_term_reps(x, GapPolicy::Relaxed, true)) {
      res.records.push_back({5, eps, ell, r.m, r.n, x, classify_gap(r.m, r.n)});
    }
    if (n >= 9) {
      // X = F_n + F_{n-3}/2 with F_{n-5} < F_{n-3}/2 < F_{n-4}: at least three terms.
      bool between = 2 * fib(n - 5) < fib(n - 3) && fib(n - 3) < 2 * fib(n - 4);
      if (!between) identities_ok = false;
      res.excluded_through = n;
    }
  }
  res.zeckendorf_38 = zeckendorf_encode(38);
  Json recs = Json::array();
  for (const auto& r : res.records) recs.push_back(to_json(r));
  Json z = Json::array();
  for (long i : res.zeckendorf_38.indices) z.push_back(i);
  res.report.outputs = {{"records", recs},
                        {"excluded_n_from", res.excluded_from},
                        {"excluded_n_through", res.excluded_through},
                        {"zeckendorf_38", z}};
  res.report.certificates = {{"lucas_half_identity", identities_ok},
                             {"fundamental", {{"X1", base.X1.get_str()}, {"Y1", base.Y1.get_str()},
                                              {"epsilon", base.epsilon}}}};
  return res;
}

// ---------------------------------------------------------------------------

Stage1Result run_stage1(const Config& cfg) {
  Stage1Result res;
  res.report.id = "stage1";
  StageTimer timer(res.report);
  res.chain = stage1_bound_chain(cfg.mode);
  res.report.inputs = {{"mode", to_string(cfg.mode)}};
  Json out = {{"n1", res.chain.bound_n1.get_str()}, {"n2", res.chain.bound_n2.get_str()}};
  if (cfg.mode == ConstantMode::PaperCompat) {
    BigInt n1c = carry_upper(res.chain.bound_n1, dec_int("4e57"), "n1", res.report);
    BigInt n2c = carry_upper(res.chain.bound_n2, dec_int("2.1e150"), "n2", res.report);
    out["n1_ceiling"] = n1c.get_str();
    out["n2_ceiling"] = n2c.get_str();
  }
  res.report.outputs = out;
  res.report.certificates = to_json(res.chain);
  return res;
}

// ---------------------------------------------------------------------------

namespace {

struct CyclePrinted {
  std::optional<BigInt> X;
  std::optional<BigRational> gamma4_min;
  std::optional<BigInt> rho;
  std::optional<BigRational> gamma5_min;
  std::optional<BigInt> n1;
  std::optional<BigInt> n2;
};

CyclePrinted printed_for(int cycle) {
  auto r = [](const char* s) { return ConstExpr::decimal(s).literal(); };
  switch (cycle) {
    case 1: return {dec_int("7.2e150"), r("1e-608"), BigInt(3635), r("1e-1215"), BigInt(6545), dec_int("4.4e41")};
    case 2: return {dec_int("1.5e42"), r("7.9e-174"), BigInt(1035), r("2.7e-347"), BigInt(1870), std::nullopt};
    case 3: return {std::nullopt, std::nullopt, std::nullopt, std::nullopt, BigInt(1811), dec_int("3.3e40")};
    default: return {};
  }
}

BigInt scaled_power(long mult, const BigInt& X, unsigned long e) {
  BigInt base = mult * X, r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
  return r;
}

// Robust positive lower endpoint of a tiny positive constant.
BigRational positive_lower(const ConstExpr& e) {
  for (long bits = 128; bits <= kDefaultPrecisionCap; bits *= 2) {
    RealInterval v = eval(e, bits);
    if (v.certainly_positive()) return v.lo().to_rational();
  }
  throw PrecisionExhausted("lower bound not certified positive");
}

struct LatticeSample {
  long lambda = 0;
  long chi = 0;
  bool decomposed = false;
  BigRational lower;
  double log10 = 0;
  long c_raises = 0;
};

// Runs the lattice bound, raising C by 10^10 up to three times if the
// reduced basis is too short.
FlacotadasResult lattice_with_retry(LatticeProblem prob, long& raises) {
  for (raises = 0;; ++raises) {
    try {
      return flacotadas_lower_bound(prob);
    } catch (const HypothesisFailed&) {
      if (raises >= 3) throw;
      prob.C *= BigInt("10000000000");
    }
  }
}

LatticeSample gamma4_sample(long lambda, const BigInt& X, long mult) {
  LatticeProblem prob{{log_sqrt5_over_2(), log_one_plus_alpha_inv(lambda), log_alpha()}, {X, X, X},
                      scaled_power(mult, X, 5)};
  LatticeSample s;
  s.lambda = lambda;
  FlacotadasResult r = lattice_with_retry(prob, s.c_raises);
  s.lower = positive_lower(r.bound);
  s.log10 = r.log10_bound;
  return s;
}

LatticeSample gamma5_sample(long lambda, long chi, const BigInt& X, long mult3, long mult4) {
  LatticeSample s;
  s.lambda = lambda;
  s.chi = chi;
  auto cl = one_plus_alpha_inv_coords(lambda);
  auto cc = one_plus_alpha_inv_coords(chi);
  FlacotadasResult r;
  if (cl && cc) {
    // Rewrite over log 2, log sqrt5, log alpha, which are independent.
    s.decomposed = true;
    std::vector<LogCoords> rows{kLogSqrt5Over2Coords, *cl, *cc, LogCoords{0, 0, 1}};
    BigInt w2 = 0, w5 = 0, wa = 0;
    for (const auto& c : rows) {
      w2 += std::abs(c.log2);
      w5 += std::abs(c.log_sqrt5);
      wa += std::abs(c.log_alpha);
    }
    std::vector<BigInt> Xs{w2 * X, w5 * X, wa * X};
    BigInt xm = *std::max_element(Xs.begin(), Xs.end());
    LatticeProblem prob{{log(ConstExpr(2)), log(sqrt(ConstExpr(5))), log_alpha()}, Xs, scaled_power(mult3, xm, 5)};
    r = lattice_with_retry(prob, s.c_raises);
  } else {
    LatticeProblem prob{{log_sqrt5_over_2(), log_one_plus_alpha_inv(lambda), log_one_plus_alpha_inv(chi), log_alpha()},
                        {X, X, X, X},
                        scaled_power(mult4, X, 9)};
    r = lattice_with_retry(prob, s.c_raises);
  }
  s.lower = positive_lower(r.bound);
  s.log10 = r.log10_bound;
  return s;
}

std::vector<long> strided(long lo, long hi, long stride) {
  std::vector<long> v;
  for (long x = lo; x <= hi; x += stride) v.push_back(x);
  if (v.empty() || v.back() != hi) v.push_back(hi);
  return v;
}

}  // namespace

CycleResult run_reduction_cycle(const Config& cfg, const Stage1Chain& chain, const BigInt& M, int cycle) {
  if (M < 100) throw DomainError("reduction cycle needs bound_n2 >= 100");
  CycleResult res;
  StageReport& rep = res.report;
  rep.id = "cycle" + std::to_string(cycle);
  StageTimer timer(rep);
  const bool compat = cfg.mode == ConstantMode::PaperCompat;
  const CyclePrinted printed = compat ? printed_for(cycle) : CyclePrinted{};
  const int jobs = cfg.effective_jobs();
  rep.inputs = {{"M", M.get_str()}, {"cycle", cycle}, {"mode", to_string(cfg.mode)}};

  // Homogeneous step on tau = log(sqrt5/2)/log alpha.
  ConstExpr tau0 = log_sqrt5_over_2() / log_alpha();
  ContinuedFraction cf0 = real_cf(tau0, CfTarget::q_exceeds(M), cfg.precision_cap);
  ReductionOutcome hom = homogeneous_reduce(cf0, M, BigRational(42, 5), alpha());
  res.lambda_max = hom.new_bound;
  long lambda_max = res.lambda_max.get_si();

  // Coefficient bound for the lattice forms.
  BigInt X;
  if (compat) {
    BigInt x34;
    BigInt num = 17 * M;
    mpz_cdiv_q_ui(x34.get_mpz_t(), num.get_mpz_t(), 5);
    X = (printed.X && *printed.X >= x34) ? *printed.X : x34;
  } else {
    X = 25 * M;
  }
  long mult3 = cycle == 1 ? 20 : 7;
  long mult4 = cycle == 1 ? 7 : 11;

  // Gamma_4 sweep over lambda.
  long stride = cfg.effective_lambda_stride();
  std::vector<long> lambdas = strided(2, lambda_max, stride);
  res.sampled = stride > 1;
  std::vector<LatticeSample> g4(lambdas.size());
  parallel_for(static_cast<long>(lambdas.size()), jobs, [&](long i) { g4[i] = gamma4_sample(lambdas[i], X, mult3); });
  auto g4min = std::min_element(g4.begin(), g4.end(), [](const auto& a, const auto& b) { return a.lower < b.lower; });
  res.gamma4_log10_min = g4min->log10;
  BigRational L4 = carry_lower(g4min->lower, printed.gamma4_min, "gamma4 minimum", rep);
  BigInt rho = exponent_below(ConstExpr(BigInt(25 * M)) / ConstExpr(L4), alpha());
  res.rho_max = carry_upper(rho, printed.rho, "rho", rep);
  long rho_max = res.rho_max.get_si();

  // Gamma_5 with lambda < chi.
  std::vector<std::pair<long, long>> pairs;
  long want = cfg.effective_gamma5_pairs();
  if (want == 0) {
    for (long l : lambdas) {
      for (long c = l + 1; c <= rho_max; c += stride) pairs.emplace_back(l, c);
    }
  } else {
    std::mt19937_64 rng(0x5eed0000ULL + static_cast<unsigned>(cycle));
    for (long i = 0; i < want; ++i) {
      long l = std::uniform_int_distribution<long>(2, lambda_max)(rng);
      long c = std::uniform_int_distribution<long>(l + 1, rho_max)(rng);
      pairs.emplace_back(l, c);
    }
    res.sampled = true;
  }
  // The dependent pairs are always included.
  const long special[] = {2, 3, 6, 10};
  for (long a : special) {
    for (long b : special) {
      if (a < b && a <= lambda_max && b <= rho_max) pairs.emplace_back(a, b);
    }
  }
  std::vector<LatticeSample> g5(pairs.size());
  parallel_for(static_cast<long>(pairs.size()), jobs,
               [&](long i) { g5[i] = gamma5_sample(pairs[i].first, pairs[i].second, X, mult3, mult4); });
  auto g5min = std::min_element(g5.begin(), g5.end(), [](const auto& a, const auto& b) { return a.lower < b.lower; });
  res.gamma5_log10_min = g5min->log10;
  BigRational L5 = carry_lower(g5min->lower, printed.gamma5_min, "gamma5 minimum", rep);
  BigInt n1_g5 = 2 + exponent_below(ConstExpr(BigInt(46 * M)) / ConstExpr(L5), alpha());

  // lambda = chi: Legendre bound on every tau_lambda.
  std::vector<LegendreBound> eq(lambda_max + 1);
  parallel_for(lambda_max - 1, jobs, [&](long i) {
    long l = i + 2;
    ConstExpr t = abs(log(ConstExpr(2) / sqrt(ConstExpr(5))) + log(ConstExpr(1) + pow(alpha(), l))) / log_alpha();
    eq[l] = legendre_bound(real_cf(t, CfTarget::q_exceeds(M), cfg.precision_cap), M);
  });
  long best = 2;
  for (long l = 3; l <= lambda_max; ++l) {
    if (eq[l].aM > eq[best].aM) best = l;
  }
  res.aM_equal_branch = eq[best].aM;
  res.aM_lambda = best;
  BigInt n1_eq =
      2 + exponent_below(ConstExpr(BigInt(96 * (res.aM_equal_branch + 2) * M * M)), alpha());

  BigInt n1 = std::max({res.rho_max, n1_g5, n1_eq});
  res.n1_max = carry_upper(n1, printed.n1, "n1", rep);
  res.log_delta = log_delta_from_n1(res.n1_max.get_si(), cfg.mode);
  BigInt n2 = std::min(M, close_n2_bound(chain, res.log_delta));
  if (printed.n2 && *printed.n2 > M) {
    res.n2_bound = n2;
    rep.notes.push_back("n2: printed value exceeds the incoming bound; computed value kept");
  } else {
    res.n2_bound = carry_upper(n2, printed.n2, "n2", rep);
  }
  if (res.sampled) rep.notes.push_back("lattice sweeps sampled; minima are not certificates");

  Json g4j = Json::array();
  for (const auto& s : g4) g4j.push_back({{"lambda", s.lambda}, {"log10", s.log10}, {"c_raises", s.c_raises}});
  Json g5j = Json::array();
  for (const auto& s : g5) {
    g5j.push_back({{"lambda", s.lambda}, {"chi", s.chi}, {"log10", s.log10}, {"decomposed", s.decomposed},
                   {"c_raises", s.c_raises}});
  }
  rep.outputs = {{"lambda_max", res.lambda_max.get_str()},
                 {"rho_max", res.rho_max.get_str()},
                 {"n1_gamma5", n1_g5.get_str()},
                 {"n1_equal_branch", n1_eq.get_str()},
                 {"n1_max", res.n1_max.get_str()},
                 {"log_delta", res.log_delta.get_str()},
                 {"n2", res.n2_bound.get_str()},
                 {"sampled", res.sampled}};
  rep.certificates = {{"homogeneous", {{"inputs", hom.inputs}, {"certificate", hom.certificate}}},
                      {"X", X.get_str()},
                      {"gamma4", {{"min_log10", res.gamma4_log10_min}, {"samples", g4j}}},
                      {"gamma5", {{"min_log10", res.gamma5_log10_min}, {"samples", g5j}}},
                      {"equal_branch",
                       {{"aM", res.aM_equal_branch.get_str()},
                        {"lambda", best},
                        {"index", eq[best].argmax},
                        {"N", eq[best].N}}}};
  return res;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<BigInt> divisors(const BigInt& n, const BigInt& ceiling) {
  std::vector<BigInt> ds{1};
  for (const auto& [p, e] : factorize(n, ceiling)) {
    std::size_t sz = ds.size();
    BigInt pk = 1;
    for (unsigned k = 1; k <= e; ++k) {
      pk *= p;
      for (std::size_t i = 0; i < sz; ++i) ds.push_back(ds[i] * pk);
    }
  }
  std::sort(ds.begin(), ds.end());
  return ds;
}

// Smallest multiple d k^2 of the squarefree part for which X1 is the
// fundamental solution.
std::pair<BigInt, BigInt> raw_pell(const BigInt& X1, int eps, const BigInt& ceiling) {
  BigInt N = X1 * X1 - eps;
  SquarefreeSplit sp = squarefree_part(N, ceiling);
  for (const auto& k : divisors(sp.y, ceiling)) {
    BigInt D = sp.d * k * k;
    BigInt Y = sp.y / k;
    PellSolution f = fundamental_solution(D);
    if (f.X1 == X1 && f.Y1 == Y) return {D, Y};
  }
  return {N, 1};
}

}  // namespace

PSearchResult search_p_polynomials(long n1_max, long ell_min, long ell_max, const BigInt& factor_ceiling, int jobs) {
  PSearchResult res;
  StageReport& rep = res.report;
  rep.id = "psearch";
  StageTimer timer(rep);
  rep.inputs = {{"n1_max", n1_max}, {"ell_min", ell_min}, {"ell_max", ell_max}};
  ell_min = std::max(1L, ell_min);

  struct Target {
    long n, m;
    BigInt T;
  };
  std::vector<Target> targets;
  for (long n = 2; n <= n1_max; ++n) {
    for (long m = 0; m + 2 <= n; ++m) targets.push_back({n, m, fib(m) + fib(n)});
  }
  // P_ell at the smallest admissible X1 (2 for the plus sign, 1 for minus).
  std::vector<BigInt> floor_plus(ell_max + 1), floor_minus(ell_max + 1);
  for (long l = 1; l <= ell_max; ++l) {
    floor_plus[l] = p_poly_eval(l, 1, 2);
    floor_minus[l] = p_poly_eval(l, -1, 1);
  }

  std::vector<std::vector<PTableRow>> found(targets.size());
  parallel_for(static_cast<long>(targets.size()), jobs, [&](long i) {
    const Target& t = targets[i];
    for (int eps : {1, -1}) {
      const auto& fl = eps == 1 ? floor_plus : floor_minus;
      for (long l = ell_min; l <= ell_max; ++l) {
        if (fl[l] > t.T && !(eps == 1 && t.T == 1)) break;
        auto x = p_poly_invert(l, eps, t.T);
        if (!x) continue;
        PTableRow row;
        row.epsilon = eps;
        row.n = t.n;
        row.m = t.m;
        row.ell = l;
        row.X1 = *x;
        found[i].push_back(row);
      }
    }
  });

  for (auto& v : found) {
    for (auto& row : v) {
      if (row.epsilon == 1 && row.X1 == 1) {
        res.degenerate.push_back(row);
        continue;
      }
      auto [D, Y] = raw_pell(row.X1, row.epsilon, factor_ceiling);
      row.raw_d = D;
      row.raw_Y1 = Y;
      row.normalized = normalize_to_fundamental(row.X1, row.epsilon, factor_ceiling);
      if (row.normalized.base.d == 5) {
        res.excluded_d5.push_back(row);
        continue;
      }
      res.rows.push_back(row);
    }
  }
  auto order = [](const PTableRow& a, const PTableRow& b) {
    return std::make_tuple(-a.epsilon, a.n, a.m, a.ell) < std::make_tuple(-b.epsilon, b.n, b.m, b.ell);
  };
  std::sort(res.rows.begin(), res.rows.end(), order);
  std::sort(res.degenerate.begin(), res.degenerate.end(), order);
  std::sort(res.excluded_d5.begin(), res.excluded_d5.end(), order);
  for (const auto& row : res.rows) {
    const PellSolution& b = row.normalized.base;
    if (std::find(res.deltas.begin(), res.deltas.end(), b) == res.deltas.end()) res.deltas.push_back(b);
  }

  Json rows = Json::array();
  for (const auto& r : res.rows) {
    rows.push_back({{"sign", r.epsilon},
                    {"n", r.n},
                    {"m", r.m},
                    {"ell", r.ell},
                    {"X1", r.X1.get_str()},
                    {"d", r.raw_d.get_str()},
                    {"Y1", r.raw_Y1.get_str()},
                    {"normalized_d", r.normalized.base.d.get_str()},
                    {"normalized_X1", r.normalized.base.X1.get_str()},
                    {"normalized_Y1", r.normalized.base.Y1.get_str()},
                    {"normalized_power", r.normalized.ell}});
  }
  Json deltas = Json::array();
  for (const auto& d : res.deltas) {
    deltas.push_back({{"d", d.d.get_str()}, {"X1", d.X1.get_str()}, {"Y1", d.Y1.get_str()}, {"epsilon", d.epsilon}});
  }
  Json d5 = Json::array();
  for (const auto& r : res.excluded_d5) d5.push_back({{"n", r.n}, {"m", r.m}, {"ell", r.ell}, {"X1", r.X1.get_str()}});
  rep.outputs = {{"rows", rows},
                 {"degenerate_count", res.degenerate.size()},
                 {"excluded_d5", d5},
                 {"deltas", deltas}};
  rep.certificates = {{"targets", targets.size()}};
  if (!res.degenerate.empty()) {
    rep.notes.push_back("X1 = 1 with the plus sign gives Y1 = 0 for every ell; discarded");
  }
  return res;
}

// ---------------------------------------------------------------------------

long ell_bound_from_n2(long n2) {
  RealInterval v = eval((log(ConstExpr(2)) + ConstExpr(n2) * log_alpha()) / log(ConstExpr(1) + sqrt(ConstExpr(2))), 128);
  return v.hi().floor_int().get_si();
}

namespace {

ConstExpr mu_shifted(long k) {
  return log(sqrt(ConstExpr(5)) / ConstExpr(2) / (ConstExpr(1) + pow(alpha(), -k))) / log_alpha();
}

// max over s and k in [1, kmax_s] of the second Dujella-Petho bound.
BigInt second_pass(const std::vector<ConstExpr>& taus, const std::vector<long>& kmax, const BigInt& M, int jobs,
                   Json& argmax) {
  std::vector<std::pair<int, long>> work;
  for (std::size_t s = 0; s < taus.size(); ++s) {
    for (long k = 1; k <= kmax[s]; ++k) work.emplace_back(static_cast<int>(s), k);
  }
  std::vector<BigInt> h(work.size());
  parallel_for(static_cast<long>(work.size()), jobs, [&](long i) {
    auto [s, k] = work[i];
    try {
      h[i] = dujella_petho(taus[s], mu_shifted(k), ConstExpr::decimal("47.8"), alpha(), M).new_bound;
    } catch (const NoUsableConvergent& e) {
      throw NoUsableConvergent(std::string(e.what()) + " (s = " + std::to_string(s + 1) +
                               ", n2 - m2 = " + std::to_string(k) + ")");
    }
  });
  BigInt best = 0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    if (h[i] > best) {
      best = h[i];
      argmax = {{"s", work[i].first + 1}, {"n2_minus_m2", work[i].second}};
    }
  }
  return best;
}

}  // namespace

BdResult run_bd_stage(const std::vector<PellSolution>& deltas, const BigInt& bound_n2, int jobs) {
  if (deltas.empty()) throw DomainError("no fundamental units to reduce");
  BdResult res;
  StageReport& rep = res.report;
  rep.id = "bd";
  StageTimer timer(rep);
  rep.inputs = {{"M", bound_n2.get_str()}, {"deltas", deltas.size()}};
  ConstExpr mu = log_sqrt5_over_2() / log_alpha();
  std::vector<ConstExpr> taus;
  for (const auto& d : deltas) taus.push_back(log(d.delta_expr()) / log_alpha());

  res.first_pass.resize(taus.size());
  parallel_for(static_cast<long>(taus.size()), jobs, [&](long s) {
    ReductionOutcome o = dujella_petho(taus[s], mu, ConstExpr::decimal("4.2"), alpha(), bound_n2);
    DpRow row;
    row.s = static_cast<int>(s) + 1;
    row.index = o.certificate.at("index").get<long>();
    row.ordinal = o.certificate.at("ordinal").get<long>();
    row.h = o.new_bound;
    row.epsilon = o.certificate.at("epsilon").get<std::string>();
    row.outcome = o;
    res.first_pass[s] = row;
  });
  std::vector<long> h1;
  for (const auto& r : res.first_pass) h1.push_back(r.h.get_si());

  Json passes = Json::array();
  Json argmax;
  BigInt M = second_pass(taus, h1, bound_n2, jobs, argmax);
  res.pass_bounds.push_back(M);
  passes.push_back({{"M", bound_n2.get_str()}, {"n2", M.get_str()}, {"argmax", argmax}});
  for (;;) {
    std::vector<long> kmax;
    for (long h : h1) kmax.push_back(std::min(h, M.get_si()));
    BigInt next = second_pass(taus, kmax, M, jobs, argmax);
    passes.push_back({{"M", M.get_str()}, {"n2", next.get_str()}, {"argmax", argmax}});
    if (next >= M) break;
    res.pass_bounds.push_back(next);
    M = next;
  }
  res.n2_max = M;
  res.ell2_max = ell_bound_from_n2(M.get_si());

  Json first = Json::array();
  for (const auto& r : res.first_pass) {
    first.push_back({{"s", r.s},
                     {"index", r.index},
                     {"ordinal", r.ordinal},
                     {"h", r.h.get_str()},
                     {"epsilon", r.epsilon},
                     {"inputs", r.outcome.inputs},
                     {"certificate", r.outcome.certificate}});
  }
  Json pb = Json::array();
  for (const auto& b : res.pass_bounds) pb.push_back(b.get_str());
  rep.outputs = {{"n2_max", res.n2_max.get_str()}, {"ell2_max", res.ell2_max}, {"pass_bounds", pb}};
  rep.certificates = {{"first_pass", first}, {"passes", passes}};
  return res;
}

// ---------------------------------------------------------------------------

FinalBoxResult search_final_box(const SearchBox& box, const std::set<BigInt>& tracked, const BigInt& factor_ceiling) {
  if (!box.valid()) throw DomainError("invalid search box");
  FinalBoxResult res;
  StageReport& rep = res.report;
  rep.id = "final";
  StageTimer timer(rep);
  rep.inputs = {{"n1_max", box.n1_max}, {"n2_max", box.n2_max}, {"ell_max", box.ell_max}};
  long ncap = std::max(box.n1_max, box.n2_max);

  std::set<BigInt> targets;
  for (long n = 1; n <= ncap; ++n) {
    for (long m = 0; m <= n; ++m) targets.insert(fib(m) + fib(n));
  }
  targets.erase(0);

  std::map<BigInt, PellSolution> bases;
  std::map<BigInt, std::map<long, BigInt>> values;  // d -> ell -> X_ell
  for (const auto& T : targets) {
    for (int eps : {1, -1}) {
      BigInt N = T * T - eps;
      if (N <= 0 || mpz_perfect_square_p(N.get_mpz_t())) continue;
      NormalizedPell np = normalize_to_fundamental(T, eps, factor_ceiling);
      if (np.ell > box.ell_max) continue;
      bases.emplace(np.base.d, np.base);
      values[np.base.d][np.ell] = T;
    }
  }

  auto reps_within = [&](const BigInt& v) {
    std::vector<TwoTermSum> out;
    for (const auto& r : two_term_reps(v, GapPolicy::Relaxed, true)) {
      if (r.n <= ncap) out.push_back(r);
    }
    return out;
  };

  long mismatches = 0;
  for (const auto& [d, ells] : values) {
    const PellSolution& base = bases.at(d);
    // Independent pass: walk X_ell upwards and compare.
    std::set<long> walked;
    BigInt limit = 2 * fib(ncap);
    for (long l = 1; l <= box.ell_max; ++l) {
      BigInt x = x_value(base, l);
      if (x > limit) break;
      if (!reps_within(x).empty()) walked.insert(l);
    }
    std::set<long> seen;
    for (const auto& kv : ells) seen.insert(kv.first);
    if (walked != seen) ++mismatches;

    bool keep = ells.size() >= 2 || tracked.count(d) > 0;
    if (ells.size() >= 2) res.exceptional.insert(d);
    if (!keep) {
      ++res.singleton_groups;
      continue;
    }
    auto& group = res.groups[d];
    for (const auto& [l, x] : ells) {
      int eps = (l % 2 == 1) ? base.epsilon : 1;
      for (const auto& r : reps_within(x)) group.push_back({d, eps, l, r.m, r.n, x, classify_gap(r.m, r.n)});
    }
  }

  Json groups = Json::object();
  for (const auto& [d, recs] : res.groups) {
    Json arr = Json::array();
    for (const auto& r : recs) arr.push_back(to_json(r));
    groups[d.get_str()] = arr;
  }
  Json exc = Json::array();
  for (const auto& d : res.exceptional) exc.push_back(d.get_str());
  rep.outputs = {{"groups", groups}, {"exceptional_d", exc}, {"singleton_groups", res.singleton_groups}};
  rep.certificates = {{"targets", targets.size()}, {"walk_mismatches", mismatches}};
  if (mismatches != 0) rep.notes.push_back("independent X_ell walk disagrees with the target enumeration");
  return res;
}

// ---------------------------------------------------------------------------

ProofReport run_all(const Config& cfg) {
  ProofReport report;
  report.config = cfg;
  const bool compat = cfg.mode == ConstantMode::PaperCompat;
  const int jobs = cfg.effective_jobs();
  if (!cfg.cache_dir.empty()) set_cf_cache_dir(std::filesystem::path(cfg.cache_dir));
  auto stop_after = [&](const std::string& id) { return cfg.only_stage == id; };

  D5Result d5 = d5_analysis();
  report.stages.push_back(d5.report);
  for (const auto& r : d5.records) report.solutions.push_back(r);
  if (stop_after("d5")) return report;

  Stage1Result s1 = run_stage1(cfg);
  report.stages.push_back(s1.report);
  if (stop_after("stage1")) return report;
  BigInt M = compat ? BigInt(s1.report.outputs.at("n2_ceiling").get<std::string>()) : s1.chain.bound_n2;
  BigInt n1 = compat ? BigInt(s1.report.outputs.at("n1_ceiling").get<std::string>()) : s1.chain.bound_n1;

  std::vector<BigInt> n2_trail{M}, n1_trail{n1};
  for (int c = 1; c <= cfg.cycles; ++c) {
    CycleResult cr = run_reduction_cycle(cfg, s1.chain, M, c);
    report.stages.push_back(cr.report);
    M = cr.n2_bound;
    n1 = cr.n1_max;
    n2_trail.push_back(M);
    n1_trail.push_back(n1);
    if (stop_after(cr.report.id)) return report;
  }

  long n1_search = cfg.p_search_n1 > 0 ? cfg.p_search_n1 : (cfg.profile == Profile::Ci ? 100 : n1.get_si());
  long ell_max = cfg.p_search_ell_max;
  if (ell_max <= 0) {
    ell_max = cfg.profile == Profile::Ci ? 60 : ell_bound_from_n2(n1.get_si());
    if (compat && cfg.profile == Profile::Full) ell_max = std::max(ell_max, 990L);
  }
  PSearchResult ps = search_p_polynomials(n1_search, cfg.p_search_ell_min, ell_max, cfg.factor_ceiling, jobs);
  report.stages.push_back(ps.report);
  if (stop_after("psearch")) return report;

  BdResult bd = run_bd_stage(ps.deltas, M, jobs);
  n2_trail.push_back(bd.n2_max);
  if (compat) {
    // The box as printed, when the computed one fits inside it.
    bool fits = bd.n2_max <= 42 && bd.n2_max + 2 <= 44 && bd.ell2_max <= 25;
    report.box = fits ? SearchBox{44, 42, 25} : SearchBox{bd.n2_max.get_si() + 2, bd.n2_max.get_si(), bd.ell2_max};
    bd.report.notes.push_back(fits ? "printed box n1 <= 44, n2 <= 42, ell <= 25 carried"
                                   : "printed box too small for the computed bounds; computed box used");
  } else {
    report.box = SearchBox{bd.n2_max.get_si() + 2, bd.n2_max.get_si(), bd.ell2_max};
  }
  report.stages.push_back(bd.report);
  if (stop_after("bd")) return report;

  std::set<BigInt> tracked{5};
  for (const auto& d : ps.deltas) tracked.insert(d.d);
  FinalBoxResult fb = search_final_box(report.box, tracked, cfg.factor_ceiling);
  FinalBoxResult wide = search_final_box(report.box.widened(5), tracked, cfg.factor_ceiling);
  bool stable = wide.exceptional == fb.exceptional;
  fb.report.certificates["stability"] = {{"widened_by", 5}, {"same_exceptional_set", stable}};
  if (!stable) fb.report.notes.push_back("widening the box changes the exceptional set");

  bool monotone = std::is_sorted(n2_trail.rbegin(), n2_trail.rend()) && std::is_sorted(n1_trail.rbegin(), n1_trail.rend());
  Json t2 = Json::array(), t1 = Json::array();
  for (const auto& v : n2_trail) t2.push_back(v.get_str());
  for (const auto& v : n1_trail) t1.push_back(v.get_str());
  fb.report.certificates["monotone"] = {{"n2", t2}, {"n1", t1}, {"ok", monotone}};
  report.stages.push_back(fb.report);

  std::set<SolutionRecord> all(report.solutions.begin(), report.solutions.end());
  for (const auto& [d, recs] : fb.groups) all.insert(recs.begin(), recs.end());
  report.solutions.assign(all.begin(), all.end());
  report.exceptional_d = fb.exceptional;
  return report;
}

}  // namespace zeckpell
