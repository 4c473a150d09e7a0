#include <doctest.h>

#include <atomic>
#include <tuple>

#include "zeckpell/pipeline.hpp"

using namespace zeckpell;

namespace {

// One CI run shared by the report-level tests.
const ProofReport& ci_report() {
  static const ProofReport r = [] {
    Config cfg;
    cfg.jobs = 2;
    return run_all(cfg);
  }();
  return r;
}

std::set<BigInt> values_of(const std::vector<SolutionRecord>& recs) {
  std::set<BigInt> out;
  for (const auto& r : recs) out.insert(r.value);
  return out;
}

std::set<long> ells_of(const std::vector<SolutionRecord>& recs) {
  std::set<long> out;
  for (const auto& r : recs) out.insert(r.ell);
  return out;
}

bool has(const std::vector<SolutionRecord>& recs, long ell, long m, long n) {
  for (const auto& r : recs)
    if (r.ell == ell && r.m == m && r.n == n) return true;
  return false;
}

}  // namespace

TEST_CASE("gap classes") {
  CHECK(classify_gap(3, 5) == GapClass::Strict);
  CHECK(classify_gap(1, 3) == GapClass::Strict);
  CHECK(classify_gap(0, 3) == GapClass::Relaxed);
  CHECK(classify_gap(7, 7) == GapClass::Relaxed);
  CHECK(classify_gap(2, 3) == GapClass::Relaxed);
}

TEST_CASE("ell bound from n2") {
  // (log 2 + 42 log alpha) / log(1 + sqrt 2) = 23.1
  CHECK(ell_bound_from_n2(42) == 23);
  CHECK(ell_bound_from_n2(40) == 22);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 4, [&](long i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(100, 3, [](long i) {
                    if (i == 37) throw DomainError("boom");
                  }),
                  DomainError);
}

TEST_CASE("d = 5 analysis") {
  D5Result r = d5_analysis();
  CHECK(values_of(r.records) == std::set<BigInt>{2, 9});
  CHECK(has(r.records, 1, 0, 3));
  CHECK(has(r.records, 2, 2, 6));
  CHECK(has(r.records, 2, 1, 6));
  CHECK(r.zeckendorf_38.terms() == 3);
  CHECK(r.excluded_from == 9);
  CHECK(r.excluded_through == 300);
  CHECK(r.report.certificates.at("lucas_half_identity") == true);
  for (const auto& rec : r.records) CHECK(rec.d == 5);
}

TEST_CASE("P-polynomial search at the CI size") {
  PSearchResult r = search_p_polynomials(100, 2, 60, kDefaultFactorCeiling, 2);
  using Row = std::tuple<int, long, long, long, long, long, long, long, long>;
  // sign, n, m, ell, X1, raw d, raw Y1, normalized d, normalized power
  std::vector<Row> expect{
      {1, 5, 3, 2, 2, 3, 1, 3, 1},       {1, 8, 5, 3, 2, 3, 1, 3, 1},
      {1, 11, 6, 2, 7, 12, 2, 3, 2},     {1, 11, 6, 4, 2, 3, 1, 3, 1},
      {1, 12, 10, 2, 10, 11, 3, 11, 1},  {1, 13, 6, 2, 11, 30, 2, 30, 1},
      {1, 21, 5, 2, 74, 219, 5, 219, 1}, {-1, 3, 1, 2, 1, 2, 1, 2, 1},
      {-1, 4, 0, 2, 1, 2, 1, 2, 1},      {-1, 5, 3, 3, 1, 2, 1, 2, 1},
      {-1, 23, 12, 2, 120, 14401, 1, 14401, 1},
  };
  std::vector<Row> got;
  for (const auto& row : r.rows) {
    got.emplace_back(row.epsilon, row.n, row.m, row.ell, row.X1.get_si(), row.raw_d.get_si(), row.raw_Y1.get_si(),
                     row.normalized.base.d.get_si(), row.normalized.ell);
  }
  CHECK(got == expect);
  CHECK(!r.degenerate.empty());
  for (const auto& row : r.degenerate) {
    CHECK(row.X1 == 1);
    CHECK(row.epsilon == 1);
  }
  REQUIRE(r.excluded_d5.size() == 2);
  for (const auto& row : r.excluded_d5) {
    CHECK(row.n == 6);
    CHECK(row.X1 == 2);
    CHECK(row.epsilon == -1);
  }
  std::vector<long> ds;
  for (const auto& d : r.deltas) ds.push_back(d.d.get_si());
  CHECK(ds == std::vector<long>{3, 11, 30, 219, 2, 14401});
}

TEST_CASE("Dujella-Petho passes") {
  std::vector<PellSolution> deltas;
  for (long d : {3L, 11L, 30L, 219L, 2L, 14401L}) deltas.push_back(fundamental_solution(d));
  BigRational m = ConstExpr::decimal("3.3e40").literal();
  BdResult r = run_bd_stage(deltas, BigInt(m.get_num()), 2);
  REQUIRE(r.first_pass.size() == 6);
  const long printed_h[] = {204, 204, 203, 206, 209, 203};
  const long frozen_h[] = {204, 204, 203, 205, 209, 203};
  const long frozen_index[] = {72, 73, 97, 85, 84, 80};
  for (int s = 0; s < 6; ++s) {
    CHECK(r.first_pass[s].h == frozen_h[s]);
    CHECK(r.first_pass[s].index == frozen_index[s]);
    CHECK(std::abs(r.first_pass[s].h.get_si() - printed_h[s]) <= 2);
  }
  REQUIRE(r.pass_bounds.size() >= 2);
  CHECK(r.pass_bounds[0] == 227);
  CHECK(r.pass_bounds[1] == 42);
  CHECK(r.n2_max <= 42);
  CHECK(r.ell2_max <= 25);
}

TEST_CASE("final box") {
  FinalBoxResult r = search_final_box(SearchBox{}, {219, 14401});
  CHECK(r.exceptional == kExceptionalD);
  const auto& g3 = r.groups.at(3);
  CHECK(has(g3, 2, 3, 5));
  CHECK(has(g3, 3, 5, 8));
  CHECK(has(g3, 3, 7, 7));
  CHECK(has(g3, 4, 6, 11));
  CHECK(has(g3, 1, 0, 3));
  CHECK(ells_of(g3) == std::set<long>{1, 2, 3, 4});
  const auto& g11 = r.groups.at(11);
  CHECK(values_of(g11) == std::set<BigInt>{10, 199});
  CHECK(has(g11, 1, 5, 5));
  const auto& g30 = r.groups.at(30);
  CHECK(values_of(g30) == std::set<BigInt>{11, 241});
  const auto& g2 = r.groups.at(2);
  CHECK(has(g2, 2, 1, 3));
  CHECK(has(g2, 3, 3, 5));
  CHECK(has(g2, 2, 0, 4));
  CHECK(has(g2, 1, 0, 1));
  CHECK(r.groups.at(219).size() == 1);
  CHECK(r.groups.at(219)[0].value == 10951);
  CHECK(r.groups.at(14401).size() == 1);
  CHECK(r.groups.at(14401)[0].value == 28801);
  for (const auto& [d, recs] : r.groups)
    for (const auto& rec : recs) CHECK(fib(rec.m) + fib(rec.n) == x_value(fundamental_solution(d), rec.ell));

  // widening adds no new groups with two or more ell
  FinalBoxResult wide = search_final_box(SearchBox{}.widened(5), {219, 14401});
  CHECK(wide.exceptional == r.exceptional);
}

TEST_CASE("CI run verifies") {
  const ProofReport& r = ci_report();
  VerifyResult v = verify_theorem(r);
  for (const auto& f : v.failures) MESSAGE(f);
  CHECK(v.ok);
  CHECK(r.exceptional_d == kExceptionalD);
  std::vector<std::string> ids;
  for (const auto& s : r.stages) ids.push_back(s.id);
  CHECK(ids == std::vector<std::string>{"d5", "stage1", "cycle1", "cycle2", "cycle3", "psearch", "bd", "final"});
}

TEST_CASE("property: emitted records satisfy the growth and index relations") {
  ConstExpr la = log(ConstExpr::alpha());
  for (const auto& rec : ci_report().solutions) {
    PellSolution b = fundamental_solution(rec.d);
    CHECK(fib(rec.m) + fib(rec.n) == x_value(b, rec.ell));
    ConstExpr delta = b.delta_expr();
    // delta^l / alpha^2 <= X_l < delta^l
    CHECK(compare_certified(pow(delta, rec.ell) / pow(ConstExpr::alpha(), 2), ConstExpr(rec.value)) != Ordering::Greater);
    CHECK(compare_certified(ConstExpr(rec.value), pow(delta, rec.ell)) == Ordering::Less);
    if (rec.n >= 3 && rec.gap_class == GapClass::Strict) {
      // |n - l log delta / log alpha| <= 2 and l < n
      RealInterval gap = eval(ConstExpr(rec.n) - ConstExpr(rec.ell) * log(delta) / la, 128);
      CHECK(abs(gap).hi() <= BigFloat::from_double(2.0, 64));
      CHECK(rec.ell < rec.n);
    }
  }
}

TEST_CASE("monotone stages") {
  const ProofReport& r = ci_report();
  BigInt prev;
  bool first = true;
  for (const auto& s : r.stages) {
    if (!s.outputs.contains("n2")) continue;
    BigInt n2(s.outputs.at("n2").get<std::string>());
    if (!first) CHECK(n2 <= prev);
    prev = n2;
    first = false;
  }
  CHECK(!first);
}

TEST_CASE("report JSON round trip") {
  const ProofReport& r = ci_report();
  Json j = to_json(r);
  ProofReport back = report_from_json(Json::parse(j.dump()));
  CHECK(back.solutions == r.solutions);
  CHECK(back.exceptional_d == r.exceptional_d);
  CHECK(to_json(back).dump() == j.dump());
  CHECK(verify_theorem(back).ok);
  Config c;
  c.profile = Profile::Full;
  c.mode = ConstantMode::PaperCompat;
  c.lambda_stride = 3;
  c.cache_dir = "/tmp/x";
  Config c2 = Config::from_json(c.to_json());
  CHECK(c2.to_json() == c.to_json());
  CHECK_THROWS_AS(Config::from_json(Json{{"profile", "huge"}}), ParseError);
}

TEST_CASE("tampered reports fail verification") {
  const ProofReport& r = ci_report();
  {
    ProofReport t = r;
    auto it = std::find_if(t.solutions.begin(), t.solutions.end(),
                           [](const SolutionRecord& s) { return s.d == 3 && s.ell == 4; });
    REQUIRE(it != t.solutions.end());
    t.solutions.erase(it);
    CHECK(!verify_theorem(t).ok);
  }
  {
    // d = 7: X_1 = 8 = F_0 + F_6 is real, the X_2 record is fabricated (X_2 = 127)
    ProofReport t = r;
    t.solutions.push_back({7, 1, 1, 0, 6, 8, GapClass::Relaxed});
    t.solutions.push_back({7, 1, 2, 3, 11, 91, GapClass::Strict});
    t.exceptional_d.insert(7);
    CHECK(!verify_theorem(t).ok);
  }
  {
    // a true record with a wrong gap class
    ProofReport t = r;
    for (auto& s : t.solutions)
      if (s.d == 30 && s.ell == 2) s.gap_class = GapClass::Relaxed;
    CHECK(!verify_theorem(t).ok);
  }
  {
    ProofReport t = r;
    t.box.ell_max = 1;
    CHECK(!verify_theorem(t).ok);
  }
}

TEST_CASE("stage selection stops early") {
  Config cfg;
  cfg.only_stage = "stage1";
  ProofReport r = run_all(cfg);
  REQUIRE(!r.stages.empty());
  CHECK(r.stages.back().id == "stage1");
}
