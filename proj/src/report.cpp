#include <gmp.h>
#include <mpfr.h>

#include <map>

#include "zeckpell/pipeline.hpp"

namespace zeckpell {

Json Config::to_json() const {
  return {{"profile", zeckpell::to_string(profile)},
          {"mode", zeckpell::to_string(mode)},
          {"precision_cap", precision_cap},
          {"factor_ceiling", factor_ceiling.get_str()},
          {"lambda_stride", lambda_stride},
          {"gamma5_pairs", gamma5_pairs},
          {"cycles", cycles},
          {"p_search_n1", p_search_n1},
          {"p_search_ell_min", p_search_ell_min},
          {"p_search_ell_max", p_search_ell_max},
          {"jobs", jobs},
          {"cache_dir", cache_dir},
          {"only_stage", only_stage}};
}

Config Config::from_json(const Json& j) {
  Config c;
  if (j.contains("profile")) {
    std::string p = j.at("profile").get<std::string>();
    if (p != "ci" && p != "full") throw ParseError("unknown profile " + p);
    c.profile = p == "ci" ? Profile::Ci : Profile::Full;
  }
  if (j.contains("mode")) {
    std::string m = j.at("mode").get<std::string>();
    if (m != "rigorous" && m != "paper-compat") throw ParseError("unknown mode " + m);
    c.mode = m == "rigorous" ? ConstantMode::Rigorous : ConstantMode::PaperCompat;
  }
  auto get_long = [&](const char* key, long& out) {
    if (j.contains(key)) out = j.at(key).get<long>();
  };
  get_long("precision_cap", c.precision_cap);
  get_long("lambda_stride", c.lambda_stride);
  get_long("gamma5_pairs", c.gamma5_pairs);
  get_long("p_search_n1", c.p_search_n1);
  get_long("p_search_ell_min", c.p_search_ell_min);
  get_long("p_search_ell_max", c.p_search_ell_max);
  if (j.contains("factor_ceiling")) c.factor_ceiling = BigInt(j.at("factor_ceiling").get<std::string>());
  if (j.contains("cycles")) c.cycles = j.at("cycles").get<int>();
  if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
  if (j.contains("cache_dir")) c.cache_dir = j.at("cache_dir").get<std::string>();
  if (j.contains("only_stage")) c.only_stage = j.at("only_stage").get<std::string>();
  return c;
}

Json to_json(const SolutionRecord& r) {
  return {{"d", r.d.get_str()},
          {"epsilon", r.epsilon},
          {"ell", r.ell},
          {"m", r.m},
          {"n", r.n},
          {"value", r.value.get_str()},
          {"gap_class", to_string(r.gap_class)}};
}

SolutionRecord solution_from_json(const Json& j) {
  SolutionRecord r;
  r.d = BigInt(j.at("d").get<std::string>());
  r.epsilon = j.at("epsilon").get<int>();
  r.ell = j.at("ell").get<long>();
  r.m = j.at("m").get<long>();
  r.n = j.at("n").get<long>();
  r.value = BigInt(j.at("value").get<std::string>());
  std::string g = j.at("gap_class").get<std::string>();
  if (g != "strict" && g != "relaxed") throw ParseError("unknown gap class " + g);
  r.gap_class = g == "strict" ? GapClass::Strict : GapClass::Relaxed;
  return r;
}

Json to_json(const StageReport& s) {
  return {{"id", s.id},
          {"inputs", s.inputs},
          {"outputs", s.outputs},
          {"certificates", s.certificates},
          {"wall_seconds", s.wall_seconds},
          {"precision_high_water", s.precision_high_water},
          {"notes", s.notes}};
}

StageReport stage_from_json(const Json& j) {
  StageReport s;
  s.id = j.at("id").get<std::string>();
  s.inputs = j.value("inputs", Json::object());
  s.outputs = j.value("outputs", Json::object());
  s.certificates = j.value("certificates", Json::object());
  s.wall_seconds = j.value("wall_seconds", 0.0);
  s.precision_high_water = j.value("precision_high_water", 0L);
  s.notes = j.value("notes", std::vector<std::string>{});
  return s;
}

Json to_json(const Stage1Chain& c) {
  Json steps = Json::array();
  for (const auto& s : c.steps) {
    steps.push_back({{"name", s.name}, {"meaning", s.meaning}, {"value", s.value.get_str()},
                     {"approx", s.value.get_d()}});
  }
  return {{"mode", to_string(c.mode)},
          {"n2_floor", c.n2_floor.get_str()},
          {"steps", steps},
          {"bound_n1", c.bound_n1.get_str()},
          {"bound_n2", c.bound_n2.get_str()}};
}

Json to_json(const ProofReport& r) {
  Json stages = Json::array();
  for (const auto& s : r.stages) stages.push_back(to_json(s));
  Json sols = Json::array();
  for (const auto& s : r.solutions) sols.push_back(to_json(s));
  Json exc = Json::array();
  for (const auto& d : r.exceptional_d) exc.push_back(d.get_str());
  Json versions = r.versions;
  if (versions.is_null()) {
    versions = {{"zeckpell", "0.1.0"}, {"gmp", gmp_version}, {"mpfr", mpfr_get_version()}};
  }
  return {{"config", r.config.to_json()},
          {"stages", stages},
          {"solutions", sols},
          {"exceptional_d", exc},
          {"box", {{"n1_max", r.box.n1_max}, {"n2_max", r.box.n2_max}, {"ell_max", r.box.ell_max}}},
          {"versions", versions}};
}

ProofReport report_from_json(const Json& j) {
  ProofReport r;
  r.config = Config::from_json(j.value("config", Json::object()));
  for (const auto& s : j.at("stages")) r.stages.push_back(stage_from_json(s));
  for (const auto& s : j.at("solutions")) r.solutions.push_back(solution_from_json(s));
  for (const auto& d : j.at("exceptional_d")) r.exceptional_d.insert(BigInt(d.get<std::string>()));
  if (j.contains("box")) {
    const Json& b = j.at("box");
    r.box = {b.at("n1_max").get<long>(), b.at("n2_max").get<long>(), b.at("ell_max").get<long>()};
  }
  r.versions = j.value("versions", Json::object());
  return r;
}

VerifyResult verify_theorem(const ProofReport& report) {
  VerifyResult res;
  auto fail = [&](const std::string& msg) {
    res.ok = false;
    res.failures.push_back(msg);
  };
  if (!report.box.valid()) fail("search box is invalid");
  long ncap = std::max(report.box.n1_max, report.box.n2_max);

  std::map<BigInt, PellSolution> bases;
  std::map<BigInt, std::set<SolutionRecord>> by_d;
  for (const auto& r : report.solutions) {
    std::string tag = "record d=" + r.d.get_str() + " ell=" + std::to_string(r.ell) + " (m,n)=(" +
                      std::to_string(r.m) + "," + std::to_string(r.n) + ")";
    if (r.d < 2 || r.ell < 1 || r.m < 0 || r.n < r.m) {
      fail(tag + ": malformed");
      continue;
    }
    if (fib(r.m) + fib(r.n) != r.value) fail(tag + ": F_m + F_n != value");
    try {
      auto it = bases.find(r.d);
      if (it == bases.end()) it = bases.emplace(r.d, fundamental_solution(r.d)).first;
      const PellSolution& b = it->second;
      if (x_value(b, r.ell) != r.value) fail(tag + ": value is not X_ell");
      int eps = (r.ell % 2 == 1) ? b.epsilon : 1;
      if (eps != r.epsilon) fail(tag + ": wrong sign");
    } catch (const Error& e) {
      fail(tag + ": " + e.what());
      continue;
    }
    if (classify_gap(r.m, r.n) != r.gap_class) fail(tag + ": wrong gap class");
    by_d[r.d].insert(r);
  }

  // Completeness inside the box for every d that appears.
  for (const auto& [d, recs] : by_d) {
    auto it = bases.find(d);
    if (it == bases.end()) continue;
    std::set<SolutionRecord> expect;
    BigInt limit = 2 * fib(ncap);
    for (long l = 1; l <= report.box.ell_max; ++l) {
      BigInt x = x_value(it->second, l);
      if (x > limit) break;
      int eps = (l % 2 == 1) ? it->second.epsilon : 1;
      for (const auto& t : two_term_reps(x, GapPolicy::Relaxed, true)) {
        if (t.n <= ncap) expect.insert({d, eps, l, t.m, t.n, x, classify_gap(t.m, t.n)});
      }
    }
    if (expect != recs) fail("d=" + d.get_str() + ": records differ from a fresh enumeration of the box");
  }

  std::set<BigInt> exceptional;
  std::map<BigInt, std::set<long>> ells;
  for (const auto& [d, recs] : by_d) {
    for (const auto& r : recs) ells[d].insert(r.ell);
    if (ells[d].size() >= 2) exceptional.insert(d);
  }
  if (exceptional != report.exceptional_d) fail("listed exceptional set differs from the records");
  if (exceptional != kExceptionalD) {
    std::string got;
    for (const auto& d : exceptional) got += d.get_str() + " ";
    fail("exceptional set is {" + got + "}, expected {2 3 5 11 30}");
  }
  for (long d : {219L, 14401L}) {
    auto it = ells.find(BigInt(d));
    if (it == ells.end() || it->second.size() != 1) fail("d=" + std::to_string(d) + " must have exactly one ell");
  }
  return res;
}

}  // namespace zeckpell
