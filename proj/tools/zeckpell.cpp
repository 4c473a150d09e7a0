#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "zeckpell/pipeline.hpp"

using namespace zeckpell;

namespace {

// Accepts plain integers and decimal forms such as 2.1e150 (rounded up).
BigInt parse_big(const std::string& text) {
  BigRational v = ConstExpr::decimal(text).literal();
  BigInt r;
  mpz_cdiv_q(r.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
  return r;
}

Json cf_json(const ContinuedFraction& cf) {
  Json a = Json::array(), conv = Json::array();
  for (std::size_t i = 0; i < cf.a.size(); ++i) {
    a.push_back(cf.a[i].get_str());
    conv.push_back(cf.p[i].get_str() + "/" + cf.q[i].get_str());
  }
  return {{"source", cf.source.to_prefix()},
          {"a", a},
          {"convergents", conv},
          {"certified_through", cf.certified_through()},
          {"precision_bits", cf.precision_bits}};
}

IntMatrix parse_matrix(const std::string& text) {
  Json j = Json::parse(text);
  IntMatrix m;
  for (const auto& row : j) {
    std::vector<BigInt> r;
    for (const auto& v : row) r.emplace_back(v.is_string() ? v.get<std::string>() : v.dump());
    m.push_back(r);
  }
  return m;
}

Json matrix_json(const IntMatrix& m) {
  Json j = Json::array();
  for (const auto& row : m) {
    Json r = Json::array();
    for (const auto& v : row) r.push_back(v.get_str());
    j.push_back(r);
  }
  return j;
}

void print(const Json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fibonacci two-term sums among Pell X-coordinates"};
  app.require_subcommand(1);

  std::string zeck_n;
  auto* zeck = app.add_subcommand("zeckendorf", "Zeckendorf and two-term representations of N");
  zeck->add_option("N", zeck_n)->required();

  auto* pell = app.add_subcommand("pell", "Pell equation helpers");
  pell->require_subcommand(1);
  std::string pd, pell_ell, px;
  int peps = 1;
  auto* pfund = pell->add_subcommand("fundamental", "fundamental solution of x^2 - d y^2 = +-1");
  pfund->add_option("d", pd)->required();
  auto* pxv = pell->add_subcommand("x", "X_ell for d");
  pxv->add_option("d", pd)->required();
  pxv->add_option("ell", pell_ell)->required();
  auto* pnorm = pell->add_subcommand("normalize", "squarefree d and power ell with x = X_ell");
  pnorm->add_option("x", px)->required();
  pnorm->add_option("eps", peps)->required();

  auto* bounds = app.add_subcommand("bounds", "absolute bounds");
  bounds->require_subcommand(1);
  bool chain_compat = false;
  auto* chain = bounds->add_subcommand("chain", "the linear-forms bound chain");
  chain->add_flag("--paper-compat", chain_compat, "use the printed folded constants");

  auto* reduce = app.add_subcommand("reduce", "reduction engines");
  reduce->require_subcommand(1);
  std::string cf_expr, cf_q;
  long cf_count = 0;
  auto* rcf = reduce->add_subcommand("cf", "certified continued fraction");
  rcf->add_option("expr", cf_expr, "prefix expression, e.g. \"(div (log (div (sqrt 5) 2)) (log alpha))\"")->required();
  rcf->add_option("--count", cf_count, "number of quotients");
  rcf->add_option("--q-exceeds", cf_q, "stop at the first q_N > M and report the Legendre data");
  std::string bd_tau, bd_mu, bd_A = "4.2", bd_B = "alpha", bd_M;
  int bd_tries = 25;
  auto* rbd = reduce->add_subcommand("bd", "Dujella-Petho reduction");
  rbd->add_option("--tau", bd_tau)->required();
  rbd->add_option("--mu", bd_mu)->required();
  rbd->add_option("--A", bd_A);
  rbd->add_option("--B", bd_B);
  rbd->add_option("--M", bd_M)->required();
  rbd->add_option("--tries", bd_tries);
  std::string lll_in;
  auto* rlll = reduce->add_subcommand("lll", "integral LLL on the rows of a JSON matrix");
  rlll->add_option("matrix", lll_in, "JSON matrix or @file")->required();

  auto* prove = app.add_subcommand("prove", "full pipeline");
  prove->require_subcommand(1);
  std::string profile = "ci", stage, out, config_file, cache_dir;
  bool compat = false;
  int jobs = 0;
  auto* run = prove->add_subcommand("run", "run every stage and write the report");
  run->add_option("--profile", profile)->check(CLI::IsMember({"ci", "full"}));
  run->add_flag("--paper-compat", compat);
  run->add_option("--stage", stage, "stop after this stage id");
  run->add_option("--out", out, "report path (stdout when omitted)");
  run->add_option("--config", config_file, "JSON config file");
  run->add_option("--jobs", jobs);
  run->add_option("--cache-dir", cache_dir);
  std::string verify_path;
  auto* verify = prove->add_subcommand("verify", "re-check a report");
  verify->add_option("report", verify_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*zeck) {
      BigInt n(zeck_n);
      ZeckendorfRep z = zeckendorf_encode(n);
      Json two = Json::array();
      for (const auto& r : two_term_reps(n, GapPolicy::Relaxed, true)) {
        two.push_back({{"m", r.m}, {"n", r.n}, {"strict", classify_gap(r.m, r.n) == GapClass::Strict}});
      }
      print({{"N", n.get_str()}, {"indices", z.indices}, {"terms", z.terms()}, {"two_term_reps", two}});
    } else if (*pfund) {
      PellSolution s = fundamental_solution(BigInt(pd));
      print({{"d", s.d.get_str()}, {"X1", s.X1.get_str()}, {"Y1", s.Y1.get_str()}, {"epsilon", s.epsilon}});
    } else if (*pxv) {
      PellSolution s = fundamental_solution(BigInt(pd));
      print({{"d", s.d.get_str()}, {"ell", std::stol(pell_ell)}, {"X", x_value(s, std::stol(pell_ell)).get_str()}});
    } else if (*pnorm) {
      NormalizedPell np = normalize_to_fundamental(BigInt(px), peps);
      print({{"d", np.base.d.get_str()},
             {"X1", np.base.X1.get_str()},
             {"Y1", np.base.Y1.get_str()},
             {"epsilon", np.base.epsilon},
             {"ell", np.ell}});
    } else if (*chain) {
      print(to_json(stage1_bound_chain(chain_compat ? ConstantMode::PaperCompat : ConstantMode::Rigorous)));
    } else if (*rcf) {
      ConstExpr x = ConstExpr::parse(cf_expr);
      if (!cf_q.empty()) {
        BigInt M = parse_big(cf_q);
        ContinuedFraction cf = real_cf(x, CfTarget::q_exceeds(M));
        LegendreBound lb = legendre_bound(cf, M);
        Json j = cf_json(cf);
        j["legendre"] = {{"N", lb.N}, {"ordinal", lb.ordinal}, {"aM", lb.aM.get_str()}, {"argmax", lb.argmax}};
        print(j);
      } else {
        print(cf_json(real_cf(x, CfTarget::count(cf_count > 0 ? cf_count : 12))));
      }
    } else if (*rbd) {
      ReductionOutcome o = dujella_petho(ConstExpr::parse(bd_tau), ConstExpr::parse(bd_mu), ConstExpr::parse(bd_A),
                                         ConstExpr::parse(bd_B), parse_big(bd_M), bd_tries);
      print({{"new_bound", o.new_bound.get_str()}, {"certificate", o.certificate}, {"inputs", o.inputs}});
    } else if (*rlll) {
      std::string text = lll_in;
      if (!text.empty() && text[0] == '@') {
        std::ifstream in(text.substr(1));
        text.assign(std::istreambuf_iterator<char>(in), {});
      }
      LllResult r = lll_reduce(parse_matrix(text));
      Json norms = Json::array();
      for (const auto& v : r.gs_norms_sq) norms.push_back(v.get_str());
      print({{"basis", matrix_json(r.basis)}, {"gs_norms_sq", norms}, {"swaps", r.swaps},
             {"reduced", is_lll_reduced(r.basis)}});
    } else if (*run) {
      Config cfg;
      if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw ParseError("cannot open " + config_file);
        cfg = Config::from_json(Json::parse(in));
      }
      if (run->count("--profile")) cfg.profile = profile == "ci" ? Profile::Ci : Profile::Full;
      if (compat) cfg.mode = ConstantMode::PaperCompat;
      if (!stage.empty()) cfg.only_stage = stage;
      if (jobs > 0) cfg.jobs = jobs;
      if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
      ProofReport report = run_all(cfg);
      Json j = to_json(report);
      if (out.empty()) {
        print(j);
      } else {
        std::ofstream os(out);
        os << j.dump(2) << "\n";
        std::cerr << "wrote " << out << "\n";
      }
      if (stage.empty()) {
        VerifyResult v = verify_theorem(report);
        std::cerr << (v.ok ? "verify: pass" : "verify: FAIL") << "\n";
        for (const auto& f : v.failures) std::cerr << "  " << f << "\n";
        return v.ok ? 0 : 1;
      }
    } else if (*verify) {
      std::ifstream in(verify_path);
      if (!in) throw ParseError("cannot open " + verify_path);
      ProofReport report = report_from_json(Json::parse(in));
      VerifyResult v = verify_theorem(report);
      std::cout << (v.ok ? "pass" : "FAIL") << "\n";
      for (const auto& f : v.failures) std::cout << "  " << f << "\n";
      return v.ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
