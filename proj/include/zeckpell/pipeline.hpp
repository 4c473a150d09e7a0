#pragma once

// End-to-end run: the d = 5 case, the absolute bounds, the reduction cycles,
// the search for fundamental solutions, the Dujella-Petho passes, the final
// exhaustive box and the report.

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zeckpell/linforms.hpp"
#include "zeckpell/pell.hpp"
#include "zeckpell/reduction.hpp"
#include "zeckpell/sequences.hpp"

namespace zeckpell {

enum class Profile { Ci, Full };
const char* to_string(Profile p);

struct Config {
  Profile profile = Profile::Ci;
  ConstantMode mode = ConstantMode::Rigorous;
  long precision_cap = kDefaultPrecisionCap;
  BigInt factor_ceiling = kDefaultFactorCeiling;
  // Sweep sampling; 1 means every value. Profile defaults apply when 0.
  long lambda_stride = 0;
  long gamma5_pairs = 0;  // sampled (lambda, chi) pairs per cycle, 0 = profile default
  int cycles = 3;
  long p_search_n1 = 0;    // 0 = from the reduction cycles (full) or 100 (ci)
  long p_search_ell_min = 2;
  long p_search_ell_max = 0;  // 0 = 990 (full) or 60 (ci)
  int jobs = 0;               // 0 = hardware concurrency
  std::string cache_dir;      // empty = memory only
  std::string only_stage;     // run a single stage by id when set

  long effective_lambda_stride() const;
  long effective_gamma5_pairs() const;
  int effective_jobs() const;

  Json to_json() const;
  static Config from_json(const Json& j);
};

enum class GapClass { Strict, Relaxed };
const char* to_string(GapClass g);

struct SolutionRecord {
  BigInt d;
  int epsilon = 1;
  long ell = 1;
  long m = 0;
  long n = 0;
  BigInt value;
  GapClass gap_class = GapClass::Relaxed;

  auto operator<=>(const SolutionRecord& o) const {
    if (auto c = cmp(d, o.d); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    return std::tie(ell, m, n) <=> std::tie(o.ell, o.m, o.n);
  }
  bool operator==(const SolutionRecord& o) const {
    return d == o.d && epsilon == o.epsilon && ell == o.ell && m == o.m && n == o.n && value == o.value &&
           gap_class == o.gap_class;
  }
};

// Strict when m >= 1 and n - m >= 2 (two distinct, non-adjacent terms).
GapClass classify_gap(long m, long n);

struct StageReport {
  std::string id;
  Json inputs;
  Json outputs;
  Json certificates;
  double wall_seconds = 0;
  long precision_high_water = 0;
  std::vector<std::string> notes;
};

struct SearchBox {
  long n1_max = 44;
  long n2_max = 42;
  long ell_max = 25;

  bool valid() const { return n1_max >= 2 && n2_max >= 2 && ell_max >= 2; }
  SearchBox widened(long by) const { return {n1_max + by, n2_max + by, ell_max + by}; }
};

// Runs body(i) for i in [0, count) over `jobs` threads; exceptions are
// rethrown on the caller (the first by index).
void parallel_for(long count, int jobs, const std::function<void(long)>& body);

struct D5Result {
  std::vector<SolutionRecord> records;
  long excluded_from = 9;
  long excluded_through = 0;
  ZeckendorfRep zeckendorf_38;
  StageReport report;
};

D5Result d5_analysis(long n_bound = 300);

struct Stage1Result {
  Stage1Chain chain;
  StageReport report;
};

Stage1Result run_stage1(const Config& cfg);

struct CycleResult {
  BigInt lambda_max;
  BigInt rho_max;
  BigInt n1_max;
  BigInt n2_bound;
  BigRational log_delta;
  BigInt aM_equal_branch;
  long aM_lambda = 0;
  double gamma4_log10_min = 0;
  double gamma5_log10_min = 0;
  bool sampled = true;
  StageReport report;
};

// cycle counts from 1; it picks the lattice scaling and the printed values
// carried in compat mode.
CycleResult run_reduction_cycle(const Config& cfg, const Stage1Chain& chain, const BigInt& bound_n2, int cycle);

struct PTableRow {
  int epsilon = 1;
  long n = 0;
  long m = 0;
  long ell = 0;
  BigInt X1;
  BigInt raw_d;  // d with X1 + Y1 sqrt(raw_d) fundamental
  BigInt raw_Y1;
  NormalizedPell normalized;
};

struct PSearchResult {
  std::vector<PTableRow> rows;            // plus-sign rows first, each by (n, m, ell)
  std::vector<PTableRow> degenerate;      // X1 = 1, eps = +1
  std::vector<PTableRow> excluded_d5;     // settled by d5_analysis
  std::vector<PellSolution> deltas;       // distinct fundamental units, in table order
  StageReport report;
};

PSearchResult search_p_polynomials(long n1_max, long ell_min, long ell_max,
                                   const BigInt& factor_ceiling = kDefaultFactorCeiling, int jobs = 1);

struct DpRow {
  int s = 0;
  long index = 0;
  long ordinal = 0;
  BigInt h;
  std::string epsilon;
  ReductionOutcome outcome;
};

struct BdResult {
  std::vector<DpRow> first_pass;
  std::vector<BigInt> pass_bounds;  // n2 after each inhomogeneous pass
  BigInt n2_max;
  long ell2_max = 0;
  StageReport report;
};

BdResult run_bd_stage(const std::vector<PellSolution>& deltas, const BigInt& bound_n2, int jobs = 1);

// ell <= floor((log 2 + n2 log alpha) / log(1 + sqrt 2)).
long ell_bound_from_n2(long n2);

struct FinalBoxResult {
  std::map<BigInt, std::vector<SolutionRecord>> groups;  // only groups with >= 2 ell or tracked d
  long singleton_groups = 0;
  std::set<BigInt> exceptional;
  StageReport report;
};

// tracked: d values whose groups are reported even with a single ell.
FinalBoxResult search_final_box(const SearchBox& box, const std::set<BigInt>& tracked = {},
                                const BigInt& factor_ceiling = kDefaultFactorCeiling);

struct ProofReport {
  Config config;
  std::vector<StageReport> stages;
  std::vector<SolutionRecord> solutions;
  std::set<BigInt> exceptional_d;
  SearchBox box;
  Json versions;
};

ProofReport run_all(const Config& cfg);

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> failures;
};

inline const std::set<BigInt> kExceptionalD{2, 3, 5, 11, 30};

VerifyResult verify_theorem(const ProofReport& report);

Json to_json(const SolutionRecord& r);
SolutionRecord solution_from_json(const Json& j);
Json to_json(const StageReport& s);
StageReport stage_from_json(const Json& j);
Json to_json(const ProofReport& r);
ProofReport report_from_json(const Json& j);
Json to_json(const Stage1Chain& c);

}  // namespace zeckpell
