#pragma once

#include <map>
#include <string>
#include <vector>

#include "hint/corpus.hpp"

namespace hint {

struct ScoredDoc {
  std::string docid;
  double score = 0.0;
  int grade = 0;  // relevance judgment; > 0 counts as relevant
};

/// Sorts by score descending; exact score ties break by docid ascending so
/// rankings are reproducible across runs and platforms.
std::vector<ScoredDoc> ranked(std::vector<ScoredDoc> docs);

/// Fraction of the top k that is relevant. The denominator is k even when
/// fewer than k documents were ranked.
double precision_at(const std::vector<ScoredDoc>& ranking, int k);

/// Mean of precision-at-rank over the ranks holding relevant documents,
/// divided by `total_relevant` (the judged relevant count for the query,
/// which may exceed what the ranking contains).
double average_precision(const std::vector<ScoredDoc>& ranking, int total_relevant);

/// Gain 2^grade - 1, discount 1/log2(rank + 1). The ideal ranking comes
/// from `all_grades`, every judged grade for the query.
double ndcg_at(const std::vector<ScoredDoc>& ranking, int k,
               std::vector<int> all_grades);

// ---------------------------------------------------------------------------
// Aggregated evaluation
// ---------------------------------------------------------------------------

/// A run: per query, scored documents in any order (ranking is applied
/// during evaluation).
using Run = std::map<std::string, std::vector<ScoredDoc>>;

struct QueryEval {
  std::string qid;
  std::map<std::string, double> metrics;  // "map", "p@5", "ndcg@20", ...
};

struct EvalReport {
  std::vector<QueryEval> per_query;        // evaluable queries only
  std::map<std::string, double> means;
  int evaluated = 0;
  int skipped = 0;  // queries with no relevant judged document
};

/// Evaluates a run against judgments. Queries without any relevant judged
/// document cannot be scored and are excluded from all aggregates (counted
/// in `skipped`). Grades on the ScoredDocs are ignored; they are looked up
/// from `qrels`.
EvalReport evaluate_run(const Run& run, const Qrels& qrels,
                        const std::vector<int>& precision_ks = {5, 10, 20},
                        const std::vector<int>& ndcg_ks = {1, 10, 20});

std::string eval_report_to_json(const EvalReport& report);
std::string eval_report_to_csv(const EvalReport& report);

// ---------------------------------------------------------------------------
// Paired significance test
// ---------------------------------------------------------------------------

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  int df = 0;
  bool degenerate = false;  // all differences identical
};

/// Two-sided paired t-test over aligned per-query values. With zero variance
/// the result is degenerate: p = 1 when the common difference is 0, else
/// p = 0.
TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

/// Regularized incomplete beta function I_x(a, b), exposed for verification.
double incomplete_beta(double a, double b, double x);

// ---------------------------------------------------------------------------
// TREC run files
// ---------------------------------------------------------------------------

/// Lines "qid Q0 docid rank score tag", queries and ranks in evaluation
/// order. `run` is ranked before writing.
void save_trec_run(const std::string& path, const Run& run, const std::string& tag);

Run load_trec_run(const std::string& path);

}  // namespace hint
