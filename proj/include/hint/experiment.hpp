#pragma once

#include <set>
#include <string>
#include <vector>

#include "hint/baselines.hpp"
#include "hint/evaluation.hpp"
#include "hint/training.hpp"

namespace hint {

/// Re-ranking protocol: each query ranks only its judged documents, and
/// documents with no content after preprocessing are left out of the run
/// (they cannot be scored meaningfully by any of the methods).

Run rank_with_model(const Dataset& dataset, const EmbeddingTable& emb,
                    const ModelConfig& config, const HintParams& params,
                    const std::set<std::string>& query_ids,
                    MatchCache* cache = nullptr);

Run rank_with_bm25(const Dataset& dataset, const std::set<std::string>& query_ids,
                   const Bm25Config& config = {});

Run rank_with_msp(const Dataset& dataset, const std::set<std::string>& query_ids,
                  const MspConfig& config = {});

/// Fraction of all preference pairs (from graded judgments) the model orders
/// correctly. Returns -1 when the queries yield no pairs.
double pairwise_accuracy(const Dataset& dataset, const EmbeddingTable& emb,
                         const ModelConfig& config, const HintParams& params,
                         const std::set<std::string>& query_ids);

// ---------------------------------------------------------------------------
// Cross validation
// ---------------------------------------------------------------------------

struct FoldOutcome {
  int fold = 0;
  TrainResult train;
  Run test_run;
};

struct CvResult {
  std::vector<FoldOutcome> folds;
  Run pooled_run;      // union of the per-fold test runs
  EvalReport report;   // evaluated over the pooled run
};

/// Trains one model per fold (validation split drives early stopping and
/// model selection) and ranks that fold's test queries with it. Per-query
/// results pool into one report, so each query is scored exactly once by a
/// model that never saw it.
CvResult run_cv(const Dataset& dataset, const EmbeddingTable& emb,
                const ModelConfig& config, const TrainOptions& options);

// ---------------------------------------------------------------------------
// Passage-size sweep
// ---------------------------------------------------------------------------

struct SweepPoint {
  int passage_size = 0;
  double test_map = 0.0;
  int params_epochs = 0;
};

/// Re-segments the collection at each size, trains on the given fold, and
/// records held-out MAP. Returns points in the order of `sizes`.
std::vector<SweepPoint> sweep_passage_size(Dataset dataset,
                                           const EmbeddingTable& emb,
                                           const ModelConfig& config,
                                           const TrainOptions& options, int fold,
                                           const std::vector<int>& sizes);

std::string sweep_to_csv(const std::vector<SweepPoint>& points);

// ---------------------------------------------------------------------------
// Signal inspection
// ---------------------------------------------------------------------------

/// JSON dump of the evidence behind one (query, document) score: the
/// passage signals, which pooled slots selected which candidate rows, and
/// the text span of every passage involved. `k_best` limits the listing of
/// selected slots per dimension.
std::string inspect_signals_json(const Dataset& dataset, const EmbeddingTable& emb,
                                 const ModelConfig& config,
                                 const HintParams& params, const std::string& qid,
                                 const std::string& docid);

}  // namespace hint
