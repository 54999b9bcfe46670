#pragma once

#include <Eigen/Core>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "hint/model.hpp"

namespace hint {

/// Pairwise hinge: max(0, 1 - s_pos + s_neg). Satisfied pairs (loss 0)
/// contribute no gradient.
double hinge_loss(double s_pos, double s_neg);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Eigen::VectorXd> m, v;  // first/second moments, one per tensor
  long step = 0;

  void init(const std::vector<NamedTensor>& tensors);
};

/// One update with bias correction. `params` and `grads` must be collected
/// from structures with identical shapes (same collect_tensors order).
void adam_step(const AdamConfig& config, AdamState& state,
               const std::vector<NamedTensor>& params,
               const std::vector<NamedTensor>& grads);

// ---------------------------------------------------------------------------
// Interaction-matrix cache
// ---------------------------------------------------------------------------

/// The interaction matrices of a (query, document) pair depend only on the
/// frozen embeddings, so they are computed once and reused across epochs.
/// Thread safe.
class MatchCache {
 public:
  MatchCache(const Dataset& dataset, const EmbeddingTable& emb)
      : dataset_(dataset), emb_(emb) {}

  /// Matrices for every passage of the document, built on first use.
  const std::vector<MatchMatrices>& get(int query_idx, int doc_idx);

 private:
  const Dataset& dataset_;
  const EmbeddingTable& emb_;
  std::map<std::pair<int, int>, std::unique_ptr<std::vector<MatchMatrices>>> map_;
  std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Triple sampling
// ---------------------------------------------------------------------------

struct Triple {
  int query_idx = -1;
  int pos_doc = -1;
  int neg_doc = -1;
};

/// Preference pairs from graded judgments: for a query, any judged document
/// pair whose grades differ yields (higher, lower). Documents that cannot
/// be scored (no passages) are excluded. Sampling picks a query uniformly
/// among those with at least one pair, then a pair uniformly within it.
class TripleSampler {
 public:
  TripleSampler(const Dataset& dataset, const std::set<std::string>& query_ids);

  bool empty() const { return queries_.empty(); }
  long total_pairs() const;
  Triple sample(Rng& rng) const;

  /// Every preference pair, in deterministic (query, pair) order.
  std::vector<Triple> all_pairs() const;

 private:
  struct QueryPairs {
    int query_idx;
    std::vector<std::pair<int, int>> pairs;  // (pos_doc, neg_doc)
  };
  std::vector<QueryPairs> queries_;
};

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainOptions {
  int epochs = 50;
  int batch_size = 100;
  int batches_per_epoch = 16;
  AdamConfig adam;
  int patience = 10;  // epochs without validation improvement before stopping
  std::uint64_t seed = 1;
  int workers = 1;
  double stop_train_accuracy = -1.0;  // < 0 disables this stop
  std::string log_path;  // JSONL epoch log; empty = no log
  bool verbose = false;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;  // fraction of sampled pairs ordered correctly
  double val_map = -1.0;        // -1 when no validation set
  double seconds = 0.0;
};

struct TrainResult {
  HintParams params;  // best validation MAP when validation given, else final
  int best_epoch = -1;
  double best_val_map = -1.0;
  int epochs_run = 0;
  double final_train_accuracy = 0.0;
  std::vector<EpochStats> history;
};

/// Trains with pairwise hinge + Adam over sampled triples. Throws
/// NumericError if the loss turns non-finite. Per-epoch stats go to
/// `log_path` as JSON lines when set. `warm_start` substitutes for the
/// random initialization when given (shapes must match the configuration).
TrainResult train_model(const Dataset& dataset, const EmbeddingTable& emb,
                        const ModelConfig& config,
                        const std::set<std::string>& train_qids,
                        const std::set<std::string>& val_qids,
                        const TrainOptions& options,
                        const HintParams* warm_start = nullptr);

/// Mean average precision of the model over the given queries (judged
/// documents only). Queries with no relevant judged document are skipped;
/// returns -1 if none are evaluable.
double model_map(const Dataset& dataset, const EmbeddingTable& emb,
                 const ModelConfig& config, const HintParams& params,
                 const std::set<std::string>& query_ids,
                 MatchCache* cache = nullptr);

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

struct GradCheckDims {
  int query_len = 3;
  int passage_len = 4;
  int num_passages = 3;
  int vocab_size = 12;
};

struct GradCheckReport {
  struct PerTensor {
    std::string name;
    double max_rel_err = 0.0;
    long worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
  };
  std::vector<PerTensor> tensors;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  int resampled = 0;  // instances rejected for near-ties in pooling
};

/// Central-difference audit of the full backward pass on one synthetic
/// instance: every parameter element is perturbed by +-h and compared
/// against the analytic gradient with relative error
/// |a - n| / max(|a|, |n|, 1e-4). Instances whose pooling margin (k-th vs
/// (k+1)-th candidate per dimension) is below `min_margin` are re-drawn,
/// since the score is not differentiable across a pooling swap.
GradCheckReport grad_check(const ModelConfig& config, std::uint64_t seed,
                           const GradCheckDims& dims = {}, double h = 1e-5,
                           double tolerance = 1e-4, double min_margin = 1e-3);

}  // namespace hint
