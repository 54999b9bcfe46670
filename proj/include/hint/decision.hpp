#pragma once

#include <Eigen/Core>
#include <vector>

namespace hint {

// ---------------------------------------------------------------------------
// Dimension-wise k-max pooling
// ---------------------------------------------------------------------------

/// Top-k per column of a candidate matrix (rows = candidates). Selection
/// order within a column: value descending, then source row ascending, so
/// ties resolve deterministically. When there are fewer rows than k, the
/// remaining slots hold value 0 with source -1 (their gradient is dropped).
struct PoolResult {
  Eigen::MatrixXd values;  // k x dims
  Eigen::MatrixXi src;     // k x dims; source row, or -1 for a padded slot
};

PoolResult kmax_pool(const Eigen::MatrixXd& rows, int k);

/// Scorer input layout: per-dimension blocks of k, i.e. flat(c * k + r) =
/// values(r, c). This matches the column-major storage of `values`.
Eigen::VectorXd flatten_pool(const Eigen::MatrixXd& values);

/// Routes d(loss)/d(flat) back to the selected rows; padded slots drop out.
void pool_backward(const PoolResult& pool, const Eigen::VectorXd& dflat,
                   Eigen::MatrixXd& drows);

// ---------------------------------------------------------------------------
// Sequence LSTM (used by the accumulative and hybrid strategies)
// ---------------------------------------------------------------------------

struct LstmParams {
  Eigen::MatrixXd W_i, W_f, W_c, W_o;  // d x input_dim
  Eigen::MatrixXd U_i, U_f, U_c, U_o;  // d x d
  Eigen::VectorXd b_i, b_f, b_c, b_o;  // d

  int hidden_dim() const { return static_cast<int>(b_i.size()); }
  int input_dim() const { return static_cast<int>(W_i.cols()); }
  static LstmParams zeros(int hidden_dim, int input_dim);
};

struct LstmCache {
  int steps = 0;
  Eigen::MatrixXd x;                   // input_dim x T
  Eigen::MatrixXd i, f, o, g, c, tc, h;  // d x T (tc = tanh(c))
};

/// Runs the cell over the columns of `x` (h_0 = c_0 = 0) and returns all
/// hidden states, one column per step.
Eigen::MatrixXd lstm_forward(const Eigen::MatrixXd& x, const LstmParams& p,
                             LstmCache* cache = nullptr);

/// Back-propagates per-step gradients dh (d x T) through time; adds into
/// `grads` and into dx (input_dim x T).
void lstm_backward(const LstmParams& p, const LstmCache& cache,
                   const Eigen::MatrixXd& dh, LstmParams& grads,
                   Eigen::MatrixXd& dx);

// ---------------------------------------------------------------------------
// Decision layer: from per-passage signals to one relevance score
// ---------------------------------------------------------------------------

/// How passage signals are combined before pooling.
///   kIndependent:  pool the raw signals themselves.
///   kAccumulative: pool bidirectional LSTM states over the passage sequence.
///   kHybrid:       pool projected raw signals and both LSTM state sets.
enum class Variant { kIndependent, kAccumulative, kHybrid };

/// Candidate-row layout for the accumulative strategy.
///   kUnion:  2T rows of width d (forward states then backward states).
///   kConcat: T rows of width 2d ([forward_t, backward_t]).
enum class AdPool { kUnion, kConcat };

/// Projection that turns a raw passage signal into a pooling candidate of
/// LSTM width: v_t = tanh(W_v e_t + b_v).
struct HybridParams {
  Eigen::MatrixXd W_v;  // d_lstm x signal_dim
  Eigen::VectorXd b_v;  // d_lstm
};

/// Final scorer over the flattened pool. Affine by default; `hidden` > 0
/// inserts one tanh layer.
struct ScorerParams {
  Eigen::VectorXd w;  // affine weights (or unused when hidden > 0)
  double b = 0.0;
  int hidden = 0;
  Eigen::MatrixXd W1;  // hidden x input
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;
};

struct DecisionConfig {
  Variant variant = Variant::kHybrid;
  AdPool ad_pool = AdPool::kUnion;
  int k = 10;
};

struct DecisionParams {
  LstmParams fwd, rev;  // variant != kIndependent
  HybridParams hybrid;  // variant == kHybrid
  ScorerParams scorer;
};

struct DecisionCache {
  Eigen::MatrixXd cand_rows;  // what was pooled (R x D)
  PoolResult pool;
  Eigen::VectorXd flat;
  LstmCache fwd, rev;
  Eigen::MatrixXd v;  // hybrid candidates, d x T
  Eigen::VectorXd hidden_act;  // scorer hidden tanh output
};

/// Candidate-row order (fixed; ties in pooling resolve by it):
///   kIndependent: rows t = 0..T-1 are the signals e_t.
///   kAccumulative/kUnion: rows 0..T-1 forward states h^f_t, rows T..2T-1
///     backward states in scan order (row T is the state after reading the
///     last signal).
///   kAccumulative/kConcat: row t = [h^f_t, h^b aligned to t].
///   kHybrid: rows 0..T-1 projections v_t, then forward states, then
///     backward states (as in kUnion).
double score_decision(const Eigen::MatrixXd& signals, const DecisionConfig& config,
                      const DecisionParams& params, DecisionCache* cache = nullptr);

/// Reverse pass for score_decision. Adds parameter gradients into `grads`
/// and signal gradients into dsignals (signal_dim x T).
void decision_backward(const Eigen::MatrixXd& signals, const DecisionConfig& config,
                       const DecisionParams& params, const DecisionCache& cache,
                       double dscore, DecisionParams& grads,
                       Eigen::MatrixXd& dsignals);

/// Width of the flattened pool the scorer consumes.
int scorer_input_dim(const DecisionConfig& config, int signal_dim, int lstm_dim);

}  // namespace hint
