#pragma once

#include <Eigen/Core>
#include <vector>

#include "hint/matching.hpp"

namespace hint {

/// Two-dimensional recurrent cell swept over the query x passage grid. Each
/// cell mixes its left, top, and diagonal predecessors with a candidate
/// state; a four-way softmax update gate splits every hidden dimension
/// between the three predecessors and the candidate.
///
/// Conventions (fixed; the backward pass mirrors them exactly):
///   q      = [h_top; h_left; h_diag; s]          (gate input)
///   gated  = [r_l . h_left; r_t . h_top; r_d . h_diag]
///   cand   = tanh(W s + U gated + b)
///   h      = z_l . h_left + z_t . h_top + z_d . h_diag + z_i . cand
/// with reset gates r_* = sigmoid(Wr_* q + br_*) and update gates
/// [z_i; z_l; z_t; z_d] = softmax over the four pre-activations Wz_* q + bz_*
/// taken per hidden dimension. Out-of-grid predecessors are zero vectors.
struct SpatialGruParams {
  Eigen::MatrixXd Wr_l, Wr_t, Wr_d;        // d x q_dim
  Eigen::VectorXd br_l, br_t, br_d;        // d
  Eigen::MatrixXd Wz_i, Wz_l, Wz_t, Wz_d;  // d x q_dim
  Eigen::VectorXd bz_i, bz_l, bz_t, bz_d;  // d
  Eigen::MatrixXd W;                       // d x input_dim
  Eigen::MatrixXd U;                       // d x 3d
  Eigen::VectorXd b;                       // d

  int hidden_dim() const { return static_cast<int>(b.size()); }
  int input_dim() const { return static_cast<int>(W.cols()); }
  int q_dim() const { return static_cast<int>(Wr_l.cols()); }

  static SpatialGruParams zeros(int hidden_dim, int input_dim);
};

/// Cell order for the forward sweep. Both orders compute identical results
/// bit for bit (each cell depends only on already-finished cells and cell
/// arithmetic does not change); the anti-diagonal order is the one that
/// admits parallel execution within a wavefront.
enum class ScanOrder { kRowMajor, kWavefront };

/// Intermediate state of one sweep, kept for the backward pass. Quantities
/// are stored one column per cell, row-major cell index i * cols + j over
/// the real block only.
struct SgruCache {
  int rows = 0, cols = 0;  // real block dimensions
  Eigen::MatrixXd h;       // d     x n
  Eigen::MatrixXd r;       // 3d    x n   [r_l; r_t; r_d]
  Eigen::MatrixXd z;       // 4d    x n   [z_i; z_l; z_t; z_d]
  Eigen::MatrixXd cand;    // d     x n

  int idx(int i, int j) const { return i * cols + j; }
};

/// Sweeps the real block of `t` and returns the last cell's hidden state
/// (the passage signal for this channel and direction). Returns zero when
/// the real block is empty. `with_xy` selects the cell input: [x_i, y_j, m_ij]
/// when true (input_dim 3), [m_ij] when false (input_dim 1). Pass `cache`
/// to keep intermediates for sgru_backward.
Eigen::VectorXd sgru_forward(const MatchTensor& t, Channel channel, bool with_xy,
                             const SpatialGruParams& p,
                             ScanOrder order = ScanOrder::kRowMajor,
                             SgruCache* cache = nullptr);

/// Reverse-mode sweep: folds d(loss)/d(signal) back through the grid.
/// Adds parameter gradients into `grads` and input-side gradients into
/// dx (length = t.rows()) and dy (length = t.cols()); only real positions
/// are touched. No-op when `de` is zero-length or the block was empty.
void sgru_backward(const MatchTensor& t, Channel channel, bool with_xy,
                   const SpatialGruParams& p, const SgruCache& cache,
                   const Eigen::VectorXd& de, SpatialGruParams& grads,
                   Eigen::VectorXd& dx, Eigen::VectorXd& dy);

}  // namespace hint
