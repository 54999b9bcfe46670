#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "hint/corpus.hpp"

namespace hint {

/// Affine compression of an embedding to one scalar per token. These scalars
/// ride along with each interaction value so the recurrent layer can weigh a
/// match by which words produced it.
struct CompressionParams {
  Eigen::VectorXd W_s;  // one weight per embedding dimension
  double b_s = 0.0;
  bool bias = true;  // when false, b_s stays pinned at zero and is not trained

  int dim() const { return static_cast<int>(W_s.size()); }
};

struct CompressionGrads {
  Eigen::VectorXd dW_s;
  double db_s = 0.0;

  explicit CompressionGrads(int dim) : dW_s(Eigen::VectorXd::Zero(dim)) {}
};

/// Interaction channel between query and passage tokens.
enum class Channel { kCos, kXor };

/// Parameter-independent interaction matrices for one query-passage pair.
/// Rows are query positions, columns passage positions. Cells outside the
/// real block (padding) are zero.
struct MatchMatrices {
  Eigen::MatrixXd cos;  // cosine of embedding vectors; 0 when either norm is 0
  Eigen::MatrixXd xor_;  // 1.0 where token ids are equal, else 0.0
};

/// One query-passage matching instance: interaction matrices plus the
/// compressed per-token scalars. The cell input to the recurrent layer is
/// [x(i), y(j), m(i, j)] (or just [m(i, j)] in matrix-only mode).
struct MatchTensor {
  Eigen::MatrixXd cos;
  Eigen::MatrixXd xor_;
  Eigen::VectorXd x;  // query side, length = rows
  Eigen::VectorXd y;  // passage side, length = cols; masked entries zero
  int real_rows = 0;  // real query tokens (prefix)
  int real_cols = 0;  // real passage tokens (prefix)

  int rows() const { return static_cast<int>(cos.rows()); }
  int cols() const { return static_cast<int>(cos.cols()); }
  const Eigen::MatrixXd& channel(Channel c) const {
    return c == Channel::kCos ? cos : xor_;
  }
};

MatchMatrices build_match_matrices(const std::vector<int>& query_tokens,
                                   const std::vector<int>& passage_tokens,
                                   const std::vector<std::uint8_t>& passage_mask,
                                   const EmbeddingTable& emb);

/// Compressed scalar per token: W_s . emb[token] + b_s. Entries with mask 0
/// are set to zero after the affine map (padding stays inert even with a
/// nonzero bias). Pass an empty mask for an all-real sequence.
Eigen::VectorXd compress_tokens(const std::vector<int>& tokens,
                                const std::vector<std::uint8_t>& mask,
                                const EmbeddingTable& emb,
                                const CompressionParams& comp);

/// Assembles a MatchTensor from cached interaction matrices. `matrices` must
/// have been built for exactly this pair.
MatchTensor assemble_tensor(const MatchMatrices& matrices,
                            const std::vector<int>& query_tokens,
                            const std::vector<int>& passage_tokens,
                            const std::vector<std::uint8_t>& passage_mask,
                            const EmbeddingTable& emb,
                            const CompressionParams& comp);

/// Convenience: build_match_matrices + assemble_tensor.
MatchTensor build_match_tensor(const std::vector<int>& query_tokens,
                               const std::vector<int>& passage_tokens,
                               const std::vector<std::uint8_t>& passage_mask,
                               const EmbeddingTable& emb,
                               const CompressionParams& comp);

/// Flips both axes of the real block; padding stays at the tail. Applying it
/// twice restores the original. The reverse-direction recurrent pass scans
/// this view.
MatchTensor reversed(const MatchTensor& t);

/// Maps side-signal gradients (dx over real rows, dy over real cols) back to
/// the compression parameters. dx/dy entries outside the real block must be
/// zero (they are, if they came from a masked scan).
void accumulate_compression_grads(const std::vector<int>& query_tokens,
                                  const std::vector<int>& passage_tokens,
                                  const Eigen::VectorXd& dx,
                                  const Eigen::VectorXd& dy, int real_cols,
                                  const EmbeddingTable& emb,
                                  const CompressionParams& comp,
                                  CompressionGrads& out);

}  // namespace hint
