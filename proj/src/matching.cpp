#include "hint/matching.hpp"

#include <cmath>
#include <stdexcept>

namespace hint {

namespace {

void check_pair(const std::vector<int>& passage_tokens,
                const std::vector<std::uint8_t>& passage_mask) {
  if (!passage_mask.empty() && passage_mask.size() != passage_tokens.size())
    throw std::invalid_argument("passage mask length mismatch");
  // Masks must be a prefix of ones; the scans rely on it.
  bool seen_pad = false;
  for (auto m : passage_mask) {
    if (m && seen_pad)
      throw std::invalid_argument("passage mask must be a prefix of ones");
    if (!m) seen_pad = true;
  }
}

int prefix_len(const std::vector<std::uint8_t>& mask, int full) {
  if (mask.empty()) return full;
  int n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}

}  // namespace

MatchMatrices build_match_matrices(const std::vector<int>& query_tokens,
                                   const std::vector<int>& passage_tokens,
                                   const std::vector<std::uint8_t>& passage_mask,
                                   const EmbeddingTable& emb) {
  check_pair(passage_tokens, passage_mask);
  const int m = static_cast<int>(query_tokens.size());
  const int l = static_cast<int>(passage_tokens.size());
  const int real_l = prefix_len(passage_mask, l);

  MatchMatrices out;
  out.cos = Eigen::MatrixXd::Zero(m, l);
  out.xor_ = Eigen::MatrixXd::Zero(m, l);

  Eigen::VectorXd qnorm(m), pnorm(real_l);
  for (int i = 0; i < m; ++i) qnorm(i) = emb.row(query_tokens[i]).norm();
  for (int j = 0; j < real_l; ++j) pnorm(j) = emb.row(passage_tokens[j]).norm();

  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < real_l; ++j) {
      if (query_tokens[i] == passage_tokens[j]) out.xor_(i, j) = 1.0;
      double denom = qnorm(i) * pnorm(j);
      if (denom > 0.0)
        out.cos(i, j) = emb.row(query_tokens[i]).dot(emb.row(passage_tokens[j])) / denom;
    }
  }
  return out;
}

Eigen::VectorXd compress_tokens(const std::vector<int>& tokens,
                                const std::vector<std::uint8_t>& mask,
                                const EmbeddingTable& emb,
                                const CompressionParams& comp) {
  if (!mask.empty() && mask.size() != tokens.size())
    throw std::invalid_argument("mask length mismatch");
  if (comp.dim() != emb.dim())
    throw std::invalid_argument("compression weights do not match embedding dim");
  Eigen::VectorXd out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bool real = mask.empty() || mask[i];
    out(static_cast<int>(i)) =
        real ? emb.row(tokens[i]).dot(comp.W_s) + comp.b_s : 0.0;
  }
  return out;
}

MatchTensor assemble_tensor(const MatchMatrices& matrices,
                            const std::vector<int>& query_tokens,
                            const std::vector<int>& passage_tokens,
                            const std::vector<std::uint8_t>& passage_mask,
                            const EmbeddingTable& emb,
                            const CompressionParams& comp) {
  check_pair(passage_tokens, passage_mask);
  if (matrices.cos.rows() != static_cast<Eigen::Index>(query_tokens.size()) ||
      matrices.cos.cols() != static_cast<Eigen::Index>(passage_tokens.size()))
    throw std::invalid_argument("interaction matrices do not match the pair");

  MatchTensor t;
  t.cos = matrices.cos;
  t.xor_ = matrices.xor_;
  t.x = compress_tokens(query_tokens, {}, emb, comp);
  t.y = compress_tokens(passage_tokens, passage_mask, emb, comp);
  t.real_rows = static_cast<int>(query_tokens.size());
  t.real_cols = prefix_len(passage_mask, static_cast<int>(passage_tokens.size()));
  return t;
}

MatchTensor build_match_tensor(const std::vector<int>& query_tokens,
                               const std::vector<int>& passage_tokens,
                               const std::vector<std::uint8_t>& passage_mask,
                               const EmbeddingTable& emb,
                               const CompressionParams& comp) {
  return assemble_tensor(
      build_match_matrices(query_tokens, passage_tokens, passage_mask, emb),
      query_tokens, passage_tokens, passage_mask, emb, comp);
}

MatchTensor reversed(const MatchTensor& t) {
  MatchTensor r = t;
  const int rm = t.real_rows, rc = t.real_cols;
  for (int i = 0; i < rm; ++i)
    for (int j = 0; j < rc; ++j) {
      r.cos(i, j) = t.cos(rm - 1 - i, rc - 1 - j);
      r.xor_(i, j) = t.xor_(rm - 1 - i, rc - 1 - j);
    }
  for (int i = 0; i < rm; ++i) r.x(i) = t.x(rm - 1 - i);
  for (int j = 0; j < rc; ++j) r.y(j) = t.y(rc - 1 - j);
  return r;
}

void accumulate_compression_grads(const std::vector<int>& query_tokens,
                                  const std::vector<int>& passage_tokens,
                                  const Eigen::VectorXd& dx,
                                  const Eigen::VectorXd& dy, int real_cols,
                                  const EmbeddingTable& emb,
                                  const CompressionParams& comp,
                                  CompressionGrads& out) {
  if (dx.size() != static_cast<Eigen::Index>(query_tokens.size()))
    throw std::invalid_argument("dx length mismatch");
  if (dy.size() != static_cast<Eigen::Index>(passage_tokens.size()))
    throw std::invalid_argument("dy length mismatch");
  for (int i = 0; i < dx.size(); ++i) {
    if (dx(i) == 0.0) continue;
    out.dW_s += dx(i) * emb.row(query_tokens[i]).transpose();
    if (comp.bias) out.db_s += dx(i);
  }
  for (int j = 0; j < real_cols; ++j) {
    if (dy(j) == 0.0) continue;
    out.dW_s += dy(j) * emb.row(passage_tokens[j]).transpose();
    if (comp.bias) out.db_s += dy(j);
  }
}

}  // namespace hint
