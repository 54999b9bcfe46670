#pragma once

#include <optional>
#include <unordered_map>
#include <vector>

#include "hint/corpus.hpp"

namespace hint {

/// Collection statistics for the lexical baselines.
struct InvertedIndex {
  int num_docs = 0;
  long long total_tokens = 0;  // collection length
  double avg_doc_len = 0.0;
  std::vector<int> doc_len;                    // by document position
  std::unordered_map<int, int> df;             // document frequency
  std::unordered_map<int, long long> cf;       // collection frequency

  static InvertedIndex build(const std::vector<std::vector<int>>& docs);
  static InvertedIndex build(const Dataset& dataset);

  int doc_freq(int term) const {
    auto it = df.find(term);
    return it == df.end() ? 0 : it->second;
  }
  long long coll_freq(int term) const {
    auto it = cf.find(term);
    return it == cf.end() ? 0 : it->second;
  }
};

struct Bm25Config {
  double k1 = 1.2;
  double b = 0.75;
};

/// Okapi scoring with idf = ln((N - df + 0.5)/(df + 0.5) + 1). Query tokens
/// contribute per occurrence. `doc_idx` selects the stored length.
double bm25_score(const InvertedIndex& index, const std::vector<int>& query,
                  int doc_idx, const std::vector<int>& doc_tokens,
                  const Bm25Config& config = {});

struct MspConfig {
  double mu = 2000.0;  // Dirichlet pseudo-count
};

/// Query likelihood of each passage under Dirichlet smoothing,
///   sum_t log((tf + mu * cf_t / C) / (len + mu)),
/// taking the best passage as the document score. Query terms absent from
/// the whole collection are skipped (their smoothed probability is zero).
/// Returns nullopt when the document has no passages.
std::optional<double> msp_score(const InvertedIndex& index,
                                const std::vector<int>& query,
                                const std::vector<Passage>& passages,
                                const MspConfig& config = {});

}  // namespace hint
