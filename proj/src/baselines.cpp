#include "hint/baselines.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace hint {

InvertedIndex InvertedIndex::build(const std::vector<std::vector<int>>& docs) {
  InvertedIndex index;
  index.num_docs = static_cast<int>(docs.size());
  for (const auto& doc : docs) {
    index.doc_len.push_back(static_cast<int>(doc.size()));
    index.total_tokens += static_cast<long long>(doc.size());
    std::set<int> seen;
    for (int t : doc) {
      ++index.cf[t];
      if (seen.insert(t).second) ++index.df[t];
    }
  }
  index.avg_doc_len = index.num_docs > 0
                          ? static_cast<double>(index.total_tokens) / index.num_docs
                          : 0.0;
  return index;
}

InvertedIndex InvertedIndex::build(const Dataset& dataset) {
  std::vector<std::vector<int>> docs;
  docs.reserve(dataset.docs.size());
  for (const auto& d : dataset.docs) docs.push_back(d.tokens);
  return build(docs);
}

double bm25_score(const InvertedIndex& index, const std::vector<int>& query,
                  int doc_idx, const std::vector<int>& doc_tokens,
                  const Bm25Config& config) {
  if (doc_idx < 0 || doc_idx >= index.num_docs)
    throw std::out_of_range("document index outside the index");
  const double len = index.doc_len[doc_idx];
  const double norm =
      config.k1 * (1.0 - config.b + config.b * len / index.avg_doc_len);

  std::unordered_map<int, int> tf;
  for (int t : doc_tokens) ++tf[t];

  double score = 0.0;
  for (int term : query) {
    auto it = tf.find(term);
    if (it == tf.end()) continue;
    const double f = it->second;
    const double df = index.doc_freq(term);
    const double idf =
        std::log((index.num_docs - df + 0.5) / (df + 0.5) + 1.0);
    score += idf * f * (config.k1 + 1.0) / (f + norm);
  }
  return score;
}

std::optional<double> msp_score(const InvertedIndex& index,
                                const std::vector<int>& query,
                                const std::vector<Passage>& passages,
                                const MspConfig& config) {
  if (passages.empty()) return std::nullopt;
  if (index.total_tokens <= 0) return std::nullopt;

  std::optional<double> best;
  for (const Passage& p : passages) {
    const int len = p.real_len();
    std::unordered_map<int, int> tf;
    for (int i = 0; i < len; ++i) ++tf[p.tokens[i]];

    double ll = 0.0;
    for (int term : query) {
      const long long cf = index.coll_freq(term);
      if (cf == 0) continue;  // zero even after smoothing
      auto it = tf.find(term);
      const double f = it == tf.end() ? 0.0 : it->second;
      const double prior =
          config.mu * static_cast<double>(cf) / static_cast<double>(index.total_tokens);
      ll += std::log((f + prior) / (len + config.mu));
    }
    if (!best || ll > *best) best = ll;
  }
  return best;
}

}  // namespace hint
