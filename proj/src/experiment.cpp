#include "hint/experiment.hpp"

#include <sstream>

#include <json.hpp>

namespace hint {

namespace {

bool scorable(const Dataset& dataset, int doc_idx) {
  return doc_idx >= 0 && !dataset.docs[doc_idx].tokens.empty() &&
         !dataset.passages[doc_idx].empty();
}

template <typename ScoreFn>
Run rank_generic(const Dataset& dataset, const std::set<std::string>& query_ids,
                 ScoreFn&& score) {
  Run run;
  for (const std::string& qid : query_ids) {
    int qidx = dataset.query_index_of(qid);
    if (qidx < 0) continue;
    std::vector<ScoredDoc> docs;
    for (const auto& [docid, grade] : dataset.qrels.docs_for(qid)) {
      int didx = dataset.doc_index_of(docid);
      if (!scorable(dataset, didx)) continue;
      auto s = score(qidx, didx);
      if (!s) continue;
      docs.push_back({docid, *s, grade});
    }
    run[qid] = ranked(std::move(docs));
  }
  return run;
}

}  // namespace

Run rank_with_model(const Dataset& dataset, const EmbeddingTable& emb,
                    const ModelConfig& config, const HintParams& params,
                    const std::set<std::string>& query_ids, MatchCache* cache) {
  return rank_generic(dataset, query_ids,
                      [&](int qidx, int didx) -> std::optional<double> {
                        const auto* mm = cache ? &cache->get(qidx, didx) : nullptr;
                        return score_document(dataset.queries[qidx].tokens,
                                              dataset.passages[didx], emb, config,
                                              params, nullptr, mm);
                      });
}

Run rank_with_bm25(const Dataset& dataset, const std::set<std::string>& query_ids,
                   const Bm25Config& config) {
  InvertedIndex index = InvertedIndex::build(dataset);
  return rank_generic(dataset, query_ids,
                      [&](int qidx, int didx) -> std::optional<double> {
                        return bm25_score(index, dataset.queries[qidx].tokens, didx,
                                          dataset.docs[didx].tokens, config);
                      });
}

Run rank_with_msp(const Dataset& dataset, const std::set<std::string>& query_ids,
                  const MspConfig& config) {
  InvertedIndex index = InvertedIndex::build(dataset);
  return rank_generic(dataset, query_ids,
                      [&](int qidx, int didx) -> std::optional<double> {
                        return msp_score(index, dataset.queries[qidx].tokens,
                                         dataset.passages[didx], config);
                      });
}

double pairwise_accuracy(const Dataset& dataset, const EmbeddingTable& emb,
                         const ModelConfig& config, const HintParams& params,
                         const std::set<std::string>& query_ids) {
  TripleSampler sampler(dataset, query_ids);
  auto pairs = sampler.all_pairs();
  if (pairs.empty()) return -1.0;

  MatchCache cache(dataset, emb);
  long correct = 0, total = 0;
  for (const Triple& tr : pairs) {
    const auto& query = dataset.queries[tr.query_idx].tokens;
    auto s_pos = score_document(query, dataset.passages[tr.pos_doc], emb, config,
                                params, nullptr, &cache.get(tr.query_idx, tr.pos_doc));
    auto s_neg = score_document(query, dataset.passages[tr.neg_doc], emb, config,
                                params, nullptr, &cache.get(tr.query_idx, tr.neg_doc));
    if (!s_pos || !s_neg) continue;
    ++total;
    if (*s_pos > *s_neg) ++correct;
  }
  return total == 0 ? -1.0 : static_cast<double>(correct) / total;
}

CvResult run_cv(const Dataset& dataset, const EmbeddingTable& emb,
                const ModelConfig& config, const TrainOptions& options) {
  CvResult result;
  for (const FoldSplit& fold : dataset.folds) {
    FoldOutcome outcome;
    outcome.fold = fold.fold;
    outcome.train = train_model(dataset, emb, config, fold.train, fold.validation,
                                options);
    outcome.test_run =
        rank_with_model(dataset, emb, config, outcome.train.params, fold.test);
    for (const auto& [qid, docs] : outcome.test_run)
      result.pooled_run[qid] = docs;
    result.folds.push_back(std::move(outcome));
  }
  result.report = evaluate_run(result.pooled_run, dataset.qrels);
  return result;
}

std::vector<SweepPoint> sweep_passage_size(Dataset dataset,
                                           const EmbeddingTable& emb,
                                           const ModelConfig& config,
                                           const TrainOptions& options, int fold,
                                           const std::vector<int>& sizes) {
  if (fold < 0 || fold >= static_cast<int>(dataset.folds.size()))
    throw std::invalid_argument("fold index out of range");
  std::vector<SweepPoint> points;
  for (int size : sizes) {
    resegment(dataset, size);
    const FoldSplit& split = dataset.folds[fold];
    TrainResult trained =
        train_model(dataset, emb, config, split.train, split.validation, options);
    SweepPoint point;
    point.passage_size = size;
    point.params_epochs = trained.epochs_run;
    point.test_map =
        model_map(dataset, emb, config, trained.params, split.test, nullptr);
    points.push_back(point);
  }
  return points;
}

std::string sweep_to_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "passage_size,test_map,epochs\n";
  for (const auto& p : points)
    out << p.passage_size << "," << p.test_map << "," << p.params_epochs << "\n";
  return out.str();
}

std::string inspect_signals_json(const Dataset& dataset, const EmbeddingTable& emb,
                                 const ModelConfig& config,
                                 const HintParams& params, const std::string& qid,
                                 const std::string& docid) {
  int qidx = dataset.query_index_of(qid);
  if (qidx < 0) throw NotFoundError("unknown query id " + qid);
  int didx = dataset.doc_index_of(docid);
  if (didx < 0) throw NotFoundError("unknown document id " + docid);
  if (!scorable(dataset, didx))
    throw NotFoundError("document " + docid + " has no content to score");

  const auto& query = dataset.queries[qidx].tokens;
  const auto& passages = dataset.passages[didx];
  DocScoreCache cache;
  auto score = score_document(query, passages, emb, config, params, &cache);
  if (!score) throw NotFoundError("pair cannot be scored");

  const int T = static_cast<int>(passages.size());
  nlohmann::json j;
  j["qid"] = qid;
  j["docid"] = docid;
  j["score"] = *score;
  j["query_tokens"] = [&] {
    std::vector<std::string> words;
    for (int t : query) words.push_back(dataset.vocab.token(t));
    return words;
  }();

  nlohmann::json jp = nlohmann::json::array();
  for (int t = 0; t < T; ++t) {
    const Passage& p = passages[t];
    std::vector<std::string> words;
    for (int i = 0; i < p.real_len(); ++i)
      words.push_back(dataset.vocab.token(p.tokens[i]));
    std::vector<double> signal(cache.signals.col(t).data(),
                               cache.signals.col(t).data() + cache.signals.rows());
    jp.push_back({{"ordinal", p.ordinal},
                  {"real_len", p.real_len()},
                  {"tokens", words},
                  {"signal", signal}});
  }
  j["passages"] = std::move(jp);

  // Which candidate rows the pool selected, and what each row means.
  auto row_origin = [&](int row) -> nlohmann::json {
    switch (config.variant) {
      case Variant::kIndependent:
        return {{"kind", "signal"}, {"passage", row}};
      case Variant::kAccumulative:
        if (config.ad_pool == AdPool::kConcat)
          return {{"kind", "concat-state"}, {"passage", row}};
        if (row < T) return {{"kind", "fwd-state"}, {"passage", row}};
        return {{"kind", "rev-state"}, {"passage", T - 1 - (row - T)}};
      case Variant::kHybrid:
        if (row < T) return {{"kind", "projected-signal"}, {"passage", row}};
        if (row < 2 * T) return {{"kind", "fwd-state"}, {"passage", row - T}};
        return {{"kind", "rev-state"}, {"passage", T - 1 - (row - 2 * T)}};
    }
    return {{"kind", "unknown"}};
  };

  const PoolResult& pool = cache.decision.pool;
  nlohmann::json dims = nlohmann::json::array();
  for (int c = 0; c < pool.values.cols(); ++c) {
    nlohmann::json slots = nlohmann::json::array();
    for (int r = 0; r < pool.values.rows(); ++r) {
      if (pool.src(r, c) < 0) continue;
      nlohmann::json slot = row_origin(pool.src(r, c));
      slot["rank"] = r;
      slot["value"] = pool.values(r, c);
      slot["row"] = pool.src(r, c);
      slots.push_back(std::move(slot));
    }
    dims.push_back({{"dim", c}, {"selected", std::move(slots)}});
  }
  j["pool"] = {{"k", config.k},
               {"candidate_rows", cache.decision.cand_rows.rows()},
               {"dims", std::move(dims)}};
  return j.dump(2) + "\n";
}

}  // namespace hint
