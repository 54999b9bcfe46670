#include "hint/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "hint/evaluation.hpp"

namespace hint {

double hinge_loss(double s_pos, double s_neg) {
  return std::max(0.0, 1.0 - s_pos + s_neg);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void AdamState::init(const std::vector<NamedTensor>& tensors) {
  m.clear();
  v.clear();
  for (const NamedTensor& t : tensors) {
    m.push_back(Eigen::VectorXd::Zero(t.size));
    v.push_back(Eigen::VectorXd::Zero(t.size));
  }
  step = 0;
}

void adam_step(const AdamConfig& config, AdamState& state,
               const std::vector<NamedTensor>& params,
               const std::vector<NamedTensor>& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("optimizer state does not match parameters");
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != grads[i].size)
      throw std::invalid_argument("gradient shape mismatch at " + params[i].name);
    double* p = params[i].data;
    const double* g = grads[i].data;
    Eigen::VectorXd& mi = state.m[i];
    Eigen::VectorXd& vi = state.v[i];
    for (long j = 0; j < params[i].size; ++j) {
      mi(j) = config.beta1 * mi(j) + (1.0 - config.beta1) * g[j];
      vi(j) = config.beta2 * vi(j) + (1.0 - config.beta2) * g[j] * g[j];
      const double mhat = mi(j) / bc1;
      const double vhat = vi(j) / bc2;
      p[j] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Interaction-matrix cache
// ---------------------------------------------------------------------------

const std::vector<MatchMatrices>& MatchCache::get(int query_idx, int doc_idx) {
  std::lock_guard<std::mutex> lock(mu_);
  auto key = std::make_pair(query_idx, doc_idx);
  auto it = map_.find(key);
  if (it != map_.end()) return *it->second;

  const auto& query = dataset_.queries.at(query_idx).tokens;
  const auto& passages = dataset_.passages.at(doc_idx);
  auto built = std::make_unique<std::vector<MatchMatrices>>();
  built->reserve(passages.size());
  for (const Passage& p : passages)
    built->push_back(build_match_matrices(query, p.tokens, p.mask, emb_));
  return *map_.emplace(key, std::move(built)).first->second;
}

// ---------------------------------------------------------------------------
// Triple sampling
// ---------------------------------------------------------------------------

TripleSampler::TripleSampler(const Dataset& dataset,
                             const std::set<std::string>& query_ids) {
  for (const std::string& qid : query_ids) {
    int qidx = dataset.query_index_of(qid);
    if (qidx < 0 || dataset.queries[qidx].tokens.empty()) continue;

    std::vector<std::pair<int, int>> judged;  // (doc index, grade)
    for (const auto& [docid, grade] : dataset.qrels.docs_for(qid)) {
      int didx = dataset.doc_index_of(docid);
      if (didx < 0) continue;
      if (dataset.docs[didx].tokens.empty() || dataset.passages[didx].empty())
        continue;  // unscorable: no content to match
      judged.emplace_back(didx, grade);
    }

    QueryPairs qp;
    qp.query_idx = qidx;
    for (std::size_t a = 0; a < judged.size(); ++a)
      for (std::size_t b = 0; b < judged.size(); ++b) {
        if (judged[a].second > judged[b].second)
          qp.pairs.emplace_back(judged[a].first, judged[b].first);
      }
    if (!qp.pairs.empty()) queries_.push_back(std::move(qp));
  }
}

long TripleSampler::total_pairs() const {
  long total = 0;
  for (const auto& q : queries_) total += static_cast<long>(q.pairs.size());
  return total;
}

std::vector<Triple> TripleSampler::all_pairs() const {
  std::vector<Triple> out;
  for (const auto& q : queries_)
    for (const auto& [pos, neg] : q.pairs) out.push_back({q.query_idx, pos, neg});
  return out;
}

Triple TripleSampler::sample(Rng& rng) const {
  if (queries_.empty()) throw std::logic_error("no preference pairs to sample");
  const QueryPairs& q = queries_[rng.next_below(queries_.size())];
  auto [pos, neg] = q.pairs[rng.next_below(q.pairs.size())];
  return {q.query_idx, pos, neg};
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

struct WorkerResult {
  HintGrads grads;
  double loss_sum = 0.0;
  long correct = 0;
  long evaluated = 0;
  bool non_finite = false;
};

void run_slice(const Dataset& dataset, const EmbeddingTable& emb,
               const ModelConfig& config, const HintParams& params,
               MatchCache& cache, const std::vector<Triple>& triples,
               std::size_t begin, std::size_t end, double inv_batch,
               WorkerResult& out) {
  for (std::size_t i = begin; i < end; ++i) {
    const Triple& tr = triples[i];
    const auto& query = dataset.queries[tr.query_idx].tokens;
    const auto& pos_passages = dataset.passages[tr.pos_doc];
    const auto& neg_passages = dataset.passages[tr.neg_doc];
    const auto& pos_mm = cache.get(tr.query_idx, tr.pos_doc);
    const auto& neg_mm = cache.get(tr.query_idx, tr.neg_doc);

    DocScoreCache pos_cache, neg_cache;
    auto s_pos = score_document(query, pos_passages, emb, config, params,
                                &pos_cache, &pos_mm);
    auto s_neg = score_document(query, neg_passages, emb, config, params,
                                &neg_cache, &neg_mm);
    if (!s_pos || !s_neg) continue;

    const double loss = hinge_loss(*s_pos, *s_neg);
    if (!std::isfinite(loss)) {
      out.non_finite = true;
      return;
    }
    out.loss_sum += loss;
    out.evaluated += 1;
    if (*s_pos > *s_neg) out.correct += 1;
    if (loss > 0.0) {
      score_backprop(query, pos_passages, emb, config, params, pos_cache,
                     -inv_batch, out.grads);
      score_backprop(query, neg_passages, emb, config, params, neg_cache,
                     inv_batch, out.grads);
    }
  }
}

void add_grads(const std::vector<NamedTensor>& into,
               const std::vector<NamedTensor>& from) {
  for (std::size_t i = 0; i < into.size(); ++i) {
    Eigen::Map<Eigen::VectorXd> a(into[i].data, into[i].size);
    Eigen::Map<const Eigen::VectorXd> b(from[i].data, from[i].size);
    a += b;
  }
}

}  // namespace

double model_map(const Dataset& dataset, const EmbeddingTable& emb,
                 const ModelConfig& config, const HintParams& params,
                 const std::set<std::string>& query_ids, MatchCache* cache) {
  double sum = 0.0;
  int evaluable = 0;
  for (const std::string& qid : query_ids) {
    int qidx = dataset.query_index_of(qid);
    if (qidx < 0) continue;
    const auto& judged = dataset.qrels.docs_for(qid);
    int total_relevant = 0;
    for (const auto& [docid, grade] : judged)
      if (grade > 0) ++total_relevant;
    if (total_relevant == 0) continue;

    std::vector<ScoredDoc> docs;
    for (const auto& [docid, grade] : judged) {
      int didx = dataset.doc_index_of(docid);
      if (didx < 0) continue;
      const auto* mm = cache ? &cache->get(qidx, didx) : nullptr;
      auto s = score_document(dataset.queries[qidx].tokens, dataset.passages[didx],
                              emb, config, params, nullptr, mm);
      if (!s) continue;
      docs.push_back({docid, *s, grade});
    }
    sum += average_precision(ranked(std::move(docs)), total_relevant);
    ++evaluable;
  }
  return evaluable == 0 ? -1.0 : sum / evaluable;
}

TrainResult train_model(const Dataset& dataset, const EmbeddingTable& emb,
                        const ModelConfig& config,
                        const std::set<std::string>& train_qids,
                        const std::set<std::string>& val_qids,
                        const TrainOptions& options,
                        const HintParams* warm_start) {
  if (options.batch_size < 1 || options.batches_per_epoch < 1 ||
      options.epochs < 1 || options.workers < 1)
    throw std::invalid_argument("training options must be positive");

  TripleSampler sampler(dataset, train_qids);
  if (sampler.empty())
    throw std::invalid_argument("training set has no preference pairs");

  HintParams params = warm_start ? *warm_start : init_params(config, options.seed);
  auto tensors = collect_tensors(params, config);
  AdamState adam;
  adam.init(tensors);
  MatchCache cache(dataset, emb);

  std::ofstream log;
  if (!options.log_path.empty()) {
    log.open(options.log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write log " + options.log_path);
  }

  TrainResult result;
  result.params = params;
  HintParams best = params;
  int since_best = 0;
  Rng root(options.seed);

  const int batch = options.batch_size;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    Rng erng = root.split("epoch-" + std::to_string(epoch));

    double loss_sum = 0.0;
    long correct = 0, evaluated = 0;
    for (int b = 0; b < options.batches_per_epoch; ++b) {
      std::vector<Triple> triples(batch);
      for (int i = 0; i < batch; ++i) triples[i] = sampler.sample(erng);

      const int workers = std::min<int>(options.workers, batch);
      std::vector<WorkerResult> results;
      results.reserve(workers);
      for (int w = 0; w < workers; ++w)
        results.push_back({allocate_params(config), 0.0, 0, 0, false});

      const std::size_t per = (triples.size() + workers - 1) / workers;
      if (workers == 1) {
        run_slice(dataset, emb, config, params, cache, triples, 0, triples.size(),
                  1.0 / batch, results[0]);
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
          std::size_t begin = std::min<std::size_t>(w * per, triples.size());
          std::size_t end = std::min<std::size_t>(begin + per, triples.size());
          pool.emplace_back(run_slice, std::cref(dataset), std::cref(emb),
                            std::cref(config), std::cref(params), std::ref(cache),
                            std::cref(triples), begin, end, 1.0 / batch,
                            std::ref(results[w]));
        }
        for (auto& t : pool) t.join();
      }

      HintGrads grads = std::move(results[0].grads);
      auto grad_view = collect_tensors(grads, config);
      for (int w = 1; w < workers; ++w) {
        auto other = collect_tensors(results[w].grads, config);
        add_grads(grad_view, other);
      }
      for (const auto& r : results) {
        if (r.non_finite) throw NumericError("training loss is not finite");
        loss_sum += r.loss_sum;
        correct += r.correct;
        evaluated += r.evaluated;
      }
      adam_step(options.adam, adam, tensors, grad_view);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / (static_cast<double>(options.batches_per_epoch) * batch);
    stats.train_accuracy =
        evaluated > 0 ? static_cast<double>(correct) / evaluated : 0.0;
    if (!std::isfinite(stats.loss)) throw NumericError("training loss is not finite");

    if (!val_qids.empty()) {
      stats.val_map = model_map(dataset, emb, config, params, val_qids, &cache);
      if (stats.val_map > result.best_val_map) {
        result.best_val_map = stats.val_map;
        result.best_epoch = epoch;
        best = params;
        since_best = 0;
      } else {
        ++since_best;
      }
    }

    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                  started)
                        .count();
    result.history.push_back(stats);
    result.epochs_run = epoch;
    result.final_train_accuracy = stats.train_accuracy;

    if (log) {
      nlohmann::json j{{"epoch", stats.epoch},
                       {"loss", stats.loss},
                       {"train_accuracy", stats.train_accuracy},
                       {"seconds", stats.seconds}};
      if (stats.val_map >= 0) j["val_map"] = stats.val_map;
      log << j.dump() << "\n";
      log.flush();
    }
    if (options.verbose) {
      std::string line = "epoch " + std::to_string(epoch) +
                         " loss=" + std::to_string(stats.loss) +
                         " acc=" + std::to_string(stats.train_accuracy);
      if (stats.val_map >= 0) line += " val_map=" + std::to_string(stats.val_map);
      std::fputs((line + "\n").c_str(), stderr);
    }

    if (options.stop_train_accuracy > 0 &&
        stats.train_accuracy >= options.stop_train_accuracy)
      break;
    if (!val_qids.empty() && options.patience > 0 && since_best >= options.patience)
      break;
  }

  result.params = val_qids.empty() ? params : best;
  return result;
}

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

namespace {

// Smallest gap between the k-th and (k+1)-th candidate per pooled dimension;
// +inf when every candidate is selected.
double pooling_margin(const Eigen::MatrixXd& cand_rows, int k) {
  const int n = static_cast<int>(cand_rows.rows());
  if (n <= k) return std::numeric_limits<double>::infinity();
  double margin = std::numeric_limits<double>::infinity();
  std::vector<double> col(n);
  for (int c = 0; c < cand_rows.cols(); ++c) {
    for (int r = 0; r < n; ++r) col[r] = cand_rows(r, c);
    std::nth_element(col.begin(), col.begin() + k, col.end(),
                     std::greater<double>());
    std::nth_element(col.begin(), col.begin() + (k - 1), col.begin() + k,
                     std::greater<double>());
    margin = std::min(margin, col[k - 1] - col[k]);
  }
  return margin;
}

}  // namespace

GradCheckReport grad_check(const ModelConfig& config, std::uint64_t seed,
                           const GradCheckDims& dims, double h, double tolerance,
                           double min_margin) {
  Vocabulary vocab;
  for (int i = 1; i < dims.vocab_size; ++i) vocab.add_core("w" + std::to_string(i));
  EmbeddingTable emb =
      random_embeddings(vocab, config.emb_dim, hash_combine(seed, 0x9e1d));

  GradCheckReport report;
  report.tolerance = tolerance;

  Rng base(seed);
  for (int attempt = 0; attempt < 50; ++attempt) {
    Rng rng = base.split("instance-" + std::to_string(attempt));
    std::vector<int> query(dims.query_len);
    for (int& t : query) t = 1 + static_cast<int>(rng.next_below(vocab.size() - 1));

    std::vector<Passage> passages(dims.num_passages);
    for (int p = 0; p < dims.num_passages; ++p) {
      Passage& pas = passages[p];
      pas.doc_id = "probe";
      pas.ordinal = p;
      pas.tokens.assign(dims.passage_len, Vocabulary::kPadId);
      pas.mask.assign(dims.passage_len, 0);
      // The final passage carries padding so masking is part of the audit.
      int real = (p == dims.num_passages - 1 && dims.passage_len > 1)
                     ? dims.passage_len - 1
                     : dims.passage_len;
      for (int i = 0; i < real; ++i) {
        pas.tokens[i] = 1 + static_cast<int>(rng.next_below(vocab.size() - 1));
        pas.mask[i] = 1;
      }
    }

    HintParams params =
        init_params(config, hash_combine(seed, 0xabcd + attempt));
    DocScoreCache cache;
    auto score = score_document(query, passages, emb, config, params, &cache);
    if (!score) throw std::logic_error("probe instance could not be scored");

    if (pooling_margin(cache.decision.cand_rows, config.k) < min_margin) {
      ++report.resampled;
      continue;
    }

    HintGrads grads = allocate_params(config);
    score_backprop(query, passages, emb, config, params, cache, 1.0, grads);

    auto ptensors = collect_tensors(params, config);
    auto gtensors = collect_tensors(grads, config);
    report.max_rel_err = 0.0;
    for (std::size_t ti = 0; ti < ptensors.size(); ++ti) {
      GradCheckReport::PerTensor pt;
      pt.name = ptensors[ti].name;
      for (long j = 0; j < ptensors[ti].size; ++j) {
        double* slot = ptensors[ti].data + j;
        const double saved = *slot;
        *slot = saved + h;
        double up = *score_document(query, passages, emb, config, params);
        *slot = saved - h;
        double dn = *score_document(query, passages, emb, config, params);
        *slot = saved;
        const double numeric = (up - dn) / (2.0 * h);
        const double analytic = gtensors[ti].data[j];
        const double rel = std::abs(analytic - numeric) /
                           std::max({std::abs(analytic), std::abs(numeric), 1e-4});
        if (rel > pt.max_rel_err) {
          pt.max_rel_err = rel;
          pt.worst_index = j;
          pt.analytic = analytic;
          pt.numeric = numeric;
        }
      }
      report.max_rel_err = std::max(report.max_rel_err, pt.max_rel_err);
      report.tensors.push_back(std::move(pt));
    }
    report.pass = report.max_rel_err <= tolerance;
    return report;
  }
  throw NumericError("could not draw a pooling-stable probe instance");
}

}  // namespace hint
