// Release gate: every property below must hold before the model is usable.
// Each check prints one [PASS]/[FAIL] line with the measured values; the
// binary exits nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hint/baselines.hpp"
#include "hint/checkpoint.hpp"
#include "hint/evaluation.hpp"
#include "hint/experiment.hpp"
#include "hint/training.hpp"
#include "support/corpora.hpp"

using namespace hint;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

ModelConfig probe_config(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.sgru_dim = 2;
  c.lstm_dim = 3;
  c.k = 2;
  c.emb_dim = 8;
  return c;
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Analytic gradients vs central finite differences, all three variants.
// ---------------------------------------------------------------------------
Outcome check_gradients() {
  const double tolerance = 1e-4;
  GradCheckDims dims;
  dims.query_len = 3;
  dims.passage_len = 4;
  dims.num_passages = 3;
  dims.vocab_size = 12;

  double worst = 0.0;
  std::string worst_at;
  for (Variant v : {Variant::kIndependent, Variant::kAccumulative,
                    Variant::kHybrid}) {
    ModelConfig config = probe_config(v);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      GradCheckReport report =
          grad_check(config, seed, dims, 1e-5, tolerance, 1e-3);
      if (report.max_rel_err > worst) {
        worst = report.max_rel_err;
        worst_at = to_name(v) + "/seed " + std::to_string(seed);
      }
      if (!report.pass)
        return {false, fmt("%s seed %llu max_rel_err=%.3e > %.0e",
                           to_name(v).c_str(),
                           static_cast<unsigned long long>(seed),
                           report.max_rel_err, tolerance)};
    }
  }
  return {true, fmt("15 audits, worst rel err %.3e (%s), tolerance 1e-4",
                    worst, worst_at.c_str())};
}

// ---------------------------------------------------------------------------
// 2. Pooling vs a sort-based oracle, exact equality.
// ---------------------------------------------------------------------------
PoolResult oracle_pool(const Eigen::MatrixXd& rows, int k) {
  const int n = static_cast<int>(rows.rows());
  const int dims = static_cast<int>(rows.cols());
  PoolResult out;
  out.values = Eigen::MatrixXd::Zero(k, dims);
  out.src = Eigen::MatrixXi::Constant(k, dims, -1);
  for (int c = 0; c < dims; ++c) {
    std::vector<std::pair<double, int>> col;
    for (int r = 0; r < n; ++r) col.emplace_back(rows(r, c), r);
    std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (int r = 0; r < std::min(k, n); ++r) {
      out.values(r, c) = col[r].first;
      out.src(r, c) = col[r].second;
    }
  }
  return out;
}

Outcome check_pooling() {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const int rows = 1 + static_cast<int>(rng.next_below(20));
    const int cols = 1 + static_cast<int>(rng.next_below(8));
    const int k = 1 + static_cast<int>(rng.next_below(12));
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)  // coarse grid forces plenty of ties
        m(r, c) = 0.5 * std::floor(8.0 * rng.uniform(-1.0, 1.0)) / 2.0;

    PoolResult got = kmax_pool(m, k);
    PoolResult want = oracle_pool(m, k);
    if (!(got.values.array() == want.values.array()).all() ||
        !(got.src.array() == want.src.array()).all())
      return {false, fmt("mismatch on trial %d (%dx%d, k=%d)", trial, rows,
                         cols, k)};
  }
  return {true, "1000 random matrices (rows<=20, dims<=8, k<=12), exact"};
}

// ---------------------------------------------------------------------------
// 3. Ranking metrics vs definition oracles, exhaustively for 4-doc lists.
// ---------------------------------------------------------------------------
double oracle_ap(const std::vector<int>& grades_in_rank_order, int total_relevant) {
  if (total_relevant <= 0) return 0.0;
  double sum = 0.0;
  int seen = 0;
  for (std::size_t i = 0; i < grades_in_rank_order.size(); ++i) {
    if (grades_in_rank_order[i] > 0) {
      ++seen;
      sum += static_cast<double>(seen) / static_cast<double>(i + 1);
    }
  }
  return sum / total_relevant;
}

double oracle_dcg(const std::vector<int>& grades, int k) {
  double dcg = 0.0;
  for (int i = 0; i < k && i < static_cast<int>(grades.size()); ++i)
    dcg += (std::pow(2.0, grades[i]) - 1.0) / std::log2(i + 2.0);
  return dcg;
}

double oracle_ndcg(const std::vector<int>& ranked_grades,
                   std::vector<int> all_grades, int k) {
  std::sort(all_grades.rbegin(), all_grades.rend());
  double ideal = oracle_dcg(all_grades, k);
  return ideal == 0.0 ? 0.0 : oracle_dcg(ranked_grades, k) / ideal;
}

Outcome check_metrics() {
  const double tol = 1e-12;
  long cases = 0;
  std::vector<int> perm = {0, 1, 2, 3};
  for (int code = 0; code < 81; ++code) {  // grades in {0,1,2}^4
    std::vector<int> grades(4);
    int c = code;
    for (int i = 0; i < 4; ++i, c /= 3) grades[i] = c % 3;
    int total_relevant = 0;
    for (int g : grades) total_relevant += g > 0 ? 1 : 0;

    std::vector<int> p = perm;
    do {
      std::vector<ScoredDoc> ranking;
      std::vector<int> in_order;
      for (int i = 0; i < 4; ++i) {
        ScoredDoc d;
        d.docid = std::string("doc") + char('a' + p[i]);
        d.score = 4.0 - i;  // strictly decreasing: the order is the ranking
        d.grade = grades[p[i]];
        ranking.push_back(d);
        in_order.push_back(grades[p[i]]);
      }
      ++cases;
      double ap = average_precision(ranking, total_relevant);
      if (std::fabs(ap - oracle_ap(in_order, total_relevant)) > tol)
        return {false, fmt("AP mismatch, grade code %d", code)};
      for (int k = 1; k <= 4; ++k) {
        double nd = ndcg_at(ranking, k, grades);
        if (std::fabs(nd - oracle_ndcg(in_order, grades, k)) > tol)
          return {false, fmt("NDCG@%d mismatch, grade code %d", k, code)};
      }
    } while (std::next_permutation(p.begin(), p.end()));
  }

  // fixed hand-worked instances
  std::vector<ScoredDoc> fixed = {{"a", 3.0, 1}, {"b", 2.0, 0}, {"c", 1.0, 1}};
  double ap = average_precision(fixed, 2);  // hits at ranks 1 and 3
  if (std::fabs(ap - 5.0 / 6.0) > tol)
    return {false, fmt("fixed AP %.15f != 5/6", ap)};

  std::vector<ScoredDoc> one = {{"a", 2.0, 0}, {"b", 1.0, 1}};
  double nd = ndcg_at(one, 2, {0, 1});
  if (std::fabs(nd - 1.0 / std::log2(3.0)) > tol)
    return {false, fmt("fixed NDCG@2 %.15f != 1/log2(3)", nd)};

  return {true, fmt("%ld enumerated rankings + fixed instances, tol 1e-12",
                    cases)};
}

// ---------------------------------------------------------------------------
// 4. The hybrid model can overfit a planted-relevance corpus.
// ---------------------------------------------------------------------------
Outcome check_overfit(double budget_s) {
  auto start = Clock::now();
  Dataset ds = testsupport::overfit_dataset();
  EmbeddingTable emb = random_embeddings(ds.vocab, 8, 7);
  ModelConfig config = probe_config(Variant::kHybrid);

  std::set<std::string> qids;
  for (const auto& q : ds.queries) qids.insert(q.id);

  TrainOptions options;
  options.epochs = 500;
  options.batch_size = 32;
  options.batches_per_epoch = 8;
  options.adam.lr = 0.005;
  options.seed = 1;
  options.workers = 1;
  options.stop_train_accuracy = 0.99;

  // no validation set: train to the stop condition, keep the final state
  TrainResult result = train_model(ds, emb, config, qids, {}, options);
  double acc = pairwise_accuracy(ds, emb, config, result.params, qids);
  double map = model_map(ds, emb, config, result.params, qids);
  double secs = seconds_since(start);

  bool pass = acc >= 0.95 && map >= 0.95 && result.epochs_run <= 500 &&
              secs < budget_s;
  return {pass, fmt("train accuracy %.4f, train MAP %.4f after %d epochs "
                    "(%.1fs, budget %.0fs)",
                    acc, map, result.epochs_run, secs, budget_s)};
}

// ---------------------------------------------------------------------------
// 5 & 6. Decision-model and input-channel orderings on the evidence corpus.
// ---------------------------------------------------------------------------
struct ArmResult {
  double mean_map = 0.0;
  std::string detail;
};

ArmResult evidence_arm(const Dataset& ds, const EmbeddingTable& emb,
                       const ModelConfig& config, const char* label) {
  const FoldSplit& fold = ds.folds[0];
  TrainOptions options;
  options.epochs = 120;
  options.batch_size = 16;
  options.batches_per_epoch = 16;
  options.adam.lr = 0.005;
  options.patience = 24;
  options.stop_train_accuracy = 0.995;
  options.workers = 1;

  double total = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    options.seed = seed;
    TrainResult r =
        train_model(ds, emb, config, fold.train, fold.validation, options);
    Run run = rank_with_model(ds, emb, config, r.params, fold.test);
    EvalReport report = evaluate_run(run, ds.qrels);
    total += report.means.at("map");
  }
  ArmResult out;
  out.mean_map = total / 3.0;
  out.detail = fmt("%s=%.4f", label, out.mean_map);
  return out;
}

struct EvidenceMaps {
  ArmResult hd, id, ad, xor_only;
};

EvidenceMaps run_evidence_grid() {
  Dataset ds = testsupport::evidence_dataset();
  EmbeddingTable emb = random_embeddings(ds.vocab, 8, 7);

  EvidenceMaps maps;
  maps.hd = evidence_arm(ds, emb, probe_config(Variant::kHybrid), "hd");
  maps.id = evidence_arm(ds, emb, probe_config(Variant::kIndependent), "id");
  maps.ad = evidence_arm(ds, emb, probe_config(Variant::kAccumulative), "ad");

  ModelConfig xo = probe_config(Variant::kHybrid);
  xo.channels = ChannelMode::kXorOnly;
  xo.tensor_input = false;  // identity-match values alone
  maps.xor_only = evidence_arm(ds, emb, xo, "xor-matrix");
  return maps;
}

Outcome check_decision_ordering(const EvidenceMaps& maps) {
  double best_baseline = std::max(maps.id.mean_map, maps.ad.mean_map);
  bool pass = maps.hd.mean_map >= best_baseline - 0.01;
  return {pass, fmt("held-out MAP over 3 seeds: %s %s %s (slack 0.01)",
                    maps.hd.detail.c_str(), maps.id.detail.c_str(),
                    maps.ad.detail.c_str())};
}

Outcome check_channel_ablation(const EvidenceMaps& maps) {
  bool pass = maps.hd.mean_map >= maps.xor_only.mean_map - 0.01;
  return {pass, fmt("held-out MAP over 3 seeds: full %s vs %s (slack 0.01)",
                    maps.hd.detail.c_str(), maps.xor_only.detail.c_str())};
}

// ---------------------------------------------------------------------------
// 7. Trainable parameter count of the default configuration.
// ---------------------------------------------------------------------------
Outcome check_param_count() {
  ModelConfig config;  // stock: sgru 2, lstm 6, k 10, emb 50
  if (config.sgru_dim != 2 || config.lstm_dim != 6 || config.k != 10 ||
      config.emb_dim != 50)
    return {false, "stock configuration changed; re-derive the bounds"};
  long n = param_count(config);
  bool pass = n >= 500 && n <= 2000;
  return {pass, fmt("default hybrid model has %ld trainable parameters "
                    "(required range [500, 2000])", n)};
}

// ---------------------------------------------------------------------------
// 8. Lexical baselines on hand-worked instances.
// ---------------------------------------------------------------------------
Outcome check_baselines() {
  // BM25: the document holding both query terms must come first, and its
  // score must equal the closed form.
  std::vector<std::vector<int>> docs = {{1, 2, 1}, {1, 3}, {2, 4, 4}};
  InvertedIndex index = InvertedIndex::build(docs);
  std::vector<int> query = {1, 2};
  double s0 = bm25_score(index, query, 0, docs[0]);
  double s1 = bm25_score(index, query, 1, docs[1]);
  double s2 = bm25_score(index, query, 2, docs[2]);

  const double idf = std::log(1.6);
  const double norm_len3 = 1.2 * (0.25 + 0.75 * 3.0 / (8.0 / 3.0));
  const double closed = idf * (2 * 2.2 / (2 + norm_len3) + 2.2 / (1 + norm_len3));
  if (std::fabs(s0 - closed) > 1e-9)
    return {false, fmt("bm25 %.9f != closed form %.9f", s0, closed)};
  if (!(s0 > s1 && s0 > s2))
    return {false, fmt("bm25 order wrong: %.4f vs %.4f, %.4f", s0, s1, s2)};

  // Best-passage likelihood: concentrated term evidence must beat the same
  // terms scattered over two windows.
  std::vector<std::vector<int>> msp_docs = {{1, 2, 3, 3, 4, 4, 4, 4},
                                            {1, 3, 3, 3, 2, 4, 4, 4}};
  InvertedIndex msp_index = InvertedIndex::build(msp_docs);
  MspConfig mcfg;
  mcfg.mu = 10.0;
  auto window = [](std::vector<int> tokens, int ordinal) {
    Passage p;
    p.doc_id = "d";
    p.ordinal = ordinal;
    p.mask.assign(tokens.size(), 1);
    p.tokens = std::move(tokens);
    return p;
  };
  std::vector<Passage> focused = {window({1, 2, 3, 3}, 0), window({4, 4, 4, 4}, 1)};
  std::vector<Passage> scattered = {window({1, 3, 3, 3}, 0), window({2, 4, 4, 4}, 1)};
  auto sf = msp_score(msp_index, query, focused, mcfg);
  auto ss = msp_score(msp_index, query, scattered, mcfg);
  if (!sf || !ss) return {false, "best-passage score missing"};

  const double hit = std::log(2.25 / 14.0);
  const double miss = std::log(1.25 / 14.0);
  if (std::fabs(*sf - 2 * hit) > 1e-9 || std::fabs(*ss - (hit + miss)) > 1e-9)
    return {false, fmt("msp %.7f/%.7f != closed form %.7f/%.7f", *sf, *ss,
                       2 * hit, hit + miss)};
  if (!(*sf > *ss))
    return {false, fmt("msp order wrong: %.7f <= %.7f", *sf, *ss)};

  return {true, fmt("bm25 %.6f > %.6f, %.6f; best-passage %.4f > %.4f", s0,
                    s1, s2, *sf, *ss)};
}

// ---------------------------------------------------------------------------
// 9. Determinism of training and checkpoint round trips.
// ---------------------------------------------------------------------------
std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome check_determinism() {
  Dataset ds = testsupport::tiny_dataset();
  EmbeddingTable emb = random_embeddings(ds.vocab, 8, 7);
  ModelConfig config = probe_config(Variant::kHybrid);

  std::set<std::string> qids;
  for (const auto& q : ds.queries) qids.insert(q.id);

  TrainOptions options;
  options.epochs = 3;
  options.batch_size = 4;
  options.batches_per_epoch = 4;
  options.seed = 11;
  options.workers = 1;

  testsupport::TempDir dir;
  TrainResult first = train_model(ds, emb, config, qids, {}, options);
  save_checkpoint(dir.file("a.ckpt"), config, first.params);
  TrainResult second = train_model(ds, emb, config, qids, {}, options);
  save_checkpoint(dir.file("b.ckpt"), config, second.params);

  if (file_bytes(dir.file("a.ckpt")) != file_bytes(dir.file("b.ckpt")))
    return {false, "two identically seeded runs produced different bytes"};

  LoadedCheckpoint loaded = load_checkpoint(dir.file("a.ckpt"));
  int probed = 0;
  for (const auto& q : ds.queries) {
    for (const auto& [docid, grade] : ds.qrels.docs_for(q.id)) {
      if (probed >= 20) break;
      const auto* passages = ds.passages_for(docid);
      if (!passages || passages->empty()) continue;
      auto a = score_document(q.tokens, *passages, emb, config, first.params);
      auto b = score_document(q.tokens, *passages, emb, loaded.config,
                              loaded.params);
      if (!a || !b || *a != *b)
        return {false, "reloaded score differs on " + q.id + "/" + docid};
      ++probed;
    }
    if (probed >= 20) break;
  }
  if (probed < 20) return {false, fmt("only %d probe pairs available", probed)};
  return {true, fmt("identical checkpoint bytes across reruns; %d reloaded "
                    "scores bit-equal", probed)};
}

}  // namespace

int main() {
  struct Row {
    int id;
    const char* name;
    Outcome outcome;
    double secs;
  };
  std::vector<Row> rows;

  auto run = [&](int id, const char* name, auto&& fn) {
    auto start = Clock::now();
    Outcome o = fn();
    rows.push_back({id, name, std::move(o), seconds_since(start)});
  };

  run(1, "gradient audit", [] { return check_gradients(); });
  run(2, "pooling oracle", [] { return check_pooling(); });
  run(3, "metric oracle", [] { return check_metrics(); });
  run(4, "synthetic overfit", [] { return check_overfit(300.0); });

  auto grid_start = Clock::now();
  EvidenceMaps maps = run_evidence_grid();
  double grid_secs = seconds_since(grid_start);
  run(5, "decision-model ordering",
      [&] { return check_decision_ordering(maps); });
  rows.back().secs += grid_secs;  // the grid trains once for both checks
  run(6, "channel ablation", [&] { return check_channel_ablation(maps); });

  run(7, "parameter count", [] { return check_param_count(); });
  run(8, "baseline sanity", [] { return check_baselines(); });
  run(9, "determinism & round trip", [] { return check_determinism(); });

  int failed = 0;
  for (const Row& r : rows) {
    if (!r.outcome.pass) ++failed;
    std::printf("[%s] %d %-24s %s (%.1fs)\n",
                r.outcome.pass ? "PASS" : "FAIL", r.id, r.name,
                r.outcome.detail.c_str(), r.secs);
  }
  std::printf("acceptance: %zu/%zu passed\n", rows.size() - failed,
              rows.size());
  return failed == 0 ? 0 : 1;
}
