#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "hint/training.hpp"
#include "support/corpora.hpp"

using namespace hint;

namespace {

ModelConfig tiny_model() {
  ModelConfig c;
  c.sgru_dim = 2;
  c.lstm_dim = 3;
  c.k = 2;
  c.emb_dim = 8;
  return c;
}

}  // namespace

TEST_CASE("pairwise hinge") {
  CHECK(hinge_loss(2.0, 0.5) == 0.0);        // margin satisfied
  CHECK(hinge_loss(1.0, 0.5) == 0.5);        // inside the margin
  CHECK(hinge_loss(0.0, 0.0) == 1.0);
  CHECK(hinge_loss(-1.0, 1.0) == 3.0);       // misordered
}

TEST_CASE("adam first step reduces to a signed learning-rate move") {
  // After one update from zero moments, m-hat = g and v-hat = g^2, so the
  // step is lr * g / (|g| + eps): the sign of the gradient times ~lr.
  Eigen::VectorXd theta(2);
  theta << 1.0, -1.0;
  Eigen::VectorXd grad(2);
  grad << 1.0, -2.0;

  std::vector<NamedTensor> params = {{"t", theta.data(), 2, 2, 1}};
  std::vector<NamedTensor> grads = {{"t", grad.data(), 2, 2, 1}};

  AdamConfig config;
  config.lr = 0.1;
  AdamState state;
  state.init(params);
  adam_step(config, state, params, grads);

  CHECK(theta(0) == doctest::Approx(1.0 - 0.1).epsilon(1e-6));
  CHECK(theta(1) == doctest::Approx(-1.0 + 0.1).epsilon(1e-6));
  CHECK(state.step == 1);

  // zero learning rate is a no-op even with moments accumulated
  AdamConfig frozen;
  frozen.lr = 0.0;
  Eigen::VectorXd before = theta;
  adam_step(frozen, state, params, grads);
  CHECK(theta(0) == before(0));
  CHECK(theta(1) == before(1));
}

TEST_CASE("adam moment accumulation follows the bias-corrected recurrences") {
  Eigen::VectorXd theta(1);
  theta << 0.0;
  std::vector<NamedTensor> params = {{"t", theta.data(), 1, 1, 1}};

  AdamConfig config;  // lr 1e-3, betas 0.9/0.999
  AdamState state;
  state.init(params);

  double m = 0.0, v = 0.0, x = 0.0;
  Eigen::VectorXd g(1);
  for (int step = 1; step <= 5; ++step) {
    g(0) = 0.3 * step - 0.7;  // varying gradient
    std::vector<NamedTensor> grads = {{"t", g.data(), 1, 1, 1}};
    adam_step(config, state, params, grads);

    m = 0.9 * m + 0.1 * g(0);
    v = 0.999 * v + 0.001 * g(0) * g(0);
    double mh = m / (1.0 - std::pow(0.9, step));
    double vh = v / (1.0 - std::pow(0.999, step));
    x -= config.lr * mh / (std::sqrt(vh) + config.eps);
    CHECK(theta(0) == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("triple sampling: graded pairs, uniform over queries") {
  Dataset ds = testsupport::tiny_dataset();
  // Per query the judged grades are {2, 1, 0, 0, 0, 1-but-empty}; the empty
  // doc is unscorable, leaving pairs (2>1): 1, (2>0): 3, (1>0): 3 = 7.
  std::set<std::string> two = {"t00", "t01"};
  TripleSampler sampler(ds, two);
  CHECK_FALSE(sampler.empty());
  CHECK(sampler.total_pairs() == 14);

  auto all = sampler.all_pairs();
  CHECK(all.size() == 14);
  int empty_idx = ds.doc_index_of("t00-d5");
  for (const auto& t : all) {
    CHECK(t.pos_doc != empty_idx);
    CHECK(t.neg_doc != empty_idx);
    int pg = ds.qrels.grade(ds.queries[t.query_idx].id,
                            ds.docs[t.pos_doc].id);
    int ng = ds.qrels.grade(ds.queries[t.query_idx].id,
                            ds.docs[t.neg_doc].id);
    CHECK(pg > ng);
  }

  // sampling picks the query first: both queries show up about half the
  // time even though their pair counts are equal here; check the spread
  Rng rng(99);
  int first = 0;
  const int draws = 2000;
  int q0 = ds.query_index_of("t00");
  for (int i = 0; i < draws; ++i)
    if (sampler.sample(rng).query_idx == q0) ++first;
  // 3 sigma around 0.5
  CHECK(first > draws / 2 - 3 * 22);
  CHECK(first < draws / 2 + 3 * 22);

  TripleSampler none(ds, std::set<std::string>{});
  CHECK(none.empty());
  CHECK(none.total_pairs() == 0);
}

TEST_CASE("interaction-matrix cache returns stable references") {
  Dataset ds = testsupport::tiny_dataset();
  EmbeddingTable emb = random_embeddings(ds.vocab, 8, 3);
  MatchCache cache(ds, emb);
  int q = ds.query_index_of("t00");
  int d = ds.doc_index_of("t00-d0");
  const auto& a = cache.get(q, d);
  const auto& b = cache.get(q, d);
  CHECK(&a == &b);
  CHECK(a.size() == ds.passages[d].size());

  // contents equal a fresh computation
  MatchMatrices fresh = build_match_matrices(
      ds.queries[q].tokens, ds.passages[d][0].tokens, ds.passages[d][0].mask, emb);
  CHECK((a[0].cos.array() == fresh.cos.array()).all());
  CHECK((a[0].xor_.array() == fresh.xor_.array()).all());
}

TEST_CASE("gradient audit passes on the three strategies and flags tiny tolerances") {
  ModelConfig config = tiny_model();
  GradCheckReport report = grad_check(config, 1);
  CHECK(report.pass);
  CHECK(report.max_rel_err <= 1e-4);
  CHECK_FALSE(report.tensors.empty());

  // every audited tensor reports a finite error; a location exists whenever
  // any gradient mass reached the tensor (the hybrid projection can sit
  // behind a pool that never selects it, leaving an exact zero)
  int untouched = 0;
  for (const auto& t : report.tensors) {
    CHECK(std::isfinite(t.max_rel_err));
    if (t.max_rel_err == 0.0 && t.worst_index < 0)
      ++untouched;
    else
      CHECK(t.worst_index >= 0);
  }
  CHECK(untouched <= 2);

  // the audit must be able to fail: an impossible tolerance trips it
  GradCheckReport strict = grad_check(config, 1, {}, 1e-5, 1e-18);
  CHECK_FALSE(strict.pass);
  CHECK(strict.max_rel_err > 1e-18);
}

TEST_CASE("training runs deterministically and logs epochs") {
  Dataset ds = testsupport::tiny_dataset();
  EmbeddingTable emb = random_embeddings(ds.vocab, 8, 3);
  ModelConfig config = tiny_model();

  std::set<std::string> train_q = {"t00", "t01", "t02", "t03"};
  std::set<std::string> val_q = {"t04", "t05"};

  testsupport::TempDir dir;
  TrainOptions options;
  options.epochs = 3;
  options.batch_size = 8;
  options.batches_per_epoch = 2;
  options.patience = 10;
  options.seed = 5;
  options.log_path = dir.file("log.jsonl");

  TrainResult r1 = train_model(ds, emb, config, train_q, val_q, options);
  CHECK(r1.epochs_run == 3);
  REQUIRE(r1.history.size() == 3);
  for (const auto& e : r1.history) {
    CHECK(std::isfinite(e.loss));
    CHECK(e.train_accuracy >= 0.0);
    CHECK(e.train_accuracy <= 1.0);
    CHECK(e.val_map >= 0.0);  // validation set present
  }
  CHECK(r1.best_epoch >= 1);
  CHECK(r1.best_val_map >= 0.0);

  // the epoch log is one JSON object per line
  std::ifstream log(dir.file("log.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("epoch"));
    CHECK(j.contains("loss"));
    CHECK(j.contains("train_accuracy"));
    CHECK(j.contains("val_map"));
    ++lines;
  }
  CHECK(lines == 3);

  // same seed, same run
  TrainOptions quiet = options;
  quiet.log_path.clear();
  TrainResult r2 = train_model(ds, emb, config, train_q, val_q, quiet);
  auto t1 = collect_tensors(r1.params, config);
  auto t2 = collect_tensors(r2.params, config);
  for (std::size_t i = 0; i < t1.size(); ++i)
    for (long j = 0; j < t1[i].size; ++j)
      CHECK(t1[i].data[j] == t2[i].data[j]);

  // a warm start resumes from the given parameters, not from scratch
  TrainOptions once = quiet;
  once.epochs = 1;
  TrainResult warm = train_model(ds, emb, config, train_q, val_q, once,
                                 &r1.params);
  CHECK(warm.epochs_run == 1);
}

TEST_CASE("two workers accumulate the same batch gradient as one") {
  Dataset ds = testsupport::tiny_dataset();
  EmbeddingTable emb = random_embeddings(ds.vocab, 8, 3);
  ModelConfig config = tiny_model();
  std::set<std::string> train_q = {"t00", "t01", "t02", "t03"};

  TrainOptions options;
  options.epochs = 2;
  options.batch_size = 6;
  options.batches_per_epoch = 2;
  options.seed = 9;

  TrainResult single = train_model(ds, emb, config, train_q, {}, options);
  options.workers = 2;
  TrainResult dual = train_model(ds, emb, config, train_q, {}, options);

  // same triples, same updates up to floating-point reassociation
  auto ts = collect_tensors(single.params, config);
  auto td = collect_tensors(dual.params, config);
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (long j = 0; j < ts[i].size; ++j)
      CHECK(ts[i].data[j] ==
            doctest::Approx(td[i].data[j]).epsilon(1e-6).scale(1e-6));
}

TEST_CASE("model MAP over judged documents with a blind model") {
  Dataset ds = testsupport::tiny_dataset();
  EmbeddingTable emb = random_embeddings(ds.vocab, 8, 3);
  ModelConfig config = tiny_model();
  HintParams zero = allocate_params(config);  // scores everything 0

  // With all scores tied, ranking falls back to docid order d0..d4 (the
  // empty d5 is excluded but still counts as a relevant judged document).
  // Per query: relevant = {d0, d1, d5}, ranked prefix d0, d1 -> AP =
  // (1/1 + 2/2) / 3.
  std::set<std::string> qids = {"t00", "t01", "t02"};
  double map = model_map(ds, emb, config, zero, qids);
  CHECK(map == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  CHECK(model_map(ds, emb, config, zero, std::set<std::string>{}) == -1.0);
}
