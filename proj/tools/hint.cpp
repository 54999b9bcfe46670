// Command-line front end: corpus preparation, training, ranking, evaluation,
// passage-size sweeps, signal inspection, and gradient audits.
//
// Exit codes: 0 success, 1 operation failed, 2 usage error, 3 malformed or
// missing input data.

#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hint/baselines.hpp"
#include "hint/checkpoint.hpp"
#include "hint/corpus.hpp"
#include "hint/evaluation.hpp"
#include "hint/experiment.hpp"
#include "hint/model.hpp"
#include "hint/training.hpp"

namespace {

using namespace hint;

struct EmbOpts {
  std::string path;
  int random_dim = 0;
  std::uint64_t seed = 7;
};

void add_emb_options(CLI::App* cmd, EmbOpts& opts) {
  auto* file = cmd->add_option("--embeddings", opts.path,
                               "word vectors, word2vec text format")
                   ->check(CLI::ExistingFile);
  cmd->add_option("--random-emb-dim", opts.random_dim,
                  "skip the vectors file and draw seeded random vectors of "
                  "this width")
      ->excludes(file);
  cmd->add_option("--emb-seed", opts.seed,
                  "seed for vectors of tokens missing from the file");
}

EmbeddingTable load_emb(const EmbOpts& opts, const Vocabulary& vocab) {
  if (!opts.path.empty()) return load_embeddings(opts.path, vocab, 0, opts.seed);
  if (opts.random_dim > 0)
    return random_embeddings(vocab, opts.random_dim, opts.seed);
  throw CLI::RequiredError("--embeddings or --random-emb-dim");
}

struct ModelOpts {
  std::string variant = "hd";
  std::string channels = "both";
  std::string ad_pool = "union";
  std::string scan = "row-major";
  bool matrix_input = false;
  bool share_direction = false;
  bool no_comp_bias = false;
  int k = 10;
  int sgru_dim = 2;
  int lstm_dim = 6;
  int scorer_hidden = 0;

  ModelConfig to_config(int emb_dim) const {
    ModelConfig c;
    c.variant = variant_from_name(variant);
    c.channels = channel_mode_from_name(channels);
    c.tensor_input = !matrix_input;
    c.share_direction_params = share_direction;
    c.ad_pool = ad_pool_from_name(ad_pool);
    c.k = k;
    c.sgru_dim = sgru_dim;
    c.lstm_dim = lstm_dim;
    c.emb_dim = emb_dim;
    c.comp_bias = !no_comp_bias;
    c.scorer_hidden = scorer_hidden;
    c.scan = scan_order_from_name(scan);
    return c;
  }
};

void add_model_options(CLI::App* cmd, ModelOpts& m) {
  cmd->add_option("--variant", m.variant, "decision strategy: id|ad|hd")
      ->check(CLI::IsMember({"id", "ad", "hd"}));
  cmd->add_option("--channels", m.channels, "interaction channels: both|cos|xor")
      ->check(CLI::IsMember({"both", "cos", "xor"}));
  cmd->add_flag("--matrix-input", m.matrix_input,
                "feed the interaction value alone (drop the compressed "
                "word signals)");
  cmd->add_flag("--share-direction", m.share_direction,
                "one recurrent parameter set per channel, shared by both "
                "scan directions");
  cmd->add_option("--ad-pool", m.ad_pool,
                  "accumulative candidate layout: union|concat")
      ->check(CLI::IsMember({"union", "concat"}));
  cmd->add_option("--k", m.k, "pooled values per dimension");
  cmd->add_option("--sgru-dim", m.sgru_dim, "recurrent layer width");
  cmd->add_option("--lstm-dim", m.lstm_dim, "decision LSTM width");
  cmd->add_flag("--no-comp-bias", m.no_comp_bias,
                "drop the bias from the word-signal compression");
  cmd->add_option("--scorer-hidden", m.scorer_hidden,
                  "hidden width of the scorer (0 = affine)");
  cmd->add_option("--scan", m.scan, "cell order: row-major|wavefront")
      ->check(CLI::IsMember({"row-major", "wavefront"}));
}

struct TrainOpts {
  double lr = 1e-3;
  int batch_size = 100;
  int batches_per_epoch = 16;
  int epochs = 50;
  int patience = 10;
  int workers = 1;
  std::uint64_t seed = 1;
  double stop_train_acc = -1.0;
  std::string log_path;
  bool verbose = false;

  TrainOptions to_options() const {
    TrainOptions o;
    o.adam.lr = lr;
    o.batch_size = batch_size;
    o.batches_per_epoch = batches_per_epoch;
    o.epochs = epochs;
    o.patience = patience;
    o.workers = workers;
    o.seed = seed;
    o.stop_train_accuracy = stop_train_acc;
    o.log_path = log_path;
    o.verbose = verbose;
    return o;
  }
};

void add_train_options(CLI::App* cmd, TrainOpts& t) {
  cmd->add_option("--lr", t.lr, "Adam learning rate");
  cmd->add_option("--batch-size", t.batch_size, "triples per update");
  cmd->add_option("--batches-per-epoch", t.batches_per_epoch, "updates per epoch");
  cmd->add_option("--epochs", t.epochs, "epoch limit");
  cmd->add_option("--patience", t.patience,
                  "epochs without validation improvement before stopping");
  cmd->add_option("--workers", t.workers, "gradient worker threads");
  cmd->add_option("--seed", t.seed, "training seed");
  cmd->add_option("--stop-train-acc", t.stop_train_acc,
                  "stop once training pair accuracy reaches this (off when < 0)");
  cmd->add_option("--log", t.log_path, "JSONL epoch log path");
  cmd->add_flag("--verbose", t.verbose, "epoch progress on stderr");
}

std::set<std::string> pick_qids(const Dataset& ds, const std::string& split,
                                int fold) {
  if (split == "all") {
    auto ids = ds.query_ids();
    return {ids.begin(), ids.end()};
  }
  if (fold < 0 || fold >= static_cast<int>(ds.folds.size()))
    throw std::invalid_argument("fold " + std::to_string(fold) +
                                " out of range (dataset has " +
                                std::to_string(ds.folds.size()) + ")");
  const FoldSplit& f = ds.folds[fold];
  if (split == "train") return f.train;
  if (split == "validation") return f.validation;
  return f.test;
}

void check_emb_dim(const ModelConfig& config, const EmbeddingTable& emb) {
  if (config.emb_dim != emb.dim())
    throw std::invalid_argument(
        "model expects " + std::to_string(config.emb_dim) +
        "-dimensional embeddings, got " + std::to_string(emb.dim()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hint: passage-evidence neural ranker with lexical baselines"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ------------------------------------------------------------------ prepare
  struct {
    std::string queries, docs, qrels, stoplist, out;
    PrepareConfig config;
    bool no_stem = false;
  } prep;
  {
    auto* cmd = app.add_subcommand(
        "prepare", "tokenize the corpus, build the vocabulary, segment "
                   "documents, and split folds");
    cmd->set_config("--config", "", "key=value option file");
    cmd->add_option("--queries", prep.queries, "TSV: qid<TAB>text")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--docs", prep.docs, "JSONL: {\"docid\", \"text\"}")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--qrels", prep.qrels, "judgments: qid docid grade")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--stoplist", prep.stoplist, "one stopword per line")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", prep.out, "prepared dataset path")->required();
    cmd->add_option("--passage-size", prep.config.passage_size,
                    "tokens per passage window");
    cmd->add_option("--min-count", prep.config.min_count,
                    "collection frequency needed to enter the vocabulary");
    cmd->add_option("--folds", prep.config.fold_count, "cross-validation folds");
    cmd->add_option("--seed", prep.config.seed, "fold shuffle seed");
    cmd->add_flag("--no-stem", prep.no_stem, "disable the plural stripper");
    cmd->callback([&] {
      prep.config.stem = !prep.no_stem;
      Stoplist stop;
      if (!prep.stoplist.empty()) stop = Stoplist::load(prep.stoplist);
      Dataset ds = prepare_dataset(load_queries_tsv(prep.queries),
                                   load_docs_jsonl(prep.docs),
                                   Qrels::load(prep.qrels), stop, prep.config);
      save_dataset(ds, prep.out);
      for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
      nlohmann::json j{{"out", prep.out},
                       {"input_hash", ds.input_hash},
                       {"queries", ds.queries.size()},
                       {"docs", ds.docs.size()},
                       {"vocab", ds.vocab.size()},
                       {"passage_size", ds.passage_size},
                       {"folds", ds.folds.size()}};
      std::cout << j.dump(2) << "\n";
    });
  }

  // -------------------------------------------------------------------- train
  struct {
    std::string dataset, out, init_from;
    int fold = 0;
    EmbOpts emb;
    ModelOpts model;
    TrainOpts train;
  } tr;
  {
    auto* cmd = app.add_subcommand("train",
                                   "train on one fold and keep the best "
                                   "validation checkpoint");
    cmd->set_config("--config", "", "key=value option file");
    cmd->add_option("--dataset", tr.dataset, "prepared dataset")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", tr.out, "checkpoint path")->required();
    cmd->add_option("--fold", tr.fold, "fold whose train/validation split to use");
    cmd->add_option("--init-from", tr.init_from,
                    "warm-start checkpoint (model architecture comes from it)")
        ->check(CLI::ExistingFile);
    add_emb_options(cmd, tr.emb);
    add_model_options(cmd, tr.model);
    add_train_options(cmd, tr.train);
    cmd->callback([&] {
      Dataset ds = load_dataset(tr.dataset);
      EmbeddingTable emb = load_emb(tr.emb, ds.vocab);

      ModelConfig config;
      HintParams warm;
      const HintParams* warm_ptr = nullptr;
      if (!tr.init_from.empty()) {
        LoadedCheckpoint ckpt = load_checkpoint(tr.init_from);
        config = ckpt.config;
        warm = std::move(ckpt.params);
        warm_ptr = &warm;
        std::cerr << "note: architecture taken from " << tr.init_from << "\n";
      } else {
        config = tr.model.to_config(emb.dim());
      }
      check_emb_dim(config, emb);

      auto qids = pick_qids(ds, "train", tr.fold);
      auto val = pick_qids(ds, "validation", tr.fold);
      TrainResult result = train_model(ds, emb, config, qids, val,
                                       tr.train.to_options(), warm_ptr);

      nlohmann::json meta{{"best_epoch", result.best_epoch},
                          {"best_val_map", result.best_val_map},
                          {"epochs_run", result.epochs_run},
                          {"final_train_accuracy", result.final_train_accuracy},
                          {"fold", tr.fold},
                          {"param_count", param_count(config)}};
      CheckpointMeta cm{meta.dump()};
      save_checkpoint(tr.out, config, result.params, cm);

      meta["out"] = tr.out;
      std::cout << meta.dump(2) << "\n";
    });
  }

  // --------------------------------------------------------------------- rank
  struct {
    std::string dataset, model, out, method = "hint", split = "all", tag;
    int fold = 0;
    EmbOpts emb;
    Bm25Config bm25;
    MspConfig msp;
  } rk;
  {
    auto* cmd = app.add_subcommand("rank", "write a TREC run over the judged "
                                           "documents of each query");
    cmd->set_config("--config", "", "key=value option file");
    cmd->add_option("--dataset", rk.dataset, "prepared dataset")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", rk.out, "run file path")->required();
    cmd->add_option("--method", rk.method, "scorer: hint|bm25|msp")
        ->check(CLI::IsMember({"hint", "bm25", "msp"}));
    cmd->add_option("--model", rk.model, "checkpoint (hint method)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--split", rk.split, "queries to rank: all|train|validation|test")
        ->check(CLI::IsMember({"all", "train", "validation", "test"}));
    cmd->add_option("--fold", rk.fold, "fold for non-all splits");
    cmd->add_option("--tag", rk.tag, "run tag (defaults to the method name)");
    cmd->add_option("--k1", rk.bm25.k1, "bm25 k1");
    cmd->add_option("--b", rk.bm25.b, "bm25 b");
    cmd->add_option("--mu", rk.msp.mu, "Dirichlet pseudo-count");
    add_emb_options(cmd, rk.emb);
    cmd->callback([&] {
      Dataset ds = load_dataset(rk.dataset);
      auto qids = pick_qids(ds, rk.split, rk.fold);
      Run run;
      if (rk.method == "bm25") {
        run = rank_with_bm25(ds, qids, rk.bm25);
      } else if (rk.method == "msp") {
        run = rank_with_msp(ds, qids, rk.msp);
      } else {
        if (rk.model.empty()) throw CLI::RequiredError("--model");
        LoadedCheckpoint ckpt = load_checkpoint(rk.model);
        EmbeddingTable emb = load_emb(rk.emb, ds.vocab);
        check_emb_dim(ckpt.config, emb);
        run = rank_with_model(ds, emb, ckpt.config, ckpt.params, qids);
      }
      save_trec_run(rk.out, run, rk.tag.empty() ? rk.method : rk.tag);
      std::size_t lines = 0;
      for (const auto& [qid, docs] : run) lines += docs.size();
      nlohmann::json j{{"out", rk.out},
                       {"method", rk.method},
                       {"queries", run.size()},
                       {"entries", lines}};
      std::cout << j.dump(2) << "\n";
    });
  }

  // --------------------------------------------------------------------- eval
  struct {
    std::string dataset, qrels, run, baseline, out_json, out_csv;
  } ev;
  {
    auto* cmd = app.add_subcommand("eval", "score a run; optionally test "
                                           "significance against a baseline run");
    cmd->set_config("--config", "", "key=value option file");
    auto* dopt = cmd->add_option("--dataset", ev.dataset,
                                 "prepared dataset (judgment source)")
                     ->check(CLI::ExistingFile);
    cmd->add_option("--qrels", ev.qrels, "raw judgment file (alternative)")
        ->excludes(dopt)
        ->check(CLI::ExistingFile);
    cmd->add_option("--run", ev.run, "TREC run to evaluate")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--baseline", ev.baseline, "TREC run to compare against")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", ev.out_json, "JSON report path");
    cmd->add_option("--csv", ev.out_csv, "per-query CSV path");
    cmd->callback([&] {
      Qrels qrels;
      if (!ev.dataset.empty()) {
        qrels = load_dataset(ev.dataset).qrels;
      } else if (!ev.qrels.empty()) {
        qrels = Qrels::load(ev.qrels);
      } else {
        throw CLI::RequiredError("--dataset or --qrels");
      }
      EvalReport report = evaluate_run(load_trec_run(ev.run), qrels);

      nlohmann::json j = nlohmann::json::parse(eval_report_to_json(report));
      if (!ev.baseline.empty()) {
        EvalReport base = evaluate_run(load_trec_run(ev.baseline), qrels);
        std::map<std::string, double> base_ap;
        for (const auto& qe : base.per_query) base_ap[qe.qid] = qe.metrics.at("map");
        std::vector<double> a, b;
        for (const auto& qe : report.per_query) {
          auto it = base_ap.find(qe.qid);
          if (it == base_ap.end()) continue;
          a.push_back(qe.metrics.at("map"));
          b.push_back(it->second);
        }
        if (a.size() >= 2) {
          TTestResult t = paired_ttest(a, b);
          j["significance"] = {{"metric", "map"}, {"pairs", a.size()},
                               {"t", t.t},       {"p", t.p},
                               {"df", t.df},     {"degenerate", t.degenerate}};
          j["baseline_means"] = base.means;
        } else {
          j["significance"] = nullptr;
        }
      }
      std::string text = j.dump(2) + "\n";
      if (!ev.out_json.empty()) write_file(ev.out_json, text);
      if (!ev.out_csv.empty()) write_file(ev.out_csv, eval_report_to_csv(report));
      std::cout << text;
    });
  }

  // ------------------------------------------------------- sweep-passage-size
  struct {
    std::string dataset, out;
    int fold = 0;
    std::vector<int> sizes;
    EmbOpts emb;
    ModelOpts model;
    TrainOpts train;
  } sw;
  {
    auto* cmd = app.add_subcommand(
        "sweep-passage-size",
        "re-segment, retrain, and report held-out MAP per passage size");
    cmd->set_config("--config", "", "key=value option file");
    cmd->add_option("--dataset", sw.dataset, "prepared dataset")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--sizes", sw.sizes, "passage sizes, e.g. 10,50,100")
        ->required()
        ->delimiter(',');
    cmd->add_option("--fold", sw.fold, "fold to train and test on");
    cmd->add_option("--out", sw.out, "CSV path")->required();
    add_emb_options(cmd, sw.emb);
    add_model_options(cmd, sw.model);
    add_train_options(cmd, sw.train);
    cmd->callback([&] {
      Dataset ds = load_dataset(sw.dataset);
      EmbeddingTable emb = load_emb(sw.emb, ds.vocab);
      ModelConfig config = sw.model.to_config(emb.dim());
      auto points = sweep_passage_size(std::move(ds), emb, config,
                                       sw.train.to_options(), sw.fold, sw.sizes);
      std::string csv = sweep_to_csv(points);
      write_file(sw.out, csv);
      std::cout << csv;
    });
  }

  // ---------------------------------------------------------- inspect-signals
  struct {
    std::string dataset, model, qid, docid, out;
    EmbOpts emb;
  } insp;
  {
    auto* cmd = app.add_subcommand(
        "inspect-signals",
        "dump the passage evidence behind one (query, document) score");
    cmd->set_config("--config", "", "key=value option file");
    cmd->add_option("--dataset", insp.dataset, "prepared dataset")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--model", insp.model, "checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--qid", insp.qid, "query id")->required();
    cmd->add_option("--docid", insp.docid, "document id")->required();
    cmd->add_option("--out", insp.out, "JSON path (stdout when omitted)");
    add_emb_options(cmd, insp.emb);
    cmd->callback([&] {
      Dataset ds = load_dataset(insp.dataset);
      LoadedCheckpoint ckpt = load_checkpoint(insp.model);
      EmbeddingTable emb = load_emb(insp.emb, ds.vocab);
      check_emb_dim(ckpt.config, emb);
      std::string text = inspect_signals_json(ds, emb, ckpt.config, ckpt.params,
                                              insp.qid, insp.docid);
      if (insp.out.empty())
        std::cout << text;
      else
        write_file(insp.out, text);
    });
  }

  // --------------------------------------------------------------- grad-check
  struct {
    std::string variant = "all";
    int seeds = 5;
    std::uint64_t seed = 1;
    double tolerance = 1e-4;
    double step = 1e-5;
    double margin = 1e-3;
    GradCheckDims dims;
    int sgru_dim = 2, lstm_dim = 3, k = 2, emb_dim = 8, scorer_hidden = 0;
    std::string channels = "both", ad_pool = "union";
    bool matrix_input = false, share_direction = false;
  } gc;
  {
    auto* cmd = app.add_subcommand(
        "grad-check", "audit the analytic gradients against central "
                      "differences on small synthetic instances");
    cmd->set_config("--config", "", "key=value option file");
    cmd->add_option("--variant", gc.variant, "id|ad|hd|all")
        ->check(CLI::IsMember({"id", "ad", "hd", "all"}));
    cmd->add_option("--seeds", gc.seeds, "number of seeds per variant");
    cmd->add_option("--seed", gc.seed, "base seed");
    cmd->add_option("--tolerance", gc.tolerance, "max relative error allowed");
    cmd->add_option("--step", gc.step, "finite-difference step");
    cmd->add_option("--margin", gc.margin, "min pooling margin for a probe");
    cmd->add_option("--query-len", gc.dims.query_len, "probe query length");
    cmd->add_option("--passage-len", gc.dims.passage_len, "probe passage length");
    cmd->add_option("--passages", gc.dims.num_passages, "probe passage count");
    cmd->add_option("--vocab", gc.dims.vocab_size, "probe vocabulary size");
    cmd->add_option("--sgru-dim", gc.sgru_dim, "recurrent layer width");
    cmd->add_option("--lstm-dim", gc.lstm_dim, "decision LSTM width");
    cmd->add_option("--k", gc.k, "pool size");
    cmd->add_option("--emb-dim", gc.emb_dim, "probe embedding width");
    cmd->add_option("--scorer-hidden", gc.scorer_hidden, "scorer hidden width");
    cmd->add_option("--channels", gc.channels, "both|cos|xor")
        ->check(CLI::IsMember({"both", "cos", "xor"}));
    cmd->add_option("--ad-pool", gc.ad_pool, "union|concat")
        ->check(CLI::IsMember({"union", "concat"}));
    cmd->add_flag("--matrix-input", gc.matrix_input, "interaction value only");
    cmd->add_flag("--share-direction", gc.share_direction,
                  "share direction parameters");
    cmd->callback([&] {
      std::vector<std::string> variants =
          gc.variant == "all" ? std::vector<std::string>{"id", "ad", "hd"}
                              : std::vector<std::string>{gc.variant};
      bool all_pass = true;
      for (const std::string& v : variants) {
        ModelConfig config;
        config.variant = variant_from_name(v);
        config.channels = channel_mode_from_name(gc.channels);
        config.tensor_input = !gc.matrix_input;
        config.share_direction_params = gc.share_direction;
        config.ad_pool = ad_pool_from_name(gc.ad_pool);
        config.k = gc.k;
        config.sgru_dim = gc.sgru_dim;
        config.lstm_dim = gc.lstm_dim;
        config.emb_dim = gc.emb_dim;
        config.scorer_hidden = gc.scorer_hidden;
        for (int s = 0; s < gc.seeds; ++s) {
          GradCheckReport report = grad_check(config, gc.seed + s, gc.dims,
                                              gc.step, gc.tolerance, gc.margin);
          std::printf("variant=%s seed=%llu params=%ld max_rel_err=%.3e "
                      "resampled=%d %s\n",
                      v.c_str(),
                      static_cast<unsigned long long>(gc.seed + s),
                      param_count(config), report.max_rel_err, report.resampled,
                      report.pass ? "PASS" : "FAIL");
          if (!report.pass) {
            all_pass = false;
            for (const auto& t : report.tensors) {
              if (t.max_rel_err > gc.tolerance)
                std::printf("  %-24s rel_err=%.3e analytic=%.6e numeric=%.6e\n",
                            t.name.c_str(), t.max_rel_err, t.analytic, t.numeric);
            }
          }
        }
      }
      std::printf("gradient audit: %s\n", all_pass ? "PASS" : "FAIL");
      if (!all_pass) exit_code = 1;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const hint::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const hint::NotFoundError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
