// Synthetic corpora and filesystem helpers shared by the test binaries.
//
// Two families of generated collections:
//
//   * overfit corpus: 30 queries, 12 judged docs each. Relevance is a pure
//     function of how many query tokens a document contains (grade-2 docs
//     are saturated with them, grade-1 docs hold two occurrences, grade-0
//     docs none), so a ranker able to count exact matches can reach perfect
//     ordering on its own training queries.
//
//   * evidence corpus: 24 queries, 10 judged docs each, built so that the
//     relevant documents differ in how their evidence is laid out. "Scope"
//     docs (grade 2) are long and off-topic except for one saturated
//     passage; "verbosity" docs (grade 1) spread single matches thinly over
//     every passage; the rest contain no query tokens at all. The pattern is
//     query-independent, so it transfers to held-out folds.
//
// All token streams avoid the plural stripper's suffixes and the generators
// run preparation with stemming off, so surface forms survive unchanged.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hint/common.hpp"
#include "hint/corpus.hpp"

namespace testsupport {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "hint-test-XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
    path_ = buf.data();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

inline std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

/// Deterministic filler words ("g00".."g<pool-1>"), chosen per document.
inline std::vector<std::string> filler(const std::string& key, int n, int pool) {
  hint::Rng rng(hint::hash_combine(hint::fnv1a64(key), 0x5eed));
  std::vector<std::string> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    int pick = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(pool)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "g%02d", pick);
    out.emplace_back(buf);
  }
  return out;
}

struct Corpus {
  std::vector<hint::RawQuery> queries;
  std::vector<hint::RawDoc> docs;
  hint::Qrels qrels;
};

inline Corpus make_overfit_corpus() {
  Corpus c;
  for (int q = 0; q < 30; ++q) {
    char qid[8];
    std::snprintf(qid, sizeof qid, "q%02d", q);
    std::string qa = std::string(qid) + "a";
    std::string qb = std::string(qid) + "b";
    std::string qc = std::string(qid) + "c";
    c.queries.push_back({qid, qa + " " + qb + " " + qc});
    for (int d = 0; d < 12; ++d) {
      char docid[16];
      std::snprintf(docid, sizeof docid, "%s-d%02d", qid, d);
      std::vector<std::string> tokens;
      int grade = 0;
      if (d == 0) {
        grade = 2;  // both passages dense with query terms
        tokens = {qa, qb, qc, qa, qb, qc};
        auto f = filler(docid, 10, 20);
        tokens.insert(tokens.end(), f.begin(), f.end() - 8);
        tokens.insert(tokens.end(), {qa, qb, qc});
        tokens.insert(tokens.end(), f.end() - 5, f.end());
      } else if (d == 1 || d == 2) {
        grade = 1;  // one query term per passage
        auto f = filler(docid, 14, 20);
        tokens.push_back(d == 1 ? qa : qb);
        tokens.insert(tokens.end(), f.begin(), f.begin() + 7);
        tokens.push_back(d == 1 ? qb : qc);
        tokens.insert(tokens.end(), f.begin() + 7, f.end());
      } else {
        tokens = filler(docid, 16, 20);
      }
      c.docs.push_back({docid, join(tokens)});
      c.qrels.add(qid, docid, grade);
    }
  }
  return c;
}

inline Corpus make_evidence_corpus() {
  Corpus c;
  for (int q = 0; q < 36; ++q) {
    char qid[8];
    std::snprintf(qid, sizeof qid, "e%02d", q);
    std::string qa = std::string(qid) + "a";
    std::string qb = std::string(qid) + "b";
    std::string qc = std::string(qid) + "c";
    c.queries.push_back({qid, qa + " " + qb + " " + qc});
    int d = 0;
    auto docid = [&](const char* kind) {
      char buf[24];
      std::snprintf(buf, sizeof buf, "%s-%s%d", qid, kind, d);
      return std::string(buf);
    };
    // Scope docs: four passages, one saturated with query terms.
    for (int s = 0; s < 2; ++s, ++d) {
      std::string id = docid("scope");
      auto f = filler(id, 32, 40);
      std::vector<std::string> tokens(f.begin(), f.end());
      int hot = (s == 0) ? 1 : 2;  // which window carries the evidence
      std::vector<std::string> dense = {qa, qb, qc, qa, qb, qc, qa, qb};
      std::copy(dense.begin(), dense.end(), tokens.begin() + hot * 8);
      c.docs.push_back({id, join(tokens)});
      c.qrels.add(qid, id, 2);
    }
    // Verbosity docs: one query term per window, rest filler.
    for (int v = 0; v < 2; ++v, ++d) {
      std::string id = docid("verb");
      auto f = filler(id, 32, 40);
      std::vector<std::string> tokens(f.begin(), f.end());
      const std::string* qtok[3] = {&qa, &qb, &qc};
      for (int w = 0; w < 4; ++w) tokens[w * 8 + (v + w) % 8] = *qtok[(v + w) % 3];
      c.docs.push_back({id, join(tokens)});
      c.qrels.add(qid, id, 1);
    }
    // Background docs: no query terms, varying length.
    for (int b = 0; b < 6; ++b, ++d) {
      std::string id = docid("bg");
      c.docs.push_back({id, join(filler(id, 24 + 4 * (b % 3), 40))});
      c.qrels.add(qid, id, 0);
    }
  }
  return c;
}

/// Small mixed corpus for plumbing tests: includes a query that is all
/// stopwords (dropped with a warning) and a judged document with no text.
inline Corpus make_tiny_corpus() {
  Corpus c;
  for (int q = 0; q < 8; ++q) {
    char qid[8];
    std::snprintf(qid, sizeof qid, "t%02d", q);
    std::string qa = std::string(qid) + "a";
    std::string qb = std::string(qid) + "b";
    c.queries.push_back({qid, qa + " " + qb});
    for (int d = 0; d < 6; ++d) {
      char docid[16];
      std::snprintf(docid, sizeof docid, "%s-d%d", qid, d);
      std::vector<std::string> tokens;
      int grade = 0;
      if (d == 0) {
        grade = 2;
        tokens = {qa, qb, qa};
        auto f = filler(docid, 9, 12);
        tokens.insert(tokens.end(), f.begin(), f.end());
      } else if (d == 1) {
        grade = 1;
        tokens.push_back(qa);
        auto f = filler(docid, 11, 12);
        tokens.insert(tokens.end(), f.begin(), f.end());
      } else if (d == 5) {
        grade = 1;  // judged relevant but empty: must be excluded everywhere
      } else {
        tokens = filler(docid, 12, 12);
      }
      c.docs.push_back({docid, join(tokens)});
      c.qrels.add(qid, docid, grade);
    }
  }
  c.queries.push_back({"t-empty", "the of"});  // dissolves against the stoplist
  return c;
}

inline hint::Stoplist tiny_stoplist() {
  hint::Stoplist s;
  s.words = {"the", "of"};
  return s;
}

inline hint::Dataset prepare(const Corpus& c, const hint::Stoplist& stop,
                             int passage_size, int fold_count,
                             std::uint64_t seed = 1) {
  hint::PrepareConfig config;
  config.passage_size = passage_size;
  config.min_count = 1;
  config.fold_count = fold_count;
  config.seed = seed;
  config.stem = false;
  return hint::prepare_dataset(c.queries, c.docs, c.qrels, stop, config);
}

inline hint::Dataset overfit_dataset() {
  return prepare(make_overfit_corpus(), hint::Stoplist{}, 8, 2);
}

inline hint::Dataset evidence_dataset() {
  return prepare(make_evidence_corpus(), hint::Stoplist{}, 8, 3);
}

inline hint::Dataset tiny_dataset() {
  return prepare(make_tiny_corpus(), tiny_stoplist(), 8, 3);
}

/// Writes the corpus in the raw on-disk formats the CLI ingests.
inline void write_corpus_files(const Corpus& c, const TempDir& dir) {
  {
    std::ofstream out(dir.file("queries.tsv"));
    for (const auto& q : c.queries) out << q.qid << '\t' << q.text << '\n';
  }
  {
    std::ofstream out(dir.file("docs.jsonl"));
    for (const auto& d : c.docs)
      out << "{\"docid\": \"" << d.docid << "\", \"text\": \"" << d.text
          << "\"}\n";
  }
  {
    std::ofstream out(dir.file("qrels.txt"));
    for (const auto& [qid, docs] : c.qrels.by_query())
      for (const auto& [docid, grade] : docs)
        out << qid << ' ' << docid << ' ' << grade << '\n';
  }
  {
    std::ofstream out(dir.file("stoplist.txt"));
    out << "the\nof\n";
  }
}

}  // namespace testsupport
