#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hint/common.hpp"

namespace hint {

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

struct Stoplist {
  std::unordered_set<std::string> words;

  bool contains(const std::string& w) const { return words.count(w) > 0; }
  static Stoplist load(const std::string& path);
};

/// Plural stripper: "-ies" -> "y", "-es" -> "e", "-s" dropped, with the
/// usual guards (no change for "-ss"/"-us" endings or words shorter than
/// 3 characters). Idempotent.
std::string s_stem(const std::string& word);

/// Lower-cases, splits on whitespace, removes stopwords, and (optionally)
/// stems. Returns surface tokens; vocabulary mapping is a separate step.
std::vector<std::string> tokenize(std::string_view text, const Stoplist& stoplist,
                                  bool stem = true);

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// Token ids are dense. Id 0 is PAD. Core ids [1, core_size) come from the
/// collection scan; ids >= core_size are assigned on demand for tokens first
/// seen outside the collection (e.g. query terms at encode time). Two
/// occurrences of the same unseen token get the same id, so exact-match
/// comparisons still work for them.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr const char* kPadToken = "<pad>";

  Vocabulary() {
    id_to_token_.push_back(kPadToken);
    core_size_ = 1;
  }

  /// Adds a core token during vocabulary construction (idempotent).
  int add_core(const std::string& token);

  std::optional<int> lookup(const std::string& token) const;

  /// Returns the id for `token`, assigning a fresh id past the core range
  /// if it is unknown. Construction-time only; not thread safe.
  int lookup_or_add(const std::string& token);

  const std::string& token(int id) const { return id_to_token_.at(id); }
  bool is_core(int id) const { return id >= 0 && id < core_size_; }
  int core_size() const { return core_size_; }
  int size() const { return static_cast<int>(id_to_token_.size()); }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// Rebuild from a token list (deserialization).
  static Vocabulary from_tokens(std::vector<std::string> tokens, int core_size);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  int core_size_ = 1;
};

/// How encode() treats tokens missing from the vocabulary.
enum class OovPolicy {
  kDrop,  // delete the token (collection side: rare words are removed)
  kMap,   // assign a fresh id (query side: unseen terms keep exact-match identity)
};

std::vector<int> encode(const std::vector<std::string>& tokens, Vocabulary& vocab,
                        OovPolicy policy);

/// Counts surface tokens and keeps those occurring at least `min_count` times.
/// Insertion order of surviving tokens is first-occurrence order, so the id
/// assignment is deterministic.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& collection,
                            int min_count);

// ---------------------------------------------------------------------------
// Texts and passages
// ---------------------------------------------------------------------------

struct TokenizedText {
  std::string id;
  std::vector<int> tokens;

  bool empty() const { return tokens.empty(); }
};

/// A fixed-size window of a document. `tokens` always has the window size;
/// only the final passage of a document may carry PAD, so the mask is always
/// a prefix of ones.
struct Passage {
  std::string doc_id;
  int ordinal = 0;
  std::vector<int> tokens;
  std::vector<std::uint8_t> mask;  // 1 = real token

  int real_len() const {
    int n = 0;
    for (auto m : mask) n += m ? 1 : 0;
    return n;
  }
};

/// Splits into ceil(N/window) non-overlapping passages; PAD-fills the last.
/// Throws std::invalid_argument for window < 1.
std::vector<Passage> segment(const TokenizedText& doc, int window);

// ---------------------------------------------------------------------------
// Judgments and folds
// ---------------------------------------------------------------------------

class Qrels {
 public:
  void add(const std::string& qid, const std::string& docid, int grade);
  int grade(const std::string& qid, const std::string& docid) const;
  bool has_query(const std::string& qid) const { return by_query_.count(qid) > 0; }

  /// Judged documents for a query (empty map if the query is unknown).
  const std::map<std::string, int>& docs_for(const std::string& qid) const;

  const std::map<std::string, std::map<std::string, int>>& by_query() const {
    return by_query_;
  }

  static Qrels load(const std::string& path);

 private:
  std::map<std::string, std::map<std::string, int>> by_query_;
  static const std::map<std::string, int> kEmpty;
};

struct FoldSplit {
  int fold = 0;
  std::set<std::string> train;
  std::set<std::string> validation;
  std::set<std::string> test;
};

/// Shuffles query ids by seed and cuts k near-equal partitions. Fold i tests
/// partition i and validates partition (i+1) mod k; the rest train.
std::vector<FoldSplit> make_folds(std::vector<std::string> query_ids, int k,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(Eigen::MatrixXd vectors, int dim)
      : vectors_(std::move(vectors)), dim_(dim) {}

  int dim() const { return dim_; }
  int rows() const { return static_cast<int>(vectors_.rows()); }
  auto row(int id) const { return vectors_.row(id); }
  const Eigen::MatrixXd& matrix() const { return vectors_; }

 private:
  Eigen::MatrixXd vectors_;  // one row per vocabulary id; PAD row is zero
  int dim_ = 0;
};

/// Reads word2vec text format (optional "<count> <dim>" header line, then
/// "token v1 .. v_dim"). Every vocabulary id gets a row: file vectors where
/// present, otherwise per-token deterministic draws from (-0.02, 0.02)
/// seeded by (seed, token). The PAD row is zero.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab,
                               int expected_dim, std::uint64_t seed);

/// Same fill-in rule without a vectors file (every non-PAD token random).
EmbeddingTable random_embeddings(const Vocabulary& vocab, int dim,
                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Raw corpus files
// ---------------------------------------------------------------------------

struct RawQuery {
  std::string qid;
  std::string text;
};

struct RawDoc {
  std::string docid;
  std::string text;
};

std::vector<RawQuery> load_queries_tsv(const std::string& path);
std::vector<RawDoc> load_docs_jsonl(const std::string& path);

// ---------------------------------------------------------------------------
// Prepared dataset
// ---------------------------------------------------------------------------

struct PrepareConfig {
  int passage_size = 100;
  int min_count = 5;
  int fold_count = 5;
  std::uint64_t seed = 1;
  bool stem = true;
};

/// Immutable after preparation; safe for concurrent read.
struct Dataset {
  static constexpr const char* kFormatTag = "hint-dataset-v1";

  std::string input_hash;
  std::map<std::string, std::string> config;  // effective-config echo
  int passage_size = 0;

  Vocabulary vocab;
  std::vector<TokenizedText> queries;
  std::vector<TokenizedText> docs;
  std::vector<std::vector<Passage>> passages;  // parallel to docs
  Qrels qrels;
  std::vector<FoldSplit> folds;
  std::vector<std::string> warnings;

  const TokenizedText* find_query(const std::string& qid) const;
  const TokenizedText* find_doc(const std::string& docid) const;
  const std::vector<Passage>* passages_for(const std::string& docid) const;

  /// Position in queries/docs, or -1 when absent.
  int query_index_of(const std::string& qid) const;
  int doc_index_of(const std::string& docid) const;

  std::vector<std::string> query_ids() const;

  void rebuild_indices();

 private:
  std::unordered_map<std::string, int> query_index_;
  std::unordered_map<std::string, int> doc_index_;
};

Dataset prepare_dataset(const std::vector<RawQuery>& queries,
                        const std::vector<RawDoc>& docs, const Qrels& qrels,
                        const Stoplist& stoplist, const PrepareConfig& config);

/// Re-segments all documents with a new window size (passage-size sweep).
void resegment(Dataset& dataset, int window);

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

/// Hash of the prepare inputs + knobs; drives prepare idempotence.
std::string prepare_input_hash(const std::vector<RawQuery>& queries,
                               const std::vector<RawDoc>& docs, const Qrels& qrels,
                               const Stoplist& stoplist, const PrepareConfig& config);

}  // namespace hint
