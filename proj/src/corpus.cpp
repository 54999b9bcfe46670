#include "hint/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hint {

namespace {

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + ('a' - 'A'));
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

Stoplist Stoplist::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open stoplist " + path);
  Stoplist stop;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = trim(to_lower_ascii(line));
    if (!w.empty()) stop.words.insert(w);
  }
  return stop;
}

std::string s_stem(const std::string& word) {
  if (word.size() < 3) return word;
  if (ends_with(word, "ies")) {
    if (ends_with(word, "eies") || ends_with(word, "aies")) return word;
    return word.substr(0, word.size() - 3) + "y";
  }
  if (ends_with(word, "es")) {
    if (ends_with(word, "aes") || ends_with(word, "ees") || ends_with(word, "oes"))
      return word;
    return word.substr(0, word.size() - 1);
  }
  if (ends_with(word, "s")) {
    if (ends_with(word, "us") || ends_with(word, "ss")) return word;
    return word.substr(0, word.size() - 1);
  }
  return word;
}

std::vector<std::string> tokenize(std::string_view text, const Stoplist& stoplist,
                                  bool stem) {
  std::vector<std::string> out;
  std::string lowered = to_lower_ascii(text);
  for (std::string& tok : split_ws(lowered)) {
    if (stoplist.contains(tok)) continue;
    out.push_back(stem ? s_stem(tok) : std::move(tok));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

int Vocabulary::add_core(const std::string& token) {
  if (core_size_ != size())
    throw std::logic_error("core tokens must be added before any extension");
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  int id = size();
  id_to_token_.push_back(token);
  token_to_id_.emplace(token, id);
  core_size_ = size();
  return id;
}

std::optional<int> Vocabulary::lookup(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::lookup_or_add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  int id = size();
  id_to_token_.push_back(token);
  token_to_id_.emplace(token, id);
  return id;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, int core_size) {
  if (tokens.empty() || tokens[0] != kPadToken)
    throw std::invalid_argument("vocabulary token list must start with " +
                                std::string(kPadToken));
  if (core_size < 1 || core_size > static_cast<int>(tokens.size()))
    throw std::invalid_argument("vocabulary core_size out of range");
  Vocabulary v;
  v.id_to_token_ = std::move(tokens);
  for (int id = 1; id < static_cast<int>(v.id_to_token_.size()); ++id) {
    if (!v.token_to_id_.emplace(v.id_to_token_[id], id).second)
      throw std::invalid_argument("duplicate vocabulary token " + v.id_to_token_[id]);
  }
  v.core_size_ = core_size;
  return v;
}

std::vector<int> encode(const std::vector<std::string>& tokens, Vocabulary& vocab,
                        OovPolicy policy) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& tok : tokens) {
    if (auto id = vocab.lookup(tok)) {
      ids.push_back(*id);
    } else if (policy == OovPolicy::kMap) {
      ids.push_back(vocab.lookup_or_add(tok));
    }
  }
  return ids;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& collection,
                            int min_count) {
  std::unordered_map<std::string, long long> counts;
  for (const auto& doc : collection)
    for (const auto& tok : doc) ++counts[tok];
  Vocabulary vocab;
  for (const auto& doc : collection) {
    for (const auto& tok : doc) {
      if (counts[tok] >= min_count) vocab.add_core(tok);
    }
  }
  return vocab;
}

// ---------------------------------------------------------------------------
// Passages
// ---------------------------------------------------------------------------

std::vector<Passage> segment(const TokenizedText& doc, int window) {
  if (window < 1) throw std::invalid_argument("passage window must be >= 1");
  std::vector<Passage> out;
  const int n = static_cast<int>(doc.tokens.size());
  for (int start = 0; start < n; start += window) {
    Passage p;
    p.doc_id = doc.id;
    p.ordinal = static_cast<int>(out.size());
    p.tokens.assign(window, Vocabulary::kPadId);
    p.mask.assign(window, 0);
    int len = std::min(window, n - start);
    for (int i = 0; i < len; ++i) {
      p.tokens[i] = doc.tokens[start + i];
      p.mask[i] = 1;
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Qrels
// ---------------------------------------------------------------------------

const std::map<std::string, int> Qrels::kEmpty;

void Qrels::add(const std::string& qid, const std::string& docid, int grade) {
  by_query_[qid][docid] = grade;
}

int Qrels::grade(const std::string& qid, const std::string& docid) const {
  auto q = by_query_.find(qid);
  if (q == by_query_.end()) return 0;
  auto d = q->second.find(docid);
  return d == q->second.end() ? 0 : d->second;
}

const std::map<std::string, int>& Qrels::docs_for(const std::string& qid) const {
  auto q = by_query_.find(qid);
  return q == by_query_.end() ? kEmpty : q->second;
}

Qrels Qrels::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open qrels " + path);
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_ws(line);
    if (fields.size() != 3)
      throw ParseError(path, lineno, "expected `qid docid grade`, got " +
                                         std::to_string(fields.size()) + " fields");
    int grade = 0;
    try {
      std::size_t pos = 0;
      grade = std::stoi(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError(path, lineno, "grade is not an integer: " + fields[2]);
    }
    if (grade < 0) throw ParseError(path, lineno, "negative relevance grade");
    auto& docs = qrels.by_query_[fields[0]];
    if (!docs.emplace(fields[1], grade).second)
      throw ParseError(path, lineno,
                       "duplicate judgment for " + fields[0] + "/" + fields[1]);
  }
  return qrels;
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

std::vector<FoldSplit> make_folds(std::vector<std::string> query_ids, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("fold count must be >= 2");
  if (static_cast<int>(query_ids.size()) < k)
    throw std::invalid_argument("fewer queries than folds");
  std::sort(query_ids.begin(), query_ids.end());
  query_ids.erase(std::unique(query_ids.begin(), query_ids.end()), query_ids.end());
  if (static_cast<int>(query_ids.size()) < k)
    throw std::invalid_argument("fewer distinct queries than folds");

  Rng rng = Rng(seed).split("folds");
  for (std::size_t i = query_ids.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(query_ids[i - 1], query_ids[j]);
  }

  // Near-equal partitions: the first (n mod k) get one extra.
  const int n = static_cast<int>(query_ids.size());
  std::vector<std::vector<std::string>> parts(k);
  int base = n / k, extra = n % k, at = 0;
  for (int p = 0; p < k; ++p) {
    int len = base + (p < extra ? 1 : 0);
    parts[p].assign(query_ids.begin() + at, query_ids.begin() + at + len);
    at += len;
  }

  std::vector<FoldSplit> folds(k);
  for (int f = 0; f < k; ++f) {
    folds[f].fold = f;
    int val = (f + 1) % k;
    folds[f].test.insert(parts[f].begin(), parts[f].end());
    folds[f].validation.insert(parts[val].begin(), parts[val].end());
    for (int p = 0; p < k; ++p) {
      if (p == f || p == val) continue;
      folds[f].train.insert(parts[p].begin(), parts[p].end());
    }
  }
  return folds;
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

namespace {

void fill_hashed_row(Eigen::MatrixXd& m, int row, const std::string& token,
                     std::uint64_t seed) {
  Rng rng(hash_combine(seed, fnv1a64(token)));
  for (int c = 0; c < m.cols(); ++c) m(row, c) = rng.uniform(-0.02, 0.02);
}

}  // namespace

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab,
                               int expected_dim, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open embeddings " + path);

  std::unordered_map<std::string, std::vector<double>> file_vectors;
  int dim = expected_dim;
  std::string line;
  std::size_t lineno = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_ws(line);
    // word2vec text files may start with a "<count> <dim>" header.
    if (first_content_line && fields.size() == 2) {
      first_content_line = false;
      try {
        std::size_t p1 = 0, p2 = 0;
        (void)std::stoll(fields[0], &p1);
        int header_dim = std::stoi(fields[1], &p2);
        if (p1 == fields[0].size() && p2 == fields[1].size()) {
          if (dim > 0 && header_dim != dim)
            throw ParseError(path, lineno,
                             "header dimension " + std::to_string(header_dim) +
                                 " does not match expected " + std::to_string(dim));
          if (dim <= 0) dim = header_dim;
          continue;
        }
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception&) {
        // Not a header; fall through and treat it as a vector line.
      }
    }
    first_content_line = false;
    if (fields.size() < 2)
      throw ParseError(path, lineno, "expected `token v1 .. vd`");
    int this_dim = static_cast<int>(fields.size()) - 1;
    if (dim <= 0) dim = this_dim;
    if (this_dim != dim)
      throw ParseError(path, lineno,
                       "vector has " + std::to_string(this_dim) +
                           " components, expected " + std::to_string(dim));
    std::vector<double> vec(dim);
    for (int i = 0; i < dim; ++i) {
      try {
        std::size_t pos = 0;
        vec[i] = std::stod(fields[i + 1], &pos);
        if (pos != fields[i + 1].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ParseError(path, lineno, "bad number: " + fields[i + 1]);
      }
    }
    file_vectors[fields[0]] = std::move(vec);
  }
  if (dim <= 0) throw ParseError(path, 0, "cannot infer embedding dimension");

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(vocab.size(), dim);
  for (int id = 1; id < vocab.size(); ++id) {
    auto it = file_vectors.find(vocab.token(id));
    if (it != file_vectors.end()) {
      for (int c = 0; c < dim; ++c) m(id, c) = it->second[c];
    } else {
      fill_hashed_row(m, id, vocab.token(id), seed);
    }
  }
  return EmbeddingTable(std::move(m), dim);
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, int dim,
                                 std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("embedding dimension must be >= 1");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(vocab.size(), dim);
  for (int id = 1; id < vocab.size(); ++id)
    fill_hashed_row(m, id, vocab.token(id), seed);
  return EmbeddingTable(std::move(m), dim);
}

// ---------------------------------------------------------------------------
// Raw corpus files
// ---------------------------------------------------------------------------

std::vector<RawQuery> load_queries_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open queries " + path);
  std::vector<RawQuery> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(path, lineno, "expected `qid<TAB>text`");
    std::string qid = line.substr(0, tab);
    if (qid.empty()) throw ParseError(path, lineno, "empty query id");
    if (!seen.insert(qid).second)
      throw ParseError(path, lineno, "duplicate query id " + qid);
    out.push_back({std::move(qid), line.substr(tab + 1)});
  }
  return out;
}

std::vector<RawDoc> load_docs_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open documents " + path);
  std::vector<RawDoc> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("docid") || !j.contains("text") ||
        !j["docid"].is_string() || !j["text"].is_string())
      throw ParseError(path, lineno, "expected {\"docid\": str, \"text\": str}");
    std::string docid = j["docid"].get<std::string>();
    if (docid.empty()) throw ParseError(path, lineno, "empty docid");
    if (!seen.insert(docid).second)
      throw ParseError(path, lineno, "duplicate docid " + docid);
    out.push_back({std::move(docid), j["text"].get<std::string>()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prepared dataset
// ---------------------------------------------------------------------------

const TokenizedText* Dataset::find_query(const std::string& qid) const {
  auto it = query_index_.find(qid);
  return it == query_index_.end() ? nullptr : &queries[it->second];
}

const TokenizedText* Dataset::find_doc(const std::string& docid) const {
  auto it = doc_index_.find(docid);
  return it == doc_index_.end() ? nullptr : &docs[it->second];
}

const std::vector<Passage>* Dataset::passages_for(const std::string& docid) const {
  auto it = doc_index_.find(docid);
  return it == doc_index_.end() ? nullptr : &passages[it->second];
}

int Dataset::query_index_of(const std::string& qid) const {
  auto it = query_index_.find(qid);
  return it == query_index_.end() ? -1 : it->second;
}

int Dataset::doc_index_of(const std::string& docid) const {
  auto it = doc_index_.find(docid);
  return it == doc_index_.end() ? -1 : it->second;
}

std::vector<std::string> Dataset::query_ids() const {
  std::vector<std::string> ids;
  ids.reserve(queries.size());
  for (const auto& q : queries) ids.push_back(q.id);
  return ids;
}

void Dataset::rebuild_indices() {
  query_index_.clear();
  doc_index_.clear();
  for (int i = 0; i < static_cast<int>(queries.size()); ++i)
    query_index_[queries[i].id] = i;
  for (int i = 0; i < static_cast<int>(docs.size()); ++i)
    doc_index_[docs[i].id] = i;
}

std::string prepare_input_hash(const std::vector<RawQuery>& queries,
                               const std::vector<RawDoc>& docs, const Qrels& qrels,
                               const Stoplist& stoplist, const PrepareConfig& config) {
  std::uint64_t h = fnv1a64("hint-prepare");
  auto mix = [&h](std::string_view s) {
    h = hash_combine(h, fnv1a64(s));
  };
  for (const auto& q : queries) {
    mix("Q");
    mix(q.qid);
    mix(q.text);
  }
  for (const auto& d : docs) {
    mix("D");
    mix(d.docid);
    mix(d.text);
  }
  for (const auto& [qid, docgrades] : qrels.by_query()) {
    for (const auto& [docid, grade] : docgrades) {
      mix("R");
      mix(qid);
      mix(docid);
      mix(std::to_string(grade));
    }
  }
  std::vector<std::string> stop(stoplist.words.begin(), stoplist.words.end());
  std::sort(stop.begin(), stop.end());
  for (const auto& w : stop) {
    mix("S");
    mix(w);
  }
  mix("C");
  mix(std::to_string(config.passage_size));
  mix(std::to_string(config.min_count));
  mix(std::to_string(config.fold_count));
  mix(std::to_string(config.seed));
  mix(config.stem ? "stem" : "nostem");

  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Dataset prepare_dataset(const std::vector<RawQuery>& raw_queries,
                        const std::vector<RawDoc>& raw_docs, const Qrels& qrels,
                        const Stoplist& stoplist, const PrepareConfig& config) {
  if (config.passage_size < 1)
    throw std::invalid_argument("passage_size must be >= 1");
  if (config.min_count < 1) throw std::invalid_argument("min_count must be >= 1");

  Dataset ds;
  ds.input_hash = prepare_input_hash(raw_queries, raw_docs, qrels, stoplist, config);
  ds.config["passage_size"] = std::to_string(config.passage_size);
  ds.config["min_count"] = std::to_string(config.min_count);
  ds.config["fold_count"] = std::to_string(config.fold_count);
  ds.config["seed"] = std::to_string(config.seed);
  ds.config["stem"] = config.stem ? "true" : "false";
  ds.passage_size = config.passage_size;
  ds.qrels = qrels;

  std::vector<std::vector<std::string>> doc_surface;
  doc_surface.reserve(raw_docs.size());
  for (const auto& d : raw_docs)
    doc_surface.push_back(tokenize(d.text, stoplist, config.stem));

  ds.vocab = build_vocabulary(doc_surface, config.min_count);

  ds.docs.reserve(raw_docs.size());
  ds.passages.reserve(raw_docs.size());
  int empty_docs = 0;
  for (std::size_t i = 0; i < raw_docs.size(); ++i) {
    TokenizedText doc;
    doc.id = raw_docs[i].docid;
    doc.tokens = encode(doc_surface[i], ds.vocab, OovPolicy::kDrop);
    if (doc.tokens.empty()) ++empty_docs;
    ds.passages.push_back(segment(doc, config.passage_size));
    ds.docs.push_back(std::move(doc));
  }
  if (empty_docs > 0)
    ds.warnings.push_back(std::to_string(empty_docs) +
                          " document(s) empty after preprocessing");

  for (const auto& rq : raw_queries) {
    TokenizedText q;
    q.id = rq.qid;
    q.tokens = encode(tokenize(rq.text, stoplist, config.stem), ds.vocab,
                      OovPolicy::kMap);
    if (q.tokens.empty()) {
      ds.warnings.push_back("query '" + q.id +
                            "' dropped: empty after preprocessing");
      continue;
    }
    ds.queries.push_back(std::move(q));
  }

  std::vector<std::string> qids;
  for (const auto& q : ds.queries) qids.push_back(q.id);
  ds.folds = make_folds(qids, config.fold_count, config.seed);

  ds.rebuild_indices();
  return ds;
}

void resegment(Dataset& dataset, int window) {
  if (window < 1) throw std::invalid_argument("passage window must be >= 1");
  for (std::size_t i = 0; i < dataset.docs.size(); ++i)
    dataset.passages[i] = segment(dataset.docs[i], window);
  dataset.passage_size = window;
  dataset.config["passage_size"] = std::to_string(window);
}

void save_dataset(const Dataset& ds, const std::string& path) {
  nlohmann::json j;
  j["format"] = Dataset::kFormatTag;
  j["input_hash"] = ds.input_hash;
  j["config"] = ds.config;
  j["passage_size"] = ds.passage_size;
  j["warnings"] = ds.warnings;

  j["vocab"] = {{"core_size", ds.vocab.core_size()}, {"tokens", ds.vocab.tokens()}};

  auto texts_json = [](const std::vector<TokenizedText>& texts) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : texts) arr.push_back({{"id", t.id}, {"tokens", t.tokens}});
    return arr;
  };
  j["queries"] = texts_json(ds.queries);
  j["docs"] = texts_json(ds.docs);

  nlohmann::json passages = nlohmann::json::array();
  for (const auto& doc_passages : ds.passages) {
    nlohmann::json per_doc = nlohmann::json::array();
    for (const auto& p : doc_passages) {
      std::vector<int> real(p.tokens.begin(), p.tokens.begin() + p.real_len());
      per_doc.push_back(std::move(real));
    }
    passages.push_back(std::move(per_doc));
  }
  j["doc_passages"] = std::move(passages);

  nlohmann::json rels = nlohmann::json::array();
  for (const auto& [qid, docgrades] : ds.qrels.by_query())
    for (const auto& [docid, grade] : docgrades)
      rels.push_back({qid, docid, grade});
  j["qrels"] = std::move(rels);

  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : ds.folds) {
    folds.push_back({{"fold", f.fold},
                     {"train", f.train},
                     {"validation", f.validation},
                     {"test", f.test}});
  }
  j["folds"] = std::move(folds);

  write_file(path, j.dump(2) + "\n");
}

Dataset load_dataset(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, std::string("invalid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != Dataset::kFormatTag)
      throw ParseError(path, 0, "not a prepared dataset (missing format tag)");

    Dataset ds;
    ds.input_hash = j.at("input_hash").get<std::string>();
    ds.config = j.at("config").get<std::map<std::string, std::string>>();
    ds.passage_size = j.at("passage_size").get<int>();
    ds.warnings = j.value("warnings", std::vector<std::string>{});

    ds.vocab = Vocabulary::from_tokens(
        j.at("vocab").at("tokens").get<std::vector<std::string>>(),
        j.at("vocab").at("core_size").get<int>());

    auto read_texts = [](const nlohmann::json& arr) {
      std::vector<TokenizedText> out;
      for (const auto& e : arr) {
        TokenizedText t;
        t.id = e.at("id").get<std::string>();
        t.tokens = e.at("tokens").get<std::vector<int>>();
        out.push_back(std::move(t));
      }
      return out;
    };
    ds.queries = read_texts(j.at("queries"));
    ds.docs = read_texts(j.at("docs"));

    const auto& passages = j.at("doc_passages");
    if (passages.size() != ds.docs.size())
      throw ParseError(path, 0, "doc_passages does not match docs");
    for (std::size_t d = 0; d < passages.size(); ++d) {
      std::vector<Passage> per_doc;
      for (std::size_t o = 0; o < passages[d].size(); ++o) {
        auto real = passages[d][o].get<std::vector<int>>();
        if (static_cast<int>(real.size()) > ds.passage_size)
          throw ParseError(path, 0, "passage longer than passage_size");
        Passage p;
        p.doc_id = ds.docs[d].id;
        p.ordinal = static_cast<int>(o);
        p.tokens.assign(ds.passage_size, Vocabulary::kPadId);
        p.mask.assign(ds.passage_size, 0);
        for (std::size_t i = 0; i < real.size(); ++i) {
          p.tokens[i] = real[i];
          p.mask[i] = 1;
        }
        per_doc.push_back(std::move(p));
      }
      ds.passages.push_back(std::move(per_doc));
    }

    for (const auto& r : j.at("qrels")) {
      ds.qrels.add(r.at(0).get<std::string>(), r.at(1).get<std::string>(),
                   r.at(2).get<int>());
    }

    for (const auto& f : j.at("folds")) {
      FoldSplit split;
      split.fold = f.at("fold").get<int>();
      for (const auto& q : f.at("train")) split.train.insert(q.get<std::string>());
      for (const auto& q : f.at("validation"))
        split.validation.insert(q.get<std::string>());
      for (const auto& q : f.at("test")) split.test.insert(q.get<std::string>());
      ds.folds.push_back(std::move(split));
    }

    ds.rebuild_indices();
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path, 0, std::string("malformed dataset: ") + e.what());
  }
}

}  // namespace hint
