#include "hint/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hint {

std::vector<ScoredDoc> ranked(std::vector<ScoredDoc> docs) {
  std::stable_sort(docs.begin(), docs.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.docid < b.docid;
  });
  return docs;
}

double precision_at(const std::vector<ScoredDoc>& ranking, int k) {
  if (k < 1) throw std::invalid_argument("precision cutoff must be >= 1");
  int hits = 0;
  const int top = std::min<int>(k, static_cast<int>(ranking.size()));
  for (int i = 0; i < top; ++i)
    if (ranking[i].grade > 0) ++hits;
  return static_cast<double>(hits) / k;
}

double average_precision(const std::vector<ScoredDoc>& ranking, int total_relevant) {
  if (total_relevant <= 0) return 0.0;
  double sum = 0.0;
  int hits = 0;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i].grade > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / total_relevant;
}

namespace {

double dcg(const std::vector<int>& grades, int k) {
  double sum = 0.0;
  const int top = std::min<int>(k, static_cast<int>(grades.size()));
  for (int i = 0; i < top; ++i) {
    double gain = std::pow(2.0, grades[i]) - 1.0;
    sum += gain / std::log2(i + 2.0);
  }
  return sum;
}

}  // namespace

double ndcg_at(const std::vector<ScoredDoc>& ranking, int k,
               std::vector<int> all_grades) {
  if (k < 1) throw std::invalid_argument("ndcg cutoff must be >= 1");
  std::sort(all_grades.begin(), all_grades.end(), std::greater<int>());
  double ideal = dcg(all_grades, k);
  if (ideal == 0.0) return 0.0;
  std::vector<int> got;
  got.reserve(ranking.size());
  for (const auto& d : ranking) got.push_back(d.grade);
  return dcg(got, k) / ideal;
}

EvalReport evaluate_run(const Run& run, const Qrels& qrels,
                        const std::vector<int>& precision_ks,
                        const std::vector<int>& ndcg_ks) {
  EvalReport report;
  std::map<std::string, double> sums;
  for (const auto& [qid, docs] : run) {
    const auto& judged = qrels.docs_for(qid);
    int total_relevant = 0;
    std::vector<int> all_grades;
    for (const auto& [docid, grade] : judged) {
      all_grades.push_back(grade);
      if (grade > 0) ++total_relevant;
    }
    if (total_relevant == 0) {
      ++report.skipped;
      continue;
    }

    std::vector<ScoredDoc> graded = docs;
    for (auto& d : graded) d.grade = qrels.grade(qid, d.docid);
    graded = ranked(std::move(graded));

    QueryEval qe;
    qe.qid = qid;
    qe.metrics["map"] = average_precision(graded, total_relevant);
    for (int k : precision_ks)
      qe.metrics["p@" + std::to_string(k)] = precision_at(graded, k);
    for (int k : ndcg_ks)
      qe.metrics["ndcg@" + std::to_string(k)] = ndcg_at(graded, k, all_grades);

    for (const auto& [name, value] : qe.metrics) sums[name] += value;
    report.per_query.push_back(std::move(qe));
    ++report.evaluated;
  }
  for (const auto& [name, total] : sums)
    report.means[name] = total / report.evaluated;
  return report;
}

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["evaluated"] = report.evaluated;
  j["skipped"] = report.skipped;
  j["means"] = report.means;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& qe : report.per_query)
    per.push_back({{"qid", qe.qid}, {"metrics", qe.metrics}});
  j["per_query"] = std::move(per);
  return j.dump(2) + "\n";
}

std::string eval_report_to_csv(const EvalReport& report) {
  std::vector<std::string> names;
  for (const auto& [name, value] : report.means) names.push_back(name);
  std::ostringstream out;
  out << "qid";
  for (const auto& n : names) out << "," << n;
  out << "\n";
  for (const auto& qe : report.per_query) {
    out << qe.qid;
    for (const auto& n : names) {
      auto it = qe.metrics.find(n);
      out << "," << (it == qe.metrics.end() ? 0.0 : it->second);
    }
    out << "\n";
  }
  out << "mean";
  for (const auto& n : names) out << "," << report.means.at(n);
  out << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Paired t-test
// ---------------------------------------------------------------------------

namespace {

// Continued-fraction core of the regularized incomplete beta (Lentz's
// method).
double betacf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr int kMaxIter = 500;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 3e-14) return h;
  }
  throw NumericError("incomplete beta did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw std::invalid_argument("incomplete beta needs positive parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                                std::lgamma(b) + a * std::log(x) +
                                b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("paired test needs equal-length samples");
  const int n = static_cast<int>(a.size());
  if (n < 2) throw std::invalid_argument("paired test needs at least 2 pairs");

  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = (a[i] - b[i]) - mean;
    var += d * d;
  }
  var /= (n - 1);

  TTestResult result;
  result.df = n - 1;
  if (var == 0.0) {
    result.degenerate = true;
    result.t = 0.0;
    result.p = mean == 0.0 ? 1.0 : 0.0;
    return result;
  }
  result.t = mean / std::sqrt(var / n);
  const double nu = result.df;
  result.p = incomplete_beta(nu / 2.0, 0.5, nu / (nu + result.t * result.t));
  return result;
}

// ---------------------------------------------------------------------------
// TREC run files
// ---------------------------------------------------------------------------

void save_trec_run(const std::string& path, const Run& run, const std::string& tag) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& [qid, docs] : run) {
    auto ordered = ranked(docs);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      out << qid << " Q0 " << ordered[i].docid << " " << (i + 1) << " "
          << ordered[i].score << " " << tag << "\n";
    }
  }
  write_file(path, out.str());
}

Run load_trec_run(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open run " + path);
  Run run;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string qid, q0, docid, tag;
    long rank;
    double score;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    if (!(ls >> qid >> q0 >> docid >> rank >> score >> tag))
      throw ParseError(path, lineno, "expected `qid Q0 docid rank score tag`");
    run[qid].push_back({docid, score, 0});
  }
  return run;
}

}  // namespace hint
