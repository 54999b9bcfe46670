#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "hint/evaluation.hpp"
#include "support/corpora.hpp"

using namespace hint;
using testsupport::TempDir;

namespace {

// Reference metrics written as direct transcriptions of their definitions.

double ref_precision(const std::vector<int>& grades, int k) {
  int rel = 0;
  for (int i = 0; i < k && i < static_cast<int>(grades.size()); ++i)
    if (grades[i] > 0) ++rel;
  return static_cast<double>(rel) / k;
}

double ref_ap(const std::vector<int>& grades, int total_relevant) {
  if (total_relevant <= 0) return 0.0;
  double sum = 0.0;
  int seen = 0;
  for (std::size_t i = 0; i < grades.size(); ++i) {
    if (grades[i] > 0) {
      ++seen;
      sum += static_cast<double>(seen) / static_cast<double>(i + 1);
    }
  }
  return sum / total_relevant;
}

double ref_dcg(const std::vector<int>& grades, int k) {
  double dcg = 0.0;
  for (int i = 0; i < k && i < static_cast<int>(grades.size()); ++i)
    dcg += (std::pow(2.0, grades[i]) - 1.0) / std::log2(i + 2.0);
  return dcg;
}

double ref_ndcg(const std::vector<int>& grades, int k, std::vector<int> all) {
  std::sort(all.begin(), all.end(), std::greater<>());
  double ideal = ref_dcg(all, k);
  if (ideal == 0.0) return 0.0;
  return ref_dcg(grades, k) / ideal;
}

// Student-t two-sided tail by Simpson quadrature over the density.
double ref_t_two_sided(double t, int df) {
  const double v = df;
  const double norm = std::exp(std::lgamma((v + 1) / 2) - std::lgamma(v / 2)) /
                      std::sqrt(v * M_PI);
  auto density = [&](double x) {
    return norm * std::pow(1.0 + x * x / v, -(v + 1) / 2);
  };
  const double a = std::fabs(t), b = std::fabs(t) + 500.0;
  const int n = 400000;  // even
  const double h = (b - a) / n;
  double sum = density(a) + density(b);
  for (int i = 1; i < n; ++i) sum += density(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return 2.0 * sum * h / 3.0;
}

std::vector<ScoredDoc> docs_from_grades(const std::vector<int>& grades) {
  std::vector<ScoredDoc> docs;
  for (std::size_t i = 0; i < grades.size(); ++i) {
    // strictly decreasing scores pin the ranking to the given order
    docs.push_back({"d" + std::to_string(i),
                    static_cast<double>(grades.size() - i), grades[i]});
  }
  return docs;
}

}  // namespace

TEST_CASE("ranking metrics agree with their definitions on every small case") {
  // Every grade assignment in {0,1,2}^4 under every permutation of the four
  // ranks: 3^4 * 4! = 1944 rankings, each checked against the reference
  // implementations to 1e-12. total_relevant comes from the full assignment,
  // so truncated-list behavior is covered when k exceeds the list.
  std::vector<int> grades(4);
  for (int mask = 0; mask < 81; ++mask) {
    int m = mask;
    for (int i = 0; i < 4; ++i) {
      grades[i] = m % 3;
      m /= 3;
    }
    int total_relevant = 0;
    for (int g : grades) total_relevant += g > 0 ? 1 : 0;

    std::vector<int> perm = {0, 1, 2, 3};
    do {
      std::vector<int> order(4);
      for (int i = 0; i < 4; ++i) order[i] = grades[perm[i]];
      auto ranking = ranked(docs_from_grades(order));
      std::vector<int> ranked_grades;
      for (const auto& d : ranking) ranked_grades.push_back(d.grade);

      for (int k : {1, 2, 4, 7}) {
        CHECK(precision_at(ranking, k) ==
              doctest::Approx(ref_precision(ranked_grades, k)).epsilon(1e-12));
        CHECK(ndcg_at(ranking, k, grades) ==
              doctest::Approx(ref_ndcg(ranked_grades, k, grades)).epsilon(1e-12));
      }
      CHECK(average_precision(ranking, total_relevant) ==
            doctest::Approx(ref_ap(ranked_grades, total_relevant)).epsilon(1e-12));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("worked metric examples") {
  // Ranking R N R with two relevant total: AP = (1/1 + 2/3) / 2 = 5/6
  auto ranking = ranked(docs_from_grades({1, 0, 1}));
  CHECK(average_precision(ranking, 2) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));

  // Same ranking, one more relevant document that was never retrieved
  CHECK(average_precision(ranking, 3) == doctest::Approx(5.0 / 9.0).epsilon(1e-15));

  // Precision keeps dividing by k
  CHECK(precision_at(ranking, 2) == 0.5);
  CHECK(precision_at(ranking, 5) == doctest::Approx(0.4));

  // Graded ranking [1, 0, 2] against judged grades {0, 1, 2}:
  // DCG  = 1 + 0 + 3/2 = 2.5; ideal = 3 + 1/log2(3) = 3.63093;
  auto graded = ranked(docs_from_grades({1, 0, 2}));
  double ideal = 3.0 + 1.0 / std::log2(3.0);
  CHECK(ndcg_at(graded, 3, {0, 1, 2}) ==
        doctest::Approx(2.5 / ideal).epsilon(1e-12));

  // no relevant documents anywhere: zero, not NaN
  auto barren = ranked(docs_from_grades({0, 0}));
  CHECK(average_precision(barren, 0) == 0.0);
  CHECK(ndcg_at(barren, 2, {0, 0}) == 0.0);
}

TEST_CASE("ranking breaks score ties by docid") {
  std::vector<ScoredDoc> docs = {
      {"zeta", 1.0, 0}, {"alpha", 1.0, 1}, {"mid", 2.0, 0}};
  auto r = ranked(docs);
  REQUIRE(r.size() == 3);
  CHECK(r[0].docid == "mid");
  CHECK(r[1].docid == "alpha");
  CHECK(r[2].docid == "zeta");
}

TEST_CASE("run evaluation skips queries with no relevant judgments") {
  Qrels qrels;
  qrels.add("q1", "a", 1);
  qrels.add("q1", "b", 0);
  qrels.add("q2", "c", 0);  // nothing relevant: not evaluable
  qrels.add("q3", "d", 2);

  Run run;
  run["q1"] = {{"a", 0.9, 0}, {"b", 0.8, 0}};
  run["q2"] = {{"c", 0.5, 0}};
  run["q3"] = {{"d", 0.1, 0}};

  EvalReport report = evaluate_run(run, qrels);
  CHECK(report.evaluated == 2);
  CHECK(report.skipped == 1);
  REQUIRE(report.per_query.size() == 2);
  CHECK(report.per_query[0].qid == "q1");
  CHECK(report.per_query[0].metrics.at("map") == 1.0);
  CHECK(report.means.at("map") == 1.0);
  for (const char* key : {"map", "p@5", "p@10", "p@20", "ndcg@1", "ndcg@10",
                          "ndcg@20"})
    CHECK(report.means.count(key) == 1);

  // grades carried on the scored docs are ignored in favor of the judgments
  Run lying;
  lying["q1"] = {{"a", 0.9, 0}, {"b", 0.8, 2}};
  CHECK(evaluate_run(lying, qrels).per_query[0].metrics.at("map") == 1.0);

  // the CSV report has a header plus one line per query and a mean line
  std::string csv = eval_report_to_csv(report);
  CHECK(std::count(csv.begin(), csv.end(), '\n') >= 3);
}

TEST_CASE("paired t-test against quadrature and a worked example") {
  // Differences 0.12, 0.05, -0.02, 0.08, 0.07: mean 0.06, sd 0.0514782,
  // t = 0.06 / (sd / sqrt(5)) = 2.606.
  std::vector<double> a = {0.72, 0.55, 0.48, 0.68, 0.57};
  std::vector<double> b = {0.60, 0.50, 0.50, 0.60, 0.50};
  TTestResult r = paired_ttest(a, b);
  CHECK(r.df == 4);
  CHECK_FALSE(r.degenerate);
  CHECK(r.t == doctest::Approx(2.606235).epsilon(1e-5));
  CHECK(r.p == doctest::Approx(ref_t_two_sided(r.t, r.df)).epsilon(1e-7));

  // more pairs, smaller effect
  std::vector<double> c = {0.2, 0.3, 0.25, 0.27, 0.22, 0.31, 0.295, 0.26};
  std::vector<double> d = {0.21, 0.28, 0.26, 0.25, 0.23, 0.30, 0.28, 0.27};
  TTestResult r2 = paired_ttest(c, d);
  CHECK(r2.df == 7);
  CHECK(r2.p == doctest::Approx(ref_t_two_sided(r2.t, r2.df)).epsilon(1e-7));

  // identical lists: degenerate with p = 1
  TTestResult same = paired_ttest(c, c);
  CHECK(same.degenerate);
  CHECK(same.p == 1.0);

  // constant nonzero difference: certain, p = 0 (values are exact in
  // binary so every pairwise difference is identical)
  std::vector<double> base = {0.25, 0.5, 0.75, 1.0, 1.25};
  std::vector<double> shifted = {0.5, 0.75, 1.0, 1.25, 1.5};
  TTestResult sure = paired_ttest(shifted, base);
  CHECK(sure.degenerate);
  CHECK(sure.p == 0.0);

  CHECK_THROWS_AS(paired_ttest({1.0}, {2.0}), std::invalid_argument);
  CHECK_THROWS_AS(paired_ttest({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("incomplete beta agrees with direct quadrature") {
  auto quad = [](double a, double b, double x) {
    const int n = 400000;
    const double h = x / n;
    auto f = [&](double t) {
      if (t <= 0.0 || t >= 1.0) return 0.0;
      return std::pow(t, a - 1) * std::pow(1 - t, b - 1);
    };
    double sum = f(0.0) + f(x);
    for (int i = 1; i < n; ++i) sum += f(i * h) * (i % 2 ? 4.0 : 2.0);
    double integral = sum * h / 3.0;
    double beta = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    return integral / beta;
  };
  // exponents >= 1.5 keep the integrand quadrature-friendly at the endpoints
  for (auto [a, b, x] : std::vector<std::array<double, 3>>{
           {2.0, 3.0, 0.4}, {1.5, 3.0, 0.3}, {4.0, 1.5, 0.8}, {2.5, 2.5, 0.5}}) {
    CHECK(incomplete_beta(a, b, x) == doctest::Approx(quad(a, b, x)).epsilon(1e-7));
  }
  CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("trec run files round-trip with full precision") {
  Run run;
  run["q2"] = {{"docB", 1.0 / 3.0, 0}, {"docA", 0.25, 0}};
  run["q1"] = {{"d", -1.5e-17, 0}};

  TempDir dir;
  save_trec_run(dir.file("run.txt"), run, "probe");
  Run back = load_trec_run(dir.file("run.txt"));

  REQUIRE(back.size() == 2);
  REQUIRE(back["q2"].size() == 2);
  CHECK(back["q2"][0].docid == "docB");  // ranked: higher score first
  CHECK(back["q2"][0].score == 1.0 / 3.0);
  CHECK(back["q2"][1].score == 0.25);
  CHECK(back["q1"][0].score == -1.5e-17);

  // the file carries the tag and 6 columns per line
  std::string text = read_file(dir.file("run.txt"));
  CHECK(text.find("probe") != std::string::npos);
  CHECK(text.find(" Q0 ") != std::string::npos);

  write_file(dir.file("bad.txt"), "q1 Q0 doc\n");
  CHECK_THROWS_AS(load_trec_run(dir.file("bad.txt")), ParseError);
}
