#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "fairlds/metrics.hpp"

using namespace fairlds::metrics;

namespace {

// rows realizing a given confusion table for one subgroup
void fill(LabeledScores& data, std::vector<int>& preds, const std::string& s, int tp, int fp,
          int fn, int tn) {
  auto push = [&](int label, int pred) {
    data.push_back({s, 0.0, label});
    preds.push_back(pred);
  };
  for (int i = 0; i < tp; ++i) push(1, 1);
  for (int i = 0; i < fp; ++i) push(0, 1);
  for (int i = 0; i < fn; ++i) push(1, 0);
  for (int i = 0; i < tn; ++i) push(0, 0);
}

}  // namespace

TEST_CASE("percentile threshold with linear interpolation") {
  std::vector<double> scores;
  for (int i = 1; i <= 10; ++i) scores.push_back(i);
  CHECK(uni_race_threshold(scores, 50.0) == doctest::Approx(5.5));
  CHECK(uni_race_threshold(scores, 0.0) == doctest::Approx(1.0));
  CHECK(uni_race_threshold(scores, 100.0) == doctest::Approx(10.0));
  CHECK_THROWS(uni_race_threshold({}, 50.0));
  CHECK_THROWS(uni_race_threshold(scores, 101.0));

  LabeledScores data;
  for (double s : scores) data.push_back({"x", s, 0});
  auto at0 = predict(data, uni_race_threshold(scores, 0.0));
  CHECK(std::count(at0.begin(), at0.end(), 1) == 9);  // ties at the minimum stay 0
  auto at100 = predict(data, uni_race_threshold(scores, 100.0));
  CHECK(std::count(at100.begin(), at100.end(), 1) == 0);
}

TEST_CASE("race-wise thresholds recover base rates") {
  SUBCASE("base rate 1 flags everyone") {
    LabeledScores data = {{"g", 3.0, 1}, {"g", 5.0, 1}, {"h", 1.0, 0}, {"h", 2.0, 1}};
    auto thr = race_wise_thresholds(data);
    CHECK(thr.at("g") < 3.0);
    auto preds = predict(data, thr);
    CHECK(preds[0] == 1);
    CHECK(preds[1] == 1);
  }
  SUBCASE("base rate 0 flags no one") {
    LabeledScores data = {{"g", 3.0, 0}, {"g", 5.0, 0}, {"h", 1.0, 1}, {"h", 2.0, 0}};
    auto thr = race_wise_thresholds(data);
    CHECK(thr.at("g") >= 5.0);
    auto preds = predict(data, thr);
    CHECK(preds[0] == 0);
    CHECK(preds[1] == 0);
  }
  SUBCASE("flagged fraction matches the base rate when scores are distinct") {
    LabeledScores data;
    for (int i = 1; i <= 10; ++i) data.push_back({"g", static_cast<double>(i), i > 6 ? 1 : 0});
    for (int i = 1; i <= 4; ++i) data.push_back({"h", static_cast<double>(i), i > 2 ? 1 : 0});
    auto thr = race_wise_thresholds(data);
    auto preds = predict(data, thr);
    int g_pos = 0, h_pos = 0;
    for (size_t i = 0; i < data.size(); ++i) {
      if (data[i].subgroup == "g") g_pos += preds[i];
      else h_pos += preds[i];
    }
    CHECK(g_pos == 4);  // base rate 0.4 of 10
    CHECK(h_pos == 2);  // base rate 0.5 of 4
  }
}

TEST_CASE("indices match hand arithmetic on the reference confusion tables") {
  LabeledScores data;
  std::vector<int> preds;
  fill(data, preds, "AA", 30, 20, 10, 40);
  fill(data, preds, "C", 20, 10, 20, 50);
  IndexSet s = indices(data, preds);
  REQUIRE(s.ind.has_value());
  REQUIRE(s.sp.has_value());
  REQUIRE(s.sf.has_value());
  REQUIRE(s.ina.has_value());
  CHECK(std::fabs(*s.ind - std::fabs(50.0 / 100 - 30.0 / 100)) <= 1e-12);
  double sp = std::fabs(10.0 / 40 - 20.0 / 40) + std::fabs(20.0 / 60 - 10.0 / 60);
  CHECK(std::fabs(*s.sp - sp) <= 1e-12);
  // |P(Y=1|f=1,AA) - P(Y=1|f=1,C)| + |P(f=0|Y=0,AA) - P(f=0|Y=0,C)|
  double sf = std::fabs(30.0 / 50 - 20.0 / 30) + std::fabs(40.0 / 60 - 50.0 / 60);
  CHECK(std::fabs(*s.sf - sf) <= 1e-12);
  CHECK(std::fabs(*s.ina - (20.0 + 10 + 10 + 20) / 200.0) <= 1e-12);
  CHECK(s.cells.at("AA").tp == 30);
  CHECK(s.cells.at("C").tn == 50);
}

TEST_CASE("symmetric subgroups give zero disparity") {
  LabeledScores data;
  std::vector<int> preds;
  fill(data, preds, "AA", 12, 5, 7, 20);
  fill(data, preds, "C", 12, 5, 7, 20);
  IndexSet s = indices(data, preds);
  CHECK(*s.ind == 0.0);
  CHECK(*s.sp == 0.0);
  CHECK(*s.sf == 0.0);
}

TEST_CASE("perfect predictions zero out inaccuracy and separation") {
  LabeledScores data;
  std::vector<int> preds;
  fill(data, preds, "AA", 10, 0, 0, 15);
  fill(data, preds, "C", 5, 0, 0, 8);
  IndexSet s = indices(data, preds);
  CHECK(*s.ina == 0.0);
  CHECK(*s.sp == 0.0);
}

TEST_CASE("undefined conditionals are absent, not zero") {
  LabeledScores data;
  std::vector<int> preds;
  fill(data, preds, "AA", 0, 3, 0, 7);  // no label-1 rows: P(f=0|Y=1) undefined
  fill(data, preds, "C", 2, 1, 2, 5);
  IndexSet s = indices(data, preds);
  CHECK_FALSE(s.sp.has_value());
  CHECK(s.ind.has_value());
  CHECK(s.ina.has_value());
}

TEST_CASE("a single subgroup is an error") {
  LabeledScores data;
  std::vector<int> preds;
  fill(data, preds, "AA", 1, 1, 1, 1);
  CHECK_THROWS(indices(data, preds));
}

TEST_CASE("indices are invariant under row permutation") {
  LabeledScores data;
  std::vector<int> preds;
  fill(data, preds, "AA", 7, 3, 2, 9);
  fill(data, preds, "C", 4, 6, 1, 5);
  IndexSet before = indices(data, preds);
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937 eng(3);
  std::shuffle(order.begin(), order.end(), eng);
  LabeledScores shuffled;
  std::vector<int> shuffled_preds;
  for (size_t i : order) {
    shuffled.push_back(data[i]);
    shuffled_preds.push_back(preds[i]);
  }
  IndexSet after = indices(shuffled, shuffled_preds);
  CHECK(*before.ind == *after.ind);
  CHECK(*before.sp == *after.sp);
  CHECK(*before.sf == *after.sf);
  CHECK(*before.ina == *after.ina);
}

TEST_CASE("raising a threshold never adds positive predictions") {
  std::mt19937 eng(9);
  LabeledScores data;
  for (int i = 0; i < 60; ++i)
    data.push_back({i % 2 ? "AA" : "C", static_cast<double>(eng() % 100) / 10.0, 0});
  int last = 61;
  for (double thr = 0.0; thr <= 10.0; thr += 0.5) {
    auto preds = predict(data, thr);
    int pos = static_cast<int>(std::count(preds.begin(), preds.end(), 1));
    CHECK(pos <= last);
    last = pos;
  }
}

TEST_CASE("reweighting balances subgroup counts") {
  SUBCASE("already balanced input is unchanged") {
    LabeledScores data;
    std::vector<int> preds;
    fill(data, preds, "AA", 2, 2, 2, 2);
    fill(data, preds, "C", 3, 2, 1, 2);
    LabeledScores out = reweight_test_set(data, 5);
    CHECK(out.size() == data.size());
  }
  SUBCASE("larger subgroup is sampled down to the smaller") {
    LabeledScores data;
    for (int i = 0; i < 602; ++i) data.push_back({"AA", static_cast<double>(i), i % 2});
    for (int i = 0; i < 403; ++i) data.push_back({"C", static_cast<double>(i), i % 3 == 0});
    LabeledScores out = reweight_test_set(data, 7);
    int aa = 0, c = 0;
    for (const auto& r : out) (r.subgroup == "AA" ? aa : c)++;
    CHECK(aa == 403);
    CHECK(c == 403);
  }
  SUBCASE("deterministic in the seed") {
    LabeledScores data;
    for (int i = 0; i < 20; ++i) data.push_back({"AA", static_cast<double>(i), i % 2});
    for (int i = 0; i < 9; ++i) data.push_back({"C", static_cast<double>(i), 0});
    LabeledScores a = reweight_test_set(data, 123);
    LabeledScores b = reweight_test_set(data, 123);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].subgroup == b[i].subgroup);
      CHECK(a[i].score == b[i].score);
    }
  }
}

TEST_CASE("report serializes all eight indices with thresholds") {
  LabeledScores data;
  std::vector<int> preds;
  fill(data, preds, "AA", 3, 2, 1, 4);
  fill(data, preds, "C", 2, 2, 2, 4);
  FairnessReport rep;
  rep.original = indices(data, preds);
  rep.reweighted = indices(data, preds);
  rep.thresholds = {{"AA", 4.5}, {"C", 5.5}};
  std::string json = rep.to_json({{"tool", "test"}});
  CHECK(json.find("\"IND\"") != std::string::npos);
  CHECK(json.find("\"reweighted\"") != std::string::npos);
  CHECK(json.find("\"thresholds\"") != std::string::npos);
  CHECK(json.find("\"confusion\"") != std::string::npos);
}
