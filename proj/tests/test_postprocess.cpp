#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fairlds/metrics.hpp"
#include "fairlds/npa.hpp"
#include "fairlds/postprocess.hpp"
#include "oracles.hpp"

using namespace fairlds::postprocess;

namespace {

FeatureRow row(const std::string& s, int id, double score, int label, double priors = 0.0,
               int young = 0) {
  FeatureRow r;
  r.subgroup = s;
  r.id = id;
  r.compas_score = score;
  r.prior_incidents = priors;
  r.age_under_25 = young;
  r.label = label;
  return r;
}

// independent re-evaluation of the min-max objective at a model
double reference_objective(const PostModel& m, const std::vector<FeatureRow>& rows) {
  std::map<std::string, std::pair<double, int>> agg;
  double worst = 0.0;
  for (const auto& r : rows) {
    double g = m.intercept.at(r.subgroup);
    auto x = r.features();
    for (int k = 0; k < 4; ++k) g += m.coeffs.at(r.subgroup)[k] * x[k];
    double loss = std::fabs(r.label - g);
    agg[r.subgroup].first += loss;
    agg[r.subgroup].second += 1;
    worst = std::max(worst, loss);
  }
  double main_term = 0.0;
  if (m.kind == Kind::SubgroupFair) {
    for (const auto& [s, sn] : agg) main_term = std::max(main_term, sn.first / sn.second);
  } else {
    main_term = worst;
  }
  double pen = 0.0;
  for (const auto& [s, e] : m.intercept) pen += e * e;
  return main_term + m.lambda3 * pen;
}

// grid oracle over (A_label, e) per subgroup; other coefficients are fixed
// at zero, which cannot beat the solver since they only enlarge its space
double grid_oracle(const std::vector<FeatureRow>& rows, Kind kind, double lambda3) {
  std::vector<std::string> subs;
  for (const auto& r : rows)
    if (std::find(subs.begin(), subs.end(), r.subgroup) == subs.end()) subs.push_back(r.subgroup);
  size_t dim = 2 * subs.size();
  auto eval = [&](const std::vector<double>& p) {
    PostModel m;
    m.kind = kind;
    m.lambda3 = lambda3;
    for (size_t i = 0; i < subs.size(); ++i) {
      m.coeffs[subs[i]] = {0.0, 0.0, 0.0, p[2 * i]};
      m.intercept[subs[i]] = p[2 * i + 1];
    }
    return reference_objective(m, rows);
  };
  std::vector<double> lo(dim, -3.0), hi(dim, 3.0);
  return oracle::grid_minimize(eval, lo, hi, 16);
}

}  // namespace

TEST_CASE("interpolatable data fits to zero loss") {
  std::vector<FeatureRow> train = {row("AA", 0, 2.0, 0), row("AA", 1, 8.0, 1),
                                   row("C", 2, 3.0, 1),  row("C", 3, 9.0, 0)};
  PostModel m = fit_post(train, Kind::SubgroupFair, 0.05);
  CHECK(m.objective <= 1e-6);
  auto g = score(m, train);
  for (size_t i = 0; i < train.size(); ++i)
    CHECK(g[i] == doctest::Approx(train[i].label).epsilon(1e-5));
}

TEST_CASE("single-feature toy decouples the race-wise models") {
  std::vector<FeatureRow> train = {row("AA", 0, 0.0, 0), row("AA", 1, 1.0, 1),
                                   row("C", 2, 0.0, 1)};
  PostModel m = fit_post(train, Kind::SubgroupFair, 0.0);
  CHECK(m.objective <= 1e-6);
  double oracle_value = grid_oracle(train, Kind::SubgroupFair, 0.0);
  CHECK(std::fabs(m.objective - oracle_value) <= 1e-6);
}

TEST_CASE("min-max value matches the grid oracle on small instances") {
  std::vector<std::vector<FeatureRow>> instances = {
      {row("AA", 0, 1.0, 1), row("AA", 1, 4.0, 0), row("C", 2, 2.0, 1), row("C", 3, 7.0, 0),
       row("C", 4, 5.0, 1)},
      {row("AA", 0, 3.0, 0, 2.0, 1), row("AA", 1, 6.0, 1, 0.0, 0), row("C", 2, 2.0, 0, 1.0, 0),
       row("C", 3, 9.0, 1, 4.0, 1)},
  };
  for (const auto& train : instances) {
    for (Kind kind : {Kind::SubgroupFair, Kind::InstantFair}) {
      for (double l3 : {0.0, 0.05}) {
        PostModel m = fit_post(train, kind, l3);
        double oracle_value = grid_oracle(train, kind, l3);
        CHECK(m.objective <= oracle_value + 1e-6);
        CHECK(std::fabs(m.objective - oracle_value) <= 1e-6);
      }
    }
  }
}

TEST_CASE("objective equals an independent re-evaluation at the model") {
  std::vector<FeatureRow> train = {row("AA", 0, 2.0, 1, 1.0), row("AA", 1, 5.0, 0),
                                   row("C", 2, 4.0, 1),       row("C", 3, 6.0, 0, 2.0)};
  for (Kind kind : {Kind::SubgroupFair, Kind::InstantFair}) {
    PostModel m = fit_post(train, kind, 0.05);
    double ref = reference_objective(m, train);
    CHECK(std::fabs(m.objective - ref) <= 1e-9 * (1.0 + std::fabs(ref)));
  }
}

TEST_CASE("intercepts shrink monotonically in lambda3") {
  std::vector<FeatureRow> train = {row("AA", 0, 1.0, 0), row("AA", 1, 2.0, 1),
                                   row("C", 2, 1.0, 1),  row("C", 3, 3.0, 0)};
  double last = 1e100;
  for (double l3 : {0.05, 5.0, 500.0}) {
    PostModel m = fit_post(train, Kind::SubgroupFair, l3);
    double mag = 0.0;
    for (const auto& [s, e] : m.intercept) mag = std::max(mag, std::fabs(e));
    CHECK(mag <= last + 1e-6);
    last = mag;
  }
}

TEST_CASE("cross-objective consistency between the two fairness kinds") {
  std::vector<FeatureRow> train = {row("AA", 0, 1.0, 1, 3.0), row("AA", 1, 4.0, 0),
                                   row("AA", 2, 2.0, 0, 1.0), row("C", 3, 2.0, 1),
                                   row("C", 4, 7.0, 0, 2.0)};
  PostModel sub = fit_post(train, Kind::SubgroupFair, 0.05);
  PostModel inst = fit_post(train, Kind::InstantFair, 0.05);
  // each optimum is no worse than the other's minimizer under its own objective
  PostModel inst_as_sub = inst;
  inst_as_sub.kind = Kind::SubgroupFair;
  CHECK(sub.objective <= reference_objective(inst_as_sub, train) + 1e-7);
  PostModel sub_as_inst = sub;
  sub_as_inst.kind = Kind::InstantFair;
  CHECK(inst.objective <= reference_objective(sub_as_inst, train) + 1e-7);
}

TEST_CASE("decoupled subgroup-fair fit matches per-subgroup solves at lambda3 = 0") {
  std::vector<FeatureRow> aa = {row("AA", 0, 1.0, 0), row("AA", 1, 6.0, 1)};
  std::vector<FeatureRow> c = {row("C", 2, 2.0, 1), row("C", 3, 5.0, 0)};
  std::vector<FeatureRow> joint = aa;
  joint.insert(joint.end(), c.begin(), c.end());
  PostModel mj = fit_post(joint, Kind::SubgroupFair, 0.0);
  PostModel ma = fit_post(aa, Kind::SubgroupFair, 0.0);
  PostModel mc = fit_post(c, Kind::SubgroupFair, 0.0);
  CHECK(mj.objective ==
        doctest::Approx(std::max(ma.objective, mc.objective)).epsilon(1e-6));
}

TEST_CASE("scoring") {
  SUBCASE("zero coefficients with an intercept") {
    PostModel m;
    m.coeffs["AA"] = {0, 0, 0, 0};
    m.intercept["AA"] = 0.5;
    m.lambda3 = 0.0;
    auto g = score(m, {row("AA", 0, 3.0, 1), row("AA", 1, 9.0, 0)});
    CHECK(g[0] == 0.5);
    CHECK(g[1] == 0.5);
  }
  SUBCASE("hand-computed dot product") {
    PostModel m;
    m.coeffs["AA"] = {0.5, -1.0, 2.0, 0.25};
    m.intercept["AA"] = 1.0;
    auto g = score(m, {row("AA", 0, 4.0, 1, 3.0, 1)});
    CHECK(g[0] == doctest::Approx(0.5 * 4.0 - 1.0 * 3.0 + 2.0 * 1.0 + 0.25 * 1.0 + 1.0));
  }
  SUBCASE("unknown subgroup is an error") {
    PostModel m;
    m.coeffs["AA"] = {0, 0, 0, 0};
    m.intercept["AA"] = 0.0;
    CHECK_THROWS(score(m, {row("C", 0, 1.0, 0)}));
  }
}

TEST_CASE("classification thresholds") {
  std::vector<FeatureRow> rows = {row("AA", 0, 0.0, 0), row("AA", 1, 0.0, 1),
                                  row("C", 2, 0.0, 1)};
  std::vector<double> scores = {0.2, 0.8, 0.5};
  SUBCASE("threshold below the minimum flags everyone") {
    auto f = classify(scores, 0.1);
    CHECK(f == std::vector<int>{1, 1, 1});
  }
  SUBCASE("threshold above the maximum flags no one") {
    auto f = classify(scores, 0.9);
    CHECK(f == std::vector<int>{0, 0, 0});
  }
  SUBCASE("race-wise base-rate thresholds reproduce base rates") {
    fairlds::metrics::LabeledScores labeled;
    for (size_t i = 0; i < rows.size(); ++i)
      labeled.push_back({rows[i].subgroup, scores[i], rows[i].label});
    auto thr = fairlds::metrics::race_wise_thresholds(labeled);
    auto f = classify(scores, rows, thr);
    // AA base rate 1/2 -> one of two flagged; C base rate 1 -> flagged
    CHECK(f[0] + f[1] == 1);
    CHECK(f[2] == 1);
  }
}

TEST_CASE("order-1 moment relaxation of the epigraph program reaches the same optimum") {
  // the direct epigraph solve and the operator-valued route must agree on a
  // convex instance, where the first-order relaxation is exact
  std::vector<FeatureRow> train = {row("AA", 0, 0.0, 0), row("AA", 1, 1.0, 1),
                                   row("C", 2, 0.0, 1)};
  const double lambda3 = 0.05;
  PostModel direct = fit_post(train, Kind::SubgroupFair, lambda3);

  using fairlds::Monomial;
  using fairlds::Polynomial;
  fairlds::npa::NcProblem prob;
  auto declare = [&](const std::string& label) {
    int id = static_cast<int>(prob.variables.size());
    prob.variables.push_back({id, label, true});
    return Polynomial(Monomial::symbol(id));
  };
  Polynomial z = declare("z");
  std::map<std::string, Polynomial> a_score, a_label, e;
  for (const std::string s : {"AA", "C"}) {
    a_score.emplace(s, declare("As_" + s));
    a_label.emplace(s, declare("Al_" + s));
    e.emplace(s, declare("e_" + s));
  }
  std::map<std::string, std::vector<Polynomial>> us;
  for (const auto& r : train) {
    Polynomial u = declare("u" + std::to_string(r.id));
    Polynomial resid = Polynomial(double(r.label)) - double(r.compas_score) * a_score.at(r.subgroup) -
                       double(r.label) * a_label.at(r.subgroup) - e.at(r.subgroup);
    prob.inequalities.push_back(u - resid);
    prob.inequalities.push_back(u + resid);
    us[r.subgroup].push_back(u);
  }
  for (auto& [s, list] : us) {
    Polynomial mean;
    for (const auto& u : list) mean = mean + (1.0 / double(list.size())) * u;
    prob.inequalities.push_back(z - mean);
  }
  prob.objective = z + lambda3 * (e.at("AA") * e.at("AA")) + lambda3 * (e.at("C") * e.at("C"));
  Polynomial ball(100.0);
  for (const auto& s : prob.variables)
    ball = ball - Polynomial(Monomial::symbol(s.id)) * Polynomial(Monomial::symbol(s.id));
  prob.inequalities.push_back(ball);

  fairlds::npa::Relaxation rel = fairlds::npa::assemble(prob, 1);
  fairlds::sdp::SdpSolution sol = fairlds::sdp::solve(rel.instance);
  REQUIRE(sol.status == fairlds::sdp::SolveStatus::Optimal);
  CHECK(std::fabs(sol.objective - direct.objective) <= 1e-6);
}

TEST_CASE("degenerate identical rows with conflicting labels still solve") {
  // same subgroup and identical non-label features, opposite labels
  std::vector<FeatureRow> train = {row("AA", 0, 5.0, 0), row("AA", 1, 5.0, 1),
                                   row("C", 2, 5.0, 0)};
  PostModel m = fit_post(train, Kind::InstantFair, 0.05);
  CHECK(std::isfinite(m.objective));
  CHECK_THROWS(fit_post({}, Kind::SubgroupFair, 0.05));
}
