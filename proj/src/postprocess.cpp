#include "fairlds/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fairlds::postprocess {

std::string to_string(Kind k) {
  return k == Kind::SubgroupFair ? "subgroup-fair" : "instant-fair";
}

namespace {

struct VarLayout {
  int z = 0;
  std::map<std::string, int> a0;  // first of four coefficient vars
  std::map<std::string, int> e;
  std::map<std::string, int> r;
  std::map<std::string, std::vector<size_t>> rows_of;
  std::vector<int> u;  // per row, SubgroupFair only
  int total = 0;
};

VarLayout layout(const std::vector<FeatureRow>& train, Kind kind) {
  VarLayout L;
  for (size_t i = 0; i < train.size(); ++i) L.rows_of[train[i].subgroup].push_back(i);
  if (L.rows_of.empty()) throw std::invalid_argument("fit_post: empty training set");
  for (const auto& [s, rows] : L.rows_of)
    if (rows.empty()) throw std::invalid_argument("fit_post: empty subgroup " + s);
  int next = 1;  // 0 is z
  for (const auto& [s, rows] : L.rows_of) {
    (void)rows;
    L.a0[s] = next;
    next += 4;
    L.e[s] = next++;
    L.r[s] = next++;
  }
  if (kind == Kind::SubgroupFair) {
    L.u.resize(train.size());
    for (size_t i = 0; i < train.size(); ++i) L.u[i] = next++;
  }
  L.total = next;
  return L;
}

// residual Y_i - (A.x_i + e) as a linear form
sdp::LinearForm residual_form(const FeatureRow& row, const VarLayout& L) {
  sdp::LinearForm f;
  f.constant = static_cast<double>(row.label);
  auto x = row.features();
  int a0 = L.a0.at(row.subgroup);
  for (int k = 0; k < 4; ++k) f.add(a0 + k, -x[k]);
  f.add(L.e.at(row.subgroup), -1.0);
  return f;
}

sdp::LinearForm plus(const sdp::LinearForm& a, const sdp::LinearForm& b, double sb) {
  sdp::LinearForm f = a;
  f.constant += sb * b.constant;
  for (const auto& [v, c] : b.terms) f.add(v, sb * c);
  return f;
}

}  // namespace

PostModel fit_post(const std::vector<FeatureRow>& train, Kind kind, double lambda3,
                   const sdp::SolverConfig& solver) {
  if (lambda3 < 0) throw std::invalid_argument("fit_post: negative lambda3");
  VarLayout L = layout(train, kind);

  sdp::SdpInstance ins;
  ins.num_vars = L.total;
  sdp::LinearForm zf;
  zf.add(L.z, 1.0);

  for (size_t i = 0; i < train.size(); ++i) {
    sdp::LinearForm R = residual_form(train[i], L);
    sdp::LinearForm top;
    if (kind == Kind::SubgroupFair)
      top.add(L.u[i], 1.0);
    else
      top.add(L.z, 1.0);
    sdp::Block b1, b2;
    b1.dim = 1;
    b1.set(0, 0, plus(top, R, -1.0));  // u (or z) - residual >= 0
    b2.dim = 1;
    b2.set(0, 0, plus(top, R, +1.0));  // u (or z) + residual >= 0
    ins.blocks.push_back(std::move(b1));
    ins.blocks.push_back(std::move(b2));
  }
  if (kind == Kind::SubgroupFair) {
    for (const auto& [s, rows] : L.rows_of) {
      sdp::LinearForm f;
      f.add(L.z, 1.0);
      double w = 1.0 / static_cast<double>(rows.size());
      for (size_t i : rows) f.add(L.u[i], -w);
      sdp::Block b;
      b.dim = 1;
      b.set(0, 0, std::move(f));  // z >= mean |residual| over the subgroup
      ins.blocks.push_back(std::move(b));
    }
  }
  // r_s >= e_s^2 through [[1, e],[e, r]] >= 0; without a penalty the r
  // variables are cost-free barrier rays, so they exist only when needed
  if (lambda3 > 0.0) {
    for (const auto& [s, idx] : L.e) {
      sdp::Block b;
      b.dim = 2;
      b.set(0, 0, sdp::LinearForm(1.0));
      sdp::LinearForm ef;
      ef.add(idx, 1.0);
      b.set(0, 1, std::move(ef));
      sdp::LinearForm rf;
      rf.add(L.r.at(s), 1.0);
      b.set(1, 1, std::move(rf));
      ins.blocks.push_back(std::move(b));
    }
    for (const auto& [s, idx] : L.r) ins.objective.add(idx, lambda3);
  }
  ins.objective.add(L.z, 1.0);

  sdp::SdpSolution sol = sdp::solve(ins, solver);
  if (sol.status != sdp::SolveStatus::Optimal)
    throw std::runtime_error("fit_post: solver returned " + sdp::to_string(sol.status));

  PostModel model;
  model.kind = kind;
  model.lambda3 = lambda3;
  for (const auto& [s, a0] : L.a0) {
    std::array<double, 4> a{};
    for (int k = 0; k < 4; ++k) a[k] = sol.y[a0 + k];
    model.coeffs[s] = a;
    model.intercept[s] = sol.y[L.e.at(s)];
  }
  // report the objective of the returned model, not the epigraph value, so
  // r_s slack at the optimum cannot inflate it
  model.objective = evaluate_objective(model, train);
  return model;
}

double evaluate_objective(const PostModel& model, const std::vector<FeatureRow>& rows) {
  std::map<std::string, std::pair<double, int>> acc;  // subgroup -> (sum or max, count)
  double worst_row = 0.0;
  for (const auto& row : rows) {
    auto it = model.coeffs.find(row.subgroup);
    if (it == model.coeffs.end())
      throw std::invalid_argument("evaluate_objective: unknown subgroup " + row.subgroup);
    double g = model.intercept.at(row.subgroup);
    auto x = row.features();
    for (int k = 0; k < 4; ++k) g += it->second[k] * x[k];
    double loss = std::fabs(static_cast<double>(row.label) - g);
    auto& [agg, n] = acc[row.subgroup];
    agg += loss;
    ++n;
    worst_row = std::max(worst_row, loss);
  }
  double main_term = 0.0;
  if (model.kind == Kind::SubgroupFair) {
    for (const auto& [s, sn] : acc)
      main_term = std::max(main_term, sn.first / static_cast<double>(sn.second));
  } else {
    main_term = worst_row;
  }
  double penalty = 0.0;
  for (const auto& [s, e] : model.intercept) penalty += e * e;
  return main_term + model.lambda3 * penalty;
}

std::vector<double> score(const PostModel& model, const std::vector<FeatureRow>& rows) {
  std::vector<double> g;
  g.reserve(rows.size());
  for (const auto& row : rows) {
    auto it = model.coeffs.find(row.subgroup);
    if (it == model.coeffs.end())
      throw std::invalid_argument("score: unknown subgroup " + row.subgroup);
    double v = model.intercept.at(row.subgroup);
    auto x = row.features();
    for (int k = 0; k < 4; ++k) v += it->second[k] * x[k];
    g.push_back(v);
  }
  return g;
}

std::vector<int> classify(const std::vector<double>& scores,
                          const std::vector<FeatureRow>& rows,
                          const std::map<std::string, double>& thresholds) {
  if (scores.size() != rows.size()) throw std::invalid_argument("classify: size mismatch");
  std::vector<int> f(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    auto it = thresholds.find(rows[i].subgroup);
    if (it == thresholds.end())
      throw std::invalid_argument("classify: no threshold for " + rows[i].subgroup);
    f[i] = scores[i] > it->second ? 1 : 0;
  }
  return f;
}

std::vector<int> classify(const std::vector<double>& scores, double threshold) {
  std::vector<int> f(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) f[i] = scores[i] > threshold ? 1 : 0;
  return f;
}

}  // namespace fairlds::postprocess
