#include "fairlds/lds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fairlds/csv.hpp"
#include "json.hpp"

namespace fairlds::lds {

void Panel::add(const std::string& subgroup, int trajectory, int period, double value) {
  if (period < 1) throw std::invalid_argument("panel: period must be >= 1");
  data[subgroup][trajectory][period] = value;
}

std::vector<std::string> Panel::subgroups() const {
  std::vector<std::string> out;
  for (const auto& [s, _] : data) out.push_back(s);
  return out;
}

std::vector<int> Panel::horizon() const {
  std::set<int> periods;
  for (const auto& [s, trajs] : data)
    for (const auto& [i, obs] : trajs)
      for (const auto& [t, y] : obs) {
        (void)y;
        periods.insert(t);
      }
  return {periods.begin(), periods.end()};
}

int Panel::observation_count() const {
  int n = 0;
  for (const auto& [s, trajs] : data)
    for (const auto& [i, obs] : trajs) n += static_cast<int>(obs.size());
  return n;
}

double Panel::max_abs_value() const {
  double m = 0.0;
  for (const auto& [s, trajs] : data)
    for (const auto& [i, obs] : trajs)
      for (const auto& [t, y] : obs) m = std::max(m, std::fabs(y));
  return m;
}

void Panel::validate() const {
  if (data.empty()) throw std::invalid_argument("panel: no subgroups");
  for (const auto& [s, trajs] : data) {
    if (trajs.empty()) throw std::invalid_argument("panel: subgroup " + s + " has no trajectories");
    for (const auto& [i, obs] : trajs)
      if (obs.empty())
        throw std::invalid_argument("panel: trajectory " + std::to_string(i) + " of subgroup " +
                                    s + " has no observations");
  }
}

Panel read_panel_csv(const std::string& path) {
  csv::Table t = csv::read_file(path);
  int cs = t.column("subgroup"), ci = t.column("trajectory"), cp = t.column("period"),
      cv = t.column("value");
  if (cs < 0 || ci < 0 || cp < 0 || cv < 0)
    throw std::runtime_error("panel csv: header must be subgroup,trajectory,period,value");
  Panel p;
  for (const auto& row : t.rows) {
    if (row.size() < 4) throw std::runtime_error("panel csv: short row");
    p.add(row[cs], std::stoi(row[ci]), std::stoi(row[cp]), std::stod(row[cv]));
  }
  p.validate();
  return p;
}

void write_panel_csv(const Panel& panel, const std::string& path,
                     const std::vector<std::string>& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& line : provenance) out << "# " << line << "\n";
  out << "subgroup,trajectory,period,value\n";
  char buf[64];
  for (const auto& [s, trajs] : panel.data)
    for (const auto& [i, obs] : trajs)
      for (const auto& [t, y] : obs) {
        std::snprintf(buf, sizeof(buf), "%.17g", y);
        out << csv::escape(s) << "," << i << "," << t << "," << buf << "\n";
      }
}

std::string to_string(Objective o) {
  switch (o) {
    case Objective::Unfair: return "unfair";
    case Objective::SubgroupFair: return "subgroup-fair";
    case Objective::InstantFair: return "instant-fair";
  }
  return "?";
}

std::optional<Objective> objective_from_string(const std::string& s) {
  if (s == "unfair") return Objective::Unfair;
  if (s == "subgroup-fair") return Objective::SubgroupFair;
  if (s == "instant-fair") return Objective::InstantFair;
  return std::nullopt;
}

LdsProblem build_problem(const Panel& panel, const FitConfig& config) {
  panel.validate();
  if (config.order < 1)
    throw std::invalid_argument("fit: relaxation order must be >= 1 for this encoding");
  if (config.lambda1 < 0 || config.lambda2 < 0)
    throw std::invalid_argument("fit: negative lambda");

  LdsProblem lp;
  auto& prob = lp.problem;
  auto declare = [&](const std::string& label) {
    int id = static_cast<int>(prob.variables.size());
    prob.variables.push_back({id, label, true});
    lp.labels.push_back(label);
    return id;
  };

  const bool fair = config.objective != Objective::Unfair;
  const bool absolute = config.loss == LossMode::Absolute;
  const bool need_u = absolute && config.objective != Objective::InstantFair;

  lp.sym_G = declare("G");
  lp.sym_F = declare("F");
  if (fair) lp.sym_z = declare("z");

  std::vector<int> horizon = panel.horizon();
  std::vector<int> chain = {0};
  chain.insert(chain.end(), horizon.begin(), horizon.end());
  for (int t : chain) lp.sym_m[t] = declare("m" + std::to_string(t));
  for (int t : horizon) {
    lp.sym_omega[t] = declare("w" + std::to_string(t));
    lp.sym_nu[t] = declare("v" + std::to_string(t));
    lp.sym_f[t] = declare("f" + std::to_string(t));
  }
  if (need_u) {
    for (const auto& [s, trajs] : panel.data)
      for (const auto& [i, obs] : trajs)
        for (const auto& [t, y] : obs) {
          (void)y;
          lp.sym_u[{s, i, t}] =
              declare("u[" + s + "," + std::to_string(i) + "," + std::to_string(t) + "]");
        }
  }

  auto P = [](int id) { return Polynomial(Monomial::symbol(id)); };

  // state recursion and observation equations; the predecessor state is the
  // previous declared period (the panel may have period gaps)
  for (size_t j = 1; j < chain.size(); ++j) {
    int t = chain[j], prev = chain[j - 1];
    prob.equalities.push_back(P(lp.sym_m.at(t)) -
                              P(lp.sym_G) * P(lp.sym_m.at(prev)) - P(lp.sym_omega.at(t)));
    prob.equalities.push_back(P(lp.sym_f.at(t)) - P(lp.sym_F) * P(lp.sym_m.at(t)) -
                              P(lp.sym_nu.at(t)));
  }

  // residual Y - f_t as a polynomial
  auto residual = [&](double y, int t) { return Polynomial(y) - P(lp.sym_f.at(t)); };

  if (absolute) {
    if (config.objective == Objective::InstantFair) {
      for (const auto& [s, trajs] : panel.data)
        for (const auto& [i, obs] : trajs)
          for (const auto& [t, y] : obs) {
            prob.inequalities.push_back(P(lp.sym_z) - residual(y, t));
            prob.inequalities.push_back(P(lp.sym_z) + residual(y, t));
          }
    } else {
      for (const auto& [s, trajs] : panel.data)
        for (const auto& [i, obs] : trajs)
          for (const auto& [t, y] : obs) {
            const Polynomial u = P(lp.sym_u.at({s, i, t}));
            prob.inequalities.push_back(u - residual(y, t));
            prob.inequalities.push_back(u + residual(y, t));
          }
    }
  }

  // loss of one subgroup weighted per trajectory count and length
  auto subgroup_loss = [&](const std::string& s) {
    const auto& trajs = panel.data.at(s);
    Polynomial sum;
    double wi = 1.0 / static_cast<double>(trajs.size());
    for (const auto& [i, obs] : trajs) {
      double wt = wi / static_cast<double>(obs.size());
      for (const auto& [t, y] : obs) {
        if (absolute)
          sum = sum + wt * P(lp.sym_u.at({s, i, t}));
        else
          sum = sum + wt * (residual(y, t) * residual(y, t));
      }
    }
    return sum;
  };

  Polynomial objective;
  switch (config.objective) {
    case Objective::SubgroupFair:
      for (const auto& [s, trajs] : panel.data) {
        (void)trajs;
        prob.inequalities.push_back(P(lp.sym_z) - subgroup_loss(s));
      }
      objective = P(lp.sym_z);
      break;
    case Objective::InstantFair:
      if (!absolute) {
        for (const auto& [s, trajs] : panel.data)
          for (const auto& [i, obs] : trajs)
            for (const auto& [t, y] : obs)
              prob.inequalities.push_back(P(lp.sym_z) - residual(y, t) * residual(y, t));
      }
      objective = P(lp.sym_z);
      break;
    case Objective::Unfair:
      for (const auto& [s, trajs] : panel.data)
        for (const auto& [i, obs] : trajs)
          for (const auto& [t, y] : obs) {
            if (absolute)
              objective = objective + P(lp.sym_u.at({s, i, t}));
            else
              objective = objective + residual(y, t) * residual(y, t);
          }
      break;
  }
  for (int t : horizon) {
    if (config.lambda1 > 0)
      objective = objective + config.lambda1 * (P(lp.sym_omega.at(t)) * P(lp.sym_omega.at(t)));
    if (config.lambda2 > 0)
      objective = objective + config.lambda2 * (P(lp.sym_nu.at(t)) * P(lp.sym_nu.at(t)));
  }
  prob.objective = objective;

  // Archimedean ball over every declared variable
  double radius = config.ball_radius;
  if (radius <= 0.0) radius = 10.0 * std::max(1.0, panel.max_abs_value());
  lp.ball_radius = radius;
  Polynomial ball(radius * radius);
  for (const auto& s : prob.variables) ball = ball - P(s.id) * P(s.id);
  prob.inequalities.push_back(ball);

  prob.validate();
  return lp;
}

std::map<std::string, std::optional<double>> evaluate(
    const Panel& panel, const std::map<int, double>& forecasts) {
  std::map<std::string, std::optional<double>> out;
  for (const auto& [s, trajs] : panel.data) {
    double mean = 0.0;
    double wi = 1.0 / static_cast<double>(trajs.size());
    for (const auto& [i, obs] : trajs) {
      double wt = wi / static_cast<double>(obs.size());
      for (const auto& [t, y] : obs) {
        (void)t;
        mean += wt * y;
      }
    }
    double num = 0.0, den = 0.0;
    for (const auto& [i, obs] : trajs)
      for (const auto& [t, y] : obs) {
        auto f = forecasts.find(t);
        if (f == forecasts.end())
          throw std::invalid_argument("evaluate: no forecast for period " + std::to_string(t));
        num += (y - f->second) * (y - f->second);
        den += (y - mean) * (y - mean);
      }
    if (den == 0.0)
      out[s] = std::nullopt;
    else
      out[s] = std::sqrt(num / den);
  }
  return out;
}

FitResult fit(const Panel& panel, const FitConfig& config) {
  LdsProblem lp = build_problem(panel, config);
  npa::Relaxation rel = npa::assemble(lp.problem, config.order);
  sdp::SdpSolution sol = sdp::solve(rel.instance, config.solver);

  FitResult res;
  res.status = sol.status;
  res.iterations = sol.iterations;
  res.duality_gap = sol.duality_gap;
  res.num_moment_vars = rel.instance.num_vars;
  res.num_symbols = static_cast<int>(lp.problem.variables.size());

  if (sol.status != sdp::SolveStatus::Optimal)
    throw FitError("fit: solver returned " + sdp::to_string(sol.status) + " on " +
                       to_string(config.objective) + " formulation with " +
                       std::to_string(res.num_moment_vars) + " moment variables",
                   sol.status);

  auto est = npa::extract_estimates(sol, rel.index, lp.problem.variables);
  for (const auto& [id, v] : est) res.estimates[lp.labels[id]] = v;
  for (const auto& [t, id] : lp.sym_f) res.forecasts[t] = est.at(id);
  res.z = lp.sym_z >= 0 ? est.at(lp.sym_z) : 0.0;
  res.objective_bound = sol.objective;

  for (const auto& [s, trajs] : panel.data) {
    double loss = 0.0;
    double wi = 1.0 / static_cast<double>(trajs.size());
    for (const auto& [i, obs] : trajs) {
      double wt = wi / static_cast<double>(obs.size());
      for (const auto& [t, y] : obs) loss += wt * std::fabs(y - res.forecasts.at(t));
    }
    res.per_subgroup_loss[s] = loss;
  }
  res.nrmse = evaluate(panel, res.forecasts);

  int d = 1;
  for (const auto& q : lp.problem.inequalities) d = std::max(d, (q.degree() + 1) / 2);
  if (config.order - d >= 0)
    res.rank_loop = npa::rank_loop_flag(sol.y, rel.index, config.order, d, 1e-6);
  return res;
}

std::string fit_result_json(
    const FitResult& result,
    const std::vector<std::pair<std::string, std::string>>& provenance) {
  nlohmann::ordered_json j;
  if (!provenance.empty()) {
    nlohmann::ordered_json p;
    for (const auto& [k, v] : provenance) p[k] = v;
    j["provenance"] = p;
  }
  nlohmann::ordered_json f;
  for (const auto& [t, v] : result.forecasts) f[std::to_string(t)] = v;
  j["forecasts"] = f;
  j["z"] = result.z;
  j["objective_bound"] = result.objective_bound;
  nlohmann::ordered_json pl;
  for (const auto& [s, v] : result.per_subgroup_loss) pl[s] = v;
  j["per_subgroup_loss"] = pl;
  nlohmann::ordered_json nr;
  for (const auto& [s, v] : result.nrmse) {
    if (v)
      nr[s] = *v;
    else
      nr[s] = nullptr;
  }
  j["nrmse"] = nr;
  j["solver"] = {{"status", sdp::to_string(result.status)},
                 {"iterations", result.iterations},
                 {"gap", result.duality_gap}};
  j["rank_loop"] = result.rank_loop;
  j["num_vars"] = result.num_moment_vars;
  return j.dump(2) + "\n";
}

}  // namespace fairlds::lds
