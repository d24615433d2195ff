#include "fairlds/datagen.hpp"

#include <cmath>
#include <stdexcept>

#include "fairlds/rng.hpp"
#include "json.hpp"

namespace fairlds::datagen {

namespace {
// stream tags for seed derivation
constexpr std::uint64_t kCovStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kRetentionStream = 3;

std::uint64_t subgroup_tag(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}
}  // namespace

void GeneratorConfig::validate() const {
  if (beta_d < 0.0 || beta_d > 1.0) throw std::invalid_argument("generator: beta_d not in [0,1]");
  if (horizon < 1) throw std::invalid_argument("generator: horizon must be >= 1");
  if (trajectories.empty()) throw std::invalid_argument("generator: no subgroups");
  for (const auto& [s, n] : trajectories) {
    if (n < 1) throw std::invalid_argument("generator: trajectory count for " + s + " must be >= 1");
    if (!m0.count(s)) throw std::invalid_argument("generator: missing m0 for subgroup " + s);
  }
  if (v_range[1] < v_range[0] || w_range[1] < w_range[0] || v_range[0] < 0 || w_range[0] < 0)
    throw std::invalid_argument("generator: bad covariance ranges");
}

GeneratorConfig GeneratorConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  GeneratorConfig c;
  if (j.contains("G")) {
    auto g = j.at("G");
    for (int r = 0; r < 2; ++r)
      for (int k = 0; k < 2; ++k) c.G[r][k] = g.at(r).at(k).get<double>();
  }
  if (j.contains("F")) {
    c.F[0] = j.at("F").at(0).get<double>();
    c.F[1] = j.at("F").at(1).get<double>();
  }
  if (j.contains("V_range")) {
    c.v_range[0] = j.at("V_range").at(0).get<double>();
    c.v_range[1] = j.at("V_range").at(1).get<double>();
  }
  if (j.contains("W_range")) {
    c.w_range[0] = j.at("W_range").at(0).get<double>();
    c.w_range[1] = j.at("W_range").at(1).get<double>();
  }
  if (j.contains("m0")) {
    c.m0.clear();
    for (auto it = j.at("m0").begin(); it != j.at("m0").end(); ++it)
      c.m0[it.key()] = it.value().get<double>();
  }
  if (j.contains("T")) c.horizon = j.at("T").get<int>();
  if (j.contains("trajectories")) {
    c.trajectories.clear();
    for (auto it = j.at("trajectories").begin(); it != j.at("trajectories").end(); ++it)
      c.trajectories[it.key()] = it.value().get<int>();
  }
  if (j.contains("beta_d")) c.beta_d = j.at("beta_d").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

std::string GeneratorConfig::to_json() const {
  nlohmann::ordered_json j;
  j["G"] = {{G[0][0], G[0][1]}, {G[1][0], G[1][1]}};
  j["F"] = {F[0], F[1]};
  j["V_range"] = {v_range[0], v_range[1]};
  j["W_range"] = {w_range[0], w_range[1]};
  nlohmann::ordered_json m;
  for (const auto& [s, v] : m0) m[s] = v;
  j["m0"] = m;
  j["T"] = horizon;
  nlohmann::ordered_json tr;
  for (const auto& [s, n] : trajectories) tr[s] = n;
  j["trajectories"] = tr;
  j["beta_d"] = beta_d;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

Simulation simulate(const GeneratorConfig& config) {
  config.validate();
  Simulation sim;
  // per-subgroup diagonal covariances, one draw per panel
  for (const auto& [s, n] : config.trajectories) {
    (void)n;
    std::mt19937_64 eng(rng::derive(config.seed, kCovStream, subgroup_tag(s)));
    sim.v_var[s] = rng::uniform(eng, config.v_range[0], config.v_range[1]);
    sim.w_var[s] = {rng::uniform(eng, config.w_range[0], config.w_range[1]),
                    rng::uniform(eng, config.w_range[0], config.w_range[1])};
  }
  for (const auto& [s, count] : config.trajectories) {
    double sigv = std::sqrt(sim.v_var.at(s));
    std::array<double, 2> sigw = {std::sqrt(sim.w_var.at(s)[0]), std::sqrt(sim.w_var.at(s)[1])};
    for (int i = 1; i <= count; ++i) {
      std::mt19937_64 eng(
          rng::derive(config.seed, kNoiseStream, subgroup_tag(s), static_cast<std::uint64_t>(i)));
      SimulatedTrajectory tr;
      tr.subgroup = s;
      tr.trajectory = i;
      double m0 = config.m0.at(s);
      std::array<double, 2> phi = {m0, m0};  // scalar seed broadcast to the 2-dim state
      tr.states.push_back(phi);
      for (int t = 1; t <= config.horizon; ++t) {
        std::array<double, 2> w = {sigw[0] * rng::normal(eng), sigw[1] * rng::normal(eng)};
        std::array<double, 2> next = {
            config.G[0][0] * phi[0] + config.G[0][1] * phi[1] + w[0],
            config.G[1][0] * phi[0] + config.G[1][1] * phi[1] + w[1]};
        double v = sigv * rng::normal(eng);
        double y = config.F[0] * next[0] + config.F[1] * next[1] + v;
        tr.w_noise.push_back(w);
        tr.v_noise.push_back(v);
        tr.states.push_back(next);
        tr.observations.push_back(y);
        phi = next;
      }
      sim.trajectories.push_back(std::move(tr));
    }
  }
  return sim;
}

lds::Panel sample_panel(const GeneratorConfig& config) {
  Simulation sim = simulate(config);
  lds::Panel panel;
  for (const auto& tr : sim.trajectories) {
    if (tr.subgroup == "d" && config.beta_d < 1.0) continue;
    for (int t = 1; t <= config.horizon; ++t)
      panel.add(tr.subgroup, tr.trajectory, t, tr.observations[t - 1]);
  }
  if (config.beta_d < 1.0 && config.trajectories.count("d")) {
    std::vector<const SimulatedTrajectory*> dis;
    for (const auto& tr : sim.trajectories)
      if (tr.subgroup == "d") dis.push_back(&tr);
    std::mt19937_64 eng(rng::derive(config.seed, kRetentionStream, subgroup_tag("d")));
    for (int t = 1; t <= config.horizon; ++t) {
      std::vector<char> keep(dis.size(), 0);
      if (config.beta_d == 0.0) {
        // the floor forces one observation; keep the first trajectory's
        keep[0] = 1;
      } else {
        bool any = false;
        while (!any) {  // re-draw the period until the subgroup keeps something
          for (size_t i = 0; i < dis.size(); ++i) {
            keep[i] = rng::uniform01(eng) < config.beta_d;
            any = any || keep[i];
          }
        }
      }
      for (size_t i = 0; i < dis.size(); ++i)
        if (keep[i]) panel.add("d", dis[i]->trajectory, t, dis[i]->observations[t - 1]);
    }
    // measure-zero guard: a trajectory that lost every period keeps period 1
    for (const auto* tr : dis)
      if (!panel.data["d"].count(tr->trajectory))
        panel.add("d", tr->trajectory, 1, tr->observations[0]);
  }
  panel.validate();
  return panel;
}

double annuity_premium(const std::vector<double>& survivors, double rate) {
  if (survivors.size() != 11)
    throw std::invalid_argument("annuity: survivors must hold p_0..p_10");
  if (survivors[0] <= 0.0) throw std::invalid_argument("annuity: p_0 must be positive");
  for (size_t t = 1; t < survivors.size(); ++t)
    if (survivors[t] > survivors[t - 1] || survivors[t] < 0.0)
      throw std::invalid_argument("annuity: survivor counts must be nonincreasing and nonnegative");
  double total = 0.0;
  for (int t = 1; t <= 10; ++t) total += survivors[t] * std::pow(1.0 + rate, -t);
  return total / survivors[0];
}

}  // namespace fairlds::datagen
