#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairlds/lds.hpp"

namespace fairlds::datagen {

/// Panel generator with controllable under-representation of the
/// disadvantaged subgroup "d": observations of "d" are retained with
/// probability beta_d, re-drawing each period until at least one
/// observation of every subgroup survives in it.
struct GeneratorConfig {
  std::array<std::array<double, 2>, 2> G{{{0.99, 0.0}, {1.0, 0.2}}};
  std::array<double, 2> F{1.1, 0.8};
  std::array<double, 2> v_range{0.0, 1.0};   // observation-noise variance ~ U[range)
  std::array<double, 2> w_range{0.0, 0.1};   // process-noise variance ~ U[range)
  std::map<std::string, double> m0{{"a", 5.0}, {"d", 7.0}};  // scalar seed states
  int horizon = 10;
  std::map<std::string, int> trajectories{{"a", 1}, {"d", 1}};
  double beta_d = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  static GeneratorConfig from_json(const std::string& text);
  std::string to_json() const;
};

/// Raw simulation of one panel before any retention, kept for replay
/// checks: states, drawn noises and observations per trajectory.
struct SimulatedTrajectory {
  std::string subgroup;
  int trajectory = 0;
  std::vector<std::array<double, 2>> states;   // phi_0 .. phi_T
  std::vector<std::array<double, 2>> w_noise;  // w_1 .. w_T
  std::vector<double> v_noise;                 // v_1 .. v_T
  std::vector<double> observations;            // Y_1 .. Y_T
};

struct Simulation {
  std::vector<SimulatedTrajectory> trajectories;
  std::map<std::string, std::array<double, 2>> w_var;  // per-subgroup diag(W)
  std::map<std::string, double> v_var;                 // per-subgroup V (1x1)
};

Simulation simulate(const GeneratorConfig& config);

/// Biased panel: simulate, then drop disadvantaged observations with
/// probability 1 - beta_d, re-drawing any period of subgroup "d" that
/// would end up empty. Deterministic in config.seed.
lds::Panel sample_panel(const GeneratorConfig& config);

/// Pure annuity premium: sum of discounted survivor payments over ten
/// years divided by the initial count. survivors holds p_0..p_10.
double annuity_premium(const std::vector<double>& survivors, double rate);

}  // namespace fairlds::datagen
