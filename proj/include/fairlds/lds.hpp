#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "fairlds/npa.hpp"
#include "fairlds/sdp.hpp"

namespace fairlds::lds {

/// Multi-subgroup trajectory panel: observations keyed by
/// (subgroup, trajectory, period). Periods are positive integers and may
/// have gaps; every trajectory must carry at least one observation.
struct Panel {
  // subgroup -> trajectory -> period -> value
  std::map<std::string, std::map<int, std::map<int, double>>> data;

  void add(const std::string& subgroup, int trajectory, int period, double value);
  std::vector<std::string> subgroups() const;
  std::vector<int> horizon() const;  // sorted union of observed periods (T+)
  int observation_count() const;
  double max_abs_value() const;
  bool empty() const { return data.empty(); }
  void validate() const;
};

Panel read_panel_csv(const std::string& path);
/// Writes `subgroup,trajectory,period,value` rows in sorted order; each
/// line of `provenance` is emitted first as a '#' comment.
void write_panel_csv(const Panel& panel, const std::string& path,
                     const std::vector<std::string>& provenance = {});

enum class Objective { Unfair, SubgroupFair, InstantFair };
enum class LossMode { Absolute, Squared };

std::string to_string(Objective o);
std::optional<Objective> objective_from_string(const std::string& s);

struct FitConfig {
  Objective objective = Objective::SubgroupFair;
  double lambda1 = 1.0;    // noise penalties; 1 and 0.01 are the usual presets
  double lambda2 = 0.01;
  LossMode loss = LossMode::Absolute;
  int order = 1;
  double ball_radius = 0.0;  // <= 0 selects 10 * max|Y| over the panel
  sdp::SolverConfig solver;
};

/// The operator-valued program for one panel: decision symbols are the
/// system operators G and F, states m_t (t in {0} union T+), noises
/// omega_t, nu_t, forecasts f_t, the epigraph scalar z for the fair
/// objectives, and one absolute-loss auxiliary per observation when the
/// loss is Absolute.
struct LdsProblem {
  npa::NcProblem problem;
  int sym_G = -1, sym_F = -1, sym_z = -1;
  std::map<int, int> sym_m;                                  // period -> id
  std::map<int, int> sym_omega, sym_nu, sym_f;               // per period in T+
  std::map<std::tuple<std::string, int, int>, int> sym_u;    // (s, i, t) -> id
  double ball_radius = 0.0;
  std::vector<std::string> labels;  // id -> label
};

LdsProblem build_problem(const Panel& panel, const FitConfig& config);

struct FitResult {
  std::map<int, double> forecasts;  // period -> f_t
  double z = 0.0;
  std::map<std::string, double> estimates;  // symbol label -> degree-1 moment
  double objective_bound = 0.0;             // relaxation lower bound
  std::map<std::string, double> per_subgroup_loss;
  std::map<std::string, std::optional<double>> nrmse;
  sdp::SolveStatus status = sdp::SolveStatus::NumericalTrouble;
  int iterations = 0;
  double duality_gap = 0.0;
  bool rank_loop = false;
  int num_moment_vars = 0;
  int num_symbols = 0;
};

struct FitError : std::runtime_error {
  sdp::SolveStatus status;
  FitError(const std::string& what, sdp::SolveStatus s)
      : std::runtime_error(what), status(s) {}
};

/// build -> assemble -> solve -> degree-1 readout. Losses and nrmse are
/// recomputed from the forecasts and the panel, never from solver internals.
FitResult fit(const Panel& panel, const FitConfig& config);

/// Per-subgroup normalised root mean square error of the forecasts;
/// a subgroup whose observations all equal its weighted mean has an
/// undefined value (empty optional), not an error.
std::map<std::string, std::optional<double>> evaluate(
    const Panel& panel, const std::map<int, double>& forecasts);

std::string fit_result_json(const FitResult& result,
                            const std::vector<std::pair<std::string, std::string>>& provenance);

}  // namespace fairlds::lds
