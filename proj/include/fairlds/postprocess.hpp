#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "fairlds/sdp.hpp"

namespace fairlds::postprocess {

/// One defendant's explanatory features. The recidivism label is both the
/// ground truth and the fourth regression feature, so scoring requires
/// labeled rows.
struct FeatureRow {
  std::string subgroup;
  int id = 0;
  double compas_score = 0.0;
  double prior_incidents = 0.0;
  int age_under_25 = 0;
  int label = 0;

  std::array<double, 4> features() const {
    return {compas_score, prior_incidents, static_cast<double>(age_under_25),
            static_cast<double>(label)};
  }
};

enum class Kind { SubgroupFair, InstantFair };

std::string to_string(Kind k);

/// Race-wise affine score model g = A^(s) . x + e^(s).
struct PostModel {
  Kind kind = Kind::SubgroupFair;
  double lambda3 = 0.05;
  std::map<std::string, std::array<double, 4>> coeffs;
  std::map<std::string, double> intercept;
  double objective = 0.0;  // optimum of the epigraph program
};

/// Exact convex fit of the race-wise models:
///   SubgroupFair minimizes max_s mean_i |Y - g| + lambda3 sum_s e_s^2,
///   InstantFair  minimizes max_{i,s} |Y - g|   + lambda3 sum_s e_s^2.
/// Solved as an epigraph program on the embedded SDP solver (1x1 slack
/// blocks for the absolute values, a 2x2 block per subgroup for the
/// quadratic intercept penalty).
PostModel fit_post(const std::vector<FeatureRow>& train, Kind kind, double lambda3,
                   const sdp::SolverConfig& solver = {});

/// Independent re-evaluation of the objective at a model.
double evaluate_objective(const PostModel& model, const std::vector<FeatureRow>& rows);

std::vector<double> score(const PostModel& model, const std::vector<FeatureRow>& rows);

/// Strict rule shared with metrics: prediction 1 iff score > threshold.
std::vector<int> classify(const std::vector<double>& scores,
                          const std::vector<FeatureRow>& rows,
                          const std::map<std::string, double>& thresholds);
std::vector<int> classify(const std::vector<double>& scores, double threshold);

}  // namespace fairlds::postprocess
