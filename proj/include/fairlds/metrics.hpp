#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairlds::metrics {

struct ScoreRow {
  std::string subgroup;
  double score = 0.0;
  int label = 0;  // binary ground truth
};

using LabeledScores = std::vector<ScoreRow>;

/// x-th percentile with linear interpolation between closest ranks;
/// predictions downstream use the strict rule f = 1 iff score > threshold.
double uni_race_threshold(std::vector<double> scores, double percentile);

/// Per-subgroup threshold matched to the subgroup's base rate (fraction of
/// label-1 rows): the largest threshold for which the fraction of the
/// subgroup scored strictly above it is still >= the base rate. A base
/// rate of 1 yields a threshold below every score; a base rate of 0 lands
/// at the maximum score (nobody flagged under the strict rule).
std::map<std::string, double> race_wise_thresholds(const LabeledScores& data);

std::vector<int> predict(const LabeledScores& data,
                         const std::map<std::string, double>& thresholds);
std::vector<int> predict(const LabeledScores& data, double threshold);

struct Confusion {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::int64_t total() const { return tp + fp + fn + tn; }
};

/// Two-subgroup fairness indices from race-wise confusion probabilities:
///   IND = |P(f=1|s0) - P(f=1|s1)|
///   SP  = |P(f=0|Y=1,s0) - P(f=0|Y=1,s1)| + |P(f=1|Y=0,s0) - P(f=1|Y=0,s1)|
///   SF  = |P(Y=1|f=1,s0) - P(Y=1|f=1,s1)| + |P(f=0|Y=0,s0) - P(f=0|Y=0,s1)|
///   INA = P(Y != f) pooled.
/// Components with an empty conditioning cell are undefined and leave the
/// affected index absent rather than zero.
struct IndexSet {
  std::optional<double> ind, sp, sf, ina;
  std::map<std::string, Confusion> cells;
};

IndexSet indices(const LabeledScores& data, const std::vector<int>& predictions);

/// Uniformly removes rows of the larger subgroup until both are the same
/// size; deterministic in the seed.
LabeledScores reweight_test_set(const LabeledScores& data, std::uint64_t seed);

struct FairnessReport {
  IndexSet original;
  IndexSet reweighted;
  std::map<std::string, double> thresholds;
  std::string to_json(
      const std::vector<std::pair<std::string, std::string>>& provenance = {}) const;
};

}  // namespace fairlds::metrics
