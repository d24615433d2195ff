#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fairlds/lds.hpp"
#include "fairlds/postprocess.hpp"

namespace fairlds::ingest {

struct CompasRow {
  std::string race;
  std::string sex;
  int age = 0;
  std::string charge_degree;    // F or M
  std::string recharge_degree;  // M1, M2, F1, ... (parentheses stripped)
  int decile_score = 0;
  int two_year_recid = 0;
  int priors_count = 0;
  int juv_fel_count = 0;
  int juv_misd_count = 0;
  std::optional<int> days_before_reoffending;
};

/// Maps our canonical field names onto CSV column names. Defaults follow
/// the ProPublica two-years file; individual entries can be overridden to
/// absorb CSV-variant drift. days_before_reoffending may be provided as a
/// direct column or derived from the offense/reoffense date columns.
struct ColumnMap {
  std::map<std::string, std::string> names;
  static ColumnMap propublica();
  static ColumnMap from_json(const std::string& text);  // overrides on top of defaults
  const std::string& at(const std::string& key) const;
};

struct LoadStats {
  int rows_read = 0;
  int dropped_bad_field = 0;  // unparseable numeric/date cells
};

std::vector<CompasRow> load_rows(const std::string& path, const ColumnMap& map,
                                 LoadStats* stats = nullptr);

/// Recidivist cohort: African-American or Caucasian males aged 25-45 with
/// fewer than two priors, charge degree M, recharge degree M1 or M2, and a
/// two-year recidivism label of 1. Rows whose label is 1 but that lack a
/// reoffense day (or vice versa) are dropped and counted.
struct Cohort {
  std::vector<CompasRow> rows;
  int dropped_inconsistent_days = 0;
};

Cohort load_cohort_119(const std::vector<CompasRow>& rows);

/// Classification sample: the first 1200 file rows restricted to
/// African-American or Caucasian defendants.
std::vector<CompasRow> load_sample_1005(const std::vector<CompasRow>& rows);

/// 20-day binning of a recidivist cohort into a Panel: subgroup = race,
/// one trajectory per recharge degree (M1 -> 1, M2 -> 2), observation =
/// mean decile score over the period. Day d lands in period
/// ceil(d / period_days); day-0 reoffenses land in period 1; negative days
/// are dropped and counted.
struct BinifyResult {
  lds::Panel panel;
  int dropped_negative_days = 0;
  int rows_binned = 0;
};

BinifyResult binify(const std::vector<CompasRow>& rows, int period_days = 20);

std::vector<postprocess::FeatureRow> to_features(const std::vector<CompasRow>& rows);

/// Deterministic shuffle split; train size is floor(frac * n).
std::pair<std::vector<postprocess::FeatureRow>, std::vector<postprocess::FeatureRow>>
train_test_split(const std::vector<postprocess::FeatureRow>& rows, double frac,
                 std::uint64_t seed);

void write_features_csv(const std::vector<postprocess::FeatureRow>& rows,
                        const std::string& path,
                        const std::vector<std::string>& provenance = {});
std::vector<postprocess::FeatureRow> read_features_csv(const std::string& path);

/// Days since the civil epoch for an ISO yyyy-mm-dd date.
std::optional<std::int64_t> parse_date_serial(const std::string& iso);

}  // namespace fairlds::ingest
