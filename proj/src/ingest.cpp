#include "fairlds/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include "fairlds/csv.hpp"
#include "fairlds/rng.hpp"
#include "json.hpp"

namespace fairlds::ingest {

namespace {

std::optional<int> to_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string strip_parens(std::string s) {
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

std::optional<std::int64_t> parse_date_serial(const std::string& iso) {
  if (iso.size() < 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  auto y = to_int(iso.substr(0, 4)), m = to_int(iso.substr(5, 2)), d = to_int(iso.substr(8, 2));
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1 || *d > 31) return std::nullopt;
  // days-from-civil (Howard Hinnant's algorithm)
  int yy = *y - (*m <= 2);
  std::int64_t era = (yy >= 0 ? yy : yy - 399) / 400;
  unsigned yoe = static_cast<unsigned>(yy - era * 400);
  unsigned doy = (153u * static_cast<unsigned>(*m + (*m > 2 ? -3 : 9)) + 2) / 5 +
                 static_cast<unsigned>(*d) - 1;
  unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

ColumnMap ColumnMap::propublica() {
  ColumnMap m;
  m.names = {
      {"race", "race"},
      {"sex", "sex"},
      {"age", "age"},
      {"charge_degree", "c_charge_degree"},
      {"recharge_degree", "r_charge_degree"},
      {"decile_score", "decile_score"},
      {"two_year_recid", "two_year_recid"},
      {"priors_count", "priors_count"},
      {"juv_fel_count", "juv_fel_count"},
      {"juv_misd_count", "juv_misd_count"},
      {"days_before_reoffending", "days_before_reoffending"},
      {"offense_date", "c_offense_date"},
      {"reoffense_date", "r_offense_date"},
  };
  return m;
}

ColumnMap ColumnMap::from_json(const std::string& text) {
  ColumnMap m = propublica();
  nlohmann::json j = nlohmann::json::parse(text);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!m.names.count(it.key()))
      throw std::invalid_argument("column map: unknown field " + it.key());
    m.names[it.key()] = it.value().get<std::string>();
  }
  return m;
}

const std::string& ColumnMap::at(const std::string& key) const { return names.at(key); }

std::vector<CompasRow> load_rows(const std::string& path, const ColumnMap& map,
                                 LoadStats* stats) {
  csv::Table t = csv::read_file(path);
  auto col = [&](const std::string& key, bool required) {
    int c = t.column(map.at(key));
    if (c < 0 && required)
      throw std::runtime_error("compas csv: missing required column " + map.at(key));
    return c;
  };
  int c_race = col("race", true), c_sex = col("sex", true), c_age = col("age", true);
  int c_cd = col("charge_degree", true), c_rd = col("recharge_degree", true);
  int c_score = col("decile_score", true), c_recid = col("two_year_recid", true);
  int c_priors = col("priors_count", true), c_jf = col("juv_fel_count", true),
      c_jm = col("juv_misd_count", true);
  int c_days = col("days_before_reoffending", false);
  int c_od = col("offense_date", false), c_rod = col("reoffense_date", false);

  LoadStats local;
  std::vector<CompasRow> rows;
  for (const auto& r : t.rows) {
    ++local.rows_read;
    auto field = [&](int c) -> std::string {
      return (c >= 0 && c < static_cast<int>(r.size())) ? r[c] : std::string();
    };
    CompasRow row;
    row.race = field(c_race);
    row.sex = field(c_sex);
    row.charge_degree = field(c_cd);
    row.recharge_degree = strip_parens(field(c_rd));
    auto age = to_int(field(c_age));
    auto score = to_int(field(c_score));
    auto recid = to_int(field(c_recid));
    auto priors = to_int(field(c_priors));
    auto jf = to_int(field(c_jf));
    auto jm = to_int(field(c_jm));
    if (!age || !score || !recid || !priors || !jf || !jm) {
      ++local.dropped_bad_field;
      continue;
    }
    row.age = *age;
    row.decile_score = *score;
    row.two_year_recid = *recid;
    row.priors_count = *priors;
    row.juv_fel_count = *jf;
    row.juv_misd_count = *jm;
    if (c_days >= 0) {
      row.days_before_reoffending = to_int(field(c_days));
    }
    if (!row.days_before_reoffending && c_od >= 0 && c_rod >= 0) {
      auto d0 = parse_date_serial(field(c_od));
      auto d1 = parse_date_serial(field(c_rod));
      if (d0 && d1) row.days_before_reoffending = static_cast<int>(*d1 - *d0);
    }
    rows.push_back(std::move(row));
  }
  if (stats) *stats = local;
  return rows;
}

Cohort load_cohort_119(const std::vector<CompasRow>& rows) {
  Cohort out;
  for (const auto& r : rows) {
    if (r.race != "African-American" && r.race != "Caucasian") continue;
    if (r.sex != "Male") continue;
    if (r.age < 25 || r.age > 45) continue;
    if (r.priors_count >= 2) continue;
    if (r.charge_degree != "M") continue;
    if (r.recharge_degree != "M1" && r.recharge_degree != "M2") continue;
    if (r.two_year_recid != 1) continue;
    if (!r.days_before_reoffending) {
      ++out.dropped_inconsistent_days;
      continue;
    }
    out.rows.push_back(r);
  }
  return out;
}

std::vector<CompasRow> load_sample_1005(const std::vector<CompasRow>& rows) {
  std::vector<CompasRow> out;
  size_t limit = std::min<size_t>(rows.size(), 1200);
  for (size_t i = 0; i < limit; ++i) {
    const auto& r = rows[i];
    if (r.race == "African-American" || r.race == "Caucasian") out.push_back(r);
  }
  return out;
}

BinifyResult binify(const std::vector<CompasRow>& rows, int period_days) {
  if (period_days < 1) throw std::invalid_argument("binify: period_days must be >= 1");
  BinifyResult out;
  // (subgroup, trajectory, period) -> (sum, count)
  std::map<std::tuple<std::string, int, int>, std::pair<double, int>> bins;
  for (const auto& r : rows) {
    if (!r.days_before_reoffending)
      throw std::invalid_argument("binify: row without reoffense day");
    int d = *r.days_before_reoffending;
    if (d < 0) {
      ++out.dropped_negative_days;
      continue;
    }
    int period = d == 0 ? 1 : (d + period_days - 1) / period_days;
    int traj = r.recharge_degree == "M1" ? 1 : 2;
    auto& [sum, count] = bins[{r.race, traj, period}];
    sum += r.decile_score;
    ++count;
    ++out.rows_binned;
  }
  for (const auto& [key, sc] : bins)
    out.panel.add(std::get<0>(key), std::get<1>(key), std::get<2>(key),
                  sc.first / sc.second);
  return out;
}

std::vector<postprocess::FeatureRow> to_features(const std::vector<CompasRow>& rows) {
  std::vector<postprocess::FeatureRow> out;
  out.reserve(rows.size());
  int id = 0;
  for (const auto& r : rows) {
    postprocess::FeatureRow f;
    f.subgroup = r.race;
    f.id = id++;
    f.compas_score = r.decile_score;
    f.prior_incidents = r.priors_count + r.juv_fel_count + r.juv_misd_count;
    f.age_under_25 = r.age < 25 ? 1 : 0;
    f.label = r.two_year_recid;
    out.push_back(std::move(f));
  }
  return out;
}

std::pair<std::vector<postprocess::FeatureRow>, std::vector<postprocess::FeatureRow>>
train_test_split(const std::vector<postprocess::FeatureRow>& rows, double frac,
                 std::uint64_t seed) {
  if (frac < 0.0 || frac > 1.0) throw std::invalid_argument("split: frac must be in [0,1]");
  std::vector<size_t> order(rows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 eng(rng::mix(seed ^ 0x73706c6974ULL));
  for (size_t i = 0; i + 1 < order.size(); ++i) {
    size_t j = i + rng::below(eng, order.size() - i);
    std::swap(order[i], order[j]);
  }
  size_t ntrain = static_cast<size_t>(frac * static_cast<double>(rows.size()));
  std::pair<std::vector<postprocess::FeatureRow>, std::vector<postprocess::FeatureRow>> out;
  for (size_t i = 0; i < order.size(); ++i)
    (i < ntrain ? out.first : out.second).push_back(rows[order[i]]);
  return out;
}

void write_features_csv(const std::vector<postprocess::FeatureRow>& rows,
                        const std::string& path,
                        const std::vector<std::string>& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& line : provenance) out << "# " << line << "\n";
  out << "subgroup,id,compas_score,prior_incidents,age_under_25,label\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r.compas_score, r.prior_incidents);
    out << csv::escape(r.subgroup) << "," << r.id << "," << buf << "," << r.age_under_25
        << "," << r.label << "\n";
  }
}

std::vector<postprocess::FeatureRow> read_features_csv(const std::string& path) {
  csv::Table t = csv::read_file(path);
  int cs = t.column("subgroup"), ci = t.column("id"), cc = t.column("compas_score"),
      cp = t.column("prior_incidents"), ca = t.column("age_under_25"), cl = t.column("label");
  if (cs < 0 || ci < 0 || cc < 0 || cp < 0 || ca < 0 || cl < 0)
    throw std::runtime_error("features csv: missing columns");
  std::vector<postprocess::FeatureRow> rows;
  for (const auto& r : t.rows) {
    postprocess::FeatureRow f;
    f.subgroup = r[cs];
    f.id = std::stoi(r[ci]);
    f.compas_score = std::stod(r[cc]);
    f.prior_incidents = std::stod(r[cp]);
    f.age_under_25 = std::stoi(r[ca]);
    f.label = std::stoi(r[cl]);
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace fairlds::ingest
