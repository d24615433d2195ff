#include "fairlds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "fairlds/rng.hpp"
#include "json.hpp"

namespace fairlds::metrics {

double uni_race_threshold(std::vector<double> scores, double percentile) {
  if (scores.empty()) throw std::invalid_argument("threshold: empty score list");
  if (percentile < 0.0 || percentile > 100.0)
    throw std::invalid_argument("threshold: percentile must be in [0,100]");
  std::sort(scores.begin(), scores.end());
  double rank = percentile / 100.0 * static_cast<double>(scores.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(rank));
  size_t hi = static_cast<size_t>(std::ceil(rank));
  double frac = rank - static_cast<double>(lo);
  return scores[lo] * (1.0 - frac) + scores[hi] * frac;
}

std::map<std::string, double> race_wise_thresholds(const LabeledScores& data) {
  std::map<std::string, std::vector<double>> scores;
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> labels;  // (positives, total)
  for (const auto& r : data) {
    scores[r.subgroup].push_back(r.score);
    auto& [pos, tot] = labels[r.subgroup];
    pos += r.label != 0;
    ++tot;
  }
  std::map<std::string, double> out;
  for (auto& [s, v] : scores) {
    auto [pos, tot] = labels.at(s);
    double base_rate = static_cast<double>(pos) / static_cast<double>(tot);
    std::sort(v.begin(), v.end());
    auto frac_above = [&](double thr) {
      auto it = std::upper_bound(v.begin(), v.end(), thr);
      return static_cast<double>(v.end() - it) / static_cast<double>(v.size());
    };
    // candidates are the distinct scores, scanned from the top; if even the
    // lowest score flags too few (base rate 1), go below everything
    double chosen = v.front() - 1.0;
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
      if (it != v.rbegin() && *it == *(it - 1)) continue;
      if (frac_above(*it) >= base_rate) {
        chosen = *it;
        break;
      }
    }
    out[s] = chosen;
  }
  return out;
}

std::vector<int> predict(const LabeledScores& data,
                         const std::map<std::string, double>& thresholds) {
  std::vector<int> f;
  f.reserve(data.size());
  for (const auto& r : data) {
    auto it = thresholds.find(r.subgroup);
    if (it == thresholds.end())
      throw std::invalid_argument("predict: no threshold for subgroup " + r.subgroup);
    f.push_back(r.score > it->second ? 1 : 0);
  }
  return f;
}

std::vector<int> predict(const LabeledScores& data, double threshold) {
  std::vector<int> f;
  f.reserve(data.size());
  for (const auto& r : data) f.push_back(r.score > threshold ? 1 : 0);
  return f;
}

IndexSet indices(const LabeledScores& data, const std::vector<int>& predictions) {
  if (data.size() != predictions.size())
    throw std::invalid_argument("indices: predictions misaligned with rows");
  IndexSet out;
  for (size_t i = 0; i < data.size(); ++i) {
    Confusion& c = out.cells[data[i].subgroup];
    bool y = data[i].label != 0, f = predictions[i] != 0;
    if (y && f) ++c.tp;
    else if (!y && f) ++c.fp;
    else if (y && !f) ++c.fn;
    else ++c.tn;
  }
  if (out.cells.size() != 2)
    throw std::invalid_argument("indices: expected exactly two subgroups, got " +
                                std::to_string(out.cells.size()));
  const Confusion& a = out.cells.begin()->second;
  const Confusion& b = std::next(out.cells.begin())->second;

  auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  auto absdiff = [](std::optional<double> x, std::optional<double> y) -> std::optional<double> {
    if (!x || !y) return std::nullopt;
    return std::fabs(*x - *y);
  };
  auto sum = [](std::optional<double> x, std::optional<double> y) -> std::optional<double> {
    if (!x || !y) return std::nullopt;
    return *x + *y;
  };

  out.ind = absdiff(ratio(a.tp + a.fp, a.total()), ratio(b.tp + b.fp, b.total()));
  out.sp = sum(absdiff(ratio(a.fn, a.tp + a.fn), ratio(b.fn, b.tp + b.fn)),
               absdiff(ratio(a.fp, a.fp + a.tn), ratio(b.fp, b.fp + b.tn)));
  out.sf = sum(absdiff(ratio(a.tp, a.tp + a.fp), ratio(b.tp, b.tp + b.fp)),
               absdiff(ratio(a.tn, a.fp + a.tn), ratio(b.tn, b.fp + b.tn)));
  out.ina = ratio(a.fp + a.fn + b.fp + b.fn, a.total() + b.total());
  return out;
}

LabeledScores reweight_test_set(const LabeledScores& data, std::uint64_t seed) {
  std::map<std::string, std::vector<size_t>> members;
  for (size_t i = 0; i < data.size(); ++i) members[data[i].subgroup].push_back(i);
  if (members.size() != 2)
    throw std::invalid_argument("reweight: expected exactly two subgroups");
  auto it0 = members.begin();
  auto it1 = std::next(it0);
  const std::string larger_name =
      it0->second.size() >= it1->second.size() ? it0->first : it1->first;
  const auto& larger = members.at(larger_name);
  size_t target = std::min(it0->second.size(), it1->second.size());

  // partial Fisher-Yates over the larger subgroup, then keep the prefix
  std::mt19937_64 eng(rng::mix(seed ^ 0x7265776569676874ULL));
  std::vector<size_t> pool = larger;
  for (size_t i = 0; i + 1 < pool.size() && i < target; ++i) {
    size_t j = i + rng::below(eng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(target);
  std::set<size_t> kept(pool.begin(), pool.end());

  LabeledScores out;
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].subgroup != larger_name || kept.count(i)) out.push_back(data[i]);
  }
  return out;
}

namespace {
nlohmann::ordered_json index_json(const IndexSet& s) {
  nlohmann::ordered_json j;
  auto put = [&](const char* k, const std::optional<double>& v) {
    if (v)
      j[k] = *v;
    else
      j[k] = nullptr;
  };
  put("IND", s.ind);
  put("SP", s.sp);
  put("SF", s.sf);
  put("INA", s.ina);
  nlohmann::ordered_json cells;
  for (const auto& [sub, c] : s.cells)
    cells[sub] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
  j["confusion"] = cells;
  return j;
}
}  // namespace

std::string FairnessReport::to_json(
    const std::vector<std::pair<std::string, std::string>>& provenance) const {
  nlohmann::ordered_json j;
  if (!provenance.empty()) {
    nlohmann::ordered_json p;
    for (const auto& [k, v] : provenance) p[k] = v;
    j["provenance"] = p;
  }
  j["original"] = index_json(original);
  j["reweighted"] = index_json(reweighted);
  nlohmann::ordered_json th;
  for (const auto& [s, v] : thresholds) th[s] = v;
  j["thresholds"] = th;
  return j.dump(2) + "\n";
}

}  // namespace fairlds::metrics
