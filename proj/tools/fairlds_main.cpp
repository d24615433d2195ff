// fairlds command-line front end: data generation, fitting, metric reports,
// post-processing and experiment sweeps. Exit codes: 0 success, 2 usage or
// config error, 3 solver failure.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "fairlds/csv.hpp"
#include "fairlds/datagen.hpp"
#include "fairlds/ingest.hpp"
#include "fairlds/lds.hpp"
#include "fairlds/metrics.hpp"
#include "fairlds/postprocess.hpp"
#include "json.hpp"

namespace {

constexpr const char* kVersion = "fairlds 0.1.0";

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int worker_count(size_t cells) {
  int n = 0;
  if (const char* env = std::getenv("FAIRLDS_THREADS")) n = std::atoi(env);
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  return std::min<int>(n, std::max<size_t>(cells, 1));
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------- fit

fairlds::lds::FitConfig make_fit_config(const std::string& objective, double lambda1,
                                        double lambda2, int order, const std::string& loss,
                                        double ball, double gap_tol = 0.0,
                                        double feas_tol = 0.0) {
  fairlds::lds::FitConfig cfg;
  auto obj = fairlds::lds::objective_from_string(objective);
  if (!obj) throw CLI::ValidationError("--objective", "unknown objective " + objective);
  cfg.objective = *obj;
  cfg.lambda1 = lambda1;
  cfg.lambda2 = lambda2;
  cfg.order = order;
  if (loss == "abs")
    cfg.loss = fairlds::lds::LossMode::Absolute;
  else if (loss == "sq")
    cfg.loss = fairlds::lds::LossMode::Squared;
  else
    throw CLI::ValidationError("--loss", "expected abs or sq");
  cfg.ball_radius = ball;
  if (gap_tol > 0.0) cfg.solver.gap_tol = gap_tol;
  if (feas_tol > 0.0) cfg.solver.feas_tol = feas_tol;
  return cfg;
}

int cmd_generate(const std::string& config_path, const std::string& out_path,
                 std::int64_t seed_override) {
  fairlds::datagen::GeneratorConfig cfg;
  try {
    cfg = fairlds::datagen::GeneratorConfig::from_json(read_text(config_path));
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  fairlds::lds::Panel panel = fairlds::datagen::sample_panel(cfg);
  std::string hash = hex16(fnv1a(cfg.to_json()));
  fairlds::lds::write_panel_csv(panel, out_path,
                                {kVersion, "config " + hash, "seed " + std::to_string(cfg.seed)});
  return 0;
}

int cmd_fit(const std::string& panel_path, const std::string& objective, double lambda1,
            double lambda2, int order, const std::string& loss, double ball, double gap_tol,
            double feas_tol, const std::string& out_path) {
  fairlds::lds::Panel panel;
  fairlds::lds::FitConfig cfg;
  try {
    panel = fairlds::lds::read_panel_csv(panel_path);
    cfg = make_fit_config(objective, lambda1, lambda2, order, loss, ball, gap_tol, feas_tol);
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }
  try {
    fairlds::lds::FitResult res = fairlds::lds::fit(panel, cfg);
    std::ostringstream key;
    key << objective << "," << lambda1 << "," << lambda2 << "," << order << "," << loss << ","
        << ball;
    write_text(out_path,
               fairlds::lds::fit_result_json(
                   res, {{"tool", kVersion}, {"config_hash", hex16(fnv1a(key.str()))}}));
    return 0;
  } catch (const fairlds::lds::FitError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  }
}

// -------------------------------------------------------------------- sweep

struct SweepSpec {
  std::string kind;  // beta | seed | horizon | post
  std::vector<double> betas;
  std::vector<std::uint64_t> seeds;
  std::vector<int> horizons;
  std::vector<double> thresholds_x;
  std::vector<std::string> models;
  fairlds::datagen::GeneratorConfig generator;
  std::map<std::string, double> lambda1_per_model;
  double lambda1 = 1.0, lambda2 = 0.01;
  int order = 1;
  std::string loss = "abs";
  double lambda3 = 0.05;
  std::string features_path;  // post kind

  static SweepSpec from_json(const std::string& text);
};

SweepSpec SweepSpec::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SweepSpec s;
  s.kind = j.at("kind").get<std::string>();
  if (j.contains("betas")) s.betas = j.at("betas").get<std::vector<double>>();
  if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("horizons")) s.horizons = j.at("horizons").get<std::vector<int>>();
  if (j.contains("thresholds_x"))
    s.thresholds_x = j.at("thresholds_x").get<std::vector<double>>();
  if (j.contains("models")) s.models = j.at("models").get<std::vector<std::string>>();
  if (j.contains("generator"))
    s.generator = fairlds::datagen::GeneratorConfig::from_json(j.at("generator").dump());
  if (j.contains("lambda1")) s.lambda1 = j.at("lambda1").get<double>();
  if (j.contains("lambda2")) s.lambda2 = j.at("lambda2").get<double>();
  if (j.contains("lambda1_per_model"))
    for (auto it = j.at("lambda1_per_model").begin(); it != j.at("lambda1_per_model").end(); ++it)
      s.lambda1_per_model[it.key()] = it.value().get<double>();
  if (j.contains("order")) s.order = j.at("order").get<int>();
  if (j.contains("loss")) s.loss = j.at("loss").get<std::string>();
  if (j.contains("lambda3")) s.lambda3 = j.at("lambda3").get<double>();
  if (j.contains("features")) s.features_path = j.at("features").get<std::string>();
  return s;
}

struct SweepRow {
  std::string model;
  double param = 0.0;  // beta, horizon, or threshold x
  std::uint64_t seed = 0;
  std::string key;    // subgroup or index name
  double value = 0.0;
  bool has_value = false;
  double runtime_s = 0.0;
  int num_vars = 0;
  std::string status = "ok";

  bool operator<(const SweepRow& o) const {
    return std::tie(model, param, seed, key) < std::tie(o.model, o.param, o.seed, o.key);
  }
};

int run_sweep(const SweepSpec& spec, const std::string& out_path, bool repro,
              const std::string& spec_text) {
  struct Cell {
    std::string model;
    double param;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  const bool post = spec.kind == "post";
  if (spec.kind == "beta") {
    for (const auto& m : spec.models)
      for (double b : spec.betas)
        for (auto sd : spec.seeds) cells.push_back({m, b, sd});
  } else if (spec.kind == "seed") {
    for (const auto& m : spec.models)
      for (auto sd : spec.seeds) cells.push_back({m, spec.generator.beta_d, sd});
  } else if (spec.kind == "horizon") {
    for (const auto& m : spec.models)
      for (int h : spec.horizons)
        for (auto sd : spec.seeds) cells.push_back({m, static_cast<double>(h), sd});
  } else if (post) {
    for (const auto& m : spec.models)
      for (double x : spec.thresholds_x)
        for (auto sd : spec.seeds) cells.push_back({m, x, sd});
  } else {
    std::cerr << "config error: unknown sweep kind " << spec.kind << "\n";
    return 2;
  }
  if (cells.empty()) {
    std::cerr << "config error: empty sweep grid\n";
    return 2;
  }

  std::vector<fairlds::postprocess::FeatureRow> features;
  if (post) features = fairlds::ingest::read_features_csv(spec.features_path);

  std::vector<std::vector<SweepRow>> results(cells.size());
  std::atomic<size_t> cursor{0};
  std::atomic<int> failures{0};

  auto run_cell = [&](size_t ci) {
    const Cell& cell = cells[ci];
    std::vector<SweepRow> rows;
    auto t0 = std::chrono::steady_clock::now();
    try {
      if (!post) {
        fairlds::datagen::GeneratorConfig gen = spec.generator;
        gen.seed = cell.seed;
        if (spec.kind == "beta") gen.beta_d = cell.param;
        if (spec.kind == "horizon") gen.horizon = static_cast<int>(cell.param);
        fairlds::lds::Panel panel = fairlds::datagen::sample_panel(gen);
        double l1 = spec.lambda1;
        if (auto it = spec.lambda1_per_model.find(cell.model);
            it != spec.lambda1_per_model.end())
          l1 = it->second;
        fairlds::lds::FitConfig cfg =
            make_fit_config(cell.model, l1, spec.lambda2, spec.order, spec.loss, 0.0);
        fairlds::lds::FitResult res = fairlds::lds::fit(panel, cfg);
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (const auto& [sub, v] : res.nrmse) {
          SweepRow r{cell.model, cell.param, cell.seed, sub, 0.0, false, dt,
                     res.num_moment_vars, "ok"};
          if (v) {
            r.value = *v;
            r.has_value = true;
          }
          rows.push_back(r);
        }
      } else {
        auto [train, test] = fairlds::ingest::train_test_split(features, 0.8, cell.seed);
        std::vector<double> scores;
        if (cell.model == "compas") {
          for (const auto& r : test) scores.push_back(r.compas_score);
        } else {
          fairlds::postprocess::Kind kind = cell.model == "instant-fair"
                                                ? fairlds::postprocess::Kind::InstantFair
                                                : fairlds::postprocess::Kind::SubgroupFair;
          if (cell.model != "instant-fair" && cell.model != "subgroup-fair")
            throw std::runtime_error("unknown post model " + cell.model);
          auto model = fairlds::postprocess::fit_post(train, kind, spec.lambda3);
          scores = fairlds::postprocess::score(model, test);
        }
        double thr = fairlds::metrics::uni_race_threshold(scores, cell.param);
        fairlds::metrics::LabeledScores labeled;
        for (size_t i = 0; i < test.size(); ++i)
          labeled.push_back({test[i].subgroup, scores[i], test[i].label});
        auto preds = fairlds::metrics::predict(labeled, thr);
        auto idx = fairlds::metrics::indices(labeled, preds);
        double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        auto push = [&](const char* name, const std::optional<double>& v) {
          SweepRow r{cell.model, cell.param, cell.seed, name, 0.0, false, dt, 0, "ok"};
          if (v) {
            r.value = *v;
            r.has_value = true;
          }
          rows.push_back(r);
        };
        push("IND", idx.ind);
        push("SP", idx.sp);
        push("SF", idx.sf);
        push("INA", idx.ina);
      }
    } catch (const std::exception& e) {
      double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::string status = e.what();
      if (auto* fe = dynamic_cast<const fairlds::lds::FitError*>(&e))
        status = fairlds::sdp::to_string(fe->status);
      SweepRow r{cell.model, cell.param, cell.seed, "-", 0.0, false, dt, 0, status};
      rows.push_back(r);
      ++failures;
    }
    results[ci] = std::move(rows);
  };

  int nthreads = worker_count(cells.size());
  std::vector<std::thread> pool;
  for (int w = 0; w < nthreads; ++w)
    pool.emplace_back([&]() {
      for (;;) {
        size_t ci = cursor.fetch_add(1);
        if (ci >= cells.size()) return;
        run_cell(ci);
      }
    });
  for (auto& th : pool) th.join();

  std::vector<SweepRow> rows;
  for (auto& rs : results) rows.insert(rows.end(), rs.begin(), rs.end());
  std::sort(rows.begin(), rows.end());

  std::ostringstream out;
  out << "# " << kVersion << "\n# config " << hex16(fnv1a(spec_text)) << "\n";
  const char* param_name = post ? "x" : (spec.kind == "horizon" ? "horizon" : "beta");
  const char* key_name = post ? "index" : "subgroup";
  const char* value_name = post ? "value" : "nrmse";
  out << "model," << param_name << ",seed," << key_name << "," << value_name
      << ",runtime_s,num_vars,status\n";
  for (const auto& r : rows) {
    out << r.model << "," << fmt_double(r.param) << "," << r.seed << "," << r.key << ",";
    if (r.has_value) out << fmt_double(r.value);
    out << "," << (repro ? std::string("0") : fmt_double(r.runtime_s)) << "," << r.num_vars
        << "," << fairlds::csv::escape(r.status) << "\n";
  }
  write_text(out_path, out.str());
  return failures == static_cast<int>(cells.size()) ? 3 : 0;
}

// ------------------------------------------------------------------- compas

int cmd_compas(const std::string& csv_path, const std::string& mode,
               const std::string& out_dir, const std::string& colmap_path,
               std::int64_t split_seed) {
  fairlds::ingest::ColumnMap map = fairlds::ingest::ColumnMap::propublica();
  try {
    if (!colmap_path.empty())
      map = fairlds::ingest::ColumnMap::from_json(read_text(colmap_path));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  std::vector<fairlds::ingest::CompasRow> rows;
  try {
    rows = fairlds::ingest::load_rows(csv_path, map);
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }
  std::filesystem::create_directories(out_dir);
  std::string hash = hex16(fnv1a(csv_path + "|" + mode));
  if (mode == "cohort119") {
    auto cohort = fairlds::ingest::load_cohort_119(rows);
    auto binned = fairlds::ingest::binify(cohort.rows);
    fairlds::lds::write_panel_csv(binned.panel, out_dir + "/panel.csv",
                                  {kVersion, "config " + hash});
    std::cout << "cohort rows: " << cohort.rows.size()
              << " dropped_inconsistent_days: " << cohort.dropped_inconsistent_days
              << " dropped_negative_days: " << binned.dropped_negative_days << "\n";
  } else if (mode == "sample1005") {
    auto sample = fairlds::ingest::load_sample_1005(rows);
    auto features = fairlds::ingest::to_features(sample);
    fairlds::ingest::write_features_csv(features, out_dir + "/features.csv",
                                        {kVersion, "config " + hash});
    int caucasian = 0;
    for (const auto& r : sample) caucasian += r.race == "Caucasian";
    std::cout << "sample rows: " << sample.size() << " caucasian: " << caucasian << "\n";
    if (split_seed >= 0) {
      auto [train, test] = fairlds::ingest::train_test_split(
          features, 0.8, static_cast<std::uint64_t>(split_seed));
      fairlds::ingest::write_features_csv(train, out_dir + "/train.csv",
                                          {kVersion, "config " + hash,
                                           "seed " + std::to_string(split_seed)});
      fairlds::ingest::write_features_csv(test, out_dir + "/test.csv",
                                          {kVersion, "config " + hash,
                                           "seed " + std::to_string(split_seed)});
    }
  } else {
    std::cerr << "config error: unknown mode " << mode << "\n";
    return 2;
  }
  return 0;
}

// --------------------------------------------------------------------- post

int cmd_post(const std::string& train_path, const std::string& test_path,
             const std::string& kind_str, double lambda3, const std::string& thresholds,
             const std::string& out_path, const std::string& scores_out,
             std::uint64_t seed) {
  std::vector<fairlds::postprocess::FeatureRow> train, test;
  fairlds::postprocess::Kind kind;
  bool base_rate = false;
  double uni_x = 50.0;
  try {
    train = fairlds::ingest::read_features_csv(train_path);
    test = fairlds::ingest::read_features_csv(test_path);
    if (kind_str == "subgroup-fair")
      kind = fairlds::postprocess::Kind::SubgroupFair;
    else if (kind_str == "instant-fair")
      kind = fairlds::postprocess::Kind::InstantFair;
    else
      throw std::runtime_error("unknown kind " + kind_str);
    if (thresholds == "base-rate")
      base_rate = true;
    else if (thresholds.rfind("uni:", 0) == 0)
      uni_x = std::stod(thresholds.substr(4));
    else
      throw std::runtime_error("thresholds must be base-rate or uni:<x>");
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }
  try {
    auto model = fairlds::postprocess::fit_post(train, kind, lambda3);
    auto scores = fairlds::postprocess::score(model, test);
    fairlds::metrics::LabeledScores labeled;
    for (size_t i = 0; i < test.size(); ++i)
      labeled.push_back({test[i].subgroup, scores[i], test[i].label});

    fairlds::metrics::FairnessReport report;
    std::vector<int> preds;
    if (base_rate) {
      report.thresholds = fairlds::metrics::race_wise_thresholds(labeled);
      preds = fairlds::metrics::predict(labeled, report.thresholds);
    } else {
      double thr = fairlds::metrics::uni_race_threshold(scores, uni_x);
      for (const auto& [s, n] : model.coeffs) {
        (void)n;
        report.thresholds[s] = thr;
      }
      preds = fairlds::metrics::predict(labeled, thr);
    }
    report.original = fairlds::metrics::indices(labeled, preds);
    auto rw = fairlds::metrics::reweight_test_set(labeled, seed);
    report.reweighted = fairlds::metrics::indices(
        rw, base_rate ? fairlds::metrics::predict(rw, report.thresholds)
                      : fairlds::metrics::predict(rw, report.thresholds.begin()->second));

    std::ostringstream key;
    key << kind_str << "," << lambda3 << "," << thresholds << "," << seed;
    write_text(out_path, report.to_json({{"tool", kVersion},
                                         {"config_hash", hex16(fnv1a(key.str()))},
                                         {"seed", std::to_string(seed)}}));
    if (!scores_out.empty()) {
      std::ostringstream sc;
      sc << "# " << kVersion << "\nsubgroup,id,score,label,prediction\n";
      for (size_t i = 0; i < test.size(); ++i)
        sc << test[i].subgroup << "," << test[i].id << "," << fmt_double(scores[i]) << ","
           << test[i].label << "," << preds[i] << "\n";
      write_text(scores_out, sc.str());
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{kVersion};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "sample a biased trajectory panel");
  std::string gen_config, gen_out;
  std::int64_t gen_seed = -1;
  gen->add_option("--config", gen_config)->required();
  gen->add_option("--out", gen_out)->required();
  gen->add_option("--seed", gen_seed, "override the config seed");

  // fit
  auto* fit = app.add_subcommand("fit", "fit one fairness formulation to a panel");
  std::string fit_panel, fit_obj = "subgroup-fair", fit_loss = "abs", fit_out;
  double fit_l1 = 1.0, fit_l2 = 0.01, fit_ball = 0.0, fit_gap = 0.0, fit_feas = 0.0;
  int fit_order = 1;
  fit->add_option("--panel", fit_panel)->required();
  fit->add_option("--objective", fit_obj);
  fit->add_option("--lambda1", fit_l1);
  fit->add_option("--lambda2", fit_l2);
  fit->add_option("--order", fit_order);
  fit->add_option("--loss", fit_loss);
  fit->add_option("--ball", fit_ball);
  fit->add_option("--gap-tol", fit_gap, "override the solver gap tolerance");
  fit->add_option("--feas-tol", fit_feas, "override the solver feasibility tolerance");
  fit->add_option("--out", fit_out)->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run an experiment grid");
  std::string sweep_spec, sweep_out;
  bool sweep_repro = false;
  sweep->add_option("--spec", sweep_spec)->required();
  sweep->add_option("--out", sweep_out)->required();
  sweep->add_flag("--repro", sweep_repro, "zero the runtime column for byte-stable output");

  // compas
  auto* compas = app.add_subcommand("compas", "prepare COMPAS-style data");
  std::string compas_csv, compas_mode, compas_out, compas_colmap;
  std::int64_t compas_split = -1;
  compas->add_option("--csv", compas_csv)->required();
  compas->add_option("--mode", compas_mode)->required();
  compas->add_option("--out", compas_out)->required();
  compas->add_option("--colmap", compas_colmap);
  compas->add_option("--split-seed", compas_split, "also write an 80/20 train/test split");

  // post
  auto* post = app.add_subcommand("post", "min-max post-processing of scores");
  std::string post_train, post_test, post_kind = "subgroup-fair", post_thr = "base-rate";
  std::string post_out, post_scores;
  double post_l3 = 0.05;
  std::uint64_t post_seed = 0;
  post->add_option("--train", post_train)->required();
  post->add_option("--test", post_test)->required();
  post->add_option("--kind", post_kind);
  post->add_option("--lambda3", post_l3);
  post->add_option("--thresholds", post_thr);
  post->add_option("--out", post_out)->required();
  post->add_option("--scores-out", post_scores);
  post->add_option("--seed", post_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_config, gen_out, gen_seed);
    if (fit->parsed())
      return cmd_fit(fit_panel, fit_obj, fit_l1, fit_l2, fit_order, fit_loss, fit_ball, fit_gap,
                     fit_feas, fit_out);
    if (sweep->parsed()) {
      std::string text;
      SweepSpec spec;
      try {
        text = read_text(sweep_spec);
        spec = SweepSpec::from_json(text);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
      }
      return run_sweep(spec, sweep_out, sweep_repro, text);
    }
    if (compas->parsed())
      return cmd_compas(compas_csv, compas_mode, compas_out, compas_colmap, compas_split);
    if (post->parsed())
      return cmd_post(post_train, post_test, post_kind, post_l3, post_thr, post_out,
                      post_scores, post_seed);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
