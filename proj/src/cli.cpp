#include "connecto/cli.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "connecto/connectome.hpp"
#include "connecto/eval.hpp"
#include "connecto/kernels.hpp"
#include "connecto/pipeline.hpp"

namespace connecto::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

namespace {

struct UsageError : Error {
  using Error::Error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write '" + path.string() + "'");
  out << text;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IngestionError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::uint64_t effective_seed(std::uint64_t flag_seed) {
  if (const char* env = std::getenv("CONNECTO_SEED")) {
    std::uint64_t s = 0;
    const std::string v(env);
    const auto res = std::from_chars(v.data(), v.data() + v.size(), s);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw UsageError("CONNECTO_SEED is not an integer");
    return s;
  }
  return flag_seed;
}

pipeline::PipelineConfig resolve_config(const std::string& config_path, int team) {
  if (!config_path.empty() && team > 0) throw UsageError("give either --config or --team, not both");
  if (!config_path.empty()) return pipeline::load_config_file(config_path);
  if (team > 0) return pipeline::load_team_config(team);
  throw UsageError("a pipeline is required (--config FILE or --team N)");
}

LongitudinalDataset load_train(const std::string& t0_path, const std::string& t1_path) {
  if (t0_path.empty() || t1_path.empty()) throw UsageError("--train-t0 and --train-t1 are required");
  auto t0 = load_csv(t0_path);
  auto t1 = load_csv(t1_path, t0.n_features());
  return LongitudinalDataset(std::move(t0), std::move(t1));
}

ordered_json score_json(const eval::ScoreRecord& r) {
  return ordered_json{{"mae", r.mae}, {"mse", r.mse}, {"pcc", r.pcc}};
}

std::string matrix_csv(const std::vector<std::string>& names, const Matrix& m) {
  std::string out = "pipeline";
  for (const auto& n : names) out += "," + n;
  out += "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    out += names[static_cast<std::size_t>(i)];
    for (Index j = 0; j < m.cols(); ++j) out += "," + format_double(m(i, j));
    out += "\n";
  }
  return out;
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string out = ".";
  Index subjects = 150;
  Index test_subjects = 80;
  Index rois = kDefaultRois;
  double drift = 0.1;
  double noise = 0.02;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a) {
  const std::uint64_t seed = effective_seed(a.seed);
  SyntheticParams p;
  p.n_rois = a.rois;
  p.drift = a.drift;
  p.noise_sigma = a.noise;
  p.n_subjects = a.subjects;
  p.seed = seed;
  p.id_prefix = "TR";
  const auto train = generate_synthetic(p);
  p.n_subjects = a.test_subjects;
  p.seed = derive_seed(seed, 1);
  p.id_prefix = "TE";
  const auto test = generate_synthetic(p);
  ensure_dir(a.out);
  const fs::path dir(a.out);
  write_csv(dir / "train_t0.csv", train.t0());
  write_csv(dir / "train_t1.csv", train.targets());
  write_csv(dir / "test_t0.csv", test.t0());
  std::vector<Index> pub;
  std::vector<Index> priv;
  for (Index i = 0; i < test.n_subjects(); ++i) (i < (test.n_subjects() + 1) / 2 ? pub : priv).push_back(i);
  write_csv(dir / "test_t1_public.csv", test.targets().select_rows(pub));
  write_csv(dir / "test_t1_private.csv", test.targets().select_rows(priv));
  return 0;
}

// ---- fit / predict -------------------------------------------------------------

struct ModelArgs {
  std::string config;
  int team = 0;
  std::string train_t0;
  std::string train_t1;
};

int cmd_fit(const ModelArgs& m, const std::string& out) {
  const auto config = resolve_config(m.config, m.team);
  const auto fitted = pipeline::fit_pipeline(config, load_train(m.train_t0, m.train_t1));
  pipeline::save_fitted(fitted, out);
  return 0;
}

int cmd_predict(const ModelArgs& m, const std::string& model, const std::string& input, const std::string& out,
                bool clip01) {
  pipeline::FittedPipeline fitted;
  if (!model.empty()) {
    if (!m.config.empty() || m.team > 0) throw UsageError("give either --model or a pipeline, not both");
    fitted = pipeline::load_fitted(model);
  } else {
    auto config = resolve_config(m.config, m.team);
    config.clip01 = config.clip01 || clip01;
    fitted = pipeline::fit_pipeline(config, load_train(m.train_t0, m.train_t1));
  }
  const auto table = load_csv(input);
  if (table.n_features() != fitted.n_inputs()) {
    throw ShapeError("input has " + std::to_string(table.n_features()) + " features but the model expects " +
                     std::to_string(fitted.n_inputs()));
  }
  auto pred = fitted.predict(table);
  if (clip01 && !fitted.config().clip01) {
    pred = FeatureTable(pred.subject_ids(), pred.rows().cwiseMax(0.0).cwiseMin(1.0));
  }
  write_csv(out, pred);
  return 0;
}

// ---- export-config -------------------------------------------------------------

int cmd_export(const std::string& teams, const std::string& out) {
  std::vector<int> ids;
  if (teams == "all") {
    ids = pipeline::team_ids();
  } else {
    std::stringstream ss(teams);
    std::string item;
    while (std::getline(ss, item, ',')) ids.push_back(std::stoi(item));
  }
  if (out.empty()) {
    for (int id : ids) std::cout << pipeline::serialize_config(pipeline::load_team_config(id));
    return 0;
  }
  ensure_dir(out);
  for (int id : ids) {
    std::ostringstream name;
    name << "team_" << std::setw(2) << std::setfill('0') << id << ".ini";
    write_text(fs::path(out) / name.str(), pipeline::serialize_config(pipeline::load_team_config(id)));
  }
  return 0;
}

// ---- residual ------------------------------------------------------------------

int cmd_residual(const std::string& pred_path, const std::string& truth_path, const std::string& subject,
                 const std::string& out) {
  const auto pred = load_csv(pred_path);
  const auto truth = load_csv(truth_path, pred.n_features());
  const auto row_of = [&](const FeatureTable& t) {
    const auto& ids = t.subject_ids();
    const auto it = std::find(ids.begin(), ids.end(), subject);
    if (it == ids.end()) throw LookupError("subject '" + subject + "' not found");
    return static_cast<Index>(it - ids.begin());
  };
  const auto r = eval::residual_matrix(pred.rows().row(row_of(pred)).transpose(),
                                       truth.rows().row(row_of(truth)).transpose());
  std::string text;
  for (Index i = 0; i < r.n_rois(); ++i) {
    for (Index j = 0; j < r.n_rois(); ++j) text += (j ? "," : "") + format_double(r(i, j));
    text += "\n";
  }
  write_text(out, text);
  return 0;
}

// ---- bench ---------------------------------------------------------------------

struct BenchArgs {
  std::string train_t0, train_t1, test_t0, test_t1_public, test_t1_private;
  std::string pipelines = "all";
  std::vector<std::string> configs;
  Index folds = 5;
  std::uint64_t seed = 0;
  std::string out = "bench_out";
  std::string ttest = "subject";
};

struct PipelineRun {
  pipeline::PipelineConfig config;
  std::string error;
  std::optional<eval::ScoreRecord> pub, priv;
  eval::CvResult cv;
  Vector test_subject_mae;
  Vector test_subject_pcc;
  Index models = 0;
  Index kept_rows = 0;
  bool ok() const { return error.empty(); }
};

// Rows of `truth` located in `ids` (the prediction order).
std::vector<Index> align(const std::vector<std::string>& ids, const FeatureTable& truth, const std::string& what) {
  std::map<std::string, Index> pos;
  for (std::size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], static_cast<Index>(i));
  std::vector<Index> rows;
  for (const auto& id : truth.subject_ids()) {
    const auto it = pos.find(id);
    if (it == pos.end()) throw DataError(what + " subject '" + id + "' is not in the test t0 table");
    rows.push_back(it->second);
  }
  return rows;
}

int cmd_bench(const BenchArgs& a, const std::vector<std::string>& argv) {
  const auto started = std::chrono::steady_clock::now();
  const std::uint64_t seed = effective_seed(a.seed);
  if (a.ttest != "subject" && a.ttest != "fold") throw UsageError("--ttest must be subject or fold");
  if (a.test_t0.empty()) throw UsageError("--test-t0 is required");
  const auto train = load_train(a.train_t0, a.train_t1);
  const auto test = load_csv(a.test_t0, train.t0().n_features());
  std::optional<FeatureTable> truth_pub, truth_priv;
  if (!a.test_t1_public.empty()) truth_pub = load_csv(a.test_t1_public, train.t0().n_features());
  if (!a.test_t1_private.empty()) truth_priv = load_csv(a.test_t1_private, train.t0().n_features());
  const auto pub_rows = truth_pub ? align(test.subject_ids(), *truth_pub, "public truth") : std::vector<Index>{};
  const auto priv_rows = truth_priv ? align(test.subject_ids(), *truth_priv, "private truth") : std::vector<Index>{};

  std::vector<pipeline::PipelineConfig> configs;
  if (!a.pipelines.empty() && a.pipelines != "none") {
    if (a.pipelines == "all") {
      for (int id : pipeline::team_ids()) configs.push_back(pipeline::load_team_config(id));
    } else {
      std::stringstream ss(a.pipelines);
      std::string item;
      while (std::getline(ss, item, ',')) {
        int id = 0;
        const auto res = std::from_chars(item.data(), item.data() + item.size(), id);
        if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
          throw UsageError("--pipelines expects 'all' or comma-separated team ids");
        }
        configs.push_back(pipeline::load_team_config(id));
      }
    }
  }
  for (const auto& path : a.configs) configs.push_back(pipeline::load_config_file(path));
  if (configs.empty()) throw UsageError("no pipelines selected");

  std::vector<PipelineRun> runs(configs.size());
  kernels::parallel_for(static_cast<Index>(configs.size()), [&](Index i) {
    auto& run = runs[static_cast<std::size_t>(i)];
    run.config = configs[static_cast<std::size_t>(i)];
    auto config = run.config;
    config.seed = derive_seed(seed, config.seed);
    try {
      const auto fitted = pipeline::fit_pipeline(config, train);
      run.models = fitted.model_count();
      run.kept_rows = static_cast<Index>(fitted.kept_rows().size());
      const Matrix pred = fitted.predict(test.rows());
      std::vector<Index> scored_rows;
      Matrix scored_truth(0, pred.cols());
      if (truth_pub) {
        run.pub = eval::score(config.name, eval::SplitKind::public_test, take_rows(pred, pub_rows), truth_pub->rows());
      }
      if (truth_priv) {
        run.priv = eval::score(config.name, eval::SplitKind::private_test, take_rows(pred, priv_rows), truth_priv->rows());
      }
      if (truth_pub || truth_priv) {
        scored_rows = pub_rows;
        scored_rows.insert(scored_rows.end(), priv_rows.begin(), priv_rows.end());
        Matrix truth(static_cast<Index>(scored_rows.size()), pred.cols());
        Index r = 0;
        if (truth_pub) truth.topRows(truth_pub->n_subjects()) = truth_pub->rows();
        r = truth_pub ? truth_pub->n_subjects() : 0;
        if (truth_priv) truth.bottomRows(truth.rows() - r) = truth_priv->rows();
        const Matrix p = take_rows(pred, scored_rows);
        run.test_subject_mae = eval::per_subject_mae(p, truth);
        run.test_subject_pcc = eval::per_subject_pcc(p, truth);
      }
      run.cv = eval::cross_validate(config, train, a.folds, seed);
    } catch (const std::exception& e) {
      run.error = e.what();
    }
  });

  ordered_json results;
  results["tool"] = "connecto";
  results["version"] = kVersion;
  results["seed"] = seed;
  results["folds"] = a.folds;
  results["train_subjects"] = train.n_subjects();
  results["test_subjects"] = test.n_subjects();
  results["features"] = train.t0().n_features();
  const bool have_truth = truth_pub || truth_priv;
  const std::string population = a.ttest == "fold" ? "cv_folds" : (have_truth ? "test_subjects" : "cv_out_of_fold_subjects");
  results["ttest_population"] = population;

  ordered_json pipelines = ordered_json::array();
  std::vector<std::string> ok_names;
  std::vector<Vector> err_mae, err_pcc;
  std::vector<eval::TeamScores> team_scores;
  bool rankable = truth_pub.has_value() && truth_priv.has_value();
  int failures = 0;
  for (const auto& run : runs) {
    ordered_json j;
    j["name"] = run.config.name;
    j["config_sha256"] = sha256_hex(pipeline::serialize_config(run.config));
    if (!run.ok()) {
      ++failures;
      j["status"] = "failed";
      j["error"] = run.error;
      std::cerr << "pipeline " << run.config.name << " failed: " << run.error << "\n";
      pipelines.push_back(j);
      continue;
    }
    j["status"] = "ok";
    j["models"] = run.models;
    j["kept_training_rows"] = run.kept_rows;
    ordered_json scores;
    if (run.pub) scores["public"] = score_json(*run.pub);
    if (run.priv) scores["private"] = score_json(*run.priv);
    ordered_json folds = ordered_json::array();
    for (const auto& f : run.cv.folds) folds.push_back(score_json(f));
    scores["cv"] = {{"folds", folds},
                    {"mean", {{"mae", run.cv.mean_mae}, {"mse", run.cv.mean_mse}, {"pcc", run.cv.mean_pcc}}},
                    {"std", {{"mae", run.cv.std_mae}, {"mse", run.cv.std_mse}, {"pcc", run.cv.std_pcc}}}};
    j["scores"] = scores;
    pipelines.push_back(j);

    ok_names.push_back(run.config.name);
    if (a.ttest == "fold") {
      Vector fm(static_cast<Index>(run.cv.folds.size()));
      Vector fp(fm.size());
      for (std::size_t f = 0; f < run.cv.folds.size(); ++f) {
        fm(static_cast<Index>(f)) = run.cv.folds[f].mae;
        fp(static_cast<Index>(f)) = run.cv.folds[f].pcc;
      }
      err_mae.push_back(fm);
      err_pcc.push_back(fp);
    } else if (have_truth) {
      err_mae.push_back(run.test_subject_mae);
      err_pcc.push_back(run.test_subject_pcc);
    } else {
      err_mae.push_back(run.cv.oof_subject_mae);
      err_pcc.push_back(run.cv.oof_subject_pcc);
    }
    eval::TeamScores ts;
    ts.team = run.config.name;
    if (run.pub) {
      ts.mae_public = run.pub->mae;
      ts.pcc_public = run.pub->pcc;
    }
    if (run.priv) {
      ts.mae_private = run.priv->mae;
      ts.pcc_private = run.priv->pcc;
    }
    ts.mae_cv = run.cv.mean_mae;
    ts.pcc_cv = run.cv.mean_pcc;
    team_scores.push_back(ts);
  }
  results["pipelines"] = pipelines;

  const fs::path out(a.out);
  ensure_dir(out);
  std::string table = "rank,pipeline,mae_public,mae_public_rank,mae_private,mae_private_rank,mae_cv,mae_cv_rank,"
                      "mae_rank,pcc_public,pcc_public_rank,pcc_private,pcc_private_rank,pcc_cv,pcc_cv_rank,pcc_rank\n";
  if (rankable && !team_scores.empty()) {
    const auto rows = eval::compute_rank_table(team_scores);
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return rows[x].final_rank < rows[y].final_rank; });
    ordered_json rank_json = ordered_json::array();
    for (std::size_t i : order) {
      const auto& r = rows[i];
      const auto& s = team_scores[i];
      rank_json.push_back({{"name", r.team},
                           {"mae_local", {r.mae.local[0], r.mae.local[1], r.mae.local[2]}},
                           {"mae_rank", r.mae.measure},
                           {"pcc_local", {r.pcc.local[0], r.pcc.local[1], r.pcc.local[2]}},
                           {"pcc_rank", r.pcc.measure},
                           {"final_rank", r.final_rank}});
      std::ostringstream line;
      line << r.final_rank << "," << r.team << "," << format_double(*s.mae_public) << "," << r.mae.local[0] << ","
           << format_double(*s.mae_private) << "," << r.mae.local[1] << "," << format_double(*s.mae_cv) << ","
           << r.mae.local[2] << "," << r.mae.measure << "," << format_double(*s.pcc_public) << "," << r.pcc.local[0]
           << "," << format_double(*s.pcc_private) << "," << r.pcc.local[1] << "," << format_double(*s.pcc_cv) << ","
           << r.pcc.local[2] << "," << r.pcc.measure << "\n";
      table += line.str();
    }
    results["rank_table"] = rank_json;
  } else {
    results["rank_table"] = nullptr;
    if (!rankable) std::cerr << "note: public and private truth are both needed for a rank table\n";
  }

  Matrix p_mae = Matrix::Ones(0, 0);
  Matrix p_pcc = Matrix::Ones(0, 0);
  if (!err_mae.empty() && err_mae.front().size() >= 2) {
    p_mae = eval::paired_ttest_matrix(err_mae);
    p_pcc = eval::paired_ttest_matrix(err_pcc);
  }
  const auto to_json = [](const Matrix& m) {
    ordered_json arr = ordered_json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      ordered_json row = ordered_json::array();
      for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      arr.push_back(row);
    }
    return arr;
  };
  results["pvalues"] = {{"names", ok_names}, {"mae", to_json(p_mae)}, {"pcc", to_json(p_pcc)}};

  const std::string results_text = results.dump(2) + "\n";
  write_text(out / "results.json", results_text);
  write_text(out / "table2.csv", table);
  write_text(out / "pvalues_mae.csv", matrix_csv(ok_names, p_mae));
  write_text(out / "pvalues_pcc.csv", matrix_csv(ok_names, p_pcc));

  ordered_json manifest;
  manifest["command"] = "bench";
  manifest["argv"] = argv;
  manifest["tool_version"] = kVersion;
  manifest["seed"] = seed;
  manifest["jobs"] = kernels::thread_count();
  ordered_json inputs;
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{{"train_t0", a.train_t0},
                                                                             {"train_t1", a.train_t1},
                                                                             {"test_t0", a.test_t0},
                                                                             {"test_t1_public", a.test_t1_public},
                                                                             {"test_t1_private", a.test_t1_private}}) {
    if (!v.empty()) inputs[k] = {{"path", v}, {"sha256", sha256_file(v)}};
  }
  manifest["inputs"] = inputs;
  ordered_json cfg = ordered_json::object();
  for (const auto& run : runs) cfg[run.config.name] = sha256_hex(pipeline::serialize_config(run.config));
  manifest["config_sha256"] = cfg;
  ordered_json outputs;
  for (const char* name : {"results.json", "table2.csv", "pvalues_mae.csv", "pvalues_pcc.csv"}) {
    outputs[name] = {{"path", (out / name).string()}, {"sha256", sha256_file((out / name).string())}};
  }
  manifest["outputs"] = outputs;
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return failures > 0 ? 1 : 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"connecto: longitudinal brain-connectivity prediction benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  int jobs = 0;
  app.add_option("--jobs", jobs, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Do not print warnings");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write synthetic train/test CSVs");
  s->add_option("--out", synth.out, "Output directory");
  s->add_option("--subjects", synth.subjects, "Training subjects")->check(CLI::PositiveNumber);
  s->add_option("--test-subjects", synth.test_subjects, "Test subjects")->check(CLI::PositiveNumber);
  s->add_option("--rois", synth.rois, "Regions of interest")->check(CLI::Range(2, 100000));
  s->add_option("--drift", synth.drift, "Follow-up drift in [0,1]");
  s->add_option("--noise", synth.noise, "Follow-up noise sigma");
  s->add_option("--seed", synth.seed, "Random seed");

  ModelArgs model;
  const auto add_model = [&](CLI::App* c) {
    c->add_option("--config", model.config, "Pipeline config file");
    c->add_option("--team", model.team, "Bundled team pipeline (1-20)");
    c->add_option("--train-t0", model.train_t0, "Training baseline CSV");
    c->add_option("--train-t1", model.train_t1, "Training follow-up CSV");
  };
  std::string fit_out;
  auto* f = app.add_subcommand("fit", "Fit a pipeline and save it");
  add_model(f);
  f->add_option("--out", fit_out, "Model file")->required();

  std::string model_path, input, pred_out;
  bool clip01 = false;
  auto* p = app.add_subcommand("predict", "Predict follow-up connectivity");
  add_model(p);
  p->add_option("--model", model_path, "Fitted model file");
  p->add_option("--input", input, "Baseline CSV to predict from")->required();
  p->add_option("--out", pred_out, "Prediction CSV")->required();
  p->add_flag("--clip01", clip01, "Clip predictions to [0,1]");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Fit, score, cross-validate and rank pipelines");
  b->add_option("--train-t0", bench.train_t0)->required();
  b->add_option("--train-t1", bench.train_t1)->required();
  b->add_option("--test-t0", bench.test_t0)->required();
  b->add_option("--test-t1-public", bench.test_t1_public);
  b->add_option("--test-t1-private", bench.test_t1_private);
  b->add_option("--pipelines", bench.pipelines, "'all', 'none' or comma-separated team ids");
  b->add_option("--config", bench.configs, "Extra pipeline config files");
  b->add_option("--folds", bench.folds)->check(CLI::Range(2, 1000));
  b->add_option("--seed", bench.seed);
  b->add_option("--out", bench.out, "Output directory");
  b->add_option("--ttest", bench.ttest, "Paired t-test population: subject or fold");

  std::string export_teams = "all", export_out;
  auto* e = app.add_subcommand("export-config", "Write bundled team configs");
  e->add_option("--team", export_teams, "'all' or comma-separated ids");
  e->add_option("--out", export_out, "Directory (stdout when omitted)");

  std::string res_pred, res_truth, res_subject, res_out;
  auto* r = app.add_subcommand("residual", "Absolute-error matrix of one subject");
  r->add_option("--pred", res_pred)->required();
  r->add_option("--truth", res_truth)->required();
  r->add_option("--subject", res_subject)->required();
  r->add_option("--out", res_out)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }
  set_warnings_to_stderr(!quiet);
  if (jobs > 0) kernels::set_thread_count(jobs);
  try {
    if (*s) return cmd_synth(synth);
    if (*f) return cmd_fit(model, fit_out);
    if (*p) return cmd_predict(model, model_path, input, pred_out, clip01);
    if (*b) return cmd_bench(bench, args);
    if (*e) return cmd_export(export_teams, export_out);
    if (*r) return cmd_residual(res_pred, res_truth, res_subject, res_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 2;
}

int run(int argc, const char* const* argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace connecto::cli
