#include <doctest.h>

#include <filesystem>

#include "connecto/pipeline.hpp"
#include "oracles.hpp"

using namespace connecto;
using namespace connecto::pipeline;

namespace {

LongitudinalDataset small_data(Index n, std::uint64_t seed, Index rois = 8) {
  return generate_synthetic({.n_subjects = n, .n_rois = rois, .seed = seed});
}

PipelineConfig simple(const std::string& learner_type, Params params = {}) {
  PipelineConfig c;
  c.learner.type = learner_type;
  c.learner.params = std::move(params);
  return c;
}

}  // namespace

TEST_CASE("every team config validates and round-trips through text") {
  CHECK(team_ids().size() == 20);
  for (int t : team_ids()) {
    const auto c = load_team_config(t);
    CHECK_NOTHROW(validate(c));
    const auto back = parse_config(serialize_config(c));
    CHECK(back == c);
    CHECK(serialize_config(back) == serialize_config(c));
  }
  CHECK_THROWS_AS(load_team_config(0), LookupError);
  CHECK_THROWS_AS(load_team_config(21), LookupError);
}

TEST_CASE("exported team configs on disk match the registry") {
  const std::filesystem::path dir = CONNECTO_SOURCE_DIR "/configs";
  for (int t : team_ids()) {
    const auto name = std::string("team_") + (t < 10 ? "0" : "") + std::to_string(t) + ".ini";
    REQUIRE(std::filesystem::exists(dir / name));
    CHECK(load_config_file(dir / name) == load_team_config(t));
  }
}

TEST_CASE("team structure") {
  const auto t2 = load_team_config(2);
  CHECK(t2.preprocess.empty());
  CHECK(t2.dimred.empty());
  CHECK(t2.ffl);
  CHECK(t2.learner.type == "huber");
  const auto t7 = load_team_config(7);
  const auto t19 = load_team_config(19);
  REQUIRE(t7.preprocess.size() == t19.preprocess.size());
  REQUIRE(t7.dimred.size() == t19.dimred.size());
  for (std::size_t i = 0; i < t7.preprocess.size(); ++i) CHECK(t7.preprocess[i].name == t19.preprocess[i].name);
  for (std::size_t i = 0; i < t7.dimred.size(); ++i) CHECK(t7.dimred[i].name == t19.dimred[i].name);
  CHECK(t7.learner.type == t19.learner.type);
  CHECK_FALSE(t7.learner.params == t19.learner.params);
  CHECK(t7.sigmoid_back == t19.sigmoid_back);
  CHECK(t7.ffl == t19.ffl);
  for (int t : {1, 2, 3, 11, 12, 18}) CHECK(load_team_config(t).ffl);
  for (int t : {4, 5, 6, 7, 8, 9, 10, 13, 14, 15, 16, 17, 19, 20}) CHECK_FALSE(load_team_config(t).ffl);
}

TEST_CASE("config parsing errors") {
  CHECK_THROWS_AS(parse_config("[pipeline]\nname = x\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("[learner]\ntype = ols\n[nonsense]\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("[learner\ntype = ols\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("[learner]\ntype ols\n"), ParameterError);
  CHECK_THROWS_AS(parse_config("[pipeline]\nbogus = 1\n[learner]\ntype = ols\n"), ParameterError);
  CHECK_THROWS_AS(validate(parse_config("[learner]\ntype = ols\nlambda = 1\n")), ParameterError);
  CHECK_THROWS_AS(validate(parse_config("[learner]\ntype = quantum\n")), ParameterError);
  CHECK_THROWS_AS(validate(parse_config("[preprocess.teleport]\n[learner]\ntype = ols\n")), ParameterError);
  CHECK_THROWS_AS(validate(parse_config("[learner]\ntype = ridge\nlambda = -1\n")), ParameterError);
  const auto c = parse_config("# note\n[pipeline]\n  name =  demo \nseed = 7\n[preprocess.iqr]\nmultiplier = 2\n[learner]\ntype = ridge\nlambda = 0.5\n");
  CHECK(c.name == "demo");
  CHECK(c.seed == 7);
  REQUIRE(c.preprocess.size() == 1);
  CHECK(c.preprocess[0].params.get_double("multiplier", 0) == 2.0);
  CHECK(c.learner.params.get_double("lambda", 0) == 0.5);
}

TEST_CASE("per-target models over all inputs equal the joint least-squares fit") {
  const auto ds = small_data(40, 1, 6);
  auto c = simple("ols");
  c.ffl = true;
  c.ffl_inputs = FflInputs::all;
  const auto ffl = fit_pipeline(c, ds);
  CHECK(ffl.model_count() == 15);
  const auto joint = fit_pipeline(simple("ols"), ds);
  CHECK(joint.model_count() == 1);
  const auto test = small_data(10, 2, 6);
  CHECK((ffl.predict(test.t0().rows()) - joint.predict(test.t0().rows())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("matched per-target models regress each edge on itself") {
  const auto ds = small_data(30, 3, 6);
  auto c = simple("ols");
  c.ffl = true;
  c.ffl_inputs = FflInputs::matched;
  const auto fp = fit_pipeline(c, ds);
  const auto test = small_data(5, 4, 6);
  const Matrix pred = fp.predict(test.t0().rows());
  for (Index j = 0; j < 15; ++j) {
    const auto o = oracle::normal_equations(Matrix(ds.t0().rows().col(j)), ds.targets().rows().col(j), 0.0);
    const Vector expected = (test.t0().rows().col(j) * o.w(0)).array() + o.b;
    CHECK((pred.col(j) - expected).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("pipeline prediction invariants") {
  const auto ds = small_data(50, 5);
  const auto test = small_data(12, 6);
  for (int t : {1, 2, 4, 7, 11, 13, 14, 17, 20}) {
    auto c = load_team_config(t);
    const auto fp = fit_pipeline(c, ds);
    const Matrix pred = fp.predict(test.t0().rows());
    CHECK(pred.rows() == 12);
    CHECK(pred.cols() == 28);
    CHECK(pred.allFinite());
    CHECK(fp.kept_rows().size() <= 50);
    CHECK(fp.predict(test.t0().rows()) == pred);
    const auto again = fit_pipeline(c, ds);
    CHECK(again.predict(test.t0().rows()) == pred);
    for (Index r = 0; r < 12; ++r) {
      CHECK((fp.predict(Matrix(test.t0().rows().row(r))) - pred.row(r)).cwiseAbs().maxCoeff() < 1e-12);
    }
    if (c.sigmoid_back) CHECK(((pred.array() > 0.0) && (pred.array() < 1.0)).all());
    c.clip01 = true;
    const Matrix clipped = fit_pipeline(c, ds).predict(test.t0().rows());
    CHECK(((clipped.array() >= 0.0) && (clipped.array() <= 1.0)).all());
  }
  const auto fp = fit_pipeline(simple("ridge", {{"lambda", "1"}}), ds);
  CHECK_THROWS_AS(fp.predict(Matrix::Zero(2, 27)), ShapeError);
  const auto table = fp.predict(test.t0());
  CHECK(table.subject_ids() == test.t0().subject_ids());
}

TEST_CASE("stage failures name the stage") {
  const auto tiny = small_data(3, 7);
  auto c = simple("ols");
  c.preprocess.push_back({"iqr", {}});
  try {
    fit_pipeline(c, tiny);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage_name == "preprocess.iqr");
  }
  auto bad = simple("svr", {{"c", "1"}});
  CHECK_NOTHROW(fit_pipeline(bad, small_data(10, 8)));
  CHECK_THROWS_AS(fit_pipeline(simple("ols"), LongitudinalDataset(small_data(5, 9).t0())), DataError);
}

TEST_CASE("oversized dimensionality parameters are clamped with a warning") {
  const auto ds = small_data(20, 10);
  auto c = simple("ridge", {{"lambda", "1"}});
  c.dimred.push_back({"pca", {{"k", "500"}}});
  WarningCapture cap;
  const auto fp = fit_pipeline(c, ds);
  CHECK(cap.contains("exceeds the available"));
  CHECK(fp.predict(ds.t0().rows()).allFinite());
}

TEST_CASE("fitted pipelines survive a save and load round trip") {
  const auto ds = small_data(40, 11);
  const auto test = small_data(8, 12);
  for (int t : team_ids()) {
    const auto c = load_team_config(t);
    const auto fp = fit_pipeline(c, ds);
    const std::string bytes = save_fitted_to_string(fp);
    const auto back = load_fitted_from_string(bytes);
    CHECK(back.config() == c);
    CHECK(back.predict(test.t0().rows()) == fp.predict(test.t0().rows()));
    CHECK(save_fitted_to_string(back) == bytes);
  }
  const auto fp = fit_pipeline(simple("ols"), ds);
  std::string bytes = save_fitted_to_string(fp);
  bytes[0] = 'X';
  CHECK_THROWS_AS(load_fitted_from_string(bytes), IngestionError);
  CHECK_THROWS_AS(load_fitted_from_string(save_fitted_to_string(fp).substr(0, 20)), IngestionError);
  const auto path = std::filesystem::temp_directory_path() / "connecto_model.bin";
  save_fitted(fp, path);
  CHECK(load_fitted(path).predict(test.t0().rows()) == fp.predict(test.t0().rows()));
  std::filesystem::remove(path);
}
