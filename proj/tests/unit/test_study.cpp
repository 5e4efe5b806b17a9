#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "carleman/study.hpp"

using namespace carleman;

namespace {

StudyConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::vector<std::string> validation_fields(const std::string& text) {
  try {
    parse(text);
  } catch (const validation_error& e) {
    return e.fields();
  }
  return {};
}

bool mentions(const std::vector<std::string>& fields, const std::string& key) {
  return std::any_of(fields.begin(), fields.end(), [&](const auto& f) { return f.starts_with(key); });
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("carleman_study_" + name);
  std::filesystem::remove_all(d);
  return d;
}

} // namespace

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse("[study]\nmanifold=circle\nj_max=50\nseed=42\n[parameters]\ntau_values=8, 9\n[grid]\nh=0.005\n");
  EXPECT_EQ(c.manifold, "circle");
  EXPECT_EQ(c.j_max, 50);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.tau_values, (std::vector<double>{8.0, 9.0}));
  EXPECT_EQ(c.h, 0.005);
  EXPECT_EQ(c.n, 3);
  EXPECT_EQ(c.T, 6.0);
}

TEST(Config, Ranges) {
  const auto c = parse("[parameters]\ntau_range=8,20,4\ndt_range=0.01,1,3\n");
  EXPECT_EQ(c.tau_values, (std::vector<double>{8.0, 12.0, 16.0, 20.0}));
  EXPECT_EQ(c.dt_min, 0.01);
  EXPECT_EQ(c.dt_count, 3);
  EXPECT_TRUE(mentions(validation_fields("[parameters]\ntau_values=8\ntau_range=8,9,2\n"), "parameters.tau_range"));
}

TEST(Config, ValidationListsEveryBadField) {
  const auto f = validation_fields("[study]\nmanifold=torus\nn=zero\ntrials=-1\ncolour=red\n[grid]\nh=-0.1\n[extra]\nx=1\n");
  EXPECT_TRUE(mentions(f, "study.manifold"));
  EXPECT_TRUE(mentions(f, "study.n"));
  EXPECT_TRUE(mentions(f, "study.trials"));
  EXPECT_TRUE(mentions(f, "study.colour"));
  EXPECT_TRUE(mentions(f, "grid.h"));
  EXPECT_TRUE(mentions(f, "extra"));
  EXPECT_TRUE(mentions(validation_fields("[parameters]\nsigma_list=0.5,-1\n"), "parameters.sigma_list"));
  EXPECT_TRUE(mentions(validation_fields("[study]\nseed=-3\n"), "study.seed"));
}

TEST(Config, MalformedIniAndMissingFile) {
  EXPECT_THROW(parse("[study\nn=3\n"), parse_error);
  EXPECT_THROW(load_config("/nonexistent/study.ini"), io_error);
}

TEST(Config, EchoIsStable) {
  const auto c = parse("[parameters]\nsigma_list=0.5,0.25\n");
  EXPECT_EQ(echo_config(c), echo_config(parse(echo_config(c))));
}

TEST(Pipelines, UnknownCommand) {
  StudyConfig c;
  EXPECT_THROW(run_pipeline(c, "bogus"), usage_error);
  c.output_dir = fresh_dir("unknown").string();
  EXPECT_THROW(run_experiment(c, "bogus"), usage_error);
}

TEST(Pipelines, MissingParametersAreValidationErrors) {
  StudyConfig c;
  EXPECT_THROW(run_pipeline(c, "multiplier-check"), validation_error);
  EXPECT_THROW(run_pipeline(c, "proof-checks"), validation_error);
  EXPECT_THROW(run_pipeline(c, "carleman-sweep"), validation_error);
}

TEST(Pipelines, GapOnTwoSphere) {
  StudyConfig c;
  const auto r = run_pipeline(c, "gap");
  EXPECT_TRUE(r.all_passed());
  EXPECT_GT(r.results["kappa"].get<double>(), 1.0);
  EXPECT_NEAR(r.results["lower_bound"].get<double>(), 2.0 / 3.0, 1e-15);
  ASSERT_EQ(r.table.rows.size(), 1u);
}

TEST(Pipelines, GapOnCircle) {
  StudyConfig c;
  c.manifold = "circle";
  const auto r = run_pipeline(c, "gap");
  EXPECT_TRUE(r.all_passed());
  EXPECT_EQ(r.results["kappa"].get<double>(), 1.0);
}

TEST(Pipelines, FlawDemoDefaultsContainViolation) {
  StudyConfig c;
  const auto r = run_pipeline(c, "flaw-demo");
  EXPECT_TRUE(r.all_passed());
  const auto holds = std::find(r.table.columns.begin(), r.table.columns.end(), "holds") - r.table.columns.begin();
  EXPECT_TRUE(std::any_of(r.table.rows.begin(), r.table.rows.end(),
                          [&](const auto& row) { return !std::get<bool>(row[static_cast<std::size_t>(holds)]); }));
  EXPECT_TRUE(r.results.contains("counterexample"));
}

TEST(Pipelines, MultiplierCheckPasses) {
  StudyConfig c;
  c.tau_values = {8.0, 9.0, 20.0};
  const auto r = run_pipeline(c, "multiplier-check");
  EXPECT_TRUE(r.all_passed());
  EXPECT_FALSE(r.table.rows.empty());
}

TEST(Experiment, WritesArtifactsAndExitCodes) {
  StudyConfig c;
  c.output_dir = fresh_dir("gap").string();
  EXPECT_EQ(run_experiment(c, "gap"), 0);
  const std::filesystem::path out(c.output_dir);
  EXPECT_TRUE(std::filesystem::exists(out / "gap.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "manifest.txt"));
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["all_passed"], true);
  EXPECT_EQ(summary["command"], "gap");
  std::filesystem::remove_all(out);
}

TEST(Experiment, DeterministicAcrossRuns) {
  StudyConfig c;
  c.tau_values = {8.0, 9.0};
  c.sigma_list = {0.25};
  c.trials = 2;
  c.seed = 11;
  std::string first[3];
  for (int run = 0; run < 2; ++run) {
    c.output_dir = fresh_dir("det" + std::to_string(run)).string();
    ASSERT_EQ(run_experiment(c, "multiplier-check"), 0);
    const std::filesystem::path out(c.output_dir);
    const std::string files[3] = {slurp(out / "multiplier-check.csv"), slurp(out / "summary.json"),
                                  slurp(out / "manifest.txt")};
    for (int i = 0; i < 3; ++i) {
      if (run == 0) first[i] = files[i];
      else EXPECT_EQ(first[i], files[i]) << i;
    }
    std::filesystem::remove_all(out);
  }
}

TEST(Experiment, UnwritableOutputIsIoError) {
  StudyConfig c;
  c.output_dir = "/proc/carleman-not-writable";
  EXPECT_THROW(run_experiment(c, "gap"), io_error);
}
