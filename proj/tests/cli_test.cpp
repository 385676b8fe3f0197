#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include <json.hpp>

#include "dropal/checkpoint.hpp"
#include "dropal/commands.hpp"
#include "dropal/data.hpp"
#include "dropal/error.hpp"
#include "dropal/experiment_config.hpp"
#include "dropal/run_record.hpp"
#include "dropal/trainer.hpp"
#include "profile_oracle.hpp"

using namespace dropal;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("dropal_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Rosenbrock-5D with a network and loop small enough for a unit test.
  json smoke_config() const {
    return json::parse(R"({
      "dataset": {"rosenbrock": {"samples": 300, "dim": 5, "seed": 4}},
      "initial_size": 50,
      "samples_per_step": 25,
      "iterations": 2,
      "strategies": ["mcdue", "random", "batch_maxmin"],
      "replicates": 2,
      "seed": 9,
      "network": {"hidden_sizes": [16, 8]},
      "training": {"base_epochs": 30, "epochs_per_retrain": 10, "batch_size": 32},
      "mc": {"num_runs": 5}
    })");
  }

  fs::path write_config(const json& j, const std::string& name = "smoke.json") const {
    const auto p = dir_ / name;
    spit(p, j.dump(2));
    return p;
  }

  int run(const fs::path& config, const fs::path& out_dir, std::string* out = nullptr,
          std::string* err = nullptr) const {
    std::ostringstream o, e;
    RunOptions opts;
    opts.config = config;
    opts.out_dir = out_dir;
    const int code = cmd_run(opts, o, e);
    if (out) *out = o.str();
    if (err) *err = e.str();
    return code;
  }

  // Writes a trained toy checkpoint and a labelled CSV in original units.
  void toy_model(double dropout, const fs::path& ckpt, const fs::path& csv) const {
    const Dataset ds = generate_rosenbrock({120, 3, -2.0, 2.0, 6});
    std::vector<std::size_t> idx(120);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto st = Standardizer::fit(ds, idx);
    const Dataset scaled = st.apply(ds);
    NetworkSpec spec;
    spec.input_dim = 3;
    spec.hidden_sizes = {16, 8};
    spec.dropout_prob = dropout;
    TrainConfig tc;
    tc.epochs = 50;
    tc.batch_size = 16;
    const Network net = train(init_network(spec, 2), scaled.features, scaled.targets, tc);
    save_checkpoint(ckpt, {net, st});
    write_csv(csv, ds);
  }

  fs::path dir_;
};

// Built binary location; the environment variable overrides the build-time path.
const char* cli_path() {
  if (const char* env = std::getenv("DROPAL_CLI_PATH")) return env;
#ifdef DROPAL_CLI_PATH
  return DROPAL_CLI_PATH;
#else
  return nullptr;
#endif
}

int run_binary(const std::string& args, std::string* output = nullptr) {
  const char* bin = cli_path();
  if (bin == nullptr) return -1;
  const std::string capture = (fs::temp_directory_path() / ("dropal_cli_out_" + std::to_string(::getpid()))).string();
  const int status = std::system((std::string("\"") + bin + "\" " + args + " >" + capture + " 2>&1").c_str());
  if (output) *output = slurp(capture);
  fs::remove(capture);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_F(CliTest, RunWritesManifestAndMetrics) {
  std::string out;
  ASSERT_EQ(run(write_config(smoke_config()), dir_ / "run", &out), kExitOk) << out;
  for (const char* f : {"manifest.json", "config.json", "metrics.csv", "timings.csv", "selections.csv",
                        "ratio_random_over_mcdue_rmse.csv", "ratio_batch_maxmin-4_over_mcdue_maxae.svg",
                        "checkpoints/mcdue_r0.json", "checkpoints/batch_maxmin-4_r1.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "run" / f)) << f;
  }
  const json manifest = json::parse(slurp(dir_ / "run" / "manifest.json"));
  EXPECT_EQ(manifest.at("engine_version"), kEngineVersion);
  EXPECT_EQ(manifest.at("resolved_budget"), 100);
  EXPECT_EQ(manifest.at("seed_registry").at("replicates").size(), 2u);
  EXPECT_EQ(manifest.at("dataset").at("rows"), 300);

  const auto rows = read_metrics_csv(dir_ / "run" / "metrics.csv");
  EXPECT_EQ(rows.size(), 3u * 2u * 3u);  // strategies x replicates x (base + 2 iterations)
  const std::string body = slurp(dir_ / "run" / "metrics.csv");
  EXPECT_EQ(body.substr(0, body.find('\n')), "strategy,replicate,iteration,labeled_size,rmse,mae,maxae");
}

TEST_F(CliTest, RerunIsByteIdenticalAndManifestReproduces) {
  const auto cfg = write_config(smoke_config());
  ASSERT_EQ(run(cfg, dir_ / "a"), kExitOk);
  ASSERT_EQ(run(cfg, dir_ / "b"), kExitOk);
  ASSERT_EQ(run(dir_ / "a" / "manifest.json", dir_ / "c"), kExitOk);
  for (const char* f : {"metrics.csv", "selections.csv", "config.json", "checkpoints/mcdue_r1.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "c" / f)) << f;
  }
}

TEST_F(CliTest, RunDoesNotModifyItsConfig) {
  const auto cfg = write_config(smoke_config());
  const std::string before = slurp(cfg);
  ASSERT_EQ(run(cfg, dir_ / "run"), kExitOk);
  EXPECT_EQ(slurp(cfg), before);
}

TEST_F(CliTest, MissingDatasetIsAConfigError) {
  json j = smoke_config();
  j["dataset"] = {{"csv", "no/such/data.csv"}};
  std::string err;
  EXPECT_EQ(run(write_config(j), dir_ / "run", nullptr, &err), kExitUsage);
  EXPECT_NE(err.find("no/such/data.csv"), std::string::npos) << err;
}

TEST_F(CliTest, InvalidConfigsExitTwo) {
  for (const std::string& patch :
       {R"({"unknown_key": 1})", R"({"budget": 100})", R"({"strategies": ["bald"]})",
        R"({"iterations": 1000})", R"({"network": {"dropout_prob": 1.5}})"}) {
    json j = smoke_config();
    j.merge_patch(json::parse(patch));
    std::string err;
    EXPECT_EQ(run(write_config(j), dir_ / "run", nullptr, &err), kExitUsage) << patch;
    EXPECT_NE(err.find("error:"), std::string::npos);
  }
  EXPECT_EQ(run(dir_ / "absent.json", dir_ / "run"), kExitUsage);
  spit(dir_ / "broken.json", "{ not json");
  EXPECT_EQ(run(dir_ / "broken.json", dir_ / "run"), kExitUsage);
}

TEST(RunConfig, ParseNormalizeAndOverride) {
  json j = json::parse(R"({
    "dataset": {"csv": "data.csv", "target": "price", "delimiter": ";"},
    "budget": 500,
    "strategies": ["mcdue", "batch_maxmin:8"],
    "network": {"dropout_prob": 0.3},
    "training": {"mask_scope": "per_batch", "optimizer": {"step_size": 0.01}}
  })");
  apply_overrides(j, {"training.base_epochs=123", "mc.num_runs=7", "seed=5"});
  const RunConfig rc = parse_run_config(j, "/base");
  const auto& csv = std::get<CsvSource>(rc.dataset);
  EXPECT_EQ(csv.path, fs::path("/base/data.csv"));
  EXPECT_EQ(csv.target, "price");
  EXPECT_EQ(csv.delimiter, ';');
  EXPECT_EQ(rc.budget, 500u);
  EXPECT_EQ(rc.experiment.strategies[1], StrategyKind::batch_maxmin(8));
  EXPECT_EQ(rc.experiment.base_epochs, 123u);
  EXPECT_EQ(rc.experiment.mc.num_runs, 7u);
  EXPECT_EQ(rc.experiment.mc.dropout_prob, 0.3);  // follows the network unless set
  EXPECT_EQ(rc.experiment.mask_scope, MaskScope::PerBatch);
  EXPECT_EQ(rc.experiment.adam.step_size, 0.01);
  EXPECT_EQ(rc.experiment.seed, 5u);
  json scalar = {{"seed", 1}};
  EXPECT_THROW(apply_overrides(scalar, {"seed.x=1"}), ConfigError);
  EXPECT_THROW(apply_overrides(scalar, {"seed"}), ConfigError);
  // The normalized tree parses back to the same tree.
  const json norm = to_json(rc);
  EXPECT_EQ(to_json(parse_run_config(norm, "/elsewhere")), norm);
}

TEST(RunConfig, IterationsResolveToBudget) {
  const json j = json::parse(R"({"dataset": {"rosenbrock": {"samples": 100, "dim": 2}},
                                 "initial_size": 20, "samples_per_step": 10, "iterations": 3})");
  EXPECT_EQ(parse_run_config(j, ".").resolved(100).budget, 50u);
}

TEST(RunConfig, DefaultOutputRootFromEnvironment) {
  ::setenv("DROPAL_OUTPUT_ROOT", "/tmp/dropal_root", 1);
  EXPECT_EQ(default_run_dir("configs/exp1.json"), fs::path("/tmp/dropal_root/exp1"));
  ::unsetenv("DROPAL_OUTPUT_ROOT");
  EXPECT_EQ(default_run_dir("configs/exp1.json"), fs::path("runs/exp1"));
}

TEST_F(CliTest, DiagnosePrintsCorrelationAndWritesPlot) {
  toy_model(0.5, dir_ / "net.json", dir_ / "data.csv");
  DiagnoseOptions opts;
  opts.checkpoint = dir_ / "net.json";
  opts.dataset = dir_ / "data.csv";
  opts.out_dir = dir_ / "diag";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_diagnose(opts, out, err), kExitOk) << err.str();
  EXPECT_TRUE(std::regex_search(out.str(), std::regex(R"(pearson r = -?\d\.\d{3}\n)"))) << out.str();
  EXPECT_TRUE(fs::exists(dir_ / "diag" / "diagnostic.svg"));
  EXPECT_TRUE(fs::exists(dir_ / "diag" / "diagnostic.csv"));
}

TEST_F(CliTest, DiagnoseRunCountLimits) {
  toy_model(0.5, dir_ / "net.json", dir_ / "data.csv");
  DiagnoseOptions opts;
  opts.checkpoint = dir_ / "net.json";
  opts.dataset = dir_ / "data.csv";
  opts.out_dir = dir_;
  std::ostringstream out, err;
  opts.runs = 1;
  EXPECT_EQ(cmd_diagnose(opts, out, err), kExitUsage);
  opts.runs = 2;
  EXPECT_EQ(cmd_diagnose(opts, out, err), kExitOk);
}

TEST_F(CliTest, DiagnoseZeroDropoutReportsUndefined) {
  toy_model(0.0, dir_ / "net.json", dir_ / "data.csv");
  DiagnoseOptions opts;
  opts.checkpoint = dir_ / "net.json";
  opts.dataset = dir_ / "data.csv";
  opts.out_dir = dir_;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_diagnose(opts, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("correlation undefined"), std::string::npos) << out.str();
}

TEST_F(CliTest, ProfileOfSingleAlgorithmIsFlatOne) {
  json j = smoke_config();
  j["strategies"] = {"random"};
  ASSERT_EQ(run(write_config(j), dir_ / "run"), kExitOk);
  ProfileOptions opts;
  opts.inputs = {(dir_ / "run" / "metrics.csv").string()};
  opts.out_dir = dir_ / "prof";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_profile(opts, out, err), kExitOk) << err.str();
  EXPECT_EQ(slurp(dir_ / "prof" / "profile.csv"), "tau,random\n1,1\n");
  EXPECT_NE(out.str().find("rho(1) = 1.000  AUC = 1.000"), std::string::npos) << out.str();
}

TEST_F(CliTest, ProfileOfHandTableMatchesCounting) {
  spit(dir_ / "q.csv", "problem,a1,a2\np1,1,2\np2,4,2\n");
  ProfileOptions opts;
  opts.inputs = {(dir_ / "q*.csv").string()};
  opts.tau_points = 2;
  opts.out_dir = dir_ / "prof";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_profile(opts, out, err), kExitOk) << err.str();
  const std::vector<std::vector<double>> q{{1, 2}, {4, 2}};
  std::ostringstream expected;
  expected << "tau,a1,a2\n";
  for (double tau : {1.0, 2.0}) {
    expected << tau << ',' << dropal::testing::rho_by_counting(q, 0, tau) << ','
             << dropal::testing::rho_by_counting(q, 1, tau) << '\n';
  }
  EXPECT_EQ(slurp(dir_ / "prof" / "profile.csv"), expected.str());
}

TEST_F(CliTest, ProfileCombinesRunsAndRejectsMismatchedAlgorithms) {
  spit(dir_ / "q1.csv", "problem,mcdue,random\np1,1,2\n");
  spit(dir_ / "q2.csv", "problem,random,mcdue\np2,3,1.5\n");
  spit(dir_ / "q3.csv", "problem,mcdue,greedy_maxmin\np3,1,1\n");
  ProfileOptions opts;
  opts.out_dir = dir_ / "prof";
  std::ostringstream out, err;
  opts.inputs = {(dir_ / "q1.csv").string(), (dir_ / "q2.csv").string()};
  ASSERT_EQ(cmd_profile(opts, out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("2 problems, 2 algorithms"), std::string::npos);

  opts.inputs = {(dir_ / "q1.csv").string(), (dir_ / "q3.csv").string()};
  std::ostringstream err2;
  EXPECT_EQ(cmd_profile(opts, out, err2), kExitUsage);
  EXPECT_NE(err2.str().find("greedy_maxmin"), std::string::npos) << err2.str();
  EXPECT_NE(err2.str().find("random"), std::string::npos) << err2.str();

  opts.inputs = {(dir_ / "nothing*.csv").string()};
  EXPECT_EQ(cmd_profile(opts, out, err2), kExitUsage);
}

TEST_F(CliTest, GenRosenbrockWritesLoadableCsv) {
  GenRosenbrockOptions opts;
  opts.spec = {50, 4, -2.0, 2.0, 3};
  opts.out = dir_ / "r.csv";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_gen_rosenbrock(opts, out, err), kExitOk);
  const auto loaded = load_csv(opts.out, {"y", ','}).data;
  EXPECT_EQ(loaded.size(), 50u);
  EXPECT_TRUE(loaded.targets == generate_rosenbrock(opts.spec).targets);
  opts.spec.dim = 1;
  EXPECT_EQ(cmd_gen_rosenbrock(opts, out, err), kExitUsage);
}

TEST_F(CliTest, BinaryExitCodes) {
  if (cli_path() == nullptr) GTEST_SKIP() << "dropal binary location unknown";
  std::string output;
  EXPECT_EQ(run_binary("--help", &output), 0);
  EXPECT_NE(output.find("diagnose"), std::string::npos);
  EXPECT_EQ(run_binary("", &output), 2);
  EXPECT_EQ(run_binary("frobnicate", &output), 2);
  EXPECT_EQ(run_binary("run", &output), 2);

  json j = smoke_config();
  j["dataset"] = {{"csv", (dir_ / "missing.csv").string()}};
  const auto cfg = write_config(j, "bad.json");
  EXPECT_EQ(run_binary("run \"" + cfg.string() + "\" -o \"" + (dir_ / "o").string() + "\"", &output), 2);
  EXPECT_NE(output.find("missing.csv"), std::string::npos) << output;

  EXPECT_EQ(run_binary("gen-rosenbrock -n 20 -d 3 -o \"" + (dir_ / "g.csv").string() + "\"", &output), 0);
  EXPECT_TRUE(fs::exists(dir_ / "g.csv"));

  const auto good = write_config(smoke_config(), "good.json");
  EXPECT_EQ(run_binary("run \"" + good.string() + "\" -o \"" + (dir_ / "bin_run").string() +
                           "\" --set replicates=1 -j 1",
                       &output),
            0)
      << output;
  EXPECT_EQ(read_metrics_csv(dir_ / "bin_run" / "metrics.csv").size(), 9u);
}
