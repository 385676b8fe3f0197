#include "dropal/commands.hpp"

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dropal/analysis.hpp"
#include "dropal/checkpoint.hpp"
#include "dropal/error.hpp"
#include "dropal/experiment_config.hpp"
#include "dropal/run_record.hpp"

namespace dropal {
namespace {

using nlohmann::json;

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

std::filesystem::path default_run_dir(const std::filesystem::path& config) {
  const char* root = std::getenv("DROPAL_OUTPUT_ROOT");
  const std::filesystem::path base = (root != nullptr && *root != '\0') ? root : "runs";
  return base / config.stem();
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    json raw = read_config_file(opts.config);
    apply_overrides(raw, opts.overrides);
    RunConfig rc = parse_run_config(raw, std::filesystem::absolute(opts.config).parent_path());
    if (opts.jobs) rc.experiment.jobs = *opts.jobs;

    const LoadedDataset loaded = load_dataset(rc.dataset);
    if (loaded.rejected_rows > 0) {
      err << "warning: rejected " << loaded.rejected_rows << " malformed dataset rows\n";
    }
    const ExperimentConfig cfg = rc.resolved(loaded.data.size());
    cfg.validate(loaded.data.size());

    const std::filesystem::path dir =
        opts.out_dir ? *opts.out_dir : rc.output_dir.value_or(default_run_dir(opts.config));
    std::filesystem::create_directories(dir);

    const json snapshot = to_json(rc);
    write_json(dir / "config.json", snapshot);
    const std::string started = utc_now();

    out << "running " << cfg.strategies.size() << " strategies x " << cfg.replicates
        << " replicates on " << loaded.data.provenance << " (" << loaded.data.size() << " rows, "
        << loaded.data.dim() << " features), budget " << cfg.budget << '\n';
    const ExperimentResult result = run_experiment(cfg, loaded.data);

    write_metrics_csv(dir / "metrics.csv", result);
    write_timings_csv(dir / "timings.csv", result);
    write_selections_csv(dir / "selections.csv", result);
    write_final_checkpoints(dir / "checkpoints", result);
    const auto ratio_files = write_ratio_reports(dir, result);

    json seeds = json::array();
    for (const auto& rep : result.replicates) {
      seeds.push_back({{"replicate", rep.index},
                       {"replicate_seed", rep.seeds.replicate},
                       {"split", rep.seeds.split()},
                       {"init", rep.seeds.init()},
                       {"base_training", rep.seeds.base_training()}});
    }
    json outputs = {"config.json", "metrics.csv", "timings.csv", "selections.csv", "checkpoints/"};
    for (const auto& f : ratio_files) outputs.push_back(f.filename().string());
    json manifest = {{"engine_version", kEngineVersion},
                     {"started_utc", started},
                     {"finished_utc", utc_now()},
                     {"config", snapshot},
                     {"resolved_budget", cfg.budget},
                     {"seed_registry", {{"experiment_seed", cfg.seed}, {"replicates", seeds}}},
                     {"dataset",
                      {{"provenance", loaded.data.provenance},
                       {"rows", loaded.data.size()},
                       {"features", loaded.data.dim()},
                       {"rejected_rows", loaded.rejected_rows}}},
                     {"outputs", outputs}};
    write_json(dir / "manifest.json", manifest);

    for (const auto& strategy : cfg.strategies) {
      const auto h = histories(result, strategy);
      double sum = 0.0;
      for (const auto& rep : h) sum += rep.back().rmse;
      out << "  " << std::left << std::setw(16) << strategy.name() << " mean final rmse "
          << sum / static_cast<double>(h.size()) << '\n';
    }
    out << "wrote " << dir.string() << '\n';
    return int{kExitOk};
  });
}

int cmd_diagnose(const DiagnoseOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.runs < 2) {
      throw ConfigError("--t must be at least 2 (got " + std::to_string(opts.runs) + ")");
    }
    if (!std::filesystem::exists(opts.checkpoint)) {
      throw ConfigError("checkpoint not found: " + opts.checkpoint.string());
    }
    if (!std::filesystem::exists(opts.dataset)) {
      throw ConfigError("dataset file not found: " + opts.dataset.string());
    }
    const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
    const auto report = load_csv(opts.dataset, {opts.target, opts.delimiter});
    const Dataset& ds = report.data;
    if (ds.dim() != ckpt.network.spec().input_dim) {
      throw ConfigError("dataset has " + std::to_string(ds.dim()) + " features, checkpoint expects " +
                        std::to_string(ckpt.network.spec().input_dim));
    }

    McConfig mc;
    mc.num_runs = opts.runs;
    mc.dropout_prob = opts.dropout.value_or(ckpt.network.spec().dropout_prob);
    mc.base_seed = opts.seed;
    mc.validate();

    Eigen::MatrixXd x = ds.features;
    TargetScale scale;
    if (ckpt.standardizer) {
      x = ckpt.standardizer->transform_features(ds.features);
      scale = {ckpt.standardizer->target_mean, ckpt.standardizer->target_std};
    }
    const DiagnosticReport rep = std_error_diagnostic(ckpt.network, x, ds.targets, mc, scale);

    std::filesystem::create_directories(opts.out_dir);
    write_diagnostic_csv(opts.out_dir / "diagnostic.csv", rep);
    write_diagnostic_svg(opts.out_dir / "diagnostic.svg", rep);

    out << std::fixed << std::setprecision(3);
    if (rep.correlation) {
      out << "pearson r = " << *rep.correlation << '\n';
    } else {
      out << "pearson r: correlation undefined (constant MC standard deviation or error)\n";
    }
    out << "median mc std = " << rep.median_std << ", median abs error = " << rep.median_error
        << ", 0.99 quantile of mc std = " << rep.std_q99 << '\n';
    if (rep.tail_error_percentile) {
      out << "median error percentile above the 0.99 std quantile = " << *rep.tail_error_percentile
          << '\n';
    } else {
      out << "median error percentile above the 0.99 std quantile: undefined (no points)\n";
    }
    out << "wrote " << (opts.out_dir / "diagnostic.csv").string() << " and "
        << (opts.out_dir / "diagnostic.svg").string() << '\n';
    return int{kExitOk};
  });
}

namespace {

std::vector<std::filesystem::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::filesystem::path> files;
  for (const auto& pattern : inputs) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc != 0) throw ConfigError("no result files match '" + pattern + "'");
  }
  return files;
}

struct TableChunk {
  std::vector<std::string> algorithms;
  std::vector<std::string> problems;
  std::vector<std::vector<double>> q;
};

TableChunk chunk_from_metrics(const std::filesystem::path& path, Metric metric) {
  const auto rows = read_metrics_csv(path);
  if (rows.empty()) throw ConfigError(path.string() + " holds no metrics");
  std::vector<std::string> algorithms;
  std::map<std::size_t, std::map<std::string, MetricsRecord>> last;
  for (const auto& r : rows) {
    if (std::find(algorithms.begin(), algorithms.end(), r.strategy) == algorithms.end()) {
      algorithms.push_back(r.strategy);
    }
    auto& slot = last[r.replicate][r.strategy];
    if (r.record.iteration >= slot.iteration) slot = r.record;
  }
  TableChunk c;
  c.algorithms = algorithms;
  for (const auto& [rep, per_alg] : last) {
    std::vector<double> row;
    for (const auto& a : algorithms) {
      const auto it = per_alg.find(a);
      if (it == per_alg.end()) {
        throw ConfigError(path.string() + ": replicate " + std::to_string(rep) + " lacks " + a);
      }
      row.push_back(metric_value(it->second, metric));
    }
    c.problems.push_back(path.string() + "#r" + std::to_string(rep));
    c.q.push_back(std::move(row));
  }
  return c;
}

TableChunk chunk_from_qtable(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  TableChunk c;
  {
    std::stringstream ss(line);
    std::string f;
    std::getline(ss, f, ',');
    while (std::getline(ss, f, ',')) c.algorithms.push_back(f);
  }
  if (c.algorithms.empty()) throw ConfigError(path.string() + ": q-table header lists no algorithms");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f;
    std::getline(ss, f, ',');
    c.problems.push_back(f);
    std::vector<double> row;
    while (std::getline(ss, f, ',')) {
      try {
        row.push_back(std::stod(f));
      } catch (const std::exception&) {
        throw Error(path.string() + ": non-numeric entry '" + f + "'");
      }
    }
    if (row.size() != c.algorithms.size()) {
      throw Error(path.string() + ": row '" + c.problems.back() + "' has the wrong length");
    }
    c.q.push_back(std::move(row));
  }
  return c;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

}  // namespace

int cmd_profile(const ProfileOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.inputs.empty()) throw ConfigError("profile needs at least one result file");
    const Metric metric = parse_metric(opts.metric);
    const auto files = expand_inputs(opts.inputs);

    ProblemResultTable table;
    for (const auto& f : files) {
      std::ifstream in(f);
      if (!in) throw ConfigError("cannot open result file " + f.string());
      std::string header;
      std::getline(in, header);
      in.close();
      TableChunk chunk;
      if (header.rfind("strategy,replicate,iteration", 0) == 0) {
        chunk = chunk_from_metrics(f, metric);
      } else if (header.rfind("problem,", 0) == 0) {
        chunk = chunk_from_qtable(f);
      } else {
        throw ConfigError(f.string() + " is neither a metrics.csv nor a q-table file");
      }

      if (table.algorithms.empty()) {
        table.algorithms = chunk.algorithms;
      } else {
        const std::set<std::string> want(table.algorithms.begin(), table.algorithms.end());
        const std::set<std::string> got(chunk.algorithms.begin(), chunk.algorithms.end());
        if (want != got || chunk.algorithms.size() != table.algorithms.size()) {
          throw ConfigError("algorithm sets differ: [" + join(table.algorithms) + "] vs [" +
                            join(chunk.algorithms) + "] in " + f.string());
        }
      }
      for (std::size_t p = 0; p < chunk.problems.size(); ++p) {
        std::vector<double> row;
        for (const auto& a : table.algorithms) {
          const auto pos = std::find(chunk.algorithms.begin(), chunk.algorithms.end(), a) -
                           chunk.algorithms.begin();
          row.push_back(chunk.q[p][static_cast<std::size_t>(pos)]);
        }
        table.problems.push_back(chunk.problems[p]);
        table.q.push_back(std::move(row));
      }
    }

    const auto grid = default_tau_grid(table, opts.tau_points);
    const PerformanceProfile prof = dolan_more(table, grid);
    std::filesystem::create_directories(opts.out_dir);
    write_profile_csv(opts.out_dir / "profile.csv", prof);
    write_profile_svg(opts.out_dir / "profile.svg", prof,
                      "Dolan-More profile (" + metric_name(metric) + ", " +
                          std::to_string(table.problems.size()) + " problems)");

    out << std::fixed << std::setprecision(3);
    out << table.problems.size() << " problems, " << table.algorithms.size() << " algorithms\n";
    for (std::size_t a = 0; a < prof.algorithms.size(); ++a) {
      out << "  " << std::left << std::setw(16) << prof.algorithms[a] << " rho(1) = "
          << prof.rho[a].front() << "  AUC = " << prof.auc[a] << '\n';
    }
    out << "wrote " << (opts.out_dir / "profile.csv").string() << " and "
        << (opts.out_dir / "profile.svg").string() << '\n';
    return int{kExitOk};
  });
}

int cmd_gen_rosenbrock(const GenRosenbrockOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Dataset ds = generate_rosenbrock(opts.spec);
    if (opts.out.has_parent_path()) std::filesystem::create_directories(opts.out.parent_path());
    write_csv(opts.out, ds, "y");
    out << "wrote " << ds.size() << " x " << ds.dim() << " samples to " << opts.out.string() << '\n';
    return int{kExitOk};
  });
}

}  // namespace dropal
