#include "dropal/run_record.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "dropal/checkpoint.hpp"
#include "dropal/error.hpp"

namespace dropal {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  return out;
}

}  // namespace

std::string strategy_slug(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (c == ':') c = '-';
  }
  return s;
}

void write_metrics_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  auto out = open_out(path);
  out << "strategy,replicate,iteration,labeled_size,rmse,mae,maxae\n";
  for (const auto& rep : result.replicates) {
    for (const auto& run : rep.runs) {
      for (const auto& m : run.state.history) {
        out << run.strategy.name() << ',' << rep.index << ',' << m.iteration << ','
            << m.labeled_size << ',' << m.rmse << ',' << m.mae << ',' << m.maxae << '\n';
      }
    }
  }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("strategy,replicate,iteration,labeled_size,rmse,mae,maxae", 0) != 0) {
    throw Error(path.string() + " is not a metrics.csv file");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = fields(line);
    if (f.size() < 7) throw Error("malformed metrics row in " + path.string());
    try {
      MetricsRow r;
      r.strategy = f[0];
      r.replicate = std::stoul(f[1]);
      r.record.iteration = std::stoul(f[2]);
      r.record.labeled_size = std::stoul(f[3]);
      r.record.rmse = std::stod(f[4]);
      r.record.mae = std::stod(f[5]);
      r.record.maxae = std::stod(f[6]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw Error("malformed metrics row in " + path.string() + ": " + line);
    }
  }
  return rows;
}

void write_timings_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  auto out = open_out(path);
  out << "strategy,replicate,iteration,labeled_size,wall_time\n";
  for (const auto& rep : result.replicates) {
    for (const auto& run : rep.runs) {
      const auto& h = run.state.history;
      for (std::size_t i = 0; i < h.size() && i < run.state.wall_seconds.size(); ++i) {
        out << run.strategy.name() << ',' << rep.index << ',' << h[i].iteration << ','
            << h[i].labeled_size << ',' << run.state.wall_seconds[i] << '\n';
      }
    }
  }
}

void write_selections_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  auto out = open_out(path);
  out << "strategy,replicate,iteration,rank,dataset_index\n";
  for (const auto& rep : result.replicates) {
    for (const auto& run : rep.runs) {
      for (std::size_t it = 0; it < run.state.selections.size(); ++it) {
        const auto& sel = run.state.selections[it];
        for (std::size_t k = 0; k < sel.size(); ++k) {
          out << run.strategy.name() << ',' << rep.index << ',' << it + 1 << ',' << k << ','
              << sel[k] << '\n';
        }
      }
    }
  }
}

void write_final_checkpoints(const std::filesystem::path& dir, const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  for (const auto& rep : result.replicates) {
    for (const auto& run : rep.runs) {
      const auto name = strategy_slug(run.strategy.name()) + "_r" + std::to_string(rep.index) + ".json";
      save_checkpoint(dir / name, {run.state.network, rep.standardizer});
    }
  }
}

std::vector<std::vector<MetricsRecord>> histories(const ExperimentResult& result,
                                                  const StrategyKind& strategy) {
  std::vector<std::vector<MetricsRecord>> out;
  for (const auto& rep : result.replicates) {
    for (const auto& run : rep.runs) {
      if (run.strategy == strategy) out.push_back(run.state.history);
    }
  }
  return out;
}

std::vector<std::filesystem::path> write_ratio_reports(const std::filesystem::path& dir,
                                                       const ExperimentResult& result) {
  std::vector<std::filesystem::path> written;
  if (result.replicates.empty()) return written;
  const auto mcdue = StrategyKind::mcdue();
  const auto candidate = histories(result, mcdue);
  if (candidate.empty()) return written;
  for (const auto& run : result.replicates.front().runs) {
    if (run.strategy == mcdue) continue;
    const auto baseline = histories(result, run.strategy);
    for (Metric metric : {Metric::Rmse, Metric::Mae, Metric::MaxAe}) {
      const auto stats = ratio_curve_stats(candidate, baseline, metric);
      const auto stem = "ratio_" + strategy_slug(run.strategy.name()) + "_over_mcdue_" +
                        metric_name(metric);
      write_ratio_csv(dir / (stem + ".csv"), mcdue.name(), run.strategy.name(), metric, stats);
      write_ratio_svg(dir / (stem + ".svg"), mcdue.name(), run.strategy.name(), metric, stats);
      written.push_back(dir / (stem + ".csv"));
      written.push_back(dir / (stem + ".svg"));
    }
  }
  return written;
}

}  // namespace dropal
