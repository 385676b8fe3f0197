#include "dropal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "dropal/error.hpp"
#include "dropal/svg.hpp"

namespace dropal {

Metric parse_metric(const std::string& name) {
  if (name == "rmse") return Metric::Rmse;
  if (name == "mae") return Metric::Mae;
  if (name == "maxae") return Metric::MaxAe;
  throw ConfigError("unknown metric '" + name + "' (expected rmse, mae or maxae)");
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::Rmse: return "rmse";
    case Metric::Mae: return "mae";
    case Metric::MaxAe: return "maxae";
  }
  return "unknown";
}

double metric_value(const MetricsRecord& r, Metric m) {
  switch (m) {
    case Metric::Rmse: return r.rmse;
    case Metric::Mae: return r.mae;
    case Metric::MaxAe: return r.maxae;
  }
  return 0.0;
}

MetricsRecord metrics(const Eigen::VectorXd& preds, const Eigen::VectorXd& targets) {
  if (preds.size() == 0) throw Error("metrics need at least one prediction");
  if (preds.size() != targets.size()) throw ShapeError("prediction and target counts differ");
  const Eigen::ArrayXd r = (preds - targets).array().abs();
  MetricsRecord m;
  m.maxae = r.maxCoeff();
  // Rounding in the sums can push a mean a few ulps past the bound it
  // provably satisfies; clamp so mae <= rmse <= maxae holds exactly.
  m.mae = std::min(r.mean(), m.maxae);
  m.rmse = std::clamp(std::sqrt(r.square().mean()), m.mae, m.maxae);
  return m;
}

std::vector<RatioPoint> ratio_curve(std::span<const MetricsRecord> candidate,
                                    std::span<const MetricsRecord> baseline, Metric metric) {
  if (candidate.size() != baseline.size()) {
    throw Error("ratio curve histories have different lengths");
  }
  std::vector<RatioPoint> out;
  out.reserve(candidate.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (candidate[i].labeled_size != baseline[i].labeled_size) {
      throw Error("ratio curve histories are not aligned at step " + std::to_string(i));
    }
    const double a = metric_value(candidate[i], metric);
    const double b = metric_value(baseline[i], metric);
    RatioPoint p;
    p.labeled_size = candidate[i].labeled_size;
    if (a == 0.0) {
      p.flagged = true;
      p.ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      p.ratio = b / a;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<RatioStat> ratio_curve_stats(const std::vector<std::vector<MetricsRecord>>& candidate,
                                         const std::vector<std::vector<MetricsRecord>>& baseline,
                                         Metric metric) {
  if (candidate.size() != baseline.size() || candidate.empty()) {
    throw Error("ratio statistics need the same non-zero number of replicates on both sides");
  }
  std::vector<std::vector<RatioPoint>> curves;
  for (std::size_t r = 0; r < candidate.size(); ++r) {
    curves.push_back(ratio_curve(candidate[r], baseline[r], metric));
    if (curves.back().size() != curves.front().size()) {
      throw Error("replicate histories have different lengths");
    }
  }
  std::vector<RatioStat> stats;
  for (std::size_t i = 0; i < curves.front().size(); ++i) {
    RatioStat s;
    s.labeled_size = curves.front()[i].labeled_size;
    std::vector<double> vals;
    for (const auto& c : curves) {
      if (c[i].labeled_size != s.labeled_size) {
        throw Error("replicate histories are not aligned at step " + std::to_string(i));
      }
      if (c[i].flagged) {
        ++s.excluded;
      } else {
        vals.push_back(c[i].ratio);
      }
    }
    s.count = vals.size();
    if (!vals.empty()) {
      double sum = 0.0;
      for (double v : vals) sum += v;
      s.mean = sum / static_cast<double>(vals.size());
      if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
      }
    } else {
      s.mean = std::numeric_limits<double>::quiet_NaN();
    }
    stats.push_back(s);
  }
  return stats;
}

void ProblemResultTable::validate() const {
  if (problems.empty() || algorithms.empty()) throw Error("performance table is empty");
  if (q.size() != problems.size()) throw Error("performance table row count mismatch");
  for (std::size_t p = 0; p < q.size(); ++p) {
    if (q[p].size() != algorithms.size()) {
      throw Error("performance table row " + std::to_string(p) + " is not rectangular");
    }
    for (double v : q[p]) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error("performance table entries must be finite and positive (problem '" +
                    problems[p] + "')");
      }
    }
  }
}

namespace {

std::vector<std::vector<double>> performance_ratios(const ProblemResultTable& table) {
  std::vector<std::vector<double>> r;
  for (const auto& row : table.q) {
    const double best = *std::min_element(row.begin(), row.end());
    std::vector<double> rr;
    for (double v : row) rr.push_back(v / best);
    r.push_back(std::move(rr));
  }
  return r;
}

}  // namespace

std::vector<double> default_tau_grid(const ProblemResultTable& table, std::size_t points) {
  table.validate();
  double max_ratio = 1.0;
  for (const auto& row : performance_ratios(table)) {
    for (double v : row) max_ratio = std::max(max_ratio, v);
  }
  if (max_ratio == 1.0 || points < 2) return {1.0};
  std::vector<double> grid(points);
  const double top = std::log(max_ratio);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = std::exp(top * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  grid.front() = 1.0;
  grid.back() = max_ratio;
  return grid;
}

PerformanceProfile dolan_more(const ProblemResultTable& table, std::span<const double> tau) {
  table.validate();
  if (tau.empty() || tau.front() != 1.0) throw Error("tau grid must start at 1");
  for (std::size_t i = 1; i < tau.size(); ++i) {
    if (!(tau[i] > tau[i - 1])) throw Error("tau grid must be strictly ascending");
  }

  PerformanceProfile prof;
  prof.algorithms = table.algorithms;
  prof.tau.assign(tau.begin(), tau.end());
  prof.ratios = performance_ratios(table);
  const auto n_problems = static_cast<double>(table.problems.size());

  for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
    std::vector<double> rho;
    rho.reserve(tau.size());
    for (double t : tau) {
      std::size_t count = 0;
      for (const auto& row : prof.ratios) count += row[a] <= t ? 1 : 0;
      rho.push_back(static_cast<double>(count) / n_problems);
    }
    double auc = rho.front();
    if (tau.size() > 1) {
      double area = 0.0;
      for (std::size_t i = 1; i < tau.size(); ++i) {
        area += 0.5 * (rho[i] + rho[i - 1]) * (std::log(tau[i]) - std::log(tau[i - 1]));
      }
      auc = area / std::log(tau.back());
    }
    prof.rho.push_back(std::move(rho));
    prof.auc.push_back(auc);
  }
  return prof;
}

PerformanceProfile dolan_more(const ProblemResultTable& table) {
  const auto grid = default_tau_grid(table);
  return dolan_more(table, grid);
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("correlation inputs differ in length");
  if (a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double percentile_rank(std::span<const double> values, double x) {
  if (values.empty()) throw Error("percentile rank in an empty set");
  std::size_t count = 0;
  for (double v : values) count += v <= x ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(values.size());
}

DiagnosticReport std_error_diagnostic(const Network& net, const Eigen::MatrixXd& features,
                                      const Eigen::VectorXd& targets, const McConfig& cfg,
                                      const TargetScale& scale) {
  cfg.validate();
  if (features.rows() == 0) throw Error("diagnostic needs a non-empty test set");
  if (features.rows() != targets.size()) throw ShapeError("feature rows and target count differ");

  const auto scores = mcdue_scores(net, features, cfg);
  const Eigen::VectorXd preds = (predict(net, features).array() * scale.std + scale.mean).matrix();

  DiagnosticReport rep;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    rep.mc_std.push_back(scores[static_cast<std::size_t>(i)].score * std::abs(scale.std));
    rep.abs_error.push_back(std::abs(preds[i] - targets[i]));
  }
  rep.correlation = pearson(rep.mc_std, rep.abs_error);
  rep.median_std = quantile(rep.mc_std, 0.5);
  rep.median_error = quantile(rep.abs_error, 0.5);
  rep.std_q99 = quantile(rep.mc_std, 0.99);

  std::vector<double> tail_ranks;
  for (std::size_t i = 0; i < rep.mc_std.size(); ++i) {
    if (rep.mc_std[i] > rep.std_q99) {
      tail_ranks.push_back(percentile_rank(rep.abs_error, rep.abs_error[i]));
    }
  }
  if (!tail_ranks.empty()) rep.tail_error_percentile = quantile(tail_ranks, 0.5);
  return rep;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

}  // namespace

void write_ratio_csv(const std::filesystem::path& path, const std::string& candidate,
                     const std::string& baseline, Metric metric,
                     std::span<const RatioStat> stats) {
  auto out = open_csv(path);
  out << "candidate,baseline,metric,labeled_size,mean_ratio,std_ratio,replicates,excluded\n";
  for (const auto& s : stats) {
    out << candidate << ',' << baseline << ',' << metric_name(metric) << ',' << s.labeled_size
        << ',' << s.mean << ',' << s.stddev << ',' << s.count << ',' << s.excluded << '\n';
  }
}

void write_ratio_svg(const std::filesystem::path& path, const std::string& candidate,
                     const std::string& baseline, Metric metric,
                     std::span<const RatioStat> stats) {
  svg::Plot plot;
  plot.title = metric_name(metric) + " ratio: " + baseline + " / " + candidate;
  plot.x_label = "labeled set size";
  plot.y_label = "error ratio";
  svg::Series s;
  s.label = "mean +/- std";
  for (const auto& st : stats) {
    if (st.count == 0) continue;
    s.x.push_back(static_cast<double>(st.labeled_size));
    s.y.push_back(st.mean);
    s.spread.push_back(st.stddev);
  }
  plot.series.push_back(std::move(s));
  plot.guides.push_back({false, 1.0, "#000000", true});
  svg::write(path, plot);
}

void write_profile_csv(const std::filesystem::path& path, const PerformanceProfile& profile) {
  auto out = open_csv(path);
  out << "tau";
  for (const auto& a : profile.algorithms) out << ',' << a;
  out << '\n';
  for (std::size_t i = 0; i < profile.tau.size(); ++i) {
    out << profile.tau[i];
    for (const auto& rho : profile.rho) out << ',' << rho[i];
    out << '\n';
  }
}

void write_profile_svg(const std::filesystem::path& path, const PerformanceProfile& profile,
                       const std::string& title) {
  svg::Plot plot;
  plot.title = title;
  plot.x_label = "performance ratio tau";
  plot.y_label = "fraction of problems";
  plot.log_x = profile.tau.size() > 1;
  for (std::size_t a = 0; a < profile.algorithms.size(); ++a) {
    svg::Series s;
    std::ostringstream label;
    label << profile.algorithms[a] << " (AUC " << std::fixed << std::setprecision(3)
          << profile.auc[a] << ')';
    s.label = label.str();
    s.x = profile.tau;
    s.y = profile.rho[a];
    s.step = true;
    plot.series.push_back(std::move(s));
  }
  svg::write(path, plot);
}

void write_diagnostic_csv(const std::filesystem::path& path, const DiagnosticReport& report) {
  auto out = open_csv(path);
  out << "mc_std,abs_error\n";
  for (std::size_t i = 0; i < report.mc_std.size(); ++i) {
    out << report.mc_std[i] << ',' << report.abs_error[i] << '\n';
  }
}

void write_diagnostic_svg(const std::filesystem::path& path, const DiagnosticReport& report) {
  svg::Plot plot;
  std::ostringstream title;
  title << "MC std vs absolute error, Pearson r = ";
  if (report.correlation) {
    title << std::fixed << std::setprecision(3) << *report.correlation;
  } else {
    title << "undefined";
  }
  plot.title = title.str();
  plot.x_label = "MC dropout standard deviation";
  plot.y_label = "absolute error";
  svg::Series s;
  s.label = "test points";
  s.x = report.mc_std;
  s.y = report.abs_error;
  s.points = true;
  plot.series.push_back(std::move(s));
  plot.guides.push_back({true, report.median_std, "#000000", true});
  plot.guides.push_back({false, report.median_error, "#000000", true});
  plot.guides.push_back({true, report.std_q99, "#1f3fbf", false});
  if (report.tail_error_percentile) {
    plot.guides.push_back(
        {false, quantile(report.abs_error, *report.tail_error_percentile), "#1f3fbf", false});
  }
  svg::write(path, plot);
}

}  // namespace dropal
