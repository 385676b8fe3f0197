#include "dropal/experiment_config.hpp"

#include <fstream>
#include <set>

#include "dropal/error.hpp"

namespace dropal {

using nlohmann::json;

LoadedDataset load_dataset(const DatasetSource& source) {
  if (const auto* csv = std::get_if<CsvSource>(&source)) {
    if (!std::filesystem::exists(csv->path)) {
      throw ConfigError("dataset file not found: " + csv->path.string());
    }
    auto report = load_csv(csv->path, {csv->target, csv->delimiter});
    return {std::move(report.data), report.rejected_rows};
  }
  return {generate_rosenbrock(std::get<RosenbrockSpec>(source)), 0};
}

ExperimentConfig RunConfig::resolved(std::size_t n) const {
  ExperimentConfig cfg = experiment;
  if (budget) {
    cfg.budget = *budget;
  } else {
    cfg.budget = cfg.initial_count(n) + iterations.value_or(0) * cfg.samples_per_step;
  }
  return cfg;
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) {
      throw ConfigError("unknown config key '" + (where.empty() ? "" : where + ".") + item.key() + "'");
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("config key '" + where + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

DatasetSource parse_dataset(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "dataset", {"csv", "target", "delimiter", "rosenbrock"});
  if (j.contains("csv") == j.contains("rosenbrock")) {
    throw ConfigError("dataset needs exactly one of 'csv' or 'rosenbrock'");
  }
  if (j.contains("csv")) {
    CsvSource src;
    std::filesystem::path p = get_or<std::string>(j, "csv", "", "dataset.");
    src.path = p.is_absolute() ? p : (base_dir / p).lexically_normal();
    src.target = get_or<std::string>(j, "target", "y", "dataset.");
    const auto delim = get_or<std::string>(j, "delimiter", ",", "dataset.");
    if (delim.size() != 1) throw ConfigError("dataset.delimiter must be a single character");
    src.delimiter = delim[0];
    return src;
  }
  const json& r = j.at("rosenbrock");
  check_keys(r, "dataset.rosenbrock", {"samples", "dim", "lo", "hi", "seed"});
  RosenbrockSpec spec;
  spec.samples = get_count(r, "samples", spec.samples, "dataset.rosenbrock.");
  spec.dim = get_count(r, "dim", spec.dim, "dataset.rosenbrock.");
  spec.lo = get_or<double>(r, "lo", spec.lo, "dataset.rosenbrock.");
  spec.hi = get_or<double>(r, "hi", spec.hi, "dataset.rosenbrock.");
  spec.seed = get_or<std::uint64_t>(r, "seed", spec.seed, "dataset.rosenbrock.");
  if (spec.dim < 2) throw ConfigError("dataset.rosenbrock.dim must be at least 2");
  if (!(spec.lo < spec.hi)) throw ConfigError("dataset.rosenbrock box needs lo < hi");
  return spec;
}

MaskScope parse_mask_scope(const std::string& s) {
  if (s == "per_example") return MaskScope::PerExample;
  if (s == "per_batch") return MaskScope::PerBatch;
  throw ConfigError("training.mask_scope must be 'per_example' or 'per_batch'");
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "", {"dataset", "initial_size", "test_fraction", "split", "samples_per_step",
                     "budget", "iterations", "strategies", "replicates", "network", "training",
                     "mc", "standardize_target", "seed", "jobs", "output_dir"});
  if (!j.contains("dataset")) throw ConfigError("config is missing the 'dataset' section");

  RunConfig rc;
  rc.dataset = parse_dataset(j.at("dataset"), base_dir);
  auto& e = rc.experiment;

  if (j.contains("initial_size")) e.initial_size = get_count(j, "initial_size", 0, "");
  e.test_fraction = get_or<double>(j, "test_fraction", e.test_fraction, "");
  if (j.contains("split")) {
    const json& s = j.at("split");
    check_keys(s, "split", {"train", "pool", "test"});
    e.split.train = get_or<double>(s, "train", e.split.train, "split.");
    e.split.pool = get_or<double>(s, "pool", e.split.pool, "split.");
    e.split.test = get_or<double>(s, "test", e.split.test, "split.");
  }
  e.samples_per_step = get_count(j, "samples_per_step", e.samples_per_step, "");
  if (j.contains("budget") == j.contains("iterations")) {
    throw ConfigError("config needs exactly one of 'budget' or 'iterations'");
  }
  if (j.contains("budget")) rc.budget = get_count(j, "budget", 0, "");
  if (j.contains("iterations")) rc.iterations = get_count(j, "iterations", 0, "");

  if (j.contains("strategies")) {
    e.strategies.clear();
    if (!j.at("strategies").is_array()) throw ConfigError("'strategies' must be a list");
    for (const auto& s : j.at("strategies")) {
      if (!s.is_string()) throw ConfigError("strategy names must be strings");
      e.strategies.push_back(StrategyKind::parse(s.get<std::string>()));
    }
  }
  e.replicates = get_count(j, "replicates", e.replicates, "");

  if (j.contains("network")) {
    const json& n = j.at("network");
    check_keys(n, "network", {"hidden_sizes", "leakiness", "dropout_prob", "l2_coeff"});
    e.network.hidden_sizes =
        get_or<std::vector<std::size_t>>(n, "hidden_sizes", e.network.hidden_sizes, "network.");
    e.network.leakiness = get_or<double>(n, "leakiness", e.network.leakiness, "network.");
    e.network.dropout_prob = get_or<double>(n, "dropout_prob", e.network.dropout_prob, "network.");
    e.network.l2_coeff = get_or<double>(n, "l2_coeff", e.network.l2_coeff, "network.");
  }
  e.mc.dropout_prob = e.network.dropout_prob;

  if (j.contains("training")) {
    const json& t = j.at("training");
    check_keys(t, "training", {"base_epochs", "epochs_per_retrain", "warm_start", "batch_size",
                               "mask_scope", "optimizer"});
    e.base_epochs = get_count(t, "base_epochs", e.base_epochs, "training.");
    e.epochs_per_retrain = get_count(t, "epochs_per_retrain", e.epochs_per_retrain, "training.");
    e.warm_start = get_or<bool>(t, "warm_start", e.warm_start, "training.");
    e.batch_size = get_count(t, "batch_size", e.batch_size, "training.");
    e.mask_scope = parse_mask_scope(get_or<std::string>(t, "mask_scope", "per_example", "training."));
    if (t.contains("optimizer")) {
      const json& o = t.at("optimizer");
      check_keys(o, "training.optimizer", {"step_size", "beta1", "beta2", "epsilon"});
      e.adam.step_size = get_or<double>(o, "step_size", e.adam.step_size, "training.optimizer.");
      e.adam.beta1 = get_or<double>(o, "beta1", e.adam.beta1, "training.optimizer.");
      e.adam.beta2 = get_or<double>(o, "beta2", e.adam.beta2, "training.optimizer.");
      e.adam.epsilon = get_or<double>(o, "epsilon", e.adam.epsilon, "training.optimizer.");
    }
  }
  if (j.contains("mc")) {
    const json& m = j.at("mc");
    check_keys(m, "mc", {"num_runs", "dropout_prob", "base_seed"});
    e.mc.num_runs = get_count(m, "num_runs", e.mc.num_runs, "mc.");
    e.mc.dropout_prob = get_or<double>(m, "dropout_prob", e.mc.dropout_prob, "mc.");
    e.mc.base_seed = get_or<std::uint64_t>(m, "base_seed", e.mc.base_seed, "mc.");
  }
  e.standardize_target = get_or<bool>(j, "standardize_target", e.standardize_target, "");
  e.seed = get_or<std::uint64_t>(j, "seed", e.seed, "");
  e.jobs = get_count(j, "jobs", e.jobs, "");
  if (j.contains("output_dir")) {
    std::filesystem::path p = get_or<std::string>(j, "output_dir", "", "");
    rc.output_dir = p.is_absolute() ? p : (base_dir / p).lexically_normal();
  }

  e.mc.validate();
  e.adam.validate();
  NetworkSpec probe = e.network;
  probe.input_dim = 1;
  probe.validate();
  if (e.samples_per_step < 1) throw ConfigError("samples_per_step must be at least 1");
  if (e.replicates < 1) throw ConfigError("replicates must be at least 1");
  if (e.batch_size < 1) throw ConfigError("training.batch_size must be at least 1");
  return rc;
}

json to_json(const RunConfig& rc) {
  json j;
  if (const auto* csv = std::get_if<CsvSource>(&rc.dataset)) {
    j["dataset"] = {{"csv", csv->path.string()},
                    {"target", csv->target},
                    {"delimiter", std::string(1, csv->delimiter)}};
  } else {
    const auto& r = std::get<RosenbrockSpec>(rc.dataset);
    j["dataset"] = {{"rosenbrock",
                     {{"samples", r.samples}, {"dim", r.dim}, {"lo", r.lo}, {"hi", r.hi}, {"seed", r.seed}}}};
  }
  const auto& e = rc.experiment;
  if (e.initial_size) {
    j["initial_size"] = *e.initial_size;
    j["test_fraction"] = e.test_fraction;
  } else {
    j["split"] = {{"train", e.split.train}, {"pool", e.split.pool}, {"test", e.split.test}};
  }
  j["samples_per_step"] = e.samples_per_step;
  if (rc.budget) j["budget"] = *rc.budget;
  if (rc.iterations) j["iterations"] = *rc.iterations;
  json strategies = json::array();
  for (const auto& s : e.strategies) strategies.push_back(s.name());
  j["strategies"] = strategies;
  j["replicates"] = e.replicates;
  j["network"] = {{"hidden_sizes", e.network.hidden_sizes},
                  {"leakiness", e.network.leakiness},
                  {"dropout_prob", e.network.dropout_prob},
                  {"l2_coeff", e.network.l2_coeff}};
  j["training"] = {{"base_epochs", e.base_epochs},
                   {"epochs_per_retrain", e.epochs_per_retrain},
                   {"warm_start", e.warm_start},
                   {"batch_size", e.batch_size},
                   {"mask_scope", e.mask_scope == MaskScope::PerExample ? "per_example" : "per_batch"},
                   {"optimizer",
                    {{"step_size", e.adam.step_size},
                     {"beta1", e.adam.beta1},
                     {"beta2", e.adam.beta2},
                     {"epsilon", e.adam.epsilon}}}};
  j["mc"] = {{"num_runs", e.mc.num_runs},
             {"dropout_prob", e.mc.dropout_prob},
             {"base_seed", e.mc.base_seed}};
  j["standardize_target"] = e.standardize_target;
  j["seed"] = e.seed;
  j["jobs"] = e.jobs;
  if (rc.output_dir) j["output_dir"] = rc.output_dir->string();
  return j;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  if (j.is_object() && j.contains("engine_version") && j.contains("config")) return j.at("config");
  return j;
}

void apply_overrides(json& j, const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + ov + "' must look like key.path=value");
    }
    const std::string key = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("override key '" + key + "' crosses a non-object");
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
}

}  // namespace dropal
