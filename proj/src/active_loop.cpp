#include "dropal/active_loop.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "dropal/error.hpp"
#include "dropal/rng.hpp"

namespace dropal {

std::size_t ExperimentConfig::initial_count(std::size_t n) const {
  if (initial_size) return *initial_size;
  return static_cast<std::size_t>(std::llround(split.train * static_cast<double>(n)));
}

std::size_t ExperimentConfig::test_count(std::size_t n) const {
  const double frac = initial_size ? test_fraction : split.test;
  return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
}

void ExperimentConfig::validate(std::size_t n) const {
  if (!initial_size) split.validate();
  if (initial_size && !(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  if (samples_per_step < 1) throw ConfigError("samples_per_step must be at least 1");
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (strategies.empty()) throw ConfigError("at least one strategy is required");
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    strategies[i].validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (strategies[i] == strategies[j]) {
        throw ConfigError("strategy '" + strategies[i].name() + "' is listed twice");
      }
    }
  }
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  adam.validate();
  mc.validate();
  NetworkSpec net = network;
  net.input_dim = 1;
  net.validate();

  if (n < 5) throw ConfigError("dataset needs at least 5 rows");
  const std::size_t init = initial_count(n);
  const std::size_t test = test_count(n);
  if (init == 0 || test == 0 || init + test >= n) {
    throw ConfigError("split leaves an empty initial, pool or test set for " +
                      std::to_string(n) + " rows");
  }
  const std::size_t pool = n - init - test;
  if (budget < init) {
    throw ConfigError("budget " + std::to_string(budget) + " is below the initial set size " +
                      std::to_string(init));
  }
  if (budget > init + pool) {
    throw ConfigError("budget " + std::to_string(budget) + " exceeds initial + pool size " +
                      std::to_string(init + pool));
  }
}

SeedRegistry SeedRegistry::for_replicate(std::uint64_t experiment_seed, std::size_t index) {
  return {derive_seed({experiment_seed, 0x5e9ULL, static_cast<std::uint64_t>(index)})};
}
std::uint64_t SeedRegistry::split() const { return derive_seed({replicate, 1}); }
std::uint64_t SeedRegistry::init() const { return derive_seed({replicate, 2}); }
std::uint64_t SeedRegistry::base_training() const { return derive_seed({replicate, 3}); }
std::uint64_t SeedRegistry::retraining(std::size_t iteration) const {
  return derive_seed({replicate, 4, static_cast<std::uint64_t>(iteration)});
}
std::uint64_t SeedRegistry::random_selection(std::size_t iteration) const {
  return derive_seed({replicate, 5, static_cast<std::uint64_t>(iteration)});
}
std::uint64_t SeedRegistry::mc(std::size_t iteration, std::uint64_t base) const {
  return derive_seed({replicate, 6, static_cast<std::uint64_t>(iteration), base});
}

ReplicateContext ReplicateContext::build(const ExperimentConfig& cfg, const Dataset& ds,
                                         std::size_t index) {
  ds.validate();
  cfg.validate(ds.size());
  ReplicateContext ctx;
  ctx.config = &cfg;
  ctx.index = index;
  ctx.seeds = SeedRegistry::for_replicate(cfg.seed, index);
  if (cfg.initial_size) {
    ctx.split = split_with_initial_size(ds.size(), *cfg.initial_size, cfg.test_fraction,
                                        ctx.seeds.split());
  } else {
    SplitSpec s = cfg.split;
    s.seed = ctx.seeds.split();
    ctx.split = dropal::split(ds.size(), s);
  }
  ctx.standardizer = Standardizer::fit(ds, ctx.split.train, cfg.standardize_target);
  ctx.scaled = ctx.standardizer.apply(ds);
  ctx.test_features = ctx.scaled.rows(ctx.split.test);
  ctx.test_targets = ds.target_rows(ctx.split.test);
  return ctx;
}

MetricsRecord ReplicateContext::evaluate(const Network& net) const {
  const Eigen::VectorXd preds = standardizer.inverse_targets(predict(net, test_features));
  return metrics(preds, test_targets);
}

namespace {

TrainConfig train_config(const ExperimentConfig& cfg, std::size_t epochs, std::uint64_t seed) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = cfg.batch_size;
  t.seed = seed;
  t.adam = cfg.adam;
  t.mask_scope = cfg.mask_scope;
  return t;
}

NetworkSpec network_spec(const ExperimentConfig& cfg, std::size_t input_dim) {
  NetworkSpec spec = cfg.network;
  spec.input_dim = input_dim;
  spec.output_dim = 1;
  return spec;
}

// Pool positions chosen by the strategy.
std::vector<std::size_t> choose(const ALState& state, const StrategyKind& strategy,
                                const ReplicateContext& ctx, std::size_t m) {
  const auto& cfg = *ctx.config;
  switch (strategy.kind) {
    case StrategyKind::Kind::Mcdue: {
      McConfig mc = cfg.mc;
      mc.base_seed = ctx.seeds.mc(state.iteration, cfg.mc.base_seed);
      const std::vector<std::uint64_t> keys(state.pool.begin(), state.pool.end());
      const auto scores = mcdue_scores(state.network, ctx.scaled.rows(state.pool), mc, keys);
      return select_top_m(scores, m);
    }
    case StrategyKind::Kind::Random:
      return random_select(state.pool.size(), m, ctx.seeds.random_selection(state.iteration));
    case StrategyKind::Kind::GreedyMaxMin:
      return greedy_maxmin_select(ctx.scaled.rows(state.pool), ctx.scaled.rows(state.labeled), m);
    case StrategyKind::Kind::BatchMaxMin:
      return batch_maxmin_select(ctx.scaled.rows(state.pool), ctx.scaled.rows(state.labeled), m,
                                 strategy.batch);
  }
  throw Error("unhandled strategy");
}

}  // namespace

IterationOutcome al_iteration(ALState& state, const StrategyKind& strategy,
                              const ReplicateContext& ctx) {
  const auto& cfg = *ctx.config;
  if (state.labeled.size() >= cfg.budget) return IterationOutcome::BudgetReached;
  if (state.pool.empty()) return IterationOutcome::PoolExhausted;

  const auto started = std::chrono::steady_clock::now();
  const std::size_t m =
      std::min({cfg.samples_per_step, cfg.budget - state.labeled.size(), state.pool.size()});
  const auto picked = choose(state, strategy, ctx, m);

  std::vector<bool> take(state.pool.size(), false);
  std::vector<std::size_t> selected;
  selected.reserve(picked.size());
  for (std::size_t pos : picked) {
    if (pos >= state.pool.size() || take[pos]) throw Error("strategy returned an invalid selection");
    take[pos] = true;
    selected.push_back(state.pool[pos]);
  }
  std::vector<std::size_t> remaining;
  remaining.reserve(state.pool.size() - selected.size());
  for (std::size_t i = 0; i < state.pool.size(); ++i) {
    if (!take[i]) remaining.push_back(state.pool[i]);
  }
  state.pool = std::move(remaining);
  state.labeled.insert(state.labeled.end(), selected.begin(), selected.end());
  ++state.iteration;

  Network start = cfg.warm_start
                      ? state.network
                      : init_network(network_spec(cfg, ctx.scaled.dim()), ctx.seeds.init());
  state.network = train(std::move(start), ctx.scaled.rows(state.labeled),
                        ctx.scaled.target_rows(state.labeled),
                        train_config(cfg, cfg.epochs_per_retrain,
                                     ctx.seeds.retraining(state.iteration)));

  MetricsRecord rec = ctx.evaluate(state.network);
  rec.iteration = state.iteration;
  rec.labeled_size = state.labeled.size();
  state.history.push_back(rec);
  state.selections.push_back(std::move(selected));
  state.wall_seconds.push_back(
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  return IterationOutcome::Advanced;
}

void check_state(const ALState& state, const ReplicateContext& ctx) {
  const std::size_t n = ctx.scaled.size();
  std::vector<char> seen(n, 0);
  auto mark = [&](const std::vector<std::size_t>& idx, char tag, const char* what) {
    for (std::size_t i : idx) {
      if (i >= n) throw Error(std::string(what) + " index out of range");
      if (seen[i] != 0) throw Error(std::string(what) + " index overlaps another set");
      seen[i] = tag;
    }
  };
  mark(ctx.split.test, 't', "test");
  mark(state.labeled, 'l', "labeled");
  mark(state.pool, 'p', "pool");
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error("labeled, pool and test sets do not cover the dataset");
  }
  if (state.history.size() != state.iteration + 1) {
    throw Error("history length does not match the iteration count");
  }
}

ReplicateResult run_replicate(const ExperimentConfig& cfg, const Dataset& ds, std::size_t index) {
  const ReplicateContext ctx = ReplicateContext::build(cfg, ds, index);

  const auto started = std::chrono::steady_clock::now();
  Network base = init_network(network_spec(cfg, ds.dim()), ctx.seeds.init());
  base = train(std::move(base), ctx.scaled.rows(ctx.split.train),
               ctx.scaled.target_rows(ctx.split.train),
               train_config(cfg, cfg.base_epochs, ctx.seeds.base_training()));
  MetricsRecord base_metrics = ctx.evaluate(base);
  base_metrics.labeled_size = ctx.split.train.size();
  const double base_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  ReplicateResult result;
  result.index = index;
  result.seeds = ctx.seeds;
  result.split = ctx.split;
  result.standardizer = ctx.standardizer;
  for (const auto& strategy : cfg.strategies) {
    ALState state{ctx.split.train, ctx.split.pool, base, 0, {base_metrics}, {}, {base_seconds}};
    while (al_iteration(state, strategy, ctx) == IterationOutcome::Advanced) {
      check_state(state, ctx);
    }
    check_state(state, ctx);
    result.runs.push_back({strategy, std::move(state)});
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& ds) {
  ds.validate();
  cfg.validate(ds.size());
  ExperimentResult out;
  out.replicates.resize(cfg.replicates);

  const std::size_t workers = std::clamp<std::size_t>(cfg.jobs, 1, cfg.replicates);
  if (workers == 1) {
    for (std::size_t r = 0; r < cfg.replicates; ++r) out.replicates[r] = run_replicate(cfg, ds, r);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t r = next++; r < cfg.replicates; r = next++) {
          try {
            out.replicates[r] = run_replicate(cfg, ds, r);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace dropal
