#include "plasticity/harness/experiment.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "plasticity/diagnostics/metrics.hpp"
#include "plasticity/errors.hpp"
#include "plasticity/harness/analyze.hpp"
#include "plasticity/ppo/trainer.hpp"

namespace plasticity::harness {

SeedArchive run_seed(const ExperimentConfig& config, const std::string& method, int seed,
                     const fs::path& method_dir) {
  const auto seed_of = [&](Stream s) { return derive_seed(config.master_seed, seed, s); };

  const fs::path dir = method_dir / ("seed_" + std::to_string(seed));
  fs::create_directories(dir);
  LineWriter metrics(dir / "metrics.ldj");
  LineWriter events(dir / "events.ldj");

  const auto plan = shift::make_round_plan(config.protocol, config.n_rounds, config.k, config.n_test,
                                           seed_of(Stream::Plan), config.env);
  if (config.protocol == shift::Protocol::Permute) write_file(dir / "permutations.txt", shift::dump_permutations(plan));
  const auto tests = shift::test_instances(plan);

  interventions::InterventionHooks hooks(config.method(method), seed_of(Stream::Intervention));
  nn::NetworkSpec base = config.network;
  base.input_dim = env::kObservationSize;
  base.n_actions = env::kNumActions;
  Rng init_rng(seed_of(Stream::Init));
  ppo::Agent agent = ppo::make_agent(hooks.architecture(base), config.ppo, init_rng);
  ppo::PpoTrainer trainer(agent, config.ppo, hooks,
                          {seed_of(Stream::Rollout), seed_of(Stream::Shuffle), seed_of(Stream::Diagnostics)},
                          config.eval_batch);
  Rng test_rng(seed_of(Stream::Test));

  const shift::PermutationMap* current_map = nullptr;
  if (config.test_eval_every > 0) {
    trainer.set_epoch_callback([&](diagnostics::MetricsRecord& rec) {
      if (rec.epoch % config.test_eval_every == 0) {
        rec.test_reward =
            diagnostics::evaluate_test(agent.spec, agent.params, tests, *current_map, config.test_episodes, test_rng);
      }
    });
  }

  SeedArchive out;
  out.seed = seed;
  for (int round = 0; round < config.n_rounds; ++round) {
    const auto instances = shift::active_instances(plan, round);
    current_map = &shift::round_permutation(plan, round);
    auto records = trainer.train_round(round, instances, *current_map, config.iterations_per_round);
    if (records.empty()) throw UsageError("round produced no epochs");
    records.back().test_reward =
        diagnostics::evaluate_test(agent.spec, agent.params, tests, *current_map, config.test_episodes, test_rng);
    if (round + 1 < config.n_rounds) trainer.end_round(round);
    for (auto& r : records) {
      metrics.write(metrics_line(r));
      out.records.push_back(std::move(r));
    }
    for (auto& e : trainer.take_events()) {
      events.write(event_line(e));
      out.events.push_back(std::move(e));
    }
  }
  return out;
}

void write_method_summary(const MethodArchive& archive) {
  const fs::path dir = archive.dir / "summary";
  fs::create_directories(dir);
  std::string csv = "seed,round,train_raw,train_normalized,test_raw,test_normalized,episodes\n";
  for (const auto& s : archive.seeds) {
    const auto rr = round_rewards(s, archive.config.n_rounds, static_cast<std::size_t>(archive.config.reward_window));
    for (int r = 0; r < archive.config.n_rounds; ++r) {
      const auto i = static_cast<std::size_t>(r);
      csv += fmt::format("{},{},{},{},{},{},{}\n", s.seed, r, rr.train_raw[i], rr.train_normalized[i], rr.test_raw[i],
                         rr.test_normalized[i], rr.episodes[i]);
    }
  }
  write_file(dir / "rounds.csv", csv);
}

std::vector<MethodArchive> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  if (options.threads < 1) throw ConfigError("threads must be >= 1");
  const fs::path root(config.output_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create output directory " + root.string() + ": " + ec.message());

  std::vector<MethodArchive> archives;
  for (const auto& m : config.methods) {
    MethodArchive a;
    a.label = config.method(m).label();
    a.dir = root / a.label;
    a.config = config;
    a.config.methods = {a.label};
    if (fs::exists(a.dir)) {
      if (!options.overwrite) throw IoError("archive already exists: " + a.dir.string() + " (use --overwrite)");
      fs::remove_all(a.dir);
    }
    fs::create_directories(a.dir, ec);
    if (ec) throw IoError("cannot create " + a.dir.string() + ": " + ec.message());
    save_config(a.config, a.dir / "config.snapshot");
    a.seeds.resize(static_cast<std::size_t>(config.n_seeds));
    archives.push_back(std::move(a));
  }
  save_config(config, root / "run.snapshot");

  struct Job {
    std::size_t method;
    int seed;
  };
  std::vector<Job> jobs;
  for (std::size_t m = 0; m < archives.size(); ++m) {
    for (int s = 0; s < config.n_seeds; ++s) jobs.push_back({m, s});
  }
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex log_mutex;

  const auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size() || failed.load()) return;
      const Job job = jobs[j];
      auto& archive = archives[job.method];
      try {
        const auto t0 = std::chrono::steady_clock::now();
        archive.seeds[static_cast<std::size_t>(job.seed)] = run_seed(archive.config, archive.label, job.seed, archive.dir);
        if (options.log) {
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          std::lock_guard lock(log_mutex);
          options.log(fmt::format("{} seed {} done in {:.1f}s", archive.label, job.seed, secs));
        }
      } catch (...) {
        errors[j] = std::current_exception();
        failed.store(true);
      }
    }
  };

  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(options.threads), jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& a : archives) write_method_summary(a);
  return archives;
}

}  // namespace plasticity::harness
