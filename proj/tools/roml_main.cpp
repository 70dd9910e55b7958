// roml: experiment harness for random-order online learning.
//
// Subcommands: separation, delayed, constrained, switching, classify,
// bounds, tau. Every run is fully determined by its flags; a JSON config
// written with --dump-config reproduces the run via --config.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "roml/harness.hpp"

using json = nlohmann::json;
using namespace roml;

namespace {

struct Options {
  std::string subcommand;
  std::vector<int> horizons;
  int actions = 2;
  int resources = 1;
  int delay = 0;
  int grid = 64;
  int jobs = 1;
  int trials = 10000;
  double rho = 0.25;
  double budget = -1.0;  // overrides rho when nonnegative
  double delta = 0.1;
  double gap = 0.3;
  double noise = 0.1;
  std::string seeds = "10";
  std::string generator;
  std::string algorithm;
  std::string out_dir;
  uint64_t instance_seed = 1;
  bool trajectories = false;
  std::string config_path;
  std::string dump_config_path;
};

const std::vector<std::string> kSubcommands = {"separation", "delayed", "constrained",
                                               "switching", "classify", "bounds", "tau"};

void apply_config_file(Options& opts) {
  std::ifstream in(opts.config_path);
  if (!in) throw std::invalid_argument("cannot open config file " + opts.config_path);
  json j = json::parse(in);
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("subcommand", opts.subcommand);
  get("T", opts.horizons);
  get("k", opts.actions);
  get("m", opts.resources);
  get("d", opts.delay);
  get("grid", opts.grid);
  get("jobs", opts.jobs);
  get("trials", opts.trials);
  get("rho", opts.rho);
  get("B", opts.budget);
  get("delta", opts.delta);
  get("gap", opts.gap);
  get("noise", opts.noise);
  get("seeds", opts.seeds);
  get("generator", opts.generator);
  get("algo", opts.algorithm);
  get("out", opts.out_dir);
  get("instance_seed", opts.instance_seed);
  get("trajectories", opts.trajectories);
}

void dump_config_file(const Options& opts) {
  json j;
  j["subcommand"] = opts.subcommand;
  j["T"] = opts.horizons;
  j["k"] = opts.actions;
  j["m"] = opts.resources;
  j["d"] = opts.delay;
  j["grid"] = opts.grid;
  j["jobs"] = opts.jobs;
  j["trials"] = opts.trials;
  j["rho"] = opts.rho;
  j["B"] = opts.budget;
  j["delta"] = opts.delta;
  j["gap"] = opts.gap;
  j["noise"] = opts.noise;
  j["seeds"] = opts.seeds;
  j["generator"] = opts.generator;
  j["algo"] = opts.algorithm;
  j["out"] = opts.out_dir;
  j["instance_seed"] = opts.instance_seed;
  j["trajectories"] = opts.trajectories;
  std::ofstream out(opts.dump_config_path);
  if (!out) throw std::invalid_argument("cannot write config file " + opts.dump_config_path);
  out << j.dump(2) << "\n";
}

std::vector<uint64_t> parse_seeds(const std::string& text) {
  std::vector<uint64_t> seeds;
  if (text.find(',') == std::string::npos) {
    char* end = nullptr;
    long count = std::strtol(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || count < 1)
      throw std::invalid_argument("--seeds expects a count or a comma-separated list");
    return seed_range(static_cast<uint64_t>(count));
  }
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    char* end = nullptr;
    long v = std::strtol(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0' || v < 0)
      throw std::invalid_argument("--seeds list entry is not a seed: " + token);
    seeds.push_back(static_cast<uint64_t>(v));
  }
  if (seeds.empty()) throw std::invalid_argument("--seeds list is empty");
  return seeds;
}

std::string resolve_out_dir(const Options& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (const char* env = std::getenv("ROML_OUT_DIR"); env && *env) return env;
  return ".";
}

void require_horizon(const Options& opts) {
  if (opts.horizons.empty())
    throw std::invalid_argument("missing required --T (one or more horizons)");
  for (int T : opts.horizons)
    if (T < 1) throw std::invalid_argument("--T must be positive");
}

InstanceSpec spec_for(const Options& opts, int horizon) {
  InstanceSpec spec;
  spec.generator = opts.generator;
  spec.horizon = horizon;
  spec.actions = opts.actions;
  spec.resources = opts.resources;
  spec.rho = opts.budget >= 0.0 ? opts.budget / horizon : opts.rho;
  spec.gap = opts.gap;
  spec.noise = opts.noise;
  spec.grid = opts.grid;
  spec.delay = opts.delay;
  spec.delta = opts.delta;
  spec.seed = opts.instance_seed;
  return spec;
}

void emit(const Options& opts, const std::string& name, const std::string& algo,
          const TrialAggregate& agg, const InstanceSpec& spec, bool append) {
  std::string dir = resolve_out_dir(opts);
  std::filesystem::create_directories(dir);
  write_reports_csv(agg.reports, spec.horizon, spec.actions, dir + "/" + name + ".csv", append);
  if (opts.trajectories)
    for (const auto& report : agg.reports) write_trajectory_csv(report, dir);
  std::printf("%s T=%d generator=%s algo=%s seeds=%zu mean=%.4f std=%.4f min=%.4f max=%.4f\n",
              name.c_str(), spec.horizon, spec.generator.c_str(), algo.c_str(),
              agg.reports.size(), agg.mean, agg.stddev, agg.min, agg.max);
}

int cmd_tau(const Options& opts) {
  require_horizon(opts);
  long T = opts.horizons.front();
  double exact = expected_tau_exact(T);
  std::printf("%.10g\n", exact);
  Rng rng(opts.instance_seed);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < opts.trials; ++i) {
    double tau = static_cast<double>(simulate_tau(T, rng));
    sum += tau;
    sumsq += tau * tau;
  }
  double mean = sum / opts.trials;
  double se = opts.trials > 1
                  ? std::sqrt((sumsq - opts.trials * mean * mean) / (opts.trials - 1) /
                              opts.trials)
                  : 0.0;
  std::printf("mc_mean %.6f mc_se %.6f trials %d\n", mean, se, opts.trials);
  return 0;
}

int cmd_separation(const Options& opts) {
  require_horizon(opts);
  auto seeds = parse_seeds(opts.seeds);
  bool append = false;
  for (int T : opts.horizons) {
    Options adv = opts;
    adv.generator = "birthday_adversarial";
    auto spec_adv = spec_for(adv, T);
    emit(opts, "separation", "birthday", run_trials("birthday", spec_adv, seeds, opts.jobs),
         spec_adv, append);
    append = true;
    Options iid = opts;
    iid.generator = "iid_uniform_support";
    auto spec_iid = spec_for(iid, T);
    emit(opts, "separation", "birthday", run_trials("birthday", spec_iid, seeds, opts.jobs),
         spec_iid, true);
  }
  return 0;
}

int run_registered(const Options& opts, const std::string& name, const std::string& default_algo,
                   const std::string& default_generator) {
  require_horizon(opts);
  Options local = opts;
  if (local.algorithm.empty()) local.algorithm = default_algo;
  if (local.generator.empty()) local.generator = default_generator;
  auto seeds = parse_seeds(local.seeds);
  bool append = false;
  for (int T : local.horizons) {
    auto spec = spec_for(local, T);
    emit(local, name, local.algorithm, run_trials(local.algorithm, spec, seeds, local.jobs),
         spec, append);
    append = true;
  }
  return 0;
}

int cmd_bounds(const Options& opts) {
  int horizon = opts.horizons.empty() ? 1024 : opts.horizons.front();
  int failures = 0;
  auto verdict = [&](const char* name, bool pass, const std::string& detail) {
    std::printf("%s %s (%s)\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    if (!pass) ++failures;
  };

  std::vector<double> values(horizon);
  double mean = 0.0;
  for (int i = 0; i < horizon; ++i) mean += values[i] = (i + 1.0) / horizon;
  mean /= horizon;
  Rng rng(opts.instance_seed);
  std::vector<int> index(horizon);
  for (long s : {16L, 128L}) {
    if (s > horizon) continue;
    double eps = hoeffding_wor_eps(s, opts.delta);
    int exceed = 0;
    for (int trial = 0; trial < opts.trials; ++trial) {
      for (int i = 0; i < horizon; ++i) index[i] = i;
      double sum = 0.0;
      for (long i = 0; i < s; ++i) {
        long j = i + static_cast<long>(rng.next_below(static_cast<uint64_t>(horizon - i)));
        std::swap(index[i], index[j]);
        sum += values[index[i]];
      }
      if (std::abs(sum / s - mean) > eps) ++exceed;
    }
    double rate = static_cast<double>(exceed) / opts.trials;
    char name[64];
    std::snprintf(name, sizeof(name), "hoeffding_coverage_s%ld", s);
    char detail[128];
    std::snprintf(detail, sizeof(detail), "exceedance %.4f <= delta %.3f", rate, opts.delta);
    verdict(name, rate <= opts.delta, detail);
  }

  Rng sweep(opts.instance_seed + 1);
  int violations = 0;
  for (int i = 0; i < opts.trials; ++i) {
    long T = 2 + static_cast<long>(sweep.next_below(8192));
    long s = 1 + static_cast<long>(sweep.next_below(static_cast<uint64_t>(T)));
    double d = 1e-9 + sweep.next_unit() * (1.0 - 2e-9);
    if (serfling_eps(s, T, d) > hoeffding_wor_eps(s, d)) ++violations;
  }
  verdict("serfling_dominance", violations == 0,
          "violations " + std::to_string(violations) + "/" + std::to_string(opts.trials));

  bool monotone = true;
  auto delayed = PrecisionSchedule::delayed(static_cast<double>(std::max(horizon, 2)));
  auto sse = PrecisionSchedule::sse(static_cast<double>(std::max(horizon, 2)), opts.actions);
  auto constrained = PrecisionSchedule::constrained(static_cast<double>(std::max(horizon, 2)),
                                                    opts.actions, opts.resources, opts.delta);
  for (const auto& schedule : {delayed, sse, constrained})
    for (int i = 1; i <= 20; ++i)
      if (!(block_eps(schedule, i) < block_eps(schedule, i - 1))) monotone = false;
  verdict("schedule_monotonicity", monotone, "eps strictly decreasing over 20 blocks");

  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  Options opts;
  // flags override config, so the file is applied before parsing
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) opts.config_path = argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) opts.config_path = arg.substr(9);
  }
  try {
    if (!opts.config_path.empty()) apply_config_file(opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  CLI::App app{"random-order online learning experiments"};
  app.add_option("subcommand", opts.subcommand,
                 "one of: separation, delayed, constrained, switching, classify, bounds, tau");
  app.add_option("--T", opts.horizons, "horizon(s)");
  app.add_option("--k", opts.actions, "number of actions");
  app.add_option("--m", opts.resources, "number of resources");
  app.add_option("--d", opts.delay, "feedback delay");
  app.add_option("--rho", opts.rho, "per-round budget");
  app.add_option("--B", opts.budget, "total budget (overrides --rho)");
  app.add_option("--delta", opts.delta, "failure probability");
  app.add_option("--gap", opts.gap, "bandit mean gap");
  app.add_option("--noise", opts.noise, "label noise rate");
  app.add_option("--grid", opts.grid, "threshold grid size");
  app.add_option("--seeds", opts.seeds, "seed count or comma-separated list");
  app.add_option("--trials", opts.trials, "monte-carlo trials (tau, bounds)");
  app.add_option("--generator", opts.generator, "instance generator");
  app.add_option("--algo", opts.algorithm, "algorithm id");
  app.add_option("--out", opts.out_dir, "output directory (else $ROML_OUT_DIR, else .)");
  app.add_option("--jobs", opts.jobs, "parallel trial workers");
  app.add_option("--instance-seed", opts.instance_seed, "seed of the frozen instance multiset");
  app.add_flag("--trajectories", opts.trajectories, "write per-round trajectory files");
  app.add_option("--config", opts.config_path, "JSON config file (flags override)");
  app.add_option("--dump-config", opts.dump_config_path, "write the resolved config as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), opts.subcommand) ==
        kSubcommands.end())
      throw std::invalid_argument(opts.subcommand.empty()
                                      ? "missing subcommand"
                                      : "unknown subcommand " + opts.subcommand);
    if (!opts.dump_config_path.empty()) dump_config_file(opts);

    if (opts.subcommand == "tau") return cmd_tau(opts);
    if (opts.subcommand == "separation") return cmd_separation(opts);
    if (opts.subcommand == "bounds") return cmd_bounds(opts);
    if (opts.subcommand == "delayed")
      return run_registered(opts, "delayed", "sim_ftl", "iid_uniform_support");
    if (opts.subcommand == "constrained")
      return run_registered(opts, "constrained", "sim_constrained", "constrained_random");
    if (opts.subcommand == "switching")
      return run_registered(opts, "switching", "sse", "gap_bandit");
    return run_registered(opts, "classify", "erm", "threshold_labels");
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
