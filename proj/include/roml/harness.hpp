#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "roml/classification.hpp"
#include "roml/constrained.hpp"
#include "roml/core.hpp"
#include "roml/experts.hpp"
#include "roml/io.hpp"
#include "roml/report.hpp"
#include "roml/rng.hpp"
#include "roml/sim_delayed.hpp"
#include "roml/switching.hpp"

namespace roml {

// Compensated summation; keeps aggregate identities honest at 2^15-scale runs.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    double y = v - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

// ---- regret evaluation ------------------------------------------------------

// Full-information regret against the hindsight-best fixed action.
inline RegretReport evaluate_regret(std::span<const double> per_round_loss,
                                    const LossInstance& instance) {
  if (static_cast<int>(per_round_loss.size()) != instance.horizon)
    throw std::invalid_argument("evaluate_regret: play log length != horizon");
  auto [best, benchmark] = best_fixed_action(instance);
  RegretReport report;
  report.benchmark = benchmark;
  report.trajectory.reserve(instance.horizon);
  KahanSum cum;
  for (int t = 0; t < instance.horizon; ++t) {
    cum.add(per_round_loss[t]);
    report.trajectory.push_back(cum.value() - benchmark / instance.horizon * (t + 1));
  }
  report.cumulative_loss = cum.value();
  report.regret = cum.value() - benchmark;
  return report;
}

// Switching-cost regret: a unit loss for every change of action, with the
// final round compared against itself.
inline RegretReport evaluate_regret(std::span<const double> per_round_loss,
                                    std::span<const int> actions, const LossInstance& instance) {
  if (actions.size() != per_round_loss.size())
    throw std::invalid_argument("evaluate_regret: action log length != loss log length");
  RegretReport report = evaluate_regret(per_round_loss, instance);
  long switches = 0;
  for (size_t t = 0; t + 1 < actions.size(); ++t)
    if (actions[t] != actions[t + 1]) ++switches;
  report.switch_count = switches;
  report.regret += switches;
  long seen = 0;  // fold switch costs into the trajectory
  for (size_t t = 0; t < actions.size(); ++t) {
    if (t > 0 && actions[t] != actions[t - 1]) ++seen;
    report.trajectory[t] += seen;
  }
  return report;
}

// Constrained regret: T * OPT_LP minus rewards collected up to the stop time.
inline RegretReport evaluate_regret(std::span<const double> per_round_reward,
                                    const ConstrainedInstance& instance, long stop_time = -1) {
  if (static_cast<int>(per_round_reward.size()) != instance.horizon)
    throw std::invalid_argument("evaluate_regret: play log length != horizon");
  LpSolution opt = solve_opt_lp(instance.mean_rewards(), instance.mean_costs(), instance.rho());
  RegretReport report;
  report.benchmark = instance.horizon * opt.value;
  report.stop_time = stop_time;
  long cutoff = stop_time < 0 ? instance.horizon : stop_time;
  KahanSum cum;
  for (int t = 0; t < instance.horizon; ++t) {
    if (t + 1 <= cutoff) cum.add(per_round_reward[t]);
    report.trajectory.push_back(opt.value * (t + 1) - cum.value());
  }
  report.cumulative_loss = cum.value();
  report.regret = report.benchmark - cum.value();
  return report;
}

// ---- instance generators ----------------------------------------------------

// Experiment parameters: instance shape plus the algorithm knobs that a trial
// needs (delay, delta). Seed here fixes the generated multiset; trial seeds
// drive permutations and any per-trial redraws.
struct InstanceSpec {
  std::string generator;
  int horizon = 0;    // T
  int actions = 2;    // k
  int resources = 1;  // m
  double rho = 0.25;
  double gap = 0.3;
  double noise = 0.1;
  int grid = 64;
  int delay = 0;
  double delta = 0.1;
  uint64_t seed = 1;
};

// Arm 1 runs through {i/T} exactly once, arm 2 is free: the instance that
// keeps Birthday-Test playing arm 1 for all T rounds.
inline LossInstance birthday_adversarial(int horizon) {
  LossInstance instance;
  instance.horizon = horizon;
  instance.actions = 2;
  instance.losses.resize(static_cast<size_t>(horizon) * 2, 0.0);
  for (int t = 0; t < horizon; ++t)
    instance.losses[static_cast<size_t>(t) * 2] =
        static_cast<double>(t + 1) / static_cast<double>(horizon);
  instance.validate();
  return instance;
}

// Arm 1 i.i.d. uniform on the same support, arm 2 still free: the stochastic
// twin of the adversarial instance.
inline LossInstance iid_uniform_support(int horizon, uint64_t seed) {
  LossInstance instance;
  instance.horizon = horizon;
  instance.actions = 2;
  instance.losses.resize(static_cast<size_t>(horizon) * 2, 0.0);
  Rng rng = Rng(seed).fork(7);
  for (int t = 0; t < horizon; ++t)
    instance.losses[static_cast<size_t>(t) * 2] =
        static_cast<double>(rng.next_below(static_cast<uint64_t>(horizon)) + 1) /
        static_cast<double>(horizon);
  instance.validate();
  return instance;
}

// Constant rows: action 1 has mean (1-gap)/2, every other action (1+gap)/2,
// so column means differ by exactly `gap` for any horizon.
inline LossInstance gap_bandit(int horizon, int actions, double gap) {
  if (!(gap >= 0.0 && gap <= 1.0))
    throw std::invalid_argument("gap_bandit: gap must lie in [0,1]");
  LossInstance instance;
  instance.horizon = horizon;
  instance.actions = actions;
  instance.losses.reserve(static_cast<size_t>(horizon) * actions);
  for (int t = 0; t < horizon; ++t)
    for (int a = 0; a < actions; ++a)
      instance.losses.push_back(a == 0 ? 0.5 - gap / 2.0 : 0.5 + gap / 2.0);
  instance.validate();
  return instance;
}

// Uniform random rewards and costs, frozen as a multiset; the last action is
// the zero-cost null action.
inline ConstrainedInstance constrained_random(int horizon, int actions, int resources,
                                              double rho, uint64_t seed) {
  ConstrainedInstance instance;
  instance.horizon = horizon;
  instance.actions = actions;
  instance.resources = resources;
  instance.null_action = actions - 1;
  instance.budget = rho * horizon;
  instance.rewards.resize(static_cast<size_t>(horizon) * actions);
  instance.costs.resize(static_cast<size_t>(horizon) * resources * actions);
  Rng rng = Rng(seed).fork(11);
  for (int t = 0; t < horizon; ++t)
    for (int a = 0; a < actions; ++a)
      instance.rewards[static_cast<size_t>(t) * actions + a] =
          a == instance.null_action ? 0.0 : rng.next_unit();
  for (int t = 0; t < horizon; ++t)
    for (int j = 0; j < resources; ++j)
      for (int a = 0; a < actions; ++a)
        instance.costs[(static_cast<size_t>(t) * resources + j) * actions + a] =
            a == instance.null_action ? 0.0 : rng.next_unit();
  instance.validate();
  return instance;
}

// Threshold-labeled points: x uniform on [0,1], y = 1{x >= 1/2} with labels
// flipped at the noise rate.
inline LabeledDataset threshold_labels(int horizon, double noise, uint64_t seed) {
  if (!(noise >= 0.0 && noise <= 1.0))
    throw std::invalid_argument("threshold_labels: noise must lie in [0,1]");
  LabeledDataset data;
  data.x.resize(horizon);
  data.y.resize(horizon);
  Rng rng = Rng(seed).fork(13);
  for (int t = 0; t < horizon; ++t) {
    data.x[t] = rng.next_unit();
    int label = data.x[t] >= 0.5 ? 1 : 0;
    if (rng.next_unit() < noise) label = 1 - label;
    data.y[t] = label;
  }
  data.validate();
  return data;
}

// Threshold grid of the requested size spanning [0,1].
inline std::vector<double> threshold_grid(int size) {
  if (size < 2) throw std::invalid_argument("threshold_grid: need at least 2 thresholds");
  std::vector<double> grid(size);
  for (int i = 0; i < size; ++i) grid[i] = static_cast<double>(i) / (size - 1);
  return grid;
}

using GeneratedInstance = std::variant<LossInstance, ConstrainedInstance, LabeledDataset>;

inline GeneratedInstance generate_instance(const InstanceSpec& spec) {
  if (spec.horizon < 1) throw std::invalid_argument("generate_instance: horizon must be >= 1");
  if (spec.generator == "birthday_adversarial") return birthday_adversarial(spec.horizon);
  if (spec.generator == "iid_uniform_support")
    return iid_uniform_support(spec.horizon, spec.seed);
  if (spec.generator == "gap_bandit")
    return gap_bandit(spec.horizon, spec.actions, spec.gap);
  if (spec.generator == "constrained_random")
    return constrained_random(spec.horizon, spec.actions, spec.resources, spec.rho, spec.seed);
  if (spec.generator == "threshold_labels")
    return threshold_labels(spec.horizon, spec.noise, spec.seed);
  throw std::invalid_argument("generate_instance: unknown generator " + spec.generator);
}

// ---- trial orchestration ----------------------------------------------------

using AlgorithmFn = std::function<RegretReport(const InstanceSpec&, uint64_t seed)>;

// Registered algorithms. Generators that model i.i.d. inputs redraw the
// instance from the trial seed; fixed multisets come from spec.seed and only
// the permutation varies across trials.
inline const std::map<std::string, AlgorithmFn>& algorithm_registry() {
  static const std::map<std::string, AlgorithmFn> registry = {
      {"birthday",
       [](const InstanceSpec& spec, uint64_t seed) {
         LossInstance instance = spec.generator == "iid_uniform_support"
                                     ? iid_uniform_support(spec.horizon, seed)
                                     : std::get<LossInstance>(generate_instance(spec));
         return run_birthday(instance, seed);
       }},
      {"ftl",
       [](const InstanceSpec& spec, uint64_t seed) {
         LossInstance instance = spec.generator == "iid_uniform_support"
                                     ? iid_uniform_support(spec.horizon, seed)
                                     : std::get<LossInstance>(generate_instance(spec));
         return run_ftl(instance, seed);
       }},
      {"sim_ftl",
       [](const InstanceSpec& spec, uint64_t seed) {
         LossInstance instance = spec.generator == "iid_uniform_support"
                                     ? iid_uniform_support(spec.horizon, seed)
                                     : std::get<LossInstance>(generate_instance(spec));
         return run_sim_delayed(instance, spec.delay, seed);
       }},
      {"sim_constrained",
       [](const InstanceSpec& spec, uint64_t seed) {
         auto instance = std::get<ConstrainedInstance>(generate_instance(spec));
         return run_sim_constrained(instance, spec.delta, seed);
       }},
      {"sse",
       [](const InstanceSpec& spec, uint64_t seed) {
         auto instance = std::get<LossInstance>(generate_instance(spec));
         return run_sse(instance, seed);
       }},
      {"erm",
       [](const InstanceSpec& spec, uint64_t seed) {
         auto data = std::get<LabeledDataset>(generate_instance(spec));
         auto cls = make_threshold_class(threshold_grid(spec.grid));
         return run_random_order_erm(cls, data, seed).report;
       }},
  };
  return registry;
}

struct TrialAggregate {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<RegretReport> reports;  // in seed order
};

inline TrialAggregate aggregate_reports(std::vector<RegretReport> reports) {
  TrialAggregate agg;
  agg.reports = std::move(reports);
  if (agg.reports.empty()) return agg;
  KahanSum sum;
  agg.min = agg.max = agg.reports.front().regret;
  for (const auto& r : agg.reports) {
    sum.add(r.regret);
    agg.min = std::min(agg.min, r.regret);
    agg.max = std::max(agg.max, r.regret);
  }
  agg.mean = sum.value() / static_cast<double>(agg.reports.size());
  if (agg.reports.size() > 1) {
    KahanSum sq;
    for (const auto& r : agg.reports) sq.add((r.regret - agg.mean) * (r.regret - agg.mean));
    agg.stddev = std::sqrt(sq.value() / static_cast<double>(agg.reports.size() - 1));
  }
  return agg;
}

// Independent trials, one per seed, optionally spread over worker threads.
// Results are merged in seed order regardless of completion order.
inline TrialAggregate run_trials(const std::string& algorithm, const InstanceSpec& spec,
                                 std::span<const uint64_t> seeds, int jobs = 1) {
  auto it = algorithm_registry().find(algorithm);
  if (it == algorithm_registry().end())
    throw std::invalid_argument("run_trials: unknown algorithm " + algorithm);
  const AlgorithmFn& fn = it->second;

  std::vector<RegretReport> reports(seeds.size());
  auto run_one = [&](size_t i) {
    try {
      reports[i] = fn(spec, seeds[i]);
      reports[i].seed = seeds[i];
    } catch (const std::exception& e) {
      throw std::runtime_error("trial with seed " + std::to_string(seeds[i]) +
                               " failed: " + e.what());
    }
  };
  if (jobs <= 1 || seeds.size() <= 1) {
    for (size_t i = 0; i < seeds.size(); ++i) run_one(i);
  } else {
    int workers = std::min<int>(jobs, static_cast<int>(seeds.size()));
    std::vector<std::thread> threads;
    std::vector<std::string> errors(workers);
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (size_t i = w; i < seeds.size(); i += workers) run_one(i);
        } catch (const std::exception& e) {
          errors[w] = e.what();
        }
      });
    }
    for (auto& th : threads) th.join();
    for (const auto& err : errors)
      if (!err.empty()) throw std::runtime_error(err);
  }
  return aggregate_reports(std::move(reports));
}

inline std::vector<uint64_t> seed_range(uint64_t count) {
  std::vector<uint64_t> seeds(count);
  for (uint64_t i = 0; i < count; ++i) seeds[i] = i + 1;
  return seeds;
}

// ---- result files -----------------------------------------------------------

inline void write_reports_csv(const std::vector<RegretReport>& reports, int horizon, int actions,
                              const std::string& path, bool append = false) {
  std::ofstream out;
  if (append) {
    out.open(path, std::ios::app);
  } else {
    out.open(path);
    out << "seed,T,k,regret,switches,violation_max,stop_time\n";
  }
  if (!out) throw std::runtime_error("write_reports_csv: cannot write " + path);
  for (const auto& r : reports) {
    out << r.seed << "," << horizon << "," << actions << "," << format_double(r.regret) << ","
        << r.switch_count << "," << format_double(r.violation_max) << ",";
    if (r.stop_time >= 0) out << r.stop_time;
    out << "\n";
  }
}

inline void write_trajectory_csv(const RegretReport& report, const std::string& directory) {
  std::string path = directory + "/trajectory_" + std::to_string(report.seed) + ".csv";
  auto out = detail::open_output(path);
  out << "t,cum_regret\n";
  for (size_t t = 0; t < report.trajectory.size(); ++t)
    out << (t + 1) << "," << format_double(report.trajectory[t]) << "\n";
}

}  // namespace roml
