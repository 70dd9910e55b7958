#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "roml/core.hpp"
#include "roml/report.hpp"
#include "roml/rng.hpp"

namespace roml {

struct FtlState {
  std::vector<double> cumulative;  // summed observed loss per action
  long rounds_seen = 0;

  explicit FtlState(int actions = 0) : cumulative(actions, 0.0) {}

  void observe(std::span<const double> loss) {
    for (size_t a = 0; a < cumulative.size(); ++a) cumulative[a] += loss[a];
    ++rounds_seen;
  }
};

// Argmin of cumulative loss; ties go to the lowest action index.
inline int ftl_choose(const FtlState& state) {
  int best = 0;
  for (int a = 1; a < static_cast<int>(state.cumulative.size()); ++a)
    if (state.cumulative[a] < state.cumulative[best]) best = a;
  return best;
}

// Follow-The-Leader as a pluggable full-feedback stochastic routine.
struct Ftl {
  FtlState state;
  void reset(int actions) { state = FtlState(actions); }
  int choose() const { return ftl_choose(state); }
  void observe(std::span<const double> loss) { state.observe(loss); }
};

inline constexpr double kSupportTol = 1e-9;

// Birthday-Test: play arm 0 while testing whether its losses look like fresh
// i.i.d. draws from {i/T}; once a duplicate or an off-grid value appears,
// restart with FTL from scratch on post-stop observations only.
struct BirthdayState {
  int horizon = 0;
  std::unordered_set<long> seen_keys;  // round(loss * T) for observed arm-0 losses
  bool stopped = false;
  long stop_time = -1;  // tau
  FtlState inner;       // fresh at tau

  explicit BirthdayState(int horizon_, int actions = 2)
      : horizon(horizon_), inner(actions) {}
};

// Processes the loss vector observed at `round` (1-based) and returns the
// action to play at round+1.
inline int birthday_step(BirthdayState& state, std::span<const double> observed, long round) {
  if (!state.stopped) {
    double scaled = observed[0] * state.horizon;
    long key = std::lround(scaled);
    bool on_grid = key >= 1 && std::abs(scaled - static_cast<double>(key)) <= kSupportTol;
    if (!on_grid || state.seen_keys.count(key)) {
      state.stopped = true;
      state.stop_time = round;
      state.inner = FtlState(static_cast<int>(observed.size()));
    } else {
      state.seen_keys.insert(key);
    }
  } else if (round > state.stop_time) {
    state.inner.observe(observed);
  }
  return state.stopped ? ftl_choose(state.inner) : 0;
}

// E[tau] for i.i.d. uniform draws on a support of size T, where tau is the
// first duplicate draw: sum_{t=0}^{T} T!/((T-t)! T^t), accumulated as running
// products of survival probabilities so nothing overflows.
inline double expected_tau_exact(long horizon) {
  if (horizon < 1) throw std::domain_error("expected_tau_exact: horizon must be >= 1");
  if (horizon > 1000000) throw std::domain_error("expected_tau_exact: horizon above 1e6");
  double sum = 0.0;
  double term = 1.0;  // P(tau > t)
  for (long t = 0; t <= horizon; ++t) {
    sum += term;
    term *= static_cast<double>(horizon - t) / static_cast<double>(horizon);
  }
  return sum;
}

// One Monte-Carlo draw of tau: uniform i.i.d. samples on {1..T} until the
// first repeat.
inline long simulate_tau(long horizon, Rng& rng) {
  std::vector<char> seen(static_cast<size_t>(horizon), 0);
  for (long t = 1;; ++t) {
    auto v = rng.next_below(static_cast<uint64_t>(horizon));
    if (seen[v]) return t;
    seen[v] = 1;
  }
}

// Full-feedback prediction-with-experts run of Birthday-Test.
inline RegretReport run_birthday(const LossInstance& instance, uint64_t seed) {
  RoundStream stream = make_stream(instance, seed, FeedbackKind::full);
  BirthdayState state(instance.horizon, instance.actions);
  RegretReport report;
  report.seed = seed;
  report.trajectory.reserve(instance.horizon);
  auto [best, benchmark_total] = best_fixed_action(instance);
  double benchmark_per_round = benchmark_total / instance.horizon;
  int action = 0;
  for (int t = 1; t <= instance.horizon; ++t) {
    StepResult res = stream.step(action);
    report.cumulative_loss += res.incurred_loss;
    report.trajectory.push_back(report.cumulative_loss - benchmark_per_round * t);
    action = birthday_step(state, res.revealed.front(), t);
  }
  report.benchmark = benchmark_total;
  report.regret = report.cumulative_loss - benchmark_total;
  report.stop_time = state.stop_time;
  report.interactions = stream.interaction_count();
  return report;
}

// Plain FTL under full feedback, as the stochastic baseline.
inline RegretReport run_ftl(const LossInstance& instance, uint64_t seed) {
  RoundStream stream = make_stream(instance, seed, FeedbackKind::full);
  Ftl ftl;
  ftl.reset(instance.actions);
  RegretReport report;
  report.seed = seed;
  report.trajectory.reserve(instance.horizon);
  auto [best, benchmark_total] = best_fixed_action(instance);
  double benchmark_per_round = benchmark_total / instance.horizon;
  for (int t = 1; t <= instance.horizon; ++t) {
    StepResult res = stream.step(ftl.choose());
    report.cumulative_loss += res.incurred_loss;
    report.trajectory.push_back(report.cumulative_loss - benchmark_per_round * t);
    ftl.observe(res.revealed.front());
  }
  report.benchmark = benchmark_total;
  report.regret = report.cumulative_loss - benchmark_total;
  report.interactions = stream.interaction_count();
  return report;
}

}  // namespace roml
