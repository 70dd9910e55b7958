#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "roml/concentration.hpp"
#include "roml/core.hpp"
#include "roml/report.hpp"

namespace roml {

struct SseState {
  std::vector<int> active;        // surviving actions, ascending
  std::vector<long> plays;        // n(a)
  std::vector<double> mean_loss;  // running mean of observed losses per action
  int block = 0;
  long switches = 0;
  int last_action = -1;

  explicit SseState(int actions = 0)
      : plays(actions, 0), mean_loss(actions, 0.0) {
    active.resize(actions);
    for (int a = 0; a < actions; ++a) active[a] = a;
  }
};

// Drops every action whose lower confidence bound sits above some action's
// upper bound. The empirical minimizer fails its own inequality, so the
// active set never empties.
inline std::vector<int> eliminate(const SseState& state, double eps) {
  if (state.active.empty()) throw std::invalid_argument("eliminate: active set is empty");
  double floor = 0.0;
  bool first = true;
  for (int a : state.active) {
    double bound = state.mean_loss[a] + eps;
    if (first || bound < floor) floor = bound, first = false;
  }
  std::vector<int> kept;
  for (int a : state.active)
    if (!(state.mean_loss[a] - eps > floor)) kept.push_back(a);
  return kept;
}

// Optional audit trail: every action played plus the final algorithm state.
struct SseTrace {
  std::vector<int> actions;
  SseState final_state;
};

// simulation-successive-elimination: round-robin over the active set in
// geometrically growing blocks, eliminating at block boundaries only. Bandit
// feedback, switching cost counted against consecutive distinct plays.
inline RegretReport run_sse(const LossInstance& instance, uint64_t seed,
                            SseTrace* trace = nullptr) {
  instance.validate();
  const int T = instance.horizon;
  const int k = instance.actions;
  RoundStream stream = make_stream(instance, seed, FeedbackKind::bandit);

  SseState state(k);
  RegretReport report;
  report.seed = seed;
  report.trajectory.reserve(T);
  auto [best, benchmark_total] = best_fixed_action(instance);
  double benchmark_per_round = benchmark_total / T;

  int t = 0;  // rounds played
  auto play = [&](int action) {
    StepResult res = stream.step(action);
    ++t;
    if (trace) trace->actions.push_back(action);
    ++state.plays[action];
    state.mean_loss[action] +=
        (res.incurred_loss - state.mean_loss[action]) / static_cast<double>(state.plays[action]);
    if (state.last_action >= 0 && action != state.last_action) ++state.switches;
    state.last_action = action;
    report.cumulative_loss += res.incurred_loss;
    report.trajectory.push_back(report.cumulative_loss + state.switches -
                                benchmark_per_round * t);
  };

  int init_block = 0;  // i_0 = ceil(log2 k)
  while ((1 << init_block) < k) ++init_block;
  for (int s = 1; s <= (1 << init_block) && t < T; ++s) play((s - 1) % k);

  if (t < T) {
    PrecisionSchedule schedule = PrecisionSchedule::sse(std::max(2.0, static_cast<double>(T)), k);
    int last_block = 0;
    while ((1L << last_block) < T) ++last_block;  // ceil(log2 T)
    for (int i = init_block; i <= last_block && t < T; ++i) {
      state.block = i;
      double eps = block_eps(schedule, i);
      long block_end = std::min<long>((1L << (i + 1)) - 1, T);
      long per_action = (1L << i) / static_cast<long>(state.active.size());
      for (int a : state.active) {
        for (long s = 0; s < per_action && t < block_end; ++s) play(a);
        if (t >= block_end) break;
      }
      while (t < block_end) play(state.active.back());  // remainder to the last active action

      BlockDiag diag;
      diag.index = i;
      diag.eps = eps;
      diag.start_round = static_cast<int>(std::min<long>(1L << i, T));
      diag.test_len = static_cast<int>(state.active.size());  // active count before elimination
      state.active = eliminate(state, eps);
      diag.pool_size = static_cast<long>(state.active.size());
      report.blocks.push_back(std::move(diag));
    }
  }

  report.benchmark = benchmark_total;
  report.switch_count = state.switches;
  report.regret = report.cumulative_loss + state.switches - benchmark_total;
  report.interactions = stream.interaction_count();
  if (trace) trace->final_state = state;
  return report;
}

}  // namespace roml
