#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "roml/concentration.hpp"
#include "roml/core.hpp"
#include "roml/experts.hpp"
#include "roml/report.hpp"
#include "roml/rng.hpp"

namespace roml {

// Multiset of loss vectors whose feedback has arrived, buffer rounds
// excluded. Uniform sampling over it is the iid-ified past distribution D_i.
struct ObservedPool {
  int actions = 0;
  std::vector<std::vector<double>> entries;

  explicit ObservedPool(int actions_ = 0) : actions(actions_) {}

  void add(std::span<const double> loss) { entries.emplace_back(loss.begin(), loss.end()); }
  long size() const { return static_cast<long>(entries.size()); }

  std::vector<double> mean() const {
    std::vector<double> out(actions, 0.0);
    for (const auto& e : entries)
      for (int a = 0; a < actions; ++a) out[a] += e[a];
    for (int a = 0; a < actions; ++a) out[a] /= static_cast<double>(entries.size());
    return out;
  }
};

// Geometric block schedule with a d-round buffer after each block. Block 0 is
// the single arbitrary play at round 1; blocks and buffers then tile [2, T],
// the last block truncated at T.
struct BlockPlan {
  int index = 0;
  long train_length = 0;  // 2^index, unchanged even when the block truncates
  int start = 0;          // t_i = 2^i + i*d
  int test_len = 0;
  int buffer_len = 0;
};

inline std::vector<BlockPlan> plan_blocks(int horizon, int delay) {
  if (horizon < 1) throw std::invalid_argument("plan_blocks: horizon must be >= 1");
  if (delay < 0) throw std::invalid_argument("plan_blocks: delay must be nonnegative");
  std::vector<BlockPlan> plan;
  for (int i = 0;; ++i) {
    long start = (1L << i) + static_cast<long>(i) * delay;
    if (start > horizon) break;
    BlockPlan block;
    block.index = i;
    block.train_length = 1L << i;
    block.start = static_cast<int>(start);
    block.test_len = static_cast<int>(std::min<long>(1L << i, horizon - start + 1));
    long after = start + block.test_len;
    block.buffer_len = static_cast<int>(std::max<long>(
        0, std::min<long>(delay, horizon - after + 1)));
    plan.push_back(block);
  }
  return plan;
}

// Trains a fresh full-feedback routine on `train_length` i.i.d. samples drawn
// uniformly with replacement from the pool, and returns its play counts.
// Purely simulated: no environment interaction happens here.
template <class Routine>
std::vector<long> train_counts(const ObservedPool& pool, long train_length, Routine& routine,
                               Rng& rng) {
  if (pool.size() == 0)
    throw std::invalid_argument("train_counts: pool is empty, nothing to iid-ify");
  if (train_length < 1) throw std::invalid_argument("train_counts: train_length must be >= 1");
  routine.reset(pool.actions);
  std::vector<long> counts(pool.actions, 0);
  for (long s = 0; s < train_length; ++s) {
    ++counts[routine.choose()];
    const auto& sample = pool.entries[rng.next_below(static_cast<uint64_t>(pool.size()))];
    routine.observe(sample);
  }
  return counts;
}

// Simulation for prediction with delayed feedback: per block, train the
// stochastic routine on the iid-ified pool, then replay its empirical
// frequencies on real rounds. Test rounds sample a pure arm from the
// frequency vector; buffer rounds play the vector itself.
template <class Routine = Ftl>
RegretReport run_sim_delayed(const LossInstance& instance, int delay, uint64_t seed,
                             Routine routine = Routine()) {
  instance.validate();
  const int T = instance.horizon;
  const int k = instance.actions;
  RoundStream stream = make_stream(instance, seed, FeedbackKind::delayed, delay);
  auto plan = plan_blocks(T, delay);
  PrecisionSchedule schedule =
      T > 1 ? PrecisionSchedule::delayed(static_cast<double>(T))
            : PrecisionSchedule::delayed(2.0);  // lone-round run, eps is vacuous

  // role[t]: 1 = test round (its loss joins the pool when revealed), 2 = buffer
  std::vector<uint8_t> role(static_cast<size_t>(T) + 1, 0);
  for (const auto& block : plan) {
    for (int t = block.start; t < block.start + block.test_len; ++t) role[t] = 1;
    for (int t = block.start + block.test_len;
         t < block.start + block.test_len + block.buffer_len; ++t)
      role[t] = 2;
  }

  ObservedPool pool(k);
  Rng play_rng = Rng(seed).fork(2);
  RegretReport report;
  report.seed = seed;
  report.trajectory.reserve(T);
  auto [best, benchmark_total] = best_fixed_action(instance);
  double benchmark_per_round = benchmark_total / T;

  std::vector<double> freq(k, 0.0);
  freq[0] = 1.0;  // round 1 plays the first action

  auto play_round = [&](int t, bool sample_pure) {
    StepResult res = sample_pure ? stream.step(sample_index(freq, play_rng))
                                 : stream.step(std::span<const double>(freq));
    report.cumulative_loss += res.incurred_loss;
    report.trajectory.push_back(report.cumulative_loss - benchmark_per_round * t);
    for (auto& revealed : res.revealed) {
      int source = t - delay;
      if (source >= 1 && role[source] == 1) pool.add(revealed);
    }
  };

  for (const auto& block : plan) {
    BlockDiag diag;
    diag.index = block.index;
    diag.eps = block_eps(schedule, block.index);
    diag.start_round = block.start;
    diag.test_len = block.test_len;
    diag.pool_size = pool.size();
    if (block.index >= 1) {
      Rng train_rng = Rng(seed).fork(1000 + static_cast<uint64_t>(block.index));
      auto counts = train_counts(pool, block.train_length, routine, train_rng);
      diag.pool_mean = pool.mean();
      for (int a = 0; a < k; ++a)
        freq[a] = static_cast<double>(counts[a]) / static_cast<double>(block.train_length);
    }
    diag.play_freq = freq;
    report.blocks.push_back(std::move(diag));

    for (int t = block.start; t < block.start + block.test_len; ++t)
      play_round(t, /*sample_pure=*/block.index >= 1);
    for (int t = block.start + block.test_len;
         t < block.start + block.test_len + block.buffer_len; ++t)
      play_round(t, /*sample_pure=*/false);
  }

  report.benchmark = benchmark_total;
  report.regret = report.cumulative_loss - benchmark_total;
  report.interactions = stream.interaction_count();
  return report;
}

}  // namespace roml
