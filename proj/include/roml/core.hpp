#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roml/rng.hpp"

namespace roml {

// Tolerances for mixed-action validation: repeated normalization drifts the
// sum away from 1 and can leave tiny negative entries.
inline constexpr double kMixtureSumTol = 1e-9;
inline constexpr double kMixtureNegTol = -1e-12;

// The adversary's multiset of loss vectors. Row order carries no meaning;
// streams always go through a permutation.
struct LossInstance {
  int horizon = 0;  // T
  int actions = 0;  // k
  std::vector<double> losses;  // row-major horizon x actions, entries in [0,1]

  double at(int t, int a) const { return losses[static_cast<size_t>(t) * actions + a]; }
  std::span<const double> row(int t) const {
    return {losses.data() + static_cast<size_t>(t) * actions, static_cast<size_t>(actions)};
  }

  void validate() const {
    if (horizon < 1 || actions < 1)
      throw std::invalid_argument("LossInstance: need horizon >= 1 and actions >= 1");
    if (losses.size() != static_cast<size_t>(horizon) * actions)
      throw std::invalid_argument("LossInstance: losses size does not match horizon*actions");
    for (double v : losses)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("LossInstance: loss entries must lie in [0,1]");
  }
};

struct Permutation {
  std::vector<int> map;  // map[t] = instance row played at round t+1 (0-based)
  uint64_t seed = 0;

  static Permutation make(int n, uint64_t seed) {
    Permutation p;
    p.seed = seed;
    p.map.resize(n);
    for (int i = 0; i < n; ++i) p.map[i] = i;
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {  // Fisher-Yates
      int j = static_cast<int>(rng.next_below(static_cast<uint64_t>(i) + 1));
      std::swap(p.map[i], p.map[j]);
    }
    return p;
  }
};

enum class FeedbackKind { full, delayed, bandit };

// Checks a mixture sums to 1 within tolerance and clamps float-noise
// negatives. Returns the cleaned copy.
inline std::vector<double> validate_mixture(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  double sum = 0.0;
  for (double& v : out) {
    if (v < 0.0) {
      if (v < kMixtureNegTol)
        throw std::invalid_argument("mixture entry is negative beyond tolerance");
      v = 0.0;
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kMixtureSumTol)
    throw std::invalid_argument("mixture entries must sum to 1 within 1e-9");
  return out;
}

struct StepResult {
  double incurred_loss = 0.0;
  // Loss vectors whose reveal time is this round. Empty under bandit feedback.
  std::vector<std::vector<double>> revealed;
};

// Permutation-driven round sequence with a feedback channel. Single-owner
// mutable state: one trial, one stream, nothing shared.
class RoundStream {
 public:
  RoundStream(const LossInstance& instance, uint64_t seed, FeedbackKind feedback, int delay)
      : instance_(&instance),
        permutation_(Permutation::make(instance.horizon, Rng(seed).fork(0).seed())),
        feedback_(feedback),
        delay_(delay),
        bandit_rng_(Rng(seed).fork(1)) {
    instance.validate();
    if (feedback == FeedbackKind::delayed) {
      if (delay < 0) throw std::invalid_argument("RoundStream: delay must be nonnegative");
      if (delay >= instance.horizon)
        throw std::invalid_argument("RoundStream: delay >= horizon, feedback would never arrive");
    } else if (delay != 0) {
      throw std::invalid_argument("RoundStream: delay only valid with delayed feedback");
    }
  }

  // Play a mixed action. Full/delayed feedback incurs the expected loss
  // <l_t, x>; bandit feedback samples a pure arm from x on a dedicated
  // substream (bandit losses must be realized).
  StepResult step(std::span<const double> mixed) {
    auto x = validate_mixture(mixed);
    if (static_cast<int>(x.size()) != instance_->actions)
      throw std::invalid_argument("RoundStream::step: mixture has wrong arity");
    if (feedback_ == FeedbackKind::bandit)
      return step(sample_index(x, bandit_rng_));
    auto row = current_row();
    double loss = 0.0;
    for (int a = 0; a < instance_->actions; ++a) loss += row[a] * x[a];
    return advance(loss);
  }

  // Play a pure action.
  StepResult step(int action) {
    if (action < 0 || action >= instance_->actions)
      throw std::invalid_argument("RoundStream::step: action out of range");
    double loss = current_row()[action];
    return advance(loss);
  }

  int cursor() const { return cursor_; }          // next round, 1-based
  bool done() const { return cursor_ > instance_->horizon; }
  int horizon() const { return instance_->horizon; }
  int actions() const { return instance_->actions; }
  long interaction_count() const { return interactions_; }
  FeedbackKind feedback() const { return feedback_; }
  int delay() const { return delay_; }
  const Permutation& permutation() const { return permutation_; }

 private:
  std::span<const double> current_row() const {
    if (done()) throw std::logic_error("RoundStream: stepped past the horizon");
    return instance_->row(permutation_.map[cursor_ - 1]);
  }

  StepResult advance(double loss) {
    StepResult result;
    result.incurred_loss = loss;
    int t = cursor_;
    switch (feedback_) {
      case FeedbackKind::full:
        result.revealed.emplace_back(current_row().begin(), current_row().end());
        break;
      case FeedbackKind::delayed: {
        auto row = current_row();
        pending_.push_back({t + delay_, {row.begin(), row.end()}});
        while (!pending_.empty() && pending_.front().reveal_time == t) {
          result.revealed.push_back(std::move(pending_.front().loss));
          pending_.pop_front();
        }
        break;
      }
      case FeedbackKind::bandit:
        break;  // only the incurred scalar is observed
    }
    ++cursor_;
    ++interactions_;
    return result;
  }

  struct Pending {
    int reveal_time;
    std::vector<double> loss;
  };

  const LossInstance* instance_;
  Permutation permutation_;
  FeedbackKind feedback_;
  int delay_;
  Rng bandit_rng_;
  int cursor_ = 1;
  long interactions_ = 0;
  std::deque<Pending> pending_;
};

inline RoundStream make_stream(const LossInstance& instance, uint64_t seed,
                               FeedbackKind feedback, int delay = 0) {
  return RoundStream(instance, seed, feedback, delay);
}

// Hindsight-best fixed action on the multiset; permutation-invariant.
inline std::pair<int, double> best_fixed_action(const LossInstance& instance) {
  int best = 0;
  double best_total = 0.0;
  for (int a = 0; a < instance.actions; ++a) {
    double total = 0.0;
    for (int t = 0; t < instance.horizon; ++t) total += instance.at(t, a);
    if (a == 0 || total < best_total) {
      best = a;
      best_total = total;
    }
  }
  return {best, best_total};
}

}  // namespace roml
