#pragma once

#include <cmath>
#include <stdexcept>

namespace roml {

// Deviation bound for the mean of s values sampled uniformly without
// replacement: with probability >= 1-delta the sample mean is within
// sqrt(log(2/delta)/s) of the population mean. Natural logarithm.
inline double hoeffding_wor_eps(long samples, double delta) {
  if (samples < 1) throw std::domain_error("hoeffding_wor_eps: samples must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("hoeffding_wor_eps: delta must lie in (0,1)");
  return std::sqrt(std::log(2.0 / delta) / static_cast<double>(samples));
}

// Serfling's refinement: the (1 - (s-1)/T) factor tightens the bound as the
// sample exhausts the population.
inline double serfling_eps(long samples, long population, double delta) {
  if (samples < 1) throw std::domain_error("serfling_eps: samples must be >= 1");
  if (samples > population) throw std::domain_error("serfling_eps: samples exceed population");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("serfling_eps: delta must lie in (0,1)");
  double fraction = 1.0 - static_cast<double>(samples - 1) / static_cast<double>(population);
  return std::sqrt(fraction * std::log(2.0 / delta) / (2.0 * static_cast<double>(samples)));
}

enum class ScheduleKind { delayed, sse, constrained };

// Per-block precision used by the simulation algorithms. All formulas use the
// natural logarithm; base 2 appears only in block counting.
struct PrecisionSchedule {
  ScheduleKind kind;
  double horizon = 0.0;  // T
  int actions = 0;       // k
  int resources = 0;     // m
  double delta = 0.0;

  static PrecisionSchedule delayed(double horizon) {
    check_horizon(horizon);
    return {ScheduleKind::delayed, horizon, 0, 0, 0.0};
  }
  static PrecisionSchedule sse(double horizon, int actions) {
    check_horizon(horizon);
    if (actions < 1) throw std::domain_error("PrecisionSchedule: actions must be >= 1");
    return {ScheduleKind::sse, horizon, actions, 0, 0.0};
  }
  static PrecisionSchedule constrained(double horizon, int actions, int resources, double delta) {
    check_horizon(horizon);
    if (actions < 1 || resources < 1)
      throw std::domain_error("PrecisionSchedule: actions and resources must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
      throw std::domain_error("PrecisionSchedule: delta must lie in (0,1)");
    return {ScheduleKind::constrained, horizon, actions, resources, delta};
  }

 private:
  static void check_horizon(double horizon) {
    if (!(horizon > 1.0)) throw std::domain_error("PrecisionSchedule: horizon must exceed 1");
  }
};

inline double block_eps(const PrecisionSchedule& schedule, int block) {
  if (block < 0) throw std::domain_error("block_eps: block index must be >= 0");
  double log_t = std::log(schedule.horizon);
  double pow2 = std::ldexp(1.0, block);  // 2^block
  switch (schedule.kind) {
    case ScheduleKind::delayed:
      return 2.0 * std::sqrt(log_t / pow2);
    case ScheduleKind::sse:
      return std::sqrt(10.0 * schedule.actions * log_t * log_t * log_t / pow2);
    case ScheduleKind::constrained:
      return std::sqrt(6.0 / pow2 *
                       std::log(schedule.resources * schedule.actions * log_t / schedule.delta));
  }
  throw std::logic_error("block_eps: unreachable");
}

}  // namespace roml
