#pragma once

#include <cstdint>
#include <vector>

namespace roml {

// Per-block trace left behind by the simulation algorithms so tests can audit
// precision schedules, pools and played frequencies without re-running.
struct BlockDiag {
  int index = 0;
  double eps = 0.0;
  double rho = 0.0;        // shrunk per-round budget (constrained only)
  bool forfeited = false;  // block skipped by the i* cutoff (constrained only)
  long pool_size = 0;
  int start_round = 0;
  int test_len = 0;
  std::vector<double> pool_mean;  // mean of the iid-ified distribution, layout per module
  std::vector<double> play_freq;  // frequency vector used on real rounds
};

struct RegretReport {
  double cumulative_loss = 0.0;  // constrained: cumulative reward up to the stop time
  double benchmark = 0.0;        // constrained: T * OPT_LP
  double regret = 0.0;
  std::vector<double> trajectory;  // per-round cumulative regret
  long switch_count = 0;           // switching only
  double violation_max = 0.0;      // constrained only
  long stop_time = -1;             // -1 = never stopped
  uint64_t seed = 0;
  long interactions = 0;           // real environment plays
  std::vector<BlockDiag> blocks;
};

}  // namespace roml
