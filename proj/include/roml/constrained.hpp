#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "roml/concentration.hpp"
#include "roml/core.hpp"
#include "roml/report.hpp"
#include "roml/rng.hpp"

namespace roml {

// Per-round (reward, m cost vectors) tuples plus a shared budget B. One
// designated null action has zero cost on every resource, so the budget can
// always be respected by skipping turns.
struct ConstrainedInstance {
  int horizon = 0;    // T
  int actions = 0;    // k, null action included
  int resources = 0;  // m
  int null_action = 0;
  double budget = 0.0;  // B
  std::vector<double> rewards;  // horizon x actions, row-major
  std::vector<double> costs;    // horizon x resources x actions

  double rho() const { return budget / horizon; }

  double reward_at(int t, int a) const {
    return rewards[static_cast<size_t>(t) * actions + a];
  }
  std::span<const double> reward_row(int t) const {
    return {rewards.data() + static_cast<size_t>(t) * actions, static_cast<size_t>(actions)};
  }
  double cost_at(int t, int j, int a) const {
    return costs[(static_cast<size_t>(t) * resources + j) * actions + a];
  }
  // contiguous resources x actions block for round t
  std::span<const double> cost_block(int t) const {
    return {costs.data() + static_cast<size_t>(t) * resources * actions,
            static_cast<size_t>(resources) * actions};
  }

  void validate() const {
    if (horizon < 1 || actions < 1 || resources < 1)
      throw std::invalid_argument("ConstrainedInstance: need horizon, actions, resources >= 1");
    if (null_action < 0 || null_action >= actions)
      throw std::invalid_argument("ConstrainedInstance: null action index out of range");
    if (rewards.size() != static_cast<size_t>(horizon) * actions ||
        costs.size() != static_cast<size_t>(horizon) * resources * actions)
      throw std::invalid_argument("ConstrainedInstance: matrix sizes do not match dimensions");
    double rho_value = rho();
    if (!(rho_value > 0.0 && rho_value <= 1.0))
      throw std::invalid_argument("ConstrainedInstance: per-round budget must lie in (0,1]");
    for (double v : rewards)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("ConstrainedInstance: rewards must lie in [0,1]");
    for (double v : costs)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("ConstrainedInstance: costs must lie in [0,1]");
    for (int t = 0; t < horizon; ++t)
      for (int j = 0; j < resources; ++j)
        if (cost_at(t, j, null_action) != 0.0)
          throw std::invalid_argument("ConstrainedInstance: null action must cost exactly 0");
  }

  std::vector<double> mean_rewards() const {
    std::vector<double> out(actions, 0.0);
    for (int t = 0; t < horizon; ++t)
      for (int a = 0; a < actions; ++a) out[a] += reward_at(t, a);
    for (auto& v : out) v /= horizon;
    return out;
  }
  std::vector<std::vector<double>> mean_costs() const {
    std::vector<std::vector<double>> out(resources, std::vector<double>(actions, 0.0));
    for (int t = 0; t < horizon; ++t)
      for (int j = 0; j < resources; ++j)
        for (int a = 0; a < actions; ++a) out[j][a] += cost_at(t, j, a);
    for (auto& row : out)
      for (auto& v : row) v /= horizon;
    return out;
  }
};

struct LpSolution {
  std::vector<double> x;  // optimal mixture over actions
  double value = 0.0;
  std::vector<double> tightness;  // rho - <mean cost_j, x> per resource
};

namespace detail {

inline constexpr double kPivotTol = 1e-12;
inline constexpr double kReducedCostTol = 1e-9;

// Primal simplex with Bland's pivot rule on a canonical tableau.
// Maximizes cost.z subject to the tableau's equality system, z >= 0.
inline void simplex_phase(std::vector<std::vector<double>>& tab, std::vector<int>& basis,
                          const std::vector<double>& cost, int banned_column) {
  const int rows = static_cast<int>(tab.size());
  const int nvars = static_cast<int>(cost.size());
  std::vector<char> in_basis(nvars, 0);
  for (int iter = 0; iter < 20000; ++iter) {
    std::fill(in_basis.begin(), in_basis.end(), 0);
    for (int i = 0; i < rows; ++i) in_basis[basis[i]] = 1;

    int entering = -1;
    for (int j = 0; j < nvars; ++j) {  // Bland: smallest improving index
      if (j == banned_column || in_basis[j]) continue;
      double rc = cost[j];
      for (int i = 0; i < rows; ++i) rc -= cost[basis[i]] * tab[i][j];
      if (rc > kReducedCostTol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return;  // optimal

    int leave = -1;
    double best_ratio = 0.0;
    bool saw_positive = false;
    for (int i = 0; i < rows; ++i) {
      if (tab[i][entering] <= 0.0) continue;
      saw_positive = true;
      if (tab[i][entering] <= kPivotTol) continue;
      double ratio = tab[i][nvars] / tab[i][entering];
      if (leave < 0 || ratio < best_ratio - kPivotTol ||
          (std::abs(ratio - best_ratio) <= kPivotTol && basis[i] < basis[leave]))
        leave = i, best_ratio = ratio;
    }
    if (leave < 0) {
      if (saw_positive)
        throw std::runtime_error("solve_opt_lp: persistent sub-1e-12 pivots, degenerate LP");
      throw std::runtime_error("solve_opt_lp: unbounded phase, malformed input");
    }

    double pivot = tab[leave][entering];
    for (int j = 0; j <= nvars; ++j) tab[leave][j] /= pivot;
    for (int i = 0; i < rows; ++i) {
      if (i == leave) continue;
      double factor = tab[i][entering];
      if (factor == 0.0) continue;
      for (int j = 0; j <= nvars; ++j) tab[i][j] -= factor * tab[leave][j];
    }
    basis[leave] = entering;
  }
  throw std::runtime_error("solve_opt_lp: simplex iteration limit reached");
}

}  // namespace detail

// Exact optimum of  max <reward, x>  s.t.  x in simplex,  <cost_j, x> <= rho.
// Two-phase dense simplex: one artificial variable covers the simplex row,
// slacks cover the resource rows.
inline LpSolution solve_opt_lp(std::span<const double> mean_reward,
                               const std::vector<std::vector<double>>& mean_costs, double rho) {
  const int k = static_cast<int>(mean_reward.size());
  const int m = static_cast<int>(mean_costs.size());
  if (k < 1) throw std::invalid_argument("solve_opt_lp: need at least one action");
  if (!(rho > 0.0)) throw std::invalid_argument("solve_opt_lp: rho must be positive");
  for (const auto& row : mean_costs)
    if (static_cast<int>(row.size()) != k)
      throw std::invalid_argument("solve_opt_lp: cost row arity mismatch");

  const int rows = m + 1;
  const int art = k + m;        // artificial variable index
  const int nvars = k + m + 1;  // x, slacks, artificial
  std::vector<std::vector<double>> tab(rows, std::vector<double>(nvars + 1, 0.0));
  for (int a = 0; a < k; ++a) tab[0][a] = 1.0;
  tab[0][art] = 1.0;
  tab[0][nvars] = 1.0;
  for (int j = 0; j < m; ++j) {
    for (int a = 0; a < k; ++a) tab[j + 1][a] = mean_costs[j][a];
    tab[j + 1][k + j] = 1.0;
    tab[j + 1][nvars] = rho;
  }
  std::vector<int> basis(rows);
  basis[0] = art;
  for (int j = 0; j < m; ++j) basis[j + 1] = k + j;

  std::vector<double> phase1(nvars, 0.0);
  phase1[art] = -1.0;
  detail::simplex_phase(tab, basis, phase1, /*banned_column=*/-1);
  for (int i = 0; i < rows; ++i) {
    if (basis[i] != art) continue;
    if (tab[i][nvars] > 1e-9)
      throw std::runtime_error("solve_opt_lp: infeasible, no action satisfies the budget");
    for (int j = 0; j < nvars; ++j) {  // pivot the zero-level artificial out
      if (j == art || std::abs(tab[i][j]) <= detail::kPivotTol) continue;
      double pivot = tab[i][j];
      for (int c = 0; c <= nvars; ++c) tab[i][c] /= pivot;
      for (int r = 0; r < rows; ++r) {
        if (r == i) continue;
        double factor = tab[r][j];
        if (factor == 0.0) continue;
        for (int c = 0; c <= nvars; ++c) tab[r][c] -= factor * tab[i][c];
      }
      basis[i] = j;
      break;
    }
  }

  std::vector<double> phase2(nvars, 0.0);
  for (int a = 0; a < k; ++a) phase2[a] = mean_reward[a];
  detail::simplex_phase(tab, basis, phase2, /*banned_column=*/art);

  LpSolution sol;
  sol.x.assign(k, 0.0);
  for (int i = 0; i < rows; ++i)
    if (basis[i] < k) sol.x[basis[i]] = std::max(0.0, tab[i][nvars]);
  for (int a = 0; a < k; ++a) sol.value += mean_reward[a] * sol.x[a];
  sol.tightness.resize(m);
  for (int j = 0; j < m; ++j) {
    double used = 0.0;
    for (int a = 0; a < k; ++a) used += mean_costs[j][a] * sol.x[a];
    sol.tightness[j] = rho - used;
  }
  return sol;
}

// Stochastic routine for the constrained problem: multiplicative weights on
// the Lagrangian payoff r - sum_j lambda_j c_j, projected gradient ascent on
// the duals, and a hard switch to the null action once the simulated budget
// could be breached by a worst-case round.
class PrimalDualState {
 public:
  PrimalDualState(int actions, int resources, int null_action, long horizon, double rho_prime)
      : k_(actions),
        m_(resources),
        null_(null_action),
        horizon_(horizon),
        rho_(rho_prime),
        log_w_(actions, 0.0),
        lambda_(resources, 0.0),
        sim_cost_(resources, 0.0) {
    if (horizon < 1) throw std::invalid_argument("PrimalDualState: horizon must be >= 1");
    if (!(rho_prime > 0.0)) throw std::invalid_argument("PrimalDualState: budget must be positive");
    eta_primal_ = std::sqrt(std::log(static_cast<double>(actions)) / static_cast<double>(horizon));
    eta_dual_ = 1.0 / std::sqrt(static_cast<double>(horizon));
  }

  std::vector<double> mixture() const {
    std::vector<double> x(k_, 0.0);
    if (stopped_) {
      x[null_] = 1.0;
      return x;
    }
    double peak = *std::max_element(log_w_.begin(), log_w_.end());
    double sum = 0.0;
    for (int a = 0; a < k_; ++a) sum += (x[a] = std::exp(log_w_[a] - peak));
    for (int a = 0; a < k_; ++a) x[a] /= sum;
    return x;
  }

  // Play-then-update on one observed (reward, costs) tuple; returns the
  // mixture that was played.
  std::vector<double> step(std::span<const double> reward, std::span<const double> cost_block) {
    if (!stopped_) {
      for (int j = 0; j < m_; ++j)
        if (sim_cost_[j] + 1.0 > rho_ * static_cast<double>(horizon_)) {
          stopped_ = true;
          break;
        }
    }
    std::vector<double> x = mixture();
    for (int j = 0; j < m_; ++j) {
      double cost_j = 0.0;
      for (int a = 0; a < k_; ++a) cost_j += cost_block[static_cast<size_t>(j) * k_ + a] * x[a];
      sim_cost_[j] += cost_j;
      if (!stopped_)
        lambda_[j] = std::clamp(lambda_[j] + eta_dual_ * (cost_j - rho_), 0.0, 1.0 / rho_);
    }
    if (!stopped_) {
      for (int a = 0; a < k_; ++a) {
        double payoff = reward[a];
        for (int j = 0; j < m_; ++j) payoff -= lambda_[j] * cost_block[static_cast<size_t>(j) * k_ + a];
        log_w_[a] += eta_primal_ * payoff;
      }
    }
    return x;
  }

  bool stopped() const { return stopped_; }
  const std::vector<double>& duals() const { return lambda_; }
  const std::vector<double>& simulated_cost() const { return sim_cost_; }

 private:
  int k_, m_, null_;
  long horizon_;
  double rho_;
  double eta_primal_, eta_dual_;
  std::vector<double> log_w_;
  std::vector<double> lambda_;
  std::vector<double> sim_cost_;
  bool stopped_ = false;
};

// Simulation for online learning with long-term constraints. Each block
// trains the primal-dual routine on the iid-ified past with a shrunk budget
// rho - 2 eps_i; blocks too early for the shrunk budget to stay above rho/2
// are forfeited to the null action. A hard guard keeps every realized prefix
// within B: when any resource could overflow on a worst-case round, the run
// switches to the null action for good.
inline RegretReport run_sim_constrained(const ConstrainedInstance& instance, double delta,
                                        uint64_t seed) {
  instance.validate();
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("run_sim_constrained: delta must lie in (0,1)");
  const int T = instance.horizon;
  const int k = instance.actions;
  const int m = instance.resources;
  const double rho = instance.rho();

  LpSolution opt = solve_opt_lp(instance.mean_rewards(), instance.mean_costs(), rho);
  Permutation perm = Permutation::make(T, Rng(seed).fork(0).seed());
  PrecisionSchedule schedule =
      PrecisionSchedule::constrained(std::max(2.0, static_cast<double>(T)), k, m, delta);

  RegretReport report;
  report.seed = seed;
  report.benchmark = static_cast<double>(T) * opt.value;
  report.trajectory.reserve(T);

  std::vector<int> pool;  // observed tuple row ids
  pool.reserve(T);
  std::vector<double> consumed(m, 0.0);
  std::vector<double> null_mix(k, 0.0);
  null_mix[instance.null_action] = 1.0;
  bool stopped = false;

  double reward_sum = 0.0;
  auto play_round = [&](int t, const std::vector<double>& mix) {
    if (!stopped) {
      for (int j = 0; j < m; ++j)
        if (consumed[j] + 1.0 > instance.budget) {
          stopped = true;
          report.stop_time = t;
          break;
        }
    }
    const std::vector<double>& x = stopped ? null_mix : mix;
    int row = perm.map[t - 1];
    if (!stopped || report.stop_time == t) {  // rewards count up to the stop time only
      double r = 0.0;
      for (int a = 0; a < k; ++a) r += instance.reward_at(row, a) * x[a];
      reward_sum += r;
    }
    for (int j = 0; j < m; ++j) {
      double c = 0.0;
      for (int a = 0; a < k; ++a) c += instance.cost_at(row, j, a) * x[a];
      consumed[j] += c;
      report.violation_max = std::max(report.violation_max, consumed[j] - instance.budget);
    }
    report.trajectory.push_back(opt.value * t - reward_sum);
    pool.push_back(row);
  };

  play_round(1, [&] {  // arbitrary first play: the first non-null action, else null
    std::vector<double> x(k, 0.0);
    x[instance.null_action == 0 && k > 1 ? 1 : 0] = 1.0;
    return x;
  }());

  for (int i = 0; (1L << i) < T; ++i) {
    int start = static_cast<int>((1L << i) + 1);
    int end = static_cast<int>(std::min<long>(1L << (i + 1), T));

    BlockDiag diag;
    diag.index = i;
    diag.eps = block_eps(schedule, i);
    diag.rho = rho - 2.0 * diag.eps;
    diag.start_round = start;
    diag.test_len = end - start + 1;
    diag.pool_size = static_cast<long>(pool.size());
    diag.forfeited = diag.rho < rho / 2.0;

    std::vector<double> block_mix;
    if (diag.forfeited) {
      block_mix = null_mix;
    } else {
      long n = 1L << i;
      PrimalDualState pd(k, m, instance.null_action, n, diag.rho);
      Rng train_rng = Rng(seed).fork(1000 + static_cast<uint64_t>(i));
      std::vector<double> freq(k, 0.0);
      for (long s = 0; s < n; ++s) {
        int row = pool[train_rng.next_below(pool.size())];
        auto x = pd.step(instance.reward_row(row), instance.cost_block(row));
        for (int a = 0; a < k; ++a) freq[a] += x[a];
      }
      for (int a = 0; a < k; ++a) freq[a] /= static_cast<double>(n);
      block_mix = std::move(freq);
    }

    diag.pool_mean.assign(static_cast<size_t>(k) * (m + 1), 0.0);
    for (int row : pool) {
      for (int a = 0; a < k; ++a) diag.pool_mean[a] += instance.reward_at(row, a);
      for (int j = 0; j < m; ++j)
        for (int a = 0; a < k; ++a)
          diag.pool_mean[static_cast<size_t>(k) * (j + 1) + a] += instance.cost_at(row, j, a);
    }
    for (auto& v : diag.pool_mean) v /= static_cast<double>(pool.size());
    diag.play_freq = block_mix;
    report.blocks.push_back(diag);

    for (int t = start; t <= end; ++t) play_round(t, block_mix);
    if (end == T) break;
  }

  report.cumulative_loss = reward_sum;
  report.regret = report.benchmark - reward_sum;
  report.violation_max = std::max(0.0, report.violation_max);
  report.interactions = T;
  return report;
}

}  // namespace roml
