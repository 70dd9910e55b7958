#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "roml/core.hpp"
#include "roml/report.hpp"
#include "roml/rng.hpp"

namespace roml {

struct LabeledDataset {
  std::vector<double> x;
  std::vector<int> y;  // labels in {0,1}

  int size() const { return static_cast<int>(x.size()); }

  void validate() const {
    if (x.empty() || x.size() != y.size())
      throw std::invalid_argument("LabeledDataset: need matching nonempty x and y");
    for (int label : y)
      if (label != 0 && label != 1)
        throw std::invalid_argument("LabeledDataset: labels must be 0 or 1");
  }
};

// Finite class of binary predictors with a declared VC dimension. The sup
// over hypotheses is always an exact scan, never an approximation.
struct FiniteHypothesisClass {
  std::vector<std::function<int(double)>> hypotheses;
  int vc_dim = 1;

  int size() const { return static_cast<int>(hypotheses.size()); }
};

// h_theta(x) = 1{x >= theta} over a grid of thresholds; VC dimension 1.
inline FiniteHypothesisClass make_threshold_class(const std::vector<double>& grid) {
  FiniteHypothesisClass cls;
  cls.vc_dim = 1;
  for (double theta : grid)
    cls.hypotheses.push_back([theta](double x) { return x >= theta ? 1 : 0; });
  return cls;
}

// 0-1 loss table, hypothesis-major: table[h * T + t] = 1{h(x_t) != y_t}.
inline std::vector<uint8_t> zero_one_losses(const FiniteHypothesisClass& cls,
                                            const LabeledDataset& data) {
  data.validate();
  if (cls.size() == 0) throw std::invalid_argument("zero_one_losses: empty hypothesis class");
  std::vector<uint8_t> table(static_cast<size_t>(cls.size()) * data.size());
  for (int h = 0; h < cls.size(); ++h)
    for (int t = 0; t < data.size(); ++t)
      table[static_cast<size_t>(h) * data.size() + t] =
          cls.hypotheses[h](data.x[t]) != data.y[t] ? 1 : 0;
  return table;
}

// Argmin of accumulated prefix mistakes; empty prefix and ties resolve to the
// lowest hypothesis index.
inline int erm_choose(std::span<const long> prefix_mistakes) {
  if (prefix_mistakes.empty()) throw std::invalid_argument("erm_choose: no hypotheses");
  int best = 0;
  for (int h = 1; h < static_cast<int>(prefix_mistakes.size()); ++h)
    if (prefix_mistakes[h] < prefix_mistakes[best]) best = h;
  return best;
}

// Uniform-convergence radius for the first tPrev of T random-order samples:
// half of sqrt((8 d / t) log(2e t / d)) + sqrt((8 / t) log(2 / delta)).
inline double deviation_eps(int vc_dim, long t_prev, double delta) {
  if (vc_dim < 1) throw std::domain_error("deviation_eps: vc_dim must be >= 1");
  if (t_prev < 1) throw std::domain_error("deviation_eps: t_prev must be >= 1");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("deviation_eps: delta must lie in (0,1)");
  double t = static_cast<double>(t_prev);
  double d = static_cast<double>(vc_dim);
  double complexity = std::sqrt(8.0 * d / t * std::log(2.0 * std::exp(1.0) * t / d));
  double confidence = std::sqrt(8.0 / t * std::log(2.0 / delta));
  return 0.5 * (complexity + confidence);
}

struct ErmRunResult {
  RegretReport report;
  // sup_deviation[i] = sup_h |mean loss of h - prefix mean after i+1 samples|
  std::vector<double> sup_deviation;
  std::vector<int> chosen;  // hypothesis picked each round
};

// Streams the dataset in random order; each round predicts with the
// empirical risk minimizer on the revealed prefix.
inline ErmRunResult run_random_order_erm(const FiniteHypothesisClass& cls,
                                         const LabeledDataset& data, uint64_t seed) {
  auto table = zero_one_losses(cls, data);
  const int T = data.size();
  const int H = cls.size();
  Permutation perm = Permutation::make(T, Rng(seed).fork(0).seed());

  std::vector<double> full_mean(H, 0.0);
  for (int h = 0; h < H; ++h) {
    long total = 0;
    for (int t = 0; t < T; ++t) total += table[static_cast<size_t>(h) * T + t];
    full_mean[h] = static_cast<double>(total) / T;
  }
  double benchmark = *std::min_element(full_mean.begin(), full_mean.end()) * T;

  ErmRunResult out;
  out.report.seed = seed;
  out.report.benchmark = benchmark;
  out.report.trajectory.reserve(T);
  out.sup_deviation.reserve(T);
  out.chosen.reserve(T);

  std::vector<long> prefix(H, 0);
  for (int t = 1; t <= T; ++t) {
    int h = erm_choose(prefix);
    int row = perm.map[t - 1];
    out.chosen.push_back(h);
    out.report.cumulative_loss += table[static_cast<size_t>(h) * T + row];
    out.report.trajectory.push_back(out.report.cumulative_loss - benchmark / T * t);

    double sup = 0.0;  // deviation once this round's label is revealed
    for (int hh = 0; hh < H; ++hh) {
      prefix[hh] += table[static_cast<size_t>(hh) * T + row];
      sup = std::max(sup,
                     std::abs(full_mean[hh] - static_cast<double>(prefix[hh]) / t));
    }
    out.sup_deviation.push_back(sup);
  }
  out.report.regret = out.report.cumulative_loss - benchmark;
  out.report.interactions = T;
  return out;
}

// sup_h |full mean - prefix mean| after the first `prefix_len` samples of a
// fresh uniform permutation. Used by the deviation-coverage experiments;
// only the prefix of the shuffle is materialized.
inline double sample_sup_deviation(const std::vector<uint8_t>& table, int hypotheses, int T,
                                   const std::vector<double>& full_mean, int prefix_len,
                                   Rng& rng, std::vector<int>& scratch) {
  scratch.resize(T);
  for (int i = 0; i < T; ++i) scratch[i] = i;
  for (int i = 0; i < prefix_len; ++i) {  // partial Fisher-Yates: prefix only
    int j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(T - i)));
    std::swap(scratch[i], scratch[j]);
  }
  double sup = 0.0;
  for (int h = 0; h < hypotheses; ++h) {
    long hits = 0;
    const uint8_t* row = table.data() + static_cast<size_t>(h) * T;
    for (int i = 0; i < prefix_len; ++i) hits += row[scratch[i]];
    sup = std::max(sup, std::abs(full_mean[h] - static_cast<double>(hits) / prefix_len));
  }
  return sup;
}

}  // namespace roml
