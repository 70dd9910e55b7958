#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "roml/core.hpp"
#include "roml/harness.hpp"
#include "roml/io.hpp"

using namespace roml;

namespace {

LossInstance tiny_instance(int horizon, int actions, uint64_t seed) {
  LossInstance instance;
  instance.horizon = horizon;
  instance.actions = actions;
  Rng rng(seed);
  for (int i = 0; i < horizon * actions; ++i) instance.losses.push_back(rng.next_unit());
  return instance;
}

std::vector<std::vector<double>> drain_full(RoundStream& stream) {
  std::vector<std::vector<double>> revealed;
  while (!stream.done()) {
    auto res = stream.step(0);
    for (auto& r : res.revealed) revealed.push_back(std::move(r));
  }
  return revealed;
}

}  // namespace

TEST_CASE("permutations are seeded bijections") {
  for (uint64_t seed : {0ull, 1ull, 42ull, 777ull, 123456789ull}) {
    for (int n : {1, 2, 3, 17, 256}) {
      auto p = Permutation::make(n, seed);
      auto sorted = p.map;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < n; ++i) REQUIRE(sorted[i] == i);
      auto again = Permutation::make(n, seed);
      CHECK(again.map == p.map);
    }
  }
}

TEST_CASE("single-round stream emits the only row") {
  auto instance = tiny_instance(1, 3, 5);
  for (uint64_t seed : {1ull, 9ull, 31ull}) {
    auto stream = make_stream(instance, seed, FeedbackKind::full);
    auto res = stream.step(1);
    CHECK(res.incurred_loss == instance.at(0, 1));
    REQUIRE(res.revealed.size() == 1);
    CHECK(res.revealed[0] == std::vector<double>(instance.row(0).begin(), instance.row(0).end()));
  }
}

TEST_CASE("same seed reproduces the same permutation") {
  auto instance = tiny_instance(3, 2, 8);
  auto a = make_stream(instance, 99, FeedbackKind::full);
  auto b = make_stream(instance, 99, FeedbackKind::full);
  CHECK(a.permutation().map == b.permutation().map);
}

TEST_CASE("emitted rows form exactly the instance multiset") {
  auto instance = tiny_instance(5, 2, 3);
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    auto stream = make_stream(instance, seed, FeedbackKind::full);
    auto revealed = drain_full(stream);
    std::vector<std::vector<double>> expected;
    for (int t = 0; t < 5; ++t)
      expected.emplace_back(instance.row(t).begin(), instance.row(t).end());
    std::sort(revealed.begin(), revealed.end());
    std::sort(expected.begin(), expected.end());
    CHECK(revealed == expected);
  }
}

TEST_CASE("all-zero instance incurs zero loss for any action") {
  LossInstance instance{4, 2, std::vector<double>(8, 0.0)};
  auto stream = make_stream(instance, 7, FeedbackKind::full);
  std::vector<double> mix{0.5, 0.5};
  CHECK(stream.step(std::span<const double>(mix)).incurred_loss == 0.0);
  CHECK(stream.step(1).incurred_loss == 0.0);
}

TEST_CASE("mixed play incurs the dot product") {
  LossInstance instance{1, 2, {0.2, 0.8}};
  auto stream = make_stream(instance, 1, FeedbackKind::full);
  std::vector<double> mix{0.5, 0.5};
  CHECK(stream.step(std::span<const double>(mix)).incurred_loss == doctest::Approx(0.5));
}

TEST_CASE("delayed feedback reveals at t+d and never earlier") {
  auto instance = tiny_instance(8, 2, 11);
  const int d = 2;
  for (uint64_t seed : {2ull, 5ull}) {
    auto stream = make_stream(instance, seed, FeedbackKind::delayed, d);
    std::vector<std::vector<double>> per_round_losses;  // the row played at each round
    for (int t = 1; t <= 8; ++t) {
      int row = stream.permutation().map[t - 1];
      per_round_losses.emplace_back(instance.row(row).begin(), instance.row(row).end());
      auto res = stream.step(0);
      if (t <= d) {
        CHECK(res.revealed.empty());
      } else {
        REQUIRE(res.revealed.size() == 1);
        CHECK(res.revealed[0] == per_round_losses[t - d - 1]);
      }
    }
  }
}

TEST_CASE("bandit feedback reveals nothing beyond the incurred scalar") {
  auto instance = tiny_instance(4, 3, 13);
  auto stream = make_stream(instance, 3, FeedbackKind::bandit);
  auto res = stream.step(2);
  CHECK(res.revealed.empty());
  CHECK(res.incurred_loss == instance.at(stream.permutation().map[0], 2));
}

TEST_CASE("bandit feedback samples a pure arm from a mixed play") {
  LossInstance instance{6, 2, {0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9}};
  auto stream = make_stream(instance, 21, FeedbackKind::bandit);
  std::vector<double> mix{0.5, 0.5};
  while (!stream.done()) {
    double loss = stream.step(std::span<const double>(mix)).incurred_loss;
    CHECK((loss == 0.1 || loss == 0.9));  // a realized arm, never the blend 0.5
  }
}

TEST_CASE("stream rejects bad configurations and usage") {
  auto instance = tiny_instance(4, 2, 17);
  CHECK_THROWS_AS(make_stream(instance, 1, FeedbackKind::delayed, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_stream(instance, 1, FeedbackKind::delayed, 9), std::invalid_argument);
  CHECK_THROWS_AS(make_stream(instance, 1, FeedbackKind::full, 1), std::invalid_argument);

  auto stream = make_stream(instance, 1, FeedbackKind::full);
  for (int t = 0; t < 4; ++t) stream.step(0);
  CHECK_THROWS_AS(stream.step(0), std::logic_error);

  auto fresh = make_stream(instance, 1, FeedbackKind::full);
  std::vector<double> bad_sum{0.6, 0.6};
  CHECK_THROWS_AS(fresh.step(std::span<const double>(bad_sum)), std::invalid_argument);
  std::vector<double> bad_negative{1.0 + 1e-11, -1e-11};
  CHECK_THROWS_AS(fresh.step(std::span<const double>(bad_negative)), std::invalid_argument);
  CHECK_THROWS_AS(fresh.step(7), std::invalid_argument);
}

TEST_CASE("mixture validation clamps float noise only") {
  std::vector<double> slightly_off{1.0 - 1e-13, 5e-13};
  auto cleaned = validate_mixture(slightly_off);
  CHECK(cleaned[1] == 5e-13);
  std::vector<double> tiny_negative{1.0, -5e-13};
  cleaned = validate_mixture(tiny_negative);
  CHECK(cleaned[1] == 0.0);
}

TEST_CASE("benchmark is invariant across permutations") {
  auto instance = tiny_instance(32, 3, 23);
  auto expected = oracles::best_action_total(instance);
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    auto stream = make_stream(instance, seed, FeedbackKind::full);
    std::vector<double> totals(3, 0.0);
    for (int t = 1; t <= 32; ++t) {
      int row = stream.permutation().map[t - 1];
      for (int a = 0; a < 3; ++a) totals[a] += instance.at(row, a);
      stream.step(0);
    }
    CHECK(*std::min_element(totals.begin(), totals.end()) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(best_fixed_action(instance).second == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("interaction count tracks real plays only") {
  auto instance = tiny_instance(10, 2, 29);
  auto stream = make_stream(instance, 4, FeedbackKind::full);
  for (int t = 0; t < 10; ++t) stream.step(0);
  CHECK(stream.interaction_count() == 10);
}

TEST_CASE("instance csv round-trips exactly") {
  auto instance = tiny_instance(12, 3, 31);
  auto dir = std::filesystem::temp_directory_path() / "roml_core_csv";
  std::filesystem::create_directories(dir);
  auto path = (dir / "instance.csv").string();
  save_instance_csv(instance, path);
  auto loaded = load_instance_csv(path);
  CHECK(loaded.horizon == instance.horizon);
  CHECK(loaded.actions == instance.actions);
  CHECK(loaded.losses == instance.losses);

  auto second = (dir / "instance2.csv").string();
  save_instance_csv(loaded, second);
  std::ifstream a(path), b(second);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("instance csv loading rejects malformed files") {
  auto dir = std::filesystem::temp_directory_path() / "roml_core_csv_bad";
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const char* text) {
    std::ofstream out(dir / name);
    out << text;
    return (dir / name).string();
  };
  CHECK_THROWS_AS(load_instance_csv(write("bad_header.csv", "x,a1\n1,0.5\n")),
                  std::runtime_error);
  CHECK_THROWS_AS(load_instance_csv(write("ragged.csv", "t,a1,a2\n1,0.5\n")),
                  std::runtime_error);
  CHECK_THROWS_AS(load_instance_csv(write("out_of_range.csv", "t,a1\n1,1.5\n")),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_instance_csv((dir / "missing.csv").string()), std::runtime_error);
}

TEST_CASE("loss instances reject malformed data") {
  LossInstance negative{1, 2, {-0.1, 0.5}};
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
  LossInstance oversized{1, 2, {0.1, 1.5}};
  CHECK_THROWS_AS(oversized.validate(), std::invalid_argument);
  LossInstance empty{0, 2, {}};
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}
