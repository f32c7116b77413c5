#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "occusim/error.hpp"
#include "occusim/eval.hpp"
#include "occusim/logistic.hpp"
#include "occusim/random.hpp"
#include "support/oracles.hpp"

using namespace occusim;

namespace {

// Seven days of windows with a level-coded label.
std::vector<WindowSet> toy_days(unsigned seed) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 60.0);
  std::vector<WindowSet> days;
  std::vector<double> w(15);
  for (int d = 0; d < 7; ++d) {
    WindowSet set(15);
    for (int i = 0; i < 200; ++i) {
      const std::uint8_t label = (i / 40) % 2;
      for (auto& v : w) v = (label ? 800.0 : 500.0) + noise(rng);
      set.push_back(w, label, d);
    }
    days.push_back(std::move(set));
  }
  return days;
}

}  // namespace

TEST_CASE("metric examples") {
  const std::vector<std::uint8_t> truth{1, 1, 0, 0, 1, 0, 1, 0};
  const std::vector<std::uint8_t> pred{1, 0, 0, 1, 1, 0, 0, 0};
  CHECK(accuracy(pred, truth) == doctest::Approx(5.0 / 8.0));
  // TP 2, FP 1, FN 2: precision 2/3, recall 1/2.
  CHECK(f1_score(pred, truth) == doctest::Approx(4.0 / 7.0));
  CHECK(f1_score(pred, truth, 0) == doctest::Approx(2.0 * 3.0 / (2.0 * 3.0 + 2.0 + 1.0)));

  const std::vector<std::uint8_t> all_one(4, 1);
  const std::vector<std::uint8_t> half{1, 1, 0, 0};
  CHECK(accuracy(all_one, half) == 0.5);
  CHECK(f1_score(all_one, half) == doctest::Approx(2.0 / 3.0));

  const std::vector<std::uint8_t> zeros(4, 0);
  CHECK(f1_score(zeros, half) == 0.0);
  CHECK(f1_score(zeros, zeros) == 0.0);
}

TEST_CASE("metric errors") {
  const std::vector<std::uint8_t> a{1, 0};
  const std::vector<std::uint8_t> b{1};
  CHECK_THROWS_AS(accuracy(a, b), DomainError);
  CHECK_THROWS_AS(f1_score(a, b), DomainError);
  CHECK_THROWS_AS(accuracy(std::vector<std::uint8_t>{}, std::vector<std::uint8_t>{}), DomainError);
}

TEST_CASE("metrics agree with confusion counts on random vectors") {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<std::uint8_t> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng() & 1u;
      t[i] = rng() & 1u;
    }
    const auto c = oracle::confusion(p, t);
    CHECK(accuracy(p, t) == oracle::accuracy(c));
    CHECK(f1_score(p, t) == oracle::f1(c));
  }
}

TEST_CASE("fold construction") {
  CHECK(make_folds(7, 1).size() == 7);
  CHECK(make_folds(7, 4).size() == 4);
  CHECK(make_folds(7, 6).size() == 2);
  CHECK(make_folds(7, 4, true).size() == 7);
  CHECK_THROWS_AS(make_folds(7, 7), DomainError);
  CHECK_THROWS_AS(make_folds(7, 0), DomainError);

  const auto f = make_folds(7, 3);
  CHECK(f[2].train_days == std::vector<int>{2, 3, 4});
  CHECK(f[2].test_days == std::vector<int>{0, 1, 5, 6});
  const auto w = make_folds(7, 3, true);
  CHECK(w[6].train_days == std::vector<int>{6, 0, 1});

  for (bool wrap : {false, true}) {
    for (int k = 1; k < 7; ++k) {
      for (const auto& fold : make_folds(7, k, wrap)) {
        CHECK(fold.k == k);
        CHECK(fold.train_days.size() == static_cast<std::size_t>(k));
        std::set<int> all(fold.train_days.begin(), fold.train_days.end());
        for (int d : fold.test_days) CHECK(all.insert(d).second);
        CHECK(all.size() == 7);
      }
    }
  }
}

TEST_CASE("summaries use the population standard deviation") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto s = summarize(v);
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(std::sqrt(1.25)));
  CHECK(summarize(std::vector<double>{7.0}).stddev == 0.0);
}

TEST_CASE("modes parse and print") {
  for (Mode m : {Mode::transfer, Mode::cold, Mode::logistic}) CHECK(mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(mode_from_string("warm"), DomainError);
}

TEST_CASE("protocol with the logistic baseline") {
  const auto days = toy_days(1);
  ProtocolConfig cfg;
  cfg.ks = {1, 4};
  cfg.n_seeds = 2;
  cfg.modes = {Mode::logistic};
  const auto report = run_protocol(days, nullptr, cfg);
  CHECK(report.runs.size() == (7 + 4) * 2);
  const Aggregate* a = report.find(1, Mode::logistic);
  REQUIRE(a != nullptr);
  CHECK(a->runs == 14);
  CHECK(a->accuracy.mean > 0.9);
  CHECK(report.find(1, Mode::cold) == nullptr);

  SUBCASE("aggregates are recomputable from the runs") {
    std::vector<double> acc;
    for (const auto& r : report.runs) {
      if (r.k == 4) acc.push_back(r.accuracy);
    }
    const auto s = summarize(acc);
    CHECK(report.find(4, Mode::logistic)->accuracy.mean == doctest::Approx(s.mean).epsilon(1e-15));
    CHECK(report.find(4, Mode::logistic)->accuracy.stddev == doctest::Approx(s.stddev).epsilon(1e-15));
  }
  SUBCASE("per-run metrics pool every test day") {
    const auto& r = report.runs.front();
    CHECK(r.k == 1);
    CHECK(r.fold == 0);
    std::vector<int> test{1, 2, 3, 4, 5, 6};
    WindowSet all(15);
    for (int d : test) all.append(days[d]);
    const auto w = fit_logistic(days[0]);
    const auto pred = predict_logistic(w, all);
    CHECK(r.accuracy == accuracy(pred, all.labels()));
    CHECK(r.f1 == f1_score(pred, all.labels()));
  }
  SUBCASE("outputs render") {
    CHECK(format_table(report).find("logistic") != std::string::npos);
    CHECK(to_csv(report).find("k,fold,seed,mode") == 0);
    CHECK(to_json(report).find("\"aggregates\"") != std::string::npos);
  }
}

TEST_CASE("protocol runs are deterministic and independent of the job count") {
  const auto days = toy_days(2);
  ProtocolConfig cfg;
  cfg.ks = {5};
  cfg.n_seeds = 2;
  cfg.modes = {Mode::cold, Mode::logistic};
  cfg.net.conv_filters = 2;
  cfg.net.recurrent_units = {4};
  cfg.net.fc_units = {4};
  cfg.train.max_epochs = 3;
  cfg.train.batch_size = 70;
  const auto a = run_protocol(days, nullptr, cfg);
  cfg.jobs = 3;
  const auto b = run_protocol(days, nullptr, cfg);
  CHECK(a.runs == b.runs);
  CHECK(a.runs.size() == 3 * 2 * 2);
  CHECK(a.runs[0].seed == 0);
  CHECK(a.runs[2].seed == 1);
}

TEST_CASE("protocol input errors") {
  ProtocolConfig cfg;
  cfg.ks = {7};
  cfg.modes = {Mode::logistic};
  CHECK_THROWS_AS(run_protocol(toy_days(3), nullptr, cfg), DomainError);
  CHECK_THROWS_AS(run_protocol({}, nullptr, cfg), DomainError);
}
