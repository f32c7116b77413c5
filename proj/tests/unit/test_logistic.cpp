#include <doctest.h>

#include <cmath>

#include "occusim/error.hpp"
#include "occusim/eval.hpp"
#include "occusim/logistic.hpp"
#include "occusim/random.hpp"

using namespace occusim;

namespace {

WindowSet random_windows(std::size_t n, unsigned seed, bool separable) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(400.0, 1200.0);
  WindowSet set(15);
  std::vector<double> w(15);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : w) v = u(rng);
    double sum = 0.0;
    for (std::size_t j = 10; j < 15; ++j) sum += w[j];
    const std::uint8_t label =
        separable ? static_cast<std::uint8_t>(sum > 4000.0) : static_cast<std::uint8_t>(rng() % 10 < 7);
    set.push_back(w, label);
  }
  return set;
}

}  // namespace

TEST_CASE("linearly separable windows are classified perfectly") {
  const auto train = random_windows(2000, 1, true);
  LogisticFitInfo info;
  const auto w = fit_logistic(train, {}, &info);
  CHECK(accuracy(predict_logistic(w, train), train.labels()) == 1.0);
  CHECK(info.iterations > 0);
}

TEST_CASE("labels independent of inputs give about the majority rate") {
  const auto train = random_windows(3000, 2, false);
  const auto test = random_windows(3000, 3, false);
  LogisticFitInfo info;
  const auto w = fit_logistic(train, {}, &info);
  CHECK(info.gradient_norm < 1e-6);
  const double acc = accuracy(predict_logistic(w, test), test.labels());
  CHECK(acc == doctest::Approx(0.7).epsilon(0.05));
}

TEST_CASE("probability threshold") {
  LogisticWeights w;
  w.coef.assign(15, 0.0);
  const std::vector<double> x(15, 700.0);
  CHECK(logistic_probability(w, x) == 0.5);
  CHECK(predict_logistic(w, x) == 1);
  w.bias = -1e-9;
  CHECK(predict_logistic(w, x) == 0);
}

TEST_CASE("single-class training data is rejected") {
  WindowSet set(15);
  const std::vector<double> x(15, 500.0);
  for (int i = 0; i < 20; ++i) set.push_back(x, 1);
  CHECK_THROWS_AS(fit_logistic(set), DomainError);
  CHECK_THROWS_AS(fit_logistic(WindowSet(15)), DomainError);
}

TEST_CASE("fits are deterministic") {
  const auto train = random_windows(500, 4, true);
  const auto a = fit_logistic(train);
  const auto b = fit_logistic(train);
  CHECK(a.coef == b.coef);
  CHECK(a.bias == b.bias);
}
