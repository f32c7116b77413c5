#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "occusim/error.hpp"
#include "occusim/network.hpp"
#include "support/oracles.hpp"

using namespace occusim;
namespace fs = std::filesystem;

namespace {

NetworkConfig tiny_config() {
  NetworkConfig c;
  c.conv_filters = 2;
  c.recurrent_units = {3};
  c.fc_units = {4};
  c.input_length = 8;
  return c;
}

NetworkConfig stacked_config() {
  NetworkConfig c;
  c.conv_filters = 3;
  c.recurrent_units = {4, 3, 2};
  c.fc_units = {5, 3};
  c.input_length = 11;
  return c;
}

// Random weights with non-trivial biases everywhere.
NetworkWeights random_weights(const NetworkConfig& c, unsigned seed) {
  Rng rng(seed);
  NetworkWeights w = init_weights(c, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& p : w.params) p += 0.3 * u(rng);
  w.input_mean = 0.0;
  w.input_std = 1.0;
  return w;
}

Eigen::MatrixXd random_batch(int rows, int cols, unsigned seed) {
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd x(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) x(r, c) = n(rng);
  }
  return x;
}

double max_relative_error(const NetworkConfig& config, unsigned seed) {
  const NetworkWeights w = random_weights(config, seed);
  const auto x = random_batch(config.input_length, 4, seed + 1);
  const std::vector<std::uint8_t> labels{0, 1, 1, 0};
  const auto analytic = loss_and_gradients(w, x, labels).gradient;
  const auto numeric = oracle::central_differences(
      [&](const std::vector<double>& p) {
        NetworkWeights v = w;
        v.params.assign(p.begin(), p.end());
        return loss_and_gradients(v, x, labels).loss;
      },
      std::vector<double>(w.params.begin(), w.params.end()), 1e-4);
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_CASE("parameter layout follows the configured shapes") {
  const ParameterLayout layout(tiny_config());
  CHECK(layout.at("conv/kernel").rows == 2);
  CHECK(layout.at("conv/kernel").cols == 3);
  CHECK(layout.at("lstm0/fwd/input").rows == 12);
  CHECK(layout.at("lstm0/fwd/input").cols == 2);
  CHECK(layout.at("lstm0/bwd/recurrent").cols == 3);
  CHECK(layout.at("dense0/kernel").rows == 4);
  CHECK(layout.at("dense0/kernel").cols == 6);
  CHECK(layout.at("output/kernel").rows == 2);
  CHECK(layout.at("output/kernel").cols == 4);
  CHECK_THROWS_AS(layout.at("nope"), StructuralError);

  const NetworkConfig paper;
  CHECK(paper.conv_length() == 13);
  CHECK(paper.pooled_length() == 6);
  const ParameterLayout big(paper);
  CHECK(big.at("lstm2/fwd/input").cols == 300);
  CHECK(big.at("dense0/kernel").cols == 200);
}

TEST_CASE("tiny network shapes: 8 -> 6 -> 3 -> (3, 6) -> 6 -> 4 -> 2") {
  const auto c = tiny_config();
  CHECK(c.conv_length() == 6);
  CHECK(c.pooled_length() == 3);
  const auto w = random_weights(c, 1);
  const auto seq = random_batch(2, 3 * 5, 2);  // 2 filters, 3 steps, batch 5
  CHECK(bidirectional_layer(w, 0, seq, 3, false).rows() == 6);
  CHECK(bidirectional_layer(w, 0, seq, 3, false).cols() == 15);
  CHECK(bidirectional_layer(w, 0, seq, 3, true).rows() == 6);
  CHECK(bidirectional_layer(w, 0, seq, 3, true).cols() == 5);
  const auto p = forward(w, random_batch(8, 5, 3));
  CHECK(p.rows() == 2);
  CHECK(p.cols() == 5);
}

TEST_CASE("outputs are probability distributions") {
  for (const auto& c : {tiny_config(), stacked_config(), NetworkConfig::reduced()}) {
    const auto w = random_weights(c, 5);
    Eigen::MatrixXd x = 40.0 * random_batch(c.input_length, 16, 6);
    const auto p = forward(w, x);
    for (Eigen::Index b = 0; b < p.cols(); ++b) {
      CHECK(std::abs(p.col(b).sum() - 1.0) < 1e-6);
      CHECK(p.col(b).minCoeff() >= 0.0);
      CHECK(p.col(b).maxCoeff() <= 1.0);
    }
  }
}

TEST_CASE("zero weights give uniform predictions and ln 2 loss") {
  const auto w = zero_weights(NetworkConfig::reduced());
  const auto x = random_batch(15, 3, 4);
  const auto p = forward(w, x);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 2) == doctest::Approx(0.5));
  const std::vector<std::uint8_t> labels{0, 1, 1};
  CHECK(loss_and_gradients(w, x, labels).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("confident correct predictions have near-zero loss") {
  auto w = zero_weights(tiny_config());
  const auto bias = ParameterLayout(w.config).at("output/bias");
  w.tensor(bias)(0, 0) = -40.0;
  w.tensor(bias)(1, 0) = 40.0;
  const std::vector<std::uint8_t> labels{1, 1};
  CHECK(loss_and_gradients(w, random_batch(8, 2, 1), labels).loss < 1e-30);
}

TEST_CASE("analytic gradients match central differences") {
  SUBCASE("tiny config") { CHECK(max_relative_error(tiny_config(), 10) < 1e-4); }
  SUBCASE("stacked config with sequence-to-sequence layers") {
    CHECK(max_relative_error(stacked_config(), 20) < 1e-4);
  }
}

TEST_CASE("gradients cover the input normalization") {
  auto w = random_weights(tiny_config(), 3);
  w.input_mean = 600.0;
  w.input_std = 150.0;
  Eigen::MatrixXd x = (600.0 + 150.0 * random_batch(8, 4, 9).array()).matrix();
  const std::vector<std::uint8_t> labels{1, 0, 0, 1};
  const auto a = loss_and_gradients(w, x, labels);
  NetworkWeights v = w;
  v.input_mean = 0.0;
  v.input_std = 1.0;
  Eigen::MatrixXd z = ((x.array() - 600.0) / 150.0).matrix();
  const auto b = loss_and_gradients(v, z, labels);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
}

TEST_CASE("reversing time and swapping directions swaps the output halves") {
  const auto c = stacked_config();
  const auto w = random_weights(c, 31);
  NetworkWeights swapped = w;
  const ParameterLayout layout(c);
  for (const char* part : {"input", "recurrent", "bias"}) {
    const auto& f = layout.at(std::string("lstm0/fwd/") + part);
    const auto& b = layout.at(std::string("lstm0/bwd/") + part);
    swapped.tensor(f) = w.tensor(b);
    swapped.tensor(b) = w.tensor(f);
  }
  const int steps = 5;
  const int batch = 3;
  const auto seq = random_batch(c.conv_filters, steps * batch, 32);
  Eigen::MatrixXd reversed(seq.rows(), seq.cols());
  for (int t = 0; t < steps; ++t) {
    reversed.middleCols(t * batch, batch) = seq.middleCols((steps - 1 - t) * batch, batch);
  }
  const auto out = bidirectional_layer(w, 0, seq, steps, true);
  const auto mirrored = bidirectional_layer(swapped, 0, reversed, steps, true);
  const Eigen::Index h = c.recurrent_units[0];
  CHECK((out.topRows(h) - mirrored.bottomRows(h)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((out.bottomRows(h) - mirrored.topRows(h)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dropout is only active in training mode") {
  const auto c = tiny_config();
  const auto w = random_weights(c, 40);
  const auto x = random_batch(8, 6, 41);
  CHECK(forward(w, x) == forward(w, x));
  Rng rng(1);
  CHECK(forward(w, x, &rng) != forward(w, x));
}

TEST_CASE("initialization") {
  Rng rng(3);
  const auto c = NetworkConfig::reduced();
  const auto w = init_weights(c, rng);
  const ParameterLayout layout(c);
  const auto bias = w.tensor(layout.at("lstm0/fwd/bias"));
  CHECK(bias.block(0, 0, 32, 1).isZero());
  CHECK(bias.block(32, 0, 32, 1).isOnes());
  CHECK(bias.block(64, 0, 64, 1).isZero());
  const auto k = w.tensor(layout.at("dense0/kernel"));
  const double limit = std::sqrt(6.0 / (32.0 + 32.0));
  CHECK(k.cwiseAbs().maxCoeff() <= limit);
  CHECK(k.cwiseAbs().maxCoeff() > 0.5 * limit);
}

TEST_CASE("wrong input height is a structural error") {
  const auto w = zero_weights(tiny_config());
  CHECK_THROWS_AS(forward(w, random_batch(9, 2, 1)), StructuralError);
}

TEST_CASE("weight files") {
  const fs::path dir = fs::temp_directory_path() / "occusim_test_network";
  fs::create_directories(dir);
  const auto c = NetworkConfig::reduced();
  auto w = random_weights(c, 50);
  w.input_mean = 612.25;
  w.input_std = 143.0 / 3.0;
  const fs::path path = dir / "w.bin";
  save_weights(path, w);

  SUBCASE("round trip is bit exact") {
    const auto back = load_weights(path, c);
    CHECK(back.params == w.params);
    CHECK(back.input_mean == w.input_mean);
    CHECK(back.input_std == w.input_std);
    CHECK(back.config == c);
    const Eigen::MatrixXd x = (500.0 + 100.0 * random_batch(15, 7, 2).array()).matrix();
    CHECK(forward(back, x) == forward(w, x));
  }
  SUBCASE("truncated file") {
    const auto size = fs::file_size(path);
    fs::copy_file(path, dir / "t.bin", fs::copy_options::overwrite_existing);
    fs::resize_file(dir / "t.bin", size - 100);
    CHECK_THROWS_AS(load_weights(dir / "t.bin"), FormatError);
  }
  SUBCASE("foreign version") {
    fs::copy_file(path, dir / "v.bin", fs::copy_options::overwrite_existing);
    std::fstream f(dir / "v.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const std::uint32_t version = 99;
    f.write(reinterpret_cast<const char*>(&version), sizeof version);
    f.close();
    CHECK_THROWS_AS(load_weights(dir / "v.bin"), FormatError);
  }
  SUBCASE("not a weight file") {
    std::ofstream(dir / "x.bin") << "hello";
    CHECK_THROWS_AS(load_weights(dir / "x.bin"), FormatError);
  }
  SUBCASE("mismatched config names the tensor") {
    try {
      load_weights(path, NetworkConfig{});
      FAIL("expected a structural error");
    } catch (const StructuralError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("lstm0/fwd/input") != std::string::npos);
      CHECK(msg.find("(128, 10)") != std::string::npos);
    }
  }
}
