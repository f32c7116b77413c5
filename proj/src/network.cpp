#include "occusim/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "occusim/config_io.hpp"
#include "occusim/error.hpp"

namespace occusim {

using Mat = Eigen::MatrixXd;
using CMap = Eigen::Map<const Mat>;
using MMap = Eigen::Map<Mat>;

// ---------------------------------------------------------------------------
// Configuration and layout

NetworkConfig NetworkConfig::reduced() {
  NetworkConfig c;
  c.recurrent_units = {32, 16, 16};
  c.fc_units = {32, 16};
  return c;
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError("network config: " + msg); };
  if (conv_filters < 1 || conv_kernel < 1 || pool_factor < 1) fail("conv sizes must be >= 1");
  if (input_length < 1 || input_channels < 1) fail("input sizes must be >= 1");
  if (conv_kernel > input_length) fail("kernel longer than the input");
  if (pooled_length() < 1) fail("pooling leaves no time steps");
  if (recurrent_units.empty()) fail("at least one recurrent layer is required");
  for (int u : recurrent_units) {
    if (u < 1) fail("recurrent units must be >= 1");
  }
  for (int u : fc_units) {
    if (u < 1) fail("dense units must be >= 1");
  }
  if (classes < 2) fail("at least two classes are required");
  if (dropout.size() != 2) fail("exactly two dropout probabilities are required");
  for (double p : dropout) {
    if (!(p >= 0.0 && p < 1.0)) fail("dropout probabilities must lie in [0, 1)");
  }
}

ParameterLayout::ParameterLayout(const NetworkConfig& c) {
  c.validate();
  add("conv/kernel", c.conv_filters, c.conv_kernel * c.input_channels);
  add("conv/bias", c.conv_filters, 1);
  int in = c.conv_filters;
  for (std::size_t l = 0; l < c.recurrent_units.size(); ++l) {
    const int h = c.recurrent_units[l];
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string prefix = "lstm" + std::to_string(l) + "/" + dir + "/";
      add(prefix + "input", 4 * h, in);
      add(prefix + "recurrent", 4 * h, h);
      add(prefix + "bias", 4 * h, 1);
    }
    in = 2 * h;
  }
  for (std::size_t j = 0; j < c.fc_units.size(); ++j) {
    add("dense" + std::to_string(j) + "/kernel", c.fc_units[j], in);
    add("dense" + std::to_string(j) + "/bias", c.fc_units[j], 1);
    in = c.fc_units[j];
  }
  add("output/kernel", c.classes, in);
  add("output/bias", c.classes, 1);
}

void ParameterLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  tensors_.push_back({std::move(name), rows, cols, total_});
  total_ += static_cast<std::size_t>(rows * cols);
}

const TensorInfo& ParameterLayout::at(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw StructuralError("no tensor named " + std::string(name));
}

void NetworkWeights::check() const {
  const ParameterLayout layout(config);
  if (params.size() != layout.total_size()) {
    throw StructuralError("parameter count " + std::to_string(params.size()) +
                          " does not match the config (" + std::to_string(layout.total_size()) +
                          ")");
  }
  if (!(input_std > 0.0)) throw StructuralError("normalization std must be positive");
}

NetworkWeights zero_weights(const NetworkConfig& config) {
  NetworkWeights w;
  w.config = config;
  w.params.assign(ParameterLayout(config).total_size(), 0.0);
  return w;
}

NetworkWeights init_weights(const NetworkConfig& config, Rng& rng) {
  NetworkWeights w = zero_weights(config);
  const ParameterLayout layout(config);
  for (const auto& t : layout.tensors()) {
    auto m = w.tensor(t);
    const bool is_bias = t.cols == 1 && t.name.ends_with("bias");
    if (is_bias) {
      if (t.name.starts_with("lstm")) {
        const Eigen::Index h = t.rows / 4;
        m.block(h, 0, h, 1).setOnes();
      }
      continue;
    }
    double fan_in = static_cast<double>(t.cols);
    double fan_out = static_cast<double>(t.rows);
    if (t.name == "conv/kernel") {
      fan_out = static_cast<double>(config.conv_kernel * config.conv_filters);
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
    }
  }
  return w;
}

std::pair<double, double> input_statistics(const WindowSet& samples) {
  const auto& v = samples.values();
  if (v.empty()) throw DomainError("no samples for input statistics");
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  double sd = std::sqrt(ss / static_cast<double>(v.size()));
  if (!(sd > 0.0)) sd = 1.0;
  return {mean, sd};
}

Mat batch_matrix(const WindowSet& samples, std::span<const std::size_t> indices) {
  Mat x(static_cast<Eigen::Index>(samples.length()), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t b = 0; b < indices.size(); ++b) {
    auto in = samples.inputs(indices[b]);
    for (std::size_t k = 0; k < in.size(); ++k) x(static_cast<Eigen::Index>(k), b) = in[k];
  }
  return x;
}

Mat batch_matrix(const WindowSet& samples) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  return batch_matrix(samples, idx);
}

// ---------------------------------------------------------------------------
// Layers

namespace {

// Both written through exp, which Eigen vectorizes for doubles.
template <typename Xpr>
void sigmoid_inplace(Xpr&& x) {
  x.array() = (1.0 + (-x.array()).exp()).inverse();
}

template <typename Xpr>
void tanh_inplace(Xpr&& x) {
  x.array() = 2.0 / (1.0 + (-2.0 * x.array()).exp()) - 1.0;
}

struct LstmParams {
  CMap wx;
  CMap wh;
  CMap b;
};

struct LstmGrads {
  MMap wx;
  MMap wh;
  MMap b;
};

// One direction over a sequence given in processing order. Column block t
// (width B) holds step t.
struct LstmCache {
  Mat x;       // D x TB
  Mat gates;   // 4H x TB, activated
  Mat c;       // H x TB
  Mat tanh_c;  // H x TB
  Mat h;       // H x TB
};

LstmCache lstm_forward(const LstmParams& p, Mat x, int steps, Eigen::Index batch) {
  const Eigen::Index h = p.wh.cols();
  LstmCache k;
  k.gates.noalias() = p.wx * x;
  k.x = std::move(x);
  k.gates.colwise() += p.b.col(0);
  k.c.resize(h, steps * batch);
  k.tanh_c.resize(h, steps * batch);
  k.h.resize(h, steps * batch);
  for (int t = 0; t < steps; ++t) {
    auto g = k.gates.middleCols(t * batch, batch);
    if (t > 0) g.noalias() += p.wh * k.h.middleCols((t - 1) * batch, batch);
    sigmoid_inplace(g.topRows(2 * h));
    tanh_inplace(g.middleRows(2 * h, h));
    sigmoid_inplace(g.bottomRows(h));
    auto c = k.c.middleCols(t * batch, batch);
    c = g.topRows(h).cwiseProduct(g.middleRows(2 * h, h));
    if (t > 0) c += g.middleRows(h, h).cwiseProduct(k.c.middleCols((t - 1) * batch, batch));
    k.tanh_c.middleCols(t * batch, batch) = c;
    tanh_inplace(k.tanh_c.middleCols(t * batch, batch));
    k.h.middleCols(t * batch, batch) =
        g.bottomRows(h).cwiseProduct(k.tanh_c.middleCols(t * batch, batch));
  }
  return k;
}

// Accumulates parameter gradients and returns the gradient w.r.t. x.
Mat lstm_backward(const LstmParams& p, const LstmCache& k, const Mat& dh_out, int steps,
                  Eigen::Index batch, LstmGrads& grads) {
  const Eigen::Index h = p.wh.cols();
  Mat dg(4 * h, steps * batch);
  Mat dh_next = Mat::Zero(h, batch);
  Mat dc_next = Mat::Zero(h, batch);
  for (int t = steps - 1; t >= 0; --t) {
    const auto g = k.gates.middleCols(t * batch, batch);
    const auto i = g.topRows(h).array();
    const auto f = g.middleRows(h, h).array();
    const auto cand = g.middleRows(2 * h, h).array();
    const auto o = g.bottomRows(h).array();
    const auto tc = k.tanh_c.middleCols(t * batch, batch).array();

    const Mat dh = dh_out.middleCols(t * batch, batch) + dh_next;
    const Mat dc = dc_next.array() + dh.array() * o * (1.0 - tc * tc);
    auto d = dg.middleCols(t * batch, batch);
    d.topRows(h) = (dc.array() * cand * i * (1.0 - i)).matrix();
    if (t > 0) {
      d.middleRows(h, h) =
          (dc.array() * k.c.middleCols((t - 1) * batch, batch).array() * f * (1.0 - f)).matrix();
    } else {
      d.middleRows(h, h).setZero();
    }
    d.middleRows(2 * h, h) = (dc.array() * i * (1.0 - cand * cand)).matrix();
    d.bottomRows(h) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dc_next = dc.array() * f;
    dh_next.noalias() = p.wh.transpose() * d;
  }
  grads.wx.noalias() += dg * k.x.transpose();
  if (steps > 1) {
    grads.wh.noalias() +=
        dg.rightCols((steps - 1) * batch) * k.h.leftCols((steps - 1) * batch).transpose();
  }
  grads.b.col(0) += dg.rowwise().sum();
  return p.wx.transpose() * dg;
}

Mat reverse_blocks(const Mat& x, int steps, Eigen::Index batch) {
  Mat out(x.rows(), x.cols());
  for (int t = 0; t < steps; ++t) {
    out.middleCols(t * batch, batch) = x.middleCols((steps - 1 - t) * batch, batch);
  }
  return out;
}

struct BiCache {
  LstmCache fwd;
  LstmCache bwd;  // processing order = reversed time
};

struct TensorIndex {
  std::size_t conv_kernel, conv_bias;
  std::vector<std::array<std::size_t, 6>> lstm;  // fwd input/rec/bias, bwd input/rec/bias
  std::vector<std::size_t> dense_kernel, dense_bias;  // hidden layers, then output
};

TensorIndex index_tensors(const NetworkConfig& c) {
  TensorIndex ix;
  std::size_t n = 0;
  ix.conv_kernel = n++;
  ix.conv_bias = n++;
  for (std::size_t l = 0; l < c.recurrent_units.size(); ++l) {
    std::array<std::size_t, 6> a{};
    for (auto& v : a) v = n++;
    ix.lstm.push_back(a);
  }
  for (std::size_t j = 0; j <= c.fc_units.size(); ++j) {
    ix.dense_kernel.push_back(n++);
    ix.dense_bias.push_back(n++);
  }
  return ix;
}

class Pass {
 public:
  Pass(const NetworkWeights& w)
      : w_(w), cfg_(w.config), layout_(w.config), ix_(index_tensors(w.config)) {
    w.check();
  }

  CMap param(std::size_t i) const { return w_.tensor(layout_.tensors()[i]); }

  LstmParams lstm_params(std::size_t layer, int dir) const {
    const auto& a = ix_.lstm[layer];
    return {param(a[3 * dir]), param(a[3 * dir + 1]), param(a[3 * dir + 2])};
  }

  // Returns logits (classes x batch).
  Mat run(const Mat& raw, Rng* dropout_rng) {
    const Eigen::Index in_rows = static_cast<Eigen::Index>(cfg_.input_length) * cfg_.input_channels;
    if (raw.rows() != in_rows) {
      throw StructuralError("input has " + std::to_string(raw.rows()) + " rows, network expects " +
                            std::to_string(in_rows));
    }
    batch_ = raw.cols();
    x_ = ((raw.array() - w_.input_mean) / w_.input_std).matrix();

    // Convolution with ReLU, then max pooling.
    const int conv_len = cfg_.conv_length();
    const int pooled = cfg_.pooled_length();
    const Eigen::Index patch = static_cast<Eigen::Index>(cfg_.conv_kernel) * cfg_.input_channels;
    const auto kernel = param(ix_.conv_kernel);
    const auto bias = param(ix_.conv_bias);
    conv_.resize(cfg_.conv_filters, conv_len * batch_);
    for (int p = 0; p < conv_len; ++p) {
      auto z = conv_.middleCols(p * batch_, batch_);
      z.noalias() = kernel * x_.middleRows(static_cast<Eigen::Index>(p) * cfg_.input_channels, patch);
      z.colwise() += bias.col(0);
    }
    conv_ = conv_.cwiseMax(0.0);
    pool_.resize(cfg_.conv_filters, pooled * batch_);
    argmax_.assign(static_cast<std::size_t>(pool_.size()), 0);
    for (int q = 0; q < pooled; ++q) {
      for (Eigen::Index b = 0; b < batch_; ++b) {
        for (Eigen::Index f = 0; f < pool_.rows(); ++f) {
          int best = q * cfg_.pool_factor;
          double v = conv_(f, best * batch_ + b);
          for (int j = 1; j < cfg_.pool_factor; ++j) {
            const int p = q * cfg_.pool_factor + j;
            if (conv_(f, p * batch_ + b) > v) {
              v = conv_(f, p * batch_ + b);
              best = p;
            }
          }
          pool_(f, q * batch_ + b) = v;
          argmax_[static_cast<std::size_t>(f + pool_.rows() * (q * batch_ + b))] = best;
        }
      }
    }

    // Bidirectional recurrent stack.
    const std::size_t layers = cfg_.recurrent_units.size();
    bi_.clear();
    Mat seq = pool_;
    Mat features;
    for (std::size_t l = 0; l < layers; ++l) {
      BiCache cache;
      cache.fwd = lstm_forward(lstm_params(l, 0), seq, pooled, batch_);
      cache.bwd = lstm_forward(lstm_params(l, 1), reverse_blocks(seq, pooled, batch_), pooled,
                               batch_);
      const Eigen::Index h = cfg_.recurrent_units[l];
      if (l + 1 < layers) {
        seq.resize(2 * h, pooled * batch_);
        seq.topRows(h) = cache.fwd.h;
        seq.bottomRows(h) = reverse_blocks(cache.bwd.h, pooled, batch_);
      } else {
        features.resize(2 * h, batch_);
        features.topRows(h) = cache.fwd.h.rightCols(batch_);
        features.bottomRows(h) = cache.bwd.h.rightCols(batch_);
      }
      bi_.push_back(std::move(cache));
    }

    // Dense stack; dropout before the first two dense layers.
    const std::size_t dense = cfg_.fc_units.size() + 1;
    dense_in_.assign(dense, Mat());
    masks_.assign(dense, Mat());
    dense_out_.assign(dense, Mat());
    Mat a = std::move(features);
    for (std::size_t j = 0; j < dense; ++j) {
      if (dropout_rng != nullptr && j < cfg_.dropout.size() && cfg_.dropout[j] > 0.0) {
        const double p = cfg_.dropout[j];
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Mat m(a.rows(), a.cols());
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
          for (Eigen::Index r = 0; r < m.rows(); ++r) {
            m(r, c) = u(*dropout_rng) >= p ? 1.0 / (1.0 - p) : 0.0;
          }
        }
        a = a.cwiseProduct(m);
        masks_[j] = std::move(m);
      }
      Mat z = param(ix_.dense_kernel[j]) * a;
      z.colwise() += param(ix_.dense_bias[j]).col(0);
      dense_in_[j] = std::move(a);
      if (j + 1 < dense) {
        a = z.cwiseMax(0.0);
        dense_out_[j] = a;
      } else {
        dense_out_[j] = z;
      }
    }
    return dense_out_.back();
  }

  void backward(const Mat& dlogits, ParamVector& grad) {
    auto gmap = [&](std::size_t i) {
      const auto& t = layout_.tensors()[i];
      return MMap(grad.data() + t.offset, t.rows, t.cols);
    };
    const std::size_t dense = cfg_.fc_units.size() + 1;
    Mat d = dlogits;
    for (std::size_t jj = dense; jj-- > 0;) {
      if (jj + 1 < dense) d = d.cwiseProduct((dense_out_[jj].array() > 0.0).cast<double>().matrix());
      gmap(ix_.dense_kernel[jj]).noalias() += d * dense_in_[jj].transpose();
      gmap(ix_.dense_bias[jj]).col(0) += d.rowwise().sum();
      d = param(ix_.dense_kernel[jj]).transpose() * d;
      if (masks_[jj].size() > 0) d = d.cwiseProduct(masks_[jj]);
    }

    const int pooled = cfg_.pooled_length();
    const std::size_t layers = cfg_.recurrent_units.size();
    Mat dseq;
    for (std::size_t l = layers; l-- > 0;) {
      const Eigen::Index h = cfg_.recurrent_units[l];
      Mat dh_f = Mat::Zero(h, pooled * batch_);
      Mat dh_b = Mat::Zero(h, pooled * batch_);
      if (l + 1 == layers) {
        dh_f.rightCols(batch_) = d.topRows(h);
        dh_b.rightCols(batch_) = d.bottomRows(h);
      } else {
        dh_f = dseq.topRows(h);
        dh_b = reverse_blocks(dseq.bottomRows(h), pooled, batch_);
      }
      const auto& a = ix_.lstm[l];
      LstmGrads gf{gmap(a[0]), gmap(a[1]), gmap(a[2])};
      LstmGrads gb{gmap(a[3]), gmap(a[4]), gmap(a[5])};
      Mat dx = lstm_backward(lstm_params(l, 0), bi_[l].fwd, dh_f, pooled, batch_, gf);
      dx += reverse_blocks(
          lstm_backward(lstm_params(l, 1), bi_[l].bwd, dh_b, pooled, batch_, gb), pooled, batch_);
      dseq = std::move(dx);
    }

    // Unpool into the conv activations, through ReLU, into the kernel.
    const int conv_len = cfg_.conv_length();
    Mat dconv = Mat::Zero(conv_.rows(), conv_.cols());
    for (int q = 0; q < pooled; ++q) {
      for (Eigen::Index b = 0; b < batch_; ++b) {
        for (Eigen::Index f = 0; f < pool_.rows(); ++f) {
          const int p = argmax_[static_cast<std::size_t>(f + pool_.rows() * (q * batch_ + b))];
          dconv(f, p * batch_ + b) += dseq(f, q * batch_ + b);
        }
      }
    }
    dconv = dconv.cwiseProduct((conv_.array() > 0.0).cast<double>().matrix());
    const Eigen::Index patch = static_cast<Eigen::Index>(cfg_.conv_kernel) * cfg_.input_channels;
    auto gk = gmap(ix_.conv_kernel);
    auto gb = gmap(ix_.conv_bias);
    for (int p = 0; p < conv_len; ++p) {
      const auto dz = dconv.middleCols(p * batch_, batch_);
      gk.noalias() +=
          dz * x_.middleRows(static_cast<Eigen::Index>(p) * cfg_.input_channels, patch).transpose();
      gb.col(0) += dz.rowwise().sum();
    }
  }

 private:
  const NetworkWeights& w_;
  const NetworkConfig& cfg_;
  ParameterLayout layout_;
  TensorIndex ix_;
  Eigen::Index batch_ = 0;
  Mat x_, conv_, pool_;
  std::vector<int> argmax_;
  std::vector<BiCache> bi_;
  std::vector<Mat> dense_in_, masks_, dense_out_;
};

Mat softmax(const Mat& logits) {
  Mat p = logits.rowwise() - logits.colwise().maxCoeff();
  p = p.array().exp();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

}  // namespace

Mat forward(const NetworkWeights& weights, const Mat& raw_inputs, Rng* dropout_rng) {
  Pass pass(weights);
  return softmax(pass.run(raw_inputs, dropout_rng));
}

Mat bidirectional_layer(const NetworkWeights& weights, int layer, const Mat& sequence, int steps,
                        bool final_only) {
  Pass pass(weights);
  const auto l = static_cast<std::size_t>(layer);
  if (l >= weights.config.recurrent_units.size()) throw StructuralError("no such recurrent layer");
  const Eigen::Index batch = sequence.cols() / steps;
  const Eigen::Index h = weights.config.recurrent_units[l];
  const auto fwd = lstm_forward(pass.lstm_params(l, 0), sequence, steps, batch);
  const auto bwd =
      lstm_forward(pass.lstm_params(l, 1), reverse_blocks(sequence, steps, batch), steps, batch);
  if (final_only) {
    Mat out(2 * h, batch);
    out.topRows(h) = fwd.h.rightCols(batch);
    out.bottomRows(h) = bwd.h.rightCols(batch);
    return out;
  }
  Mat out(2 * h, steps * batch);
  out.topRows(h) = fwd.h;
  out.bottomRows(h) = reverse_blocks(bwd.h, steps, batch);
  return out;
}

LossAndGradient loss_and_gradients(const NetworkWeights& weights, const Mat& raw_inputs,
                                   std::span<const std::uint8_t> labels, Rng* dropout_rng,
                                   std::size_t batch_index) {
  if (labels.empty() || static_cast<Eigen::Index>(labels.size()) != raw_inputs.cols()) {
    throw DomainError("batch must be non-empty with one label per window");
  }
  Pass pass(weights);
  const Mat logits = pass.run(raw_inputs, dropout_rng);
  const Mat probs = softmax(logits);
  const auto batch = static_cast<double>(labels.size());
  double loss = 0.0;
  Mat d = probs;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const auto col = static_cast<Eigen::Index>(b);
    const double m = logits.col(col).maxCoeff();
    const double lse = m + std::log((logits.col(col).array() - m).exp().sum());
    loss += lse - logits(labels[b], col);
    d(labels[b], col) -= 1.0;
  }
  loss /= batch;
  if (!std::isfinite(loss)) {
    throw NumericalError("non-finite loss in batch " + std::to_string(batch_index));
  }
  d /= batch;
  LossAndGradient out{loss, ParamVector(weights.params.size(), 0.0)};
  pass.backward(d, out.gradient);
  return out;
}

namespace {
constexpr std::size_t kEvalChunk = 256;
}

double mean_loss(const NetworkWeights& weights, const WindowSet& samples) {
  if (samples.empty()) throw DomainError("no samples to evaluate");
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < samples.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(samples.size(), begin + kEvalChunk);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    Pass pass(weights);
    const Mat logits = pass.run(batch_matrix(samples, idx), nullptr);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const auto col = static_cast<Eigen::Index>(b);
      const double m = logits.col(col).maxCoeff();
      const double lse = m + std::log((logits.col(col).array() - m).exp().sum());
      total += lse - logits(samples.label(idx[b]), col);
    }
  }
  return total / static_cast<double>(samples.size());
}

std::vector<std::uint8_t> predict(const NetworkWeights& weights, const WindowSet& samples) {
  std::vector<std::uint8_t> out;
  out.reserve(samples.size());
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < samples.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(samples.size(), begin + kEvalChunk);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Mat p = forward(weights, batch_matrix(samples, idx));
    for (Eigen::Index b = 0; b < p.cols(); ++b) {
      Eigen::Index arg;
      p.col(b).maxCoeff(&arg);
      out.push_back(static_cast<std::uint8_t>(arg));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[8] = {'O', 'C', 'C', 'U', 'S', 'I', 'M', 'W'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little, "weight files are little-endian");

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const char* what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw FormatError(std::string("truncated weight file while reading ") + what);
  }
  return v;
}

std::string get_string(std::istream& in, std::uint64_t size, const char* what) {
  if (size > (1u << 26)) throw FormatError(std::string("implausible length for ") + what);
  std::string s(size, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(size))) {
    throw FormatError(std::string("truncated weight file while reading ") + what);
  }
  return s;
}

std::string shape_string(Eigen::Index r, Eigen::Index c) {
  return "(" + std::to_string(r) + ", " + std::to_string(c) + ")";
}

}  // namespace

void save_weights(const std::filesystem::path& path, const NetworkWeights& weights) {
  weights.check();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  nlohmann::json header;
  header["config"] = weights.config;
  const std::string text = header.dump();
  out.write(kMagic, sizeof kMagic);
  put(out, kFormatVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put(out, weights.input_mean);
  put(out, weights.input_std);
  const ParameterLayout layout(weights.config);
  put<std::uint64_t>(out, layout.tensors().size());
  for (const auto& t : layout.tensors()) {
    put<std::uint64_t>(out, t.name.size());
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols));
    const auto m = weights.tensor(t);
    for (Eigen::Index r = 0; r < t.rows; ++r) {
      for (Eigen::Index c = 0; c < t.cols; ++c) put(out, m(r, c));
    }
  }
  if (!out) throw Error("failed writing " + path.string());
}

NetworkWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError(path.string() + " is not a weight file");
  }
  const auto version = get<std::uint32_t>(in, "version");
  if (version != kFormatVersion) {
    throw FormatError("unsupported weight file version " + std::to_string(version));
  }
  const auto header_size = get<std::uint64_t>(in, "header length");
  const std::string text = get_string(in, header_size, "header");
  NetworkWeights w;
  try {
    w.config = nlohmann::json::parse(text).at("config").get<NetworkConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad weight file header: ") + e.what());
  }
  w.input_mean = get<double>(in, "normalization mean");
  w.input_std = get<double>(in, "normalization std");
  const ParameterLayout layout(w.config);
  const auto count = get<std::uint64_t>(in, "tensor count");
  if (count != layout.tensors().size()) {
    throw StructuralError("file holds " + std::to_string(count) + " tensors, config implies " +
                          std::to_string(layout.tensors().size()));
  }
  w.params.assign(layout.total_size(), 0.0);
  for (const auto& t : layout.tensors()) {
    const std::string name = get_string(in, get<std::uint64_t>(in, "name length"), "tensor name");
    const auto rows = static_cast<Eigen::Index>(get<std::uint64_t>(in, "tensor rows"));
    const auto cols = static_cast<Eigen::Index>(get<std::uint64_t>(in, "tensor cols"));
    if (name != t.name || rows != t.rows || cols != t.cols) {
      throw StructuralError("tensor " + name + " has shape " + shape_string(rows, cols) +
                            ", expected " + t.name + " " + shape_string(t.rows, t.cols));
    }
    auto m = w.tensor(t);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get<double>(in, "tensor data");
    }
  }
  for (double v : w.params) {
    if (!std::isfinite(v)) throw FormatError("weight file contains non-finite values");
  }
  return w;
}

NetworkWeights load_weights(const std::filesystem::path& path, const NetworkConfig& expected) {
  NetworkWeights w = load_weights(path);
  if (w.config == expected) return w;
  const ParameterLayout want(expected);
  const ParameterLayout have(w.config);
  const std::size_t n = std::min(want.tensors().size(), have.tensors().size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = want.tensors()[i];
    const auto& b = have.tensors()[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) {
      throw StructuralError("tensor " + b.name + " has shape " + shape_string(b.rows, b.cols) +
                            ", expected " + a.name + " " + shape_string(a.rows, a.cols));
    }
  }
  if (want.tensors().size() != have.tensors().size()) {
    throw StructuralError("file holds " + std::to_string(have.tensors().size()) +
                          " tensors, expected " + std::to_string(want.tensors().size()));
  }
  throw StructuralError("network config differs from the expected one (dropout or classes)");
}

}  // namespace occusim
