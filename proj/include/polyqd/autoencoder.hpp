// Copyright 2026 The PolyQD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * \file polyqd/autoencoder.hpp
 *
 * \brief Small convolutional autoencoder for 64x64 binary shapes.
 *
 * Encoder: conv 1->8 (64->32), ReLU, conv 8->8 (32->16), ReLU, flatten,
 * dense 2048->latent. Decoder: dense latent->128, ReLU, reshape 8x4x4, four
 * transposed convolutions 4->8->16->32->64 (the last to one channel) with
 * ReLU between them and a logistic output. All convolutions use a 3x3
 * kernel, stride 2 and zero padding 1; transposed ones add one row/column of
 * output padding so each layer doubles the size exactly.
 *
 * Activations are column blocks: a spatial tensor of a batch is a
 * C x (B*H*W) matrix, column b*H*W + y*W + x; dense activations are N x B.
 * Everything is templated on the scalar so gradient checks can run in double
 * while training runs in float.
 */

#ifndef POLYQD_AUTOENCODER_HPP
#define POLYQD_AUTOENCODER_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyqd/geometry.hpp"

namespace polyqd {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

class TrainingDivergedError : public std::runtime_error {
 public:
  explicit TrainingDivergedError(std::size_t epoch)
      : std::runtime_error("autoencoder training diverged (non-finite loss) in epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  [[nodiscard]] std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

namespace nn {

// Patch extraction for a 3x3, stride-2, pad-1 convolution from a
// (channels, H, W) image onto an (H/2, W/2) grid. Row c*9 + ky*3 + kx,
// column b*Ho*Wo + oy*Wo + ox.
template <typename T>
void im2col(const Mat<T>& img, int channels, int h, int w, int batch, Mat<T>& col) {
  const int ho = h / 2, wo = w / 2;
  col.setZero(channels * 9, batch * ho * wo);
  for (int b = 0; b < batch; ++b)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        T* dst = col.data() + static_cast<Eigen::Index>(b * ho * wo + oy * wo + ox) * col.rows();
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= w) continue;
            const T* src = img.data() + static_cast<Eigen::Index>(b * h * w + iy * w + ix) * img.rows();
            for (int c = 0; c < channels; ++c) dst[c * 9 + ky * 3 + kx] = src[c];
          }
        }
      }
}

// Adjoint of im2col: scatter-add patches back into the image.
template <typename T>
void col2im(const Mat<T>& col, int channels, int h, int w, int batch, Mat<T>& img) {
  const int ho = h / 2, wo = w / 2;
  img.setZero(channels, batch * h * w);
  for (int b = 0; b < batch; ++b)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        const T* src = col.data() + static_cast<Eigen::Index>(b * ho * wo + oy * wo + ox) * col.rows();
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= w) continue;
            T* dst = img.data() + static_cast<Eigen::Index>(b * h * w + iy * w + ix) * img.rows();
            for (int c = 0; c < channels; ++c) dst[c] += src[c * 9 + ky * 3 + kx];
          }
        }
      }
}

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  [[nodiscard]] virtual std::string kind() const = 0;
  /// Caches what backward() needs.
  virtual Mat<T> forward(const Mat<T>& x, int batch) = 0;
  /// Returns d(loss)/d(input) and overwrites the parameter gradients.
  virtual Mat<T> backward(const Mat<T>& dy) = 0;
  virtual std::vector<Mat<T>*> params() { return {}; }
  virtual std::vector<Mat<T>*> grads() { return {}; }
  [[nodiscard]] virtual std::unique_ptr<Layer> clone() const = 0;
  /// Average number of inputs feeding one output; 0 for parameter-free layers.
  [[nodiscard]] virtual double fan_in() const { return 0.0; }
};

/// 3x3 stride-2 convolution, (cin, h, w) -> (cout, h/2, w/2).
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(int cin, int cout, int h, int w) : cin_(cin), cout_(cout), h_(h), w_(w) {
    if (h % 2 || w % 2) throw std::invalid_argument("Conv2d: spatial size must be even");
    weight_.setZero(cout, cin * 9);
    bias_.setZero(cout, 1);
  }
  [[nodiscard]] std::string kind() const override { return "conv"; }
  Mat<T> forward(const Mat<T>& x, int batch) override {
    if (x.rows() != cin_ || x.cols() != static_cast<Eigen::Index>(batch) * h_ * w_)
      throw DimensionError("Conv2d: input shape mismatch");
    batch_ = batch;
    im2col(x, cin_, h_, w_, batch, col_);
    Mat<T> y = weight_ * col_;
    y.colwise() += bias_.col(0);
    return y;
  }
  Mat<T> backward(const Mat<T>& dy) override {
    dweight_.noalias() = dy * col_.transpose();
    dbias_ = dy.rowwise().sum();
    const Mat<T> dcol = weight_.transpose() * dy;
    Mat<T> dx;
    col2im(dcol, cin_, h_, w_, batch_, dx);
    return dx;
  }
  std::vector<Mat<T>*> params() override { return {&weight_, &bias_}; }
  std::vector<Mat<T>*> grads() override { return {&dweight_, &dbias_}; }
  [[nodiscard]] std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }
  [[nodiscard]] double fan_in() const override { return 9.0 * cin_; }

 private:
  int cin_, cout_, h_, w_;
  int batch_ = 0;
  Mat<T> weight_, bias_, dweight_, dbias_, col_;
};

/// 3x3 stride-2 transposed convolution, (cin, h, w) -> (cout, 2h, 2w).
/// Exactly the adjoint of Conv2d on the (cout, 2h, 2w) side.
template <typename T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(int cin, int cout, int h, int w) : cin_(cin), cout_(cout), h_(h), w_(w) {
    weight_.setZero(cout * 9, cin);
    bias_.setZero(cout, 1);
  }
  [[nodiscard]] std::string kind() const override { return "conv_transpose"; }
  Mat<T> forward(const Mat<T>& x, int batch) override {
    if (x.rows() != cin_ || x.cols() != static_cast<Eigen::Index>(batch) * h_ * w_)
      throw DimensionError("ConvTranspose2d: input shape mismatch");
    batch_ = batch;
    x_ = x;
    const Mat<T> cols = weight_ * x;
    Mat<T> y;
    col2im(cols, cout_, 2 * h_, 2 * w_, batch, y);
    y.colwise() += bias_.col(0);
    return y;
  }
  Mat<T> backward(const Mat<T>& dy) override {
    Mat<T> dcols;
    im2col(dy, cout_, 2 * h_, 2 * w_, batch_, dcols);
    dweight_.noalias() = dcols * x_.transpose();
    dbias_ = dy.rowwise().sum();
    return weight_.transpose() * dcols;
  }
  std::vector<Mat<T>*> params() override { return {&weight_, &bias_}; }
  std::vector<Mat<T>*> grads() override { return {&dweight_, &dbias_}; }
  [[nodiscard]] std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ConvTranspose2d>(*this); }
  // Each output pixel sees on average 9/4 kernel taps per input channel.
  [[nodiscard]] double fan_in() const override { return 9.0 * cin_ / 4.0; }

 private:
  int cin_, cout_, h_, w_;
  int batch_ = 0;
  Mat<T> weight_, bias_, dweight_, dbias_, x_;
};

template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(int nin, int nout) : nin_(nin) {
    weight_.setZero(nout, nin);
    bias_.setZero(nout, 1);
  }
  [[nodiscard]] std::string kind() const override { return "dense"; }
  Mat<T> forward(const Mat<T>& x, int batch) override {
    if (x.rows() != nin_ || x.cols() != batch) throw DimensionError("Dense: input shape mismatch");
    x_ = x;
    Mat<T> y = weight_ * x;
    y.colwise() += bias_.col(0);
    return y;
  }
  Mat<T> backward(const Mat<T>& dy) override {
    dweight_.noalias() = dy * x_.transpose();
    dbias_ = dy.rowwise().sum();
    return weight_.transpose() * dy;
  }
  std::vector<Mat<T>*> params() override { return {&weight_, &bias_}; }
  std::vector<Mat<T>*> grads() override { return {&dweight_, &dbias_}; }
  [[nodiscard]] std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }
  [[nodiscard]] double fan_in() const override { return nin_; }

 private:
  int nin_;
  Mat<T> weight_, bias_, dweight_, dbias_, x_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  [[nodiscard]] std::string kind() const override { return "relu"; }
  Mat<T> forward(const Mat<T>& x, int) override {
    y_ = x.cwiseMax(T(0));
    return y_;
  }
  Mat<T> backward(const Mat<T>& dy) override {
    return (y_.array() > T(0)).select(dy, T(0));
  }
  [[nodiscard]] std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReLU>(*this); }

 private:
  Mat<T> y_;
};

template <typename T>
class Sigmoid final : public Layer<T> {
 public:
  [[nodiscard]] std::string kind() const override { return "sigmoid"; }
  Mat<T> forward(const Mat<T>& x, int) override {
    y_ = x.unaryExpr([](T v) { return T(1) / (T(1) + std::exp(-v)); });
    return y_;
  }
  Mat<T> backward(const Mat<T>& dy) override {
    return (dy.array() * y_.array() * (T(1) - y_.array())).matrix();
  }
  [[nodiscard]] std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Sigmoid>(*this); }

 private:
  Mat<T> y_;
};

/// (c, B*h*w) <-> (c*h*w, B); `to_dense` selects the direction.
template <typename T>
class Reshape final : public Layer<T> {
 public:
  Reshape(int c, int h, int w, bool to_dense) : c_(c), hw_(h * w), to_dense_(to_dense) {}
  [[nodiscard]] std::string kind() const override { return to_dense_ ? "flatten" : "unflatten"; }
  Mat<T> forward(const Mat<T>& x, int batch) override {
    batch_ = batch;
    return to_dense_ ? flatten(x) : unflatten(x);
  }
  Mat<T> backward(const Mat<T>& dy) override { return to_dense_ ? unflatten(dy) : flatten(dy); }
  [[nodiscard]] std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Reshape>(*this); }

 private:
  Mat<T> flatten(const Mat<T>& x) const {
    if (x.rows() != c_ || x.cols() != static_cast<Eigen::Index>(batch_) * hw_)
      throw DimensionError("Reshape: spatial input shape mismatch");
    Mat<T> y(c_ * hw_, batch_);
    for (int b = 0; b < batch_; ++b)
      for (int p = 0; p < hw_; ++p)
        for (int c = 0; c < c_; ++c) y(c * hw_ + p, b) = x(c, b * hw_ + p);
    return y;
  }
  Mat<T> unflatten(const Mat<T>& x) const {
    if (x.rows() != static_cast<Eigen::Index>(c_) * hw_ || x.cols() != batch_)
      throw DimensionError("Reshape: dense input shape mismatch");
    Mat<T> y(c_, static_cast<Eigen::Index>(batch_) * hw_);
    for (int b = 0; b < batch_; ++b)
      for (int p = 0; p < hw_; ++p)
        for (int c = 0; c < c_; ++c) y(c, b * hw_ + p) = x(c * hw_ + p, b);
    return y;
  }

  int c_, hw_;
  bool to_dense_;
  int batch_ = 0;
};

template <typename T>
using LayerStack = std::vector<std::unique_ptr<Layer<T>>>;

template <typename T>
Mat<T> forward_stack(LayerStack<T>& layers, Mat<T> x, int batch) {
  for (auto& l : layers) x = l->forward(x, batch);
  return x;
}

template <typename T>
Mat<T> backward_stack(LayerStack<T>& layers, Mat<T> dy) {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) dy = (*it)->backward(dy);
  return dy;
}

template <typename T>
LayerStack<T> clone_stack(const LayerStack<T>& s) {
  LayerStack<T> out;
  out.reserve(s.size());
  for (const auto& l : s) out.push_back(l->clone());
  return out;
}

}  // namespace nn

inline constexpr int kFilters = 8;

/// Convolutional autoencoder, 64x64x1 <-> latent_dim.
template <typename T = float>
class CAEModel {
 public:
  CAEModel(int latent_dim, std::uint64_t seed) : latent_(latent_dim), seed_(seed) {
    if (latent_dim < 1) throw std::invalid_argument("CAEModel: latent_dim must be >= 1");
    using namespace nn;
    encoder_.push_back(std::make_unique<Conv2d<T>>(1, kFilters, 64, 64));
    encoder_.push_back(std::make_unique<ReLU<T>>());
    encoder_.push_back(std::make_unique<Conv2d<T>>(kFilters, kFilters, 32, 32));
    encoder_.push_back(std::make_unique<ReLU<T>>());
    encoder_.push_back(std::make_unique<Reshape<T>>(kFilters, 16, 16, true));
    encoder_.push_back(std::make_unique<Dense<T>>(kFilters * 16 * 16, latent_dim));

    decoder_.push_back(std::make_unique<Dense<T>>(latent_dim, kFilters * 4 * 4));
    decoder_.push_back(std::make_unique<ReLU<T>>());
    decoder_.push_back(std::make_unique<Reshape<T>>(kFilters, 4, 4, false));
    int size = 4;
    for (int k = 0; k < 4; ++k, size *= 2) {
      const int cout = k == 3 ? 1 : kFilters;
      decoder_.push_back(std::make_unique<ConvTranspose2d<T>>(kFilters, cout, size, size));
      decoder_.push_back(k == 3 ? std::unique_ptr<Layer<T>>(std::make_unique<Sigmoid<T>>())
                                : std::unique_ptr<Layer<T>>(std::make_unique<ReLU<T>>()));
    }
    initialize();
  }

  CAEModel(const CAEModel& o) : latent_(o.latent_), seed_(o.seed_),
      encoder_(nn::clone_stack(o.encoder_)), decoder_(nn::clone_stack(o.decoder_)) {}
  CAEModel& operator=(const CAEModel& o) {
    if (this != &o) {
      latent_ = o.latent_;
      seed_ = o.seed_;
      encoder_ = nn::clone_stack(o.encoder_);
      decoder_ = nn::clone_stack(o.decoder_);
    }
    return *this;
  }
  CAEModel(CAEModel&&) noexcept = default;
  CAEModel& operator=(CAEModel&&) noexcept = default;

  [[nodiscard]] int latent_dim() const { return latent_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  /// Input batch as 1 x (B*4096), pixels in {0,1}.
  static Mat<T> batch_input(std::span<const Bitmap> bitmaps) {
    Mat<T> x(1, static_cast<Eigen::Index>(bitmaps.size()) * kPixels);
    for (std::size_t b = 0; b < bitmaps.size(); ++b)
      bitmaps[b].to_values(std::span<T>(x.data() + b * kPixels, kPixels));
    return x;
  }

  /// Latent codes, latent_dim x B.
  Mat<T> encode(const Mat<T>& x) {
    check_input(x);
    return nn::forward_stack(encoder_, x, batch_of(x));
  }
  /// Reconstruction, 1 x (B*4096), values in (0, 1).
  Mat<T> decode(const Mat<T>& z) {
    if (z.rows() != latent_) throw DimensionError("CAEModel::decode: latent dimension mismatch");
    return nn::forward_stack(decoder_, z, static_cast<int>(z.cols()));
  }

  struct Output {
    Mat<T> latent;
    Mat<T> reconstruction;
  };
  Output forward(const Mat<T>& x) {
    Output o;
    o.latent = encode(x);
    o.reconstruction = decode(o.latent);
    return o;
  }
  Output forward(const Bitmap& b) { return forward(batch_input(std::span<const Bitmap>(&b, 1))); }

  /// Mean squared error over the batch; fills every parameter gradient.
  T loss_and_gradients(const Mat<T>& x) {
    const auto o = forward(x);
    const Mat<T> diff = o.reconstruction - x;
    const T n = static_cast<T>(diff.size());
    const T loss = diff.squaredNorm() / n;
    Mat<T> dy = diff * (T(2) / n);
    dy = nn::backward_stack(decoder_, std::move(dy));
    (void)nn::backward_stack(encoder_, std::move(dy));
    return loss;
  }

  /// Mean squared reconstruction error without touching gradients.
  T loss(const Mat<T>& x) {
    const auto o = forward(x);
    return (o.reconstruction - x).squaredNorm() / static_cast<T>(x.size());
  }

  /// Parameters in file order: encoder then decoder, weight then bias.
  std::vector<Mat<T>*> params() {
    std::vector<Mat<T>*> p;
    for (auto* s : {&encoder_, &decoder_})
      for (auto& l : *s)
        for (auto* m : l->params()) p.push_back(m);
    return p;
  }
  std::vector<Mat<T>*> grads() {
    std::vector<Mat<T>*> g;
    for (auto* s : {&encoder_, &decoder_})
      for (auto& l : *s)
        for (auto* m : l->grads()) g.push_back(m);
    return g;
  }
  [[nodiscard]] std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* m : params()) n += static_cast<std::size_t>(m->size());
    return n;
  }

  /// Same weights in another scalar type (e.g. double for gradient checks).
  template <typename U>
  [[nodiscard]] CAEModel<U> cast() const {
    CAEModel<U> out(latent_, seed_);
    auto src = const_cast<CAEModel*>(this)->params();
    auto dst = out.params();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<U>();
    return out;
  }

  /// One-line architecture description for manifests.
  [[nodiscard]] std::string architecture() const {
    std::string s;
    for (const auto* st : {&encoder_, &decoder_})
      for (const auto& l : *st) s += (s.empty() ? "" : ",") + l->kind();
    return s;
  }

 private:
  // Uniform(-b, b) weights with b = sqrt(6 / fan_in), zero biases, drawn in
  // file order from one generator.
  void initialize() {
    std::mt19937_64 rng(seed_);
    for (auto* s : {&encoder_, &decoder_})
      for (auto& l : *s) {
        auto ps = l->params();
        if (ps.empty()) continue;
        const double bound = std::sqrt(6.0 / l->fan_in());
        std::uniform_real_distribution<double> u(-bound, bound);
        Mat<T>& w = *ps[0];
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(u(rng));
        ps[1]->setZero();
      }
  }
  void check_input(const Mat<T>& x) const {
    if (x.rows() != 1 || x.cols() % kPixels != 0 || x.cols() == 0)
      throw DimensionError("CAEModel: input must be 1 x (B*4096)");
  }
  static int batch_of(const Mat<T>& x) { return static_cast<int>(x.cols() / kPixels); }

  int latent_;
  std::uint64_t seed_;
  nn::LayerStack<T> encoder_;
  nn::LayerStack<T> decoder_;
};

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t epochs = 350;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;  ///< shuffling order

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  }
};

template <typename T>
class Adam {
 public:
  Adam(const std::vector<Mat<T>*>& params, const TrainConfig& cfg) : cfg_(cfg) {
    for (auto* p : params) {
      m_.push_back(Mat<T>::Zero(p->rows(), p->cols()));
      v_.push_back(Mat<T>::Zero(p->rows(), p->cols()));
    }
  }

  void step(const std::vector<Mat<T>*>& params, const std::vector<Mat<T>*>& grads) {
    ++t_;
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T c1 = T(1) - static_cast<T>(std::pow(cfg_.beta1, static_cast<double>(t_)));
    const T c2 = T(1) - static_cast<T>(std::pow(cfg_.beta2, static_cast<double>(t_)));
    const T lr = static_cast<T>(cfg_.learning_rate), eps = static_cast<T>(cfg_.epsilon);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& g = *grads[i];
      m_[i] = b1 * m_[i] + (T(1) - b1) * g;
      v_[i] = b2 * v_[i] + (T(1) - b2) * g.cwiseProduct(g);
      params[i]->array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<Mat<T>> m_, v_;
  std::size_t t_ = 0;
};

/// Mini-batch Adam on MSE, continuing from the model's current weights with
/// fresh optimizer state. Returns the mean per-sample loss of every epoch.
/// The last batch of an epoch may be smaller than batch_size.
template <typename T>
std::vector<double> train(CAEModel<T>& model, std::span<const Bitmap> data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() < cfg.batch_size)
    throw std::invalid_argument("train: dataset smaller than batch_size");
  auto params = model.params();
  auto grads = model.grads();
  Adam<T> opt(params, cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const Mat<T> all = CAEModel<T>::batch_input(data);

  std::vector<double> history;
  history.reserve(cfg.epochs);
  Mat<T> x;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      x.resize(1, static_cast<Eigen::Index>(n * kPixels));
      for (std::size_t k = 0; k < n; ++k)
        x.middleCols(static_cast<Eigen::Index>(k * kPixels), kPixels) =
            all.middleCols(static_cast<Eigen::Index>(order[start + k] * kPixels), kPixels);
      const double l = static_cast<double>(model.loss_and_gradients(x));
      if (!std::isfinite(l)) throw TrainingDivergedError(epoch);
      total += l * static_cast<double>(n);
      opt.step(params, grads);
    }
    history.push_back(total / static_cast<double>(order.size()));
  }
  return history;
}

// ---------------------------------------------------------------------------
// Latent normalization.

/// Per-dimension min/max over a corpus of latent codes.
class LatentNormalizer {
 public:
  LatentNormalizer() = default;
  LatentNormalizer(std::vector<double> lo, std::vector<double> hi) : min_(std::move(lo)), max_(std::move(hi)) {
    if (min_.size() != max_.size()) throw DimensionError("LatentNormalizer: min/max length mismatch");
    for (std::size_t k = 0; k < min_.size(); ++k)
      if (max_[k] < min_[k]) throw std::invalid_argument("LatentNormalizer: max < min");
  }

  /// Fits on latent codes laid out latent_dim x N.
  template <typename T>
  static LatentNormalizer fit(const Mat<T>& z) {
    if (z.cols() == 0) throw std::invalid_argument("LatentNormalizer::fit: empty corpus");
    std::vector<double> lo(static_cast<std::size_t>(z.rows())), hi(lo.size());
    for (Eigen::Index k = 0; k < z.rows(); ++k) {
      lo[static_cast<std::size_t>(k)] = static_cast<double>(z.row(k).minCoeff());
      hi[static_cast<std::size_t>(k)] = static_cast<double>(z.row(k).maxCoeff());
    }
    return {std::move(lo), std::move(hi)};
  }

  [[nodiscard]] std::size_t dimension() const { return min_.size(); }
  [[nodiscard]] const std::vector<double>& min() const { return min_; }
  [[nodiscard]] const std::vector<double>& max() const { return max_; }

  /// (z - min) / (max - min) clamped to [0, 1]; a degenerate dimension maps
  /// to 0.5.
  template <typename Vec>
  [[nodiscard]] std::vector<double> apply(const Vec& z) const {
    if (static_cast<std::size_t>(z.size()) != min_.size()) throw DimensionError("LatentNormalizer: dimension mismatch");
    std::vector<double> out(min_.size());
    for (std::size_t k = 0; k < min_.size(); ++k) {
      const double span = max_[k] - min_[k];
      out[k] = span > 0.0 ? std::clamp((static_cast<double>(z[static_cast<Eigen::Index>(k)]) - min_[k]) / span, 0.0, 1.0)
                          : 0.5;
    }
    return out;
  }

 private:
  std::vector<double> min_, max_;
};

/// Encodes bitmaps one at a time, latent_dim x N. Batched products sum in a
/// different order than single-column ones, so per-sample encoding keeps a
/// bitmap's code independent of whatever else is encoded with it.
template <typename T>
Mat<T> encode_all(CAEModel<T>& model, std::span<const Bitmap> bitmaps) {
  Mat<T> z(model.latent_dim(), static_cast<Eigen::Index>(bitmaps.size()));
  for (std::size_t i = 0; i < bitmaps.size(); ++i)
    z.col(static_cast<Eigen::Index>(i)) = model.encode(CAEModel<T>::batch_input(bitmaps.subspan(i, 1)));
  return z;
}

/// Normalized latent descriptor of one bitmap.
template <typename T>
std::vector<double> latent_descriptor(CAEModel<T>& model, const LatentNormalizer& norm, const Bitmap& b) {
  const Mat<T> z = model.encode(CAEModel<T>::batch_input(std::span<const Bitmap>(&b, 1)));
  return norm.apply(z.col(0));
}

// ---------------------------------------------------------------------------
// Serialization: "CAE1", uint32 latent_dim, uint64 seed, uint64 count, then
// count float32 values, parameters in file order, each matrix row-major.
// All little-endian.

namespace detail {

inline void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint64_t get_le(std::istream& is, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("weights file truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace detail

template <typename T>
void save_weights(std::ostream& os, CAEModel<T>& model) {
  os.write("CAE1", 4);
  detail::put_le(os, static_cast<std::uint32_t>(model.latent_dim()), 4);
  detail::put_le(os, model.seed(), 8);
  detail::put_le(os, model.parameter_count(), 8);
  for (auto* m : model.params())
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c)
        detail::put_le(os, std::bit_cast<std::uint32_t>(static_cast<float>((*m)(r, c))), 4);
}

template <typename T = float>
CAEModel<T> load_weights(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CAE1", 4) != 0) throw std::runtime_error("weights file: bad magic");
  const auto latent = static_cast<int>(detail::get_le(is, 4));
  const auto seed = detail::get_le(is, 8);
  const auto count = detail::get_le(is, 8);
  CAEModel<T> model(latent, seed);
  if (count != model.parameter_count()) throw std::runtime_error("weights file: parameter count mismatch");
  for (auto* m : model.params())
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c)
        (*m)(r, c) = static_cast<T>(std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(is, 4))));
  return model;
}

/// Sidecar text manifest for a weights file.
template <typename T>
void write_model_manifest(std::ostream& os, const CAEModel<T>& model, const TrainConfig& cfg,
                          const LatentNormalizer* norm = nullptr) {
  os << std::setprecision(17);
  os << "format=CAE1\n";
  os << "architecture=" << model.architecture() << '\n';
  os << "latent_dim=" << model.latent_dim() << '\n';
  os << "seed=" << model.seed() << '\n';
  os << "learning_rate=" << cfg.learning_rate << '\n';
  os << "epochs=" << cfg.epochs << '\n';
  os << "batch_size=" << cfg.batch_size << '\n';
  if (norm) {
    os << "latent_min=";
    for (std::size_t k = 0; k < norm->dimension(); ++k) os << (k ? "," : "") << norm->min()[k];
    os << "\nlatent_max=";
    for (std::size_t k = 0; k < norm->dimension(); ++k) os << (k ? "," : "") << norm->max()[k];
    os << '\n';
  }
}

}  // namespace polyqd

#endif  // POLYQD_AUTOENCODER_HPP
