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

#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "polyqd/autoencoder.hpp"
#include "polyqd/evaluation.hpp"
#include "polyqd/sampling.hpp"

using namespace polyqd;
using MatD = Mat<double>;

namespace {

MatD random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  MatD m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

double rel_err(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-7}); }

// Checks d/dparams and d/dinput of L = sum(r .* layer(x)) against central
// differences.
void check_layer(nn::Layer<double>& layer, const MatD& x, int batch, std::mt19937_64& rng) {
  for (auto* p : layer.params()) *p = random_matrix(rng, p->rows(), p->cols(), -0.5, 0.5);
  const MatD y = layer.forward(x, batch);
  const MatD r = random_matrix(rng, y.rows(), y.cols());
  const MatD dx = layer.backward(r);
  auto loss = [&](const MatD& in) { return layer.forward(in, batch).cwiseProduct(r).sum(); };
  const double h = 1e-6;

  auto params = layer.params();
  auto grads = layer.grads();
  // Copy analytic gradients before forward() calls overwrite caches.
  std::vector<MatD> g;
  for (auto* q : grads) g.push_back(*q);
  for (std::size_t k = 0; k < params.size(); ++k) {
    MatD& p = *params[k];
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double keep = p.data()[i];
      p.data()[i] = keep + h;
      const double up = loss(x);
      p.data()[i] = keep - h;
      const double down = loss(x);
      p.data()[i] = keep;
      const double fd = (up - down) / (2 * h);
      ASSERT_LT(rel_err(g[k].data()[i], fd), 1e-4) << layer.kind() << " param " << k << " entry " << i;
    }
  }
  MatD xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = xp.data()[i];
    xp.data()[i] = keep + h;
    const double up = loss(xp);
    xp.data()[i] = keep - h;
    const double down = loss(xp);
    xp.data()[i] = keep;
    ASSERT_LT(rel_err(dx.data()[i], (up - down) / (2 * h)), 1e-4) << layer.kind() << " input " << i;
  }
}

std::vector<Bitmap> sobol_bitmaps(std::size_t n, const DomainBounds& b = {}) {
  std::vector<Bitmap> out;
  for (const auto& g : sobol_genomes(n, b)) out.push_back(evaluate(g, b).bitmap);
  return out;
}

bool same_params(CAEModel<float>& a, CAEModel<float>& b) {
  auto pa = a.params(), pb = b.params();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (*pa[i] != *pb[i]) return false;
  return true;
}

}  // namespace

// --- gradient checks on an 8x8 toy input ------------------------------------

TEST(Gradients, Convolution) {
  std::mt19937_64 rng(1);
  nn::Conv2d<double> conv(2, 3, 8, 8);
  check_layer(conv, random_matrix(rng, 2, 2 * 64), 2, rng);
}

TEST(Gradients, TransposedConvolution) {
  std::mt19937_64 rng(2);
  nn::ConvTranspose2d<double> tconv(2, 3, 4, 4);  // 4x4 -> 8x8
  check_layer(tconv, random_matrix(rng, 2, 2 * 16), 2, rng);
}

TEST(Gradients, Dense) {
  std::mt19937_64 rng(3);
  nn::Dense<double> dense(64, 5);
  check_layer(dense, random_matrix(rng, 64, 3), 3, rng);
}

TEST(Gradients, Sigmoid) {
  std::mt19937_64 rng(4);
  nn::Sigmoid<double> s;
  check_layer(s, random_matrix(rng, 1, 64, -4, 4), 1, rng);
}

TEST(Gradients, ReLU) {
  std::mt19937_64 rng(5);
  nn::ReLU<double> relu;
  // Keep inputs away from the kink.
  MatD x = random_matrix(rng, 3, 64, 0.05, 1.0);
  for (Eigen::Index i = 0; i < x.size(); i += 2) x.data()[i] = -x.data()[i];
  check_layer(relu, x, 1, rng);
}

TEST(Gradients, Reshape) {
  std::mt19937_64 rng(6);
  nn::Reshape<double> flat(2, 4, 4, true), unflat(2, 4, 4, false);
  check_layer(flat, random_matrix(rng, 2, 3 * 16), 3, rng);
  check_layer(unflat, random_matrix(rng, 32, 3), 3, rng);
}

TEST(Gradients, FullModelSampledEntries) {
  // Whole-network MSE gradient in double precision, a few entries per tensor.
  // Zero biases leave every unit fed by an all-zero patch exactly on the
  // ReLU kink, where finite differences average the two one-sided slopes.
  // Small random biases move them off it.
  CAEModel<float> f(3, 7);
  CAEModel<double> m = f.cast<double>();
  std::mt19937_64 brng(9);
  auto ps = m.params();
  for (std::size_t k = 1; k < ps.size(); k += 2) *ps[k] = random_matrix(brng, ps[k]->rows(), ps[k]->cols(), -0.05, 0.05);
  const auto bitmaps = sobol_bitmaps(3);
  const MatD x = CAEModel<double>::batch_input(bitmaps);
  m.loss_and_gradients(x);
  std::vector<MatD> g;
  for (auto* q : m.grads()) g.push_back(*q);
  auto params = m.params();
  std::mt19937_64 rng(8);
  const double h = 1e-6;
  int checked = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    MatD& p = *params[k];
    std::uniform_int_distribution<Eigen::Index> pick(0, p.size() - 1);
    for (int t = 0; t < 6; ++t) {
      const Eigen::Index i = pick(rng);
      const double keep = p.data()[i];
      p.data()[i] = keep + h;
      const double up = m.loss(x);
      p.data()[i] = keep - h;
      const double down = m.loss(x);
      p.data()[i] = keep;
      const double fd = (up - down) / (2 * h);
      if (std::fabs(fd) < 1e-9 && std::fabs(g[k].data()[i]) < 1e-9) continue;  // dead unit
      EXPECT_LT(rel_err(g[k].data()[i], fd), 1e-4) << "tensor " << k << " entry " << i;
      ++checked;
    }
  }
  EXPECT_GT(checked, 40);
}

// --- shapes and initialization ---------------------------------------------

TEST(CAE, ShapeContract) {
  for (int latent : {2, 5, 10}) {
    CAEModel<float> m(latent, 1);
    const auto bitmaps = sobol_bitmaps(3);
    const auto o = m.forward(CAEModel<float>::batch_input(bitmaps));
    EXPECT_EQ(o.latent.rows(), latent);
    EXPECT_EQ(o.latent.cols(), 3);
    EXPECT_EQ(o.reconstruction.rows(), 1);
    EXPECT_EQ(o.reconstruction.cols(), 3 * 4096);
  }
}

TEST(CAE, SpatialRoundTrip) {
  nn::Conv2d<float> c1(1, 8, 64, 64), c2(8, 8, 32, 32);
  const auto y1 = c1.forward(Mat<float>::Zero(1, 4096), 1);
  EXPECT_EQ(y1.cols(), 32 * 32);
  EXPECT_EQ(c2.forward(y1, 1).cols(), 16 * 16);
  int size = 4;
  for (int k = 0; k < 4; ++k, size *= 2) {
    nn::ConvTranspose2d<float> t(8, 8, size, size);
    EXPECT_EQ(t.forward(Mat<float>::Zero(8, size * size), 1).cols(), 4 * size * size);
  }
}

TEST(CAE, ArchitectureString) {
  CAEModel<float> m(2, 1);
  EXPECT_EQ(m.architecture(),
            "conv,relu,conv,relu,flatten,dense,dense,relu,unflatten,conv_transpose,relu,conv_transpose,relu,"
            "conv_transpose,relu,conv_transpose,sigmoid");
}

TEST(CAE, SameSeedSameWeights) {
  CAEModel<float> a(2, 42), b(2, 42), c(2, 43);
  EXPECT_TRUE(same_params(a, b));
  EXPECT_FALSE(same_params(a, c));
}

TEST(CAE, ZeroImageFiniteAndSquashed) {
  CAEModel<float> m(10, 3);
  const auto o = m.forward(Bitmap{});
  EXPECT_TRUE(o.latent.allFinite());
  EXPECT_TRUE(o.reconstruction.allFinite());
  EXPECT_GT(o.reconstruction.minCoeff(), 0.0f);
  EXPECT_LT(o.reconstruction.maxCoeff(), 1.0f);
}

TEST(CAE, IdenticalBitmapsIdenticalLatents) {
  CAEModel<float> m(5, 4);
  const auto b = sobol_bitmaps(4)[3];
  const std::vector<Bitmap> two{b, b};
  const auto z = m.encode(CAEModel<float>::batch_input(two));
  EXPECT_EQ(z.col(0), z.col(1));
  EXPECT_EQ(m.forward(b).latent, m.forward(b).latent);
}

TEST(CAE, Errors) {
  EXPECT_THROW(CAEModel<float>(0, 1), std::invalid_argument);
  CAEModel<float> m(2, 1);
  EXPECT_THROW(m.encode(Mat<float>::Zero(1, 100)), DimensionError);
  EXPECT_THROW(m.decode(Mat<float>::Zero(3, 1)), DimensionError);
}

// --- training ----------------------------------------------------------------

TEST(Train, ZeroLearningRateKeepsWeights) {
  CAEModel<float> m(2, 5), before(2, 5);
  const auto data = sobol_bitmaps(2);
  TrainConfig c;
  c.learning_rate = 0.0;
  c.epochs = 1;
  c.batch_size = 1;
  const auto h1 = train(m, std::span<const Bitmap>(data).first(1), c);
  const auto h2 = train(m, std::span<const Bitmap>(data).first(1), c);
  EXPECT_TRUE(same_params(m, before));
  ASSERT_EQ(h1.size(), 1u);
  EXPECT_EQ(h1[0], h2[0]);
}

TEST(Train, ConfigAndDatasetErrors) {
  CAEModel<float> m(2, 5);
  const auto data = sobol_bitmaps(4);
  TrainConfig c;
  EXPECT_THROW(train(m, std::span<const Bitmap>(data), c), std::invalid_argument);  // 4 < 32
  c.batch_size = 2;
  c.epochs = 0;
  EXPECT_THROW(train(m, std::span<const Bitmap>(data), c), std::invalid_argument);
  c.epochs = 1;
  c.learning_rate = -1.0;
  EXPECT_THROW(train(m, std::span<const Bitmap>(data), c), std::invalid_argument);
}

TEST(Train, DivergenceReportsEpoch) {
  CAEModel<float> m(2, 5);
  const auto data = sobol_bitmaps(8);
  TrainConfig c;
  c.batch_size = 4;
  c.epochs = 20;
  c.learning_rate = 1e30;
  try {
    train(m, std::span<const Bitmap>(data), c);
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_GE(e.epoch(), 1u);
    EXPECT_LE(e.epoch(), 20u);
    EXPECT_NE(std::string(e.what()).find(std::to_string(e.epoch())), std::string::npos);
  }
}

TEST(Train, HomogeneousDatasetIsLearned) {
  CAEModel<float> m(2, 6);
  const std::vector<Bitmap> empty(32);
  TrainConfig c;
  c.batch_size = 1;
  const auto h = train(m, std::span<const Bitmap>(empty), c);
  ASSERT_EQ(h.size(), 350u);
  EXPECT_LT(h.back(), 1e-3);
  EXPECT_LE(h.back(), h.front());
}

TEST(Train, OverfitsSmallCorpusTenfold) {
  CAEModel<float> m(5, 9);
  const auto data = sobol_bitmaps(8);
  const auto x = CAEModel<float>::batch_input(data);
  const double untrained = m.loss(x);
  TrainConfig c;
  c.batch_size = 1;
  const auto h = train(m, std::span<const Bitmap>(data), c);
  for (double v : h) EXPECT_GE(v, 0.0);
  EXPECT_LT(m.loss(x), untrained / 10.0);
}

TEST(Train, FixedSeedReproducesLossHistory) {
  const auto data = sobol_bitmaps(64);
  TrainConfig c;
  c.epochs = 3;
  c.seed = 17;
  CAEModel<float> a(2, 3), b(2, 3);
  const auto ha = train(a, std::span<const Bitmap>(data), c);
  const auto hb = train(b, std::span<const Bitmap>(data), c);
  EXPECT_EQ(ha, hb);
  EXPECT_TRUE(same_params(a, b));
}

// --- latent normalization --------------------------------------------------

TEST(Normalizer, EndpointsDegenerateAndClamp) {
  Mat<float> z(2, 3);
  z << -1, 0, 3,  //
      2, 2, 2;
  const auto n = LatentNormalizer::fit(z);
  EXPECT_EQ(n.apply(z.col(0))[0], 0.0);
  EXPECT_EQ(n.apply(z.col(2))[0], 1.0);
  EXPECT_EQ(n.apply(z.col(1))[0], 0.25);
  EXPECT_EQ(n.apply(z.col(1))[1], 0.5);
  Eigen::Vector2f novel(10.0f, -5.0f);
  const auto c = n.apply(novel);
  EXPECT_EQ(c[0], 1.0);
  EXPECT_EQ(c[1], 0.5);
  EXPECT_EQ(n.apply(Eigen::Vector2f(-7.0f, 0.0f))[0], 0.0);
  EXPECT_THROW(LatentNormalizer({1.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW((void)n.apply(Eigen::Vector3f::Zero()), DimensionError);
}

TEST(Normalizer, TrainingMinimumMapsToZero) {
  CAEModel<float> m(2, 11);
  const auto data = sobol_bitmaps(20);
  const auto z = encode_all(m, std::span<const Bitmap>(data));
  const auto norm = LatentNormalizer::fit(z);
  Eigen::Index argmin = 0;
  z.row(0).minCoeff(&argmin);
  EXPECT_EQ(latent_descriptor(m, norm, data[static_cast<std::size_t>(argmin)])[0], 0.0);
  for (const auto& b : data)
    for (double v : latent_descriptor(m, norm, b)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
}

TEST(EncodeAll, CodesIndependentOfCompanions) {
  CAEModel<float> m(3, 12);
  const auto data = sobol_bitmaps(10);
  const auto all = encode_all(m, std::span<const Bitmap>(data));
  const auto tail = encode_all(m, std::span<const Bitmap>(data).subspan(7));
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_EQ(all.col(7 + i), tail.col(i));
}

// --- serialization ------------------------------------------------------------

TEST(Weights, RoundTrip) {
  CAEModel<float> m(5, 13);
  std::stringstream ss;
  save_weights(ss, m);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 4), "CAE1");
  EXPECT_EQ(bytes.size(), 4 + 4 + 8 + 8 + 4 * m.parameter_count());
  auto back = load_weights<float>(ss);
  EXPECT_EQ(back.latent_dim(), 5);
  EXPECT_EQ(back.seed(), 13u);
  EXPECT_TRUE(same_params(m, back));
}

TEST(Weights, BadMagicAndTruncation) {
  std::stringstream bad("XXXX0000");
  EXPECT_THROW(load_weights<float>(bad), std::runtime_error);
  CAEModel<float> m(2, 1);
  std::stringstream ss;
  save_weights(ss, m);
  std::stringstream cut(ss.str().substr(0, 100));
  EXPECT_THROW(load_weights<float>(cut), std::runtime_error);
}

TEST(Weights, Manifest) {
  CAEModel<float> m(2, 21);
  std::ostringstream os;
  const LatentNormalizer n({0.0, -1.0}, {1.0, 1.0});
  write_model_manifest(os, m, TrainConfig{}, &n);
  const auto s = os.str();
  EXPECT_NE(s.find("format=CAE1\n"), std::string::npos);
  EXPECT_NE(s.find("latent_dim=2\n"), std::string::npos);
  EXPECT_NE(s.find("seed=21\n"), std::string::npos);
  EXPECT_NE(s.find("latent_min=0,-1\n"), std::string::npos);
}
