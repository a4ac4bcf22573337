// Copyright 2026 The relex Authors.
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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "relex/fcnn.hpp"
#include "relex/fcnn_io.hpp"
#include "support/oracles.hpp"

namespace relex::fcnn {
namespace {

// Feature config whose length is 2 + 7 * dim (flatten, path 1, window 1).
features::FeatureConfig small_features(std::size_t dim) {
  features::FeatureConfig c;
  c.embed_dim = dim;
  c.max_path_len = 1;
  c.vicinity_window = 1;
  return c;
}

FcnnModel random_model(std::size_t in, std::vector<std::size_t> hidden, std::size_t classes, std::uint64_t seed) {
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < classes; ++k) labels.push_back("c" + std::to_string(k));
  FcnnModel m = make_model(in, hidden, labels, small_features(1));
  std::mt19937_64 rng(seed);
  initialize_weights(m, rng);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (auto& l : m.layers) {
    for (auto& b : l.bias.reshaped()) b = normal(rng);
    if (l.has_batch_norm()) {
      for (auto& g : l.bn_gamma.reshaped()) g = 1.0 + normal(rng);
      for (auto& b : l.bn_beta.reshaped()) b = normal(rng);
      for (auto& v : l.bn_running_mean.reshaped()) v = normal(rng);
      for (auto& v : l.bn_running_var.reshaped()) v = 1.0 + std::abs(normal(rng));
    }
  }
  return m;
}

Matrix random_batch(std::size_t in, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix x(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(n));
  for (auto& v : x.reshaped()) v = normal(rng);
  return x;
}

TEST(Forward, ZeroModelGivesZeroLogits) {
  const auto m = make_model(5, {4, 3}, {"a", "b"}, small_features(1));
  std::mt19937_64 rng(1);
  const Matrix x = random_batch(5, 6, rng);
  EXPECT_TRUE(forward(m, x, Mode::kInfer).isZero(0.0));
  EXPECT_TRUE(forward(m, x, Mode::kTrain).isZero(0.0));
}

TEST(Forward, InferenceIsRepeatable) {
  const auto m = random_model(6, {5, 4}, 3, 2);
  std::mt19937_64 rng(2);
  const Matrix x = random_batch(6, 7, rng);
  EXPECT_EQ(forward(m, x, Mode::kInfer), forward(m, x, Mode::kInfer));
}

TEST(Forward, BatchNormStatistics) {
  auto m = make_model(6, {5}, {"a", "b"}, small_features(1));
  std::mt19937_64 rng(3);
  initialize_weights(m, rng);
  const Matrix x = random_batch(6, 32, rng) * 4.0;
  ForwardCache cache;
  forward(m, x, Mode::kTrain, {}, &cache);
  // Recompute batch statistics of the normalized pre-activation directly.
  const Matrix& y = cache.layers[0].normalized;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double mean = y.row(r).mean();
    const double var = (y.row(r).array() - mean).square().mean();
    EXPECT_LT(std::abs(mean), 1e-6);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(Forward, Errors) {
  const auto m = make_model(3, {2}, {"a", "b"}, small_features(1));
  try {
    forward(m, Matrix::Zero(3, 1), Mode::kTrain);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "batch too small for batch norm");
  }
  EXPECT_THROW(forward(m, Matrix::Zero(4, 2), Mode::kInfer), Error);
}

TEST(Forward, PredictMatchesBatchedInference) {
  const auto m = random_model(6, {5, 4}, 3, 5);
  std::mt19937_64 rng(5);
  const Matrix x = random_batch(6, 10, rng);
  const Matrix p = softmax(forward(m, x, Mode::kInfer));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const Vec col = x.col(c);
    const auto pred = m.predict(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
    for (Eigen::Index k = 0; k < p.rows(); ++k) EXPECT_NEAR(pred.probabilities[k], p(k, c), 1e-12);
  }
}

TEST(Dropout, InvertedScaling) {
  auto m = make_model(4, {2000}, {"a", "b"}, small_features(1));
  m.layers[0].bn_beta.setConstant(1.0);  // every activation equals 1 before dropout
  std::mt19937_64 rng(9);
  ForwardCache cache;
  forward(m, Matrix::Zero(4, 2), Mode::kTrain, {0.5, &rng}, &cache);
  const Matrix& mask = cache.layers[0].mask;
  EXPECT_NEAR(mask.mean(), 1.0, 0.05);
  for (double v : mask.reshaped()) EXPECT_TRUE(v == 0.0 || v == 2.0);
}

TEST(SoftmaxCrossEntropy, UniformLogits) {
  for (int c = 2; c <= 5; ++c) {
    const Matrix logits = Matrix::Constant(c, 3, 0.7);
    const std::vector<int> y = {0, 1, c - 1};
    EXPECT_NEAR(softmax_cross_entropy(logits, y).loss, std::log(c), 1e-12);
  }
}

TEST(SoftmaxCrossEntropy, ShiftInvariance) {
  std::mt19937_64 rng(6);
  const Matrix logits = random_batch(4, 5, rng);
  const std::vector<int> y = {0, 3, 2, 1, 1};
  const auto a = softmax_cross_entropy(logits, y);
  const auto b = softmax_cross_entropy((logits.array() + 1000.0).matrix(), y);
  EXPECT_NEAR(a.loss, b.loss, 1e-9);
  EXPECT_TRUE(a.grad.isApprox(b.grad, 1e-9));
}

TEST(SoftmaxCrossEntropy, ConfidentExample) {
  Matrix logits(2, 1);
  logits << 10.0, -10.0;
  const std::vector<int> y = {0};
  const double loss = softmax_cross_entropy(logits, y).loss;
  EXPECT_LT(loss, 1e-4);
  EXPECT_NEAR(loss, std::log1p(std::exp(-20.0)), 1e-15);
}

TEST(SoftmaxCrossEntropy, GradientIsProbabilitiesMinusOneHot) {
  Matrix logits(3, 2);
  logits << 1, 0, 2, 0, 3, 0;
  const std::vector<int> y = {2, 0};
  const auto r = softmax_cross_entropy(logits, y);
  const Matrix p = softmax(logits);
  Matrix expected = p;
  expected(2, 0) -= 1.0;
  expected(0, 1) -= 1.0;
  EXPECT_TRUE(r.grad.isApprox(expected / 2.0, 1e-12));
}

TEST(Softmax, IsSimplexPoint) {
  std::mt19937_64 rng(7);
  const Matrix p = softmax(random_batch(5, 20, rng) * 30.0);
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    EXPECT_NEAR(p.col(c).sum(), 1.0, 1e-12);
    EXPECT_GE(p.col(c).minCoeff(), 0.0);
  }
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  const auto m = random_model(5, {4, 3}, 3, 8);
  std::mt19937_64 rng(8);
  ForwardCache cache;
  const Matrix logits = forward(m, random_batch(5, 6, rng), Mode::kTrain, {}, &cache);
  const auto g = backward(m, cache, Matrix::Zero(logits.rows(), logits.cols()));
  for (const auto& l : g) {
    EXPECT_TRUE(l.weights.isZero(0.0));
    EXPECT_TRUE(l.bias.isZero(0.0));
    if (l.bn_gamma.size()) {
      EXPECT_TRUE(l.bn_gamma.isZero(0.0));
    }
    if (l.bn_beta.size()) {
      EXPECT_TRUE(l.bn_beta.isZero(0.0));
    }
  }
}

TEST(Backward, RequiresTrainCache) {
  const auto m = random_model(3, {2}, 2, 1);
  ForwardCache cache;
  EXPECT_THROW(backward(m, cache, Matrix::Zero(2, 2)), Error);
  forward(m, Matrix::Ones(3, 2), Mode::kInfer, {}, &cache);
  EXPECT_THROW(backward(m, cache, Matrix::Zero(2, 2)), Error);
}

TEST(Backward, MatchesFiniteDifferences) {
  const auto m = random_model(6, {5, 4}, 3, 10);
  std::mt19937_64 rng(10);
  const Matrix x = random_batch(6, 8, rng);
  const std::vector<int> y = {0, 1, 2, 0, 1, 2, 2, 1};
  const std::uint64_t seed = 99;
  std::mt19937_64 drop(seed);
  ForwardCache cache;
  const Matrix logits = forward(m, x, Mode::kTrain, {0.3, &drop}, &cache);
  const auto grads = backward(m, cache, softmax_cross_entropy(logits, y).grad);
  for (const auto& l : grads)
    for (double v : l.weights.reshaped()) ASSERT_TRUE(std::isfinite(v));
  const auto r = testing::check_gradients(m, x, y, 0.3, seed, grads);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_rel_error, 1e-3);
}

TEST(Adam, ZeroGradientsLeaveParameters) {
  auto m = random_model(4, {3}, 2, 11);
  const auto before = m;
  auto state = make_adam_state(m);
  Gradients zero = make_adam_state(m).m;
  adam_step(m, zero, state, 0.01, TrainConfig{});
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    EXPECT_EQ(m.layers[l].weights, before.layers[l].weights);
    EXPECT_EQ(m.layers[l].bias, before.layers[l].bias);
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr * g / (|g| + eps').
  auto m = make_model(2, {}, {"a", "b"}, small_features(1));
  auto state = make_adam_state(m);
  Gradients g = make_adam_state(m).m;
  g[0].weights << 0.5, -2.0, 1e-3, 0.0;
  adam_step(m, g, state, 0.1, TrainConfig{});
  EXPECT_NEAR(m.layers[0].weights(0, 0), -0.1, 1e-6);
  EXPECT_NEAR(m.layers[0].weights(0, 1), 0.1, 1e-6);
  EXPECT_NEAR(m.layers[0].weights(1, 0), -0.1, 1e-4);
  EXPECT_EQ(m.layers[0].weights(1, 1), 0.0);
  EXPECT_EQ(state.t, 1);
}

TEST(LearningRate, DecaySchedule) {
  TrainConfig c;
  EXPECT_EQ(learning_rate_at(c, 0), 0.0003);
  EXPECT_NEAR(learning_rate_at(c, 10), 0.0003 / 1.05, 1e-15);
  EXPECT_NEAR(learning_rate_at(c, 10), 0.00028571, 1e-8);
}

TEST(TrainConfigDefaults, MatchPublishedHyperparameters) {
  const TrainConfig c;
  EXPECT_EQ(c.dropout, 0.5);
  EXPECT_EQ(c.batch_size, 64u);
  EXPECT_EQ(c.learning_rate, 0.0003);
  EXPECT_EQ(c.epochs, 50u);
  EXPECT_EQ(c.lr_decay, 0.005);
}

TEST(InitializeWeights, GlorotRange) {
  auto m = make_model(30, {20}, {"a", "b", "c"}, small_features(1));
  std::mt19937_64 rng(12);
  initialize_weights(m, rng);
  const double r0 = std::sqrt(6.0 / 50.0);
  EXPECT_LE(m.layers[0].weights.cwiseAbs().maxCoeff(), r0);
  EXPECT_GT(m.layers[0].weights.cwiseAbs().maxCoeff(), 0.9 * r0);
  EXPECT_TRUE(m.layers[0].bias.isZero(0.0));
  EXPECT_TRUE(m.layers[0].bn_gamma.isOnes(0.0));
}

// Two Gaussian blobs separated along a random direction; a linear model
// classifies them perfectly.
std::vector<TrainingExample> separable(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> dir(dim);
  for (auto& d : dir) d = normal(rng);
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    std::vector<double> x(dim);
    double proj = 0.0, norm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      x[k] = normal(rng);
      proj += x[k] * dir[k];
      norm += dir[k] * dir[k];
    }
    // Move the point so its projection is +/-(2 + |noise|).
    const double target = (pos ? 1.0 : -1.0) * (2.0 + std::abs(normal(rng)));
    for (std::size_t k = 0; k < dim; ++k) x[k] += (target - proj / std::sqrt(norm)) * dir[k] / std::sqrt(norm);
    out.push_back({{std::move(x), {}}, pos ? "1" : "0", {}});
  }
  return out;
}

TrainConfig fast_config() {
  TrainConfig c;
  c.hidden_sizes = {16, 16};
  c.batch_size = 16;
  c.learning_rate = 0.003;
  return c;
}

TEST(Train, SeparableReachesFullAccuracy) {
  const auto fc = small_features(2);  // 16 features
  const auto data = separable(1000, 16, 13);
  std::vector<EpochLog> log;
  const auto m = train(data, {"0", "1"}, fc, TrainConfig{}, [&](const EpochLog& e) { log.push_back(e); });
  ASSERT_EQ(log.size(), 50u);
  EXPECT_GE(log.back().accuracy, 0.99);
  std::size_t upticks = 0;
  for (std::size_t i = 1; i < log.size(); ++i)
    if (log[i].loss > log[i - 1].loss) ++upticks;
  EXPECT_LE(upticks, 50u * 5 / 100 + 1);

  // Same seed, longer draw: the first 1000 examples repeat, the tail is unseen.
  const auto more = separable(1060, 16, 13);
  for (std::size_t i = 1000; i < 1060; ++i) {
    const auto p = m.predict(more[i].features.values);
    if (more[i].label == "1") {
      EXPECT_EQ(p.label, "1");
      EXPECT_GT(p.confidence(), 0.9);
    }
  }
}

TEST(Train, Deterministic) {
  const auto fc = small_features(2);
  const auto data = separable(100, 16, 15);
  auto c = fast_config();
  c.epochs = 5;
  const auto a = train(data, {"0", "1"}, fc, c);
  const auto b = train(data, {"0", "1"}, fc, c);
  EXPECT_EQ(serialize_model(a), serialize_model(b));
  c.seed = 43;
  EXPECT_NE(serialize_model(a), serialize_model(train(data, {"0", "1"}, fc, c)));
}

TEST(Train, SingleClassIsRejected) {
  auto data = separable(10, 16, 16);
  for (auto& e : data) e.label = "1";
  try {
    train(data, {"0", "1"}, small_features(2), fast_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "need at least 2 classes");
  }
  EXPECT_THROW(train(separable(10, 16, 16), {"1"}, small_features(2), fast_config()), Error);
}

TEST(Train, DivergenceIsReported) {
  auto data = separable(40, 16, 17);
  data[3].features.values[0] = std::numeric_limits<double>::infinity();
  try {
    train(data, {"0", "1"}, small_features(2), fast_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("training diverged"), std::string::npos);
  }
}

TEST(Predict, ZeroModelIsUniformAndPicksFirstClass) {
  const auto m = make_model(9, {4}, {"x", "y", "z"}, small_features(1));
  const std::vector<double> f(9, 0.5);
  const auto p = m.predict(f);
  EXPECT_EQ(p.index, 0u);
  EXPECT_EQ(p.label, "x");
  for (double q : p.probabilities) EXPECT_NEAR(q, 1.0 / 3.0, 1e-15);
  EXPECT_THROW(m.predict(std::vector<double>(8, 0.0)), Error);
}

TEST(Predict, ProbabilitiesSumToOne) {
  const auto m = random_model(9, {6, 5}, 4, 18);
  std::mt19937_64 rng(18);
  std::normal_distribution<double> normal(0.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> f(9);
    for (auto& v : f) v = normal(rng);
    const auto p = m.predict(f);
    double s = 0.0;
    for (double q : p.probabilities) s += q;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

FcnnModel io_model() {
  auto m = random_model(9, {6, 5}, 3, 19);
  m.feature_config = small_features(1);
  return m;
}

TEST(ModelIo, RoundTripIsBitwise) {
  const auto m = io_model();
  const auto back = deserialize_model(serialize_model(m));
  EXPECT_EQ(back.class_labels, m.class_labels);
  EXPECT_EQ(back.feature_config, m.feature_config);
  EXPECT_EQ(back.hidden_sizes, m.hidden_sizes);
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    EXPECT_EQ(back.layers[l].weights, m.layers[l].weights);
    EXPECT_EQ(back.layers[l].bn_running_var, m.layers[l].bn_running_var);
  }
  std::mt19937_64 rng(19);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> f(9);
    for (auto& v : f) v = normal(rng);
    EXPECT_EQ(m.predict(f).probabilities, back.predict(f).probabilities);
  }
}

TEST(ModelIo, FileRoundTrip) {
  const auto m = io_model();
  const std::string path = ::testing::TempDir() + "relex_model_io.bin";
  save_model(m, path);
  EXPECT_EQ(serialize_model(load_model(path)), serialize_model(m));
}

TEST(ModelIo, UnsupportedVersion) {
  std::string bytes = serialize_model(io_model());
  bytes[8] = static_cast<char>(999 & 0xff);
  bytes[9] = static_cast<char>(999 >> 8);
  try {
    deserialize_model(bytes);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported model version"), std::string::npos);
  }
}

TEST(ModelIo, EmptyAndTruncated) {
  EXPECT_THROW(deserialize_model(""), ParseError);
  const std::string bytes = serialize_model(io_model());
  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 1)), ParseError);
  EXPECT_THROW(deserialize_model(bytes.substr(0, 30)), ParseError);
  EXPECT_THROW(deserialize_model(bytes + "x"), ParseError);
}

TEST(ModelIo, JsonExportListsEveryTensor) {
  const auto j = export_model_json(io_model());
  EXPECT_EQ(j.at("format_version"), kModelVersion);
  EXPECT_EQ(j.at("values").size(), j.at("tensors").size());
  EXPECT_EQ(j.at("layout").size(), 7u);
}

}  // namespace
}  // namespace relex::fcnn
