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

// Fully connected relation classifier.
//
// Each hidden layer computes affine -> batch norm -> leaky ReLU -> dropout;
// the output layer is affine only and feeds a softmax cross-entropy loss.
// Activations are stored column-per-example: a batch is a (features x
// batch) matrix.

#ifndef RELEX_FCNN_HPP_
#define RELEX_FCNN_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "relex/error.hpp"
#include "relex/features.hpp"

namespace relex::fcnn {

using Matrix = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline constexpr int kModelVersion = 1;
inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct LayerParams {
  Matrix weights;  // out x in
  Vec bias;
  // Batch-norm parameters; empty on the output layer.
  Vec bn_gamma;
  Vec bn_beta;
  Vec bn_running_mean;
  Vec bn_running_var;

  bool has_batch_norm() const { return bn_gamma.size() > 0; }
  Eigen::Index in() const { return weights.cols(); }
  Eigen::Index out() const { return weights.rows(); }
};

struct Prediction {
  std::size_t index = 0;
  std::string label;
  std::vector<double> probabilities;

  double confidence() const { return probabilities.empty() ? 0.0 : probabilities[index]; }
};

struct FcnnModel {
  std::vector<LayerParams> layers;  // hidden layers, then the output layer
  std::vector<std::size_t> hidden_sizes;
  std::vector<std::string> class_labels;
  features::FeatureConfig feature_config;
  double leaky_slope = 0.01;
  int version = kModelVersion;

  std::size_t input_dim() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().in()); }
  const std::vector<std::string>& labels() const { return class_labels; }
  const features::FeatureConfig& features() const { return feature_config; }

  Prediction predict(std::span<const double> features) const;
};

// Allocates a model with the given shape. Weights and biases are zero,
// gamma is one and beta zero; running statistics start at mean 0, var 1.
inline FcnnModel make_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_sizes,
                            std::vector<std::string> class_labels, features::FeatureConfig feature_config,
                            double leaky_slope = 0.01) {
  if (class_labels.size() < 2) throw Error("need at least 2 classes");
  if (input_dim == 0) throw Error("input dimension must be positive");
  FcnnModel m;
  m.hidden_sizes = hidden_sizes;
  m.class_labels = std::move(class_labels);
  m.feature_config = feature_config;
  m.leaky_slope = leaky_slope;
  auto in = static_cast<Eigen::Index>(input_dim);
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw Error("hidden layer width must be positive");
    const auto out = static_cast<Eigen::Index>(h);
    LayerParams p;
    p.weights = Matrix::Zero(out, in);
    p.bias = Vec::Zero(out);
    p.bn_gamma = Vec::Ones(out);
    p.bn_beta = Vec::Zero(out);
    p.bn_running_mean = Vec::Zero(out);
    p.bn_running_var = Vec::Ones(out);
    m.layers.push_back(std::move(p));
    in = out;
  }
  const auto classes = static_cast<Eigen::Index>(m.class_labels.size());
  m.layers.push_back({Matrix::Zero(classes, in), Vec::Zero(classes), {}, {}, {}, {}});
  return m;
}

// Glorot-uniform weights: U(-r, r) with r = sqrt(6 / (fan_in + fan_out)).
// Draws row by row, layer by layer, so a seed fixes every weight.
inline void initialize_weights(FcnnModel& model, std::mt19937_64& rng) {
  for (auto& layer : model.layers) {
    const double r = std::sqrt(6.0 / static_cast<double>(layer.in() + layer.out()));
    std::uniform_real_distribution<double> dist(-r, r);
    for (Eigen::Index i = 0; i < layer.out(); ++i)
      for (Eigen::Index j = 0; j < layer.in(); ++j) layer.weights(i, j) = dist(rng);
  }
}

enum class Mode { kTrain, kInfer };

// Source of inverted-dropout masks. A null generator or a zero rate
// disables dropout.
struct DropoutSource {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

struct LayerCache {
  Matrix input;       // layer input
  Matrix xhat;        // normalized pre-activation
  Vec inv_std;        // 1 / sqrt(batch_var + eps)
  Vec batch_mean;
  Vec batch_var;      // biased
  Matrix normalized;  // gamma * xhat + beta, the activation input
  Matrix mask;        // dropout multipliers (0 or 1/(1-rate)); empty if none
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  Matrix output_input;  // input to the output layer
  bool valid = false;
};

inline double leaky(double x, double slope) { return x > 0.0 ? x : slope * x; }

// Logits (classes x batch). In train mode batch statistics are used and
// `cache`, when given, receives everything backward() needs.
inline Matrix forward(const FcnnModel& model, const Matrix& batch, Mode mode, DropoutSource dropout = {},
                      ForwardCache* cache = nullptr) {
  if (model.layers.empty()) throw Error("model has no layers");
  if (batch.rows() != model.layers.front().in())
    throw Error(detail::concat("feature length ", batch.rows(), " does not match model input ",
                               model.layers.front().in()));
  const Eigen::Index n = batch.cols();
  if (mode == Mode::kTrain && n < 2) throw Error("batch too small for batch norm");
  if (cache) {
    cache->layers.clear();
    cache->valid = false;
  }

  Matrix x = batch;
  for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
    const auto& p = model.layers[l];
    Matrix z = p.weights * x;
    z.colwise() += p.bias;

    LayerCache lc;
    Matrix y;
    if (mode == Mode::kTrain) {
      const Vec mean = z.rowwise().mean();
      const Matrix centered = z.colwise() - mean;
      const Vec var = centered.array().square().rowwise().sum().matrix() / static_cast<double>(n);
      const Vec inv_std = (var.array() + kBatchNormEpsilon).rsqrt().matrix();
      Matrix xhat = inv_std.asDiagonal() * centered;
      y = p.bn_gamma.asDiagonal() * xhat;
      y.colwise() += p.bn_beta;
      if (cache) {
        lc.xhat = std::move(xhat);
        lc.inv_std = inv_std;
        lc.batch_mean = mean;
        lc.batch_var = var;
      }
    } else {
      const Vec scale = p.bn_gamma.array() * (p.bn_running_var.array() + kBatchNormEpsilon).rsqrt();
      y = scale.asDiagonal() * (z.colwise() - p.bn_running_mean);
      y.colwise() += p.bn_beta;
    }

    Matrix a = y.unaryExpr([slope = model.leaky_slope](double v) { return leaky(v, slope); });
    if (mode == Mode::kTrain && dropout.rng && dropout.rate > 0.0) {
      std::bernoulli_distribution keep(1.0 - dropout.rate);
      const double scale = 1.0 / (1.0 - dropout.rate);
      Matrix mask(a.rows(), a.cols());
      for (Eigen::Index c = 0; c < mask.cols(); ++c)
        for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = keep(*dropout.rng) ? scale : 0.0;
      a = a.cwiseProduct(mask);
      if (cache) lc.mask = std::move(mask);
    }
    if (cache) {
      lc.input = std::move(x);
      lc.normalized = std::move(y);
      cache->layers.push_back(std::move(lc));
    }
    x = std::move(a);
  }

  const auto& out = model.layers.back();
  Matrix logits = out.weights * x;
  logits.colwise() += out.bias;
  if (cache) {
    cache->output_input = std::move(x);
    cache->valid = mode == Mode::kTrain;
  }
  return logits;
}

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // dLoss/dLogits, same shape as the logits
};

// Column-wise softmax, stabilized by subtracting each column's max.
inline Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    p.col(c) = (logits.col(c).array() - m).exp().matrix();
    p.col(c) /= p.col(c).sum();
  }
  return p;
}

// Mean negative log-likelihood over the batch and its gradient
// (softmax - onehot) / batch.
inline LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.cols())
    throw Error("softmax_cross_entropy: label count does not match batch");
  const auto n = static_cast<double>(labels.size());
  LossResult r;
  r.grad = softmax(logits);
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const int y = labels[static_cast<std::size_t>(c)];
    if (y < 0 || y >= logits.rows()) throw Error(detail::concat("label index ", y, " out of range"));
    const double m = logits.col(c).maxCoeff();
    const double log_sum = m + std::log((logits.col(c).array() - m).exp().sum());
    r.loss += log_sum - logits(y, c);
    r.grad(y, c) -= 1.0;
  }
  if (n > 0) {
    r.loss /= n;
    r.grad /= n;
  }
  return r;
}

struct LayerGrads {
  Matrix weights;
  Vec bias;
  Vec bn_gamma;
  Vec bn_beta;
};

using Gradients = std::vector<LayerGrads>;

// Exact gradients of the loss w.r.t. every trainable parameter, given the
// cache of a train-mode forward pass and dLoss/dLogits.
inline Gradients backward(const FcnnModel& model, const ForwardCache& cache, const Matrix& dlogits) {
  if (!cache.valid) throw Error("backward requires the cache of a train-mode forward pass");
  const std::size_t hidden = model.layers.size() - 1;
  if (cache.layers.size() != hidden) throw Error("backward: cache does not match model");
  Gradients g(model.layers.size());

  const auto& out = model.layers.back();
  g[hidden].weights = dlogits * cache.output_input.transpose();
  g[hidden].bias = dlogits.rowwise().sum();
  Matrix upstream = out.weights.transpose() * dlogits;

  for (std::size_t l = hidden; l-- > 0;) {
    const auto& p = model.layers[l];
    const auto& lc = cache.layers[l];
    const auto n = static_cast<double>(lc.input.cols());

    Matrix dy = lc.mask.size() ? upstream.cwiseProduct(lc.mask) : upstream;
    dy = dy.cwiseProduct(lc.normalized.unaryExpr(
        [slope = model.leaky_slope](double v) { return v > 0.0 ? 1.0 : slope; }));

    g[l].bn_gamma = dy.cwiseProduct(lc.xhat).rowwise().sum();
    g[l].bn_beta = dy.rowwise().sum();

    const Matrix dxhat = p.bn_gamma.asDiagonal() * dy;
    const Vec sum_dxhat = dxhat.rowwise().sum();
    const Vec sum_dxhat_xhat = dxhat.cwiseProduct(lc.xhat).rowwise().sum();
    Matrix dz = n * dxhat;
    dz.colwise() -= sum_dxhat;
    dz -= sum_dxhat_xhat.asDiagonal() * lc.xhat;
    dz = (lc.inv_std / n).asDiagonal() * dz;

    g[l].weights = dz * lc.input.transpose();
    g[l].bias = dz.rowwise().sum();
    if (l > 0) upstream = p.weights.transpose() * dz;
  }
  return g;
}

struct TrainConfig {
  double dropout = 0.5;
  std::size_t batch_size = 64;
  double learning_rate = 0.0003;
  std::size_t epochs = 50;
  double lr_decay = 0.005;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 42;
  std::vector<std::size_t> hidden_sizes{200, 200};
  double leaky_slope = 0.01;
};

inline void validate(const TrainConfig& c) {
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw Error("train config: dropout must be in [0, 1)");
  if (c.batch_size < 2) throw Error("train config: batch_size must be at least 2");
  if (!(c.learning_rate > 0.0)) throw Error("train config: learning_rate must be positive");
  if (c.epochs == 0) throw Error("train config: epochs must be positive");
  if (!(c.lr_decay >= 0.0)) throw Error("train config: lr_decay must be non-negative");
  if (!(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0) || !(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0))
    throw Error("train config: Adam betas must be in [0, 1)");
  if (!(c.adam_eps > 0.0)) throw Error("train config: adam_eps must be positive");
}

// Time-based decay applied per epoch.
inline double learning_rate_at(const TrainConfig& c, std::size_t epoch_index) {
  return c.learning_rate / (1.0 + c.lr_decay * static_cast<double>(epoch_index));
}

struct AdamState {
  Gradients m;
  Gradients v;
  std::uint64_t t = 0;
};

inline AdamState make_adam_state(const FcnnModel& model) {
  AdamState s;
  for (const auto& p : model.layers) {
    LayerGrads z{Matrix::Zero(p.out(), p.in()), Vec::Zero(p.out()), Vec::Zero(p.bn_gamma.size()),
                 Vec::Zero(p.bn_beta.size())};
    s.m.push_back(z);
    s.v.push_back(std::move(z));
  }
  return s;
}

namespace detail_fcnn {

template <typename Param, typename Grad, typename Moment>
void adam_update(Param& param, const Grad& grad, Moment& m, Moment& v, double lr, double b1, double b2,
                 double eps, double c1, double c2) {
  m = b1 * m + (1.0 - b1) * grad;
  v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

}  // namespace detail_fcnn

// One bias-corrected Adam update of every trainable parameter. Increments
// state.t before use, so the first call is step 1.
inline void adam_step(FcnnModel& model, const Gradients& grads, AdamState& state, double lr_t,
                      const TrainConfig& c) {
  if (grads.size() != model.layers.size() || state.m.size() != model.layers.size())
    throw Error("adam_step: gradient/state shape mismatch");
  ++state.t;
  const double c1 = 1.0 - std::pow(c.adam_beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(c.adam_beta2, static_cast<double>(state.t));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto& p = model.layers[l];
    const auto& g = grads[l];
    auto& m = state.m[l];
    auto& v = state.v[l];
    detail_fcnn::adam_update(p.weights, g.weights, m.weights, v.weights, lr_t, c.adam_beta1, c.adam_beta2,
                             c.adam_eps, c1, c2);
    detail_fcnn::adam_update(p.bias, g.bias, m.bias, v.bias, lr_t, c.adam_beta1, c.adam_beta2, c.adam_eps,
                             c1, c2);
    if (p.has_batch_norm()) {
      detail_fcnn::adam_update(p.bn_gamma, g.bn_gamma, m.bn_gamma, v.bn_gamma, lr_t, c.adam_beta1,
                               c.adam_beta2, c.adam_eps, c1, c2);
      detail_fcnn::adam_update(p.bn_beta, g.bn_beta, m.bn_beta, v.bn_beta, lr_t, c.adam_beta1, c.adam_beta2,
                               c.adam_eps, c1, c2);
    }
  }
}

// Folds the batch statistics of a train-mode pass into the running
// estimates (the running variance uses the unbiased batch variance).
inline void update_running_stats(FcnnModel& model, const ForwardCache& cache) {
  for (std::size_t l = 0; l < cache.layers.size(); ++l) {
    auto& p = model.layers[l];
    const auto& lc = cache.layers[l];
    const double n = static_cast<double>(lc.input.cols());
    p.bn_running_mean = kBatchNormMomentum * p.bn_running_mean + (1.0 - kBatchNormMomentum) * lc.batch_mean;
    p.bn_running_var =
        kBatchNormMomentum * p.bn_running_var + (1.0 - kBatchNormMomentum) * (lc.batch_var * (n / (n - 1.0)));
  }
}

inline Prediction FcnnModel::predict(std::span<const double> features) const {
  if (features.size() != input_dim())
    throw Error(detail::concat("feature length ", features.size(), " does not match model input ", input_dim()));
  Eigen::Map<const Vec> x0(features.data(), static_cast<Eigen::Index>(features.size()));
  Vec x = x0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto& p = layers[l];
    Vec z = p.weights * x + p.bias;
    const Vec scale = p.bn_gamma.array() * (p.bn_running_var.array() + kBatchNormEpsilon).rsqrt();
    Vec y = scale.cwiseProduct(z - p.bn_running_mean) + p.bn_beta;
    x = y.unaryExpr([s = leaky_slope](double v) { return leaky(v, s); });
  }
  const Vec logits = layers.back().weights * x + layers.back().bias;
  const double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp().matrix();
  e /= e.sum();

  Prediction pred;
  pred.probabilities.assign(e.data(), e.data() + e.size());
  // First maximum wins, so ties go to the lowest class index.
  pred.index = static_cast<std::size_t>(
      std::max_element(pred.probabilities.begin(), pred.probabilities.end()) - pred.probabilities.begin());
  pred.label = class_labels.at(pred.index);
  return pred;
}

inline Prediction predict(const FcnnModel& model, std::span<const double> features) {
  return model.predict(features);
}

struct Provenance {
  std::string doc_id;
  std::size_t chunk1_index = 0;
  std::size_t chunk2_index = 0;
};

struct TrainingExample {
  features::FeatureVector features;
  std::string label;
  Provenance provenance;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double batch_loss = 0.0;  // mean train-mode minibatch loss
  double loss = 0.0;        // full training set, inference mode
  double accuracy = 0.0;    // full training set, inference mode
};

using EpochCallback = std::function<void(const EpochLog&)>;

namespace detail_fcnn {

inline Matrix stack_features(const std::vector<TrainingExample>& examples, std::size_t dim) {
  Matrix x(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(examples.size()));
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& v = examples[i].features.values;
    if (v.size() != dim)
      throw Error(detail::concat("example ", i, " has ", v.size(), " features, expected ", dim));
    x.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(dim));
  }
  return x;
}

}  // namespace detail_fcnn

// Minibatch training with Adam. Deterministic for a fixed seed: weight
// initialization, per-epoch shuffles and dropout masks all draw from one
// generator. A trailing minibatch of a single example is skipped since
// batch norm needs at least two.
inline FcnnModel train(const std::vector<TrainingExample>& examples, const std::vector<std::string>& class_labels,
                       const features::FeatureConfig& feature_config, const TrainConfig& config,
                       const EpochCallback& on_epoch = {}) {
  validate(config);
  features::validate(feature_config);
  if (class_labels.size() < 2) throw Error("need at least 2 classes");
  if (examples.size() < 2) throw Error("need at least 2 training examples");

  std::vector<int> y(examples.size());
  std::vector<bool> seen(class_labels.size(), false);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto it = std::find(class_labels.begin(), class_labels.end(), examples[i].label);
    if (it == class_labels.end()) throw Error("unknown label '" + examples[i].label + "'");
    y[i] = static_cast<int>(it - class_labels.begin());
    seen[static_cast<std::size_t>(y[i])] = true;
  }
  if (std::count(seen.begin(), seen.end(), true) < 2) throw Error("need at least 2 classes");

  const std::size_t dim = features::feature_length(feature_config);
  const Matrix x = detail_fcnn::stack_features(examples, dim);

  std::mt19937_64 rng(config.seed);
  FcnnModel model = make_model(dim, config.hidden_sizes, class_labels, feature_config, config.leaky_slope);
  initialize_weights(model, rng);
  AdamState adam = make_adam_state(model);

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  ForwardCache cache;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = learning_rate_at(config, epoch);
    double batch_loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      if (end - start < 2) continue;
      Matrix xb(x.rows(), static_cast<Eigen::Index>(end - start));
      std::vector<int> yb(end - start);
      for (std::size_t k = start; k < end; ++k) {
        xb.col(static_cast<Eigen::Index>(k - start)) = x.col(static_cast<Eigen::Index>(order[k]));
        yb[k - start] = y[order[k]];
      }
      const Matrix logits = forward(model, xb, Mode::kTrain, {config.dropout, &rng}, &cache);
      const auto loss = softmax_cross_entropy(logits, yb);
      if (!std::isfinite(loss.loss))
        throw Error(detail::concat("training diverged: non-finite loss at epoch ", epoch + 1, ", batch ",
                                   batches + 1, " (learning rate ", lr, ")"));
      const auto grads = backward(model, cache, loss.grad);
      update_running_stats(model, cache);
      adam_step(model, grads, adam, lr, config);
      batch_loss_sum += loss.loss;
      ++batches;
    }

    if (on_epoch) {
      const Matrix logits = forward(model, x, Mode::kInfer);
      const auto full = softmax_cross_entropy(logits, y);
      std::size_t correct = 0;
      for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        Eigen::Index best = 0;
        logits.col(c).maxCoeff(&best);
        if (best == y[static_cast<std::size_t>(c)]) ++correct;
      }
      on_epoch({epoch + 1, lr, batches ? batch_loss_sum / static_cast<double>(batches) : 0.0, full.loss,
                static_cast<double>(correct) / static_cast<double>(examples.size())});
    }
  }
  return model;
}

}  // namespace relex::fcnn

#endif  // RELEX_FCNN_HPP_
