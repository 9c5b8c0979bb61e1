// Copyright 2026 The fedaudit Authors. All Rights Reserved.
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
// =============================================================================
//
// Dual-head classifier: a dense ReLU feature extractor shared by a
// personalized head (logit-adjusted loss) and a global head (cross-entropy).
// Parameters are flat vectors; each dense layer stores W (out x in,
// row-major) followed by b.

#ifndef FEDAUDIT_MODEL_HPP_
#define FEDAUDIT_MODEL_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedaudit/data.hpp"
#include "fedaudit/error.hpp"
#include "fedaudit/metrics.hpp"
#include "fedaudit/random.hpp"

namespace fedaudit::model {

using Matrix = data::Matrix;
using Vector = Eigen::VectorXd;

struct Dims {
  int input = 0;
  std::vector<int> hidden{64, 32};
  int classes = 2;

  int feature() const { return hidden.empty() ? input : hidden.back(); }

  size_t extractor_size() const {
    size_t total = 0;
    int in = input;
    for (int h : hidden) {
      total += static_cast<size_t>(h) * in + h;
      in = h;
    }
    return total;
  }
  size_t head_size() const { return static_cast<size_t>(classes) * feature() + classes; }

  void validate() const {
    if (input < 1) throw Error(ErrorCode::kInvalidArgument, "model input dimension must be positive");
    if (classes < 2) throw Error(ErrorCode::kInvalidArgument, "model needs at least 2 classes");
    for (int h : hidden) {
      if (h < 1) throw Error(ErrorCode::kInvalidArgument, "hidden widths must be positive");
    }
  }
};

struct ModelParams {
  Dims dims;
  std::vector<double> extractor;
  std::vector<double> head_pers;
  std::vector<double> head_glob;

  void validate() const {
    dims.validate();
    if (extractor.size() != dims.extractor_size() || head_pers.size() != dims.head_size() ||
        head_glob.size() != dims.head_size()) {
      throw Error(ErrorCode::kDimensionMismatch, "parameter counts do not match dims");
    }
  }
};

struct TrainHyper {
  double lr = 0.001;
  double momentum = 0.9;
  double lambda_weight = 1.0;
  double tau = 1.0;
  int batch_size = 64;
  int local_epochs = 4;

  void validate() const {
    if (!(lr >= 0)) throw Error(ErrorCode::kInvalidArgument, "lr must be non-negative");
    if (!(momentum >= 0 && momentum < 1)) throw Error(ErrorCode::kInvalidArgument, "momentum must be in [0, 1)");
    if (!(lambda_weight >= 0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be non-negative");
    if (!(tau >= 0)) throw Error(ErrorCode::kInvalidArgument, "tau must be non-negative");
    if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
    if (local_epochs < 0) throw Error(ErrorCode::kInvalidArgument, "local epochs must be non-negative");
  }
};

/// Same layout as ModelParams; used for both gradients and momentum.
struct ParamBuffers {
  std::vector<double> extractor;
  std::vector<double> head_pers;
  std::vector<double> head_glob;

  static ParamBuffers zeros_like(const ModelParams& m) {
    return {std::vector<double>(m.extractor.size(), 0.0), std::vector<double>(m.head_pers.size(), 0.0),
            std::vector<double>(m.head_glob.size(), 0.0)};
  }
};

struct OptimizerState {
  ParamBuffers velocity;

  static OptimizerState for_params(const ModelParams& m) { return {ParamBuffers::zeros_like(m)}; }
};

struct LossReport {
  double ce = 0;
  double la = 0;
  double total = 0;
};

// ---------------------------------------------------------------------------
// Initialization and flat-vector helpers

inline ModelParams init_params(const Dims& dims, std::uint64_t seed) {
  dims.validate();
  Rng rng(derive_seed(seed, {stream::kModelInit}));
  ModelParams m;
  m.dims = dims;
  std::normal_distribution<double> normal(0.0, 1.0);
  int in = dims.input;
  for (int h : dims.hidden) {
    const double sd = std::sqrt(2.0 / in);
    for (int i = 0; i < h * in; ++i) m.extractor.push_back(sd * normal(rng));
    m.extractor.insert(m.extractor.end(), static_cast<size_t>(h), 0.0);
    in = h;
  }
  const double sd = std::sqrt(1.0 / dims.feature());
  for (auto* head : {&m.head_pers, &m.head_glob}) {
    for (int i = 0; i < dims.classes * dims.feature(); ++i) head->push_back(sd * normal(rng));
    head->insert(head->end(), static_cast<size_t>(dims.classes), 0.0);
  }
  return m;
}

/// Length of the transmitted portion (extractor followed by global head).
inline size_t global_size(const ModelParams& m) { return m.extractor.size() + m.head_glob.size(); }

inline std::vector<double> global_vector(const ModelParams& m) {
  std::vector<double> v(m.extractor);
  v.insert(v.end(), m.head_glob.begin(), m.head_glob.end());
  return v;
}

inline void set_global(ModelParams& m, std::span<const double> v) {
  if (v.size() != global_size(m)) throw Error(ErrorCode::kDimensionMismatch, "global vector length mismatch");
  std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m.extractor.size()), m.extractor.begin());
  std::copy(v.begin() + static_cast<std::ptrdiff_t>(m.extractor.size()), v.end(), m.head_glob.begin());
}

// ---------------------------------------------------------------------------
// Losses

inline double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

inline double ce_loss(std::span<const double> logits, int y) {
  if (y < 0 || static_cast<size_t>(y) >= logits.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "class index outside logits");
  }
  return log_sum_exp(logits) - logits[static_cast<size_t>(y)];
}

/// Normalized batch class frequencies; absent classes get 1 / (10 * batch).
inline std::vector<double> batch_class_freqs(std::span<const int> labels, int num_classes) {
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "batch_class_freqs on empty batch");
  std::vector<double> f(static_cast<size_t>(num_classes), 0.0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw Error(ErrorCode::kDimensionMismatch, "label outside class range");
    f[static_cast<size_t>(y)] += 1.0;
  }
  const double b = static_cast<double>(labels.size());
  const double floor = 1.0 / (10.0 * b);
  for (auto& v : f) v = v > 0 ? v / b : floor;
  return f;
}

inline double la_loss(std::span<const double> logits, int y, std::span<const double> freqs, double tau) {
  if (freqs.size() != logits.size()) throw Error(ErrorCode::kDimensionMismatch, "freqs and logits differ");
  std::vector<double> adj(logits.begin(), logits.end());
  for (size_t c = 0; c < adj.size(); ++c) adj[c] += tau * std::log(freqs[c]);
  return ce_loss(adj, y);
}

// ---------------------------------------------------------------------------
// Forward and backward passes

namespace detail {

using MapW = Eigen::Map<const Matrix>;
using MapB = Eigen::Map<const Vector>;
using MapWm = Eigen::Map<Matrix>;
using MapBm = Eigen::Map<Vector>;

struct BatchForward {
  std::vector<Matrix> acts;  // acts[0] = input, acts[l] = relu output of layer l
  Matrix logits_pers;
  Matrix logits_glob;
};

inline Matrix head_forward(const std::vector<double>& head, const Matrix& z, int classes) {
  const auto p = z.cols();
  MapW w(head.data(), classes, p);
  MapB b(head.data() + classes * p, classes);
  Matrix out = z * w.transpose();
  out.rowwise() += b.transpose();
  return out;
}

inline BatchForward forward_batch(const ModelParams& m, const Matrix& x) {
  if (x.cols() != m.dims.input) throw Error(ErrorCode::kDimensionMismatch, "input width does not match model");
  BatchForward f;
  f.acts.reserve(m.dims.hidden.size() + 1);
  f.acts.push_back(x);
  size_t off = 0;
  int in = m.dims.input;
  for (int h : m.dims.hidden) {
    MapW w(m.extractor.data() + off, h, in);
    MapB b(m.extractor.data() + off + static_cast<size_t>(h) * in, h);
    Matrix a = f.acts.back() * w.transpose();
    a.rowwise() += b.transpose();
    a = a.cwiseMax(0.0);
    f.acts.push_back(std::move(a));
    off += static_cast<size_t>(h) * in + h;
    in = h;
  }
  f.logits_pers = head_forward(m.head_pers, f.acts.back(), m.dims.classes);
  f.logits_glob = head_forward(m.head_glob, f.acts.back(), m.dims.classes);
  return f;
}

/// Row-wise softmax minus one-hot, divided by batch size; also returns mean CE.
inline double softmax_grad(const Matrix& logits, std::span<const int> y, Matrix& grad) {
  const auto bsz = logits.rows();
  grad.resize(logits.rows(), logits.cols());
  double loss = 0;
  for (Eigen::Index i = 0; i < bsz; ++i) {
    const double mx = logits.row(i).maxCoeff();
    auto e = (logits.row(i).array() - mx).exp();
    const double s = e.sum();
    grad.row(i) = e / s;
    loss += std::log(s) + mx - logits(i, y[static_cast<size_t>(i)]);
    grad(i, y[static_cast<size_t>(i)]) -= 1.0;
  }
  grad /= static_cast<double>(bsz);
  return loss / static_cast<double>(bsz);
}

inline void head_backward(const std::vector<double>& head, const Matrix& z, const Matrix& dlogits,
                          std::vector<double>& grad, Matrix* dz, double dz_scale) {
  const int classes = static_cast<int>(dlogits.cols());
  const auto p = z.cols();
  MapWm gw(grad.data(), classes, p);
  MapBm gb(grad.data() + classes * p, classes);
  gw = dlogits.transpose() * z;
  gb = dlogits.colwise().sum().transpose();
  if (dz != nullptr && dz_scale != 0.0) {
    MapW w(head.data(), classes, p);
    *dz += dz_scale * (dlogits * w);
  }
}

}  // namespace detail

struct ForwardResult {
  Vector z;
  Vector logits_pers;
  Vector logits_glob;
};

inline ForwardResult forward(const ModelParams& m, std::span<const double> x) {
  if (x.size() != static_cast<size_t>(m.dims.input)) {
    throw Error(ErrorCode::kDimensionMismatch, "input has " + std::to_string(x.size()) + " features, model expects " +
                                                   std::to_string(m.dims.input));
  }
  Matrix row = Eigen::Map<const Matrix>(x.data(), 1, m.dims.input);
  auto f = detail::forward_batch(m, row);
  return {f.acts.back().row(0).transpose(), f.logits_pers.row(0).transpose(), f.logits_glob.row(0).transpose()};
}

/// Routed gradients: head_glob <- dCE, head_pers <- dLA, extractor <- d(CE + lambda * LA).
/// Class frequencies come from the batch labels and are held constant.
inline LossReport compute_gradients(const ModelParams& m, const Matrix& x, std::span<const int> y,
                                    const TrainHyper& h, ParamBuffers& grad) {
  if (x.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  if (static_cast<size_t>(x.rows()) != y.size()) throw Error(ErrorCode::kDimensionMismatch, "batch rows and labels differ");
  auto f = detail::forward_batch(m, x);
  const auto freqs = batch_class_freqs(y, m.dims.classes);
  Matrix adjusted = f.logits_pers;
  for (int c = 0; c < m.dims.classes; ++c) adjusted.col(c).array() += h.tau * std::log(freqs[static_cast<size_t>(c)]);

  Matrix d_glob, d_pers;
  LossReport rep;
  rep.ce = detail::softmax_grad(f.logits_glob, y, d_glob);
  rep.la = detail::softmax_grad(adjusted, y, d_pers);
  rep.total = rep.ce + h.lambda_weight * rep.la;

  grad.extractor.assign(m.extractor.size(), 0.0);
  grad.head_pers.assign(m.head_pers.size(), 0.0);
  grad.head_glob.assign(m.head_glob.size(), 0.0);

  const Matrix& z = f.acts.back();
  Matrix dz = Matrix::Zero(z.rows(), z.cols());
  detail::head_backward(m.head_glob, z, d_glob, grad.head_glob, &dz, 1.0);
  detail::head_backward(m.head_pers, z, d_pers, grad.head_pers, &dz, h.lambda_weight);

  size_t off = m.extractor.size();
  for (size_t l = m.dims.hidden.size(); l-- > 0;) {
    const int out = m.dims.hidden[l];
    const int in = l == 0 ? m.dims.input : m.dims.hidden[l - 1];
    off -= static_cast<size_t>(out) * in + out;
    dz.array() *= (f.acts[l + 1].array() > 0.0).cast<double>();
    detail::MapWm gw(grad.extractor.data() + off, out, in);
    detail::MapBm gb(grad.extractor.data() + off + static_cast<size_t>(out) * in, out);
    gw = dz.transpose() * f.acts[l];
    gb = dz.colwise().sum().transpose();
    if (l > 0) {
      detail::MapW w(m.extractor.data() + off, out, in);
      dz = dz * w;
    }
  }
  return rep;
}

namespace detail {

inline void momentum_update(std::vector<double>& p, std::vector<double>& v, const std::vector<double>& g,
                            const TrainHyper& h) {
  for (size_t i = 0; i < p.size(); ++i) {
    v[i] = h.momentum * v[i] + g[i];
    p[i] -= h.lr * v[i];
  }
}

inline LossReport step_in_place(ModelParams& m, OptimizerState& opt, const Matrix& x, std::span<const int> y,
                                const TrainHyper& h, ParamBuffers& scratch) {
  LossReport rep = compute_gradients(m, x, y, h, scratch);
  if (!std::isfinite(rep.total)) throw Error(ErrorCode::kNonFiniteLoss, "training loss is not finite");
  momentum_update(m.extractor, opt.velocity.extractor, scratch.extractor, h);
  momentum_update(m.head_pers, opt.velocity.head_pers, scratch.head_pers, h);
  momentum_update(m.head_glob, opt.velocity.head_glob, scratch.head_glob, h);
  return rep;
}

}  // namespace detail

struct TrainStepResult {
  ModelParams params;
  OptimizerState opt;
  LossReport loss;
};

/// One momentum-SGD step: v <- momentum * v + g; theta <- theta - lr * v.
inline TrainStepResult train_step(const ModelParams& m, const OptimizerState& opt, const Matrix& x,
                                  std::span<const int> y, const TrainHyper& h) {
  TrainStepResult r{m, opt, {}};
  ParamBuffers scratch;
  r.loss = detail::step_in_place(r.params, r.opt, x, y, h, scratch);
  return r;
}

struct LocalTrainResult {
  std::vector<double> update;  // global portion after minus before
  ModelParams params;
  LossReport last_loss;
};

/// Runs local_epochs passes over shuffled mini-batches with a fresh optimizer.
inline LocalTrainResult local_train(const ModelParams& m, const data::Dataset& shard, const TrainHyper& h,
                                    std::uint64_t seed) {
  h.validate();
  if (shard.rows() == 0) throw Error(ErrorCode::kInvalidArgument, "local_train on empty shard");
  if (shard.dim() != m.dims.input) throw Error(ErrorCode::kDimensionMismatch, "shard width does not match model");
  LocalTrainResult r{{}, m, {}};
  OptimizerState opt = OptimizerState::for_params(m);
  ParamBuffers scratch;
  Rng rng(seed);
  std::vector<Eigen::Index> order(static_cast<size_t>(shard.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Matrix xb;
  std::vector<int> yb;
  for (int e = 0; e < h.local_epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(h.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(h.batch_size));
      xb.resize(static_cast<Eigen::Index>(end - start), shard.dim());
      yb.clear();
      for (size_t i = start; i < end; ++i) {
        xb.row(static_cast<Eigen::Index>(i - start)) = shard.features.row(order[i]);
        yb.push_back(shard.labels[static_cast<size_t>(order[i])]);
      }
      r.last_loss = detail::step_in_place(r.params, opt, xb, yb, h, scratch);
    }
  }
  const auto before = global_vector(m);
  r.update = global_vector(r.params);
  for (size_t i = 0; i < before.size(); ++i) r.update[i] -= before[i];
  return r;
}

inline std::vector<int> predict(const ModelParams& m, const Matrix& x, bool use_personalized) {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(x.rows()));
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index s = 0; s < x.rows(); s += kChunk) {
    const auto n = std::min(kChunk, x.rows() - s);
    auto f = detail::forward_batch(m, x.middleRows(s, n));
    const Matrix& logits = use_personalized ? f.logits_pers : f.logits_glob;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      logits.row(i).maxCoeff(&arg);
      out.push_back(static_cast<int>(arg));
    }
  }
  return out;
}

/// Confusion matrix of the selected head's argmax predictions.
inline metrics::Confusion evaluate(const ModelParams& m, const data::Dataset& ds, bool use_personalized) {
  metrics::Confusion conf(m.dims.classes);
  const auto pred = predict(m, ds.features, use_personalized);
  for (size_t i = 0; i < pred.size(); ++i) conf.add(ds.labels[i], pred[i]);
  return conf;
}

}  // namespace fedaudit::model

#endif  // FEDAUDIT_MODEL_HPP_
