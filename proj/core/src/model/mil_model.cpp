// Copyright 2026 The milpilot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "milpilot/model/mil_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "milpilot/error.hpp"
#include "milpilot/random.hpp"

namespace milpilot {

namespace {

template <typename Real>
using ConstMatrixMap = Eigen::Map<const Matrix<Real>>;

template <typename Real>
Vector<Real> Softmax(const Vector<Real>& logits) {
  const Real max = logits.maxCoeff();
  Vector<Real> e = (logits.array() - max).exp().matrix();
  return e / e.sum();
}

// Inverted-dropout scale vector: 0 for dropped units, 1/keep for kept ones.
template <typename Real>
void FillDropoutScale(Real* out, std::size_t n, double rate, SplitMix64& rng) {
  const double keep = 1.0 - rate;
  const Real kept = static_cast<Real>(1.0 / keep);
  for (std::size_t i = 0; i < n; ++i) out[i] = rng.NextBernoulli(keep) ? kept : Real(0);
}

template <typename Real>
struct ModelView {
  const ModelConfig& config;
  const ParamSet<Real>& effective;  // LoRA already folded in

  const Matrix<Real>& W(const std::string& layer) const {
    return effective.at(names::Weight(layer));
  }
  const Matrix<Real>& b(const std::string& layer) const {
    return effective.at(names::Bias(layer));
  }
};

template <typename Real>
detail::BagActivations<Real> ForwardBag(const ModelView<Real>& model, const Batch& batch,
                                        std::size_t bag, Mode mode,
                                        std::uint64_t dropout_seed) {
  const ModelConfig& config = model.config;
  const std::size_t patches = batch.lengths[bag];
  const std::size_t dim = batch.feature_dim;
  const bool train = mode == Mode::kTrain;

  detail::BagActivations<Real> act;
  act.features =
      ConstMatrixMap<float>(batch.bag_data(bag), patches, dim).template cast<Real>();
  const Matrix<Real>& x = act.features;

  switch (config.aggregator.kind) {
    case AggregatorKind::kMean:
      act.slide = x.colwise().sum().transpose() / static_cast<Real>(patches);
      break;
    case AggregatorKind::kMax:
    case AggregatorKind::kMeanMax: {
      Vector<Real> max_vec = Vector<Real>::Constant(dim, -std::numeric_limits<Real>::infinity());
      act.argmax.assign(dim, 0);
      for (std::size_t p = 0; p < patches; ++p) {
        for (std::size_t d = 0; d < dim; ++d) {
          if (x(p, d) > max_vec(d)) {
            max_vec(d) = x(p, d);
            act.argmax[d] = p;
          }
        }
      }
      if (config.aggregator.kind == AggregatorKind::kMax) {
        act.slide = max_vec;
      } else {
        act.slide.resize(2 * dim);
        act.slide.head(dim) = x.colwise().sum().transpose() / static_cast<Real>(patches);
        act.slide.tail(dim) = max_vec;
      }
      break;
    }
    case AggregatorKind::kAbmil: {
      const auto& w_proj = model.W(names::kAttentionProj);
      const auto& b_proj = model.b(names::kAttentionProj);
      Matrix<Real> pre = x * w_proj.transpose();
      pre.rowwise() += b_proj.col(0).transpose();
      act.attn_hidden = pre.array().tanh().matrix();
      act.attn_keep = Matrix<Real>::Ones(patches, config.aggregator.attn_dim);
      if (train && config.aggregator.attn_dropout > 0.0) {
        SplitMix64 rng(DeriveSeed(dropout_seed, "dropout/attention", {bag}));
        FillDropoutScale(act.attn_keep.data(), static_cast<std::size_t>(act.attn_keep.size()),
                         config.aggregator.attn_dropout, rng);
      }
      const Matrix<Real> dropped = act.attn_hidden.cwiseProduct(act.attn_keep);
      Vector<Real> scores = dropped * model.W(names::kAttentionScore).row(0).transpose();
      scores.array() += model.b(names::kAttentionScore)(0, 0);
      act.attention = Softmax<Real>(scores);
      act.slide = x.transpose() * act.attention;
      break;
    }
  }

  Vector<Real> h = act.slide;
  for (std::size_t i = 0; i < config.head.hidden_sizes.size(); ++i) {
    const std::string layer = names::HeadHidden(i);
    act.head_inputs.push_back(h);
    Vector<Real> pre = model.W(layer) * h + model.b(layer).col(0);
    Vector<Real> keep = Vector<Real>::Ones(pre.size());
    if (train && config.head.dropout > 0.0) {
      SplitMix64 rng(DeriveSeed(dropout_seed, "dropout/head", {bag, i}));
      FillDropoutScale(keep.data(), static_cast<std::size_t>(keep.size()), config.head.dropout,
                       rng);
    }
    h = pre.cwiseMax(Real(0)).cwiseProduct(keep);
    act.head_pre.push_back(std::move(pre));
    act.head_keep.push_back(std::move(keep));
  }
  act.head_inputs.push_back(h);
  return act;
}

template <typename Real>
void CheckInputs(const ModelConfig& config, const ParamSet<Real>& params, const Batch& batch) {
  Require(batch.feature_dim == config.feature_dim, ErrorCode::kShape,
          "batch feature_dim " + std::to_string(batch.feature_dim) + " does not match model " +
              std::to_string(config.feature_dim));
  Require(batch.batch_size >= 1, ErrorCode::kEmptyBatch, "empty batch");
  batch.CheckInvariants();
  CheckParamShapes(config, params);
}

template <typename Real>
ParamSet<Real> EffectiveParams(const ModelConfig& config, const ParamSet<Real>& params) {
  return config.lora ? ApplyLora(config, params) : params;
}

template <typename Real>
ForwardResult<Real> ForwardWithView(const ModelView<Real>& model, const Batch& batch,
                                    Mode mode, std::uint64_t dropout_seed) {
  const ModelConfig& config = model.config;
  const std::size_t classes = config.num_classes();
  ForwardResult<Real> result;
  result.logits.resize(batch.batch_size, classes);
  result.probs.resize(batch.batch_size, classes);
  result.slide_vectors.resize(batch.batch_size, config.aggregator.OutputDim(config.feature_dim));
  if (config.uses_attention()) {
    result.attention = Matrix<Real>::Zero(batch.batch_size, batch.max_patches);
  }
  const auto& w_out = model.W(names::kHeadOut);
  const auto& b_out = model.b(names::kHeadOut);
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    auto act = ForwardBag(model, batch, b, mode, dropout_seed);
    const Vector<Real> logits = w_out * act.head_inputs.back() + b_out.col(0);
    result.logits.row(b) = logits.transpose();
    result.probs.row(b) = Softmax<Real>(logits).transpose();
    result.slide_vectors.row(b) = act.slide.transpose();
    if (result.attention) {
      result.attention->row(b).head(batch.lengths[b]) = act.attention.transpose();
    }
    result.cache.push_back(std::move(act));
  }
  return result;
}

// Top-k and bottom-k attention indices; ties broken by lower patch index.
template <typename Real>
void SelectInstances(const Vector<Real>& attention, std::size_t k,
                     std::vector<std::size_t>& top, std::vector<std::size_t>& bottom) {
  std::vector<std::size_t> order(static_cast<std::size_t>(attention.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return attention(a) > attention(b); });
  top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return attention(a) < attention(b); });
  bottom.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
}

template <typename Real>
void AccumulateLinear(ParamSet<Real>& grads, const std::string& layer, const Vector<Real>& dout,
                      const Vector<Real>& input) {
  grads.at(names::Weight(layer)).noalias() += dout * input.transpose();
  grads.at(names::Bias(layer)).col(0) += dout;
}

template <typename Real>
void ThrowNonFinite(const ModelConfig& config, const ParamSet<Real>& params,
                    const std::string& fallback) {
  for (const auto& [name, value] : params) {
    if (!value.allFinite()) Fail(ErrorCode::kNumeric, "non-finite values in tensor " + name);
  }
  (void)config;
  Fail(ErrorCode::kNumeric, "non-finite loss (first non-finite stage: " + fallback + ")");
}

template <typename Real>
LossResult<Real> LossImpl(const ParamSet<Real>& params, const ModelConfig& config,
                          const Batch& batch, const LossConfig& loss_config, Mode mode,
                          std::uint64_t dropout_seed, bool want_grads) {
  CheckInputs(config, params, batch);
  for (int label : batch.labels) {
    Require(label >= 0 && static_cast<std::size_t>(label) < config.num_classes(),
            ErrorCode::kValidation, "loss requires a valid label for every bag");
  }
  const ParamSet<Real> effective = EffectiveParams(config, params);
  const ModelView<Real> model{config, effective};
  ForwardResult<Real> fwd = ForwardWithView(model, batch, mode, dropout_seed);

  const std::size_t classes = config.num_classes();
  const std::size_t batch_size = batch.batch_size;
  const Real eps = static_cast<Real>(loss_config.label_smoothing);
  const bool clam = config.strategy == Strategy::kClam;
  const Real inst_weight = clam ? static_cast<Real>(config.clam->instance_weight) : Real(0);
  const Real bag_weight = Real(1) - inst_weight;
  const Real inv_batch = Real(1) / static_cast<Real>(batch_size);

  LossResult<Real> result;
  result.probs = fwd.probs;

  // Gradients with respect to the effective weights, chained into adapters at the end.
  ParamSet<Real> eff_grads;
  const std::vector<std::string> trainable = TrainableNames(config);
  const std::set<std::string> trainable_set(trainable.begin(), trainable.end());
  bool need_attention_grads = false;
  if (want_grads) {
    for (const auto& [name, value] : effective) {
      eff_grads.emplace(name, Matrix<Real>::Zero(value.rows(), value.cols()));
    }
    if (config.uses_attention()) {
      for (const char* layer : {names::kAttentionProj, names::kAttentionScore}) {
        const std::string l(layer);
        need_attention_grads = need_attention_grads ||
                               trainable_set.count(names::Weight(l)) ||
                               trainable_set.count(names::Bias(l)) ||
                               trainable_set.count(names::LoraA(l));
      }
    }
  }

  Real bag_loss_sum = 0;
  Real inst_loss_sum = 0;
  for (std::size_t b = 0; b < batch_size; ++b) {
    const auto& act = fwd.cache[b];
    const int label = batch.labels[b];
    const Vector<Real> logits = fwd.logits.row(b).transpose();
    const Real max = logits.maxCoeff();
    const Real log_sum = max + std::log((logits.array() - max).exp().sum());
    Vector<Real> target = Vector<Real>::Constant(classes, eps / static_cast<Real>(classes));
    target(label) += Real(1) - eps;
    const Vector<Real> log_probs = logits.array() - log_sum;
    bag_loss_sum += -(target.array() * log_probs.array()).sum();

    std::size_t k = 0;
    std::vector<std::size_t> top, bottom;
    Vector<Real> inst_bias;
    if (clam) {
      k = std::min<std::size_t>(config.clam->k, batch.lengths[b] / 2);
      if (k > 0) {
        SelectInstances(act.attention, k, top, bottom);
        const std::string layer = names::Instance(static_cast<std::size_t>(label));
        const auto& w_inst = model.W(layer);
        const auto& b_inst = model.b(layer);
        Real bag_inst = 0;
        for (int positive = 1; positive >= 0; --positive) {
          for (std::size_t p : positive ? top : bottom) {
            const Vector<Real> inst_logits =
                w_inst * act.features.row(p).transpose() + b_inst.col(0);
            const Real m = inst_logits.maxCoeff();
            const Real lse = m + std::log((inst_logits.array() - m).exp().sum());
            bag_inst += lse - inst_logits(positive);
            if (want_grads) {
              Vector<Real> d = (inst_logits.array() - lse).exp().matrix();
              d(positive) -= Real(1);
              d *= inst_weight * inv_batch / static_cast<Real>(2 * k);
              AccumulateLinear<Real>(eff_grads, layer, d, act.features.row(p).transpose());
            }
          }
        }
        inst_loss_sum += bag_inst / static_cast<Real>(2 * k);
      }
    }

    if (!want_grads) continue;

    // Head backward.
    Vector<Real> dlogits = (log_probs.array().exp().matrix() - target) * (bag_weight * inv_batch);
    AccumulateLinear<Real>(eff_grads, names::kHeadOut, dlogits, act.head_inputs.back());
    Vector<Real> dh = model.W(names::kHeadOut).transpose() * dlogits;
    for (std::size_t i = config.head.hidden_sizes.size(); i-- > 0;) {
      const std::string layer = names::HeadHidden(i);
      Vector<Real> dpre = dh.cwiseProduct(act.head_keep[i]);
      dpre = (act.head_pre[i].array() > Real(0)).select(dpre, Real(0));
      AccumulateLinear<Real>(eff_grads, layer, dpre, act.head_inputs[i]);
      dh = model.W(layer).transpose() * dpre;
    }

    if (!need_attention_grads) continue;
    // dh is now the gradient of the slide representation.
    const Vector<Real>& attention = act.attention;
    const Vector<Real> dattn = act.features * dh;
    const Vector<Real> dscore =
        attention.cwiseProduct((dattn.array() - attention.dot(dattn)).matrix());
    const Matrix<Real> dropped = act.attn_hidden.cwiseProduct(act.attn_keep);
    eff_grads.at(names::Weight(names::kAttentionScore)).row(0).noalias() +=
        dscore.transpose() * dropped;
    eff_grads.at(names::Bias(names::kAttentionScore))(0, 0) += dscore.sum();
    Matrix<Real> dhidden = dscore * model.W(names::kAttentionScore).row(0);
    dhidden = dhidden.cwiseProduct(act.attn_keep);
    dhidden.array() *= Real(1) - act.attn_hidden.array().square();
    eff_grads.at(names::Weight(names::kAttentionProj)).noalias() +=
        dhidden.transpose() * act.features;
    eff_grads.at(names::Bias(names::kAttentionProj)).col(0) +=
        dhidden.colwise().sum().transpose();
  }

  result.bag_loss = bag_loss_sum * inv_batch;
  result.instance_loss = inst_loss_sum * inv_batch;
  result.loss = clam ? bag_weight * result.bag_loss + inst_weight * result.instance_loss
                     : result.bag_loss;
  if (!std::isfinite(static_cast<double>(result.loss))) {
    ThrowNonFinite(config, params, fwd.logits.allFinite() ? "loss" : "logits");
  }
  if (!want_grads) return result;

  const Real scale = config.lora ? static_cast<Real>(config.lora->scale()) : Real(0);
  for (const auto& name : trainable) {
    const std::size_t pos = name.find(".lora_");
    if (pos == std::string::npos) {
      result.grads.emplace(name, std::move(eff_grads.at(name)));
      continue;
    }
    const std::string layer = name.substr(0, pos);
    const Matrix<Real>& g = eff_grads.at(names::Weight(layer));
    const Matrix<Real>& a = params.at(names::LoraA(layer));
    const Matrix<Real>& bm = params.at(names::LoraB(layer));
    if (name == names::LoraA(layer)) {
      result.grads.emplace(name, scale * (bm.transpose() * g));
    } else {
      result.grads.emplace(name, scale * (g * a.transpose()));
    }
  }
  return result;
}

}  // namespace

template <typename Real>
ForwardResult<Real> Forward(const ParamSet<Real>& params, const ModelConfig& config,
                            const Batch& batch, Mode mode, std::uint64_t dropout_seed) {
  CheckInputs(config, params, batch);
  const ParamSet<Real> effective = EffectiveParams(config, params);
  return ForwardWithView(ModelView<Real>{config, effective}, batch, mode, dropout_seed);
}

template <typename Real>
LossResult<Real> LossAndGrads(const ParamSet<Real>& params, const ModelConfig& config,
                              const Batch& batch, const LossConfig& loss_config, Mode mode,
                              std::uint64_t dropout_seed) {
  return LossImpl(params, config, batch, loss_config, mode, dropout_seed, true);
}

template <typename Real>
LossResult<Real> ComputeLoss(const ParamSet<Real>& params, const ModelConfig& config,
                             const Batch& batch, const LossConfig& loss_config, Mode mode,
                             std::uint64_t dropout_seed) {
  return LossImpl(params, config, batch, loss_config, mode, dropout_seed, false);
}

template ForwardResult<float> Forward<float>(const ParamSet<float>&, const ModelConfig&,
                                             const Batch&, Mode, std::uint64_t);
template ForwardResult<double> Forward<double>(const ParamSet<double>&, const ModelConfig&,
                                               const Batch&, Mode, std::uint64_t);
template LossResult<float> LossAndGrads<float>(const ParamSet<float>&, const ModelConfig&,
                                               const Batch&, const LossConfig&, Mode,
                                               std::uint64_t);
template LossResult<double> LossAndGrads<double>(const ParamSet<double>&, const ModelConfig&,
                                                 const Batch&, const LossConfig&, Mode,
                                                 std::uint64_t);
template LossResult<float> ComputeLoss<float>(const ParamSet<float>&, const ModelConfig&,
                                              const Batch&, const LossConfig&, Mode,
                                              std::uint64_t);
template LossResult<double> ComputeLoss<double>(const ParamSet<double>&, const ModelConfig&,
                                                const Batch&, const LossConfig&, Mode,
                                                std::uint64_t);

}  // namespace milpilot
