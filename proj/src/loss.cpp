#include "qfsl/loss.hpp"

#include <cmath>

#include "qfsl/error.hpp"

namespace qfsl {

ScoreLoss classification_loss(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) throw ConfigError("label " + std::to_string(label) + " out of range");
  ScoreLoss out;
  out.value = -std::log(probs[label]);
  out.grad.assign(probs.begin(), probs.end());
  out.grad[label] -= 1.0;
  return out;
}

ScoreLoss bias_loss(std::span<const double> probs, std::size_t target_begin) {
  if (target_begin >= probs.size()) throw ConfigError("bias loss needs at least one target class");
  double q = 0.0;
  for (std::size_t j = target_begin; j < probs.size(); ++j) q += probs[j];
  ScoreLoss out;
  if (q < kMinTargetMass) {
    q = kMinTargetMass;
    out.clamped = true;
  }
  out.value = -std::log(q);
  out.grad.assign(probs.begin(), probs.end());
  for (std::size_t j = target_begin; j < probs.size(); ++j) out.grad[j] -= probs[j] / q;
  return out;
}

namespace {

struct MlpLayout {
  std::vector<std::size_t> weight_offset;
  std::vector<std::size_t> bias_offset;
};

MlpLayout layout_of(const Mlp& mlp, std::size_t& offset) {
  MlpLayout layout;
  for (const auto& layer : mlp.layers) {
    layout.weight_offset.push_back(offset);
    offset += layer.weights.size();
  }
  for (const auto& layer : mlp.layers) {
    layout.bias_offset.push_back(offset);
    offset += layer.bias.size();
  }
  return layout;
}

struct ModelLayout {
  std::optional<MlpLayout> visual;
  MlpLayout bridge;
  std::size_t total = 0;
};

ModelLayout layout_of(const QfslModel& model) {
  ModelLayout layout;
  if (model.visual && model.visual_trainable) layout.visual = layout_of(*model.visual, layout.total);
  layout.bridge = layout_of(model.bridge, layout.total);
  return layout;
}

// Accumulates parameter gradients into `grad` and returns the gradient with
// respect to the subnet input (empty when `want_input_grad` is false).
std::vector<double> backprop_mlp(const Mlp& mlp, const std::vector<LayerCache>& caches,
                                 std::vector<double> dout, const MlpLayout* layout,
                                 std::vector<double>& grad, bool want_input_grad) {
  for (std::size_t i = mlp.layers.size(); i-- > 0;) {
    const auto& layer = mlp.layers[i];
    const auto& cache = caches[i];
    const bool last = i + 1 == mlp.layers.size();
    if (!last || mlp.output_activation == Activation::Relu) {
      for (std::size_t j = 0; j < dout.size(); ++j)
        if (!(cache.pre_activation[j] > 0.0)) dout[j] = 0.0;
    }
    if (layout) {
      const std::size_t in = layer.weights.cols();
      double* dw = grad.data() + layout->weight_offset[i];
      double* db = grad.data() + layout->bias_offset[i];
      for (std::size_t r = 0; r < dout.size(); ++r) {
        const double d = dout[r];
        if (d == 0.0) continue;
        db[r] += d;
        for (std::size_t c = 0; c < in; ++c) dw[r * in + c] += d * cache.input[c];
      }
    }
    if (i == 0 && !want_input_grad) return {};
    dout = matvec_transposed(layer.weights, dout);
  }
  return dout;
}

void backprop_scores(const QfslModel& model, const ModelLayout& layout, const ForwardPass& pass,
                     std::span<const double> dscores, std::vector<double>& grad) {
  std::vector<double> dembed = matvec_transposed(model.scoring, dscores);
  const bool visual_grad = layout.visual.has_value();
  std::vector<double> dvisual =
      backprop_mlp(model.bridge, pass.bridge, std::move(dembed), &layout.bridge, grad, visual_grad);
  if (visual_grad) {
    backprop_mlp(*model.visual, pass.visual, std::move(dvisual), &*layout.visual, grad, false);
  }
}

void check_batch(const QfslModel& model, std::span<const LabeledSample> labeled,
                 std::span<const std::span<const double>> unlabeled) {
  if (labeled.empty() && unlabeled.empty()) throw ConfigError("empty batch");
  for (const auto& s : labeled) {
    if (s.label >= model.num_classes()) throw ConfigError("label " + std::to_string(s.label) + " out of range");
  }
}

}  // namespace

Regularization regularization(const QfslModel& model, bool include_biases) {
  const ModelLayout layout = layout_of(model);
  Regularization out;
  out.grad.assign(layout.total, 0.0);
  auto add_mlp = [&](const Mlp& mlp, const MlpLayout& l) {
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
      const auto w = mlp.layers[i].weights.values();
      for (std::size_t k = 0; k < w.size(); ++k) {
        out.value += w[k] * w[k];
        out.grad[l.weight_offset[i] + k] = 2.0 * w[k];
      }
      if (!include_biases) continue;
      const auto& b = mlp.layers[i].bias;
      for (std::size_t k = 0; k < b.size(); ++k) {
        out.value += b[k] * b[k];
        out.grad[l.bias_offset[i] + k] = 2.0 * b[k];
      }
    }
  };
  if (layout.visual) add_mlp(*model.visual, *layout.visual);
  add_mlp(model.bridge, layout.bridge);
  return out;
}

BatchResult batch_loss_and_grads(const QfslModel& model, std::span<const LabeledSample> labeled,
                                 std::span<const std::span<const double>> unlabeled,
                                 const LossConfig& cfg) {
  check_batch(model, labeled, unlabeled);
  const ModelLayout layout = layout_of(model);
  BatchResult result;
  result.grad.assign(layout.total, 0.0);
  BatchLoss& loss = result.loss;
  loss.n_labeled = labeled.size();
  loss.n_unlabeled = unlabeled.size();

  std::vector<double> dscores;
  for (const auto& sample : labeled) {
    ForwardPass pass = forward_scores(model, sample.features);
    ScoreLoss lp = classification_loss(softmax(pass.scores), sample.label);
    loss.classification_term += lp.value;
    const double scale = 1.0 / static_cast<double>(labeled.size());
    for (double& g : lp.grad) g *= scale;
    backprop_scores(model, layout, pass, lp.grad, result.grad);
  }
  if (!labeled.empty()) loss.classification_term /= static_cast<double>(labeled.size());

  for (const auto& x : unlabeled) {
    ForwardPass pass = forward_scores(model, x);
    ScoreLoss lb = bias_loss(softmax(pass.scores), model.num_source());
    loss.bias_term += lb.value;
    loss.clamped = loss.clamped || lb.clamped;
    if (cfg.lambda == 0.0) continue;
    const double scale = cfg.lambda / static_cast<double>(unlabeled.size());
    for (double& g : lb.grad) g *= scale;
    backprop_scores(model, layout, pass, lb.grad, result.grad);
  }
  if (!unlabeled.empty()) loss.bias_term /= static_cast<double>(unlabeled.size());

  Regularization reg = regularization(model, cfg.regularize_biases);
  loss.regularization_term = reg.value;
  for (std::size_t k = 0; k < reg.grad.size(); ++k) result.grad[k] += cfg.gamma * reg.grad[k];

  loss.total = loss.classification_term + cfg.lambda * loss.bias_term + cfg.gamma * loss.regularization_term;
  return result;
}

double batch_loss_value(const QfslModel& model, std::span<const LabeledSample> labeled,
                        std::span<const std::span<const double>> unlabeled, const LossConfig& cfg) {
  check_batch(model, labeled, unlabeled);
  double lp = 0.0;
  for (const auto& sample : labeled) {
    lp += classification_loss(softmax(forward_scores(model, sample.features).scores), sample.label).value;
  }
  double lb = 0.0;
  for (const auto& x : unlabeled) {
    lb += bias_loss(softmax(forward_scores(model, x).scores), model.num_source()).value;
  }
  if (!labeled.empty()) lp /= static_cast<double>(labeled.size());
  if (!unlabeled.empty()) lb /= static_cast<double>(unlabeled.size());
  return lp + cfg.lambda * lb + cfg.gamma * regularization(model, cfg.regularize_biases).value;
}

}  // namespace qfsl
