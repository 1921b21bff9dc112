#pragma once

#include <span>
#include <vector>

#include "qfsl/model.hpp"

namespace qfsl {

struct LossConfig {
  double lambda = 1.0;  // bias-loss weight
  double gamma = 0.0005;  // L2 weight
  /// Off by default: only weight matrices enter the L2 term.
  bool regularize_biases = false;
};

/// Loss value together with its gradient with respect to the pre-softmax scores.
struct ScoreLoss {
  double value = 0.0;
  std::vector<double> grad;
  /// Set when the target mass underflowed and was clamped.
  bool clamped = false;
};

/// Cross-entropy -ln p[label]; gradient p - onehot(label).
ScoreLoss classification_loss(std::span<const double> probs, std::size_t label);

/// Smallest target mass used inside the bias-loss logarithm.
inline constexpr double kMinTargetMass = 1e-300;

/// -ln of the total probability on classes [target_begin, probs.size()).
/// Gradient p_j - [j is target] p_j / q.
ScoreLoss bias_loss(std::span<const double> probs, std::size_t target_begin);

/// Gradients laid out like flatten_parameters(model).
struct Regularization {
  double value = 0.0;
  std::vector<double> grad;
};

/// Sum of squared trainable weights; frozen scoring and a frozen visual
/// subnet are excluded, biases only when `include_biases`.
Regularization regularization(const QfslModel& model, bool include_biases = false);

struct LabeledSample {
  std::span<const double> features;
  std::size_t label;
};

struct BatchLoss {
  double total = 0.0;
  double classification_term = 0.0;
  double bias_term = 0.0;
  double regularization_term = 0.0;
  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  bool clamped = false;
};

struct BatchResult {
  BatchLoss loss;
  std::vector<double> grad;  // flatten_parameters layout
};

/// Within-batch QFSL objective:
///   mean L_p over labeled + lambda * mean L_b over unlabeled + gamma * Omega.
/// A missing part contributes zero. Throws ConfigError for an empty batch.
BatchResult batch_loss_and_grads(const QfslModel& model, std::span<const LabeledSample> labeled,
                                 std::span<const std::span<const double>> unlabeled,
                                 const LossConfig& cfg);

/// Loss value only; used by the finite-difference checks.
double batch_loss_value(const QfslModel& model, std::span<const LabeledSample> labeled,
                        std::span<const std::span<const double>> unlabeled, const LossConfig& cfg);

}  // namespace qfsl
