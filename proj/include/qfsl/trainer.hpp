#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qfsl/data.hpp"
#include "qfsl/loss.hpp"
#include "qfsl/model.hpp"

namespace qfsl {

enum class TrainMode { Qfsl, Inductive };

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 64;
  std::size_t iterations = 5000;
  double lambda = 1.0;
  double gamma = 0.0005;
  std::uint64_t seed = 0;
  bool visual_trainable = true;
  TrainMode mode = TrainMode::Qfsl;
  bool regularize_biases = false;
  /// Classical momentum; 0 gives plain SGD.
  double momentum = 0.0;
  /// Single affine+ReLU visual layer in front of the bridge.
  bool visual_layer = true;
  /// Hidden widths of the bridge; default_bridge_hidden() when unset.
  std::optional<std::vector<std::size_t>> bridge_hidden;

  /// Throws ConfigError on invalid values.
  void validate() const;
  LossConfig loss() const;
};

struct TrainingPool {
  std::vector<LabeledSample> labeled;
  std::vector<std::span<const double>> unlabeled;
};

struct MixedBatch {
  std::vector<std::size_t> labeled;    // indices into pool.labeled
  std::vector<std::size_t> unlabeled;  // indices into pool.unlabeled
};

/// Draws batch_size indices uniformly with replacement from the union of the
/// labeled and unlabeled pools, then splits them by origin.
MixedBatch sample_mixed_batch(std::size_t n_labeled, std::size_t n_unlabeled, std::size_t batch_size,
                              Rng& rng);

/// w <- w - lr * g over trainable parameters. Throws ConfigError on a size mismatch.
void sgd_step(QfslModel& model, std::span<const double> grad, double learning_rate);

struct TrainLog {
  std::vector<BatchLoss> entries;
  double wall_seconds = 0.0;
  std::uint64_t model_checksum = 0;
};

/// Tab-separated: iteration, total, classification_term, bias_term, regularization_term.
void write_train_log(std::ostream& out, const TrainLog& log);

struct TrainResult {
  QfslModel model;
  TrainLog log;
};

/// Called once per iteration with exactly what reaches the loss.
using BatchObserver =
    std::function<void(std::span<const LabeledSample>, std::span<const std::span<const double>>)>;

/// Builds the model for `attr` and `feature_dim` from cfg's architecture fields.
QfslModel init_model_for(const AttributeTable& attr, std::size_t feature_dim, const TrainConfig& cfg);

/// Mixed-batch SGD over an explicit pool. In inductive mode the unlabeled
/// pool is ignored. Throws NumericalError on a non-finite loss.
TrainResult train_on_pool(const AttributeTable& attr, std::size_t feature_dim, const TrainingPool& pool,
                          const TrainConfig& cfg, const BatchObserver& observer = {});

/// Trains on the source-train labels and, in qfsl mode, the target pool.
TrainResult train(const Dataset& dataset, const AttributeTable& attr, const TrainConfig& cfg,
                  const BatchObserver& observer = {});

}  // namespace qfsl
