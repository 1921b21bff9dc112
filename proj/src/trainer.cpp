#include "qfsl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include "qfsl/error.hpp"
#include "qfsl/text.hpp"

namespace qfsl {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be non-negative");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be non-negative");
  if (!(momentum >= 0.0) || !(momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (bridge_hidden) {
    for (auto w : *bridge_hidden)
      if (w == 0) throw ConfigError("bridge hidden widths must be positive");
  }
}

LossConfig TrainConfig::loss() const {
  return {mode == TrainMode::Inductive ? 0.0 : lambda, gamma, regularize_biases};
}

MixedBatch sample_mixed_batch(std::size_t n_labeled, std::size_t n_unlabeled, std::size_t batch_size,
                              Rng& rng) {
  const std::size_t total = n_labeled + n_unlabeled;
  if (total == 0) throw ConfigError("cannot sample from an empty pool");
  MixedBatch batch;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t k = rng.index(total);
    if (k < n_labeled) {
      batch.labeled.push_back(k);
    } else {
      batch.unlabeled.push_back(k - n_labeled);
    }
  }
  return batch;
}

void sgd_step(QfslModel& model, std::span<const double> grad, double learning_rate) {
  std::vector<double> params = flatten_parameters(model);
  if (params.size() != grad.size()) {
    throw ConfigError("gradient has " + std::to_string(grad.size()) + " entries, model has " +
                      std::to_string(params.size()) + " trainable parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grad[i];
  assign_parameters(model, params);
}

void write_train_log(std::ostream& out, const TrainLog& log) {
  out << "iteration\ttotal\tclassification_term\tbias_term\tregularization_term\n";
  for (std::size_t i = 0; i < log.entries.size(); ++i) {
    const auto& e = log.entries[i];
    out << i + 1 << '\t' << format_double(e.total) << '\t' << format_double(e.classification_term) << '\t'
        << format_double(e.bias_term) << '\t' << format_double(e.regularization_term) << '\n';
  }
}

QfslModel init_model_for(const AttributeTable& attr, std::size_t feature_dim, const TrainConfig& cfg) {
  std::optional<MlpSpec> visual;
  if (cfg.visual_layer) visual = MlpSpec{{feature_dim, feature_dim}, Activation::Relu};
  const auto hidden = cfg.bridge_hidden.value_or(default_bridge_hidden(feature_dim, attr.attr_dim()));
  return init_model(attr, feature_dim, hidden, visual, cfg.seed, cfg.visual_trainable);
}

TrainResult train_on_pool(const AttributeTable& attr, std::size_t feature_dim, const TrainingPool& pool,
                          const TrainConfig& cfg, const BatchObserver& observer) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const bool transductive = cfg.mode == TrainMode::Qfsl;
  const std::size_t n_unlabeled = transductive ? pool.unlabeled.size() : 0;
  if (pool.labeled.empty() && n_unlabeled == 0) throw ConfigError("training pool is empty");

  TrainResult result{init_model_for(attr, feature_dim, cfg), {}};
  QfslModel& model = result.model;
  const LossConfig loss_cfg = cfg.loss();
  // Batch sampling uses its own stream so it does not depend on the model shape.
  Rng rng(cfg.seed ^ 0x5851F42D4C957F2DULL);
  std::vector<double> velocity;
  if (cfg.momentum > 0.0) velocity.assign(parameter_count(model), 0.0);

  std::vector<LabeledSample> labeled;
  std::vector<std::span<const double>> unlabeled;
  result.log.entries.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const MixedBatch batch = sample_mixed_batch(pool.labeled.size(), n_unlabeled, cfg.batch_size, rng);
    labeled.clear();
    unlabeled.clear();
    for (auto i : batch.labeled) labeled.push_back(pool.labeled[i]);
    for (auto i : batch.unlabeled) unlabeled.push_back(pool.unlabeled[i]);
    if (observer) observer(labeled, unlabeled);

    BatchResult step = batch_loss_and_grads(model, labeled, unlabeled, loss_cfg);
    if (!std::isfinite(step.loss.total)) {
      throw NumericalError("non-finite loss at iteration " + std::to_string(it + 1) + " (classification " +
                           format_double(step.loss.classification_term) + ", bias " +
                           format_double(step.loss.bias_term) + ")");
    }
    if (!velocity.empty()) {
      for (std::size_t k = 0; k < velocity.size(); ++k) {
        velocity[k] = cfg.momentum * velocity[k] + step.grad[k];
        step.grad[k] = velocity[k];
      }
    }
    sgd_step(model, step.grad, cfg.learning_rate);
    result.log.entries.push_back(step.loss);
  }
  result.log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.log.model_checksum = model_checksum(model);
  return result;
}

TrainResult train(const Dataset& dataset, const AttributeTable& attr, const TrainConfig& cfg,
                  const BatchObserver& observer) {
  if (dataset.class_names() != attr.class_names() || dataset.num_source() != attr.num_source()) {
    throw DataError(DataIssue::UnknownClass, "dataset classes do not match the attribute table");
  }
  TrainingPool pool{dataset.labeled_pool(), {}};
  if (cfg.mode == TrainMode::Qfsl) pool.unlabeled = dataset.unlabeled_pool();
  return train_on_pool(attr, dataset.feature_dim(), pool, cfg, observer);
}

}  // namespace qfsl
