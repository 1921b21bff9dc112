#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qfsl/core.hpp"

namespace qfsl {

/// Class semantic vectors. Source classes occupy indices [0, S), target
/// classes [S, S + T).
class AttributeTable {
 public:
  AttributeTable() = default;
  /// Validates unique names, a nonzero source and target count and nonzero rows.
  AttributeTable(std::vector<std::string> class_names, std::size_t num_source, Matrix raw);

  const std::vector<std::string>& class_names() const { return names_; }
  std::size_t num_source() const { return num_source_; }
  std::size_t num_target() const { return names_.size() - num_source_; }
  std::size_t num_classes() const { return names_.size(); }
  std::size_t attr_dim() const { return raw_.cols(); }
  const Matrix& raw() const { return raw_; }
  /// Unit-norm rows.
  const Matrix& normalized() const { return normalized_; }

  std::optional<std::size_t> find(const std::string& name) const;
  bool is_target(std::size_t cls) const { return cls >= num_source_; }

  bool operator==(const AttributeTable&) const = default;

 private:
  std::vector<std::string> names_;
  std::size_t num_source_ = 0;
  Matrix raw_;
  Matrix normalized_;
};

enum class Activation { Identity, Relu };

struct MlpSpec {
  /// Input width first, output width last.
  std::vector<std::size_t> widths;
  /// Activation after the last layer; hidden layers always use ReLU.
  Activation output_activation = Activation::Identity;
};

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

struct Mlp {
  std::vector<DenseLayer> layers;
  Activation output_activation = Activation::Identity;

  std::size_t input_dim() const { return layers.front().weights.cols(); }
  std::size_t output_dim() const { return layers.back().weights.rows(); }
  bool operator==(const Mlp&) const = default;
};

/// Glorot-uniform weights and zero biases.
Mlp init_mlp(const MlpSpec& spec, Rng& rng);

struct LayerCache {
  std::vector<double> input;
  std::vector<double> pre_activation;
};

struct QfslModel {
  AttributeTable attributes;
  /// Absent when features are fed straight to the bridge.
  std::optional<Mlp> visual;
  bool visual_trainable = true;
  Mlp bridge;
  /// Frozen copy of attributes.normalized().
  Matrix scoring;
  std::uint64_t seed = 0;

  std::size_t num_source() const { return attributes.num_source(); }
  std::size_t num_target() const { return attributes.num_target(); }
  std::size_t num_classes() const { return attributes.num_classes(); }
  std::size_t input_dim() const { return visual ? visual->input_dim() : bridge.input_dim(); }

  bool operator==(const QfslModel&) const = default;
};

/// Layer widths of the default bridge: one hidden layer of
/// max(attr_dim, visual_dim / 2) units.
std::vector<std::size_t> default_bridge_hidden(std::size_t visual_dim, std::size_t attr_dim);

/// Builds a model whose scoring layer is the normalized attribute table.
/// `visual_spec` must map `visual_dim` inputs to the bridge input width.
QfslModel init_model(const AttributeTable& attr, std::size_t visual_dim,
                     const std::vector<std::size_t>& bridge_hidden,
                     const std::optional<MlpSpec>& visual_spec, std::uint64_t seed,
                     bool visual_trainable = true);

struct ForwardPass {
  std::vector<LayerCache> visual;
  std::vector<LayerCache> bridge;
  std::vector<double> embedding;  // bridge output
  std::vector<double> scores;     // one per class
};

/// scores[y] = <bridge(visual(x)), phi*(y)>. Rejects non-finite input.
ForwardPass forward_scores(const QfslModel& model, std::span<const double> x);

enum class SearchSpace { TargetOnly, All };

/// Arg max over [begin, end); ties go to the lowest index.
std::size_t argmax_range(std::span<const double> scores, std::size_t begin, std::size_t end);
std::size_t predict_from_scores(std::span<const double> scores, std::size_t num_source,
                                SearchSpace space);
std::size_t predict(const QfslModel& model, std::span<const double> x, SearchSpace space);

// Trainable parameters in a fixed order: visual layers (when trainable), then
// bridge layers; per layer the weights then the bias.

struct ParameterGroup {
  std::string name;  // "W_theta", "b_theta", "W_phi", "b_phi"
  std::size_t offset;
  std::size_t size;
};

std::vector<ParameterGroup> parameter_groups(const QfslModel& model);
std::size_t parameter_count(const QfslModel& model);
std::vector<double> flatten_parameters(const QfslModel& model);
void assign_parameters(QfslModel& model, std::span<const double> flat);

void write_model(std::ostream& out, const QfslModel& model);
/// Throws DataError with VersionMismatch, Truncated, DimensionMismatch or Malformed.
QfslModel read_model(std::istream& in);
void save_model(const std::string& path, const QfslModel& model);
QfslModel load_model(const std::string& path);

/// FNV-1a over the serialized model.
std::uint64_t model_checksum(const QfslModel& model);

}  // namespace qfsl
