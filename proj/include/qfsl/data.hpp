#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qfsl/loss.hpp"
#include "qfsl/model.hpp"

namespace qfsl {

enum class Role { SourceTrain, SourceTest, TargetPool, TargetTest };

const char* to_string(Role role);
/// Accepts the split-file spellings: source-train, source-test, target-pool, target-test.
std::optional<Role> parse_role(const std::string& text);

struct Instance {
  std::string id;
  std::vector<double> features;
  /// For TargetPool instances this is the hidden ground truth: it is only
  /// read by evaluation code, never handed to a training loss.
  std::size_t label = 0;
  Role role = Role::SourceTrain;

  bool operator==(const Instance&) const = default;
};

/// Instances with roles. Class indices follow the companion AttributeTable.
class Dataset {
 public:
  Dataset() = default;
  /// Validates that source roles carry source labels, target roles target
  /// labels, ids are unique and every feature vector has `feature_dim` entries.
  Dataset(std::vector<std::string> class_names, std::size_t num_source, std::size_t feature_dim,
          std::vector<Instance> instances);

  const std::vector<std::string>& class_names() const { return names_; }
  std::size_t num_source() const { return num_source_; }
  std::size_t num_target() const { return names_.size() - num_source_; }
  std::size_t num_classes() const { return names_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }
  const std::vector<Instance>& instances() const { return instances_; }

  std::vector<const Instance*> with_role(Role role) const;
  std::size_t count(Role role) const;

  /// Labeled source-train samples; the only labels a trainer ever sees.
  std::vector<LabeledSample> labeled_pool() const;
  /// Feature vectors of the target pool, labels withheld.
  std::vector<std::span<const double>> unlabeled_pool() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<std::string> names_;
  std::size_t num_source_ = 0;
  std::size_t feature_dim_ = 0;
  std::vector<Instance> instances_;
};

struct ZslData {
  Dataset dataset;
  AttributeTable attributes;

  bool operator==(const ZslData&) const = default;
};

inline constexpr const char* kAttributesFile = "attributes.tsv";
inline constexpr const char* kFeaturesFile = "features.tsv";
inline constexpr const char* kSplitFile = "split.tsv";

void write_attributes(std::ostream& out, const AttributeTable& attr);
void write_features(std::ostream& out, const Dataset& data);
void write_split(std::ostream& out, const Dataset& data);

AttributeTable read_attributes(std::istream& in);
ZslData read_dataset(std::istream& features, std::istream& attributes, std::istream& split);

ZslData load_dataset(const std::string& features_path, const std::string& attributes_path,
                     const std::string& split_path);
/// Reads the three standard file names from `dir`.
ZslData load_dataset_dir(const std::string& dir);
void save_dataset_dir(const std::string& dir, const ZslData& data);

struct SynthSpec {
  std::size_t num_source = 40;
  std::size_t num_target = 10;
  std::size_t attr_dim = 16;
  std::size_t feature_dim = 32;
  std::size_t per_class = 50;
  double noise_sigma = 0.15;
  std::uint64_t mixing_seed = 7;
  std::uint64_t data_seed = 11;
};

/// Attributes uniform in [0,1]^a, prototypes M * phi*(y) with Gaussian M
/// scaled by 1/sqrt(a), features prototype + noise_sigma * N(0, I).
/// Source classes split 80/20 train/test, target classes 50/50 pool/test.
ZslData generate_synthetic(const SynthSpec& spec);

/// Re-designates round(holdout_fraction * S) source classes as pseudo-targets.
/// Real target classes are dropped; held-out source-train instances become the
/// unlabeled pool and their source-test instances the target test set.
ZslData classwise_cv_split(const ZslData& data, double holdout_fraction, Rng& rng);

/// Keeps `keep` source classes. The kept sets are nested across `keep` for
/// a fixed seed, and target classes with their instances are unchanged.
ZslData subset_source_classes(const ZslData& data, std::size_t keep, std::uint64_t seed);

}  // namespace qfsl
