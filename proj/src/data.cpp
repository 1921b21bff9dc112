#include "qfsl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include "qfsl/error.hpp"
#include "qfsl/text.hpp"

namespace qfsl {

const char* to_string(Role role) {
  switch (role) {
    case Role::SourceTrain: return "source-train";
    case Role::SourceTest: return "source-test";
    case Role::TargetPool: return "target-pool";
    case Role::TargetTest: return "target-test";
  }
  return "?";
}

std::optional<Role> parse_role(const std::string& text) {
  for (Role r : {Role::SourceTrain, Role::SourceTest, Role::TargetPool, Role::TargetTest})
    if (text == to_string(r)) return r;
  return std::nullopt;
}

namespace {

bool is_source_role(Role r) { return r == Role::SourceTrain || r == Role::SourceTest; }

}  // namespace

Dataset::Dataset(std::vector<std::string> class_names, std::size_t num_source, std::size_t feature_dim,
                 std::vector<Instance> instances)
    : names_(std::move(class_names)),
      num_source_(num_source),
      feature_dim_(feature_dim),
      instances_(std::move(instances)) {
  if (num_source_ == 0 || num_source_ >= names_.size()) {
    throw DataError(DataIssue::ClassCoverage, "dataset needs at least one source and one target class");
  }
  if (feature_dim_ == 0) throw DataError(DataIssue::DimensionMismatch, "feature dimension is 0");
  std::set<std::string> ids;
  for (const auto& inst : instances_) {
    if (!ids.insert(inst.id).second) throw DataError(DataIssue::DuplicateId, inst.id);
    if (inst.features.size() != feature_dim_) {
      throw DataError(DataIssue::DimensionMismatch, "instance " + inst.id + " has " +
                                                        std::to_string(inst.features.size()) +
                                                        " features, expected " + std::to_string(feature_dim_));
    }
    if (inst.label >= names_.size()) throw DataError(DataIssue::UnknownClass, "instance " + inst.id);
    if (is_source_role(inst.role) != (inst.label < num_source_)) {
      throw DataError(DataIssue::ClassCoverage, "instance " + inst.id + " has role " + to_string(inst.role) +
                                                    " but class " + names_[inst.label]);
    }
  }
}

std::vector<const Instance*> Dataset::with_role(Role role) const {
  std::vector<const Instance*> out;
  for (const auto& inst : instances_)
    if (inst.role == role) out.push_back(&inst);
  return out;
}

std::size_t Dataset::count(Role role) const {
  return static_cast<std::size_t>(
      std::count_if(instances_.begin(), instances_.end(), [&](const Instance& i) { return i.role == role; }));
}

std::vector<LabeledSample> Dataset::labeled_pool() const {
  std::vector<LabeledSample> out;
  for (const auto& inst : instances_)
    if (inst.role == Role::SourceTrain) out.push_back({inst.features, inst.label});
  return out;
}

std::vector<std::span<const double>> Dataset::unlabeled_pool() const {
  std::vector<std::span<const double>> out;
  for (const auto& inst : instances_)
    if (inst.role == Role::TargetPool) out.emplace_back(inst.features);
  return out;
}

// ---------------------------------------------------------------------------
// Files

namespace {

void write_row(std::ostream& out, std::span<const double> values) {
  for (double v : values) out << '\t' << format_double(v);
  out << '\n';
}

// Parses "key=<count>".
std::size_t header_count(const std::string& field, const std::string& key, const LineReader& at) {
  if (field.rfind(key + "=", 0) != 0) at.fail(DataIssue::Malformed, "expected '" + key + "=<n>' in header");
  return parse_count(field.substr(key.size() + 1), at);
}

void check_magic(const std::vector<std::string>& header, const std::string& magic, const LineReader& at,
                 std::size_t fields) {
  if (header.size() < 2 || header[0] != magic || header[1] != "v1") {
    at.fail(DataIssue::VersionMismatch, "expected '" + magic + " v1' header");
  }
  if (header.size() != fields) at.fail(DataIssue::Malformed, "malformed " + magic + " header");
}

std::vector<double> parse_values(const std::vector<std::string>& fields, std::size_t first,
                                 std::size_t expected, const LineReader& at) {
  if (fields.size() - first != expected) {
    at.fail(DataIssue::DimensionMismatch, "expected " + std::to_string(expected) + " values, found " +
                                              std::to_string(fields.size() - first));
  }
  std::vector<double> values;
  values.reserve(expected);
  for (std::size_t i = first; i < fields.size(); ++i) values.push_back(parse_double(fields[i], at));
  return values;
}

}  // namespace

void write_attributes(std::ostream& out, const AttributeTable& attr) {
  out << "QFSL-ATTR v1 classes=" << attr.num_classes() << " dim=" << attr.attr_dim() << '\n';
  for (std::size_t c = 0; c < attr.num_classes(); ++c) {
    if (c == attr.num_source()) out << "%TARGETS\n";
    out << attr.class_names()[c];
    write_row(out, attr.raw().row(c));
  }
}

void write_features(std::ostream& out, const Dataset& data) {
  out << "QFSL-FEAT v1 instances=" << data.instances().size() << " dim=" << data.feature_dim() << '\n';
  for (const auto& inst : data.instances()) {
    out << inst.id << '\t' << data.class_names()[inst.label];
    write_row(out, inst.features);
  }
}

void write_split(std::ostream& out, const Dataset& data) {
  out << "QFSL-SPLIT v1\n";
  for (const auto& inst : data.instances()) out << inst.id << '\t' << to_string(inst.role) << '\n';
}

AttributeTable read_attributes(std::istream& stream) {
  LineReader in(stream, "attributes file", true);
  if (!in.has_next()) in.fail(DataIssue::Empty, "no header");
  const auto header = split_ws(in.next());
  check_magic(header, "QFSL-ATTR", in, 4);
  const auto classes = header_count(header[2], "classes", in);
  const auto dim = header_count(header[3], "dim", in);

  std::vector<std::string> names;
  std::vector<double> raw;
  std::optional<std::size_t> num_source;
  std::set<std::string> seen;
  while (in.has_next()) {
    const std::string line = in.next();
    if (line == "%TARGETS") {
      if (num_source) in.fail(DataIssue::Malformed, "repeated %TARGETS marker");
      num_source = names.size();
      continue;
    }
    const auto fields = split_tabs(line);
    const auto values = parse_values(fields, 1, dim, in);
    if (!seen.insert(fields[0]).second) in.fail(DataIssue::Malformed, "class " + fields[0] + " defined twice");
    if (std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; })) {
      in.fail(DataIssue::ZeroNormAttribute, "class " + fields[0]);
    }
    names.push_back(fields[0]);
    raw.insert(raw.end(), values.begin(), values.end());
  }
  if (names.size() != classes) {
    in.fail(DataIssue::Truncated, "header declares " + std::to_string(classes) + " classes, found " +
                                      std::to_string(names.size()));
  }
  if (!num_source) in.fail(DataIssue::Malformed, "missing %TARGETS marker");
  const std::size_t rows = names.size();
  return AttributeTable(std::move(names), *num_source, Matrix(rows, dim, std::move(raw)));
}

ZslData read_dataset(std::istream& features, std::istream& attributes, std::istream& split) {
  AttributeTable attr = read_attributes(attributes);

  LineReader feat(features, "features file", true);
  if (!feat.has_next()) feat.fail(DataIssue::Empty, "no header");
  const auto header = split_ws(feat.next());
  check_magic(header, "QFSL-FEAT", feat, 4);
  const auto n = header_count(header[2], "instances", feat);
  const auto dim = header_count(header[3], "dim", feat);

  std::vector<Instance> instances;
  std::unordered_map<std::string, std::size_t> by_id;
  while (feat.has_next()) {
    const auto fields = split_tabs(feat.next());
    if (fields.size() < 2) feat.fail(DataIssue::Malformed, "expected '<id>\\t<class>\\t<values>'");
    auto cls = attr.find(fields[1]);
    if (!cls) feat.fail(DataIssue::UnknownClass, "class " + fields[1]);
    if (by_id.contains(fields[0])) feat.fail(DataIssue::DuplicateId, "instance " + fields[0]);
    by_id.emplace(fields[0], instances.size());
    instances.push_back({fields[0], parse_values(fields, 2, dim, feat), *cls, Role::SourceTrain});
  }
  if (instances.size() != n) {
    feat.fail(DataIssue::Truncated, "header declares " + std::to_string(n) + " instances, found " +
                                        std::to_string(instances.size()));
  }

  LineReader sp(split, "split file", true);
  if (!sp.has_next()) sp.fail(DataIssue::Empty, "no header");
  check_magic(split_ws(sp.next()), "QFSL-SPLIT", sp, 2);
  std::vector<bool> assigned(instances.size(), false);
  while (sp.has_next()) {
    const auto fields = split_tabs(sp.next());
    if (fields.size() != 2) sp.fail(DataIssue::Malformed, "expected '<id>\\t<role>'");
    auto it = by_id.find(fields[0]);
    if (it == by_id.end()) sp.fail(DataIssue::Malformed, "unknown instance " + fields[0]);
    auto role = parse_role(fields[1]);
    if (!role) sp.fail(DataIssue::Malformed, "unknown role " + fields[1]);
    if (assigned[it->second]) sp.fail(DataIssue::DuplicateId, "instance " + fields[0] + " assigned twice");
    assigned[it->second] = true;
    instances[it->second].role = *role;
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!assigned[i]) throw DataError(DataIssue::MissingSplit, "instance " + instances[i].id);
  }

  Dataset dataset(attr.class_names(), attr.num_source(), dim, std::move(instances));
  return {std::move(dataset), std::move(attr)};
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataIssue::Malformed, "cannot open " + path);
  return in;
}

}  // namespace

ZslData load_dataset(const std::string& features_path, const std::string& attributes_path,
                     const std::string& split_path) {
  auto f = open_input(features_path);
  auto a = open_input(attributes_path);
  auto s = open_input(split_path);
  return read_dataset(f, a, s);
}

ZslData load_dataset_dir(const std::string& dir) {
  const std::filesystem::path root(dir);
  return load_dataset((root / kFeaturesFile).string(), (root / kAttributesFile).string(),
                      (root / kSplitFile).string());
}

void save_dataset_dir(const std::string& dir, const ZslData& data) {
  const std::filesystem::path root(dir);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  auto open = [&](const char* name) {
    std::ofstream out(root / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (root / name).string());
    return out;
  };
  auto a = open(kAttributesFile);
  write_attributes(a, data.attributes);
  auto f = open(kFeaturesFile);
  write_features(f, data.dataset);
  auto s = open(kSplitFile);
  write_split(s, data.dataset);
  if (!a || !f || !s) throw ConfigError("failed writing dataset to " + dir);
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

std::string class_label(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02zu", prefix, i);
  return buf;
}

}  // namespace

ZslData generate_synthetic(const SynthSpec& spec) {
  if (spec.num_source == 0 || spec.num_target == 0 || spec.attr_dim == 0 || spec.feature_dim == 0 ||
      spec.per_class == 0) {
    throw ConfigError("synthetic dataset counts must all be at least 1");
  }
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw ConfigError("noise sigma must be finite and non-negative");
  }
  const std::size_t classes = spec.num_source + spec.num_target;
  const std::size_t a = spec.attr_dim;
  const std::size_t d = spec.feature_dim;

  Rng mix(spec.mixing_seed);
  Matrix raw(classes, a);
  for (double& v : raw.values()) v = mix.uniform();
  Matrix mixing(d, a);
  const double scale = 1.0 / std::sqrt(static_cast<double>(a));
  for (double& v : mixing.values()) v = mix.gaussian() * scale;

  std::vector<std::string> names;
  for (std::size_t c = 0; c < spec.num_source; ++c) names.push_back(class_label("src", c));
  for (std::size_t c = 0; c < spec.num_target; ++c) names.push_back(class_label("tgt", c));
  AttributeTable attr(names, spec.num_source, std::move(raw));

  Rng noise(spec.data_seed);
  std::vector<Instance> instances;
  instances.reserve(classes * spec.per_class);
  const std::size_t source_test = spec.per_class / 5;
  const std::size_t target_pool = spec.per_class / 2;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::vector<double> prototype = matvec(mixing, attr.normalized().row(c));
    const bool source = c < spec.num_source;
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      Instance inst;
      char id[64];
      std::snprintf(id, sizeof id, "%s_i%03zu", names[c].c_str(), i);
      inst.id = id;
      inst.label = c;
      inst.features = prototype;
      for (double& x : inst.features) x += spec.noise_sigma * noise.gaussian();
      if (source) {
        inst.role = i < spec.per_class - source_test ? Role::SourceTrain : Role::SourceTest;
      } else {
        inst.role = i < target_pool ? Role::TargetPool : Role::TargetTest;
      }
      instances.push_back(std::move(inst));
    }
  }
  Dataset dataset(std::move(names), spec.num_source, d, std::move(instances));
  return {std::move(dataset), std::move(attr)};
}

// ---------------------------------------------------------------------------
// Split helpers

namespace {

// Builds a dataset over `order` (old class indices, new source classes first).
ZslData reindex(const ZslData& data, const std::vector<std::size_t>& order, std::size_t num_source,
                const std::function<std::optional<Role>(const Instance&, bool now_source)>& role_of) {
  const auto& attr = data.attributes;
  std::vector<std::size_t> new_index(attr.num_classes(), SIZE_MAX);
  std::vector<std::string> names;
  Matrix raw(order.size(), attr.attr_dim());
  for (std::size_t i = 0; i < order.size(); ++i) {
    new_index[order[i]] = i;
    names.push_back(attr.class_names()[order[i]]);
    auto src = attr.raw().row(order[i]);
    std::copy(src.begin(), src.end(), raw.row(i).begin());
  }
  std::vector<Instance> instances;
  for (const auto& inst : data.dataset.instances()) {
    const std::size_t idx = new_index[inst.label];
    if (idx == SIZE_MAX) continue;
    auto role = role_of(inst, idx < num_source);
    if (!role) continue;
    Instance copy = inst;
    copy.label = idx;
    copy.role = *role;
    instances.push_back(std::move(copy));
  }
  AttributeTable table(names, num_source, std::move(raw));
  Dataset dataset(std::move(names), num_source, data.dataset.feature_dim(), std::move(instances));
  return {std::move(dataset), std::move(table)};
}

}  // namespace

ZslData classwise_cv_split(const ZslData& data, double holdout_fraction, Rng& rng) {
  const std::size_t s = data.attributes.num_source();
  const double k_real = std::round(holdout_fraction * static_cast<double>(s));
  if (!(holdout_fraction > 0.0) || !(holdout_fraction < 1.0) || k_real < 1.0 || k_real >= static_cast<double>(s)) {
    throw ConfigError("holdout fraction " + format_double(holdout_fraction) + " leaves an empty side with " +
                      std::to_string(s) + " source classes");
  }
  const auto k = static_cast<std::size_t>(k_real);
  std::vector<std::size_t> perm(s);
  for (std::size_t i = 0; i < s; ++i) perm[i] = i;
  shuffle(perm, rng);
  std::vector<bool> held(s, false);
  for (std::size_t i = 0; i < k; ++i) held[perm[i]] = true;

  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < s; ++c)
    if (!held[c]) order.push_back(c);
  for (std::size_t c = 0; c < s; ++c)
    if (held[c]) order.push_back(c);

  return reindex(data, order, s - k, [](const Instance& inst, bool now_source) -> std::optional<Role> {
    if (now_source) return inst.role;
    return inst.role == Role::SourceTrain ? Role::TargetPool : Role::TargetTest;
  });
}

ZslData subset_source_classes(const ZslData& data, std::size_t keep, std::uint64_t seed) {
  const std::size_t s = data.attributes.num_source();
  if (keep == 0 || keep > s) {
    throw ConfigError("cannot keep " + std::to_string(keep) + " of " + std::to_string(s) + " source classes");
  }
  std::vector<std::size_t> perm(s);
  for (std::size_t i = 0; i < s; ++i) perm[i] = i;
  Rng rng(seed);
  shuffle(perm, rng);
  std::vector<bool> kept(s, false);
  for (std::size_t i = 0; i < keep; ++i) kept[perm[i]] = true;

  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < s; ++c)
    if (kept[c]) order.push_back(c);
  for (std::size_t c = s; c < data.attributes.num_classes(); ++c) order.push_back(c);
  return reindex(data, order, keep, [](const Instance& inst, bool) -> std::optional<Role> { return inst.role; });
}

}  // namespace qfsl
