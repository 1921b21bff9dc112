#include "qfsl/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "qfsl/error.hpp"
#include "qfsl/text.hpp"

namespace qfsl {

AttributeTable::AttributeTable(std::vector<std::string> class_names, std::size_t num_source,
                               Matrix raw)
    : names_(std::move(class_names)), num_source_(num_source), raw_(std::move(raw)) {
  if (names_.size() != raw_.rows()) {
    throw DataError(DataIssue::DimensionMismatch,
                    std::to_string(names_.size()) + " class names but " +
                        std::to_string(raw_.rows()) + " attribute rows");
  }
  if (num_source_ == 0 || num_source_ >= names_.size()) {
    throw DataError(DataIssue::ClassCoverage, "need at least one source and one target class");
  }
  if (raw_.cols() == 0) throw DataError(DataIssue::DimensionMismatch, "attribute dimension is 0");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (!seen.insert(n).second) throw DataError(DataIssue::Malformed, "duplicate class " + n);
  }
  normalized_ = Matrix(raw_.rows(), raw_.cols());
  for (std::size_t r = 0; r < raw_.rows(); ++r) {
    if (!all_finite(raw_.row(r))) {
      throw DataError(DataIssue::Malformed, "non-finite attribute for class " + names_[r]);
    }
    std::vector<double> unit;
    try {
      unit = l2_normalize(raw_.row(r));
    } catch (const DataError&) {
      throw DataError(DataIssue::ZeroNormAttribute, "zero-norm attribute vector for class " + names_[r]);
    }
    std::copy(unit.begin(), unit.end(), normalized_.row(r).begin());
  }
}

std::optional<std::size_t> AttributeTable::find(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

Mlp init_mlp(const MlpSpec& spec, Rng& rng) {
  if (spec.widths.size() < 2) throw ConfigError("an MLP needs an input and an output width");
  Mlp mlp;
  mlp.output_activation = spec.output_activation;
  for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
    const std::size_t fan_in = spec.widths[i];
    const std::size_t fan_out = spec.widths[i + 1];
    if (fan_in == 0 || fan_out == 0) throw ConfigError("layer widths must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)};
    for (double& w : layer.weights.values()) w = (2.0 * rng.uniform() - 1.0) * bound;
    mlp.layers.push_back(std::move(layer));
  }
  return mlp;
}

std::vector<std::size_t> default_bridge_hidden(std::size_t visual_dim, std::size_t attr_dim) {
  return {std::max(attr_dim, visual_dim / 2)};
}

QfslModel init_model(const AttributeTable& attr, std::size_t visual_dim,
                     const std::vector<std::size_t>& bridge_hidden,
                     const std::optional<MlpSpec>& visual_spec, std::uint64_t seed,
                     bool visual_trainable) {
  if (visual_dim == 0) throw ConfigError("visual dimension must be positive");
  Rng rng(seed);
  QfslModel model;
  model.attributes = attr;
  model.seed = seed;
  model.visual_trainable = visual_trainable;

  std::size_t bridge_in = visual_dim;
  if (visual_spec) {
    if (visual_spec->widths.empty() || visual_spec->widths.front() != visual_dim) {
      throw ConfigError("visual subnet input width does not match feature dimension");
    }
    model.visual = init_mlp(*visual_spec, rng);
    bridge_in = visual_spec->widths.back();
  }
  MlpSpec bridge_spec;
  bridge_spec.widths.push_back(bridge_in);
  bridge_spec.widths.insert(bridge_spec.widths.end(), bridge_hidden.begin(), bridge_hidden.end());
  bridge_spec.widths.push_back(attr.attr_dim());
  model.bridge = init_mlp(bridge_spec, rng);
  model.scoring = attr.normalized();
  return model;
}

namespace {

std::vector<double> run_mlp(const Mlp& mlp, std::vector<double> x, std::vector<LayerCache>& caches) {
  caches.clear();
  caches.reserve(mlp.layers.size());
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    const auto& layer = mlp.layers[i];
    std::vector<double> pre = matvec(layer.weights, x);
    for (std::size_t j = 0; j < pre.size(); ++j) pre[j] += layer.bias[j];
    const bool last = i + 1 == mlp.layers.size();
    std::vector<double> out = pre;
    if (!last || mlp.output_activation == Activation::Relu) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
    caches.push_back({std::move(x), std::move(pre)});
    x = std::move(out);
  }
  return x;
}

}  // namespace

ForwardPass forward_scores(const QfslModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw ConfigError("feature dimension " + std::to_string(x.size()) + " does not match model input " +
                      std::to_string(model.input_dim()));
  }
  if (!all_finite(x)) throw DataError(DataIssue::Malformed, "non-finite feature vector");
  ForwardPass pass;
  std::vector<double> h(x.begin(), x.end());
  if (model.visual) h = run_mlp(*model.visual, std::move(h), pass.visual);
  pass.embedding = run_mlp(model.bridge, std::move(h), pass.bridge);
  pass.scores = matvec(model.scoring, pass.embedding);
  return pass;
}

std::size_t argmax_range(std::span<const double> scores, std::size_t begin, std::size_t end) {
  std::size_t best = begin;
  for (std::size_t i = begin + 1; i < end; ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

std::size_t predict_from_scores(std::span<const double> scores, std::size_t num_source,
                                SearchSpace space) {
  const std::size_t begin = space == SearchSpace::TargetOnly ? num_source : 0;
  return argmax_range(scores, begin, scores.size());
}

std::size_t predict(const QfslModel& model, std::span<const double> x, SearchSpace space) {
  return predict_from_scores(forward_scores(model, x).scores, model.num_source(), space);
}

namespace {

// Visits trainable storage in flattening order: all weights of a subnet, then
// all its biases, visual subnet before bridge.
template <typename ModelT, typename Fn>
void visit_parameters(ModelT& model, Fn&& fn) {
  auto visit_mlp = [&](auto& mlp, const char* w_name, const char* b_name) {
    for (auto& layer : mlp.layers) fn(w_name, layer.weights.values());
    for (auto& layer : mlp.layers) fn(b_name, std::span(layer.bias));
  };
  if (model.visual && model.visual_trainable) visit_mlp(*model.visual, "W_theta", "b_theta");
  visit_mlp(model.bridge, "W_phi", "b_phi");
}

}  // namespace

std::vector<ParameterGroup> parameter_groups(const QfslModel& model) {
  std::vector<ParameterGroup> groups;
  std::size_t offset = 0;
  visit_parameters(model, [&](const char* name, auto values) {
    if (groups.empty() || groups.back().name != name) groups.push_back({name, offset, 0});
    groups.back().size += values.size();
    offset += values.size();
  });
  return groups;
}

std::size_t parameter_count(const QfslModel& model) {
  std::size_t n = 0;
  visit_parameters(model, [&](const char*, auto values) { n += values.size(); });
  return n;
}

std::vector<double> flatten_parameters(const QfslModel& model) {
  std::vector<double> flat;
  visit_parameters(model, [&](const char*, auto values) { flat.insert(flat.end(), values.begin(), values.end()); });
  return flat;
}

void assign_parameters(QfslModel& model, std::span<const double> flat) {
  if (flat.size() != parameter_count(model)) {
    throw ConfigError("parameter vector has " + std::to_string(flat.size()) + " entries, model has " +
                      std::to_string(parameter_count(model)));
  }
  std::size_t offset = 0;
  visit_parameters(model, [&](const char*, auto values) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), values.size(), values.begin());
    offset += values.size();
  });
}

// ---------------------------------------------------------------------------
// Model file

namespace {

constexpr const char* kModelMagic = "QFSL-MODEL v1";

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ' ';
      out << format_double(row[c]);
    }
    out << '\n';
  }
}

void write_mlp(std::ostream& out, const Mlp* mlp) {
  if (!mlp) {
    out << "layers 0\n";
    return;
  }
  out << "layers " << mlp->layers.size() << '\n';
  out << "output " << (mlp->output_activation == Activation::Relu ? "relu" : "identity") << '\n';
  for (const auto& layer : mlp->layers) {
    write_matrix(out, layer.weights);
    write_matrix(out, Matrix(1, layer.bias.size(), layer.bias));
  }
}

Matrix read_matrix(LineReader& in) {
  auto header = split_ws(in.next());
  if (header.size() != 2) in.fail(DataIssue::Malformed, "expected '<rows> <cols>'");
  const auto rows = parse_count(header[0], in);
  const auto cols = parse_count(header[1], in);
  std::vector<double> data;
  data.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto fields = split_ws(in.next());
    if (fields.size() < cols && !in.has_next()) in.fail(DataIssue::Truncated, "matrix row cut short at end of input");
    if (fields.size() != cols) {
      in.fail(DataIssue::DimensionMismatch,
              "expected " + std::to_string(cols) + " values, found " + std::to_string(fields.size()));
    }
    for (const auto& f : fields) data.push_back(parse_double(f, in));
  }
  return Matrix(rows, cols, std::move(data));
}

std::string expect_key(LineReader& in, const std::string& key) {
  const std::string line = in.next();
  auto fields = split_ws(line);
  if (fields.size() != 2 || fields[0] != key) in.fail(DataIssue::Malformed, "expected '" + key + " <value>'");
  return fields[1];
}

void expect_section(LineReader& in, const std::string& name) {
  if (in.next() != "[" + name + "]") in.fail(DataIssue::Malformed, "expected section [" + name + "]");
}

std::optional<Mlp> read_mlp(LineReader& in) {
  const auto n_layers = parse_count(expect_key(in, "layers"), in);
  if (n_layers == 0) return std::nullopt;
  Mlp mlp;
  const std::string act = expect_key(in, "output");
  if (act == "relu") {
    mlp.output_activation = Activation::Relu;
  } else if (act != "identity") {
    in.fail(DataIssue::Malformed, "unknown activation " + act);
  }
  for (std::size_t i = 0; i < n_layers; ++i) {
    Matrix w = read_matrix(in);
    Matrix b = read_matrix(in);
    if (b.rows() != 1 || b.cols() != w.rows()) {
      in.fail(DataIssue::DimensionMismatch, "bias length does not match layer output width");
    }
    if (!mlp.layers.empty() && mlp.layers.back().weights.rows() != w.cols()) {
      in.fail(DataIssue::DimensionMismatch, "layer input width does not match previous layer output");
    }
    mlp.layers.push_back({std::move(w), std::vector<double>(b.values().begin(), b.values().end())});
  }
  return mlp;
}

}  // namespace

void write_model(std::ostream& out, const QfslModel& model) {
  const auto& attr = model.attributes;
  out << kModelMagic << '\n';
  out << "[attr]\n";
  out << "source " << attr.num_source() << '\n';
  out << "names";
  for (const auto& n : attr.class_names()) out << '\t' << n;
  out << '\n';
  write_matrix(out, attr.raw());
  out << "[visual]\n";
  write_mlp(out, model.visual ? &*model.visual : nullptr);
  out << "[bridge]\n";
  write_mlp(out, &model.bridge);
  out << "[scoring]\n";
  write_matrix(out, model.scoring);
  out << "[meta]\n";
  out << "S " << attr.num_source() << '\n';
  out << "T " << attr.num_target() << '\n';
  out << "visual_trainable " << (model.visual_trainable ? 1 : 0) << '\n';
  out << "seed " << model.seed << '\n';
}

QfslModel read_model(std::istream& stream) {
  LineReader in(stream, "model file");
  if (!in.has_next()) in.fail(DataIssue::Truncated, "empty model file");
  const std::string magic = in.next();
  if (magic != kModelMagic) {
    in.fail(DataIssue::VersionMismatch, "expected header '" + std::string(kModelMagic) + "', found '" + magic + "'");
  }

  expect_section(in, "attr");
  const auto num_source = parse_count(expect_key(in, "source"), in);
  auto names = split_tabs(in.next());
  if (names.empty() || names.front() != "names") in.fail(DataIssue::Malformed, "expected class names line");
  names.erase(names.begin());
  Matrix raw = read_matrix(in);
  AttributeTable attr(std::move(names), num_source, std::move(raw));

  QfslModel model;
  expect_section(in, "visual");
  model.visual = read_mlp(in);
  expect_section(in, "bridge");
  auto bridge = read_mlp(in);
  if (!bridge) in.fail(DataIssue::Malformed, "bridge subnet has no layers");
  model.bridge = std::move(*bridge);
  expect_section(in, "scoring");
  model.scoring = read_matrix(in);

  expect_section(in, "meta");
  const auto s = parse_count(expect_key(in, "S"), in);
  const auto t = parse_count(expect_key(in, "T"), in);
  const auto trainable = expect_key(in, "visual_trainable");
  if (trainable != "0" && trainable != "1") in.fail(DataIssue::Malformed, "visual_trainable must be 0 or 1");
  model.visual_trainable = trainable == "1";
  model.seed = parse_u64(expect_key(in, "seed"), in);

  if (s != attr.num_source() || t != attr.num_target()) {
    in.fail(DataIssue::DimensionMismatch, "[meta] class counts disagree with [attr]");
  }
  if (model.visual && model.visual->output_dim() != model.bridge.input_dim()) {
    in.fail(DataIssue::DimensionMismatch, "visual output width does not match bridge input width");
  }
  if (model.bridge.output_dim() != attr.attr_dim()) {
    in.fail(DataIssue::DimensionMismatch, "bridge output width does not match attribute dimension");
  }
  if (model.scoring.rows() != attr.num_classes() || model.scoring.cols() != attr.attr_dim()) {
    in.fail(DataIssue::DimensionMismatch, "scoring matrix shape does not match attribute table");
  }
  if (!(model.scoring == attr.normalized())) {
    in.fail(DataIssue::Malformed, "scoring matrix differs from the normalized attributes");
  }
  model.attributes = std::move(attr);
  return model;
}

void save_model(const std::string& path, const QfslModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model file " + path);
  write_model(out, model);
  if (!out) throw ConfigError("failed writing model file " + path);
}

QfslModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataIssue::Malformed, "cannot open model file " + path);
  return read_model(in);
}

std::uint64_t model_checksum(const QfslModel& model) {
  std::ostringstream out;
  write_model(out, model);
  return fnv1a(out.str());
}

}  // namespace qfsl
