#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qfsl/data.hpp"
#include "qfsl/text.hpp"
#include "qfsl/error.hpp"

using namespace qfsl;

namespace {

const std::string kMini = std::string(QFSL_FIXTURE_DIR) + "/mini";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Texts {
  std::string features, attributes, split;
};

Texts mini_texts() {
  return {read_file(kMini + "/features.tsv"), read_file(kMini + "/attributes.tsv"), read_file(kMini + "/split.tsv")};
}

DataError load_error(const Texts& t) {
  std::istringstream f(t.features), a(t.attributes), s(t.split);
  try {
    read_dataset(f, a, s);
  } catch (const DataError& e) {
    return e;
  }
  FAIL("expected a data error");
  return DataError(DataIssue::Malformed, "unreachable");
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::string serialize(const ZslData& d) {
  std::ostringstream out;
  write_attributes(out, d.attributes);
  write_features(out, d.dataset);
  write_split(out, d.dataset);
  return out.str();
}

SynthSpec small_spec() {
  SynthSpec spec;
  spec.num_source = 6;
  spec.num_target = 3;
  spec.per_class = 10;
  spec.feature_dim = 8;
  spec.attr_dim = 5;
  return spec;
}

}  // namespace

TEST_CASE("minimal fixture loads") {
  const ZslData d = load_dataset_dir(kMini);
  CHECK(d.attributes.class_names() == std::vector<std::string>{"horse", "zebra"});
  CHECK(d.attributes.num_source() == 1);
  CHECK(d.attributes.attr_dim() == 3);
  CHECK(d.dataset.feature_dim() == 2);
  CHECK(d.dataset.instances().size() == 5);
  CHECK(d.dataset.count(Role::SourceTrain) == 2);
  CHECK(d.dataset.count(Role::SourceTest) == 1);
  CHECK(d.dataset.count(Role::TargetPool) == 1);
  CHECK(d.dataset.count(Role::TargetTest) == 1);
  CHECK(d.dataset.instances()[1].features == std::vector<double>{-1.0, 2.25});
  CHECK(d.dataset.instances()[3].label == 1);

  const auto labeled = d.dataset.labeled_pool();
  REQUIRE(labeled.size() == 2);
  CHECK(labeled[0].label == 0);
  REQUIRE(d.dataset.unlabeled_pool().size() == 1);
  CHECK(d.dataset.unlabeled_pool()[0][0] == 3.0);
}

TEST_CASE("load diagnostics") {
  const Texts t = mini_texts();

  Texts zero = t;
  zero.attributes = replace(t.attributes, "zebra\t1\t0.5\t2", "zebra\t0\t0\t0");
  CHECK(load_error(zero).issue() == DataIssue::ZeroNormAttribute);

  Texts short_row = t;
  short_row.features = replace(t.features, "h2\thorse\t-1\t2.25", "h2\thorse\t-1");
  const DataError dim = load_error(short_row);
  CHECK(dim.issue() == DataIssue::DimensionMismatch);
  CHECK(std::string(dim.what()).find("line 4") != std::string::npos);

  Texts unknown = t;
  unknown.features = replace(t.features, "z1\tzebra", "z1\tokapi");
  CHECK(load_error(unknown).issue() == DataIssue::UnknownClass);

  Texts dup = t;
  dup.features = replace(replace(t.features, "h3\thorse", "h1\thorse"), "instances=5", "instances=5");
  CHECK(load_error(dup).issue() == DataIssue::DuplicateId);

  Texts missing = t;
  missing.split = replace(t.split, "z2\ttarget-test\n", "");
  CHECK(load_error(missing).issue() == DataIssue::MissingSplit);

  Texts version = t;
  version.features = replace(t.features, "QFSL-FEAT v1", "QFSL-FEAT v9");
  CHECK(load_error(version).issue() == DataIssue::VersionMismatch);

  Texts no_marker = t;
  no_marker.attributes = replace(t.attributes, "%TARGETS\n", "");
  CHECK(load_error(no_marker).issue() == DataIssue::Malformed);

  Texts wrong_role = t;
  wrong_role.split = replace(t.split, "z1\ttarget-pool", "z1\tsource-train");
  CHECK(load_error(wrong_role).issue() == DataIssue::ClassCoverage);

  Texts bad_role = t;
  bad_role.split = replace(t.split, "z1\ttarget-pool", "z1\tpool");
  CHECK(load_error(bad_role).issue() == DataIssue::Malformed);

  Texts truncated = t;
  truncated.features = replace(t.features, "instances=5", "instances=6");
  CHECK(load_error(truncated).issue() == DataIssue::Truncated);
}

TEST_CASE("noise-free synthetic instances sit on their prototypes") {
  SynthSpec spec = small_spec();
  spec.noise_sigma = 0.0;
  const ZslData d = generate_synthetic(spec);
  std::map<std::size_t, std::vector<double>> first;
  for (const auto& inst : d.dataset.instances()) {
    auto [it, inserted] = first.emplace(inst.label, inst.features);
    if (!inserted) CHECK(inst.features == it->second);
  }
  CHECK(first.size() == 9);
}

TEST_CASE("synthetic generation is deterministic and stratified") {
  const SynthSpec spec = small_spec();
  const ZslData a = generate_synthetic(spec);
  CHECK(serialize(a) == serialize(generate_synthetic(spec)));
  SynthSpec other = spec;
  other.data_seed = 12;
  CHECK(serialize(a) != serialize(generate_synthetic(other)));

  for (std::size_t c = 0; c < 9; ++c) {
    std::map<Role, int> roles;
    for (const auto& inst : a.dataset.instances())
      if (inst.label == c) ++roles[inst.role];
    if (c < 6) {
      CHECK(roles[Role::SourceTrain] == 8);
      CHECK(roles[Role::SourceTest] == 2);
    } else {
      CHECK(roles[Role::TargetPool] == 5);
      CHECK(roles[Role::TargetTest] == 5);
    }
  }
  for (std::size_t r = 0; r < a.attributes.num_classes(); ++r)
    for (double v : a.attributes.raw().row(r)) {
      CHECK(v >= 0.0);
      CHECK(v < 1.0);
    }
  CHECK_THROWS_AS(generate_synthetic(SynthSpec{0}), ConfigError);
}

constexpr double kNearestPrototypeAccuracy = 0.91320000000000001;

TEST_CASE("reference synthetic data is learnable by a nearest-prototype oracle") {
  const SynthSpec spec;  // reference defaults
  const ZslData data = generate_synthetic(spec);
  SynthSpec clean = spec;
  clean.noise_sigma = 0.0;
  const ZslData prototypes = generate_synthetic(clean);
  std::vector<std::vector<double>> mu(data.attributes.num_classes());
  for (const auto& inst : prototypes.dataset.instances()) mu[inst.label] = inst.features;

  std::size_t correct = 0;
  for (const auto& inst : data.dataset.instances()) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < mu.size(); ++c) {
      double dist = 0.0;
      for (std::size_t k = 0; k < mu[c].size(); ++k) dist += (inst.features[k] - mu[c][k]) * (inst.features[k] - mu[c][k]);
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    if (best == inst.label) ++correct;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(data.dataset.instances().size());
  MESSAGE("nearest-prototype accuracy " << format_double(acc));
  CHECK(acc >= 0.9);
  CHECK(acc == kNearestPrototypeAccuracy);
}

TEST_CASE("save then load reproduces the dataset bit-exactly") {
  const ZslData a = generate_synthetic(small_spec());
  const auto dir = std::filesystem::temp_directory_path() / "qfsl_test_data_roundtrip";
  std::filesystem::remove_all(dir);
  save_dataset_dir(dir.string(), a);
  const ZslData b = load_dataset_dir(dir.string());
  CHECK(b == a);
  std::filesystem::remove_all(dir);
}

TEST_CASE("property: roles partition the instances") {
  for (std::uint64_t seed = 1; seed < 6; ++seed) {
    SynthSpec spec = small_spec();
    spec.data_seed = seed;
    spec.per_class = 1 + seed * 3;
    const ZslData d = generate_synthetic(spec);
    std::size_t total = 0;
    for (Role r : {Role::SourceTrain, Role::SourceTest, Role::TargetPool, Role::TargetTest}) total += d.dataset.count(r);
    CHECK(total == d.dataset.instances().size());
    for (const auto& inst : d.dataset.instances()) {
      const bool source_role = inst.role == Role::SourceTrain || inst.role == Role::SourceTest;
      CHECK(source_role == (inst.label < d.dataset.num_source()));
    }
  }
}

TEST_CASE("class-wise cross-validation fold") {
  SynthSpec spec;
  spec.per_class = 10;
  const ZslData d = generate_synthetic(spec);
  Rng rng(3);
  const ZslData fold = classwise_cv_split(d, 0.25, rng);
  CHECK(fold.attributes.num_source() == 30);
  CHECK(fold.attributes.num_target() == 10);

  std::set<std::string> source, pseudo;
  for (std::size_t c = 0; c < fold.attributes.num_classes(); ++c)
    (c < 30 ? source : pseudo).insert(fold.attributes.class_names()[c]);
  for (const auto& name : pseudo) {
    CHECK_FALSE(source.contains(name));
    CHECK(name.rfind("src_", 0) == 0);
  }
  // Real target classes are gone; held-out train instances are unlabeled.
  for (const auto& inst : fold.dataset.instances()) {
    CHECK(fold.attributes.class_names()[inst.label].rfind("src_", 0) == 0);
  }
  CHECK(fold.dataset.count(Role::TargetPool) == 10 * 8);
  CHECK(fold.dataset.count(Role::TargetTest) == 10 * 2);

  Rng r2(3);
  CHECK_THROWS_AS(classwise_cv_split(d, 0.0, r2), ConfigError);
  CHECK_THROWS_AS(classwise_cv_split(d, 1.0, r2), ConfigError);
  CHECK_THROWS_AS(classwise_cv_split(d, 0.001, r2), ConfigError);
}

TEST_CASE("source-class subsets are nested and keep the targets") {
  SynthSpec spec;
  spec.per_class = 4;
  const ZslData d = generate_synthetic(spec);
  CHECK(subset_source_classes(d, 40, 5) == d);

  auto names = [](const ZslData& z) {
    std::set<std::string> s;
    for (std::size_t c = 0; c < z.attributes.num_source(); ++c) s.insert(z.attributes.class_names()[c]);
    return s;
  };
  const ZslData s10 = subset_source_classes(d, 10, 5);
  const ZslData s20 = subset_source_classes(d, 20, 5);
  CHECK(s10.attributes.num_source() == 10);
  const auto n10 = names(s10), n20 = names(s20);
  CHECK(std::includes(n20.begin(), n20.end(), n10.begin(), n10.end()));

  auto target_instances = [](const ZslData& z) {
    std::vector<std::pair<std::string, std::vector<double>>> out;
    for (const auto& inst : z.dataset.instances())
      if (inst.label >= z.dataset.num_source()) out.emplace_back(inst.id, inst.features);
    return out;
  };
  CHECK(target_instances(s10) == target_instances(d));
  for (std::size_t t = 0; t < 10; ++t) {
    CHECK(s10.attributes.class_names()[10 + t] == d.attributes.class_names()[40 + t]);
    const auto a = s10.attributes.raw().row(10 + t);
    const auto b = d.attributes.raw().row(40 + t);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
  CHECK_THROWS_AS(subset_source_classes(d, 41, 5), ConfigError);
  CHECK_THROWS_AS(subset_source_classes(d, 0, 5), ConfigError);
}
