#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qfsl/data.hpp"
#include "qfsl/model.hpp"
#include "qfsl/trainer.hpp"

namespace qfsl {

enum class Setting { Conventional, Generalized };

const char* to_string(Setting setting);

struct ClassTally {
  std::size_t correct = 0;
  std::size_t total = 0;
};

/// Unweighted mean of per-class accuracies.
double mca(std::span<const double> per_class_acc);
/// Throws DataError(ClassCoverage) naming any class without test instances.
double mca(const std::map<std::size_t, ClassTally>& tallies);

/// 2ab / (a + b), and 0 when both are 0.
double harmonic(double mca_s, double mca_t);

struct EvalReport {
  std::map<std::size_t, double> per_class_acc;
  std::optional<double> mca_s;  // generalized only
  double mca_t = 0.0;
  double mca_overall = 0.0;
  std::optional<double> h;  // generalized only
  /// Fraction of target-class test instances predicted as a source class.
  double bias_rate = 0.0;
  Setting setting = Setting::Generalized;
  std::size_t n_test = 0;
  bool operator==(const EvalReport&) const = default;
};

struct TestSample {
  std::span<const double> features;
  std::size_t label;
};

/// Aggregates a report from one score row per test sample. Conventional:
/// target-only samples, search over targets. Generalized: every class must
/// appear, search over all classes.
EvalReport evaluate_scores(const Matrix& scores, std::span<const std::size_t> labels, std::size_t num_source,
                           Setting setting);

EvalReport evaluate(const QfslModel& model, std::span<const TestSample> test, Setting setting);

/// Source-test (generalized only) plus target-test samples.
std::vector<TestSample> standard_test_set(const Dataset& dataset, Setting setting);

/// Metric-level mean of several reports (per-class accuracies included).
EvalReport average_reports(std::span<const EvalReport> reports);

struct TwoFoldHalves {
  /// Instance indices into dataset.instances().
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;
};

/// Target instances are every target-pool and target-test instance. Each
/// target class is shuffled and split floor(n/2) into `a`, the rest into `b`.
/// Throws DataError(ClassCoverage) for a target class with fewer than 2 instances.
TwoFoldHalves split_target_halves(const Dataset& dataset, std::uint64_t seed);

struct FoldReports {
  EvalReport conventional;
  EvalReport generalized;
};

struct TwoFoldResult {
  TwoFoldHalves halves;
  FoldReports folds[2];
  FoldReports average;
};

/// Fold 1 trains with `a` unlabeled and tests on `b`; fold 2 the reverse. Both
/// folds use cfg.seed and evaluate the full source-test set under the
/// generalized setting.
TwoFoldResult two_fold_from_halves(const Dataset& dataset, const AttributeTable& attr, const TrainConfig& cfg,
                                   const TwoFoldHalves& halves, const BatchObserver& observer = {});
TwoFoldResult two_fold_transductive(const Dataset& dataset, const AttributeTable& attr, const TrainConfig& cfg,
                                    const BatchObserver& observer = {});

struct SweepRow {
  std::string method;  // "QFSL" or "QFSL-"
  double parameter = 0.0;  // lambda or source-class count
  double mca_s = 0.0;
  double mca_t = 0.0;
  double h = 0.0;
  double mca_t_conventional = 0.0;
  double bias_rate = 0.0;
};

inline const std::vector<double> kDefaultLambdas = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};

/// One qfsl model per (lambda, seed); metrics averaged over seeds.
std::vector<SweepRow> lambda_sweep(const Dataset& dataset, const AttributeTable& attr, const TrainConfig& cfg,
                                   std::span<const double> lambdas, std::span<const std::uint64_t> seeds);

/// Trains QFSL and QFSL- on nested source subsets (subset seed cfg.seed) with
/// fixed targets; metrics averaged over training seeds.
std::vector<SweepRow> imbalance_sweep(const ZslData& data, std::span<const std::size_t> source_counts,
                                      const TrainConfig& cfg, std::span<const std::uint64_t> seeds);

/// Percentages with one decimal; columns MCA_s MCA_t H.
void print_report(std::ostream& out, const std::string& title, const EvalReport& report);
/// Full-precision tab-separated export.
void write_report_tsv(std::ostream& out, const std::string& name, const EvalReport& report, bool header = true);
void write_sweep_tsv(std::ostream& out, const std::string& parameter_name, std::span<const SweepRow> rows);

}  // namespace qfsl
