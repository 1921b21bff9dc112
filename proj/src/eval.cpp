#include "qfsl/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "qfsl/error.hpp"
#include "qfsl/text.hpp"

namespace qfsl {

const char* to_string(Setting setting) {
  return setting == Setting::Conventional ? "conventional" : "generalized";
}

double mca(std::span<const double> per_class_acc) {
  if (per_class_acc.empty()) throw DataError(DataIssue::Empty, "MCA over an empty class set");
  double sum = 0.0;
  for (double a : per_class_acc) sum += a;
  return sum / static_cast<double>(per_class_acc.size());
}

double mca(const std::map<std::size_t, ClassTally>& tallies) {
  std::vector<double> accs;
  accs.reserve(tallies.size());
  for (const auto& [cls, t] : tallies) {
    if (t.total == 0) throw DataError(DataIssue::ClassCoverage, "class " + std::to_string(cls) + " has no test instances");
    accs.push_back(static_cast<double>(t.correct) / static_cast<double>(t.total));
  }
  return mca(accs);
}

double harmonic(double mca_s, double mca_t) {
  const double sum = mca_s + mca_t;
  return sum == 0.0 ? 0.0 : 2.0 * mca_s * mca_t / sum;
}

EvalReport evaluate_scores(const Matrix& scores, std::span<const std::size_t> labels, std::size_t num_source,
                           Setting setting) {
  if (labels.empty()) throw DataError(DataIssue::Empty, "empty test set");
  if (scores.rows() != labels.size()) throw ConfigError("one score row per test label required");
  const std::size_t classes = scores.cols();
  if (num_source == 0 || num_source >= classes) throw ConfigError("need source and target classes");

  const bool conventional = setting == Setting::Conventional;
  std::map<std::size_t, ClassTally> source, target;
  for (std::size_t c = conventional ? num_source : 0; c < classes; ++c) (c < num_source ? source : target)[c];

  std::size_t target_instances = 0, target_as_source = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t y = labels[i];
    if (y >= classes) throw ConfigError("test label " + std::to_string(y) + " out of range");
    if (conventional && y < num_source) {
      throw DataError(DataIssue::ClassCoverage, "conventional test set contains source class " + std::to_string(y));
    }
    const std::size_t pred =
        predict_from_scores(scores.row(i), num_source, conventional ? SearchSpace::TargetOnly : SearchSpace::All);
    ClassTally& t = y < num_source ? source[y] : target[y];
    ++t.total;
    if (pred == y) ++t.correct;
    if (y >= num_source) {
      ++target_instances;
      if (pred < num_source) ++target_as_source;
    }
  }

  EvalReport report;
  report.setting = setting;
  report.n_test = labels.size();
  report.mca_t = mca(target);
  if (!conventional) {
    report.mca_s = mca(source);
    report.h = harmonic(*report.mca_s, report.mca_t);
  }
  std::map<std::size_t, ClassTally> all = source;
  all.insert(target.begin(), target.end());
  report.mca_overall = mca(all);
  for (const auto& [cls, t] : all) {
    report.per_class_acc[cls] = static_cast<double>(t.correct) / static_cast<double>(t.total);
  }
  report.bias_rate = target_instances == 0 ? 0.0
                                           : static_cast<double>(target_as_source) / static_cast<double>(target_instances);
  return report;
}

EvalReport evaluate(const QfslModel& model, std::span<const TestSample> test, Setting setting) {
  if (test.empty()) throw DataError(DataIssue::Empty, "empty test set");
  Matrix scores(test.size(), model.num_classes());
  std::vector<std::size_t> labels;
  labels.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto s = forward_scores(model, test[i].features).scores;
    std::copy(s.begin(), s.end(), scores.row(i).begin());
    labels.push_back(test[i].label);
  }
  return evaluate_scores(scores, labels, model.num_source(), setting);
}

std::vector<TestSample> standard_test_set(const Dataset& dataset, Setting setting) {
  std::vector<TestSample> out;
  for (const auto& inst : dataset.instances()) {
    if (inst.role == Role::TargetTest || (setting == Setting::Generalized && inst.role == Role::SourceTest)) {
      out.push_back({inst.features, inst.label});
    }
  }
  return out;
}

EvalReport average_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ConfigError("no reports to average");
  const double n = static_cast<double>(reports.size());
  EvalReport avg;
  avg.setting = reports.front().setting;
  double mca_s = 0.0, h = 0.0;
  for (const auto& r : reports) {
    if (r.setting != avg.setting || r.per_class_acc.size() != reports.front().per_class_acc.size()) {
      throw ConfigError("cannot average reports over different settings or class sets");
    }
    avg.mca_t += r.mca_t;
    avg.mca_overall += r.mca_overall;
    avg.bias_rate += r.bias_rate;
    avg.n_test += r.n_test;
    mca_s += r.mca_s.value_or(0.0);
    h += r.h.value_or(0.0);
    for (const auto& [cls, acc] : r.per_class_acc) avg.per_class_acc[cls] += acc;
  }
  avg.mca_t /= n;
  avg.mca_overall /= n;
  avg.bias_rate /= n;
  for (auto& [cls, acc] : avg.per_class_acc) acc /= n;
  if (avg.setting == Setting::Generalized) {
    avg.mca_s = mca_s / n;
    avg.h = h / n;
  }
  return avg;
}

TwoFoldHalves split_target_halves(const Dataset& dataset, std::uint64_t seed) {
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t c = dataset.num_source(); c < dataset.num_classes(); ++c) by_class[c];
  const auto& instances = dataset.instances();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Role r = instances[i].role;
    if (r == Role::TargetPool || r == Role::TargetTest) by_class[instances[i].label].push_back(i);
  }
  Rng rng(seed);
  TwoFoldHalves halves;
  for (auto& [cls, members] : by_class) {
    if (members.size() < 2) {
      throw DataError(DataIssue::ClassCoverage, "target class " + dataset.class_names()[cls] + " has " +
                                                    std::to_string(members.size()) + " instances; need 2");
    }
    shuffle(members, rng);
    const std::size_t half = members.size() / 2;
    halves.a.insert(halves.a.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(half));
    halves.b.insert(halves.b.end(), members.begin() + static_cast<std::ptrdiff_t>(half), members.end());
  }
  std::sort(halves.a.begin(), halves.a.end());
  std::sort(halves.b.begin(), halves.b.end());
  return halves;
}

namespace {

FoldReports run_fold(const Dataset& dataset, const AttributeTable& attr, const TrainConfig& cfg,
                     const std::vector<std::size_t>& train_half, const std::vector<std::size_t>& test_half,
                     const BatchObserver& observer) {
  const auto& instances = dataset.instances();
  TrainingPool pool{dataset.labeled_pool(), {}};
  for (auto i : train_half) pool.unlabeled.emplace_back(instances[i].features);
  const QfslModel model = train_on_pool(attr, dataset.feature_dim(), pool, cfg, observer).model;

  std::vector<TestSample> conventional;
  for (auto i : test_half) conventional.push_back({instances[i].features, instances[i].label});
  std::vector<TestSample> generalized;
  for (const auto* inst : dataset.with_role(Role::SourceTest)) generalized.push_back({inst->features, inst->label});
  generalized.insert(generalized.end(), conventional.begin(), conventional.end());
  return {evaluate(model, conventional, Setting::Conventional), evaluate(model, generalized, Setting::Generalized)};
}

}  // namespace

TwoFoldResult two_fold_from_halves(const Dataset& dataset, const AttributeTable& attr, const TrainConfig& cfg,
                                   const TwoFoldHalves& halves, const BatchObserver& observer) {
  TwoFoldResult result;
  result.halves = halves;
  result.folds[0] = run_fold(dataset, attr, cfg, halves.a, halves.b, observer);
  result.folds[1] = run_fold(dataset, attr, cfg, halves.b, halves.a, observer);
  const EvalReport conv[] = {result.folds[0].conventional, result.folds[1].conventional};
  const EvalReport gen[] = {result.folds[0].generalized, result.folds[1].generalized};
  result.average = {average_reports(conv), average_reports(gen)};
  return result;
}

TwoFoldResult two_fold_transductive(const Dataset& dataset, const AttributeTable& attr, const TrainConfig& cfg,
                                    const BatchObserver& observer) {
  return two_fold_from_halves(dataset, attr, cfg, split_target_halves(dataset, cfg.seed), observer);
}

namespace {

SweepRow run_averaged(const Dataset& dataset, const AttributeTable& attr, TrainConfig cfg,
                      std::span<const std::uint64_t> seeds, std::string method, double parameter) {
  const std::vector<std::uint64_t> fallback{cfg.seed};
  if (seeds.empty()) seeds = fallback;
  SweepRow row{std::move(method), parameter};
  const auto gen_test = standard_test_set(dataset, Setting::Generalized);
  const auto conv_test = standard_test_set(dataset, Setting::Conventional);
  for (auto seed : seeds) {
    cfg.seed = seed;
    const QfslModel model = train(dataset, attr, cfg).model;
    const EvalReport gen = evaluate(model, gen_test, Setting::Generalized);
    const EvalReport conv = evaluate(model, conv_test, Setting::Conventional);
    row.mca_s += *gen.mca_s;
    row.mca_t += gen.mca_t;
    row.h += *gen.h;
    row.mca_t_conventional += conv.mca_t;
    row.bias_rate += gen.bias_rate;
  }
  const double n = static_cast<double>(seeds.size());
  row.mca_s /= n;
  row.mca_t /= n;
  row.h /= n;
  row.mca_t_conventional /= n;
  row.bias_rate /= n;
  return row;
}

}  // namespace

std::vector<SweepRow> lambda_sweep(const Dataset& dataset, const AttributeTable& attr, const TrainConfig& cfg,
                                   std::span<const double> lambdas, std::span<const std::uint64_t> seeds) {
  std::vector<SweepRow> rows;
  for (double lambda : lambdas) {
    TrainConfig c = cfg;
    c.lambda = lambda;
    c.mode = TrainMode::Qfsl;
    rows.push_back(run_averaged(dataset, attr, c, seeds, "QFSL", lambda));
  }
  return rows;
}

std::vector<SweepRow> imbalance_sweep(const ZslData& data, std::span<const std::size_t> source_counts,
                                      const TrainConfig& cfg, std::span<const std::uint64_t> seeds) {
  std::vector<SweepRow> rows;
  for (auto count : source_counts) {
    const ZslData subset = subset_source_classes(data, count, cfg.seed);
    for (TrainMode mode : {TrainMode::Qfsl, TrainMode::Inductive}) {
      TrainConfig c = cfg;
      c.mode = mode;
      rows.push_back(run_averaged(subset.dataset, subset.attributes, c, seeds,
                                  mode == TrainMode::Qfsl ? "QFSL" : "QFSL-", static_cast<double>(count)));
    }
  }
  return rows;
}

namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

}  // namespace

void print_report(std::ostream& out, const std::string& title, const EvalReport& report) {
  out << title << " (" << to_string(report.setting) << ", " << report.n_test << " test instances)\n";
  if (report.setting == Setting::Generalized) {
    out << "  MCA_s\tMCA_t\tH\n";
    out << "  " << percent(*report.mca_s) << '\t' << percent(report.mca_t) << '\t' << percent(*report.h) << '\n';
  } else {
    out << "  MCA_t\n";
    out << "  " << percent(report.mca_t) << '\n';
  }
  out << "  bias rate " << percent(report.bias_rate) << "%\n";
}

void write_report_tsv(std::ostream& out, const std::string& name, const EvalReport& report, bool header) {
  const bool gen = report.setting == Setting::Generalized;
  if (header) {
    out << "name\tsetting" << (gen ? "\tMCA_s\tMCA_t\tH" : "\tMCA_t") << "\tMCA_overall\tbias_rate\tn_test\n";
  }
  out << name << '\t' << to_string(report.setting);
  if (gen) out << '\t' << format_double(*report.mca_s);
  out << '\t' << format_double(report.mca_t);
  if (gen) out << '\t' << format_double(*report.h);
  out << '\t' << format_double(report.mca_overall) << '\t' << format_double(report.bias_rate) << '\t'
      << report.n_test << '\n';
}

void write_sweep_tsv(std::ostream& out, const std::string& parameter_name, std::span<const SweepRow> rows) {
  out << "method\t" << parameter_name << "\tMCA_s\tMCA_t\tH\tMCA_t_conventional\tbias_rate\n";
  for (const auto& r : rows) {
    out << r.method << '\t' << format_double(r.parameter) << '\t' << format_double(r.mca_s) << '\t'
        << format_double(r.mca_t) << '\t' << format_double(r.h) << '\t' << format_double(r.mca_t_conventional)
        << '\t' << format_double(r.bias_rate) << '\n';
  }
}

}  // namespace qfsl
