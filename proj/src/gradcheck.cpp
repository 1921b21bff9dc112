#include "qfsl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "qfsl/loss.hpp"
#include "qfsl/model.hpp"

namespace qfsl {

namespace {

struct ToyCase {
  const char* name;
  std::size_t n_labeled;
  std::size_t n_unlabeled;
  double lambda;
  double gamma;
  bool visual;
  bool visual_trainable;
  std::vector<std::size_t> bridge_hidden;
  bool regularize_biases;
};

const std::vector<ToyCase>& toy_cases() {
  static const std::vector<ToyCase> cases = {
      {"lambda=0 labeled-only", 5, 0, 0.0, 0.01, true, true, {5}, false},
      {"lambda=1 mixed", 4, 3, 1.0, 0.01, true, true, {5}, false},
      {"lambda=1 mixed frozen-visual", 4, 3, 1.0, 0.01, true, false, {5}, false},
      {"lambda=1 unlabeled-only no-visual", 0, 5, 1.0, 0.0, false, true, {6}, false},
      {"lambda=2.5 mixed deep-bridge", 3, 4, 2.5, 0.02, true, true, {6, 5}, true},
      {"lambda=0 mixed", 3, 3, 0.0, 0.0005, true, true, {4}, false},
  };
  return cases;
}

void randomize_biases(Mlp& mlp, Rng& rng) {
  for (auto& layer : mlp.layers)
    for (double& b : layer.bias) b = 0.1 * rng.gaussian();
}

GradcheckCase check_case(const ToyCase& tc, std::uint64_t seed, const GradcheckOptions& opt) {
  constexpr std::size_t kSource = 3, kTarget = 2, kAttr = 4, kFeat = 6;
  Rng rng(seed);
  Matrix raw(kSource + kTarget, kAttr);
  for (double& v : raw.values()) v = 0.05 + rng.uniform();
  std::vector<std::string> names;
  for (std::size_t c = 0; c < kSource + kTarget; ++c) names.push_back("c" + std::to_string(c));
  AttributeTable attr(names, kSource, std::move(raw));

  std::optional<MlpSpec> visual;
  if (tc.visual) visual = MlpSpec{{kFeat, kFeat}, Activation::Relu};
  QfslModel model = init_model(attr, kFeat, tc.bridge_hidden, visual, rng.next_u64(), tc.visual_trainable);
  if (model.visual) randomize_biases(*model.visual, rng);
  randomize_biases(model.bridge, rng);

  std::vector<std::vector<double>> xs(tc.n_labeled + tc.n_unlabeled, std::vector<double>(kFeat));
  for (auto& x : xs)
    for (double& v : x) v = rng.gaussian();
  std::vector<LabeledSample> labeled;
  for (std::size_t i = 0; i < tc.n_labeled; ++i) labeled.push_back({xs[i], rng.index(kSource)});
  std::vector<std::span<const double>> unlabeled;
  for (std::size_t i = tc.n_labeled; i < xs.size(); ++i) unlabeled.emplace_back(xs[i]);

  const LossConfig cfg{tc.lambda, tc.gamma, tc.regularize_biases};
  std::vector<double> analytic = batch_loss_and_grads(model, labeled, unlabeled, cfg).grad;
  if (opt.inject_bug) {
    for (double& g : analytic) g *= 1.001;
  }
  QfslModel probe = model;
  const auto numeric = finite_diff_grad(
      [&](std::span<const double> params) {
        assign_parameters(probe, params);
        return batch_loss_value(probe, labeled, unlabeled, cfg);
      },
      flatten_parameters(model), opt.step);

  GradcheckCase result{tc.name, {}};
  for (const auto& group : parameter_groups(model)) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t k = group.offset; k < group.offset + group.size; ++k) {
      diff = std::max(diff, std::abs(analytic[k] - numeric[k]));
      scale = std::max({scale, std::abs(analytic[k]), std::abs(numeric[k])});
    }
    result.groups.push_back({group.name, group.size, scale > 0.0 ? diff / scale : diff});
  }
  return result;
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  GradcheckReport report;
  Rng seeds(options.seed);
  for (const auto& tc : toy_cases()) {
    report.cases.push_back(check_case(tc, seeds.next_u64(), options));
    for (const auto& g : report.cases.back().groups)
      report.max_relative_error = std::max(report.max_relative_error, g.max_relative_error);
  }
  report.passed = report.max_relative_error <= options.tolerance;
  return report;
}

void print_gradcheck(std::ostream& out, const GradcheckReport& report, double tolerance) {
  char buf[64];
  for (const auto& c : report.cases) {
    out << c.name << '\n';
    for (const auto& g : c.groups) {
      std::snprintf(buf, sizeof buf, "%.3e", g.max_relative_error);
      out << "  " << g.group << " (" << g.size << " params)  max rel err " << buf
          << (g.max_relative_error <= tolerance ? "  ok" : "  FAIL") << '\n';
    }
  }
  std::snprintf(buf, sizeof buf, "%.3e", report.max_relative_error);
  out << (report.passed ? "PASS" : "FAIL") << ": max relative error " << buf << " (tolerance " << tolerance << ")\n";
}

}  // namespace qfsl
