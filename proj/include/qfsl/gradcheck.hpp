#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qfsl {

struct GradcheckOptions {
  std::uint64_t seed = 1;
  double tolerance = 1e-5;
  double step = 1e-6;
  /// Test hook: perturbs the analytic gradient so the check must fail.
  bool inject_bug = false;
};

struct GroupError {
  std::string group;  // W_theta, b_theta, W_phi, b_phi
  std::size_t size = 0;
  double max_relative_error = 0.0;
};

struct GradcheckCase {
  std::string name;
  std::vector<GroupError> groups;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double max_relative_error = 0.0;
  bool passed = false;
};

/// Compares analytic batch gradients against central differences on seeded
/// toy models: lambda = 0, mixed batches, unlabeled-only batches, frozen and
/// trainable visual subnets. Per group the error is
/// max|analytic - numeric| / max(max|analytic|, max|numeric|).
GradcheckReport run_gradcheck(const GradcheckOptions& options);

void print_gradcheck(std::ostream& out, const GradcheckReport& report, double tolerance);

}  // namespace qfsl
