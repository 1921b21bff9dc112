#pragma once

// Fixtures shared by the test binaries.

#include <string>
#include <vector>

#include "qfsl/core.hpp"
#include "qfsl/model.hpp"

namespace qfsl::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.gaussian();
  return m;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

/// S source and T target classes with positive random attributes.
inline AttributeTable random_attributes(std::size_t s, std::size_t t, std::size_t dim, Rng& rng) {
  Matrix raw(s + t, dim);
  for (double& v : raw.values()) v = 0.05 + rng.uniform();
  std::vector<std::string> names;
  for (std::size_t c = 0; c < s + t; ++c) names.push_back((c < s ? "s" : "t") + std::to_string(c));
  return AttributeTable(names, s, std::move(raw));
}

}  // namespace qfsl::testing
