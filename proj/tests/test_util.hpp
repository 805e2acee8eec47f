// Copyright 2026 The revsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef REVSUM_TESTS_TEST_UTIL_HPP_
#define REVSUM_TESTS_TEST_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "revsum/tensor.hpp"

namespace revsum::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

struct GradCheck {
  size_t checked = 0;
  size_t failures = 0;
  double worst_rel = 0.0;  // over entries whose difference exceeds atol
  std::string worst;
  double max_abs_diff = 0.0;
  double worst_rel_significant = 0.0;  // over entries with max(|a|, |n|) >= 1e-6
};

// Central differences against reverse mode. An entry passes when
// |analytic - numeric| <= rtol * max(|analytic|, |numeric|) + atol.
inline GradCheck check_gradients(const std::vector<std::pair<std::string, ad::Var>>& params,
                                 const std::function<ad::Var()>& loss, double rtol = 1e-4,
                                 double atol = 1e-8, double h = 1e-6) {
  for (const auto& [name, p] : params) ad::Var(p).zero_grad();
  ad::backward(loss());
  GradCheck out;
  for (const auto& [name, p0] : params) {
    ad::Var p = p0;
    const Matrix analytic = p.has_grad() ? p.grad() : Matrix::Zero(p.rows(), p.cols());
    for (Index i = 0; i < p.value().size(); ++i) {
      double numeric = 0.0;
      {
        ad::NoGradGuard no_grad;
        const double orig = p.value().data()[i];
        p.mutable_value().data()[i] = orig + h;
        const double up = loss().scalar();
        p.mutable_value().data()[i] = orig - h;
        const double down = loss().scalar();
        p.mutable_value().data()[i] = orig;
        numeric = (up - down) / (2.0 * h);
      }
      const double a = analytic.data()[i];
      const double diff = std::abs(a - numeric);
      const double scale = std::max(std::abs(a), std::abs(numeric));
      ++out.checked;
      if (diff > rtol * scale + atol) ++out.failures;
      out.max_abs_diff = std::max(out.max_abs_diff, diff);
      if (scale >= 1e-6) out.worst_rel_significant = std::max(out.worst_rel_significant, diff / scale);
      const double rel = scale > 0.0 ? diff / scale : 0.0;
      if (diff > atol && rel > out.worst_rel) {
        out.worst_rel = rel;
        out.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(a) +
                    " numeric=" + std::to_string(numeric);
      }
    }
  }
  for (const auto& [name, p] : params) ad::Var(p).zero_grad();
  return out;
}

}  // namespace revsum::testing

#endif  // REVSUM_TESTS_TEST_UTIL_HPP_
