#pragma once

// Central finite-difference helpers shared by the gradient tests.

#include <algorithm>
#include <cmath>
#include <functional>

#include "qnn4eo/tensor.hpp"

namespace oracle {

/// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
/// gradient is ~0 from reporting noise-level relative errors.
inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// d f / d x[i] by central differences, perturbing `x` in place and restoring it.
inline double central_difference(qnn4eo::nn::Tensor& x, std::size_t i, const std::function<double()>& f,
                                 double eps) {
  const double saved = x[i];
  x[i] = saved + eps;
  const double up = f();
  x[i] = saved - eps;
  const double down = f();
  x[i] = saved;
  return (up - down) / (2.0 * eps);
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
};

/// Compares `analytic` against central differences of f over every entry of x.
inline GradCheck check_gradient(qnn4eo::nn::Tensor& x, const qnn4eo::nn::Tensor& analytic,
                                const std::function<double()>& f, double eps, std::size_t stride = 1) {
  GradCheck r;
  for (std::size_t i = 0; i < x.size(); i += stride) {
    const double e = relative_error(analytic[i], central_difference(x, i, f, eps));
    if (e > r.max_rel_error) {
      r.max_rel_error = e;
      r.worst_index = i;
    }
    ++r.checked;
  }
  return r;
}

/// Fills with uniform draws in [lo, hi) from a fixed linear congruential
/// stream, independent of the library's RNG.
inline void fill_uniform(qnn4eo::nn::Tensor& t, unsigned long long seed, double lo = -1.0, double hi = 1.0) {
  unsigned long long s = seed * 6364136223846793005ULL + 1442695040888963407ULL;
  for (double& v : t.data()) {
    s = s * 6364136223846793005ULL + 1442695040888963407ULL;
    v = lo + (hi - lo) * static_cast<double>(s >> 11) * 0x1.0p-53;
  }
}

}  // namespace oracle
