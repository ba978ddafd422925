// Copyright 2026 The GSWA Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "gswa/errors.hpp"
#include "gswa/tensor.hpp"

namespace gswa {

/// Central-difference gradient of a scalar function: (f(x+he) - f(x-he)) / 2h
/// for every coordinate e.
template <typename T>
BasicTensor<T> finite_diff_grad(const std::function<double(const BasicTensor<T>&)>& f,
                                const BasicTensor<T>& x, double step) {
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  BasicTensor<T> probe = x;
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T orig = probe[i];
    probe[i] = static_cast<T>(double(orig) + step);
    const double up = f(probe);
    probe[i] = static_cast<T>(double(orig) - step);
    const double down = f(probe);
    probe[i] = orig;
    out[i] = static_cast<T>((up - down) / (2.0 * step));
  }
  return out;
}

/// ||a - b|| / max(||a||, ||b||), zero when both vanish.
template <typename T, typename U>
double relative_error(const BasicTensor<T>& a, const BasicTensor<U>& b) {
  if (a.shape() != b.shape()) throw DimensionError("relative_error shape mismatch");
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = double(a[i]), y = double(b[i]);
    diff += (x - y) * (x - y);
    na += x * x;
    nb += y * y;
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

}  // namespace gswa
