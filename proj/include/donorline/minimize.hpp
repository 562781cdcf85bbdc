#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>

#include <boost/math/tools/minima.hpp>

#include "donorline/error.hpp"

namespace donorline {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Bracketed scalar minimization on [lo, hi].
///
/// The interval is first scanned on a coarse grid; the best interior grid
/// point and its neighbours form the bracket that Brent (Boost) refines to absolute
/// tolerance `xtol`. When the coarse minimum sits on an end point the function
/// is treated as monotone on the interval and NoMinimumInBracket is thrown.
template <class F>
ScalarMinimum minimize_bracketed(F&& f, double lo, double hi, double xtol = 1e-4,
                                 int grid = 64, int max_iter = 500) {
  if (!(hi > lo) || grid < 3) throw Error(ErrorCode::InvalidArgument, "bad bracket");
  int evaluations = 0;
  int best = 0;
  double best_value = 0.0;
  const double step = (hi - lo) / grid;
  for (int i = 0; i <= grid; ++i) {
    const double v = f(lo + i * step);
    ++evaluations;
    if (i == 0 || v < best_value) {
      best = i;
      best_value = v;
    }
  }
  if (best == 0 || best == grid) {
    throw Error(ErrorCode::NoMinimumInBracket,
                "function is monotone on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }

  const double a = lo + (best - 1) * step;
  const double b = lo + (best + 1) * step;
  // Relative precision bits that resolve xtol at the bracket's scale.
  const double scale = std::max(std::abs(a), std::abs(b));
  const int bits = std::clamp(static_cast<int>(std::ceil(std::log2(scale / xtol))) + 1, 1,
                              std::numeric_limits<double>::digits / 2);
  auto iterations = static_cast<std::uintmax_t>(max_iter);
  const auto [x, fx] = boost::math::tools::brent_find_minima(f, a, b, bits, iterations);
  return {x, fx, evaluations + static_cast<int>(iterations)};
}

}  // namespace donorline
