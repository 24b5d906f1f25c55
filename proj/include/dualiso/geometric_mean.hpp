#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "dualiso/errors.hpp"
#include "dualiso/image.hpp"

namespace dualiso {

/// exp(mean(ln(max(v, epsilon)))).
inline double geometric_mean(std::span<const double> values, double epsilon = kEpsilon) {
  if (values.empty()) throw EmptyRegion("geometric mean of an empty set");
  // Sum logs in long double; regions can hold hundreds of thousands of pixels.
  long double acc = 0.0L;
  for (double v : values) acc += std::log(static_cast<long double>(std::max(v, epsilon)));
  return static_cast<double>(std::exp(acc / static_cast<long double>(values.size())));
}

}  // namespace dualiso
