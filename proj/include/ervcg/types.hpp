#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>

namespace ervcg {

// Everything is priced in the same money unit; beliefs and allocation
// probabilities live in [0,1].
using Scalar = double;
using Money = double;
using Probability = double;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;
using ArrayXd = Eigen::ArrayXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Uniform grid over [lo, hi] with spacing `step`. Both endpoints are always
// included; the final interval is shortened when step does not divide the
// range.
inline ArrayXd value_grid(double lo, double hi, double step)
{
  if (!(step > 0.0) || !(hi >= lo)) return ArrayXd();
  const double span = hi - lo;
  auto count = static_cast<Eigen::Index>(std::floor(span / step * (1.0 + 1e-12)));
  ArrayXd grid(count + 1);
  for (Eigen::Index i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
  grid[count] = hi;
  if (count > 0 && grid[count] - grid[count - 1] < step * 1e-9) {
    grid.conservativeResize(count);
    grid[count - 1] = hi;
  }
  return grid;
}

}  // namespace ervcg
