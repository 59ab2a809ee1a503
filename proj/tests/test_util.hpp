#pragma once

#include <cmath>
#include <vector>

#include "comatch/numerics.hpp"
#include "comatch/rng.hpp"

namespace comatch::test {

inline SimplexVector random_simplex(Rng& rng, std::size_t classes,
                                    double sharpness = 1.0) {
  Vec v(classes);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(sharpness * rng.gaussian());
    sum += x;
  }
  for (double& x : v) x /= sum;
  return SimplexVector(std::move(v));
}

inline UnitVector random_unit(Rng& rng, std::size_t dim) {
  Vec v(dim);
  for (double& x : v) x = rng.gaussian();
  return l2_normalize(v);
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

/// Relative error with a floor that keeps near-zero entries honest:
/// entries below the floor are compared absolutely at floor scale.
inline double max_rel_error(const Vec& analytic, const Vec& numeric,
                            double floor = 1e-4) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

}  // namespace comatch::test
