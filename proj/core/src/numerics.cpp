#include "comatch/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "comatch/errors.hpp"

namespace comatch {

namespace {

bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

SimplexVector::SimplexVector(Vec values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw invalid_argument_error("SimplexVector: empty value sequence");
  }
  double sum = 0.0;
  for (double& v : values_) {
    if (!std::isfinite(v)) {
      throw invalid_argument_error("SimplexVector: non-finite entry");
    }
    if (v < 0.0) {
      if (v < -kInvariantTol) {
        throw invalid_argument_error("SimplexVector: negative entry " +
                                     std::to_string(v));
      }
      v = 0.0;  // absorb -0.0 and roundoff-scale negatives
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kInvariantTol) {
    throw invalid_argument_error("SimplexVector: entries sum to " +
                                 std::to_string(sum) + ", expected 1");
  }
}

SimplexVector SimplexVector::uniform(std::size_t classes) {
  if (classes == 0) {
    throw invalid_argument_error("SimplexVector::uniform: zero classes");
  }
  return SimplexVector(Vec(classes, 1.0 / static_cast<double>(classes)));
}

SimplexVector SimplexVector::one_hot(std::size_t classes, std::size_t index) {
  if (index >= classes) {
    throw invalid_argument_error("SimplexVector::one_hot: index out of range");
  }
  Vec v(classes, 0.0);
  v[index] = 1.0;
  return SimplexVector(std::move(v));
}

double SimplexVector::dot(const SimplexVector& other) const {
  if (other.size() != size()) {
    throw invalid_argument_error("SimplexVector::dot: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += values_[i] * other.values_[i];
  return s;
}

double SimplexVector::max_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

std::size_t SimplexVector::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] > values_[best]) best = i;
  }
  return best;
}

UnitVector::UnitVector(Vec values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw invalid_argument_error("UnitVector: empty value sequence");
  }
  double norm_sq = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw invalid_argument_error("UnitVector: non-finite entry");
    }
    norm_sq += v * v;
  }
  if (std::abs(std::sqrt(norm_sq) - 1.0) > kInvariantTol) {
    throw invalid_argument_error("UnitVector: norm " +
                                 std::to_string(std::sqrt(norm_sq)) +
                                 " is not 1");
  }
}

double UnitVector::dot(const UnitVector& other) const {
  if (other.size() != size()) {
    throw invalid_argument_error("UnitVector::dot: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += values_[i] * other.values_[i];
  return s;
}

RowStochasticMatrix::RowStochasticMatrix(Matrix m) : m_(std::move(m)) {
  for (std::size_t r = 0; r < m_.rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < m_.cols; ++c) {
      const double v = m_(r, c);
      if (!(v >= 0.0)) {
        throw invalid_argument_error(
            "RowStochasticMatrix: negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kInvariantTol) {
      throw invalid_argument_error("RowStochasticMatrix: row " +
                                   std::to_string(r) + " sums to " +
                                   std::to_string(sum));
    }
  }
}

SimplexVector softmax(const Vec& logits, double temperature) {
  if (logits.empty()) {
    throw invalid_argument_error("softmax: empty logits");
  }
  if (!std::isfinite(temperature) || temperature <= 0.0) {
    throw invalid_argument_error("softmax: temperature must be positive");
  }
  if (!all_finite(logits)) {
    throw invalid_argument_error("softmax: non-finite logit");
  }
  Vec scaled(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    scaled[i] = logits[i] / temperature;
  }
  const double m = *std::max_element(scaled.begin(), scaled.end());
  double sum = 0.0;
  for (double& s : scaled) {
    s = std::exp(s - m);
    sum += s;
  }
  for (double& s : scaled) s /= sum;
  return SimplexVector(std::move(scaled));
}

double cross_entropy(const SimplexVector& target,
                     const SimplexVector& prediction) {
  if (target.size() != prediction.size()) {
    throw invalid_argument_error("cross_entropy: dimension mismatch");
  }
  double h = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    h -= target[i] * std::log(std::max(prediction[i], kLogClamp));
  }
  return h;
}

double entropy(const SimplexVector& p) { return cross_entropy(p, p); }

UnitVector l2_normalize(const Vec& v) {
  if (v.empty()) {
    throw invalid_argument_error("l2_normalize: empty vector");
  }
  if (!all_finite(v)) {
    throw invalid_argument_error("l2_normalize: non-finite entry");
  }
  double norm_sq = 0.0;
  for (double x : v) norm_sq += x * x;
  const double norm = std::sqrt(norm_sq);
  if (norm <= kNormFloor) {
    throw degenerate_input_error("l2_normalize: norm " + std::to_string(norm) +
                                 " below floor");
  }
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return UnitVector(std::move(out));
}

RowStochasticMatrix row_normalize(const Matrix& w) {
  Matrix out = w;
  for (std::size_t r = 0; r < w.rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) {
      const double v = w(r, c);
      if (!(v >= 0.0)) {
        throw invalid_argument_error("row_normalize: negative entry at row " +
                                     std::to_string(r));
      }
      sum += v;
    }
    if (sum <= 0.0) {
      throw degenerate_input_error("row_normalize: row " + std::to_string(r) +
                                   " has zero sum");
    }
    for (std::size_t c = 0; c < w.cols; ++c) out(r, c) = w(r, c) / sum;
  }
  return RowStochasticMatrix(std::move(out));
}

Vec finite_difference_gradient(
    const std::function<double(const Vec&)>& loss_fn, const Vec& params,
    double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw invalid_argument_error("finite_difference_gradient: eps must be positive");
  }
  Vec grad(params.size());
  Vec probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double up = loss_fn(probe);
    probe[i] = saved - eps;
    const double down = loss_fn(probe);
    probe[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw numeric_error(
          "finite_difference_gradient: non-finite loss at coordinate " +
          std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace comatch
