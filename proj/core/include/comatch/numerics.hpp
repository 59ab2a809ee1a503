#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace comatch {

using Vec = std::vector<double>;

/// Floor applied to probabilities before taking logs.
inline constexpr double kLogClamp = 1e-12;
/// Below this L2 norm a vector cannot be normalized.
inline constexpr double kNormFloor = 1e-12;
/// Tolerance on simplex / unit-norm invariants.
inline constexpr double kInvariantTol = 1e-9;

/// Probability vector over C classes: nonnegative entries summing to 1.
class SimplexVector {
 public:
  explicit SimplexVector(Vec values);

  static SimplexVector uniform(std::size_t classes);
  static SimplexVector one_hot(std::size_t classes, std::size_t index);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const Vec& values() const { return values_; }

  double dot(const SimplexVector& other) const;
  double max_value() const;
  std::size_t argmax() const;  // ties broken toward the lowest index

  friend bool operator==(const SimplexVector& a, const SimplexVector& b) {
    return a.values_ == b.values_;
  }

 private:
  Vec values_;
};

/// Unit-L2-norm embedding vector.
class UnitVector {
 public:
  explicit UnitVector(Vec values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const Vec& values() const { return values_; }

  double dot(const UnitVector& other) const;

  friend bool operator==(const UnitVector& a, const UnitVector& b) {
    return a.values_ == b.values_;
  }

 private:
  Vec values_;
};

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

/// Nonnegative matrix whose rows each sum to 1.
class RowStochasticMatrix {
 public:
  explicit RowStochasticMatrix(Matrix m);

  std::size_t rows() const { return m_.rows; }
  std::size_t cols() const { return m_.cols; }
  double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

/// Temperature-scaled softmax with subtract-max stabilization.
SimplexVector softmax(const Vec& logits, double temperature);

/// H(target, prediction) = -sum_i target_i * log(prediction_i), with
/// prediction entries clamped below at kLogClamp.
double cross_entropy(const SimplexVector& target, const SimplexVector& prediction);

/// Entropy of a distribution, H(p, p).
double entropy(const SimplexVector& p);

UnitVector l2_normalize(const Vec& v);

RowStochasticMatrix row_normalize(const Matrix& w);

/// Central-difference gradient of a scalar function, one coordinate at a time.
Vec finite_difference_gradient(const std::function<double(const Vec&)>& loss_fn,
                               const Vec& params, double eps);

}  // namespace comatch
