#include <doctest.h>

#include <cmath>
#include <limits>

#include "comatch/errors.hpp"
#include "comatch/numerics.hpp"
#include "comatch/rng.hpp"
#include "test_util.hpp"

using namespace comatch;

TEST_CASE("softmax: uniform on equal logits") {
  const SimplexVector p = softmax({0.0, 0.0, 0.0}, 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(p[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax: direct evaluation of (5, 0)") {
  // Independent evaluation: e^5 / (e^5 + 1).
  const double expected = std::exp(5.0) / (std::exp(5.0) + 1.0);
  const SimplexVector p = softmax({5.0, 0.0}, 1.0);
  CHECK(p[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(1.0 - expected).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.993307).epsilon(1e-5));
}

TEST_CASE("softmax: shift invariance forces (0.25, 0.75)") {
  for (double c : {-1000.0, 0.0, 3.7, 1000.0}) {
    const SimplexVector p = softmax({c, c + std::log(3.0)}, 1.0);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-12));
  }
}

TEST_CASE("softmax: output is a valid simplex for random logits") {
  Rng rng(11);
  for (int it = 0; it < 200; ++it) {
    Vec logits(1 + rng.uniform_index(8));
    for (double& v : logits) v = rng.uniform(-700.0, 700.0);
    const SimplexVector p = softmax(logits, rng.uniform(0.05, 5.0));
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p[i] >= 0.0);
      sum += p[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax: temperature path agrees with pre-scaled logits") {
  Rng rng(12);
  for (int it = 0; it < 100; ++it) {
    Vec logits(4);
    for (double& v : logits) v = rng.uniform(-10.0, 10.0);
    const double t = rng.uniform(0.05, 3.0);
    Vec scaled = logits;
    for (double& v : scaled) v /= t;
    const SimplexVector a = softmax(logits, t);
    const SimplexVector b = softmax(scaled, 1.0);
    CHECK(test::max_abs_diff(a.values(), b.values()) < 1e-12);
  }
}

TEST_CASE("softmax: rejects bad inputs") {
  CHECK_THROWS_AS(softmax({1.0, 2.0}, 0.0), invalid_argument_error);
  CHECK_THROWS_AS(softmax({1.0, 2.0}, -1.0), invalid_argument_error);
  CHECK_THROWS_AS(softmax({1.0, std::nan("")}, 1.0), invalid_argument_error);
  CHECK_THROWS_AS(softmax({}, 1.0), invalid_argument_error);
}

TEST_CASE("cross_entropy: exact one-hot match is ~0 under the clamp") {
  const SimplexVector t = SimplexVector::one_hot(2, 0);
  CHECK(cross_entropy(t, t) <= 1e-10);
}

TEST_CASE("cross_entropy: closed forms") {
  const SimplexVector onehot = SimplexVector::one_hot(2, 0);
  const SimplexVector uniform = SimplexVector::uniform(2);
  CHECK(cross_entropy(onehot, uniform) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(cross_entropy(uniform, uniform) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cross_entropy: dimension mismatch") {
  CHECK_THROWS_AS(
      cross_entropy(SimplexVector::uniform(2), SimplexVector::uniform(3)),
      invalid_argument_error);
}

TEST_CASE("cross_entropy: Gibbs inequality on random pairs") {
  Rng rng(13);
  for (int it = 0; it < 500; ++it) {
    const std::size_t c = 2 + rng.uniform_index(6);
    const SimplexVector t = test::random_simplex(rng, c);
    const SimplexVector p = test::random_simplex(rng, c);
    CHECK(cross_entropy(t, p) >= entropy(t) - 1e-9);
    CHECK(cross_entropy(t, t) == doctest::Approx(entropy(t)).epsilon(1e-12));
  }
}

TEST_CASE("l2_normalize: 3-4-5 triangle") {
  const UnitVector u = l2_normalize({3.0, 4.0});
  CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("l2_normalize: idempotent on unit vectors") {
  Rng rng(14);
  for (int it = 0; it < 100; ++it) {
    const UnitVector u = test::random_unit(rng, 1 + rng.uniform_index(16));
    const UnitVector v = l2_normalize(u.values());
    CHECK(test::max_abs_diff(u.values(), v.values()) < 1e-15);
  }
}

TEST_CASE("l2_normalize: zero vector is degenerate") {
  CHECK_THROWS_AS(l2_normalize({0.0, 0.0}), degenerate_input_error);
}

TEST_CASE("row_normalize: identity rows are fixed") {
  Matrix eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  const RowStochasticMatrix out = row_normalize(eye);
  CHECK(out(0, 0) == 1.0);
  CHECK(out(0, 1) == 0.0);
  CHECK(out(1, 1) == 1.0);
}

TEST_CASE("row_normalize: forced arithmetic") {
  Matrix w(2, 2);
  w(0, 0) = 1.0;
  w(0, 1) = 1.0;
  w(1, 0) = 2.0;
  w(1, 1) = 0.0;
  const RowStochasticMatrix out = row_normalize(w);
  CHECK(out(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(out(1, 1) == 0.0);
}

TEST_CASE("row_normalize: zero-sum row is degenerate") {
  Matrix w(1, 2);
  CHECK_THROWS_AS(row_normalize(w), degenerate_input_error);
}

TEST_CASE("row_normalize: idempotent within 1e-12") {
  Rng rng(15);
  for (int it = 0; it < 100; ++it) {
    const std::size_t r = 1 + rng.uniform_index(5);
    const std::size_t c = 1 + rng.uniform_index(5);
    Matrix w(r, c);
    for (double& v : w.data) v = rng.uniform(0.0, 10.0) + 1e-3;
    const Matrix once = row_normalize(w).matrix();
    const Matrix twice = row_normalize(once).matrix();
    CHECK(test::max_abs_diff(once.data, twice.data) < 1e-12);
  }
}

TEST_CASE("finite_difference_gradient: quadratic is exact") {
  const auto f = [](const Vec& x) { return x[0] * x[0]; };
  const Vec g = finite_difference_gradient(f, {3.0}, 1e-5);
  CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-8));
}

TEST_CASE("finite_difference_gradient: constants and linear forms") {
  const auto constant = [](const Vec&) { return 42.0; };
  const auto sum = [](const Vec& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  };
  for (double v : finite_difference_gradient(constant, {1.0, -2.0, 0.5}, 1e-5)) {
    CHECK(v == doctest::Approx(0.0).epsilon(1e-10));
  }
  for (double v : finite_difference_gradient(sum, {1.0, -2.0, 0.5}, 1e-5)) {
    CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("finite_difference_gradient: degree-2 polynomials within 1e-8") {
  Rng rng(16);
  for (int it = 0; it < 50; ++it) {
    const std::size_t n = 1 + rng.uniform_index(4);
    Vec a(n), b(n), x(n);
    double c = rng.uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-2.0, 2.0);
      b[i] = rng.uniform(-2.0, 2.0);
      x[i] = rng.uniform(-2.0, 2.0);
    }
    const auto poly = [&](const Vec& v) {
      double s = c;
      for (std::size_t i = 0; i < n; ++i) s += a[i] * v[i] * v[i] + b[i] * v[i];
      return s;
    };
    const Vec g = finite_difference_gradient(poly, x, 1e-5);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(g[i] - (2.0 * a[i] * x[i] + b[i])) < 1e-8);
    }
  }
}

TEST_CASE("finite_difference_gradient: non-finite loss raises numeric error") {
  const auto bad = [](const Vec& x) {
    return x[0] > 1.0 ? std::numeric_limits<double>::quiet_NaN() : x[0];
  };
  CHECK_THROWS_AS(finite_difference_gradient(bad, {1.0}, 1e-1), numeric_error);
}

TEST_CASE("SimplexVector: invariants enforced") {
  CHECK_THROWS_AS(SimplexVector({0.5, 0.6}), invalid_argument_error);
  CHECK_THROWS_AS(SimplexVector({-0.5, 1.5}), invalid_argument_error);
  CHECK_NOTHROW(SimplexVector({0.25, 0.75}));
}

TEST_CASE("UnitVector: invariants enforced") {
  CHECK_THROWS_AS(UnitVector({0.5, 0.5}), invalid_argument_error);
  CHECK_NOTHROW(UnitVector({0.6, 0.8}));
}
