#include <doctest.h>

#include <cmath>

#include "comatch/errors.hpp"
#include "comatch/model.hpp"
#include "test_util.hpp"

using namespace comatch;

namespace {

const ModelShape kTiny{2, 3, 3, 3, 2, 2};

// Independent forward oracle: plain matrix arithmetic with no shared code
// beyond the standard library.
Vec oracle_dense(const DenseLayer& l, const Vec& x) {
  Vec out(l.out_dim);
  for (std::size_t r = 0; r < l.out_dim; ++r) {
    out[r] = l.bias[r];
    for (std::size_t c = 0; c < l.in_dim; ++c) {
      out[r] += l.weight[r * l.in_dim + c] * x[c];
    }
  }
  return out;
}

Vec oracle_tanh(Vec v) {
  for (double& x : v) x = std::tanh(x);
  return v;
}

Vec oracle_class(const ModelParams& p, const Vec& x) {
  const Vec h2 = oracle_tanh(oracle_dense(p.enc2, oracle_tanh(oracle_dense(p.enc1, x))));
  Vec logits = oracle_dense(p.cls, h2);
  double denom = 0.0;
  for (double v : logits) denom += std::exp(v);
  Vec probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i]) / denom;
  }
  return probs;
}

Vec oracle_embed(const ModelParams& p, const Vec& x) {
  const Vec h2 = oracle_tanh(oracle_dense(p.enc2, oracle_tanh(oracle_dense(p.enc1, x))));
  const Vec v = oracle_dense(p.proj2, oracle_tanh(oracle_dense(p.proj1, h2)));
  double norm = 0.0;
  for (double a : v) norm += a * a;
  norm = std::sqrt(norm);
  Vec z(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) z[i] = v[i] / norm;
  return z;
}

}  // namespace

TEST_CASE("forward_class: zero parameters give the uniform distribution") {
  const ModelParams p = ModelParams::zeros({4, 8, 8, 8, 4, 5});
  const SimplexVector out = forward_class(p, {0.5, -1.0, 2.0, 0.0});
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(out[i] == doctest::Approx(0.2).epsilon(1e-12));
  }
}

TEST_CASE("forward_class: matches the independent forward oracle") {
  const ModelParams p = ModelParams::init({3, 5, 4, 6, 3, 4}, 0);
  const Vec x = {0.3, -1.2, 0.7};
  const SimplexVector got = forward_class(p, x);
  const Vec want = oracle_class(p, x);
  CHECK(test::max_abs_diff(got.values(), want) < 1e-12);
}

TEST_CASE("forward_class: probabilities sum to one for random inputs") {
  Rng rng(21);
  const ModelParams p = ModelParams::init({4, 6, 6, 6, 3, 7}, 3);
  for (int it = 0; it < 50; ++it) {
    Vec x(4);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    const SimplexVector out = forward_class(p, x);
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) sum += out[i];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("forward_class: input dimension is checked") {
  const ModelParams p = ModelParams::init(kTiny, 0);
  CHECK_THROWS_AS(forward_class(p, {1.0, 2.0, 3.0}), invalid_argument_error);
}

TEST_CASE("forward_embed: output is unit norm and matches the oracle") {
  Rng rng(22);
  const ModelParams p = ModelParams::init({3, 5, 4, 6, 3, 4}, 0);
  for (int it = 0; it < 50; ++it) {
    Vec x(3);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    const UnitVector z = forward_embed(p, x);
    double norm = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) norm += z[i] * z[i];
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(test::max_abs_diff(z.values(), oracle_embed(p, x)) < 1e-12);
  }
}

TEST_CASE("forward_embed: crafted projector output is normalized exactly") {
  // All weights zero, projector output bias (3, 4): z must be (0.6, 0.8).
  ModelParams p = ModelParams::zeros(kTiny);
  p.proj2.bias = {3.0, 4.0};
  const UnitVector z = forward_embed(p, {0.0, 0.0});
  CHECK(z[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("forward_embed: zero projector output is degenerate") {
  const ModelParams p = ModelParams::zeros(kTiny);
  CHECK_THROWS_AS(forward_embed(p, {1.0, 1.0}), degenerate_input_error);
}

TEST_CASE("backward: classifier cross-entropy gradient matches finite differences") {
  const ModelParams p = ModelParams::init(kTiny, 7);
  const Vec x = {0.4, -0.9};
  const SimplexVector target({0.3, 0.7});

  ModelParams grads = ModelParams::zeros(kTiny);
  const ForwardCache cache = forward_cached(p, x, true, false);
  Vec dlogits(2);
  for (std::size_t c = 0; c < 2; ++c) dlogits[c] = cache.probs[c] - target[c];
  backward_cached(p, cache, &dlogits, nullptr, grads);

  ModelParams probe = p;
  const auto loss = [&](const Vec& flat) {
    probe.unflatten(flat);
    return cross_entropy(target, forward_class(probe, x));
  };
  const Vec numeric = finite_difference_gradient(loss, p.flatten(), 1e-5);
  CHECK(test::max_rel_error(grads.flatten(), numeric) < 1e-4);
}

TEST_CASE("backward: embedding-linear loss gradient matches finite differences") {
  const ModelShape shape{2, 3, 3, 3, 3, 2};
  const ModelParams p = ModelParams::init(shape, 9);
  const Vec x = {1.1, -0.3};
  const Vec w = {0.7, -1.3, 0.4};  // loss = w . z

  ModelParams grads = ModelParams::zeros(shape);
  const ForwardCache cache = forward_cached(p, x, false, true);
  backward_cached(p, cache, nullptr, &w, grads);

  ModelParams probe = p;
  const auto loss = [&](const Vec& flat) {
    probe.unflatten(flat);
    const UnitVector z = forward_embed(probe, x);
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) s += w[i] * z[i];
    return s;
  };
  const Vec numeric = finite_difference_gradient(loss, p.flatten(), 1e-5);
  CHECK(test::max_rel_error(grads.flatten(), numeric) < 1e-4);
}

TEST_CASE("backward: frozen branch receives zero gradient") {
  const ModelParams p = ModelParams::init(kTiny, 4);
  ModelParams grads = ModelParams::zeros(kTiny);
  const ForwardCache cache = forward_cached(p, {0.2, 0.8}, true, true);
  Vec dlogits(2, 0.5);
  backward_cached(p, cache, &dlogits, nullptr, grads);
  for (double v : grads.proj1.weight) CHECK(v == 0.0);
  for (double v : grads.proj2.weight) CHECK(v == 0.0);
  for (double v : grads.proj1.bias) CHECK(v == 0.0);
  for (double v : grads.proj2.bias) CHECK(v == 0.0);
}

TEST_CASE("ema_update: endpoint momenta") {
  const ModelParams p = ModelParams::init(kTiny, 1);
  ModelParams shadow = ModelParams::init(kTiny, 2);

  SUBCASE("m = 0 copies the parameters") {
    ema_update(shadow, p, 0.0);
    CHECK(shadow == p);
  }
  SUBCASE("m = 1 freezes the shadow") {
    const ModelParams before = shadow;
    ema_update(shadow, p, 1.0);
    CHECK(shadow == before);
  }
  SUBCASE("m outside [0, 1] is rejected") {
    CHECK_THROWS_AS(ema_update(shadow, p, -0.1), invalid_argument_error);
    CHECK_THROWS_AS(ema_update(shadow, p, 1.1), invalid_argument_error);
  }
}

TEST_CASE("ema_update: direct blend arithmetic") {
  ModelShape shape{1, 1, 1, 1, 1, 1};
  ModelParams p = ModelParams::zeros(shape);  // theta = 0
  ModelParams shadow = ModelParams::zeros(shape);
  shadow.for_each_param([](double& v) { v = 1.0; });  // theta_bar = 1
  ema_update(shadow, p, 0.9);
  shadow.for_each_param([](double v) { CHECK(v == doctest::Approx(0.9).epsilon(1e-15)); });
}

TEST_CASE("ema_update: closed form after n constant updates") {
  const ModelShape shape{2, 3, 3, 3, 2, 2};
  const ModelParams target = ModelParams::init(shape, 5);
  const ModelParams start = ModelParams::init(shape, 6);
  const double m = 0.95;
  ModelParams shadow = start;
  const int n = 37;
  for (int i = 0; i < n; ++i) ema_update(shadow, target, m);

  const double mn = std::pow(m, n);
  const Vec s0 = start.flatten();
  const Vec th = target.flatten();
  const Vec got = shadow.flatten();
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(std::abs(got[i] - (mn * s0[i] + (1.0 - mn) * th[i])) < 1e-10);
  }
}

TEST_CASE("ModelParams: parameter count is a function of the shape") {
  const ModelShape s{2, 64, 64, 64, 16, 2};
  const std::size_t expected = (2 * 64 + 64) + (64 * 64 + 64) + (64 * 2 + 2) +
                               (64 * 64 + 64) + (64 * 16 + 16);
  CHECK(ModelParams::zeros(s).param_count() == expected);
  CHECK(ModelParams::init(s, 0).param_count() == expected);
}

TEST_CASE("ModelParams: seeded init is deterministic") {
  const ModelShape s{2, 8, 8, 8, 4, 2};
  CHECK(ModelParams::init(s, 42) == ModelParams::init(s, 42));
  CHECK(ModelParams::init(s, 42) != ModelParams::init(s, 43));
}

TEST_CASE("ModelParams: flatten/unflatten round trip") {
  const ModelParams p = ModelParams::init(kTiny, 3);
  ModelParams q = ModelParams::zeros(kTiny);
  q.unflatten(p.flatten());
  CHECK(q == p);
}
