#include "comatch/model.hpp"

#include <cmath>

#include "comatch/errors.hpp"

namespace comatch {

namespace {

void check_shape(const ModelShape& s) {
  if (s.input_dim == 0 || s.hidden == 0 || s.feature == 0 ||
      s.proj_hidden == 0 || s.embed_dim == 0 || s.classes == 0) {
    throw invalid_argument_error("ModelShape: all dimensions must be positive");
  }
}

/// y = W x + b
Vec dense_forward(const DenseLayer& layer, const Vec& x) {
  Vec out(layer.out_dim);
  for (std::size_t r = 0; r < layer.out_dim; ++r) {
    double acc = layer.bias[r];
    const double* wrow = layer.weight.data() + r * layer.in_dim;
    for (std::size_t c = 0; c < layer.in_dim; ++c) acc += wrow[c] * x[c];
    out[r] = acc;
  }
  return out;
}

/// Accumulates dW, db from upstream dy and returns dx.
Vec dense_backward(const DenseLayer& layer, const Vec& x, const Vec& dy,
                   DenseLayer& grad) {
  Vec dx(layer.in_dim, 0.0);
  for (std::size_t r = 0; r < layer.out_dim; ++r) {
    const double g = dy[r];
    grad.bias[r] += g;
    double* grow = grad.weight.data() + r * layer.in_dim;
    const double* wrow = layer.weight.data() + r * layer.in_dim;
    for (std::size_t c = 0; c < layer.in_dim; ++c) {
      grow[c] += g * x[c];
      dx[c] += g * wrow[c];
    }
  }
  return dx;
}

Vec tanh_forward(Vec v) {
  for (double& x : v) x = std::tanh(x);
  return v;
}

/// dx = dy * (1 - tanh(x)^2), expressed through the cached activation.
Vec tanh_backward(const Vec& act, const Vec& dy) {
  Vec dx(act.size());
  for (std::size_t i = 0; i < act.size(); ++i) {
    dx[i] = dy[i] * (1.0 - act[i] * act[i]);
  }
  return dx;
}

}  // namespace

ModelParams::ModelParams(const ModelShape& s) : shape(s) {
  check_shape(s);
  enc1 = DenseLayer(s.input_dim, s.hidden);
  enc2 = DenseLayer(s.hidden, s.feature);
  cls = DenseLayer(s.feature, s.classes);
  proj1 = DenseLayer(s.feature, s.proj_hidden);
  proj2 = DenseLayer(s.proj_hidden, s.embed_dim);
}

ModelParams ModelParams::init(const ModelShape& s, std::uint64_t seed) {
  ModelParams p(s);
  Rng rng(seed);
  for (DenseLayer* layer : p.layers()) {
    const double a = std::sqrt(
        6.0 / static_cast<double>(layer->in_dim + layer->out_dim));
    for (double& w : layer->weight) w = rng.uniform(-a, a);
    for (double& b : layer->bias) b = rng.uniform(-a, a);
  }
  return p;
}

std::size_t ModelParams::param_count() const {
  std::size_t n = 0;
  for (const DenseLayer* layer : layers()) {
    n += layer->weight.size() + layer->bias.size();
  }
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each_param([&](double v) { ok = ok && std::isfinite(v); });
  return ok;
}

Vec ModelParams::flatten() const {
  Vec flat;
  flat.reserve(param_count());
  for_each_param([&](double v) { flat.push_back(v); });
  return flat;
}

void ModelParams::unflatten(const Vec& flat) {
  if (flat.size() != param_count()) {
    throw invalid_argument_error("ModelParams::unflatten: size mismatch");
  }
  std::size_t i = 0;
  for_each_param([&](double& v) { v = flat[i++]; });
}

const std::array<std::string, 5>& ModelParams::layer_names() {
  static const std::array<std::string, 5> names = {
      "encoder.layer1", "encoder.layer2", "classifier.layer1",
      "projector.layer1", "projector.layer2"};
  return names;
}

ForwardCache forward_cached(const ModelParams& params, const Vec& x,
                            bool run_class, bool run_embed) {
  if (x.size() != params.shape.input_dim) {
    throw invalid_argument_error("forward: input dimension mismatch");
  }
  ForwardCache cache;
  cache.input = x;
  cache.enc1_act = tanh_forward(dense_forward(params.enc1, x));
  cache.enc2_act = tanh_forward(dense_forward(params.enc2, cache.enc1_act));
  if (run_class) {
    cache.logits = dense_forward(params.cls, cache.enc2_act);
    cache.probs = softmax(cache.logits, 1.0).values();
  }
  if (run_embed) {
    cache.proj1_act = tanh_forward(dense_forward(params.proj1, cache.enc2_act));
    cache.proj_out = dense_forward(params.proj2, cache.proj1_act);
    double norm_sq = 0.0;
    for (double v : cache.proj_out) norm_sq += v * v;
    cache.proj_norm = std::sqrt(norm_sq);
    if (cache.proj_norm <= kNormFloor) {
      throw degenerate_input_error("forward: projector output has near-zero norm");
    }
    cache.embedding.resize(cache.proj_out.size());
    for (std::size_t i = 0; i < cache.proj_out.size(); ++i) {
      cache.embedding[i] = cache.proj_out[i] / cache.proj_norm;
    }
  }
  return cache;
}

SimplexVector forward_class(const ModelParams& params, const Vec& x) {
  ForwardCache cache = forward_cached(params, x, true, false);
  return SimplexVector(std::move(cache.probs));
}

UnitVector forward_embed(const ModelParams& params, const Vec& x) {
  ForwardCache cache = forward_cached(params, x, false, true);
  return UnitVector(std::move(cache.embedding));
}

void backward_cached(const ModelParams& params, const ForwardCache& cache,
                     const Vec* dlogits, const Vec* dembed,
                     ModelParams& grads) {
  Vec dfeature(params.shape.feature, 0.0);

  if (dlogits != nullptr) {
    if (!cache.has_class()) {
      throw state_error("backward: classifier head was not run forward");
    }
    const Vec dx = dense_backward(params.cls, cache.enc2_act, *dlogits, grads.cls);
    for (std::size_t i = 0; i < dfeature.size(); ++i) dfeature[i] += dx[i];
  }

  if (dembed != nullptr) {
    if (!cache.has_embed()) {
      throw state_error("backward: projector head was not run forward");
    }
    // z = v / |v|  =>  dv = (dz - (dz . z) z) / |v|
    const Vec& z = cache.embedding;
    double dz_dot_z = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) dz_dot_z += (*dembed)[i] * z[i];
    Vec dv(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      dv[i] = ((*dembed)[i] - dz_dot_z * z[i]) / cache.proj_norm;
    }
    const Vec dproj1_act =
        dense_backward(params.proj2, cache.proj1_act, dv, grads.proj2);
    const Vec dproj1_pre = tanh_backward(cache.proj1_act, dproj1_act);
    const Vec dx =
        dense_backward(params.proj1, cache.enc2_act, dproj1_pre, grads.proj1);
    for (std::size_t i = 0; i < dfeature.size(); ++i) dfeature[i] += dx[i];
  }

  const Vec denc2_pre = tanh_backward(cache.enc2_act, dfeature);
  const Vec denc1_act =
      dense_backward(params.enc2, cache.enc1_act, denc2_pre, grads.enc2);
  const Vec denc1_pre = tanh_backward(cache.enc1_act, denc1_act);
  dense_backward(params.enc1, cache.input, denc1_pre, grads.enc1);
}

void ema_update(ModelParams& ema, const ModelParams& params, double m) {
  if (!(m >= 0.0 && m <= 1.0)) {
    throw invalid_argument_error("ema_update: momentum must lie in [0, 1]");
  }
  if (ema.shape != params.shape) {
    throw invalid_argument_error("ema_update: shape mismatch");
  }
  auto ema_layers = ema.layers();
  auto src_layers = params.layers();
  for (std::size_t l = 0; l < ema_layers.size(); ++l) {
    for (std::size_t i = 0; i < ema_layers[l]->weight.size(); ++i) {
      ema_layers[l]->weight[i] =
          m * ema_layers[l]->weight[i] + (1.0 - m) * src_layers[l]->weight[i];
    }
    for (std::size_t i = 0; i < ema_layers[l]->bias.size(); ++i) {
      ema_layers[l]->bias[i] =
          m * ema_layers[l]->bias[i] + (1.0 - m) * src_layers[l]->bias[i];
    }
  }
}

}  // namespace comatch
