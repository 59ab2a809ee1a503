#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "comatch/numerics.hpp"
#include "comatch/rng.hpp"

namespace comatch {

/// Layer widths of the trainable triple {encoder f, classifier h, projector g}.
struct ModelShape {
  std::size_t input_dim = 2;
  std::size_t hidden = 64;       // encoder layer 1 width
  std::size_t feature = 64;      // encoder output width
  std::size_t proj_hidden = 64;  // projector hidden width
  std::size_t embed_dim = 16;    // d
  std::size_t classes = 2;       // C

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Vec weight;  // out_dim x in_dim, row-major
  Vec bias;    // out_dim

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out)
      : in_dim(in), out_dim(out), weight(in * out, 0.0), bias(out, 0.0) {}

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Encoder = two dense layers with tanh after each; classifier = one dense
/// layer followed by softmax; projector = two dense layers with tanh between,
/// output l2-normalized.
struct ModelParams {
  ModelShape shape;
  DenseLayer enc1, enc2, cls, proj1, proj2;

  ModelParams() = default;
  explicit ModelParams(const ModelShape& s);

  /// Uniform [-a, a] with a = sqrt(6 / (fan_in + fan_out)) per layer.
  static ModelParams init(const ModelShape& s, std::uint64_t seed);
  static ModelParams zeros(const ModelShape& s) { return ModelParams(s); }

  std::size_t param_count() const;
  bool all_finite() const;

  /// Visits every parameter in a fixed canonical order.
  template <typename Fn>
  void for_each_param(Fn&& fn) {
    for (DenseLayer* layer : layers()) {
      for (double& w : layer->weight) fn(w);
      for (double& b : layer->bias) fn(b);
    }
  }
  template <typename Fn>
  void for_each_param(Fn&& fn) const {
    for (const DenseLayer* layer : layers()) {
      for (double w : layer->weight) fn(w);
      for (double b : layer->bias) fn(b);
    }
  }

  Vec flatten() const;
  void unflatten(const Vec& flat);

  std::array<DenseLayer*, 5> layers() {
    return {&enc1, &enc2, &cls, &proj1, &proj2};
  }
  std::array<const DenseLayer*, 5> layers() const {
    return {&enc1, &enc2, &cls, &proj1, &proj2};
  }
  /// Canonical "<module>.<layer>" names matching layers() order.
  static const std::array<std::string, 5>& layer_names();

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Shadow parameter set updated only by the EMA blend, never by gradients.
struct EmaParams {
  ModelParams params;
  double momentum = 0.996;

  friend bool operator==(const EmaParams&, const EmaParams&) = default;
};

/// One sample's recorded forward pass; holds every intermediate the
/// backward pass needs.
struct ForwardCache {
  Vec input;
  Vec enc1_act, enc2_act;      // tanh outputs
  Vec logits;                  // classifier pre-softmax (empty if not run)
  Vec probs;                   // classifier softmax output
  Vec proj1_act;               // tanh output (empty if projector not run)
  Vec proj_out;                // projector pre-normalization output
  double proj_norm = 0.0;
  Vec embedding;               // proj_out / proj_norm

  bool has_class() const { return !logits.empty(); }
  bool has_embed() const { return !proj_out.empty(); }
};

/// Forward through encoder, then the requested heads.
ForwardCache forward_cached(const ModelParams& params, const Vec& x,
                            bool run_class, bool run_embed);

SimplexVector forward_class(const ModelParams& params, const Vec& x);
UnitVector forward_embed(const ModelParams& params, const Vec& x);

/// Accumulates dL/dparams into grads given upstream gradients at the heads:
/// dlogits = dL/d(classifier logits), dembed = dL/d(normalized embedding).
/// Either may be null when that head does not contribute.
void backward_cached(const ModelParams& params, const ForwardCache& cache,
                     const Vec* dlogits, const Vec* dembed, ModelParams& grads);

/// theta_bar <- m * theta_bar + (1 - m) * theta, elementwise.
void ema_update(ModelParams& ema, const ModelParams& params, double m);
inline void ema_update(EmaParams& ema, const ModelParams& params) {
  ema_update(ema.params, params, ema.momentum);
}

}  // namespace comatch
