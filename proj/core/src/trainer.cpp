#include "comatch/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "comatch/errors.hpp"

namespace comatch {

namespace {

constexpr double kPi = 3.14159265358979323846;

double vec_dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct StepCaches {
  std::vector<ForwardCache> labeled;
  std::vector<ForwardCache> strong1;
  std::vector<ForwardCache> strong2;
};

StepCaches build_caches(const ModelParams& params, const StepLossInputs& in) {
  StepCaches caches;
  caches.labeled.reserve(in.labeled_x.size());
  for (const Vec& x : in.labeled_x) {
    caches.labeled.push_back(forward_cached(params, x, true, false));
  }
  const bool need_embed = in.ctr.has_value();
  caches.strong1.reserve(in.strong1_x.size());
  for (const Vec& x : in.strong1_x) {
    caches.strong1.push_back(forward_cached(params, x, true, need_embed));
  }
  if (need_embed && in.ctr->mode == GraphMode::batch) {
    caches.strong2.reserve(in.strong2_x.size());
    for (const Vec& x : in.strong2_x) {
      caches.strong2.push_back(forward_cached(params, x, false, true));
    }
  }
  return caches;
}

void check_inputs(const StepLossInputs& in) {
  if (in.labeled_y.size() != in.labeled_x.size()) {
    throw invalid_argument_error("loss inputs: labeled x/y size mismatch");
  }
  const std::size_t n = in.strong1_x.size();
  if (in.q.size() != n || in.mask.size() != n) {
    throw invalid_argument_error("loss inputs: pseudo-label count mismatch");
  }
  if (in.ctr.has_value()) {
    const ContrastiveTargets& ctr = *in.ctr;
    if (ctr.wq_hat.rows() != n) {
      throw invalid_argument_error("loss inputs: graph target row mismatch");
    }
    if (ctr.mode == GraphMode::batch) {
      if (ctr.wq_hat.cols() != n || in.strong2_x.size() != n) {
        throw invalid_argument_error("loss inputs: batch-mode graph shape mismatch");
      }
    } else {
      if (ctr.wq_hat.cols() != ctr.queue_z.size() ||
          ctr.self_cols.size() != n || ctr.self_z_prime.size() != n) {
        throw invalid_argument_error("loss inputs: queue-mode graph shape mismatch");
      }
    }
  }
}

LossBreakdown losses_from_caches(const ModelParams& params,
                                 const StepLossInputs& in,
                                 const StepCaches& caches, ModelParams* grads) {
  check_inputs(in);
  const std::size_t classes = params.shape.classes;
  LossBreakdown out;

  // Supervised loss on the labeled batch.
  const std::size_t b_count = in.labeled_x.size();
  for (std::size_t i = 0; i < b_count; ++i) {
    const ForwardCache& cache = caches.labeled[i];
    if (in.labeled_y[i] < 0 ||
        static_cast<std::size_t>(in.labeled_y[i]) >= classes) {
      throw invalid_argument_error("loss inputs: label out of range");
    }
    const std::size_t y = static_cast<std::size_t>(in.labeled_y[i]);
    out.x -= std::log(std::max(cache.probs[y], kLogClamp));
    if (grads != nullptr && in.weight_x != 0.0) {
      Vec dlogits(classes);
      const double scale = in.weight_x / static_cast<double>(b_count);
      for (std::size_t c = 0; c < classes; ++c) {
        dlogits[c] = scale * (cache.probs[c] - (c == y ? 1.0 : 0.0));
      }
      backward_cached(params, cache, &dlogits, nullptr, *grads);
    }
  }
  if (b_count > 0) out.x /= static_cast<double>(b_count);

  const std::size_t n = in.strong1_x.size();
  const double n_d = static_cast<double>(n);

  // Unsupervised classification loss (soft targets, confidence-masked).
  for (std::size_t b = 0; b < n; ++b) {
    if (!in.mask[b]) continue;
    const ForwardCache& cache = caches.strong1[b];
    for (std::size_t c = 0; c < classes; ++c) {
      out.u_cls -= in.q[b][c] * std::log(std::max(cache.probs[c], kLogClamp));
    }
  }
  if (n > 0) out.u_cls /= n_d;

  // Graph-based contrastive loss.
  std::vector<Vec> dz(grads != nullptr ? n : 0);
  std::vector<Vec> dz_prime;
  if (in.ctr.has_value() && n > 0) {
    const ContrastiveTargets& ctr = *in.ctr;
    const double t = ctr.temperature;
    const std::size_t cols = ctr.wq_hat.cols();
    const bool want_grad = grads != nullptr && in.weight_ctr != 0.0;
    if (want_grad) {
      for (Vec& v : dz) v.assign(params.shape.embed_dim, 0.0);
      if (ctr.mode == GraphMode::batch) {
        dz_prime.assign(n, Vec(params.shape.embed_dim, 0.0));
      }
    }
    Matrix wz(n, cols);
    for (std::size_t b = 0; b < n; ++b) {
      const Vec& zb = caches.strong1[b].embedding;
      for (std::size_t j = 0; j < cols; ++j) {
        double sim;
        if (ctr.mode == GraphMode::batch) {
          sim = (j == b) ? vec_dot(zb, caches.strong2[b].embedding)
                         : vec_dot(zb, caches.strong1[j].embedding);
        } else {
          sim = (j == ctr.self_cols[b])
                    ? vec_dot(zb, ctr.self_z_prime[b].values())
                    : vec_dot(zb, ctr.queue_z[j].values());
        }
        wz(b, j) = std::exp(sim / t);
      }
    }
    for (std::size_t b = 0; b < n; ++b) {
      double row_sum = 0.0;
      for (std::size_t j = 0; j < cols; ++j) row_sum += wz(b, j);
      for (std::size_t j = 0; j < cols; ++j) {
        const double wz_hat = wz(b, j) / row_sum;
        const double wq_hat = ctr.wq_hat(b, j);
        if (wq_hat > 0.0) {
          out.u_ctr -= wq_hat * std::log(std::max(wz_hat, kLogClamp));
        }
        if (want_grad) {
          const double coef = in.weight_ctr * (wz_hat - wq_hat) / (n_d * t);
          if (coef == 0.0) continue;
          const Vec& zb = caches.strong1[b].embedding;
          if (ctr.mode == GraphMode::batch) {
            if (j == b) {
              const Vec& zp = caches.strong2[b].embedding;
              for (std::size_t i = 0; i < zb.size(); ++i) {
                dz[b][i] += coef * zp[i];
                dz_prime[b][i] += coef * zb[i];
              }
            } else {
              const Vec& zj = caches.strong1[j].embedding;
              for (std::size_t i = 0; i < zb.size(); ++i) {
                dz[b][i] += coef * zj[i];
                dz[j][i] += coef * zb[i];
              }
            }
          } else {
            const Vec& col = (j == ctr.self_cols[b])
                                 ? ctr.self_z_prime[b].values()
                                 : ctr.queue_z[j].values();
            for (std::size_t i = 0; i < zb.size(); ++i) {
              dz[b][i] += coef * col[i];
            }
          }
        }
      }
    }
    out.u_ctr /= n_d;
  }

  // Backward through the unlabeled strong views.
  if (grads != nullptr) {
    for (std::size_t b = 0; b < n; ++b) {
      Vec dlogits;
      if (in.weight_cls != 0.0 && in.mask[b]) {
        dlogits.resize(classes);
        const double scale = in.weight_cls / n_d;
        for (std::size_t c = 0; c < classes; ++c) {
          dlogits[c] = scale * (caches.strong1[b].probs[c] - in.q[b][c]);
        }
      }
      const bool has_dz = !dz.empty() && !dz[b].empty() &&
                          in.ctr.has_value() && in.weight_ctr != 0.0;
      if (!dlogits.empty() || has_dz) {
        backward_cached(params, caches.strong1[b],
                        dlogits.empty() ? nullptr : &dlogits,
                        has_dz ? &dz[b] : nullptr, *grads);
      }
    }
    for (std::size_t b = 0; b < dz_prime.size(); ++b) {
      backward_cached(params, caches.strong2[b], nullptr, &dz_prime[b], *grads);
    }
  }

  if (!std::isfinite(out.x) || !std::isfinite(out.u_cls) ||
      !std::isfinite(out.u_ctr)) {
    throw numeric_error("loss computation produced a non-finite component");
  }
  out.total = in.weight_x * out.x + in.weight_cls * out.u_cls +
              in.weight_ctr * out.u_ctr;
  return out;
}

}  // namespace

std::string to_string(TrainMode mode) {
  return mode == TrainMode::batch ? "batch" : "queue";
}

TrainMode train_mode_from_string(const std::string& name) {
  if (name == "batch") return TrainMode::batch;
  if (name == "queue") return TrainMode::queue;
  throw invalid_argument_error("unknown train mode '" + name + "'");
}

void HyperParams::validate() const {
  if (labeled_batch == 0 || mu == 0) {
    throw invalid_argument_error("HyperParams: B and mu must be positive");
  }
  if (bank_capacity == 0) {
    throw invalid_argument_error("HyperParams: K must be positive");
  }
  if (!(lambda_cls >= 0.0) || !(lambda_ctr >= 0.0)) {
    throw invalid_argument_error("HyperParams: loss weights must be nonnegative");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw invalid_argument_error("HyperParams: alpha must lie in [0, 1]");
  }
  if (!(temperature > 0.0)) {
    throw invalid_argument_error("HyperParams: t must be positive");
  }
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw invalid_argument_error("HyperParams: tau must lie in (0, 1]");
  }
  if (!(graph_threshold >= 0.0 && graph_threshold <= 1.0)) {
    throw invalid_argument_error("HyperParams: T must lie in [0, 1]");
  }
  if (!(lr0 >= 0.0) || !(sgd_momentum >= 0.0 && sgd_momentum < 1.0) ||
      !(weight_decay >= 0.0)) {
    throw invalid_argument_error("HyperParams: bad optimizer settings");
  }
  if (!(ema_momentum >= 0.0 && ema_momentum <= 1.0)) {
    throw invalid_argument_error("HyperParams: ema_m must lie in [0, 1]");
  }
  if (!(da_rho >= 0.0 && da_rho < 1.0)) {
    throw invalid_argument_error("HyperParams: da_rho must lie in [0, 1)");
  }
  augment.validate();
}

TrainState init_train_state(const ModelShape& shape, const HyperParams& hp,
                            std::size_t total_steps, std::uint64_t seed) {
  hp.validate();
  ModelParams params = ModelParams::init(shape, derive_seed(seed, 0));
  EmaParams ema{params, hp.ema_momentum};
  ModelParams velocity = ModelParams::zeros(shape);
  return TrainState(std::move(params), std::move(ema), std::move(velocity),
                    MemoryBank(hp.bank_capacity), MomentumQueue(hp.bank_capacity),
                    DistributionAligner(shape.classes, hp.da_rho), 0, total_steps,
                    Rng(derive_seed(seed, 1)));
}

double supervised_loss(const ModelParams& params, const LabeledBatch& batch) {
  if (batch.x.empty()) {
    throw invalid_argument_error("supervised_loss: empty batch");
  }
  if (batch.y.size() != batch.x.size()) {
    throw invalid_argument_error("supervised_loss: x/y size mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.x.size(); ++i) {
    const SimplexVector p = forward_class(params, batch.x[i]);
    const std::size_t y = static_cast<std::size_t>(batch.y[i]);
    if (batch.y[i] < 0 || y >= params.shape.classes) {
      throw invalid_argument_error("supervised_loss: label out of range");
    }
    loss += cross_entropy(SimplexVector::one_hot(params.shape.classes, y), p);
  }
  return loss / static_cast<double>(batch.x.size());
}

double unsupervised_cls_loss(const ModelParams& params,
                             const std::vector<Vec>& strong_x,
                             const std::vector<SimplexVector>& q, double tau) {
  if (strong_x.size() != q.size()) {
    throw invalid_argument_error("unsupervised_cls_loss: batch size mismatch");
  }
  if (strong_x.empty()) return 0.0;
  double loss = 0.0;
  for (std::size_t b = 0; b < strong_x.size(); ++b) {
    if (!confidence_mask(q[b], tau)) continue;
    loss += cross_entropy(q[b], forward_class(params, strong_x[b]));
  }
  return loss / static_cast<double>(strong_x.size());
}

double total_loss(double loss_x, double loss_u_cls, double loss_u_ctr,
                  double lambda_cls, double lambda_ctr) {
  if (!std::isfinite(loss_x) || !std::isfinite(loss_u_cls) ||
      !std::isfinite(loss_u_ctr)) {
    throw numeric_error("total_loss: non-finite component");
  }
  return loss_x + lambda_cls * loss_u_cls + lambda_ctr * loss_u_ctr;
}

double cosine_lr(std::size_t step, std::size_t total_steps, double lr0) {
  if (total_steps == 0) {
    throw invalid_argument_error("cosine_lr: total_steps must be positive");
  }
  if (step > total_steps) {
    throw invalid_argument_error("cosine_lr: step past total_steps");
  }
  return lr0 * 0.5 *
         (1.0 + std::cos(kPi * static_cast<double>(step) /
                         static_cast<double>(total_steps)));
}

void sgd_step(ModelParams& params, const ModelParams& grads,
              ModelParams& velocity, double lr, double momentum,
              double weight_decay) {
  if (params.shape != grads.shape || params.shape != velocity.shape) {
    throw invalid_argument_error("sgd_step: shape mismatch");
  }
  if (!grads.all_finite()) {
    throw numeric_error("sgd_step: non-finite gradient");
  }
  auto p_layers = params.layers();
  auto g_layers = grads.layers();
  auto v_layers = velocity.layers();
  for (std::size_t l = 0; l < p_layers.size(); ++l) {
    auto update = [&](Vec& p, const Vec& g, Vec& v) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = momentum * v[i] + g[i] + weight_decay * p[i];
        p[i] -= lr * v[i];
      }
    };
    update(p_layers[l]->weight, g_layers[l]->weight, v_layers[l]->weight);
    update(p_layers[l]->bias, g_layers[l]->bias, v_layers[l]->bias);
  }
}

LossBreakdown compute_losses(const ModelParams& params,
                             const StepLossInputs& inputs) {
  return losses_from_caches(params, inputs, build_caches(params, inputs),
                            nullptr);
}

LossBreakdown compute_loss_and_grad(const ModelParams& params,
                                    const StepLossInputs& inputs,
                                    ModelParams& grads) {
  return losses_from_caches(params, inputs, build_caches(params, inputs),
                            &grads);
}

namespace {

StepMetrics run_step(TrainState& next, const LabeledBatch& lb,
                     const UnlabeledBatch& ub, const HyperParams& hp,
                     StepDebug* debug) {
  const std::size_t n = ub.x.size();
  const std::size_t classes = next.params.shape.classes;

  // Augmentations, in a fixed draw order.
  std::vector<Vec> xw_l, xw_u, xs1, xs2;
  xw_l.reserve(lb.x.size());
  for (const Vec& x : lb.x) xw_l.push_back(weak_augment(x, hp.augment, next.rng));
  xw_u.reserve(n);
  for (const Vec& x : ub.x) xw_u.push_back(weak_augment(x, hp.augment, next.rng));
  xs1.reserve(n);
  for (const Vec& x : ub.x) xs1.push_back(strong_augment(x, hp.augment, next.rng));
  xs2.reserve(n);
  for (const Vec& x : ub.x) xs2.push_back(strong_augment(x, hp.augment, next.rng));

  // Weak-view predictions come from the EMA model in queue mode.
  const ModelParams& pred =
      hp.mode == TrainMode::queue ? next.ema.params : next.params;
  std::vector<SimplexVector> p_raw;
  std::vector<UnitVector> zw_u;
  p_raw.reserve(n);
  zw_u.reserve(n);
  for (std::size_t b = 0; b < n; ++b) {
    ForwardCache cache = forward_cached(pred, xw_u[b], true, true);
    p_raw.push_back(SimplexVector(std::move(cache.probs)));
    zw_u.push_back(UnitVector(std::move(cache.embedding)));
  }
  std::vector<UnitVector> zw_l;
  zw_l.reserve(lb.x.size());
  for (const Vec& x : xw_l) zw_l.push_back(forward_embed(pred, x));

  // Distribution alignment on unlabeled predictions only.
  std::vector<SimplexVector> p_post =
      hp.da_enabled ? next.aligner.align_batch(p_raw) : p_raw;

  // Memory-smoothed pseudo-labels against the pre-step bank.
  std::vector<SimplexVector> q;
  q.reserve(n);
  for (std::size_t b = 0; b < n; ++b) {
    if (next.bank.empty()) {
      q.push_back(p_post[b]);
    } else {
      q.push_back(smooth_pseudo_label(
          p_post[b], affinity(zw_u[b], next.bank, hp.temperature), next.bank,
          hp.alpha));
    }
  }
  std::vector<bool> mask(n);
  for (std::size_t b = 0; b < n; ++b) mask[b] = confidence_mask(q[b], hp.tau);

  // Strong-view forwards through the trainable model.
  StepCaches caches;
  caches.labeled.reserve(xw_l.size());
  for (const Vec& x : xw_l) {
    caches.labeled.push_back(forward_cached(next.params, x, true, false));
  }
  caches.strong1.reserve(n);
  for (const Vec& x : xs1) {
    caches.strong1.push_back(forward_cached(next.params, x, true, true));
  }
  if (hp.mode == TrainMode::batch) {
    caches.strong2.reserve(n);
    for (const Vec& x : xs2) {
      caches.strong2.push_back(forward_cached(next.params, x, false, true));
    }
  }

  // Graph construction (pseudo-label target is frozen afterwards).
  PseudoLabelGraph wq;
  EmbeddingGraph wz;
  ContrastiveTargets ctr_proto{
      RowStochasticMatrix(Matrix(1, 1, 1.0)), GraphMode::batch, hp.temperature,
      {}, {}, {}};
  if (hp.mode == TrainMode::batch) {
    wq = build_pseudo_label_graph(q, hp.graph_threshold);
    std::vector<UnitVector> z, zp;
    z.reserve(n);
    zp.reserve(n);
    for (std::size_t b = 0; b < n; ++b) {
      z.push_back(UnitVector(caches.strong1[b].embedding));
      zp.push_back(UnitVector(caches.strong2[b].embedding));
    }
    wz = build_embedding_graph(z, zp, hp.temperature);
    ctr_proto = ContrastiveTargets{row_normalize(wq.w), GraphMode::batch,
                                   hp.temperature, {}, {}, {}};
  } else {
    std::vector<UnitVector> zbar1, zbar2, z_raw;
    zbar1.reserve(n);
    zbar2.reserve(n);
    z_raw.reserve(n);
    for (std::size_t b = 0; b < n; ++b) {
      zbar1.push_back(forward_embed(next.ema.params, xs1[b]));
      zbar2.push_back(forward_embed(next.ema.params, xs2[b]));
      z_raw.push_back(UnitVector(caches.strong1[b].embedding));
    }
    std::vector<QueueEntry> entries;
    entries.reserve(n);
    for (std::size_t b = 0; b < n; ++b) entries.push_back({q[b], zbar1[b]});
    next.queue.push(std::move(entries));
    QueueGraphs graphs = build_graphs_queue_mode(q, z_raw, zbar2, next.queue,
                                                 hp.graph_threshold,
                                                 hp.temperature);
    wq = std::move(graphs.wq);
    wz = std::move(graphs.wz);
    std::vector<UnitVector> queue_cols;
    queue_cols.reserve(next.queue.size());
    for (std::size_t j = 0; j < next.queue.size(); ++j) {
      queue_cols.push_back(next.queue.entry(j).z);
    }
    ctr_proto = ContrastiveTargets{row_normalize(wq.w), GraphMode::queue,
                                   hp.temperature, std::move(queue_cols),
                                   wq.self_index, std::move(zbar2)};
  }

  // Losses and analytic gradients in one pass.
  StepLossInputs inputs;
  inputs.labeled_x = xw_l;
  inputs.labeled_y = lb.y;
  inputs.strong1_x = xs1;
  inputs.strong2_x = hp.mode == TrainMode::batch ? xs2 : std::vector<Vec>{};
  inputs.q = q;
  inputs.mask = mask;
  inputs.ctr = std::move(ctr_proto);
  inputs.weight_x = 1.0;
  inputs.weight_cls = hp.lambda_cls;
  inputs.weight_ctr = hp.lambda_ctr;

  ModelParams grads = ModelParams::zeros(next.params.shape);
  const LossBreakdown losses =
      losses_from_caches(next.params, inputs, caches, &grads);

  const double lr = cosine_lr(next.step, next.total_steps, hp.lr0);
  sgd_step(next.params, grads, next.velocity, lr, hp.sgd_momentum,
           hp.weight_decay);
  if (!next.params.all_finite()) {
    throw numeric_error("train_step: non-finite parameters after update");
  }
  ema_update(next.ema.params, next.params, hp.ema_momentum);

  // Bank update after the step's smoothing used the pre-step contents.
  std::vector<BankEntry> bank_entries;
  bank_entries.reserve(lb.x.size() + n);
  for (std::size_t i = 0; i < lb.x.size(); ++i) {
    bank_entries.push_back(
        {SimplexVector::one_hot(classes, static_cast<std::size_t>(lb.y[i])),
         zw_l[i], true});
  }
  for (std::size_t b = 0; b < n; ++b) {
    bank_entries.push_back({p_post[b], zw_u[b], false});
  }
  next.bank.push(std::move(bank_entries));

  StepMetrics metrics;
  metrics.step = next.step;
  metrics.lr = lr;
  metrics.loss_x = losses.x;
  metrics.loss_u_cls = losses.u_cls;
  metrics.loss_u_ctr = losses.u_ctr;
  metrics.loss_total = losses.total;
  std::size_t confident = 0;
  std::size_t correct = 0;
  for (std::size_t b = 0; b < n; ++b) {
    if (!mask[b]) continue;
    ++confident;
    if (!ub.hidden_y.empty() &&
        static_cast<int>(q[b].argmax()) == ub.hidden_y[b]) {
      ++correct;
    }
  }
  metrics.confident_ratio = static_cast<double>(confident) / static_cast<double>(n);
  if (confident > 0 && !ub.hidden_y.empty()) {
    metrics.pseudo_label_accuracy =
        static_cast<double>(correct) / static_cast<double>(confident);
  }
  metrics.mean_graph_degree = mean_graph_degree(wq);

  if (debug != nullptr) {
    debug->p_weak = p_post;
    debug->q = q;
    debug->mask = mask;
    debug->wq = wq;
    debug->wz = wz;
  }

  next.step += 1;
  return metrics;
}

}  // namespace

StepMetrics train_step(TrainState& state, const LabeledBatch& labeled,
                       const UnlabeledBatch& unlabeled, const HyperParams& hp,
                       StepDebug* debug) {
  hp.validate();
  if (labeled.x.size() != hp.labeled_batch ||
      labeled.y.size() != labeled.x.size()) {
    throw invalid_argument_error("train_step: labeled batch size mismatch");
  }
  if (unlabeled.x.size() != hp.unlabeled_batch()) {
    throw invalid_argument_error("train_step: unlabeled batch must hold mu*B samples");
  }
  if (!unlabeled.hidden_y.empty() &&
      unlabeled.hidden_y.size() != unlabeled.x.size()) {
    throw invalid_argument_error("train_step: hidden label count mismatch");
  }
  TrainState next = state;
  StepMetrics metrics = run_step(next, labeled, unlabeled, hp, debug);
  state = std::move(next);
  return metrics;
}

EvalResult evaluate(const ModelParams& params, const Dataset& test) {
  if (test.size() == 0) {
    throw invalid_argument_error("evaluate: empty test set");
  }
  const std::size_t classes = params.shape.classes;
  EvalResult result;
  result.per_class_accuracy.assign(classes, 0.0);
  result.per_class_counts.assign(classes, 0);
  std::vector<std::size_t> correct(classes, 0);
  std::size_t total_correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test.labels[i] < 0 ||
        static_cast<std::size_t>(test.labels[i]) >= classes) {
      throw invalid_argument_error("evaluate: label out of range at row " +
                                   std::to_string(i));
    }
    const std::size_t y = static_cast<std::size_t>(test.labels[i]);
    const SimplexVector p = forward_class(params, test.features[i]);
    result.per_class_counts[y] += 1;
    if (p.argmax() == y) {
      ++correct[y];
      ++total_correct;
    }
  }
  for (std::size_t c = 0; c < classes; ++c) {
    result.per_class_accuracy[c] =
        result.per_class_counts[c] == 0
            ? 0.0
            : static_cast<double>(correct[c]) /
                  static_cast<double>(result.per_class_counts[c]);
  }
  result.accuracy =
      static_cast<double>(total_correct) / static_cast<double>(test.size());
  return result;
}

const ModelParams& eval_params(const TrainState& state, const HyperParams& hp) {
  return hp.mode == TrainMode::queue ? state.ema.params : state.params;
}

}  // namespace comatch
