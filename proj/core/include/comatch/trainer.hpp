#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "comatch/data.hpp"
#include "comatch/graph.hpp"
#include "comatch/model.hpp"
#include "comatch/numerics.hpp"
#include "comatch/pseudolabel.hpp"
#include "comatch/rng.hpp"

namespace comatch {

enum class TrainMode { batch, queue };

std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);

struct HyperParams {
  std::size_t labeled_batch = 64;  // B
  std::size_t mu = 7;              // unlabeled/labeled batch ratio
  double lambda_cls = 1.0;
  double lambda_ctr = 5.0;
  double alpha = 0.9;              // pseudo-label smoothing weight
  std::size_t bank_capacity = 256; // K, shared by bank and queue
  double temperature = 0.2;        // t
  double tau = 0.95;               // confidence threshold
  double graph_threshold = 0.7;    // T
  double lr0 = 0.03;
  double sgd_momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t epochs = 200;
  double ema_momentum = 0.996;     // m
  double da_rho = 0.99;
  bool da_enabled = true;
  TrainMode mode = TrainMode::batch;
  AugmentPolicy augment;

  std::size_t unlabeled_batch() const { return mu * labeled_batch; }
  void validate() const;
};

/// Everything the training loop mutates. Copy, mutate, swap keeps each step
/// transactional; checkpointing this struct gives bit-identical resume.
struct TrainState {
  ModelParams params;
  EmaParams ema;
  ModelParams velocity;  // SGD momentum buffer
  MemoryBank bank;
  MomentumQueue queue;
  DistributionAligner aligner;
  std::size_t step = 0;
  std::size_t total_steps = 0;
  Rng rng;

  TrainState(ModelParams p, EmaParams e, ModelParams v, MemoryBank b,
             MomentumQueue mq, DistributionAligner da, std::size_t step_,
             std::size_t total_steps_, Rng rng_)
      : params(std::move(p)),
        ema(std::move(e)),
        velocity(std::move(v)),
        bank(std::move(b)),
        queue(std::move(mq)),
        aligner(std::move(da)),
        step(step_),
        total_steps(total_steps_),
        rng(std::move(rng_)) {}
};

TrainState init_train_state(const ModelShape& shape, const HyperParams& hp,
                            std::size_t total_steps, std::uint64_t seed);

// ---- loss components ----

/// Mean cross-entropy of predictions on a weakly-augmented labeled batch.
double supervised_loss(const ModelParams& params, const LabeledBatch& batch);

/// (1/muB) sum_b 1(max q_b >= tau) H(q_b, p(y|strong_b)); soft targets.
double unsupervised_cls_loss(const ModelParams& params,
                             const std::vector<Vec>& strong_x,
                             const std::vector<SimplexVector>& q, double tau);

/// L = L_x + lambda_cls * L_u_cls + lambda_ctr * L_u_ctr.
double total_loss(double loss_x, double loss_u_cls, double loss_u_ctr,
                  double lambda_cls, double lambda_ctr);

/// Half-cosine decay to zero: lr0 * 0.5 * (1 + cos(pi * step / total)).
double cosine_lr(std::size_t step, std::size_t total_steps, double lr0);

/// v <- momentum * v + grad + weight_decay * theta; theta <- theta - lr * v.
void sgd_step(ModelParams& params, const ModelParams& grads,
              ModelParams& velocity, double lr, double momentum,
              double weight_decay);

// ---- assembled objective (shared by train_step and gradient checking) ----

/// Constant inputs of the contrastive term. The pseudo-label graph target is
/// already row-normalized and frozen; in queue mode the stored queue columns
/// and each row's own-slot second-view embedding are frozen too.
struct ContrastiveTargets {
  RowStochasticMatrix wq_hat;
  GraphMode mode = GraphMode::batch;
  double temperature = 0.2;
  // queue mode only:
  std::vector<UnitVector> queue_z;        // one column per queue slot
  std::vector<std::size_t> self_cols;     // per row, its own queue slot
  std::vector<UnitVector> self_z_prime;   // per row, EMA second-view embedding
};

/// A recorded step objective: model inputs plus every stop-gradient constant.
struct StepLossInputs {
  std::vector<Vec> labeled_x;  // weakly augmented
  std::vector<int> labeled_y;
  std::vector<Vec> strong1_x;
  std::vector<Vec> strong2_x;  // ignored in queue mode
  std::vector<SimplexVector> q;
  std::vector<bool> mask;
  std::optional<ContrastiveTargets> ctr;
  double weight_x = 1.0;
  double weight_cls = 1.0;
  double weight_ctr = 1.0;
};

struct LossBreakdown {
  double x = 0.0;
  double u_cls = 0.0;
  double u_ctr = 0.0;
  double total = 0.0;
};

LossBreakdown compute_losses(const ModelParams& params,
                             const StepLossInputs& inputs);
LossBreakdown compute_loss_and_grad(const ModelParams& params,
                                    const StepLossInputs& inputs,
                                    ModelParams& grads);

// ---- full training step ----

struct StepMetrics {
  std::size_t step = 0;
  double lr = 0.0;
  double loss_x = 0.0;
  double loss_u_cls = 0.0;
  double loss_u_ctr = 0.0;
  double loss_total = 0.0;
  double confident_ratio = 0.0;
  std::optional<double> pseudo_label_accuracy;  // absent without confident q
  double mean_graph_degree = 0.0;
};

/// Optional capture of per-step internals, for tests and graph dumps.
struct StepDebug {
  std::vector<SimplexVector> p_weak;  // post-alignment weak predictions
  std::vector<SimplexVector> q;
  std::vector<bool> mask;
  PseudoLabelGraph wq;
  EmbeddingGraph wz;
};

/// One full iteration: augment, pseudo-label, build graphs, compute the
/// three losses, backpropagate, SGD + EMA updates, bank/queue pushes.
/// Any error leaves the state untouched.
StepMetrics train_step(TrainState& state, const LabeledBatch& labeled,
                       const UnlabeledBatch& unlabeled, const HyperParams& hp,
                       StepDebug* debug = nullptr);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::size_t> per_class_counts;
};

/// Argmax accuracy on a labeled dataset; ties break toward the lowest class.
EvalResult evaluate(const ModelParams& params, const Dataset& test);

/// Parameters used for evaluation: the EMA model in queue mode, the raw
/// model in batch mode.
const ModelParams& eval_params(const TrainState& state, const HyperParams& hp);

}  // namespace comatch
