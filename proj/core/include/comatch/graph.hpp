#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "comatch/numerics.hpp"

namespace comatch {

enum class GraphMode { batch, queue };

/// Similarity of pseudo-labels; each row's self entry is pinned to 1 and
/// off-self entries below the threshold are dropped to 0.
struct PseudoLabelGraph {
  Matrix w;
  GraphMode mode = GraphMode::batch;
  double threshold = 0.0;
  std::vector<std::size_t> self_index;  // per row, the column of its self-loop
};

/// exp(z_b . z_j / t) similarities between strong-augmentation embeddings
/// (or queue columns); the self entry pairs the two strong views.
struct EmbeddingGraph {
  Matrix w;
  GraphMode mode = GraphMode::batch;
  double temperature = 0.0;
  std::vector<std::size_t> self_index;
};

struct QueueEntry {
  SimplexVector q;  // EMA-model pseudo-label
  UnitVector z;     // EMA-model strong-augmentation embedding
};

/// FIFO store of EMA-model (pseudo-label, embedding) pairs for unlabeled
/// samples. Records where the most recently pushed batch landed so graph
/// construction can identify each sample's own slot.
class MomentumQueue {
 public:
  explicit MomentumQueue(std::size_t capacity);

  /// Appends in order, evicting oldest entries past capacity. Returns the
  /// queue positions of the pushed entries that survived (position 0 is the
  /// oldest entry in the queue).
  std::vector<std::size_t> push(std::vector<QueueEntry> entries);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const QueueEntry& entry(std::size_t i) const { return entries_[i]; }

  const std::vector<std::size_t>& last_batch_positions() const {
    return last_batch_positions_;
  }

  /// Used by checkpoint restore to reinstate the recorded batch positions.
  void restore_last_batch_positions(std::vector<std::size_t> positions);

 private:
  std::size_t capacity_;
  std::deque<QueueEntry> entries_;
  std::vector<std::size_t> last_batch_positions_;
};

/// Batch mode: square graph over the unlabeled batch with self-loops of 1.
PseudoLabelGraph build_pseudo_label_graph(const std::vector<SimplexVector>& q,
                                          double threshold);

/// Batch mode: W_bb = exp(z_b . z'_b / t), W_bj = exp(z_b . z_j / t).
EmbeddingGraph build_embedding_graph(const std::vector<UnitVector>& z,
                                     const std::vector<UnitVector>& z_prime,
                                     double t);

struct QueueGraphs {
  PseudoLabelGraph wq;
  EmbeddingGraph wz;
};

/// Queue mode: graphs of size (batch x queue). The queue must already hold
/// the current batch (pushed immediately before). At a sample's own slot the
/// pseudo-label edge is 1 and the embedding column uses the EMA embedding of
/// its second strong augmentation; elsewhere, stored queue entries are used.
QueueGraphs build_graphs_queue_mode(
    const std::vector<SimplexVector>& q_batch,
    const std::vector<UnitVector>& z_batch,
    const std::vector<UnitVector>& ema_z_prime_batch, const MomentumQueue& queue,
    double threshold, double t);

/// Mean over rows of the cross-entropy between the row-normalized graphs.
double contrastive_loss(const PseudoLabelGraph& wq, const EmbeddingGraph& wz);

/// Per-row split of the contrastive cross-entropy into the self-loop term and
/// the peer term, both computed against the unnormalized embedding row sum.
struct DecompositionTerms {
  double self_term = 0.0;  // mean over rows
  double peer_term = 0.0;  // mean over rows
  std::vector<double> row_self;
  std::vector<double> row_peer;
};

DecompositionTerms decomposition_check(const PseudoLabelGraph& wq,
                                       const EmbeddingGraph& wz);

/// Mean count of nonzero off-self pseudo-label edges per row.
double mean_graph_degree(const PseudoLabelGraph& wq);

}  // namespace comatch
