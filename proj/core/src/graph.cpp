#include "comatch/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "comatch/errors.hpp"

namespace comatch {

MomentumQueue::MomentumQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw invalid_argument_error("MomentumQueue: capacity must be positive");
  }
}

std::vector<std::size_t> MomentumQueue::push(std::vector<QueueEntry> entries) {
  const std::size_t pushed = entries.size();
  for (QueueEntry& e : entries) {
    entries_.push_back(std::move(e));
    if (entries_.size() > capacity_) entries_.pop_front();
  }
  last_batch_positions_.clear();
  if (pushed > 0) {
    const std::size_t surviving = std::min(pushed, entries_.size());
    for (std::size_t i = entries_.size() - surviving; i < entries_.size(); ++i) {
      last_batch_positions_.push_back(i);
    }
  }
  return last_batch_positions_;
}

void MomentumQueue::restore_last_batch_positions(
    std::vector<std::size_t> positions) {
  for (std::size_t p : positions) {
    if (p >= entries_.size()) {
      throw invalid_argument_error(
          "MomentumQueue: restored position out of range");
    }
  }
  last_batch_positions_ = std::move(positions);
}

PseudoLabelGraph build_pseudo_label_graph(const std::vector<SimplexVector>& q,
                                          double threshold) {
  if (q.empty()) {
    throw invalid_argument_error("build_pseudo_label_graph: empty batch");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw invalid_argument_error("build_pseudo_label_graph: threshold must lie in [0, 1]");
  }
  const std::size_t n = q.size();
  PseudoLabelGraph graph;
  graph.mode = GraphMode::batch;
  graph.threshold = threshold;
  graph.w = Matrix(n, n);
  graph.self_index.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    graph.self_index[b] = b;
    graph.w(b, b) = 1.0;
    for (std::size_t j = b + 1; j < n; ++j) {
      const double sim = q[b].dot(q[j]);
      const double edge = sim >= threshold ? sim : 0.0;
      graph.w(b, j) = edge;
      graph.w(j, b) = edge;
    }
  }
  return graph;
}

EmbeddingGraph build_embedding_graph(const std::vector<UnitVector>& z,
                                     const std::vector<UnitVector>& z_prime,
                                     double t) {
  if (z.empty() || z.size() != z_prime.size()) {
    throw invalid_argument_error("build_embedding_graph: view count mismatch");
  }
  if (!(t > 0.0)) {
    throw invalid_argument_error("build_embedding_graph: temperature must be positive");
  }
  const std::size_t n = z.size();
  EmbeddingGraph graph;
  graph.mode = GraphMode::batch;
  graph.temperature = t;
  graph.w = Matrix(n, n);
  graph.self_index.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    graph.self_index[b] = b;
    for (std::size_t j = 0; j < n; ++j) {
      const double sim = (b == j) ? z[b].dot(z_prime[b]) : z[b].dot(z[j]);
      graph.w(b, j) = std::exp(sim / t);
    }
  }
  return graph;
}

QueueGraphs build_graphs_queue_mode(
    const std::vector<SimplexVector>& q_batch,
    const std::vector<UnitVector>& z_batch,
    const std::vector<UnitVector>& ema_z_prime_batch, const MomentumQueue& queue,
    double threshold, double t) {
  const std::size_t n = q_batch.size();
  if (n == 0 || z_batch.size() != n || ema_z_prime_batch.size() != n) {
    throw invalid_argument_error("build_graphs_queue_mode: batch size mismatch");
  }
  if (!(t > 0.0)) {
    throw invalid_argument_error("build_graphs_queue_mode: temperature must be positive");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw invalid_argument_error("build_graphs_queue_mode: threshold must lie in [0, 1]");
  }
  const std::vector<std::size_t>& positions = queue.last_batch_positions();
  if (positions.size() != n) {
    throw state_error(
        "build_graphs_queue_mode: queue does not hold the current batch (" +
        std::to_string(positions.size()) + " of " + std::to_string(n) +
        " entries present)");
  }
  const std::size_t k = queue.size();

  QueueGraphs graphs;
  graphs.wq.mode = GraphMode::queue;
  graphs.wq.threshold = threshold;
  graphs.wq.w = Matrix(n, k);
  graphs.wq.self_index = positions;
  graphs.wz.mode = GraphMode::queue;
  graphs.wz.temperature = t;
  graphs.wz.w = Matrix(n, k);
  graphs.wz.self_index = positions;

  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t own = positions[b];
    for (std::size_t j = 0; j < k; ++j) {
      if (j == own) {
        graphs.wq.w(b, j) = 1.0;
        graphs.wz.w(b, j) = std::exp(z_batch[b].dot(ema_z_prime_batch[b]) / t);
      } else {
        const double sim = q_batch[b].dot(queue.entry(j).q);
        graphs.wq.w(b, j) = sim >= threshold ? sim : 0.0;
        graphs.wz.w(b, j) = std::exp(z_batch[b].dot(queue.entry(j).z) / t);
      }
    }
  }
  return graphs;
}

double contrastive_loss(const PseudoLabelGraph& wq, const EmbeddingGraph& wz) {
  if (wq.w.rows != wz.w.rows || wq.w.cols != wz.w.cols) {
    throw invalid_argument_error("contrastive_loss: graph shape mismatch");
  }
  if (wq.w.rows == 0) {
    throw invalid_argument_error("contrastive_loss: empty graphs");
  }
  const RowStochasticMatrix wq_hat = row_normalize(wq.w);
  const RowStochasticMatrix wz_hat = row_normalize(wz.w);
  double loss = 0.0;
  for (std::size_t b = 0; b < wq.w.rows; ++b) {
    Vec target(wq.w.cols), pred(wz.w.cols);
    for (std::size_t j = 0; j < wq.w.cols; ++j) {
      target[j] = wq_hat(b, j);
      pred[j] = wz_hat(b, j);
    }
    loss += cross_entropy(SimplexVector(std::move(target)),
                          SimplexVector(std::move(pred)));
  }
  return loss / static_cast<double>(wq.w.rows);
}

DecompositionTerms decomposition_check(const PseudoLabelGraph& wq,
                                       const EmbeddingGraph& wz) {
  if (wq.w.rows != wz.w.rows || wq.w.cols != wz.w.cols) {
    throw invalid_argument_error("decomposition_check: graph shape mismatch");
  }
  if (wq.self_index.size() != wq.w.rows) {
    throw state_error("decomposition_check: missing self-loop index");
  }
  const RowStochasticMatrix wq_hat = row_normalize(wq.w);
  DecompositionTerms terms;
  terms.row_self.resize(wq.w.rows);
  terms.row_peer.resize(wq.w.rows);
  for (std::size_t b = 0; b < wq.w.rows; ++b) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < wz.w.cols; ++j) row_sum += wz.w(b, j);
    const std::size_t self = wq.self_index[b];
    double self_term = 0.0;
    double peer_term = 0.0;
    for (std::size_t j = 0; j < wq.w.cols; ++j) {
      const double weight = wq_hat(b, j);
      if (weight == 0.0) continue;
      const double log_ratio = std::log(wz.w(b, j) / row_sum);
      if (j == self) {
        self_term -= weight * log_ratio;
      } else {
        peer_term -= weight * log_ratio;
      }
    }
    terms.row_self[b] = self_term;
    terms.row_peer[b] = peer_term;
    terms.self_term += self_term;
    terms.peer_term += peer_term;
  }
  terms.self_term /= static_cast<double>(wq.w.rows);
  terms.peer_term /= static_cast<double>(wq.w.rows);
  return terms;
}

double mean_graph_degree(const PseudoLabelGraph& wq) {
  if (wq.w.rows == 0) return 0.0;
  std::size_t edges = 0;
  for (std::size_t b = 0; b < wq.w.rows; ++b) {
    const std::size_t self = wq.self_index.empty() ? b : wq.self_index[b];
    for (std::size_t j = 0; j < wq.w.cols; ++j) {
      if (j != self && wq.w(b, j) > 0.0) ++edges;
    }
  }
  return static_cast<double>(edges) / static_cast<double>(wq.w.rows);
}

}  // namespace comatch
