#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "comatch/numerics.hpp"

namespace comatch {

struct BankEntry {
  SimplexVector p;  // class probability of the weak augmentation
  UnitVector z;     // embedding of the weak augmentation
  bool labeled = false;
};

/// FIFO store of the past K weak-augmentation (probability, embedding) pairs,
/// holding both labeled and unlabeled entries.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity);

  void push(BankEntry entry);
  void push(std::vector<BankEntry> entries);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }

  /// Index 0 is the oldest entry.
  const BankEntry& entry(std::size_t i) const { return entries_[i]; }

 private:
  std::size_t capacity_;
  std::deque<BankEntry> entries_;
};

/// Moving-average class marginal used to rescale unlabeled predictions so
/// they cannot collapse onto a few classes.
class DistributionAligner {
 public:
  DistributionAligner(std::size_t classes, double rho);
  DistributionAligner(SimplexVector running_mean, double rho);

  /// Normalize(p / running_mean), then update the running mean with p itself.
  SimplexVector align(const SimplexVector& p);

  /// Aligns every prediction against the current running mean, then applies
  /// a single update with the batch mean of the raw predictions.
  std::vector<SimplexVector> align_batch(const std::vector<SimplexVector>& batch);

  const SimplexVector& running_mean() const { return mean_; }
  double rho() const { return rho_; }

  friend bool operator==(const DistributionAligner& a,
                         const DistributionAligner& b) {
    return a.mean_ == b.mean_ && a.rho_ == b.rho_;
  }

 private:
  SimplexVector align_only(const SimplexVector& p) const;
  void update(const SimplexVector& batch_mean);

  SimplexVector mean_;
  double rho_;
};

/// Softmax affinity of an embedding against every bank entry:
/// a_k = exp(z . z_k / t) / sum_k exp(z . z_k / t).
SimplexVector affinity(const UnitVector& z, const MemoryBank& bank, double t);

/// Memory-smoothed pseudo-label, the closed-form minimizer
/// q = alpha * p + (1 - alpha) * sum_k a_k * p_k.
SimplexVector smooth_pseudo_label(const SimplexVector& p,
                                  const SimplexVector& affinity_weights,
                                  const MemoryBank& bank, double alpha);

/// True iff the largest class probability reaches tau (inclusive).
bool confidence_mask(const SimplexVector& q, double tau);

}  // namespace comatch
