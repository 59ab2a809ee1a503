#include "comatch/pseudolabel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "comatch/errors.hpp"

namespace comatch {

namespace {

/// Floor applied to running-mean entries before division.
constexpr double kAlignFloor = 1e-6;

}  // namespace

MemoryBank::MemoryBank(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw invalid_argument_error("MemoryBank: capacity must be positive");
  }
}

void MemoryBank::push(BankEntry entry) {
  entries_.push_back(std::move(entry));
  if (entries_.size() > capacity_) entries_.pop_front();
}

void MemoryBank::push(std::vector<BankEntry> entries) {
  for (BankEntry& e : entries) push(std::move(e));
}

DistributionAligner::DistributionAligner(std::size_t classes, double rho)
    : DistributionAligner(SimplexVector::uniform(classes), rho) {}

DistributionAligner::DistributionAligner(SimplexVector running_mean, double rho)
    : mean_(std::move(running_mean)), rho_(rho) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw invalid_argument_error("DistributionAligner: rho must lie in [0, 1)");
  }
}

SimplexVector DistributionAligner::align_only(const SimplexVector& p) const {
  if (p.size() != mean_.size()) {
    throw invalid_argument_error("distribution_align: dimension mismatch");
  }
  Vec scaled(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    scaled[i] = p[i] / std::max(mean_[i], kAlignFloor);
    sum += scaled[i];
  }
  for (double& v : scaled) v /= sum;
  return SimplexVector(std::move(scaled));
}

void DistributionAligner::update(const SimplexVector& batch_mean) {
  Vec next(mean_.size());
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    next[i] = rho_ * mean_[i] + (1.0 - rho_) * batch_mean[i];
  }
  mean_ = SimplexVector(std::move(next));
}

SimplexVector DistributionAligner::align(const SimplexVector& p) {
  SimplexVector aligned = align_only(p);
  update(p);
  return aligned;
}

std::vector<SimplexVector> DistributionAligner::align_batch(
    const std::vector<SimplexVector>& batch) {
  if (batch.empty()) return {};
  std::vector<SimplexVector> aligned;
  aligned.reserve(batch.size());
  Vec mean(batch.front().size(), 0.0);
  for (const SimplexVector& p : batch) {
    aligned.push_back(align_only(p));
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i];
  }
  for (double& v : mean) v /= static_cast<double>(batch.size());
  update(SimplexVector(std::move(mean)));
  return aligned;
}

SimplexVector affinity(const UnitVector& z, const MemoryBank& bank, double t) {
  if (bank.empty()) {
    throw degenerate_input_error("affinity: memory bank is empty");
  }
  Vec dots(bank.size());
  for (std::size_t k = 0; k < bank.size(); ++k) {
    dots[k] = z.dot(bank.entry(k).z);
  }
  return softmax(dots, t);
}

SimplexVector smooth_pseudo_label(const SimplexVector& p,
                                  const SimplexVector& affinity_weights,
                                  const MemoryBank& bank, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw invalid_argument_error("smooth_pseudo_label: alpha must lie in [0, 1]");
  }
  if (affinity_weights.size() != bank.size()) {
    throw invalid_argument_error(
        "smooth_pseudo_label: affinity weights do not match bank size (" +
        std::to_string(affinity_weights.size()) + " vs " +
        std::to_string(bank.size()) + ")");
  }
  Vec q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[i] = alpha * p[i];
  for (std::size_t k = 0; k < bank.size(); ++k) {
    const SimplexVector& pk = bank.entry(k).p;
    if (pk.size() != p.size()) {
      throw invalid_argument_error("smooth_pseudo_label: bank entry dimension mismatch");
    }
    const double w = (1.0 - alpha) * affinity_weights[k];
    for (std::size_t i = 0; i < p.size(); ++i) q[i] += w * pk[i];
  }
  return SimplexVector(std::move(q));
}

bool confidence_mask(const SimplexVector& q, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw invalid_argument_error("confidence_mask: tau must lie in (0, 1]");
  }
  return q.max_value() >= tau;
}

}  // namespace comatch
