#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "comatch/numerics.hpp"
#include "comatch/rng.hpp"

namespace comatch {

struct Dataset {
  std::vector<Vec> features;
  std::vector<int> labels;  // class index, or -1 for unlabeled
  std::string split = "train";

  std::size_t size() const { return features.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
  std::size_t num_classes() const;
};

/// Two interleaving unit half-circles (arc centers (0,0) and (1, 0.5)) with
/// isotropic Gaussian noise. n must be even; classes are exactly balanced.
Dataset generate_two_moons(std::size_t n, double noise, std::uint64_t seed);

/// Isotropic Gaussian clusters around the given centers, exactly balanced.
Dataset generate_blobs(std::size_t n, std::size_t classes,
                       const std::vector<Vec>& centers, double sigma,
                       std::uint64_t seed);

struct LabelSplit {
  Dataset labeled;
  Dataset unlabeled;            // labels all -1
  std::vector<int> hidden_labels;  // ground truth for the unlabeled view
};

/// Class-balanced label selection: exactly per_class labeled samples of each
/// class; the remainder becomes the unlabeled set with hidden ground truth.
LabelSplit split_labels(const Dataset& ds, std::size_t per_class,
                        std::uint64_t seed);

struct AugmentPolicy {
  double sigma_weak = 0.05;
  double sigma_strong = 0.15;
  double mask_prob = 0.2;  // per-feature zeroing probability (strong only)

  void validate() const;
};

/// weak(x) = x + N(0, sigma_weak^2 I)
Vec weak_augment(const Vec& x, const AugmentPolicy& policy, Rng& rng);
/// strong(x) = mask(x; mask_prob) + N(0, sigma_strong^2 I)
Vec strong_augment(const Vec& x, const AugmentPolicy& policy, Rng& rng);

struct LabeledBatch {
  std::vector<Vec> x;
  std::vector<int> y;
};

struct UnlabeledBatch {
  std::vector<Vec> x;
  std::vector<int> hidden_y;  // metrics only, never shown to the trainer
};

/// Emits (labeled batch of B, unlabeled batch of mu*B) pairs. Labeled samples
/// are drawn with replacement; unlabeled samples are reshuffled each epoch and
/// drawn without replacement, dropping the final partial batch.
class BatchSampler {
 public:
  BatchSampler(Dataset labeled, Dataset unlabeled, std::vector<int> hidden_labels,
               std::size_t labeled_batch, std::size_t mu, std::uint64_t seed);

  std::pair<LabeledBatch, UnlabeledBatch> next();

  /// Advances the sampler past n batches without materializing them.
  void skip(std::size_t n);

  std::size_t steps_per_epoch() const { return steps_per_epoch_; }
  std::size_t unlabeled_batch_size() const { return unlabeled_batch_; }

 private:
  void reshuffle();

  Dataset labeled_;
  Dataset unlabeled_;
  std::vector<int> hidden_labels_;
  std::size_t labeled_batch_;
  std::size_t unlabeled_batch_;
  std::size_t steps_per_epoch_;
  std::vector<std::size_t> order_;  // current epoch permutation of unlabeled
  std::size_t cursor_ = 0;          // batches consumed in the current epoch
  Rng rng_;
};

/// CSV schema: header "f0,...,f{d-1},label"; label in {-1, 0..C-1}; feature
/// values written with 17 significant digits so read(write(ds)) == ds.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace comatch
