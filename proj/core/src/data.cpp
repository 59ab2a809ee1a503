#include "comatch/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "comatch/errors.hpp"

namespace comatch {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::size_t Dataset::num_classes() const {
  int max_label = -1;
  for (int y : labels) max_label = std::max(max_label, y);
  return static_cast<std::size_t>(max_label + 1);
}

Dataset generate_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n % 2 != 0) {
    throw invalid_argument_error("generate_two_moons: n must be even");
  }
  if (noise < 0.0) {
    throw invalid_argument_error("generate_two_moons: noise must be nonnegative");
  }
  Dataset ds;
  ds.features.reserve(n);
  ds.labels.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i < n / 2 ? 0 : 1;
    const double angle = rng.uniform(0.0, kPi);
    double x, y;
    if (label == 0) {
      x = std::cos(angle);
      y = std::sin(angle);
    } else {
      x = 1.0 - std::cos(angle);
      y = 0.5 - std::sin(angle);
    }
    x += noise * rng.gaussian();
    y += noise * rng.gaussian();
    ds.features.push_back({x, y});
    ds.labels.push_back(label);
  }
  return ds;
}

Dataset generate_blobs(std::size_t n, std::size_t classes,
                       const std::vector<Vec>& centers, double sigma,
                       std::uint64_t seed) {
  if (classes == 0 || centers.size() != classes) {
    throw invalid_argument_error("generate_blobs: need one center per class");
  }
  if (n % classes != 0) {
    throw invalid_argument_error("generate_blobs: n must be divisible by the class count");
  }
  if (sigma < 0.0) {
    throw invalid_argument_error("generate_blobs: sigma must be nonnegative");
  }
  for (std::size_t a = 0; a < classes; ++a) {
    if (centers[a].size() != centers[0].size()) {
      throw invalid_argument_error("generate_blobs: center dimension mismatch");
    }
    for (std::size_t b = a + 1; b < classes; ++b) {
      if (centers[a] == centers[b]) {
        throw invalid_argument_error("generate_blobs: duplicate centers");
      }
    }
  }
  Dataset ds;
  ds.features.reserve(n);
  ds.labels.reserve(n);
  Rng rng(seed);
  const std::size_t per_class = n / classes;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      Vec point = centers[c];
      for (double& v : point) v += sigma * rng.gaussian();
      ds.features.push_back(std::move(point));
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

LabelSplit split_labels(const Dataset& ds, std::size_t per_class,
                        std::uint64_t seed) {
  const std::size_t classes = ds.num_classes();
  if (classes == 0) {
    throw invalid_argument_error("split_labels: dataset has no labels");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] < 0) {
      throw invalid_argument_error("split_labels: dataset already contains unlabeled rows");
    }
    by_class[ds.labels[i]].push_back(i);
  }
  Rng rng(seed);
  std::vector<bool> labeled_mask(ds.size(), false);
  for (auto& [label, indices] : by_class) {
    if (indices.size() < per_class) {
      throw invalid_argument_error("split_labels: class " + std::to_string(label) +
                                   " has fewer than per_class samples");
    }
    rng.shuffle(indices);
    for (std::size_t i = 0; i < per_class; ++i) labeled_mask[indices[i]] = true;
  }
  LabelSplit split;
  split.labeled.split = "train";
  split.unlabeled.split = "train";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (labeled_mask[i]) {
      split.labeled.features.push_back(ds.features[i]);
      split.labeled.labels.push_back(ds.labels[i]);
    } else {
      split.unlabeled.features.push_back(ds.features[i]);
      split.unlabeled.labels.push_back(-1);
      split.hidden_labels.push_back(ds.labels[i]);
    }
  }
  return split;
}

void AugmentPolicy::validate() const {
  if (sigma_weak < 0.0 || sigma_strong < 0.0) {
    throw invalid_argument_error("AugmentPolicy: noise scales must be nonnegative");
  }
  const bool both_zero = sigma_weak == 0.0 && sigma_strong == 0.0;
  if (!both_zero && !(sigma_weak < sigma_strong)) {
    throw invalid_argument_error("AugmentPolicy: strong noise must exceed weak noise");
  }
  if (!(mask_prob >= 0.0 && mask_prob < 1.0)) {
    throw invalid_argument_error("AugmentPolicy: mask_prob must lie in [0, 1)");
  }
}

Vec weak_augment(const Vec& x, const AugmentPolicy& policy, Rng& rng) {
  Vec out = x;
  for (double& v : out) v += policy.sigma_weak * rng.gaussian();
  return out;
}

Vec strong_augment(const Vec& x, const AugmentPolicy& policy, Rng& rng) {
  Vec out = x;
  // Fixed draw count per feature keeps replay deterministic.
  for (double& v : out) {
    const bool masked = rng.uniform() < policy.mask_prob;
    if (masked) v = 0.0;
  }
  for (double& v : out) v += policy.sigma_strong * rng.gaussian();
  return out;
}

BatchSampler::BatchSampler(Dataset labeled, Dataset unlabeled,
                           std::vector<int> hidden_labels,
                           std::size_t labeled_batch, std::size_t mu,
                           std::uint64_t seed)
    : labeled_(std::move(labeled)),
      unlabeled_(std::move(unlabeled)),
      hidden_labels_(std::move(hidden_labels)),
      labeled_batch_(labeled_batch),
      unlabeled_batch_(mu * labeled_batch),
      rng_(seed) {
  if (labeled_.size() == 0) {
    throw invalid_argument_error("BatchSampler: labeled set is empty");
  }
  if (labeled_batch_ == 0 || mu == 0) {
    throw invalid_argument_error("BatchSampler: batch sizes must be positive");
  }
  if (unlabeled_.size() < unlabeled_batch_) {
    throw invalid_argument_error("BatchSampler: unlabeled set smaller than mu*B");
  }
  if (!hidden_labels_.empty() && hidden_labels_.size() != unlabeled_.size()) {
    throw invalid_argument_error("BatchSampler: hidden label count mismatch");
  }
  steps_per_epoch_ = unlabeled_.size() / unlabeled_batch_;
  order_.resize(unlabeled_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  reshuffle();
}

void BatchSampler::reshuffle() {
  rng_.shuffle(order_);
  cursor_ = 0;
}

std::pair<LabeledBatch, UnlabeledBatch> BatchSampler::next() {
  if (cursor_ >= steps_per_epoch_) reshuffle();
  LabeledBatch lb;
  lb.x.reserve(labeled_batch_);
  lb.y.reserve(labeled_batch_);
  for (std::size_t i = 0; i < labeled_batch_; ++i) {
    const std::size_t k = rng_.uniform_index(labeled_.size());
    lb.x.push_back(labeled_.features[k]);
    lb.y.push_back(labeled_.labels[k]);
  }
  UnlabeledBatch ub;
  ub.x.reserve(unlabeled_batch_);
  const std::size_t start = cursor_ * unlabeled_batch_;
  for (std::size_t i = 0; i < unlabeled_batch_; ++i) {
    const std::size_t k = order_[start + i];
    ub.x.push_back(unlabeled_.features[k]);
    if (!hidden_labels_.empty()) ub.hidden_y.push_back(hidden_labels_[k]);
  }
  ++cursor_;
  return {std::move(lb), std::move(ub)};
}

void BatchSampler::skip(std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (cursor_ >= steps_per_epoch_) reshuffle();
    // Replay the labeled draws so the stream stays aligned.
    for (std::size_t j = 0; j < labeled_batch_; ++j) {
      rng_.uniform_index(labeled_.size());
    }
    ++cursor_;
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw parse_error("read_dataset_csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw parse_error(path + ": line 1: missing header");
  }
  std::size_t dim = 0;
  {
    std::stringstream header(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(header, field, ',')) fields.push_back(field);
    if (fields.size() < 2 || fields.back() != "label") {
      throw parse_error(path + ": line 1: header must be f0,...,f{d-1},label");
    }
    dim = fields.size() - 1;
    for (std::size_t i = 0; i < dim; ++i) {
      if (fields[i] != "f" + std::to_string(i)) {
        throw parse_error(path + ": line 1: unexpected column name '" + fields[i] + "'");
      }
    }
  }
  Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != dim + 1) {
      throw parse_error(path + ": line " + std::to_string(line_no) + ": expected " +
                        std::to_string(dim + 1) + " fields, got " +
                        std::to_string(fields.size()));
    }
    Vec features(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      try {
        std::size_t consumed = 0;
        features[i] = std::stod(fields[i], &consumed);
        if (consumed != fields[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw parse_error(path + ": line " + std::to_string(line_no) +
                          ": bad numeric value '" + fields[i] + "'");
      }
    }
    int label = 0;
    try {
      std::size_t consumed = 0;
      label = std::stoi(fields[dim], &consumed);
      if (consumed != fields[dim].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw parse_error(path + ": line " + std::to_string(line_no) +
                        ": bad label '" + fields[dim] + "'");
    }
    if (label < -1) {
      throw parse_error(path + ": line " + std::to_string(line_no) +
                        ": label must be -1 or a class index");
    }
    ds.features.push_back(std::move(features));
    ds.labels.push_back(label);
  }
  return ds;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw parse_error("write_dataset_csv: cannot open " + path);
  }
  const std::size_t dim = ds.dim();
  for (std::size_t i = 0; i < dim; ++i) {
    out << "f" << i << ",";
  }
  out << "label\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (ds.features[r].size() != dim) {
      throw invalid_argument_error("write_dataset_csv: ragged feature rows");
    }
    for (std::size_t i = 0; i < dim; ++i) {
      out << format_double(ds.features[r][i]) << ",";
    }
    out << ds.labels[r] << "\n";
  }
  if (!out) {
    throw parse_error("write_dataset_csv: write failure on " + path);
  }
}

}  // namespace comatch
