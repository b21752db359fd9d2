#pragma once

// Surrogate training on ranked lists: per-list ranking loss, gradients
// through the network, Adam updates, best-validation checkpoint selection.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rankmbo/data.hpp"
#include "rankmbo/diffnet.hpp"
#include "rankmbo/error.hpp"
#include "rankmbo/losses.hpp"
#include "rankmbo/rng.hpp"

namespace rankmbo {

struct TrainConfig {
  LossSpec loss;
  int epochs = 100;
  double learning_rate = 3e-4;
  double weight_decay = 1e-5;
  std::size_t batch_lists = 32;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {64, 64};  // empty: single affine layer
  double validation_ratio = 0.2;

  void validate() const {
    loss.validate();
    require(epochs >= 1, "epochs must be at least 1");
    require(learning_rate > 0.0, "learning rate must be positive");
    require(weight_decay >= 0.0, "weight decay must be non-negative");
    require(batch_lists >= 1, "batch size must be at least 1 list");
    require(validation_ratio > 0.0 && validation_ratio < 1.0, "validation ratio must lie in (0, 1)");
    for (int w : hidden) require(w >= 1, "hidden widths must be positive");
  }
};

// Seed streams derived from TrainConfig::seed.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kShuffleStream = 2;

struct TrainRecord {
  std::vector<double> train_loss;  // mean list loss over each epoch's updates
  std::vector<double> val_loss;    // mean list loss on validation after each epoch
  std::size_t best_epoch = 0;      // 0-based
  double best_val_loss = std::numeric_limits<double>::infinity();

  void write_csv(std::ostream& os) const {
    const auto old = os.precision(17);
    os << "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < train_loss.size(); ++e)
      os << e << "," << train_loss[e] << "," << val_loss[e] << "\n";
    os.precision(old);
  }
};

struct TrainResult {
  DenseNet net;  // best-validation checkpoint
  TrainRecord record;
};

inline Vector predict_dataset(const DenseNet& net, const OfflineDataset& ds) {
  require(ds.size() >= 1, "cannot predict an empty dataset");
  return net.forward_batch(ds.designs);
}

inline std::vector<Vector> prepared_labels(const RankTrainSet& set, LossKind kind) {
  std::vector<Vector> out;
  out.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) out.push_back(prepare_labels(kind, set.list_scores(i)));
  return out;
}

// Mean over lists of the loss on each list.
inline double mean_list_loss(const DenseNet& net, const RankTrainSet& set, const LossSpec& loss) {
  set.validate();
  double total = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Vector f = net.forward_batch(set.list_designs(i));
    total += loss_value(loss, prepare_labels(loss.kind, set.list_scores(i)), f);
  }
  return total / static_cast<double>(set.size());
}

inline TrainResult train(const RankTrainSet& trainset, const RankTrainSet& valset,
                         const TrainConfig& cfg, std::optional<DenseNet> initial = std::nullopt) {
  cfg.validate();
  trainset.validate();
  valset.validate();
  require(trainset.list_length == valset.list_length,
          "training and validation lists must share one length");
  require(trainset.source->dim() == valset.source->dim(),
          "training and validation designs differ in dimension");

  DenseNet net = initial ? std::move(*initial)
                         : DenseNet::initialized(static_cast<int>(trainset.source->dim()), cfg.hidden,
                                                 Rng::mix(cfg.seed, kInitStream));
  require(net.input_dim() == trainset.source->dim(), "initial network input does not match data");

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  adam_cfg.weight_decay = cfg.weight_decay;
  AdamState adam(adam_cfg);
  Rng order_rng(Rng::mix(cfg.seed, kShuffleStream));

  const auto labels = prepared_labels(trainset, cfg.loss.kind);
  const std::size_t n = trainset.size();
  const auto m = static_cast<Eigen::Index>(trainset.list_length);
  const Eigen::Index d = trainset.source->dim();

  TrainResult result;
  TrainRecord& record = result.record;
  Matrix batch_designs;
  Vector out_grads;
  ForwardCache cache;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = order_rng.permutation(n);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_lists) {
      const std::size_t count = std::min(cfg.batch_lists, n - start);
      batch_designs.resize(static_cast<Eigen::Index>(count) * m, d);
      for (std::size_t b = 0; b < count; ++b) {
        const auto& rows = trainset.lists[order[start + b]];
        for (Eigen::Index r = 0; r < m; ++r)
          batch_designs.row(static_cast<Eigen::Index>(b) * m + r) =
              trainset.source->designs.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));
      }
      const Vector f = net.forward_batch(batch_designs, &cache);
      out_grads.resize(f.size());
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t list = order[start + b];
        const auto seg = static_cast<Eigen::Index>(b) * m;
        const LossResult lr = evaluate_loss(cfg.loss, labels[list], f.segment(seg, m));
        if (!std::isfinite(lr.value) || !lr.grad.allFinite())
          throw TrainingAborted("non-finite loss at epoch " + std::to_string(epoch) + ", list " +
                                std::to_string(list));
        epoch_loss += lr.value;
        out_grads.segment(seg, m) = lr.grad / static_cast<double>(count);
      }
      const ParamSet grads = net.backward(cache, out_grads);
      adam.step(net.parameters(), grads);
      if (!net.all_finite())
        throw TrainingAborted("non-finite parameters after update at epoch " + std::to_string(epoch));
    }
    const double val = mean_list_loss(net, valset, cfg.loss);
    if (!std::isfinite(val))
      throw TrainingAborted("non-finite validation loss at epoch " + std::to_string(epoch));
    record.train_loss.push_back(epoch_loss / static_cast<double>(n));
    record.val_loss.push_back(val);
    if (val < record.best_val_loss) {
      record.best_val_loss = val;
      record.best_epoch = static_cast<std::size_t>(epoch);
      result.net = net;
    }
  }
  return result;
}

}  // namespace rankmbo
