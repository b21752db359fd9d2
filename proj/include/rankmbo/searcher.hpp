#pragma once

// Output adaptation and gradient-ascent design search.
//
// The trained surrogate is rescaled by the mean and std of its predictions
// over the offline data, then each start design climbs the gradient of the
// rescaled prediction for T steps.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "rankmbo/data.hpp"
#include "rankmbo/diffnet.hpp"
#include "rankmbo/error.hpp"
#include "rankmbo/trainer.hpp"

namespace rankmbo {

class AdaptedModel {
 public:
  AdaptedModel(DenseNet net, double mean, double std) : net_(std::move(net)), mean_(mean), std_(std) {
    require(std_ > 0.0 && std::isfinite(std_), "adaptation std must be positive");
    require(std::isfinite(mean_), "adaptation mean must be finite");
  }

  const DenseNet& net() const { return net_; }
  double mean() const { return mean_; }
  double std() const { return std_; }

  double value(const Eigen::Ref<const Vector>& x) const { return (net_.forward(x) - mean_) / std_; }

  Vector values(const Eigen::Ref<const Matrix>& designs) const {
    return (net_.forward_batch(designs).array() - mean_) / std_;
  }

  Vector gradient(const Eigen::Ref<const Vector>& x) const { return net_.grad_input(x) / std_; }

 private:
  DenseNet net_;
  double mean_;
  double std_;
};

inline constexpr double kDegenerateStd = 1e-12;

inline AdaptedModel adapt(const DenseNet& net, const OfflineDataset& ds) {
  const Vector preds = predict_dataset(net, ds);
  const double mean = preds.mean();
  const double sd = std::sqrt((preds.array() - mean).square().mean());
  if (!(sd > kDegenerateStd))
    throw DegenerateModel("surrogate predictions have zero spread over the dataset");
  return AdaptedModel(net, mean, sd);
}

enum class AscentRule { plain, adam };

inline const char* ascent_rule_name(AscentRule r) { return r == AscentRule::plain ? "plain" : "adam"; }

inline AscentRule parse_ascent_rule(const std::string& name) {
  if (name == "plain") return AscentRule::plain;
  if (name == "adam") return AscentRule::adam;
  throw InvalidInput("unknown ascent rule '" + name + "'");
}

struct SearchConfig {
  double step_size = 1e-3;
  int steps = 200;
  AscentRule rule = AscentRule::adam;
  std::size_t k = 128;
  std::uint64_t seed = 0;

  void validate() const {
    require(step_size > 0.0, "search step size must be positive");
    require(steps >= 0, "search step count must be non-negative");
    require(k >= 1, "search needs at least one start");
  }
};

struct SearchResult {
  Matrix finals;                  // k x d
  std::vector<Matrix> trajectory; // T + 1 snapshots when recorded, starts first
};

// Indices of the k best-scoring rows, best first, ties by ascending index.
inline std::vector<std::size_t> top_k_rows(const OfflineDataset& ds, std::size_t k) {
  const auto n = static_cast<std::size_t>(ds.size());
  require(k >= 1 && k <= n, "k must lie in [1, N]");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ds.scores(static_cast<Eigen::Index>(a)) > ds.scores(static_cast<Eigen::Index>(b));
  });
  order.resize(k);
  return order;
}

inline Matrix select_starts(const OfflineDataset& ds, std::size_t k) {
  return subset(ds, top_k_rows(ds, k)).designs;
}

// Independent ascent from every start row.
inline SearchResult ascend(const AdaptedModel& model, const SearchConfig& cfg,
                           const Eigen::Ref<const Matrix>& starts, bool record_trajectory = false) {
  cfg.validate();
  require(starts.cols() == model.net().input_dim(), "start designs do not match model input");
  SearchResult out;
  out.finals = starts;
  if (record_trajectory) out.trajectory.push_back(out.finals);
  std::vector<AdamState> optimizers;
  if (cfg.rule == AscentRule::adam) {
    AdamConfig ac;
    ac.learning_rate = cfg.step_size;
    optimizers.assign(static_cast<std::size_t>(starts.rows()), AdamState(ac));
  }
  for (int t = 0; t < cfg.steps; ++t) {
    for (Eigen::Index r = 0; r < out.finals.rows(); ++r) {
      Vector x = out.finals.row(r).transpose();
      const Vector g = model.gradient(x);
      if (!g.allFinite())
        throw SearchAborted("non-finite search gradient at step " + std::to_string(t) +
                              " for start " + std::to_string(r));
      if (cfg.rule == AscentRule::plain) {
        x += cfg.step_size * g;
      } else {
        // Adam minimizes; ascend by feeding the negated gradient.
        const Vector neg = -g;
        optimizers[static_cast<std::size_t>(r)].step(x, neg);
      }
      out.finals.row(r) = x.transpose();
    }
    if (record_trajectory) out.trajectory.push_back(out.finals);
  }
  return out;
}

// Long-format trajectory log: step,start,x0..x{d-1}.
inline void write_trajectory_csv(std::ostream& os, const std::vector<Matrix>& trajectory) {
  if (trajectory.empty()) return;
  const Eigen::Index d = trajectory.front().cols();
  os << "step,start";
  for (Eigen::Index c = 0; c < d; ++c) os << ",x" << c;
  os << "\n";
  const auto old = os.precision(17);
  for (std::size_t t = 0; t < trajectory.size(); ++t)
    for (Eigen::Index r = 0; r < trajectory[t].rows(); ++r) {
      os << t << "," << r;
      for (Eigen::Index c = 0; c < d; ++c) os << "," << trajectory[t](r, c);
      os << "\n";
    }
  os.precision(old);
}

}  // namespace rankmbo
