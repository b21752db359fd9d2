#pragma once

// Ranking losses over one list: labels y and predictions f of equal length.
// Each loss reports its value and the analytic gradient with respect to f.
//
//   pointwise: sce, bce, mse
//   pairwise:  ranknet, lambdarank, rankcosine
//   listwise:  softmax, listnet, listmle, approxndcg
//
// Pairwise sums run over pairs with y_i > y_j (ties contribute nothing) and
// use the orientation that rewards scoring the better item higher.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "rankmbo/error.hpp"

namespace rankmbo {

enum class LossKind {
  sce,
  bce,
  mse,
  ranknet,
  lambdarank,
  rankcosine,
  softmax,
  listnet,
  listmle,
  approxndcg,
};

inline constexpr std::array<LossKind, 10> kAllLosses = {
    LossKind::sce,        LossKind::bce,     LossKind::mse,     LossKind::ranknet,
    LossKind::lambdarank, LossKind::rankcosine, LossKind::softmax, LossKind::listnet,
    LossKind::listmle,    LossKind::approxndcg,
};

inline std::string_view loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::sce: return "sce";
    case LossKind::bce: return "bce";
    case LossKind::mse: return "mse";
    case LossKind::ranknet: return "ranknet";
    case LossKind::lambdarank: return "lambdarank";
    case LossKind::rankcosine: return "rankcosine";
    case LossKind::softmax: return "softmax";
    case LossKind::listnet: return "listnet";
    case LossKind::listmle: return "listmle";
    case LossKind::approxndcg: return "approxndcg";
  }
  return "unknown";
}

inline LossKind parse_loss(std::string_view name) {
  for (LossKind kind : kAllLosses)
    if (loss_name(kind) == name) return kind;
  throw InvalidInput("unknown loss '" + std::string(name) + "'");
}

struct LossSpec {
  LossKind kind = LossKind::listnet;
  double lambdarank_alpha = 1.0;
  double approx_temperature = 1.0;

  void validate() const {
    require(lambdarank_alpha > 0.0, "lambdarank alpha must be positive");
    require(approx_temperature > 0.0, "approxndcg temperature must be positive");
  }
};

// Losses whose formulas need labels in [0, 1]: cross-entropy targets and
// 2^y - 1 gains. Softmax is included because its label weights must be
// non-negative for the loss to be bounded below.
inline bool needs_unit_labels(LossKind kind) {
  switch (kind) {
    case LossKind::sce:
    case LossKind::bce:
    case LossKind::lambdarank:
    case LossKind::approxndcg:
    case LossKind::softmax:
      return true;
    default:
      return false;
  }
}

// Per-list min-max scaling to [0, 1]; a constant list maps to zeros.
inline Eigen::VectorXd minmax_labels(const Eigen::Ref<const Eigen::VectorXd>& y) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(y.size());
  if (y.size() == 0) return out;
  const double lo = y.minCoeff();
  const double hi = y.maxCoeff();
  if (hi > lo) out = (y.array() - lo) / (hi - lo);
  return out;
}

inline Eigen::VectorXd prepare_labels(LossKind kind, const Eigen::Ref<const Eigen::VectorXd>& y) {
  return needs_unit_labels(kind) ? minmax_labels(y) : Eigen::VectorXd(y);
}

namespace detail {

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double peak = v.maxCoeff();
  return peak + std::log((v.array() - peak).exp().sum());
}

inline Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::VectorXd e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

inline void check_pair(const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& f) {
  require(y.size() >= 1, "ranking list must be nonempty");
  require(y.size() == f.size(), "labels and predictions differ in length");
  require(y.allFinite() && f.allFinite(), "labels and predictions must be finite");
}

// Indices sorted by value descending; equal values keep ascending index.
inline std::vector<Eigen::Index> descending_order(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v(a) > v(b); });
  return order;
}

inline double gain(double label) { return std::exp2(label) - 1.0; }

inline double discount(std::size_t position) {  // position is 0-based
  return 1.0 / std::log2(static_cast<double>(position) + 2.0);
}

}  // namespace detail

// DCG of labels already listed in ranked order (position 0 is the top).
inline double dcg(const Eigen::Ref<const Eigen::VectorXd>& ranked_labels) {
  require(ranked_labels.size() >= 1, "dcg needs at least one label");
  double total = 0.0;
  for (Eigen::Index i = 0; i < ranked_labels.size(); ++i)
    total += detail::gain(ranked_labels(i)) * detail::discount(static_cast<std::size_t>(i));
  return total;
}

inline double ideal_dcg(const Eigen::Ref<const Eigen::VectorXd>& labels) {
  Eigen::VectorXd sorted = labels;
  std::sort(sorted.data(), sorted.data() + sorted.size(), std::greater<>());
  return dcg(sorted);
}

// |NDCG after swapping ranked positions i and j - NDCG before|. Zero when the
// ideal DCG vanishes.
inline double delta_ndcg(const Eigen::Ref<const Eigen::VectorXd>& ranked_labels, Eigen::Index i,
                         Eigen::Index j) {
  const Eigen::Index m = ranked_labels.size();
  require(m >= 1, "delta_ndcg needs at least one label");
  require(i >= 0 && i < m && j >= 0 && j < m, "delta_ndcg position out of range");
  const double idcg = ideal_dcg(ranked_labels);
  if (idcg <= 0.0) return 0.0;
  const double gain_diff = detail::gain(ranked_labels(i)) - detail::gain(ranked_labels(j));
  const double disc_diff = detail::discount(static_cast<std::size_t>(i)) -
                           detail::discount(static_cast<std::size_t>(j));
  return std::abs(gain_diff * disc_diff) / idcg;
}

// Smooth ranks: rank(i) = 1/2 + sum_j sigmoid((f_j - f_i) / T). The top
// scored item approaches rank 1 as T -> 0.
inline Eigen::VectorXd approx_ranks(const Eigen::Ref<const Eigen::VectorXd>& f, double temperature) {
  require(temperature > 0.0, "temperature must be positive");
  require(f.size() >= 1, "approx_ranks needs a nonempty list");
  const Eigen::Index m = f.size();
  Eigen::VectorXd ranks = Eigen::VectorXd::Constant(m, 0.5);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) ranks(i) += detail::sigmoid((f(j) - f(i)) / temperature);
  return ranks;
}

struct LossResult {
  double value = 0.0;
  Eigen::VectorXd grad;
};

// Value and gradient in one pass. Labels are used as given; callers apply
// prepare_labels() where the loss needs unit-range labels.
inline LossResult evaluate_loss(const LossSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& y,
                                const Eigen::Ref<const Eigen::VectorXd>& f) {
  using detail::sigmoid;
  using detail::softplus;
  spec.validate();
  detail::check_pair(y, f);
  const Eigen::Index m = y.size();
  LossResult out;
  out.grad = Eigen::VectorXd::Zero(m);
  switch (spec.kind) {
    case LossKind::sce: {
      for (Eigen::Index i = 0; i < m; ++i) {
        out.value += -y(i) * f(i) + softplus(f(i));
        out.grad(i) = sigmoid(f(i)) - y(i);
      }
      break;
    }
    case LossKind::bce: {
      // log sigmoid(f) = -softplus(-f), log(1 - sigmoid(f)) = -softplus(f)
      for (Eigen::Index i = 0; i < m; ++i) {
        out.value += y(i) * softplus(-f(i)) + (1.0 - y(i)) * softplus(f(i));
        out.grad(i) = -y(i) * sigmoid(-f(i)) + (1.0 - y(i)) * sigmoid(f(i));
      }
      break;
    }
    case LossKind::mse: {
      const Eigen::VectorXd r = f - y;
      out.value = r.squaredNorm();
      out.grad = 2.0 * r;
      break;
    }
    case LossKind::ranknet: {
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
          if (!(y(i) > y(j))) continue;
          const double diff = f(i) - f(j);
          out.value += softplus(-diff);
          const double s = sigmoid(-diff);
          out.grad(i) -= s;
          out.grad(j) += s;
        }
      break;
    }
    case LossKind::lambdarank: {
      // Delta-NDCG weights come from the current predicted ranking and are
      // held constant when differentiating.
      const auto order = detail::descending_order(f);
      std::vector<Eigen::Index> position(static_cast<std::size_t>(m));
      for (Eigen::Index p = 0; p < m; ++p)
        position[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = p;
      const double alpha = spec.lambdarank_alpha;
      const double idcg = ideal_dcg(y);
      if (idcg <= 0.0) break;
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
          if (!(y(i) > y(j))) continue;
          const auto pi = static_cast<std::size_t>(position[static_cast<std::size_t>(i)]);
          const auto pj = static_cast<std::size_t>(position[static_cast<std::size_t>(j)]);
          const double weight = std::abs((detail::gain(y(i)) - detail::gain(y(j))) *
                                         (detail::discount(pi) - detail::discount(pj))) /
                                idcg;
          if (weight == 0.0) continue;
          const double diff = f(i) - f(j);
          out.value += weight * softplus(-alpha * diff) / std::log(2.0);
          const double s = weight * alpha * sigmoid(-alpha * diff) / std::log(2.0);
          out.grad(i) -= s;
          out.grad(j) += s;
        }
      break;
    }
    case LossKind::rankcosine: {
      constexpr double kNormFloor = 1e-12;
      const double ny = std::max(y.norm(), kNormFloor);
      const double raw_nf = f.norm();
      const double nf = std::max(raw_nf, kNormFloor);
      const double dot = y.dot(f);
      out.value = 1.0 - dot / (ny * nf);
      if (raw_nf > kNormFloor) {
        out.grad = -(y / (ny * nf) - dot * f / (ny * nf * nf * nf));
      } else {
        out.grad = -y / (ny * nf);
      }
      break;
    }
    case LossKind::softmax: {
      const double lse = detail::log_sum_exp(f);
      const Eigen::VectorXd p = detail::softmax(f);
      out.value = -(y.array() * (f.array() - lse)).sum();
      out.grad = y.sum() * p - y;
      break;
    }
    case LossKind::listnet: {
      const Eigen::VectorXd target = detail::softmax(y);
      const double lse = detail::log_sum_exp(f);
      out.value = -(target.array() * (f.array() - lse)).sum();
      out.grad = detail::softmax(f) - target;
      break;
    }
    case LossKind::listmle: {
      // Plackett-Luce negative log-likelihood of the label order.
      const auto order = detail::descending_order(y);
      Eigen::VectorXd ordered(m);
      for (Eigen::Index p = 0; p < m; ++p) ordered(p) = f(order[static_cast<std::size_t>(p)]);
      Eigen::VectorXd suffix_lse(m);
      double running = ordered(m - 1);
      suffix_lse(m - 1) = running;
      for (Eigen::Index p = m - 2; p >= 0; --p) {
        const double hi = std::max(running, ordered(p));
        running = hi + std::log(std::exp(running - hi) + std::exp(ordered(p) - hi));
        suffix_lse(p) = running;
      }
      // d/df_{pi(k)} = sum_{p<=k} exp(f_{pi(k)} - lse_p) - 1, accumulated as
      // exp(f_{pi(k)} - lse_k) * c_k with c_k = sum_{p<=k} exp(lse_k - lse_p).
      double c = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) {
        out.value += suffix_lse(k) - ordered(k);
        c = (k == 0 ? 0.0 : c * std::exp(suffix_lse(k) - suffix_lse(k - 1))) + 1.0;
        out.grad(order[static_cast<std::size_t>(k)]) = std::exp(ordered(k) - suffix_lse(k)) * c - 1.0;
      }
      break;
    }
    case LossKind::approxndcg: {
      const double idcg = ideal_dcg(y);
      if (idcg <= 0.0) break;
      const double t = spec.approx_temperature;
      const Eigen::VectorXd ranks = approx_ranks(f, t);
      // loss = -(1/idcg) sum_i g_i / log2(1 + r_i)
      // coef_i = d loss / d r_i
      Eigen::VectorXd coef(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const double g = detail::gain(y(i));
        const double l1 = std::log1p(ranks(i));
        out.value -= g * std::log(2.0) / l1;
        coef(i) = g * std::log(2.0) / ((1.0 + ranks(i)) * l1 * l1);
      }
      out.value /= idcg;
      coef /= idcg;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (coef(i) == 0.0) continue;
        for (Eigen::Index j = 0; j < m; ++j) {
          if (j == i) continue;
          const double s = sigmoid((f(j) - f(i)) / t);
          const double ds = s * (1.0 - s) / t;  // d r_i / d f_j
          out.grad(j) += coef(i) * ds;
          out.grad(i) -= coef(i) * ds;
        }
      }
      break;
    }
  }
  return out;
}

inline double loss_value(const LossSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& y,
                         const Eigen::Ref<const Eigen::VectorXd>& f) {
  return evaluate_loss(spec, y, f).value;
}

inline Eigen::VectorXd loss_grad(const LossSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& f) {
  return evaluate_loss(spec, y, f).grad;
}

}  // namespace rankmbo
