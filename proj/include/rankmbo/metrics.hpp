#pragma once

// Surrogate evaluation: Precision@k, AUPCC, MSE, Spearman and NDCG.
//
// top_k of a score vector is the first k entries of its descending order,
// with equal scores kept in ascending index order.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "rankmbo/error.hpp"
#include "rankmbo/losses.hpp"

namespace rankmbo {

enum class EvalSource { in_distribution, ood };

struct EvalSet {
  Eigen::VectorXd predictions;
  Eigen::VectorXd truths;
  EvalSource source = EvalSource::ood;

  void validate() const {
    require(predictions.size() == truths.size(), "predictions and truths differ in length");
    require(predictions.size() >= 2, "evaluation needs at least two items");
    require(predictions.allFinite() && truths.allFinite(), "evaluation values must be finite");
  }
};

struct MetricReport {
  std::size_t n = 0;
  double mse = 0.0;
  double aupcc = 0.0;
  double spearman = 0.0;
  double ndcg = 0.0;

  static constexpr const char* kCsvHeader = "n,mse,aupcc,spearman,ndcg";
};

inline std::vector<Eigen::Index> top_order(const Eigen::Ref<const Eigen::VectorXd>& values) {
  return detail::descending_order(values);
}

// Precision@k for every k in 1..N; entry k-1 holds Precision@k.
inline std::vector<double> precision_curve(const EvalSet& eval) {
  eval.validate();
  const auto n = static_cast<std::size_t>(eval.predictions.size());
  const auto pred_order = top_order(eval.predictions);
  const auto true_order = top_order(eval.truths);
  std::vector<char> in_pred(n, 0), in_true(n, 0);
  std::vector<double> curve(n);
  std::size_t overlap = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto p = static_cast<std::size_t>(pred_order[k]);
    const auto t = static_cast<std::size_t>(true_order[k]);
    in_pred[p] = 1;
    if (in_true[p]) ++overlap;
    in_true[t] = 1;
    if (in_pred[t]) ++overlap;
    curve[k] = static_cast<double>(overlap) / static_cast<double>(k + 1);
  }
  return curve;
}

inline double precision_at_k(const EvalSet& eval, std::size_t k) {
  eval.validate();
  require(k >= 1 && k <= static_cast<std::size_t>(eval.predictions.size()),
          "precision_at_k requires 1 <= k <= N");
  return precision_curve(eval)[k - 1];
}

// Trapezoidal area under Precision@k against Coverage@k = k/N.
inline double aupcc(const EvalSet& eval) {
  const auto curve = precision_curve(eval);
  const double n = static_cast<double>(curve.size());
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) area += (curve[k + 1] + curve[k]) / 2.0 / n;
  return area;
}

// 1-based ranks, ties receive the mean of the positions they span.
inline Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  Eigen::VectorXd ranks(n);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v(order[j + 1]) == v(order[i])) ++j;
    const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks(order[k]) = mean_rank;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b) {
  require(a.size() == b.size(), "spearman inputs differ in length");
  require(a.size() >= 2, "spearman needs at least two items");
  const Eigen::VectorXd ra = average_ranks(a);
  const Eigen::VectorXd rb = average_ranks(b);
  const Eigen::VectorXd ca = ra.array() - ra.mean();
  const Eigen::VectorXd cb = rb.array() - rb.mean();
  const double va = ca.squaredNorm();
  const double vb = cb.squaredNorm();
  if (va == 0.0 || vb == 0.0)
    throw UndefinedCorrelation("spearman correlation undefined for a constant vector");
  const double r = ca.dot(cb) / std::sqrt(va * vb);
  return std::clamp(r, -1.0, 1.0);
}

inline double mean_squared_error(const EvalSet& eval) {
  eval.validate();
  return (eval.predictions - eval.truths).squaredNorm() /
         static_cast<double>(eval.predictions.size());
}

// NDCG of the prediction order, with gains from truths min-max scaled to
// [0, 1]. Constant truths give 1.
inline double ndcg(const EvalSet& eval) {
  eval.validate();
  const Eigen::VectorXd labels = minmax_labels(eval.truths);
  const double ideal = ideal_dcg(labels);
  if (ideal <= 0.0) return 1.0;
  const auto order = top_order(eval.predictions);
  Eigen::VectorXd ranked(labels.size());
  for (std::size_t p = 0; p < order.size(); ++p) ranked(static_cast<Eigen::Index>(p)) = labels(order[p]);
  return dcg(ranked) / ideal;
}

inline MetricReport evaluate(const EvalSet& eval) {
  eval.validate();
  MetricReport report;
  report.n = static_cast<std::size_t>(eval.predictions.size());
  report.mse = mean_squared_error(eval);
  report.aupcc = aupcc(eval);
  report.spearman = spearman(eval.predictions, eval.truths);
  report.ndcg = ndcg(eval);
  return report;
}

inline void write_csv_row(std::ostream& os, const MetricReport& r) {
  const auto old_precision = os.precision(17);
  os << r.n << "," << r.mse << "," << r.aupcc << "," << r.spearman << "," << r.ndcg;
  os.precision(old_precision);
}

}  // namespace rankmbo
