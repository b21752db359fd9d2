#pragma once

// Synthetic tasks with exact oracles, the heavy-tailed linear experiment,
// the LTR generalization bound, and candidate scoring.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
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

enum class OracleKind { quadratic_1d, sphere, rastrigin, random_quadratic };

inline std::string oracle_name(OracleKind k) {
  switch (k) {
    case OracleKind::quadratic_1d: return "quadratic-1d";
    case OracleKind::sphere: return "sphere";
    case OracleKind::rastrigin: return "rastrigin";
    case OracleKind::random_quadratic: return "random-quadratic";
  }
  return "unknown";
}

inline OracleKind parse_oracle(const std::string& name) {
  for (auto k : {OracleKind::quadratic_1d, OracleKind::sphere, OracleKind::rastrigin,
                 OracleKind::random_quadratic})
    if (oracle_name(k) == name) return k;
  throw InvalidInput("unknown task '" + name + "'");
}

// Exact objective. Counts evaluations so callers can assert when it ran.
class Oracle {
 public:
  Oracle(OracleKind kind, int dim, std::uint64_t seed = 0) : kind_(kind), dim_(dim) {
    require(dim >= 1, "oracle dimension must be positive");
    if (kind == OracleKind::quadratic_1d) require(dim == 1, "quadratic-1d is one-dimensional");
    if (kind == OracleKind::random_quadratic) {
      // f(x) = -(x - c)^T A (x - c), A = Q^T Q / d + 0.1 I
      Rng rng(seed);
      Matrix q(dim, dim);
      for (Eigen::Index r = 0; r < q.rows(); ++r)
        for (Eigen::Index c = 0; c < q.cols(); ++c) q(r, c) = rng.normal();
      form_ = q.transpose() * q / static_cast<double>(dim) + 0.1 * Matrix::Identity(dim, dim);
      center_.resize(dim);
      for (Eigen::Index i = 0; i < dim; ++i) center_(i) = rng.uniform(-2.5, 2.5);
    }
  }

  OracleKind kind() const { return kind_; }
  int dim() const { return dim_; }
  std::size_t calls() const { return calls_; }

  double operator()(const Eigen::Ref<const Vector>& x) const {
    require(x.size() == dim_, "oracle input dimension mismatch");
    ++calls_;
    switch (kind_) {
      case OracleKind::quadratic_1d:
        return x(0) * x(0);
      case OracleKind::sphere:
        return -x.squaredNorm();
      case OracleKind::rastrigin: {
        double total = 10.0 * dim_;
        for (Eigen::Index i = 0; i < x.size(); ++i)
          total += x(i) * x(i) - 10.0 * std::cos(2.0 * std::numbers::pi * x(i));
        return -total;
      }
      case OracleKind::random_quadratic: {
        const Vector diff = x - center_;
        return -diff.dot(form_ * diff);
      }
    }
    return 0.0;
  }

  Vector evaluate(const Eigen::Ref<const Matrix>& designs) const {
    Vector out(designs.rows());
    for (Eigen::Index r = 0; r < designs.rows(); ++r) out(r) = (*this)(designs.row(r).transpose());
    return out;
  }

  // Sampling box used by the default task for this oracle.
  static std::pair<double, double> default_box(OracleKind k) {
    switch (k) {
      case OracleKind::quadratic_1d: return {0.0, 3.0};
      case OracleKind::rastrigin: return {-5.12, 5.12};
      default: return {-5.0, 5.0};
    }
  }

 private:
  OracleKind kind_;
  int dim_;
  Matrix form_;
  Vector center_;
  mutable std::size_t calls_ = 0;
};

struct HeavyTailNoiseSpec {
  double dof = 2.0;
  double scale = 15.0;
  double probability = 0.2;

  void validate() const {
    require(dof > 0.0, "noise degrees of freedom must be positive");
    require(scale > 0.0, "noise scale must be positive");
    require(probability >= 0.0 && probability <= 1.0, "noise probability must lie in [0, 1]");
  }
};

struct SyntheticTask {
  OracleKind oracle = OracleKind::quadratic_1d;
  int dim = 1;
  double box_lo = 0.0;
  double box_hi = 3.0;
  std::size_t samples = 1000;
  double percentile = 50.0;
  std::optional<HeavyTailNoiseSpec> noise;

  static SyntheticTask make(OracleKind kind, int dim) {
    SyntheticTask t;
    t.oracle = kind;
    t.dim = kind == OracleKind::quadratic_1d ? 1 : dim;
    std::tie(t.box_lo, t.box_hi) = Oracle::default_box(kind);
    return t;
  }

  std::string name() const {
    std::string s = oracle_name(oracle);
    if (oracle != OracleKind::quadratic_1d) s += "-" + std::to_string(dim) + "d";
    if (noise) s += "-heavytail";
    return s;
  }

  void validate() const {
    require(dim >= 1, "task dimension must be positive");
    require(box_hi > box_lo, "task box must be nonempty");
    require(samples >= 2, "task needs at least two samples");
    require(percentile > 0.0 && percentile < 100.0, "percentile must lie in (0, 100)");
    if (oracle == OracleKind::quadratic_1d) require(dim == 1, "quadratic-1d is one-dimensional");
    if (noise) noise->validate();
  }
};

// Heavy-tailed noise draw for design x. In one dimension on the quadratic
// task the sign is forced: positive for x <= 1.5, negative above. Other
// tasks use the symmetric draw.
inline double heavy_tail_noise(const HeavyTailNoiseSpec& spec, OracleKind kind, double x0, Rng& rng) {
  const double t = rng.student_t(spec.dof);
  if (kind == OracleKind::quadratic_1d) return (x0 <= 1.5 ? 1.0 : -1.0) * spec.scale * std::abs(t);
  return spec.scale * t;
}

struct TaskData {
  OfflineDataset offline;  // raw; bottom x% by true score, noisy scores
  OfflineDataset ood;      // raw; remaining designs with exact scores
  Vector offline_truth;    // exact scores of the offline designs
  std::vector<char> corrupted;
  Oracle oracle;
  double y_min = 0.0;  // over all sampled designs, exact scores
  double y_max = 0.0;
};

inline constexpr std::uint64_t kDesignStream = 11;
inline constexpr std::uint64_t kNoiseStream = 12;
inline constexpr std::uint64_t kOracleStream = 13;
inline constexpr std::uint64_t kFitInitStream = 14;

inline TaskData generate_task_dataset(const SyntheticTask& task, std::uint64_t seed) {
  task.validate();
  Oracle oracle(task.oracle, task.dim, Rng::mix(seed, kOracleStream));
  Rng design_rng(Rng::mix(seed, kDesignStream));
  Matrix designs(static_cast<Eigen::Index>(task.samples), task.dim);
  for (Eigen::Index r = 0; r < designs.rows(); ++r)
    for (Eigen::Index c = 0; c < designs.cols(); ++c)
      designs(r, c) = design_rng.uniform(task.box_lo, task.box_hi);
  const Vector truth = oracle.evaluate(designs);
  const OfflineDataset full = make_dataset(designs, truth);
  OodSplit parts = ood_split(full, task.percentile);

  TaskData out{parts.train, parts.ood, parts.train.scores,
               std::vector<char>(static_cast<std::size_t>(parts.train.size()), 0), oracle,
               truth.minCoeff(), truth.maxCoeff()};
  if (task.noise) {
    Rng noise_rng(Rng::mix(seed, kNoiseStream));
    for (Eigen::Index r = 0; r < out.offline.size(); ++r) {
      if (noise_rng.uniform() < task.noise->probability) {
        out.offline.scores(r) +=
            heavy_tail_noise(*task.noise, task.oracle, out.offline.designs(r, 0), noise_rng);
        out.corrupted[static_cast<std::size_t>(r)] = 1;
      }
    }
  }
  return out;
}

struct LinearFit {
  double w = 0.0;
  double b = 0.0;
};

// Least squares via the normal equations on [x, 1].
inline LinearFit heavy_tail_fit_mse(const Eigen::Ref<const Vector>& xs,
                                    const Eigen::Ref<const Vector>& ys) {
  require(xs.size() == ys.size(), "x and y differ in length");
  require(xs.size() >= 2, "least squares needs at least two points");
  Matrix a(xs.size(), 2);
  a.col(0) = xs;
  a.col(1).setOnes();
  const Eigen::Matrix2d gram = a.transpose() * a;
  const double det = gram.determinant();
  const double scale = gram.cwiseAbs().maxCoeff();
  if (!(std::abs(det) > 1e-12 * scale * scale))
    throw InvalidInput("singular design matrix: x values are constant");
  const Eigen::Vector2d theta = gram.inverse() * (a.transpose() * ys);
  return {theta(0), theta(1)};
}

struct RankCosineFitConfig {
  double learning_rate = 1e-3;
  int epochs = 1000;
  std::uint64_t seed = 0;
};

// Full-list Adam descent on RankCosine(y, w x + b). Initial (w, b) are drawn
// uniformly from [-1, 1].
inline LinearFit heavy_tail_fit_rankcosine(const Eigen::Ref<const Vector>& xs,
                                           const Eigen::Ref<const Vector>& ys,
                                           const RankCosineFitConfig& cfg = {}) {
  require(xs.size() == ys.size(), "x and y differ in length");
  require(xs.size() >= 2, "rankcosine fit needs at least two points");
  require(ys.maxCoeff() > ys.minCoeff(), "rankcosine fit needs at least two distinct labels");
  require(cfg.epochs >= 0, "epochs must be non-negative");
  Rng rng(cfg.seed);
  Vector theta(2);
  theta(0) = rng.uniform(-1.0, 1.0);
  theta(1) = rng.uniform(-1.0, 1.0);
  AdamConfig ac;
  ac.learning_rate = cfg.learning_rate;
  AdamState adam(ac);
  const LossSpec spec{LossKind::rankcosine};
  for (int e = 0; e < cfg.epochs; ++e) {
    const Vector f = theta(0) * xs.array() + theta(1);
    const LossResult lr = evaluate_loss(spec, ys, f);
    if (!std::isfinite(lr.value))
      throw TrainingAborted("non-finite rankcosine loss at epoch " + std::to_string(e));
    Vector g(2);
    g(0) = lr.grad.dot(xs);
    g(1) = lr.grad.sum();
    adam.step(theta, g);
  }
  return {theta(0), theta(1)};
}

struct HeavyTailPoints {
  Vector x;
  Vector y;
};

// N points x ~ U[0, 3], y = x^2, each corrupted with probability p.
inline HeavyTailPoints heavy_tail_points(std::size_t n, const HeavyTailNoiseSpec& noise,
                                         std::uint64_t seed) {
  noise.validate();
  Rng rng(seed);
  HeavyTailPoints out{Vector(static_cast<Eigen::Index>(n)), Vector(static_cast<Eigen::Index>(n))};
  for (Eigen::Index i = 0; i < out.x.size(); ++i) {
    out.x(i) = rng.uniform(0.0, 3.0);
    out.y(i) = out.x(i) * out.x(i);
  }
  for (Eigen::Index i = 0; i < out.x.size(); ++i)
    if (rng.uniform() < noise.probability)
      out.y(i) += heavy_tail_noise(noise, OracleKind::quadratic_1d, out.x(i), rng);
  return out;
}

inline double median(std::vector<double> v) {
  require(!v.empty(), "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

struct SweepRow {
  double parameter = 0.0;
  double w_mse = 0.0;         // median over seeds
  double w_rankcosine = 0.0;  // median over seeds
  std::vector<double> mse_per_seed;
  std::vector<double> rankcosine_per_seed;
};

enum class SweepAxis { scale, probability };

struct SweepConfig {
  SweepAxis axis = SweepAxis::scale;
  std::vector<double> values;
  HeavyTailNoiseSpec base;
  std::size_t points = 100;
  std::size_t seeds = 10;
  std::uint64_t base_seed = 0;
  RankCosineFitConfig fit;
};

inline std::vector<SweepRow> heavy_tail_sweep(const SweepConfig& cfg) {
  require(cfg.seeds >= 1, "sweep needs at least one seed");
  std::vector<SweepRow> rows;
  for (double value : cfg.values) {
    HeavyTailNoiseSpec spec = cfg.base;
    (cfg.axis == SweepAxis::scale ? spec.scale : spec.probability) = value;
    SweepRow row;
    row.parameter = value;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      const std::uint64_t seed = cfg.base_seed + s;
      const auto pts = heavy_tail_points(cfg.points, spec, Rng::mix(seed, kNoiseStream));
      row.mse_per_seed.push_back(heavy_tail_fit_mse(pts.x, pts.y).w);
      RankCosineFitConfig fit = cfg.fit;
      fit.seed = Rng::mix(seed, kFitInitStream);
      row.rankcosine_per_seed.push_back(heavy_tail_fit_rankcosine(pts.x, pts.y, fit).w);
    }
    row.w_mse = median(row.mse_per_seed);
    row.w_rankcosine = median(row.rankcosine_per_seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                            const std::string& parameter_name) {
  const auto old = os.precision(17);
  os << parameter_name << ",w_mse,w_rankcosine\n";
  for (const auto& r : rows) os << r.parameter << "," << r.w_mse << "," << r.w_rankcosine << "\n";
  os.precision(old);
}

enum class PhiFamily { linear, exponential, sigmoid };
enum class LtrAlgorithm { rankcosine, listnet };

struct BoundInputs {
  PhiFamily phi = PhiFamily::exponential;
  double a = 1.0;
  double b = 0.0;  // linear family only
  double weight_bound = 1.0;  // B
  double design_bound = 1.0;  // M
  int list_length = 2;        // m
  double samples = 100.0;     // n
  double delta = 0.05;
  LtrAlgorithm algorithm = LtrAlgorithm::rankcosine;

  void validate() const {
    require(a > 0.0, "phi slope a must be positive");
    require(weight_bound > 0.0 && design_bound > 0.0, "norm bounds B and M must be positive");
    require(list_length >= 1, "list length must be at least 1");
    require(list_length <= 170, "list length too large for m! in double precision");
    require(samples >= 1.0, "sample count must be at least 1");
    require(delta > 0.0 && delta < 1.0, "confidence delta must lie in (0, 1)");
    if (phi == PhiFamily::linear)
      require(b > a * weight_bound * design_bound, "linear phi requires b > a*B*M");
  }
};

struct BoundTerms {
  double smoothness = 0.0;        // N(phi)
  double algorithm_factor = 0.0;  // C_A(phi)
  double bound = 0.0;
};

// 4 B M C_A(phi) N(phi) / sqrt(n) + sqrt(2 ln(2 / delta) / n), with N and C
// from the per-family closed forms (natural logarithms).
inline BoundTerms generalization_bound(const BoundInputs& in) {
  in.validate();
  const double a = in.a;
  const double bm = in.weight_bound * in.design_bound;
  const double m = static_cast<double>(in.list_length);
  const double m_fact = std::tgamma(m + 1.0);
  BoundTerms t;
  switch (in.phi) {
    case PhiFamily::linear: {
      const double lo = in.b - a * bm;
      t.smoothness = a;
      t.algorithm_factor = in.algorithm == LtrAlgorithm::rankcosine
                               ? std::sqrt(m) / (2.0 * lo)
                               : 2.0 * m_fact / (lo * (std::log(m) + std::log((in.b + a * bm) / lo)));
      break;
    }
    case PhiFamily::exponential: {
      const double e = std::exp(a * bm);
      t.smoothness = a * e;
      t.algorithm_factor = in.algorithm == LtrAlgorithm::rankcosine
                               ? std::sqrt(m) * e / 2.0
                               : 2.0 * m_fact * e / (std::log(m) + 2.0 * a * bm);
      break;
    }
    case PhiFamily::sigmoid: {
      const double e = std::exp(a * bm);
      const double denom = 1.0 + std::exp(-a * bm);
      t.smoothness = a * (1.0 + e) / (denom * denom);
      t.algorithm_factor = in.algorithm == LtrAlgorithm::rankcosine
                               ? std::sqrt(m) * (1.0 + e) / 2.0
                               : 2.0 * m_fact * (1.0 + e) / (std::log(m) + a * bm);
      break;
    }
  }
  require(std::isfinite(t.algorithm_factor) && t.algorithm_factor > 0.0,
          "bound factor is undefined for these inputs");
  t.bound = 4.0 * bm * t.algorithm_factor * t.smoothness / std::sqrt(in.samples) +
            std::sqrt(2.0 * std::log(2.0 / in.delta) / in.samples);
  return t;
}

// Linear-interpolation percentile (q in [0, 100]) of a nonempty sample.
inline double percentile(std::vector<double> v, double q) {
  require(!v.empty(), "percentile of an empty set");
  require(q >= 0.0 && q <= 100.0, "percentile must lie in [0, 100]");
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct CandidateScores {
  Vector raw;
  Vector normalized;
  double p100 = 0.0;
  double p50 = 0.0;
};

// Normalized score (y - y_min) / (y_max - y_min); values outside [0, 1]
// are kept.
inline CandidateScores score_candidates(const Oracle& oracle, const Eigen::Ref<const Matrix>& candidates,
                                        double y_min, double y_max) {
  require(y_max > y_min, "score normalization needs y_max > y_min");
  require(candidates.rows() >= 1, "no candidates to score");
  CandidateScores out;
  out.raw = oracle.evaluate(candidates);
  out.normalized = (out.raw.array() - y_min) / (y_max - y_min);
  std::vector<double> v(out.normalized.data(), out.normalized.data() + out.normalized.size());
  out.p100 = percentile(v, 100.0);
  out.p50 = percentile(v, 50.0);
  return out;
}

}  // namespace rankmbo
