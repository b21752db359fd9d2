// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "rankmbo/harness.hpp"

using namespace rankmbo;
namespace fs = std::filesystem;

#ifndef RANKMBO_CONFIG_DIR
#define RANKMBO_CONFIG_DIR "configs"
#endif

namespace {

// Tolerances, pinned.
constexpr double kGradRelTol = 1e-4;
constexpr double kFdStep = 1e-6;
constexpr double kAffineTol = 1e-9;
constexpr double kBoundRelTol = 1e-12;  // independent operation order, see the bound check

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vector gaussian(std::mt19937_64& gen, int n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(gen);
  return v;
}

Matrix gaussian(std::mt19937_64& gen, int r, int c) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = nd(gen);
  return m;
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(4) << x;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig config(const std::string& file, const fs::path& out) {
  ExperimentConfig cfg = load_config((fs::path(RANKMBO_CONFIG_DIR) / file).string());
  cfg.out = out.string();
  return cfg;
}

// 1: every loss and both net gradient paths against central differences.
Outcome gradients() {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  std::size_t fewest = SIZE_MAX;
  for (LossKind kind : kAllLosses) {
    std::size_t checked = 0;
    for (int t = 0; checked < 50 && t < 200; ++t) {
      const int m = 2 + t % 19;  // m <= 20
      Vector y = gaussian(gen, m);
      if (needs_unit_labels(kind))
        for (int i = 0; i < m; ++i) y(i) = unit(gen);
      const Vector f = gaussian(gen, m);
      if (kind == LossKind::lambdarank) {
        // swap weights jump where the predicted order changes
        std::vector<double> s(f.data(), f.data() + m);
        std::sort(s.begin(), s.end());
        bool close = false;
        for (std::size_t i = 1; i < s.size(); ++i) close |= s[i] - s[i - 1] < 1e-4;
        if (close) continue;
      }
      const LossSpec spec{kind};
      const Vector g = loss_grad(spec, y, f);
      Vector fd(m);
      for (int i = 0; i < m; ++i) {
        Vector a = f, b = f;
        a(i) += kFdStep;
        b(i) -= kFdStep;
        fd(i) = (loss_value(spec, y, a) - loss_value(spec, y, b)) / (2 * kFdStep);
      }
      worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
      ++checked;
    }
    fewest = std::min(fewest, checked);
  }

  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 8;  // d <= 8
    DenseNet net = DenseNet::initialized(d, {8, 8}, 1000 + static_cast<std::uint64_t>(t));
    const Matrix xs = gaussian(gen, 6, d);
    const Vector w = gaussian(gen, 6);
    const ParamSet g = net.grad_params(xs, w);
    double num = 0.0, den = 0.0;
    auto probe = [&](double& slot, double analytic) {
      const double keep = slot;
      slot = keep + kFdStep;
      const double up = net.forward_batch(xs).dot(w);
      slot = keep - kFdStep;
      const double dn = net.forward_batch(xs).dot(w);
      slot = keep;
      const double fd = (up - dn) / (2 * kFdStep);
      num += (fd - analytic) * (fd - analytic);
      den += fd * fd;
    };
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
      auto& layer = net.parameters()[li];
      for (Eigen::Index k = 0; k < layer.weight.size(); ++k) probe(layer.weight.data()[k], g[li].weight.data()[k]);
      for (Eigen::Index k = 0; k < layer.bias.size(); ++k) probe(layer.bias.data()[k], g[li].bias(k));
    }
    worst = std::max(worst, std::sqrt(num) / std::max(1.0, std::sqrt(den)));

    const Vector x = gaussian(gen, d);
    const Vector gx = net.grad_input(x);
    Vector fd(d);
    for (int i = 0; i < d; ++i) {
      Vector a = x, b = x;
      a(i) += kFdStep;
      b(i) -= kFdStep;
      fd(i) = (net.forward(a) - net.forward(b)) / (2 * kFdStep);
    }
    worst = std::max(worst, (gx - fd).norm() / std::max(1.0, fd.norm()));
  }
  return {worst < kGradRelTol && fewest >= 50,
          "10 losses (>= " + std::to_string(fewest) + " instances each) + 50 nets x 2 paths, max rel err " + fmt(worst)};
}

// 2: top-k overlap from a full sort per k, area by the trapezoid rule.
Outcome aupcc_oracle() {
  std::mt19937_64 gen(2);
  auto top = [](const Vector& v, int k) {
    std::vector<int> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v(a) != v(b) ? v(a) > v(b) : a < b; });
    return std::set<int>(idx.begin(), idx.begin() + k);
  };
  auto prec = [&](const Vector& p, const Vector& y, int k) {
    const auto a = top(p, k), b = top(y, k);
    int both = 0;
    for (int i : a) both += static_cast<int>(b.count(i));
    return static_cast<double>(both) / k;
  };
  int mismatches = 0;
  std::uniform_int_distribution<int> size(2, 200), small(0, 5);
  for (int t = 0; t < 100; ++t) {
    const int n = size(gen);
    Vector p = gaussian(gen, n), y = gaussian(gen, n);
    if (t % 3 == 0)
      for (int i = 0; i < n; ++i) {
        p(i) = small(gen);
        y(i) = small(gen);
      }
    const EvalSet e{p, y};
    double area = 0.0;
    for (int k = 1; k < n; ++k) area += (prec(p, y, k + 1) + prec(p, y, k)) / 2.0 / n;
    mismatches += aupcc(e) != area;
    for (int k = 1; k <= n; k += std::max(1, n / 10)) mismatches += precision_at_k(e, static_cast<std::size_t>(k)) != prec(p, y, k);
  }
  return {mismatches == 0, "100 instances, N <= 200, " + std::to_string(mismatches) + " inexact values"};
}

// 3: argmax sets before and after a strictly increasing map.
Outcome argmax_preserved() {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> level(0, 12);
  const std::vector<std::function<double(double, double)>> maps = {
      [](double z, double a) { return std::exp(a * z); },
      [](double z, double a) { return a * z * z * z + z; },
      [](double z, double a) { return std::atan(a * z); },
      [](double z, double a) { return std::log1p(std::exp(a * z)) + z; }};
  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 5 + t % 40;
    std::vector<double> f(static_cast<std::size_t>(n));
    for (auto& v : f) v = level(gen) * 0.25;  // coarse grid, many ties
    const double a = 0.2 + 0.03 * t;
    const auto& h = maps[static_cast<std::size_t>(t) % maps.size()];
    std::set<int> s1, s2;
    const double m1 = *std::max_element(f.begin(), f.end());
    double m2 = -INFINITY;
    for (double v : f) m2 = std::max(m2, h(v, a));
    for (int i = 0; i < n; ++i) {
      if (f[static_cast<std::size_t>(i)] == m1) s1.insert(i);
      if (h(f[static_cast<std::size_t>(i)], a) == m2) s2.insert(i);
    }
    bad += s1 != s2;
  }
  return {bad == 0, "100 (grid, map) pairs, " + std::to_string(bad) + " argmax mismatches"};
}

// 4: adapted search trajectories of a*net + b versus net.
Outcome affine_invariance() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const int d = 2 + static_cast<int>(s);
    std::mt19937_64 gen(40 + s);
    const OfflineDataset ds = make_dataset(gaussian(gen, 120, d), gaussian(gen, 120));
    const DenseNet net = DenseNet::initialized(d, {16, 16}, 400 + s);
    const Matrix starts = select_starts(ds, 8);
    SearchConfig cfg;
    cfg.steps = 50;
    cfg.step_size = 0.05;
    const auto base = ascend(adapt(net, ds), cfg, starts, true);
    for (double a : {0.1, 3.0, 100.0})
      for (double b : {-5.0, 0.0, 7.0}) {
        ParamSet p = net.layers();
        p.back().weight *= a;
        p.back().bias = p.back().bias * a + Vector::Constant(1, b);
        const auto other = ascend(adapt(DenseNet(p), ds), cfg, starts, true);
        for (std::size_t t = 0; t < base.trajectory.size(); ++t)
          worst = std::max(worst, (base.trajectory[t] - other.trajectory[t]).cwiseAbs().maxCoeff());
      }
  }
  return {worst <= kAffineTol, "5 nets x 9 (a, b), T = 50, max coordinate gap " + fmt(worst)};
}

// 5: median slopes of least squares and RankCosine fits under heavy-tailed noise.
Outcome heavy_tail_signs() {
  std::ostringstream detail;
  bool pass = true;
  auto run = [&](SweepAxis axis, std::vector<double> values, const char* label) {
    SweepConfig cfg;
    cfg.axis = axis;
    cfg.values = std::move(values);
    cfg.points = 100;
    cfg.seeds = 10;
    const auto rows = heavy_tail_sweep(cfg);
    std::ofstream csv(std::string("acceptance_sweep_") + label + ".csv");
    write_sweep_csv(csv, rows, label);
    detail << " " << label << "[";
    for (const auto& r : rows) {
      pass &= r.w_rankcosine > 0.0 && r.w_mse < 0.0;
      detail << " " << r.parameter << ":(mse " << fmt(r.w_mse) << ", rc " << fmt(r.w_rankcosine) << ")";
    }
    detail << " ]";
  };
  run(SweepAxis::scale, {10, 15, 20, 50, 100}, "scale");
  run(SweepAxis::probability, {0.2, 0.4, 0.6, 0.8, 1.0}, "probability");
  return {pass, "need w_mse < 0 < w_rankcosine;" + detail.str()};
}

// 6: Table-4 constants written out again, plus decay in n.
Outcome bound_calculator() {
  auto fact = [](int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
  };
  auto reference = [&](const BoundInputs& in) {
    const double z = in.a * in.weight_bound * in.design_bound;
    const int m = in.list_length;
    double n_phi = 0.0, c = 0.0;
    const bool rc = in.algorithm == LtrAlgorithm::rankcosine;
    switch (in.phi) {
      case PhiFamily::linear:
        n_phi = in.a;
        c = rc ? std::sqrt(m) / (2.0 * (in.b - z))
               : 2.0 * fact(m) / ((in.b - z) * (std::log(m) + std::log((in.b + z) / (in.b - z))));
        break;
      case PhiFamily::exponential:
        n_phi = in.a * std::exp(z);
        c = rc ? std::sqrt(m) * std::exp(z) / 2.0 : 2.0 * fact(m) * std::exp(z) / (std::log(m) + 2.0 * z);
        break;
      case PhiFamily::sigmoid:
        n_phi = in.a * (1.0 + std::exp(z)) / std::pow(1.0 + std::exp(-z), 2);
        c = rc ? std::sqrt(m) * (1.0 + std::exp(z)) / 2.0 : 2.0 * fact(m) * (1.0 + std::exp(z)) / (std::log(m) + z);
        break;
    }
    return 4.0 * in.weight_bound * in.design_bound * c * n_phi / std::sqrt(in.samples) +
           std::sqrt(2.0 * std::log(2.0 / in.delta) / in.samples);
  };
  const double sets[5][7] = {{1, 2, 1, 1, 4, 100, 0.05},  {0.5, 3, 2, 1, 3, 1000, 0.1}, {2, 10, 1, 2, 5, 50, 0.01},
                             {0.1, 1, 3, 3, 2, 1e4, 0.05}, {1.5, 8, 0.5, 2, 6, 1e6, 0.2}};
  double worst = 0.0;
  int cases = 0;
  bool monotone = true;
  for (auto phi : {PhiFamily::linear, PhiFamily::exponential, PhiFamily::sigmoid})
    for (auto alg : {LtrAlgorithm::rankcosine, LtrAlgorithm::listnet}) {
      for (const auto& s : sets) {
        BoundInputs in;
        in.phi = phi;
        in.algorithm = alg;
        in.a = s[0];
        in.b = s[1];
        in.weight_bound = s[2];
        in.design_bound = s[3];
        in.list_length = static_cast<int>(s[4]);
        in.samples = s[5];
        in.delta = s[6];
        const double want = reference(in);
        worst = std::max(worst, std::abs(generalization_bound(in).bound - want) / want);
        ++cases;
        in.samples = 1e2;
        const double small = generalization_bound(in).bound;
        in.samples = 1e6;
        monotone &= generalization_bound(in).bound < small;
      }
    }
  return {worst <= kBoundRelTol && monotone,
          std::to_string(cases) + " cases, max rel diff " + fmt(worst) + ", n=1e6 below n=1e2: " + (monotone ? "yes" : "no")};
}

double median_p100(const std::vector<RunResult>& rows, const std::string& loss) {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.loss == loss && r.ok()) v.push_back(r.score_p100);
  return v.empty() ? NAN : median(v);
}

// 7: pipeline on the heavy-tailed task.
Outcome heavy_tail_pipeline() {
  const auto rows = run_pipeline(config("heavytail-quadratic.conf", "acceptance_out/heavytail"));
  std::size_t failed = 0;
  for (const auto& r : rows) failed += !r.ok();
  const double mse = median_p100(rows, "mse"), ln = median_p100(rows, "listnet"), rc = median_p100(rows, "rankcosine");
  return {failed == 0 && ln >= mse && rc >= mse,
          "median p100 over 8 seeds: mse " + fmt(mse) + ", listnet " + fmt(ln) + ", rankcosine " + fmt(rc) +
              (failed ? ", failed cells " + std::to_string(failed) : "")};
}

// 8: metric-rank vs score-rank over the two-task suite.
Outcome correlation_suite() {
  const fs::path out = "acceptance_out/correlation";
  auto rows = run_pipeline(config("correlation-sphere.conf", out / "sphere"));
  const auto more = run_pipeline(config("correlation-random-quadratic.conf", out / "random-quadratic"));
  rows.insert(rows.end(), more.begin(), more.end());
  emit_report(rows, out);
  std::size_t ok = 0;
  for (const auto& r : rows) ok += r.ok();
  try {
    const auto study = correlation_study(rows);
    write_correlation(study, out);
    std::ostringstream d;
    d << ok << " runs; mean rho aupcc " << fmt(study.mean_rho_aupcc) << " vs mse " << fmt(study.mean_rho_mse) << " (";
    for (const auto& t : study.tasks)
      d << " " << t.task << ": " << (t.degenerate ? "degenerate" : fmt(t.rho_aupcc) + "/" + fmt(t.rho_mse));
    d << " )";
    return {ok >= 40 && study.mean_rho_aupcc > study.mean_rho_mse, d.str()};
  } catch (const std::exception& e) {
    return {false, std::to_string(ok) + " runs; " + e.what()};
  }
}

// 9: two executions, same config, byte-compared results.
Outcome determinism() {
  const fs::path a = "acceptance_out/determinism_a", b = "acceptance_out/determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  run_pipeline(config("sphere-quick.conf", a));
  run_pipeline(config("sphere-quick.conf", b));
  const std::string ra = slurp(a / "results.csv"), rb = slurp(b / "results.csv");
  return {!ra.empty() && ra == rb, "results.csv " + std::to_string(ra.size()) + " bytes, identical: " + (ra == rb ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, gradients},        {2, aupcc_oracle},        {3, argmax_preserved},
      {4, affine_invariance}, {5, heavy_tail_signs},   {6, bound_calculator},
      {7, heavy_tail_pipeline}, {8, correlation_suite}, {9, determinism}};
  int failures = 0;
  for (const auto& [id, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << fmt(secs) << " s) " << o.detail
              << std::endl;
  }
  std::cout << (9 - failures) << "/9 criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
