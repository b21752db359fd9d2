#pragma once

// Experiment driver: config files, the end-to-end pipeline over a
// (seed x loss) grid, the metric-vs-score correlation study and reporting.
//
// Config files are flat "key = value" text with '#' comments. Keys:
//
//   task.name            quadratic-1d | sphere | rastrigin | random-quadratic
//   task.dim             design dimension (quadratic-1d forces 1)
//   task.samples         designs drawn uniformly from the box
//   task.percentile      offline share of the designs, lowest true scores
//   task.box_lo/box_hi   box bounds
//   task.noise           none | heavy-tail
//   task.noise.dof/.scale/.probability
//   data.lists           n, training lists
//   data.list_length     m
//   data.val_lists       validation lists
//   data.val_ratio       held-out share of the offline rows
//   train.loss           comma-separated loss names
//   train.epochs, train.lr, train.weight_decay, train.batch_lists
//   train.hidden         comma-separated widths, or "none" for an affine model
//   train.lambdarank_alpha, train.approx_temperature
//   search.eta, search.steps, search.rule (adam | plain), search.k
//   run.seeds            comma-separated seeds
//   run.out              output directory

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "rankmbo/bench.hpp"
#include "rankmbo/data.hpp"
#include "rankmbo/diffnet.hpp"
#include "rankmbo/error.hpp"
#include "rankmbo/losses.hpp"
#include "rankmbo/metrics.hpp"
#include "rankmbo/rng.hpp"
#include "rankmbo/searcher.hpp"
#include "rankmbo/trainer.hpp"

namespace rankmbo {

struct ExperimentConfig {
  SyntheticTask task;
  std::vector<LossKind> losses = {LossKind::listnet};
  std::size_t lists = 500;
  std::size_t list_length = 50;
  std::size_t val_lists = 125;
  TrainConfig train;
  SearchConfig search;
  std::vector<std::uint64_t> seeds = {0};
  std::string out = "out";

  ExperimentConfig() { train.hidden = {64, 64}; }

  void validate() const {
    task.validate();
    require(!losses.empty(), "at least one loss is required");
    require(lists >= 1 && val_lists >= 1, "list counts must be positive");
    require(list_length >= 2, "list length must be at least 2");
    require(!seeds.empty(), "seed list must not be empty");
    train.validate();
    search.validate();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw InvalidInput(key + ": expected a number, got '" + v + "'");
  return x;
}

inline std::uint64_t to_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidInput(key + ": expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw InvalidInput(key + ": integer out of range '" + v + "'");
  }
}

}  // namespace detail

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "task.name", "task.dim", "task.samples", "task.percentile", "task.box_lo", "task.box_hi",
      "task.noise", "task.noise.dof", "task.noise.scale", "task.noise.probability",
      "data.lists", "data.list_length", "data.val_lists", "data.val_ratio",
      "train.loss", "train.epochs", "train.lr", "train.weight_decay", "train.batch_lists",
      "train.hidden", "train.lambdarank_alpha", "train.approx_temperature",
      "search.eta", "search.steps", "search.rule", "search.k",
      "run.seeds", "run.out"};
  return keys;
}

// Applies one key; task.name resets the box to that oracle's default.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string v = trim(raw);
  auto& t = cfg.task;
  auto noise = [&]() -> HeavyTailNoiseSpec& {
    if (!t.noise) t.noise = HeavyTailNoiseSpec{};
    return *t.noise;
  };
  if (key == "task.name") {
    const OracleKind kind = parse_oracle(v);
    const SyntheticTask fresh = SyntheticTask::make(kind, kind == OracleKind::quadratic_1d ? 1 : t.dim);
    t.oracle = kind;
    t.dim = fresh.dim;
    t.box_lo = fresh.box_lo;
    t.box_hi = fresh.box_hi;
  } else if (key == "task.dim") {
    t.dim = static_cast<int>(to_count(key, v));
  } else if (key == "task.samples") {
    t.samples = to_count(key, v);
  } else if (key == "task.percentile") {
    t.percentile = to_double(key, v);
  } else if (key == "task.box_lo") {
    t.box_lo = to_double(key, v);
  } else if (key == "task.box_hi") {
    t.box_hi = to_double(key, v);
  } else if (key == "task.noise") {
    if (v == "none") t.noise.reset();
    else if (v == "heavy-tail") noise();
    else throw InvalidInput("task.noise: expected none or heavy-tail, got '" + v + "'");
  } else if (key == "task.noise.dof") {
    noise().dof = to_double(key, v);
  } else if (key == "task.noise.scale") {
    noise().scale = to_double(key, v);
  } else if (key == "task.noise.probability") {
    noise().probability = to_double(key, v);
  } else if (key == "data.lists") {
    cfg.lists = to_count(key, v);
  } else if (key == "data.list_length") {
    cfg.list_length = to_count(key, v);
  } else if (key == "data.val_lists") {
    cfg.val_lists = to_count(key, v);
  } else if (key == "data.val_ratio") {
    cfg.train.validation_ratio = to_double(key, v);
  } else if (key == "train.loss") {
    cfg.losses.clear();
    for (const auto& name : split_list(v)) cfg.losses.push_back(parse_loss(name));
  } else if (key == "train.epochs") {
    cfg.train.epochs = static_cast<int>(to_count(key, v));
  } else if (key == "train.lr") {
    cfg.train.learning_rate = to_double(key, v);
  } else if (key == "train.weight_decay") {
    cfg.train.weight_decay = to_double(key, v);
  } else if (key == "train.batch_lists") {
    cfg.train.batch_lists = to_count(key, v);
  } else if (key == "train.hidden") {
    cfg.train.hidden.clear();
    if (v != "none")
      for (const auto& w : split_list(v)) cfg.train.hidden.push_back(static_cast<int>(to_count(key, w)));
  } else if (key == "train.lambdarank_alpha") {
    cfg.train.loss.lambdarank_alpha = to_double(key, v);
  } else if (key == "train.approx_temperature") {
    cfg.train.loss.approx_temperature = to_double(key, v);
  } else if (key == "search.eta") {
    cfg.search.step_size = to_double(key, v);
  } else if (key == "search.steps") {
    cfg.search.steps = static_cast<int>(to_count(key, v));
  } else if (key == "search.rule") {
    cfg.search.rule = parse_ascent_rule(v);
  } else if (key == "search.k") {
    cfg.search.k = to_count(key, v);
  } else if (key == "run.seeds") {
    cfg.seeds.clear();
    for (const auto& s : split_list(v)) cfg.seeds.push_back(to_count(key, s));
  } else if (key == "run.out") {
    cfg.out = v;
  } else {
    throw InvalidInput("unknown config key '" + key + "'");
  }
}

inline ExperimentConfig parse_config(std::istream& is, const std::string& name = "<stream>") {
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInput(name + ":" + std::to_string(lineno) + ": expected 'key = value'");
    try {
      set_config_value(cfg, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const InvalidInput& e) {
      throw InvalidInput(name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse_config(in, path);
}

// One (seed, loss) cell.
struct RunResult {
  std::string task;
  std::string loss;
  std::uint64_t seed = 0;
  std::string status = "ok";  // "ok" or "error: <message>"
  MetricReport ood;
  double score_p100 = 0.0;
  double score_p50 = 0.0;
  std::string checkpoint;  // relative to the output directory
  double wall_seconds = 0.0;

  bool ok() const { return status == "ok"; }
};

// Streams for per-cell seeds.
inline constexpr std::uint64_t kSplitStream = 21;
inline constexpr std::uint64_t kAugmentStream = 22;
inline constexpr std::uint64_t kValAugmentStream = 23;
inline constexpr std::uint64_t kTrainStream = 24;

// Everything one cell produces besides the row itself.
struct CellArtifacts {
  DenseNet net;
  NormStats stats;
  TrainRecord record;
  OfflineDataset offline_normalized;
  Vector offline_predictions;
  Matrix candidates;  // raw design space
  CandidateScores scores;
};

// The offline half of a cell: only datasets reach training and search.
inline CellArtifacts run_offline(const OfflineDataset& offline_raw, const ExperimentConfig& cfg,
                                 LossKind loss, std::uint64_t seed) {
  CellArtifacts art;
  const TrainValidation tv = split(offline_raw, 1.0 - cfg.train.validation_ratio, Rng::mix(seed, kSplitStream));
  art.stats = tv.train.stats;
  auto train_src = std::make_shared<const OfflineDataset>(tv.train);
  auto val_src = std::make_shared<const OfflineDataset>(tv.validation);
  const RankTrainSet trainset = augment(train_src, cfg.lists, cfg.list_length, Rng::mix(seed, kAugmentStream));
  const RankTrainSet valset = augment(val_src, cfg.val_lists, cfg.list_length, Rng::mix(seed, kValAugmentStream));

  TrainConfig tc = cfg.train;
  tc.loss.kind = loss;
  tc.seed = Rng::mix(seed, kTrainStream);
  TrainResult tr = train(trainset, valset, tc);
  art.net = std::move(tr.net);
  art.record = std::move(tr.record);

  art.offline_normalized = apply_zscore(offline_raw, art.stats);
  const AdaptedModel model = adapt(art.net, art.offline_normalized);
  art.offline_predictions = predict_dataset(art.net, art.offline_normalized);

  SearchConfig sc = cfg.search;
  sc.k = std::min<std::size_t>(sc.k, static_cast<std::size_t>(art.offline_normalized.size()));
  const Matrix starts = select_starts(art.offline_normalized, sc.k);
  const SearchResult found = ascend(model, sc, starts);
  art.candidates = denormalize_designs(found.finals, art.stats);
  return art;
}

// OOD metrics of the adapted surrogate against exact OOD scores, both on
// the offline score scale.
inline MetricReport ood_report(const DenseNet& net, const NormStats& stats, const OfflineDataset& offline_normalized,
                               const OfflineDataset& ood_raw) {
  const AdaptedModel model = adapt(net, offline_normalized);
  const OfflineDataset ood = apply_zscore(ood_raw, stats);
  EvalSet eval{model.values(ood.designs), ood.scores, EvalSource::ood};
  return evaluate(eval);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string cell_dir(const std::string& task, const std::string& loss, std::uint64_t seed) {
  return task + "/" + loss + "/seed" + std::to_string(seed);
}

inline void write_cell_artifacts(const std::filesystem::path& dir, const CellArtifacts& art) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream s;
    art.net.save(s);
    write_text(dir / "model.txt", s.str());
  }
  {
    std::ostringstream s;
    save_stats(s, art.stats);
    write_text(dir / "stats.txt", s.str());
  }
  {
    std::ostringstream s;
    art.record.write_csv(s);
    write_text(dir / "train.csv", s.str());
  }
  {
    std::ostringstream s;
    s << std::setprecision(17) << "prediction\n";
    for (Eigen::Index i = 0; i < art.offline_predictions.size(); ++i) s << art.offline_predictions(i) << "\n";
    write_text(dir / "predictions.csv", s.str());
  }
  {
    std::ostringstream s;
    const Eigen::Index d = art.candidates.cols();
    s << std::setprecision(17);
    for (Eigen::Index c = 0; c < d; ++c) s << "x" << c << ",";
    s << "score,normalized\n";
    for (Eigen::Index r = 0; r < art.candidates.rows(); ++r) {
      for (Eigen::Index c = 0; c < d; ++c) s << art.candidates(r, c) << ",";
      s << art.scores.raw(r) << "," << art.scores.normalized(r) << "\n";
    }
    write_text(dir / "candidates.csv", s.str());
  }
}

// Runs one cell end to end. The oracle is consulted when the task data are
// generated and again when candidates are scored, never in between.
inline RunResult run_cell(const ExperimentConfig& cfg, LossKind loss, std::uint64_t seed,
                          const std::filesystem::path& out_dir) {
  RunResult row;
  row.task = cfg.task.name();
  row.loss = std::string(loss_name(loss));
  row.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const TaskData data = generate_task_dataset(cfg.task, seed);
    const std::size_t calls_before = data.oracle.calls();
    CellArtifacts art = run_offline(data.offline, cfg, loss, seed);
    if (data.oracle.calls() != calls_before)
      throw std::logic_error("oracle queried during training or search");
    art.scores = score_candidates(data.oracle, art.candidates, data.y_min, data.y_max);
    row.ood = ood_report(art.net, art.stats, art.offline_normalized, data.ood);
    row.score_p100 = art.scores.p100;
    row.score_p50 = art.scores.p50;
    row.checkpoint = cell_dir(row.task, row.loss, seed) + "/model.txt";
    write_cell_artifacts(out_dir / cell_dir(row.task, row.loss, seed), art);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    row.status = "error: " + msg;
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

// Results sorted by (task, loss, seed) so reports do not depend on run order.
inline void sort_results(std::vector<RunResult>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const RunResult& a, const RunResult& b) {
    if (a.task != b.task) return a.task < b.task;
    if (a.loss != b.loss) return a.loss < b.loss;
    return a.seed < b.seed;
  });
}

inline constexpr const char* kResultsHeader =
    "task,loss,seed,status,n,mse,aupcc,spearman,ndcg,score_p100,score_p50,checkpoint";

inline void write_results_csv(std::ostream& os, const std::vector<RunResult>& rows) {
  const auto old = os.precision(17);
  os << kResultsHeader << "\n";
  for (const auto& r : rows) {
    os << r.task << "," << r.loss << "," << r.seed << "," << r.status << ",";
    write_csv_row(os, r.ood);
    os << "," << r.score_p100 << "," << r.score_p50 << "," << r.checkpoint << "\n";
  }
  os.precision(old);
}

inline std::vector<RunResult> read_results_csv(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != kResultsHeader)
    throw IoError(name + ": missing or unexpected results header");
  std::vector<RunResult> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 12) throw IoError(name + ":" + std::to_string(lineno) + ": expected 12 fields");
    const std::string where = name + ":" + std::to_string(lineno);
    RunResult r;
    r.task = f[0];
    r.loss = f[1];
    r.seed = detail::to_count(where, f[2]);
    r.status = f[3];
    r.ood.n = detail::to_count(where, f[4]);
    r.ood.mse = detail::to_double(where, f[5]);
    r.ood.aupcc = detail::to_double(where, f[6]);
    r.ood.spearman = detail::to_double(where, f[7]);
    r.ood.ndcg = detail::to_double(where, f[8]);
    r.score_p100 = detail::to_double(where, f[9]);
    r.score_p50 = detail::to_double(where, f[10]);
    r.checkpoint = f[11];
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<RunResult> read_results_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results '" + path + "'");
  return read_results_csv(in, path);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

inline MeanStd mean_std(const std::vector<double>& v) {
  require(!v.empty(), "mean of an empty sample");
  MeanStd out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  for (double x : v) out.std += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(out.std / static_cast<double>(v.size()));
  return out;
}

// One line per (task, loss) over its successful seeds.
inline std::string summary_text(const std::vector<RunResult>& rows) {
  require(!rows.empty(), "no results to summarize");
  std::vector<RunResult> sorted = rows;
  sort_results(sorted);
  std::ostringstream s;
  s << std::fixed << std::setprecision(4);
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    std::vector<double> p100, p50, aup, mse;
    std::size_t failed = 0;
    while (j < sorted.size() && sorted[j].task == sorted[i].task && sorted[j].loss == sorted[i].loss) {
      if (sorted[j].ok()) {
        p100.push_back(sorted[j].score_p100);
        p50.push_back(sorted[j].score_p50);
        aup.push_back(sorted[j].ood.aupcc);
        mse.push_back(sorted[j].ood.mse);
      } else {
        ++failed;
      }
      ++j;
    }
    s << sorted[i].task << " " << sorted[i].loss << ": runs=" << p100.size() << " failed=" << failed;
    if (!p100.empty()) {
      const auto a = mean_std(p100), b = mean_std(p50), c = mean_std(aup), d = mean_std(mse);
      s << " p100=" << a.mean << " ± " << a.std << " p50=" << b.mean << " ± " << b.std << " ood_aupcc=" << c.mean
        << " ± " << c.std << " ood_mse=" << d.mean << " ± " << d.std;
    }
    s << "\n";
    i = j;
  }
  return s.str();
}

// Writes results.csv and summary.txt into dir.
inline void emit_report(const std::vector<RunResult>& results, const std::filesystem::path& dir) {
  require(!results.empty(), "no results to report");
  std::vector<RunResult> rows = results;
  sort_results(rows);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  std::ostringstream csv;
  write_results_csv(csv, rows);
  write_text(dir / "results.csv", csv.str());
  write_text(dir / "summary.txt", summary_text(rows));
}

// Wall times vary between runs, so they live apart from results.csv.
inline void write_timings(const std::vector<RunResult>& results, const std::filesystem::path& dir) {
  std::ostringstream s;
  s << "task,loss,seed,wall_seconds\n";
  for (const auto& r : results) s << r.task << "," << r.loss << "," << r.seed << "," << r.wall_seconds << "\n";
  write_text(dir / "timings.csv", s.str());
}

inline std::vector<RunResult> run_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::filesystem::path out(cfg.out);
  std::vector<RunResult> rows;
  for (std::uint64_t seed : cfg.seeds)
    for (LossKind loss : cfg.losses) rows.push_back(run_cell(cfg, loss, seed, out));
  sort_results(rows);
  emit_report(rows, out);
  write_timings(rows, out);
  return rows;
}

// Metric rank vs final-score rank for one task. MSE ranks ascending,
// AUPCC and scores descending; rank 1 is best.
struct TaskCorrelation {
  std::string task;
  std::size_t runs = 0;
  Vector mse_rank;
  Vector aupcc_rank;
  Vector score_rank;
  double rho_mse = 0.0;
  double rho_aupcc = 0.0;
  bool degenerate = false;  // some column had no rank variance
};

struct CorrelationStudy {
  std::vector<TaskCorrelation> tasks;
  double mean_rho_mse = 0.0;    // over non-degenerate tasks
  double mean_rho_aupcc = 0.0;
};

inline constexpr std::size_t kMinCorrelationRuns = 8;

inline TaskCorrelation correlate_task(const std::string& task, const std::vector<RunResult>& runs) {
  require(runs.size() >= kMinCorrelationRuns, "correlation study needs at least 8 completed runs for " + task);
  const auto n = static_cast<Eigen::Index>(runs.size());
  Vector mse(n), aup(n), score(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = runs[static_cast<std::size_t>(i)];
    mse(i) = r.ood.mse;
    aup(i) = -r.ood.aupcc;
    score(i) = -r.score_p100;
  }
  TaskCorrelation tc;
  tc.task = task;
  tc.runs = runs.size();
  tc.mse_rank = average_ranks(mse);
  tc.aupcc_rank = average_ranks(aup);
  tc.score_rank = average_ranks(score);
  tc.rho_mse = spearman(tc.mse_rank, tc.score_rank);
  tc.rho_aupcc = spearman(tc.aupcc_rank, tc.score_rank);
  return tc;
}

// Groups successful runs by task. Tasks with a constant column are flagged
// degenerate and left out of the means; a study where every task is
// degenerate rethrows the UndefinedCorrelation.
inline CorrelationStudy correlation_study(const std::vector<RunResult>& results) {
  std::map<std::string, std::vector<RunResult>> by_task;
  for (const auto& r : results)
    if (r.ok()) by_task[r.task].push_back(r);
  require(!by_task.empty(), "correlation study has no completed runs");
  CorrelationStudy study;
  std::size_t counted = 0;
  std::string last_error;
  for (auto& [task, runs] : by_task) {
    sort_results(runs);
    try {
      study.tasks.push_back(correlate_task(task, runs));
      study.mean_rho_mse += study.tasks.back().rho_mse;
      study.mean_rho_aupcc += study.tasks.back().rho_aupcc;
      ++counted;
    } catch (const UndefinedCorrelation& e) {
      TaskCorrelation tc;
      tc.task = task;
      tc.runs = runs.size();
      tc.degenerate = true;
      study.tasks.push_back(tc);
      last_error = e.what();
    }
  }
  if (counted == 0) throw UndefinedCorrelation("every task is degenerate: " + last_error);
  study.mean_rho_mse /= static_cast<double>(counted);
  study.mean_rho_aupcc /= static_cast<double>(counted);
  return study;
}

// correlation.csv plus two-column scatter files per task and metric.
inline void write_correlation(const CorrelationStudy& study, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream s;
  s << std::setprecision(17) << "task,runs,rho_mse,rho_aupcc,degenerate\n";
  for (const auto& t : study.tasks) {
    s << t.task << "," << t.runs << "," << t.rho_mse << "," << t.rho_aupcc << "," << (t.degenerate ? 1 : 0) << "\n";
    if (t.degenerate) continue;
    std::ostringstream a, b;
    a << "mse_rank,score_rank\n";
    b << "aupcc_rank,score_rank\n";
    for (Eigen::Index i = 0; i < t.score_rank.size(); ++i) {
      a << t.mse_rank(i) << "," << t.score_rank(i) << "\n";
      b << t.aupcc_rank(i) << "," << t.score_rank(i) << "\n";
    }
    write_text(dir / ("scatter_mse_" + t.task + ".csv"), a.str());
    write_text(dir / ("scatter_aupcc_" + t.task + ".csv"), b.str());
  }
  s << "mean," << "," << study.mean_rho_mse << "," << study.mean_rho_aupcc << ",\n";
  write_text(dir / "correlation.csv", s.str());
}

}  // namespace rankmbo
