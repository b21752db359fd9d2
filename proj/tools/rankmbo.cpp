// rankmbo command-line driver.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rankmbo/harness.hpp"

namespace fs = std::filesystem;
using namespace rankmbo;

namespace {

// Config file plus per-key overrides shared by train and pipeline.
struct ConfigOptions {
  std::string file;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "flat key = value config file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override one key, e.g. --set train.epochs=20");
    for (const auto& key : config_keys())
      if (key != "run.seeds" && key != "run.out") app->add_option("--" + key, overrides[key], "config key " + key);
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg = file.empty() ? ExperimentConfig{} : load_config(file);
    for (const auto& [key, value] : overrides)
      if (!value.empty()) set_config_value(cfg, key, value);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw InvalidInput("--set expects key=value, got '" + s + "'");
      set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    return cfg;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text(path, text);
}

int cmd_train(const ConfigOptions& co, std::uint64_t seed, const std::string& out) {
  ExperimentConfig cfg = co.build();
  cfg.validate();
  const TaskData data = generate_task_dataset(cfg.task, seed);
  const TrainValidation tv = split(data.offline, 1.0 - cfg.train.validation_ratio, Rng::mix(seed, kSplitStream));
  auto train_src = std::make_shared<const OfflineDataset>(tv.train);
  auto val_src = std::make_shared<const OfflineDataset>(tv.validation);
  const auto trainset = augment(train_src, cfg.lists, cfg.list_length, Rng::mix(seed, kAugmentStream));
  const auto valset = augment(val_src, cfg.val_lists, cfg.list_length, Rng::mix(seed, kValAugmentStream));
  TrainConfig tc = cfg.train;
  tc.loss.kind = cfg.losses.front();
  tc.seed = Rng::mix(seed, kTrainStream);
  const TrainResult tr = train(trainset, valset, tc);

  const fs::path dir(out);
  fs::create_directories(dir);
  tr.net.save_file((dir / "model.txt").string());
  std::ostringstream stats, rec, offline;
  save_stats(stats, tv.train.stats);
  tr.record.write_csv(rec);
  write_csv(offline, data.offline.designs, data.offline.scores);
  write_file(dir / "stats.txt", stats.str());
  write_file(dir / "train.csv", rec.str());
  write_file(dir / "offline.csv", offline.str());
  std::cout << "best epoch " << tr.record.best_epoch << " val loss " << tr.record.best_val_loss << "\n";
  return 0;
}

int cmd_search(const std::string& model_path, const std::string& stats_path, const std::string& data_path,
               const SearchConfig& sc, const std::string& out, const std::string& trajectory) {
  const DenseNet net = DenseNet::load_file(model_path);
  std::ifstream sin(stats_path);
  if (!sin) throw IoError("cannot open stats '" + stats_path + "'");
  const NormStats stats = load_stats(sin);
  const OfflineDataset offline = apply_zscore(read_csv_file(data_path), stats);
  const AdaptedModel model = adapt(net, offline);
  SearchConfig cfg = sc;
  cfg.k = std::min<std::size_t>(cfg.k, static_cast<std::size_t>(offline.size()));
  const SearchResult res = ascend(model, cfg, select_starts(offline, cfg.k), !trajectory.empty());
  std::ostringstream s;
  write_designs_csv(s, denormalize_designs(res.finals, stats));
  write_file(out, s.str());
  if (!trajectory.empty()) {
    std::vector<Matrix> raw;
    for (const auto& step : res.trajectory) raw.push_back(denormalize_designs(step, stats));
    std::ostringstream t;
    write_trajectory_csv(t, raw);
    write_file(trajectory, t.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline model-based optimization with learning-to-rank surrogates"};
  app.require_subcommand(1);

  // train
  ConfigOptions train_opts;
  std::uint64_t train_seed = 0;
  std::string train_out;
  auto* train_cmd = app.add_subcommand("train", "train one surrogate on a synthetic task");
  train_opts.attach(train_cmd);
  train_cmd->add_option("--seed", train_seed, "task and training seed")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();

  // search
  std::string model_path, stats_path, data_path, search_out, trajectory_out, rule = "adam";
  SearchConfig search_cfg;
  auto* search_cmd = app.add_subcommand("search", "gradient ascent from the top-k offline designs");
  search_cmd->add_option("--model", model_path, "checkpoint from train")->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--stats", stats_path, "normalization stats from train")->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--data", data_path, "raw offline CSV (x0..,y)")->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--search.eta", search_cfg.step_size, "step size");
  search_cmd->add_option("--search.steps", search_cfg.steps, "ascent steps T");
  search_cmd->add_option("--search.rule", rule, "adam or plain");
  search_cmd->add_option("--search.k", search_cfg.k, "number of starts");
  search_cmd->add_option("--out", search_out, "candidate CSV")->required();
  search_cmd->add_option("--trajectory", trajectory_out, "optional trajectory CSV");

  // pipeline
  ConfigOptions pipe_opts;
  std::string pipe_seeds, pipe_out;
  auto* pipe_cmd = app.add_subcommand("pipeline", "full (seed x loss) grid with reports");
  pipe_opts.attach(pipe_cmd);
  pipe_cmd->add_option("--seed", pipe_seeds, "comma-separated seeds")->required();
  pipe_cmd->add_option("--out", pipe_out, "output directory")->required();

  // sweep-heavytail
  std::string axis = "scale", values, sweep_out;
  SweepConfig sweep;
  auto* sweep_cmd = app.add_subcommand("sweep-heavytail", "linear MSE vs RankCosine slopes under heavy-tailed noise");
  sweep_cmd->add_option("--axis", axis, "scale or probability")->check(CLI::IsMember({"scale", "probability"}));
  sweep_cmd->add_option("--values", values, "comma-separated values of the swept parameter")->required();
  sweep_cmd->add_option("--dof", sweep.base.dof, "Student-t degrees of freedom");
  sweep_cmd->add_option("--scale", sweep.base.scale, "noise scale when sweeping probability");
  sweep_cmd->add_option("--probability", sweep.base.probability, "noise probability when sweeping scale");
  sweep_cmd->add_option("--points", sweep.points, "points per dataset");
  sweep_cmd->add_option("--seeds", sweep.seeds, "seeds per value");
  sweep_cmd->add_option("--seed", sweep.base_seed, "first seed");
  sweep_cmd->add_option("--lr", sweep.fit.learning_rate, "Adam learning rate of the RankCosine fit");
  sweep_cmd->add_option("--epochs", sweep.fit.epochs, "Adam steps of the RankCosine fit");
  sweep_cmd->add_option("--out", sweep_out, "CSV path (stdout when omitted)");

  // bound
  BoundInputs bound;
  std::string phi = "exponential", algorithm = "rankcosine";
  auto* bound_cmd = app.add_subcommand("bound", "evaluate the ranking generalization bound");
  bound_cmd->add_option("--phi", phi, "linear, exponential or sigmoid")
      ->check(CLI::IsMember({"linear", "exponential", "sigmoid"}));
  bound_cmd->add_option("--algorithm", algorithm, "rankcosine or listnet")->check(CLI::IsMember({"rankcosine", "listnet"}));
  bound_cmd->add_option("--a", bound.a, "phi slope");
  bound_cmd->add_option("--b", bound.b, "phi offset (linear)");
  bound_cmd->add_option("--B", bound.weight_bound, "weight norm bound");
  bound_cmd->add_option("--M", bound.design_bound, "design norm bound");
  bound_cmd->add_option("--m", bound.list_length, "list length");
  bound_cmd->add_option("--n", bound.samples, "number of lists");
  bound_cmd->add_option("--delta", bound.delta, "failure probability");

  // correlate
  std::string corr_results, corr_out;
  auto* corr_cmd = app.add_subcommand("correlate", "rank correlation of OOD metrics with final scores");
  corr_cmd->add_option("--results", corr_results, "results.csv from pipeline")->required()->check(CLI::ExistingFile);
  corr_cmd->add_option("--out", corr_out, "output directory")->required();

  // report
  std::string rep_results, rep_out;
  auto* rep_cmd = app.add_subcommand("report", "rewrite results.csv and summary.txt from results");
  rep_cmd->add_option("--results", rep_results, "results.csv from pipeline")->required()->check(CLI::ExistingFile);
  rep_cmd->add_option("--out", rep_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(train_opts, train_seed, train_out);
    if (*search_cmd) {
      search_cfg.rule = parse_ascent_rule(rule);
      return cmd_search(model_path, stats_path, data_path, search_cfg, search_out, trajectory_out);
    }
    if (*pipe_cmd) {
      ExperimentConfig cfg = pipe_opts.build();
      set_config_value(cfg, "run.seeds", pipe_seeds);
      cfg.out = pipe_out;
      const auto rows = run_pipeline(cfg);
      std::size_t failed = 0;
      for (const auto& r : rows) failed += r.ok() ? 0 : 1;
      std::cout << summary_text(rows);
      if (failed) std::cerr << failed << " cell(s) failed; see results.csv\n";
      return failed ? 2 : 0;
    }
    if (*sweep_cmd) {
      sweep.axis = axis == "scale" ? SweepAxis::scale : SweepAxis::probability;
      for (const auto& v : detail::split_list(values)) sweep.values.push_back(detail::to_double("--values", v));
      const auto rows = heavy_tail_sweep(sweep);
      std::ostringstream s;
      write_sweep_csv(s, rows, axis);
      if (sweep_out.empty()) std::cout << s.str();
      else write_file(sweep_out, s.str());
      return 0;
    }
    if (*bound_cmd) {
      bound.phi = phi == "linear" ? PhiFamily::linear : phi == "sigmoid" ? PhiFamily::sigmoid : PhiFamily::exponential;
      bound.algorithm = algorithm == "listnet" ? LtrAlgorithm::listnet : LtrAlgorithm::rankcosine;
      std::cout.precision(17);
      std::cout << generalization_bound(bound).bound << "\n";
      return 0;
    }
    if (*corr_cmd) {
      const auto study = correlation_study(read_results_file(corr_results));
      write_correlation(study, corr_out);
      std::cout << "mean rho(mse rank, score rank) = " << study.mean_rho_mse
                << "\nmean rho(aupcc rank, score rank) = " << study.mean_rho_aupcc << "\n";
      return 0;
    }
    if (*rep_cmd) {
      const auto rows = read_results_file(rep_results);
      emit_report(rows, rep_out);
      std::cout << summary_text(rows);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
