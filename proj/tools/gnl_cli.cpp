// SPDX-License-Identifier: Apache-2.0
//
// gnl: train, evaluate and inspect GNL models from the command line.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "gnl/gnl.hpp"

namespace {

using namespace gnl;

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

Dataset load_dataset(const std::string& data, const std::string& edges) {
  Dataset ds = load_csv(data);
  if (!edges.empty()) ds.prior = load_edge_list(edges, ds.node_ids);
  return ds;
}

/// Checks the data against the checkpoint and normalises it with the stored
/// statistics.
Dataset normalized_for(const Checkpoint& ckpt, const Dataset& raw) {
  if (raw.node_ids != ckpt.node_ids) {
    throw ConfigError("data node ids do not match the checkpoint's node ids");
  }
  if (raw.features != ckpt.model.config.input_dim) {
    throw ConfigError("data has " + std::to_string(raw.features) +
                      " features per node, checkpoint expects " +
                      std::to_string(ckpt.model.config.input_dim));
  }
  if (!ckpt.stats) throw ConfigError("checkpoint carries no normalisation statistics");
  return apply_zscore(raw, *ckpt.stats);
}

std::vector<Tensor> window_at(const Dataset& ds, std::size_t start, std::size_t window) {
  if (start + window > ds.length()) {
    throw ArgumentError("window [" + std::to_string(start) + ", " + std::to_string(start + window) +
                        ") exceeds the " + std::to_string(ds.length()) + " rows of the data");
  }
  std::vector<Tensor> out;
  for (std::size_t t = start; t < start + window; ++t) out.push_back(ds.snapshot(t));
  return out;
}

struct TrainArgs {
  std::string config, data, edges, out, history;
};

int run_train(const TrainArgs& a) {
  const ModelConfig config = load_config(a.config);
  const Dataset ds = load_dataset(a.data, a.edges);
  const auto run = train(config, ds);
  save_checkpoint(a.out, Checkpoint{run.model, ds.node_ids, run.stats});
  const std::string history = a.history.empty() ? a.out + ".history.csv" : a.history;
  auto out = open_output(history);
  write_history(out, run.history);
  std::printf("trained %zu epochs, best epoch %zu; checkpoint %s, history %s\n",
              run.history.size(), run.best_epoch, a.out.c_str(), history.c_str());
  return 0;
}

struct PredictArgs {
  std::string model, data, out;
  std::size_t horizon = 0;
};

/// Forecasts the `horizon` snapshots following the last window of the data.
int run_predict(const PredictArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.model);
  const Dataset raw = load_csv(a.data);
  const Dataset ds = normalized_for(ckpt, raw);
  const std::size_t tau = ckpt.model.config.window;
  const std::size_t horizon = a.horizon ? a.horizon : ckpt.model.config.horizon;
  if (ds.length() < tau) {
    throw ArgumentError("data has " + std::to_string(ds.length()) + " rows, window is " +
                        std::to_string(tau));
  }
  const auto steps = predict_horizon(ckpt.model, window_at(ds, ds.length() - tau, tau), horizon);

  Dataset forecast;
  forecast.node_ids = raw.node_ids;
  forecast.features = raw.features;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    forecast.timestamps.push_back("+" + std::to_string(s + 1));
    const Tensor values = ckpt.stats->inverse(steps[s]);
    forecast.values.insert(forecast.values.end(), values.values().begin(), values.values().end());
  }
  auto out = open_output(a.out);
  write_csv(out, forecast, "step");
  std::printf("wrote %zu forecast steps to %s\n", steps.size(), a.out.c_str());
  return 0;
}

struct EvalArgs {
  std::string model, data, out, split = "test";
};

int run_eval(const EvalArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.model);
  const Dataset ds = normalized_for(ckpt, load_csv(a.data));
  const auto& cfg = ckpt.model.config;
  const std::size_t count = window_count(ds.length(), cfg.window, cfg.horizon);
  const Split split = make_split(count, cfg.horizon, cfg.train_fraction, cfg.validation_fraction);
  IndexRange range;
  if (a.split == "train") range = split.train;
  else if (a.split == "validation") range = split.validation;
  else if (a.split == "test") range = split.test;
  else range = {0, count};
  const auto samples = make_windows(ds, cfg.window, cfg.horizon, range);
  if (samples.empty()) throw EvaluationError("the " + a.split + " split has no windows");
  const Metrics m = evaluate(ckpt.model, samples, *ckpt.stats);
  if (a.out.empty()) {
    write_metrics(std::cout, m);
  } else {
    auto out = open_output(a.out);
    write_metrics(out, m);
    std::printf("wrote metrics for %zu %s windows to %s\n", samples.size(), a.split.c_str(),
                a.out.c_str());
  }
  return 0;
}

struct ExportArgs {
  std::string model, data, out;
  std::optional<std::size_t> start;
};

int run_export(const ExportArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.model);
  const Dataset ds = normalized_for(ckpt, load_csv(a.data));
  const std::size_t tau = ckpt.model.config.window;
  if (ds.length() < tau) {
    throw ArgumentError("data has " + std::to_string(ds.length()) + " rows, window is " +
                        std::to_string(tau));
  }
  const std::size_t start = a.start ? *a.start : ds.length() - tau;
  const auto paths = export_attention(ckpt.model, window_at(ds, start, tau), ckpt.node_ids, a.out);
  std::printf("wrote %zu attention matrices to %s\n", paths.size(), a.out.c_str());
  return 0;
}

struct BoundsArgs {
  std::string method = "apg", out;
  std::size_t k = 200, n = 5;
  std::uint64_t seed = 0;
  double step_fraction = 0.9;
};

int run_verify_bounds(const BoundsArgs& a) {
  const auto inst = random_lasso_instance(a.n, a.seed);
  const double step = a.step_fraction / inst.lipschitz;
  const auto report = verify_theorem_bounds(inst, parse_prox_method(a.method), step, a.k);
  if (!a.out.empty()) {
    auto out = open_output(a.out);
    report.write(out);
  } else {
    report.write(std::cout);
  }
  std::fprintf(stderr, "%s: n=%zu t=%.6g k=%zu violations=%zu worst_margin=%.6g\n",
               a.method.c_str(), a.n, step, a.k, report.violations, report.worst_margin);
  return report.violations == 0 ? 0 : 2;
}

struct GradCheckArgs {
  std::size_t seeds = 10;
  std::string reg = "fro";
  double tolerance = 1e-5;
};

int run_grad_check(const GradCheckArgs& a) {
  ModelCheckSpec spec;
  if (a.reg == "none") spec.regularizer = Regularizer::kNone;
  else if (a.reg == "fro") spec.regularizer = Regularizer::kFro;
  else if (a.reg == "l1") spec.regularizer = Regularizer::kL1;
  else throw ArgumentError("unknown regulariser '" + a.reg + "' (expected none, fro or l1)");
  double worst = 0.0;
  for (std::size_t s = 0; s < a.seeds; ++s) {
    spec.seed = s;
    const auto r = check_model_gradient(spec);
    std::printf("seed %zu: max relative error %.3e (array %s, entry %zu)\n", s,
                r.max_relative_error, kParameterNames[r.worst_param], r.worst_index);
    worst = std::max(worst, r.max_relative_error);
  }
  std::printf("worst %.3e, tolerance %.1e: %s\n", worst, a.tolerance,
              worst < a.tolerance ? "ok" : "FAILED");
  return worst < a.tolerance ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph neural lasso: dynamic network regression"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Fit a model and write a checkpoint");
  train_cmd->add_option("--config", train_args.config, "Config file (key = value)")->required();
  train_cmd->add_option("--data", train_args.data, "Wide CSV data")->required();
  train_cmd->add_option("--edges", train_args.edges, "Prior edge list (source target per line)");
  train_cmd->add_option("--out", train_args.out, "Checkpoint path")->required();
  train_cmd->add_option("--history", train_args.history, "Loss history CSV (default <out>.history.csv)");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Forecast past the end of the data");
  predict_cmd->add_option("--model", predict_args.model, "Checkpoint")->required();
  predict_cmd->add_option("--data", predict_args.data, "Wide CSV data")->required();
  predict_cmd->add_option("--out", predict_args.out, "Forecast CSV")->required();
  predict_cmd->add_option("--horizon", predict_args.horizon, "Steps to forecast (default: config horizon)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Report MAE, RMSE and R^2 in original units");
  eval_cmd->add_option("--model", eval_args.model, "Checkpoint")->required();
  eval_cmd->add_option("--data", eval_args.data, "Wide CSV data")->required();
  eval_cmd->add_option("--out", eval_args.out, "Metrics report (default stdout)");
  eval_cmd->add_option("--split", eval_args.split, "Windows to score")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}));

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export-attention", "Write per-step influence matrices");
  export_cmd->add_option("--model", export_args.model, "Checkpoint")->required();
  export_cmd->add_option("--data", export_args.data, "Wide CSV data")->required();
  export_cmd->add_option("--out", export_args.out, "Output directory")->required();
  export_cmd->add_option("--start", export_args.start, "First row of the window (default: last window)");

  BoundsArgs bounds_args;
  auto* bounds_cmd = app.add_subcommand("verify-bounds", "Check the pg/apg convergence bounds on a lasso instance");
  bounds_cmd->add_option("--method", bounds_args.method, "pg or apg")->check(CLI::IsMember({"pg", "apg"}));
  bounds_cmd->add_option("--k", bounds_args.k, "Iterations")->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--n", bounds_args.n, "Instance dimension")->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--seed", bounds_args.seed, "Instance seed");
  bounds_cmd->add_option("--step-fraction", bounds_args.step_fraction, "Step size as a fraction of 1/L")
      ->check(CLI::Range(0.0, 1.0));
  bounds_cmd->add_option("--out", bounds_args.out, "Report CSV (default stdout)");

  GradCheckArgs grad_args;
  auto* grad_cmd = app.add_subcommand("grad-check", "Finite-difference check of the full objective");
  grad_cmd->add_option("--seeds", grad_args.seeds, "Number of random models")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--reg", grad_args.reg, "none, fro or l1");
  grad_cmd->add_option("--tolerance", grad_args.tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train_cmd) return run_train(train_args);
    if (*predict_cmd) return run_predict(predict_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*export_cmd) return run_export(export_args);
    if (*bounds_cmd) return run_verify_bounds(bounds_args);
    if (*grad_cmd) return run_grad_check(grad_args);
  } catch (const gnl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
