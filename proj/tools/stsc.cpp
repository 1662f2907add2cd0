// Command-line front end. Every subcommand resolves its configuration from
// defaults, then --config, then explicit flags, and writes the result to
// run_config.json in its output directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stsc/complex.hpp"
#include "stsc/data.hpp"
#include "stsc/delaunay.hpp"
#include "stsc/error.hpp"
#include "stsc/io.hpp"
#include "stsc/operators.hpp"
#include "stsc/params.hpp"
#include "stsc/rng.hpp"
#include "stsc/train.hpp"
#include "stsc/walks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stsc;

namespace {

// Sub-seed tags for the components the CLI seeds directly.
enum SeedTag : std::uint64_t { kModelInit = 101, kTrainer, kMask, kWalkSeed, kAudit, kSynth };

/// A subcommand's flags, each bound to a JSON pointer in the resolved config.
class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& help, json defaults)
      : app_(app.add_subcommand(name, help)), resolved_(std::move(defaults)) {
    app_->add_option("--config", config_path_, "JSON file with settings; flags override it");
    flag<std::uint64_t>("--seed", "/seed", "Seed for every random component");
    flag<std::string>("--out,-o", "/out", "Output directory");
  }

  template <typename T>
  CLI::Option* flag(const std::string& names, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app_->add_option(names, *value, help);
    bindings_.push_back([opt, value, pointer](json& j) {
      if (opt->count() > 0) j[json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  CLI::Option* toggle(const std::string& names, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    auto* opt = app_->add_flag(names, *value, help);
    bindings_.push_back([opt, value, pointer](json& j) {
      if (opt->count() > 0) j[json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  CLI::App* app() const { return app_; }

  /// Defaults, patched by the config file, patched by the flags.
  json resolve() {
    if (!config_path_.empty()) resolved_.merge_patch(read_json(config_path_));
    for (const auto& b : bindings_) b(resolved_);
    return resolved_;
  }

 private:
  CLI::App* app_;
  json resolved_;
  std::string config_path_;
  std::vector<std::function<void(json&)>> bindings_;
};

fs::path prepare_out(const json& cfg) {
  const fs::path out = cfg.at("out").get<std::string>();
  std::error_code ec;
  fs::create_directories(out, ec);
  require(!ec, ErrorCode::io_error, "cannot create " + out.string() + ": " + ec.message());
  write_json(out / "run_config.json", cfg);
  return out;
}

WalkConfig walk_config(const json& cfg) {
  const auto& w = cfg.at("walk");
  WalkConfig wc;
  wc.length = w.at("length").get<std::uint32_t>();
  wc.samples = w.at("samples").get<std::uint32_t>();
  wc.variant = w.at("variant").get<int>();
  wc.biased = w.at("biased").get<bool>();
  wc.seed = derive_seed(cfg.at("seed").get<std::uint64_t>(), kWalkSeed);
  wc.validate();
  return wc;
}

json walk_defaults() {
  const WalkConfig w;
  return {{"length", w.length}, {"samples", w.samples}, {"variant", w.variant}, {"biased", w.biased}};
}

void add_walk_flags(Command& c) {
  c.flag<std::uint32_t>("--length", "/walk/length", "Steps per walk");
  c.flag<std::uint32_t>("--samples", "/walk/samples", "Walks per start");
  c.flag<int>("--variant", "/walk/variant", "Full adjacency variant (1 or 2)");
  c.flag<bool>("--biased", "/walk/biased", "Order-aware transition weights (true/false)");
}

/// Vertex ids joined by '-', e.g. "1-2" for an edge.
std::string label(const SimplicialComplex& c, SimplexId s) {
  std::string out;
  for (auto v : c.vertex_set(s)) out += (out.empty() ? "" : "-") + std::to_string(v);
  return out;
}

std::vector<SimplexId> all_simplices(const SimplicialComplex& c) {
  std::vector<SimplexId> out;
  for (std::size_t g = 0; g < c.size(); ++g) out.push_back(c.from_global(g));
  return out;
}

// ---------------------------------------------------------------------------

int run_build(const json& cfg) {
  const fs::path out = prepare_out(cfg);
  const std::string kind = cfg.at("kind");
  SimplicialComplex c;
  if (kind == "edges") {
    c = SimplicialComplex::from_edges(read_edge_list(cfg.at("input").get<std::string>()), cfg.at("lift"));
  } else if (kind == "points") {
    const auto [ids, pts] = read_points_csv(cfg.at("input").get<std::string>());
    c = delaunay(pts, ids);
  } else {
    fail(ErrorCode::invalid_input, "unknown input kind '" + kind + "' (edges or points)");
  }
  save_complex(out / "complex.json", c);
  const auto n = c.counts();
  const json summary{{"vertices", n[0]}, {"edges", n[1]}, {"triangles", n[2]}};
  write_json(out / "summary.json", summary);
  std::cout << n[0] << " vertices, " << n[1] << " edges, " << n[2] << " triangles\n";
  return 0;
}

int run_walk(const json& cfg) {
  const fs::path out = prepare_out(cfg);
  const auto c = load_complex(cfg.at("complex").get<std::string>());
  const auto wc = walk_config(cfg);
  const auto A = full_adjacency(c, wc.variant);
  const auto starts = cfg.at("all_simplices").get<bool>() ? all_simplices(c) : vertex_starts(c);
  const unsigned threads = cfg.at("threads");
  const WalkSampler sampler(A, c.counts(), wc.biased);
  const auto batch = sample_walks(sampler, c, starts, wc, threads);

  const std::string format = cfg.at("format");
  if (format == "binary") {
    std::ofstream os(out / "walks.bin", std::ios::binary);
    write_walk_dump(os, batch);
    require(bool(os), ErrorCode::io_error, "failed writing walks.bin");
  } else if (format == "jsonl") {
    std::ofstream os(out / "walks.jsonl");
    write_walk_jsonl(os, batch);
    require(bool(os), ErrorCode::io_error, "failed writing walks.jsonl");
  } else {
    fail(ErrorCode::invalid_input, "unknown walk format '" + format + "' (binary or jsonl)");
  }

  // Single-step audit: empirical next-simplex frequencies against the law.
  const std::size_t draws = cfg.at("audit_draws");
  std::ofstream csv(out / "frequencies.csv");
  csv << "start,neighbor,empirical,analytic\n";
  double worst = 0.0;
  for (const auto& s : starts) {
    const std::size_t g = c.global_index(s);
    const auto row = transition_row(A, g, wc.biased, c.counts());
    std::vector<std::size_t> hits(row.size(), 0);
    StreamRng rng(derive_seed(cfg.at("seed").get<std::uint64_t>(), kAudit, g));
    for (std::size_t d = 0; d < draws; ++d) {
      const auto next = sampler.step(g, rng.uniform());
      for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i].target == next) ++hits[i];
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      const double f = draws ? double(hits[i]) / double(draws) : 0.0;
      worst = std::max(worst, std::abs(f - row[i].probability));
      csv << label(c, s) << ',' << label(c, c.from_global(row[i].target)) << ',' << f << ','
          << row[i].probability << '\n';
    }
  }
  std::cout << batch.num_starts() * batch.samples() << " walks written; max audit deviation " << worst
            << " over " << draws << " draws per start\n";
  return 0;
}

json dataset_summary(const Dataset& ds) {
  return {{"nodes", ds.num_nodes()}, {"steps", ds.steps()}, {"features", ds.features()}};
}

struct Configs {
  ModelConfig model;
  TrainConfig train;
};

Configs task_configs(const json& cfg) {
  Configs out{model_config_from_json(cfg.at("model")), train_config_from_json(cfg.at("train"))};
  const std::uint64_t seed = cfg.at("seed");
  out.train.seed = derive_seed(seed, kTrainer);
  out.train.mask.seed = derive_seed(seed, kMask);
  out.train.threads = cfg.at("threads");
  out.model.validate();
  out.train.validate();
  return out;
}

json run_metrics(const Model& m, const TaskData& data, Split split) {
  const auto kind = data.model_config().task == Task::forecast ? Baseline::persistence : Baseline::mean;
  return {{"split", to_string(split)},
          {"task", to_string(data.model_config().task)},
          {"model", to_json(evaluate(m, data, split))},
          {"baseline", {{"kind", kind == Baseline::persistence ? "persistence" : "mean"},
                        {"metrics", to_json(evaluate_baseline(data, split, kind))}}}};
}

int run_train(const json& cfg) {
  const fs::path out = prepare_out(cfg);
  const auto ds = load_dataset(cfg.at("data").get<std::string>());
  const auto [mc, tc] = task_configs(cfg);
  TaskData data(ds, mc, tc);
  Model model(mc, ds.num_nodes(), derive_seed(cfg.at("seed"), kModelInit));

  std::ofstream curve(out / "loss_curve.csv");
  curve << "epoch,lr,train_loss,val_mae,seconds\n";
  const bool quiet = cfg.at("quiet");
  const auto result = train(model, data, tc, [&](const EpochStats& s) {
    curve << s.epoch << ',' << s.lr << ',' << s.train_loss << ',' << s.val_mae << ',' << s.seconds << '\n';
    curve.flush();
    if (!quiet)
      std::printf("epoch %3zu  loss %.5f  val MAE %.5f  %.2fs\n", s.epoch, s.train_loss, s.val_mae, s.seconds);
  });
  save_params(out / "params.bin", model.params());

  auto metrics = run_metrics(model, data, Split::test);
  metrics["training"] = {{"epochs_run", result.curve.size()},
                         {"best_epoch", result.best_epoch},
                         {"best_val_mae_scaled", result.best_val_mae},
                         {"initial_train_mae_scaled", result.initial_train_mae},
                         {"final_train_mae_scaled", result.final_train_mae},
                         {"stopped_early", result.stopped_early},
                         {"steps", result.steps}};
  metrics["dataset"] = dataset_summary(ds);
  write_json(out / "metrics.json", metrics);
  std::cout << metrics["model"].dump() << '\n';
  return 0;
}

/// Loads the configuration and parameters saved by `train` in `run`.
std::pair<json, Model> load_run(const fs::path& run) {
  const auto saved = read_json(run / "run_config.json");
  const auto mc = model_config_from_json(saved.at("model"));
  auto params = load_params(run / "params.bin");
  const auto nodes = params.get("adj.U").dim(0);
  return {saved, Model(mc, nodes, std::move(params))};
}

/// The saved training config with this run's seed-independent overrides.
std::pair<json, Model> run_for_eval(const json& cfg) {
  auto [saved, model] = load_run(cfg.at("run").get<std::string>());
  if (!cfg.at("data").get<std::string>().empty()) saved["data"] = cfg.at("data");
  saved["threads"] = cfg.at("threads");
  return {saved, std::move(model)};
}

int run_eval(const json& cfg) {
  const fs::path out = prepare_out(cfg);
  const auto [saved, model] = run_for_eval(cfg);
  const auto ds = load_dataset(saved.at("data").get<std::string>());
  const auto [mc, tc] = task_configs(saved);
  require(model.num_nodes() == ds.num_nodes(), ErrorCode::invalid_input,
          "checkpoint has " + std::to_string(model.num_nodes()) + " nodes, dataset has " +
              std::to_string(ds.num_nodes()));
  TaskData data(ds, mc, tc);
  const Split split = cfg.at("split") == "val" ? Split::val : cfg.at("split") == "train" ? Split::train : Split::test;
  json metrics = run_metrics(model, data, split);
  const std::string baseline = cfg.at("baseline");
  if (!baseline.empty()) metrics["requested_baseline"] = {{"kind", baseline}, {"metrics", to_json(evaluate_baseline(data, split, parse_baseline(baseline)))}};
  write_json(out / "metrics.json", metrics);
  std::cout << metrics.dump(2) << '\n';
  return 0;
}

int run_impute(const json& cfg) {
  const fs::path out = prepare_out(cfg);
  const auto [saved, model] = run_for_eval(cfg);
  require(model.config().task == Task::impute, ErrorCode::invalid_input,
          "impute needs a checkpoint trained with task impute");
  const auto ds = load_dataset(saved.at("data").get<std::string>());
  const auto [mc, tc] = task_configs(saved);
  TaskData data(ds, mc, tc);
  const Split split = Split::test;
  const auto preds = predict_windows(model, data, split);
  const auto& starts = data.starts(split);
  const auto& mask = data.eval_mask();

  // Each missing cell takes the prediction of the last window covering it.
  std::ofstream csv(out / "imputed.csv");
  csv << "time,node,feature,observed,imputed,truth\n";
  const std::size_t N = ds.num_nodes(), F = ds.features(), W = mc.W;
  const auto range = ds.range(split);
  std::vector<float> filled(N * range.size() * F, std::nanf(""));
  for (std::size_t w = 0; w < preds.size(); ++w)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t t = 0; t < W; ++t)
        for (std::size_t f = 0; f < F; ++f)
          filled[(n * range.size() + starts[w] + t - range.begin) * F + f] = preds[w].at(n, t, f);
  for (std::size_t t = range.begin; t < range.end; ++t)
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t f = 0; f < F; ++f) {
        const bool missing = mask.at(n, t, f) != 0.0f;
        const float v = filled[(n * range.size() + t - range.begin) * F + f];
        csv << t << ',' << n << ',' << f << ',' << (missing ? 0 : 1) << ','
            << (missing ? v : ds.signal.at(n, t, f)) << ',' << ds.signal.at(n, t, f) << '\n';
      }
  json metrics = run_metrics(model, data, split);
  write_json(out / "metrics.json", metrics);
  std::cout << metrics["model"].dump() << '\n';
  return 0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int run_bench(const json& cfg) {
  const fs::path out = prepare_out(cfg);
  const auto c = load_complex(cfg.at("complex").get<std::string>());
  const auto wc = walk_config(cfg);
  const std::size_t reps = cfg.at("repetitions");
  require(reps >= 1, ErrorCode::invalid_input, "repetitions must be at least 1");
  const auto A = full_adjacency(c, wc.variant);
  const auto starts = cfg.at("all_simplices").get<bool>() ? all_simplices(c) : vertex_starts(c);
  const WalkSampler sampler(A, c.counts(), wc.biased);
  const unsigned threads = cfg.at("threads");

  std::vector<double> seconds;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batch = sample_walks(sampler, c, starts, wc, threads);
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    require(batch.num_starts() == starts.size(), ErrorCode::internal_error, "walk batch size mismatch");
  }
  const std::size_t walks = starts.size() * wc.samples;
  const std::size_t steps = walks * wc.length;
  const double med = std::max(median(seconds), 1e-12);
  // Walk storage plus the sampler's cumulative tables.
  const std::size_t memory = walks * (wc.length + 1) * (sizeof(std::uint32_t) + sizeof(std::uint16_t)) +
                             A.nnz() * (sizeof(std::uint32_t) + sizeof(double)) +
                             (A.rows() + 1) * sizeof(std::size_t);
  const json report{{"repetitions", reps},
                    {"seconds", seconds},
                    {"median_seconds", med},
                    {"walks", walks},
                    {"steps", steps},
                    {"walks_per_second", double(walks) / med},
                    {"steps_per_second", double(steps) / med},
                    {"peak_memory_bytes_estimate", memory},
                    {"threads", threads}};
  write_json(out / "bench.json", report);
  std::cout << report.dump(2) << '\n';
  return 0;
}

int run_export(const json& cfg) {
  const fs::path out = prepare_out(cfg);
  const auto c = load_complex(cfg.at("complex").get<std::string>());
  auto write = [&](const std::string& name, const SparseOperator& m) {
    std::ofstream os(out / (name + ".mtx"));
    write_matrix_market(os, m, name);
    require(bool(os), ErrorCode::io_error, "failed writing " + name + ".mtx");
  };
  write("B1", boundary(c, 1));
  write("B2", boundary(c, 2));
  for (int k = 0; k <= 2; ++k) {
    write("L" + std::to_string(k), hodge_laplacian(c, k));
    write("A" + std::to_string(k) + "_up", adjacency(c, k, AdjacencyKind::up));
    write("A" + std::to_string(k) + "_low", adjacency(c, k, AdjacencyKind::low));
    write("A" + std::to_string(k), adjacency(c, k, AdjacencyKind::either));
  }
  write("full1", full_adjacency(c, 1));
  write("full2", full_adjacency(c, 2));
  std::cout << "operators written to " << out.string() << '\n';
  return 0;
}

int run_synth(const json& cfg) {
  const fs::path out = prepare_out(cfg);
  auto sc = synth_config_from_json(cfg.at("synth"));
  sc.seed = derive_seed(cfg.at("seed"), kSynth);
  Dataset ds;
  const std::string complex_path = cfg.at("complex");
  if (complex_path.empty()) {
    const auto desk = desk_complex();
    ds = synth(desk.complex, sc);
    std::tie(ds.edge_feats, ds.tri_feats) = geometric_features(desk.complex, desk.positions);
  } else {
    ds = synth(load_complex(complex_path), sc);
  }
  save_dataset(out, ds);
  std::cout << dataset_summary(ds).dump() << '\n';
  return 0;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::numeric_error: return 3;
    case ErrorCode::internal_error: return 1;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporal modelling on simplicial complexes"};
  app.require_subcommand(1);

  const json base{{"seed", 0}, {"threads", 1}};
  auto with = [&base](json extra) {
    json j = base;
    j.update(extra);
    return j;
  };

  Command build(app, "build", "Build a complex from an edge list or a point set",
                with({{"input", ""}, {"kind", "edges"}, {"lift", true}, {"out", "out/build"}}));
  build.flag<std::string>("input", "/input", "Edge list or points CSV")->required();
  build.flag<std::string>("--kind", "/kind", "edges or points");
  build.flag<bool>("--lift", "/lift", "Add every 3-clique as a triangle (true/false)");

  Command walk(app, "walk", "Sample random walks and audit the step law",
               with({{"complex", ""}, {"walk", walk_defaults()}, {"format", "binary"},
                     {"all_simplices", false}, {"audit_draws", 10000}, {"out", "out/walk"}}));
  walk.flag<std::string>("complex", "/complex", "Complex JSON")->required();
  add_walk_flags(walk);
  walk.flag<std::string>("--format", "/format", "binary or jsonl");
  walk.toggle("--all-simplices", "/all_simplices", "Start from every simplex instead of every vertex");
  walk.flag<std::size_t>("--audit-draws", "/audit_draws", "Single-step draws per start for the audit");
  walk.flag<unsigned>("--threads", "/threads", "Worker threads");

  auto task_defaults = [&](Task task, const char* out) {
    ModelConfig mc;
    mc.task = task;
    return with({{"data", ""}, {"model", to_json(mc)}, {"train", to_json(TrainConfig{})},
                 {"quiet", false}, {"out", out}});
  };
  Command trn(app, "train", "Train a forecasting or imputation model",
              task_defaults(Task::forecast, "out/train"));
  trn.flag<std::string>("data", "/data", "Dataset directory")->required();
  trn.flag<std::string>("--task", "/model/task", "forecast or impute");
  trn.flag<std::size_t>("--window", "/model/W", "Input window W");
  trn.flag<std::size_t>("--horizon", "/model/H", "Forecast horizon H");
  trn.flag<std::size_t>("--embed", "/model/D", "Embedding width D");
  trn.flag<std::size_t>("--blocks", "/model/blocks", "Number of blocks");
  trn.flag<std::size_t>("--walk-length", "/model/walk_length", "Walk length L");
  trn.flag<std::size_t>("--walk-samples", "/model/walk_samples", "Walks per node S");
  trn.flag<int>("--walk-variant", "/model/walk_variant", "Full adjacency variant");
  trn.flag<bool>("--anonymous", "/model/use_anonymous", "Anonymous walk channel (true/false)");
  trn.flag<bool>("--adaptive", "/model/use_adaptive", "Adaptive adjacency and gating (true/false)");
  trn.flag<bool>("--graph-norm", "/model/use_graph_norm", "Graph-wise layer norm (true/false)");
  trn.flag<std::size_t>("--epochs", "/train/epochs", "Maximum epochs");
  trn.flag<std::size_t>("--batch", "/train/batch_size", "Batch size");
  trn.flag<std::size_t>("--patience", "/train/patience", "Early stopping patience, 0 disables");
  trn.flag<double>("--lr", "/train/lr", "Learning rate");
  trn.flag<std::string>("--loss", "/train/loss", "mae or mse");
  trn.flag<bool>("--freeze-walks", "/train/freeze_walks", "Reuse one walk set every epoch (true/false)");
  trn.flag<double>("--point-rate", "/train/mask/point_rate", "Imputation point missing rate");
  trn.flag<double>("--block-prob", "/train/mask/block_prob", "Imputation block failure rate");
  trn.flag<unsigned>("--threads", "/threads", "Worker threads");
  trn.toggle("--quiet,-q", "/quiet", "No per-epoch output");

  Command ev(app, "eval", "Evaluate a trained run on a split",
             with({{"run", ""}, {"data", ""}, {"split", "test"}, {"baseline", ""}, {"out", "out/eval"}}));
  ev.flag<std::string>("run", "/run", "Directory written by train")->required();
  ev.flag<std::string>("--data", "/data", "Dataset directory (defaults to the training one)");
  ev.flag<std::string>("--split", "/split", "train, val or test");
  ev.flag<std::string>("--baseline", "/baseline", "Also report persistence or mean");
  ev.flag<unsigned>("--threads", "/threads", "Worker threads");

  Command imp(app, "impute", "Fill the masked test cells with a trained imputation model",
              with({{"run", ""}, {"data", ""}, {"out", "out/impute"}}));
  imp.flag<std::string>("run", "/run", "Directory written by train --task impute")->required();
  imp.flag<std::string>("--data", "/data", "Dataset directory (defaults to the training one)");
  imp.flag<unsigned>("--threads", "/threads", "Worker threads");

  Command bench(app, "bench", "Walk sampling throughput",
                with({{"complex", ""}, {"walk", walk_defaults()}, {"repetitions", 5},
                      {"all_simplices", false}, {"out", "out/bench"}}));
  bench.flag<std::string>("complex", "/complex", "Complex JSON")->required();
  add_walk_flags(bench);
  bench.flag<std::size_t>("--repetitions", "/repetitions", "Timed repetitions");
  bench.toggle("--all-simplices", "/all_simplices", "Start from every simplex instead of every vertex");
  bench.flag<unsigned>("--threads", "/threads", "Worker threads");

  Command exp(app, "export-operators", "Write boundary, adjacency and Laplacian matrices as MatrixMarket",
              with({{"complex", ""}, {"out", "out/operators"}}));
  exp.flag<std::string>("complex", "/complex", "Complex JSON")->required();

  Command syn(app, "synth", "Generate a synthetic dataset directory",
              with({{"complex", ""}, {"synth", to_json(SynthConfig{})}, {"out", "out/data"}}));
  syn.flag<std::string>("--complex", "/complex", "Complex JSON (default: the built-in 12-node desk complex)");
  syn.flag<std::size_t>("--steps", "/synth/T_total", "Series length");
  syn.flag<double>("--coupling", "/synth/coupling", "Diffusion coupling in [0, 1]");
  syn.flag<double>("--noise", "/synth/noise", "Observation noise std");

  const std::vector<std::pair<Command*, int (*)(const json&)>> commands{
      {&build, run_build}, {&walk, run_walk}, {&trn, run_train}, {&ev, run_eval},
      {&imp, run_impute},  {&bench, run_bench}, {&exp, run_export}, {&syn, run_synth}};

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto& [cmd, fn] : commands)
      if (cmd->app()->parsed()) return fn(cmd->resolve());
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error (invalid_input): configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
