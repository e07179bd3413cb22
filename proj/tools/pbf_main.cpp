// pbf: desk-scale LPBF thermal pipelines
//   fd          finite-difference reference solution
//   pinn        train one physics-informed surrogate per scenario
//   endeeponet  train the path-conditioned operator surrogate
//   sequential  train the track-prefix tree of chained PINNs
//   compose     assemble a full-scenario surrogate from a tree store
//   eval        compare any surrogate against an fd reference run
//   report      merge eval reports into one summary table

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pbf/config.hpp"
#include "pbf/model_io.hpp"
#include "pbf/operator_net.hpp"
#include "pbf/parallel.hpp"
#include "pbf/sequential.hpp"

namespace fs = std::filesystem;
using namespace pbf;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed_override = -1;
  int threads = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool out_required = true) {
  cmd->add_option("--config", args.config_path, "JSON config file (defaults when omitted)");
  auto* out = cmd->add_option("--out", args.out_dir, "output directory");
  if (out_required) out->required();
  cmd->add_option("--seed", args.seed_override, "override the config seed");
  cmd->add_option("--threads", args.threads, "cap worker threads (0 = hardware)");
}

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? parse_config(nlohmann::json::object())
                                           : parse_config_file(args.config_path);
  if (args.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed_override);
  if (args.threads >= 0) cfg.threads = args.threads;
  set_thread_count(cfg.threads);
  std::fprintf(stderr, "laser penetration depth c = %g m (radius %g m)\n",
               cfg.laser.penetration_depth, cfg.laser.radius);
  return cfg;
}

std::string scenario_name(const std::vector<int>& order) {
  std::string name;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) name += '-';
    name += std::to_string(order[i]);
  }
  return name;
}

std::vector<double> resolved_snapshot_times(const RunConfig& cfg,
                                            const std::vector<int>& order, double end_time) {
  if (!cfg.solver.snapshot_times.empty()) return cfg.solver.snapshot_times;
  std::vector<double> times;
  const double tau = cfg.per_track_duration();
  for (std::size_t k = 1; k <= order.size(); ++k) times.push_back(tau * k);
  if (end_time > times.back() + 1e-15) times.push_back(end_time);
  return times;
}

double resolved_end_time(const RunConfig& cfg, const std::vector<int>& order) {
  if (cfg.simulation.end_time > 0.0) return cfg.simulation.end_time;
  return cfg.scan_duration(order) + cfg.cooling_duration();
}

int run_fd(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);
  std::vector<std::string> artifacts;

  for (const std::vector<int>& order : cfg.scenarios) {
    const std::string name = scenario_name(order);
    const fs::path dir = fs::path(args.out_dir) / ("s_" + name);
    fs::create_directories(dir);

    FdConfig fd_cfg;
    fd_cfg.grid = cfg.solver.make_grid(cfg.geometry);
    fd_cfg.material = cfg.material;
    fd_cfg.laser = cfg.laser;
    fd_cfg.bc = cfg.bc;
    fd_cfg.initial_temperature = cfg.simulation.initial_temperature;
    fd_cfg.safety = cfg.solver.safety;
    fd_cfg.end_time = resolved_end_time(cfg, order);
    fd_cfg.snapshot_times = resolved_snapshot_times(cfg, order, fd_cfg.end_time);

    Scenario scenario = cfg.scenario(order);
    std::fprintf(stderr, "fd %s: %d x %d x %d grid, end %.4g ms\n", name.c_str(), fd_cfg.grid.nx,
                 fd_cfg.grid.ny, fd_cfg.grid.nz, fd_cfg.end_time * 1e3);
    FdResult result = solve(fd_cfg, scenario);

    for (std::size_t s = 0; s < result.snapshots.size(); ++s) {
      char base[64];
      std::snprintf(base, sizeof(base), "snap_%03zu", s);
      save_field(result.snapshots[s], dir / (std::string(base) + ".pbft"));
      save_field_csv(result.snapshots[s], dir / (std::string(base) + ".csv"));
      artifacts.push_back((dir / (std::string(base) + ".pbft")).string());
    }
    std::fprintf(stderr, "fd %s: %zu snapshots, dt %.3g s, peak %.1f K\n", name.c_str(),
                 result.snapshots.size(), result.dt,
                 result.snapshots.empty() ? 0.0 : result.snapshots.back().max_value());
  }
  write_manifest(cfg, "fd", artifacts, args.out_dir);
  return 0;
}

int run_pinn(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);
  std::vector<std::string> artifacts;

  for (const std::vector<int>& order : cfg.scenarios) {
    const std::string name = scenario_name(order);
    const fs::path dir = fs::path(args.out_dir) / ("s_" + name);
    fs::create_directories(dir);

    PinnProblem problem;
    problem.scenario = cfg.scenario(order);
    problem.box = cfg.geometry.domain_box(0.0, cfg.scan_duration(order));
    problem.material = cfg.material;
    problem.laser = cfg.laser;
    problem.bc = cfg.bc;
    problem.initial_temperature = cfg.simulation.initial_temperature;

    std::vector<TrainingRecord> trace;
    PinnSurrogate model =
        train_pinn(problem, cfg.training, derive_seed(cfg.seed, "pinn-" + name), &trace);
    save_pinn(model, dir / "model.pbfm");
    save_training_trace(trace, dir / "training_trace.csv");
    artifacts.push_back((dir / "model.pbfm").string());
    std::fprintf(stderr, "pinn %s: %d iterations, status %s, final losses %.3e/%.3e/%.3e\n",
                 name.c_str(), model.meta.iterations, model.meta.status.c_str(),
                 model.meta.final_losses.ic, model.meta.final_losses.bc,
                 model.meta.final_losses.pde);
  }
  write_manifest(cfg, "pinn", artifacts, args.out_dir);
  return 0;
}

int run_endeeponet(const CommonArgs& args) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);

  std::vector<Scenario> scenarios;
  for (const std::vector<int>& order : cfg.scenarios) scenarios.push_back(cfg.scenario(order));

  PinnProblem shared;
  shared.box = cfg.geometry.domain_box(0.0, scenarios.front().total_duration());
  shared.material = cfg.material;
  shared.laser = cfg.laser;
  shared.bc = cfg.bc;
  shared.initial_temperature = cfg.simulation.initial_temperature;

  OperatorTrainingResult result =
      train_endeeponet(shared, scenarios, cfg.training, cfg.op, derive_seed(cfg.seed, "op"));
  save_endeeponet(result, fs::path(args.out_dir) / "bundle");

  // path encodings for inspection
  std::FILE* enc = std::fopen((fs::path(args.out_dir) / "encodings.csv").string().c_str(), "w");
  if (enc) {
    std::fputs("scenario,sample,x,y\n", enc);
    for (std::size_t s = 0; s < scenarios.size(); ++s)
      for (int k = 0; 2 * k + 1 < result.encodings[s].size(); ++k)
        std::fprintf(enc, "%s,%d,%.9g,%.9g\n", scenarios[s].name().c_str(), k,
                     result.encodings[s][2 * k], result.encodings[s][2 * k + 1]);
    std::fclose(enc);
  }
  save_training_trace(result.trace, fs::path(args.out_dir) / "training_trace.csv");
  write_manifest(cfg, "endeeponet", {(fs::path(args.out_dir) / "bundle").string()},
                 args.out_dir);
  std::fprintf(stderr, "endeeponet: %d iterations, status %s\n", result.meta.iterations,
               result.meta.status.c_str());
  return 0;
}

int run_sequential(const CommonArgs& args, bool resume) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);

  TrackTree tree =
      build_tree(cfg.geometry.tracks, cfg.laser.scan_speed, cfg.cooling_duration());
  SequentialProblem problem;
  problem.domain = cfg.geometry.domain_box(0.0, 1.0);
  problem.material = cfg.material;
  problem.laser = cfg.laser;
  problem.bc = cfg.bc;
  problem.initial_temperature = cfg.simulation.initial_temperature;

  train_tree(tree, problem, cfg.training, cfg.seed, fs::path(args.out_dir) / "tree", resume);
  write_manifest(cfg, "sequential", {(fs::path(args.out_dir) / "tree").string()}, args.out_dir);
  std::fprintf(stderr, "sequential: %zu nodes trained/loaded\n", tree.nodes.size());
  return 0;
}

int run_compose(const CommonArgs& args, const std::string& tree_dir,
                const std::string& scenario) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);
  TrackTree tree = load_tree(tree_dir.empty() ? fs::path(args.out_dir) / "tree"
                                              : fs::path(tree_dir));
  std::vector<int> order;
  for (const std::string& part : CLI::detail::split(scenario, '-'))
    order.push_back(std::stoi(part));
  ComposedSurrogate composed = compose(tree, order);

  auto gaps = handoff_discontinuity(composed, cfg.geometry.domain_box(0.0, 1.0), 1000,
                                    derive_seed(cfg.seed, "handoff"));
  nlohmann::json summary = {{"scenario", composed.scenario_name()},
                            {"interval_boundaries", composed.interval_boundaries()},
                            {"handoff_max_abs_K", gaps}};
  std::ofstream out(fs::path(args.out_dir) / ("compose_" + composed.scenario_name() + ".json"));
  out << summary.dump(2) << "\n";
  write_manifest(cfg, "compose", {}, args.out_dir);
  for (std::size_t i = 0; i < gaps.size(); ++i)
    std::fprintf(stderr, "handoff %zu: max |dT| = %.3f K\n", i, gaps[i]);
  return 0;
}

// loads whatever surrogate lives at `path`; the scenario order is needed
// for tree stores and operator bundles
std::unique_ptr<TemperatureSurrogate> load_surrogate(const fs::path& path,
                                                     const std::string& scenario) {
  if (fs::is_regular_file(path) && path.extension() == ".pbfm") {
    return std::make_unique<PinnSurrogate>(load_pinn(path));
  }
  if (fs::exists(path / "bundle.json") || fs::exists(path / "bundle")) {
    const fs::path bundle = fs::exists(path / "bundle.json") ? path : path / "bundle";
    auto result = std::make_shared<OperatorTrainingResult>(load_endeeponet(bundle));
    // pick the encoding matching the requested scenario
    std::ifstream in(bundle / "bundle.json");
    nlohmann::json j = nlohmann::json::parse(in);
    // the encodings are stored in training order; reconstruct the name order
    // from the run manifest next to the bundle if present
    Eigen::VectorXd encoding;
    if (!scenario.empty() && fs::exists(path.parent_path() / "manifest.json")) {
      std::ifstream min(path.parent_path() / "manifest.json");
      nlohmann::json manifest = nlohmann::json::parse(min);
      const auto names = manifest.at("config").at("scenario").get<std::vector<std::string>>();
      for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == scenario) encoding = result->encodings.at(i);
      if (encoding.size() == 0)
        throw std::runtime_error("scenario " + scenario + " not in the trained bundle");
    } else {
      encoding = result->encodings.at(0);
    }
    struct Bound final : TemperatureSurrogate {
      std::shared_ptr<OperatorTrainingResult> keep;
      std::unique_ptr<OperatorSurrogate> surrogate;
      double temperature(double t, double x, double y, double z) const override {
        return surrogate->temperature(t, x, y, z);
      }
      Eigen::VectorXd temperature_batch(const Eigen::MatrixXd& q) const override {
        return surrogate->temperature_batch(q);
      }
    };
    auto bound = std::make_unique<Bound>();
    bound->keep = result;
    bound->surrogate = std::make_unique<OperatorSurrogate>(result->model, encoding);
    return bound;
  }
  if (fs::exists(path / "tree_manifest.json") || fs::exists(path / "tree")) {
    const fs::path store = fs::exists(path / "tree_manifest.json") ? path : path / "tree";
    if (scenario.empty())
      throw std::runtime_error("tree surrogates need --scenario (e.g. 2-3-1)");
    std::vector<int> order;
    for (const std::string& part : CLI::detail::split(scenario, '-'))
      order.push_back(std::stoi(part));
    struct Owned final : TemperatureSurrogate {
      TrackTree tree;
      std::unique_ptr<ComposedSurrogate> composed;
      double temperature(double t, double x, double y, double z) const override {
        return composed->temperature(t, x, y, z);
      }
    };
    auto owned = std::make_unique<Owned>();
    owned->tree = load_tree(store);
    owned->composed = std::make_unique<ComposedSurrogate>(compose(owned->tree, order));
    return owned;
  }
  throw std::runtime_error("unrecognized surrogate at " + path.string() +
                           " (expected .pbfm, bundle dir, or tree store)");
}

int run_eval(const CommonArgs& args, const std::string& surrogate_path,
             const std::string& reference_dir, const std::string& scenario) {
  RunConfig cfg = load_config(args);
  fs::create_directories(args.out_dir);

  // gather the reference snapshots (time-sorted pbft files)
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(reference_dir))
    if (entry.path().extension() == ".pbft") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("no .pbft snapshots in " + reference_dir);
  std::vector<TemperatureField> snapshots;
  for (const fs::path& f : files) snapshots.push_back(load_field(f));
  std::sort(snapshots.begin(), snapshots.end(),
            [](const TemperatureField& a, const TemperatureField& b) { return a.time < b.time; });
  FdReference reference(std::move(snapshots));

  auto surrogate = load_surrogate(surrogate_path, scenario);

  EvalConfig ecfg;
  ecfg.melt_threshold = cfg.evaluation.melt_threshold;
  ecfg.history_probes = cfg.evaluation.history_probes;
  ecfg.history_times = cfg.evaluation.history_times;
  EvalReport report = compare(*surrogate, reference, ecfg);

  save_report(report, fs::path(args.out_dir) / "report.json");
  save_report_csv(report, fs::path(args.out_dir) / "report.csv");
  if (!report.history_probes.empty())
    save_history_csv(report, fs::path(args.out_dir) / "history.csv");
  write_manifest(cfg, "eval", {(fs::path(args.out_dir) / "report.json").string()}, args.out_dir);

  std::printf("MAPE %.4f%%\n", report.mape * 100.0);
  for (const SnapshotReport& s : report.snapshots)
    std::printf("t=%.4g ms: mape %.4f%%, dim errors L %.2f%% W %.2f%% D %.2f%%\n", s.time * 1e3,
                s.mape * 100.0, s.length_error * 100.0, s.width_error * 100.0,
                s.depth_error * 100.0);
  return 0;
}

int run_report(const std::vector<std::string>& inputs, const std::string& out_csv) {
  std::FILE* out = std::fopen(out_csv.c_str(), "w");
  if (!out) throw std::runtime_error("cannot open for write: " + out_csv);
  std::fputs("label,mape,avg_length_error,avg_width_error,avg_depth_error\n", out);
  for (const std::string& input : inputs) {
    EvalReport report = load_report(input);
    double le = 0.0, we = 0.0, de = 0.0;
    int n = 0;
    for (const SnapshotReport& s : report.snapshots) {
      if (s.dims_reference.length <= 0.0) continue;
      le += s.length_error;
      we += s.width_error;
      de += s.depth_error;
      ++n;
    }
    const double inv = n ? 1.0 / n : 0.0;
    std::fprintf(out, "%s,%.9g,%.9g,%.9g,%.9g\n", fs::path(input).stem().string().c_str(),
                 report.mape, le * inv, we * inv, de * inv);
  }
  std::fclose(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale LPBF thermal surrogates (finite differences, PINNs, En-DeepONet)"};
  app.require_subcommand(1);

  CommonArgs fd_args, pinn_args, op_args, seq_args, compose_args, eval_args;
  bool resume = false;
  std::string compose_tree, compose_scenario;
  std::string eval_surrogate, eval_reference, eval_scenario;
  std::vector<std::string> report_inputs;
  std::string report_out;

  add_common(app.add_subcommand("fd", "finite-difference reference run"), fd_args);
  add_common(app.add_subcommand("pinn", "train PINN surrogates"), pinn_args);
  add_common(app.add_subcommand("endeeponet", "train the operator surrogate"), op_args);
  auto* seq = app.add_subcommand("sequential", "train the track-prefix tree");
  add_common(seq, seq_args);
  seq->add_flag("--resume", resume, "skip nodes already persisted in the store");

  auto* comp = app.add_subcommand("compose", "compose a scenario from a tree store");
  add_common(comp, compose_args);
  comp->add_option("--tree", compose_tree, "tree store (defaults to <out>/tree)");
  comp->add_option("--scenario", compose_scenario, "track order, e.g. 2-3-1")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a surrogate against an fd reference");
  add_common(ev, eval_args);
  ev->add_option("--surrogate", eval_surrogate, "model.pbfm, bundle dir, or tree store")
      ->required();
  ev->add_option("--reference", eval_reference, "directory with fd .pbft snapshots")->required();
  ev->add_option("--scenario", eval_scenario, "scenario for tree/bundle surrogates");

  auto* rep = app.add_subcommand("report", "merge eval reports into a summary table");
  rep->add_option("--out", report_out, "output CSV")->required();
  rep->add_option("inputs", report_inputs, "report.json files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("fd")) return run_fd(fd_args);
    if (app.got_subcommand("pinn")) return run_pinn(pinn_args);
    if (app.got_subcommand("endeeponet")) return run_endeeponet(op_args);
    if (app.got_subcommand("sequential")) return run_sequential(seq_args, resume);
    if (app.got_subcommand("compose"))
      return run_compose(compose_args, compose_tree, compose_scenario);
    if (app.got_subcommand("eval"))
      return run_eval(eval_args, eval_surrogate, eval_reference, eval_scenario);
    if (app.got_subcommand("report")) return run_report(report_inputs, report_out);
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 1;
}
