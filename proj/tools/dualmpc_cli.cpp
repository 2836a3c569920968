// dualmpc: run, compare and validate the intersection scenario from the command line.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "dualmpc/config.hpp"
#include "dualmpc/errors.hpp"
#include "dualmpc/scenario.hpp"
#include "dualmpc/socp.hpp"
#include "dualmpc/trace_io.hpp"
#include "dualmpc/validation.hpp"

namespace fs = std::filesystem;
using namespace dualmpc;

namespace {

struct CommonOptions {
  std::string config;
  std::string policy;
  std::string seeds;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string allocation;
  std::optional<double> dmin;
  bool timing = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_policy) {
  cmd->add_option("--config", o.config, "YAML scenario file")->envname("DUALMPC_CONFIG");
  if (with_policy)
    cmd->add_option("--policy", o.policy, "rmpc, smpc or drmpc")
        ->check(CLI::IsMember({"rmpc", "smpc", "drmpc"}))
        ->envname("DUALMPC_POLICY");
  cmd->add_option("--seeds", o.seeds, "seed count n (0..n-1), range a-b or list a,b,c")->envname("DUALMPC_SEEDS");
  cmd->add_option("--seed", o.seed, "single seed")->envname("DUALMPC_SEED");
  cmd->add_option("--out-dir", o.out_dir, "output directory")->envname("DUALMPC_OUT_DIR");
  cmd->add_option("--allocation", o.allocation, "chance risk allocation")
      ->check(CLI::IsMember({"joint", "per-constraint"}))
      ->envname("DUALMPC_ALLOCATION");
  cmd->add_option("--dmin", o.dmin, "minimum separation [m]")->envname("DUALMPC_DMIN");
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.policy.empty()) cfg.policy = parse_policy(o.policy);
  if (!o.seeds.empty()) cfg.seeds = parse_seed_list(o.seeds, true);
  if (o.seed) cfg.seeds = {*o.seed};
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (!o.allocation.empty()) cfg.scenario.allocation = parse_allocation(o.allocation);
  if (o.dmin) cfg.scenario.d_min = *o.dmin;
  cfg.validate();
  return cfg;
}

TraceDims dims_of(const LongitudinalScenario& sc) {
  TraceDims d;
  d.nx = 2;
  d.nu = 1;
  d.num_obstacles = sc.num_obstacles();
  d.obstacle_nx = 2;
  return d;
}

// Runs one policy over the seeds, writes one trace per seed and returns the metrics.
Metrics run_policy(const RunConfig& cfg, PolicyKind policy, bool timing) {
  EpisodeOptions opts;
  opts.keep_diagnostics = false;
  ExperimentResult res = run_longitudinal_experiment(cfg.scenario, policy, cfg.seeds, opts);
  if (!timing) {
    for (auto& tr : res.traces)
      for (auto& row : tr.rows) row.solve_ms = 0.0;
    res.metrics = compute_metrics(res.traces);
  }
  for (const auto& tr : res.traces)
    write_trace_csv((fs::path(cfg.out_dir) / fmt::format("trace_{}_seed{}.csv", to_string(policy), tr.seed)).string(),
                    tr.rows, dims_of(cfg.scenario));
  return res.metrics;
}

void print_table(const std::vector<Metrics>& rows) {
  fmt::print("{:<8}{:>12}{:>14}{:>14}{:>16}{:>18}\n", "policy", "violation%", "feasibility%", "solve_ms",
             "completion_s", "min_distance_m");
  for (const auto& m : rows)
    fmt::print("{:<8}{:>12.2f}{:>14.2f}{:>14.2f}{:>16.2f}{:>18.3f}\n", to_string(m.policy), m.violation_pct,
               m.feasibility_pct, m.avg_solve_ms, m.avg_completion_s, m.avg_min_distance_m);
}

int cmd_run(const CommonOptions& o) {
  const RunConfig cfg = resolve(o);
  fs::create_directories(cfg.out_dir);
  const Metrics m = run_policy(cfg, cfg.policy, o.timing);
  write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), {m});
  print_table({m});
  return 0;
}

int cmd_compare(const CommonOptions& o) {
  const RunConfig cfg = resolve(o);
  fs::create_directories(cfg.out_dir);
  std::vector<Metrics> rows;
  for (PolicyKind p : {PolicyKind::RMPC, PolicyKind::SMPC, PolicyKind::DRMPC}) rows.push_back(run_policy(cfg, p, o.timing));
  write_metrics_csv((fs::path(cfg.out_dir) / "metrics.csv").string(), rows);
  print_table(rows);
  return 0;
}

int cmd_validate(const std::string& suite, std::uint64_t seed) {
  std::vector<std::string> names = suite == "all" ? suite_names() : std::vector<std::string>{suite};
  bool ok = true;
  for (const auto& n : names) {
    const SuiteReport r = run_suite(n, seed);
    fmt::print("{:<8} {}  passed={} failed={}  {}\n", r.name, r.ok() ? "PASS" : "FAIL", r.passed, r.failed, r.detail);
    ok = ok && r.ok();
  }
  return ok ? 0 : 1;
}

int cmd_dump(const CommonOptions& o, const std::string& out) {
  const RunConfig cfg = resolve(o);
  const LongitudinalScenario& sc = cfg.scenario;
  Controller ctrl(controller_config(sc, cfg.policy));
  std::vector<ObstacleModel> models;
  std::vector<Eigen::VectorXd> o0;
  for (int i = 0; i < sc.num_obstacles(); ++i) {
    models.push_back(obstacle_prediction(sc, i));
    o0.push_back(Eigen::Vector2d(sc.obstacles[i].s0, sc.obstacles[i].v0));
  }
  const AssembledProgram ap = ctrl.build_program(sc.x0, models, o0);
  if (out.empty() || out == "-") {
    write_program(std::cout, ap.program);
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open '" + out + "' for writing");
    write_program(f, ap.program);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Duality-based collision-avoidance MPC under uncertain obstacle predictions"};
  app.require_subcommand(1);

  CommonOptions run_o, cmp_o, dump_o;
  auto* run = app.add_subcommand("run", "run one policy over the seeds and write traces");
  add_common(run, run_o, true);
  run->add_flag("--timing,!--no-timing", run_o.timing, "record wall-clock solve times (off keeps output reproducible)")
      ->envname("DUALMPC_TIMING");

  auto* cmp = app.add_subcommand("compare", "run RMPC, SMPC and DRMPC over shared seeds");
  add_common(cmp, cmp_o, false);
  cmp_o.timing = true;
  cmp->add_flag("--timing,!--no-timing", cmp_o.timing, "record wall-clock solve times")->envname("DUALMPC_TIMING");

  std::string suite = "all";
  std::uint64_t vseed = 0;
  auto* val = app.add_subcommand("validate", "run the property suites");
  val->add_option("--suite", suite, "duality, vertex, chance, gamma or all")
      ->check(CLI::IsMember({"duality", "vertex", "chance", "gamma", "all"}))
      ->envname("DUALMPC_SUITE");
  val->add_option("--seed", vseed, "suite seed")->envname("DUALMPC_SEED");

  std::string dump_out;
  auto* dump = app.add_subcommand("dump-program", "write the first-step cone program");
  add_common(dump, dump_o, true);
  dump->add_option("--out", dump_out, "output file (default stdout)")->envname("DUALMPC_OUT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_o);
    if (*cmp) return cmd_compare(cmp_o);
    if (*val) return cmd_validate(suite, vseed);
    if (*dump) return cmd_dump(dump_o, dump_out);
  } catch (const ValidationError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
