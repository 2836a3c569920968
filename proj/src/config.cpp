#include "dualmpc/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "dualmpc/errors.hpp"

namespace dualmpc {

namespace {

// Fails on any key outside `allowed`; `where` names the table in the message.
void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ValidationError("config: '" + where + "' must be a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key)) throw ValidationError("config: unknown key '" + key + "' in '" + where + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ValidationError("config: bad value for '" + where + "." + key + "'");
  }
}

void read_vec2(const YAML::Node& node, const char* key, Eigen::Vector2d& out, const std::string& where) {
  if (!node[key]) return;
  std::vector<double> v;
  read(node, key, v, where);
  if (v.size() != 2) throw ValidationError("config: '" + where + "." + key + "' needs 2 entries");
  out = {v[0], v[1]};
}

void read_range(const YAML::Node& node, const char* key, double& lo, double& hi, const std::string& where) {
  Eigen::Vector2d r(lo, hi);
  read_vec2(node, key, r, where);
  lo = r(0);
  hi = r(1);
}

TruncNormSpec read_noise(const YAML::Node& node, const std::string& where, TruncNormSpec spec) {
  check_keys(node, where, {"sigma", "a", "b"});
  read(node, "sigma", spec.sigma, where);
  read(node, "a", spec.a, where);
  read(node, "b", spec.b, where);
  return spec;
}

LaneObstacle read_obstacle(const YAML::Node& node, const std::string& where) {
  check_keys(node, where,
             {"name", "controller", "kp", "kd", "target_s", "v_target", "origin", "direction", "half_widths", "s0",
              "v0", "respawn_at"});
  LaneObstacle ob;
  read(node, "name", ob.name, where);
  if (node["controller"]) ob.kind = parse_pd_kind(node["controller"].as<std::string>());
  read(node, "kp", ob.gains.kp, where);
  read(node, "kd", ob.gains.kd, where);
  read(node, "target_s", ob.gains.target_s, where);
  read(node, "v_target", ob.gains.v_target, where);
  read_vec2(node, "origin", ob.origin, where);
  read_vec2(node, "direction", ob.direction, where);
  read_vec2(node, "half_widths", ob.half_widths, where);
  read(node, "s0", ob.s0, where);
  read(node, "v0", ob.v0, where);
  if (node["respawn_at"] && !node["respawn_at"].IsNull()) {
    double r = 0.0;
    read(node, "respawn_at", r, where);
    ob.respawn_at = r;
  }
  return ob;
}

void read_solver(const YAML::Node& node, SolverOptions& opt) {
  const std::string where = "solver";
  check_keys(node, where, {"tol", "max_iter", "equilibrate", "ruiz_passes", "static_reg", "refine_steps"});
  read(node, "tol", opt.tol, where);
  read(node, "max_iter", opt.max_iter, where);
  read(node, "equilibrate", opt.equilibrate, where);
  read(node, "ruiz_passes", opt.ruiz_passes, where);
  read(node, "static_reg", opt.static_reg, where);
  read(node, "refine_steps", opt.refine_steps, where);
}

void read_scenario(const YAML::Node& node, LongitudinalScenario& sc) {
  const std::string where = "scenario";
  check_keys(node, where,
             {"dt", "horizon", "x0", "agent_half_widths", "lane_y", "s_final", "speed_range", "accel_range",
              "q_weight", "r_weight", "d_min", "epsilon", "allocation", "agent_noise", "obstacle_noise",
              "noise_scale", "fallback", "bootstrap_clearance", "max_steps"});
  read(node, "dt", sc.dt, where);
  read(node, "horizon", sc.horizon, where);
  read_vec2(node, "x0", sc.x0, where);
  read_vec2(node, "agent_half_widths", sc.agent_half_widths, where);
  read(node, "lane_y", sc.lane_y, where);
  read(node, "s_final", sc.s_final, where);
  read_range(node, "speed_range", sc.v_min, sc.v_max, where);
  read_range(node, "accel_range", sc.a_min, sc.a_max, where);
  read(node, "q_weight", sc.q_weight, where);
  read(node, "r_weight", sc.r_weight, where);
  read(node, "d_min", sc.d_min, where);
  read(node, "epsilon", sc.epsilon, where);
  if (node["allocation"]) sc.allocation = parse_allocation(node["allocation"].as<std::string>());
  if (node["agent_noise"]) sc.agent_noise = read_noise(node["agent_noise"], "scenario.agent_noise", sc.agent_noise);
  if (node["obstacle_noise"])
    sc.obstacle_noise = read_noise(node["obstacle_noise"], "scenario.obstacle_noise", sc.obstacle_noise);
  read(node, "noise_scale", sc.noise_scale, where);
  read(node, "fallback", sc.fallback, where);
  read(node, "bootstrap_clearance", sc.bootstrap_clearance, where);
  read(node, "max_steps", sc.max_steps, where);
}

void read_experiment(const YAML::Node& node, RunConfig& cfg) {
  const std::string where = "experiment";
  check_keys(node, where, {"policy", "seeds", "out_dir"});
  if (node["policy"]) cfg.policy = parse_policy(node["policy"].as<std::string>());
  if (node["seeds"]) {
    const auto& s = node["seeds"];
    if (s.IsSequence()) {
      cfg.seeds.clear();
      for (const auto& v : s) cfg.seeds.push_back(v.as<std::uint64_t>());
    } else {
      cfg.seeds = parse_seed_list(s.as<std::string>(), true);
    }
  }
  read(node, "out_dir", cfg.out_dir, where);
}

}  // namespace

void RunConfig::validate() const {
  scenario.validate();
  if (seeds.empty()) throw ValidationError("config: at least one seed is required");
  if (out_dir.empty()) throw ValidationError("config: out_dir must not be empty");
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("config: YAML parse error: ") + e.what());
  }
  RunConfig cfg;
  if (root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  check_keys(root, "<root>", {"scenario", "obstacles", "solver", "experiment"});
  if (root["scenario"]) read_scenario(root["scenario"], cfg.scenario);
  if (root["solver"]) read_solver(root["solver"], cfg.scenario.solver);
  if (root["obstacles"]) {
    const auto& obs = root["obstacles"];
    if (!obs.IsSequence()) throw ValidationError("config: 'obstacles' must be a list");
    cfg.scenario.obstacles.clear();
    for (std::size_t i = 0; i < obs.size(); ++i)
      cfg.scenario.obstacles.push_back(read_obstacle(obs[i], "obstacles[" + std::to_string(i) + "]"));
  }
  if (root["experiment"]) read_experiment(root["experiment"], cfg);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  const auto& sc = cfg.scenario;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  auto pair = [&](double a, double b) {
    out << YAML::Flow << YAML::BeginSeq << a << b << YAML::EndSeq;
  };
  auto noise = [&](const char* key, const TruncNormSpec& n) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "sigma" << YAML::Value
        << n.sigma << YAML::Key << "a" << YAML::Value << n.a << YAML::Key << "b" << YAML::Value << n.b
        << YAML::EndMap;
  };
  out << YAML::BeginMap;
  out << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt" << YAML::Value << sc.dt;
  out << YAML::Key << "horizon" << YAML::Value << sc.horizon;
  out << YAML::Key << "x0" << YAML::Value;
  pair(sc.x0(0), sc.x0(1));
  out << YAML::Key << "agent_half_widths" << YAML::Value;
  pair(sc.agent_half_widths(0), sc.agent_half_widths(1));
  out << YAML::Key << "lane_y" << YAML::Value << sc.lane_y;
  out << YAML::Key << "s_final" << YAML::Value << sc.s_final;
  out << YAML::Key << "speed_range" << YAML::Value;
  pair(sc.v_min, sc.v_max);
  out << YAML::Key << "accel_range" << YAML::Value;
  pair(sc.a_min, sc.a_max);
  out << YAML::Key << "q_weight" << YAML::Value << sc.q_weight;
  out << YAML::Key << "r_weight" << YAML::Value << sc.r_weight;
  out << YAML::Key << "d_min" << YAML::Value << sc.d_min;
  out << YAML::Key << "epsilon" << YAML::Value << sc.epsilon;
  out << YAML::Key << "allocation" << YAML::Value << to_string(sc.allocation);
  noise("agent_noise", sc.agent_noise);
  noise("obstacle_noise", sc.obstacle_noise);
  out << YAML::Key << "noise_scale" << YAML::Value << sc.noise_scale;
  out << YAML::Key << "fallback" << YAML::Value << sc.fallback;
  out << YAML::Key << "bootstrap_clearance" << YAML::Value << sc.bootstrap_clearance;
  out << YAML::Key << "max_steps" << YAML::Value << sc.max_steps;
  out << YAML::EndMap;

  out << YAML::Key << "obstacles" << YAML::Value << YAML::BeginSeq;
  for (const auto& ob : sc.obstacles) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << ob.name;
    out << YAML::Key << "controller" << YAML::Value << to_string(ob.kind);
    out << YAML::Key << "kp" << YAML::Value << ob.gains.kp;
    out << YAML::Key << "kd" << YAML::Value << ob.gains.kd;
    out << YAML::Key << "target_s" << YAML::Value << ob.gains.target_s;
    out << YAML::Key << "v_target" << YAML::Value << ob.gains.v_target;
    out << YAML::Key << "origin" << YAML::Value;
    pair(ob.origin(0), ob.origin(1));
    out << YAML::Key << "direction" << YAML::Value;
    pair(ob.direction(0), ob.direction(1));
    out << YAML::Key << "half_widths" << YAML::Value;
    pair(ob.half_widths(0), ob.half_widths(1));
    out << YAML::Key << "s0" << YAML::Value << ob.s0;
    out << YAML::Key << "v0" << YAML::Value << ob.v0;
    if (ob.respawn_at) out << YAML::Key << "respawn_at" << YAML::Value << *ob.respawn_at;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  const auto& so = sc.solver;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tol" << YAML::Value << so.tol;
  out << YAML::Key << "max_iter" << YAML::Value << so.max_iter;
  out << YAML::Key << "equilibrate" << YAML::Value << so.equilibrate;
  out << YAML::Key << "ruiz_passes" << YAML::Value << so.ruiz_passes;
  out << YAML::Key << "static_reg" << YAML::Value << so.static_reg;
  out << YAML::Key << "refine_steps" << YAML::Value << so.refine_steps;
  out << YAML::EndMap;

  out << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "policy" << YAML::Value << to_string(cfg.policy);
  out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto s : cfg.seeds) out << s;
  out << YAML::EndSeq;
  out << YAML::Key << "out_dir" << YAML::Value << cfg.out_dir;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s, bool count_form) {
  auto number = [&](const std::string& t) -> std::uint64_t {
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw ValidationError("seeds: '" + s + "' is not a seed list");
    return std::stoull(t);
  };
  std::vector<std::uint64_t> out;
  if (s.find_first_of(",-") == std::string::npos) {
    const auto n = number(s);
    if (!count_form) return {n};
    if (n == 0) throw ValidationError("seeds: count must be positive");
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(number(item));
      continue;
    }
    const auto lo = number(item.substr(0, dash)), hi = number(item.substr(dash + 1));
    if (hi < lo) throw ValidationError("seeds: empty range '" + item + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  if (out.empty()) throw ValidationError("seeds: empty list");
  return out;
}

}  // namespace dualmpc
