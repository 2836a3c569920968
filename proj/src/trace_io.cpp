#include "dualmpc/trace_io.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dualmpc/errors.hpp"

namespace dualmpc {

namespace {

std::string num(double v) { return fmt::format("{:.9g}", v); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_num(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ValidationError("trace csv: bad number '" + s + "' on line " + std::to_string(line));
  return v;
}

int parse_flag(const std::string& s, int line) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw ValidationError("trace csv: expected 0/1, got '" + s + "' on line " + std::to_string(line));
}

// Counts the leading columns that share `prefix` followed by a digit.
int count_prefixed(const std::vector<std::string>& cols, std::size_t& at, const std::string& prefix) {
  int n = 0;
  while (at < cols.size() && cols[at].rfind(prefix, 0) == 0 && cols[at].size() > prefix.size() &&
         std::isdigit(static_cast<unsigned char>(cols[at][prefix.size()]))) {
    ++n;
    ++at;
  }
  return n;
}

}  // namespace

double round_sig9(double v) { return std::strtod(num(v).c_str(), nullptr); }

std::string trace_header(const TraceDims& d) {
  std::string h = "step,time_s";
  for (int i = 0; i < d.nx; ++i) h += ",x" + std::to_string(i);
  for (int i = 0; i < d.nu; ++i) h += ",u" + std::to_string(i);
  for (int m = 0; m < d.num_obstacles; ++m)
    for (int i = 0; i < d.obstacle_nx; ++i) h += ",o" + std::to_string(m) + "_" + std::to_string(i);
  return h + ",feasible,solve_ms,min_dist_m,violation";
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows, const TraceDims& dims) {
  os << trace_header(dims) << "\n";
  for (const auto& r : rows) {
    if (r.x.size() != dims.nx || r.u.size() != dims.nu || static_cast<int>(r.o.size()) != dims.num_obstacles)
      throw ValidationError("trace csv: row " + std::to_string(r.step) + " does not match the column layout");
    std::string line = std::to_string(r.step) + "," + num(r.time_s);
    for (int i = 0; i < dims.nx; ++i) line += "," + num(r.x(i));
    for (int i = 0; i < dims.nu; ++i) line += "," + num(r.u(i));
    for (const auto& o : r.o) {
      if (o.size() != dims.obstacle_nx) throw ValidationError("trace csv: obstacle state has wrong size");
      for (int i = 0; i < dims.obstacle_nx; ++i) line += "," + num(o(i));
    }
    line += fmt::format(",{},{},{},{}", r.feasible ? 1 : 0, num(r.solve_ms), num(r.min_dist_m), r.violation ? 1 : 0);
    os << line << "\n";
  }
  if (!os) throw std::runtime_error("trace csv: write failed");
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows, const TraceDims& dims) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace csv: cannot open '" + path + "' for writing");
  write_trace_csv(out, rows, dims);
}

std::vector<TraceRow> read_trace_csv(std::istream& is, TraceDims* dims_out) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("trace csv: missing header");
  const auto cols = split(line);
  std::size_t at = 0;
  if (cols.size() < 2 || cols[0] != "step" || cols[1] != "time_s")
    throw ValidationError("trace csv: header must start with step,time_s");
  at = 2;
  TraceDims d;
  d.nx = count_prefixed(cols, at, "x");
  d.nu = count_prefixed(cols, at, "u");
  const std::size_t o_start = at;
  int o_cols = count_prefixed(cols, at, "o");
  d.num_obstacles = 0;
  d.obstacle_nx = 0;
  for (std::size_t c = o_start; c < at; ++c) {
    const auto us = cols[c].find('_');
    if (us == std::string::npos) throw ValidationError("trace csv: bad obstacle column '" + cols[c] + "'");
    d.num_obstacles = std::max(d.num_obstacles, std::atoi(cols[c].substr(1, us - 1).c_str()) + 1);
  }
  if (d.num_obstacles > 0) {
    if (o_cols % d.num_obstacles != 0) throw ValidationError("trace csv: ragged obstacle columns");
    d.obstacle_nx = o_cols / d.num_obstacles;
  }
  const std::vector<std::string> tail{"feasible", "solve_ms", "min_dist_m", "violation"};
  if (cols.size() != at + tail.size() || !std::equal(tail.begin(), tail.end(), cols.begin() + at))
    throw ValidationError("trace csv: header must end with feasible,solve_ms,min_dist_m,violation");
  if (trace_header(d) != line) throw ValidationError("trace csv: header columns out of order");

  std::vector<TraceRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != d.columns())
      throw ValidationError("trace csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                            " fields, expected " + std::to_string(d.columns()));
    TraceRow r;
    std::size_t c = 0;
    const double step = parse_num(cells[c++], lineno);
    r.step = static_cast<int>(step);
    if (r.step != step) throw ValidationError("trace csv: non-integer step on line " + std::to_string(lineno));
    r.time_s = parse_num(cells[c++], lineno);
    r.x.resize(d.nx);
    for (int i = 0; i < d.nx; ++i) r.x(i) = parse_num(cells[c++], lineno);
    r.u.resize(d.nu);
    for (int i = 0; i < d.nu; ++i) r.u(i) = parse_num(cells[c++], lineno);
    r.o.assign(d.num_obstacles, Eigen::VectorXd(d.obstacle_nx));
    for (auto& o : r.o)
      for (int i = 0; i < d.obstacle_nx; ++i) o(i) = parse_num(cells[c++], lineno);
    r.feasible = parse_flag(cells[c++], lineno) == 1;
    r.solve_ms = parse_num(cells[c++], lineno);
    r.min_dist_m = parse_num(cells[c++], lineno);
    r.violation = parse_flag(cells[c++], lineno) == 1;
    rows.push_back(std::move(r));
  }
  if (dims_out) *dims_out = d;
  return rows;
}

std::vector<TraceRow> read_trace_csv(const std::string& path, TraceDims* dims) {
  std::ifstream in(path);
  if (!in) throw ValidationError("trace csv: cannot open '" + path + "'");
  return read_trace_csv(in, dims);
}

void write_metrics_csv(std::ostream& os, const std::vector<Metrics>& rows) {
  os << "policy,violation_pct,feasibility_pct,avg_solve_ms,avg_completion_s,avg_min_distance_m\n";
  for (const auto& m : rows)
    os << to_string(m.policy) << "," << num(m.violation_pct) << "," << num(m.feasibility_pct) << ","
       << num(m.avg_solve_ms) << "," << num(m.avg_completion_s) << "," << num(m.avg_min_distance_m) << "\n";
  if (!os) throw std::runtime_error("metrics csv: write failed");
}

void write_metrics_csv(const std::string& path, const std::vector<Metrics>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("metrics csv: cannot open '" + path + "' for writing");
  write_metrics_csv(out, rows);
}

}  // namespace dualmpc
