#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dualmpc/scenario.hpp"

namespace dualmpc {

struct TraceDims {
  int nx = 2;
  int nu = 1;
  int num_obstacles = 2;
  int obstacle_nx = 2;

  int columns() const { return 6 + nx + nu + num_obstacles * obstacle_nx; }
};

/// step,time_s,x0..,u0..,o<i>_<j>..,feasible,solve_ms,min_dist_m,violation
std::string trace_header(const TraceDims& dims);

/// One row per step, numbers with 9 significant digits, header always present.
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows, const TraceDims& dims);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows, const TraceDims& dims);

/// Inverse of write_trace_csv; the dimensions are recovered from the header.
std::vector<TraceRow> read_trace_csv(std::istream& is, TraceDims* dims = nullptr);
std::vector<TraceRow> read_trace_csv(const std::string& path, TraceDims* dims = nullptr);

/// policy,violation_pct,feasibility_pct,avg_solve_ms,avg_completion_s,avg_min_distance_m
void write_metrics_csv(std::ostream& os, const std::vector<Metrics>& rows);
void write_metrics_csv(const std::string& path, const std::vector<Metrics>& rows);

/// Rounds to the precision the trace writer emits.
double round_sig9(double v);

}  // namespace dualmpc
