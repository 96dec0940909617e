#pragma once

#include <vector>

#include "psps/milp.hpp"

namespace psps::lp {

/// min cost.x  s.t. rows, lb <= x <= ub. Bounds may be infinite.
struct Problem {
  std::vector<double> cost;
  std::vector<double> lb;
  std::vector<double> ub;
  std::vector<Row> rows;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Result {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;
  int iterations = 0;
};

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  int max_iterations = 50000;
  bool presolve = true;
};

/// Dense bounded-variable primal simplex (two phases, Dantzig pricing with a
/// Bland fallback on stalls). Meant for small restrictions only; the
/// presolve removes fixed columns and turns singleton rows into bounds.
Result solve(const Problem& problem, const Options& options = {});

const char* to_string(Status status);

}  // namespace psps::lp
