#include "psps/dense_lp.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace psps::lp {

const char* to_string(Status status) {
  switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFixTol = 1e-12;

struct Reduced {
  std::vector<int> cols;  // reduced column -> original column
  std::vector<double> cost, lb, ub;
  std::vector<std::vector<double>> a;  // dense rows over reduced columns
  std::vector<double> rhs;
  std::vector<RowSense> sense;
};

/// Removes fixed columns and turns rows with at most one free column into
/// bounds. Returns false on detected infeasibility.
bool presolve(const Problem& p, std::vector<double>& lb, std::vector<double>& ub, Reduced& out, double tol,
              bool enabled) {
  const std::size_t n = p.cost.size();
  struct WorkRow {
    std::map<int, double> terms;
    RowSense sense;
    double rhs;
    bool active = true;
  };
  std::vector<WorkRow> rows;
  rows.reserve(p.rows.size());
  for (const auto& r : p.rows) {
    WorkRow w{{}, r.sense, r.rhs};
    for (const auto& t : r.terms) {
      if (t.coef != 0.0) w.terms[t.col] += t.coef;
    }
    rows.push_back(std::move(w));
  }
  auto fixed = [&](int j) { return std::abs(ub[j] - lb[j]) <= kFixTol; };
  for (std::size_t j = 0; j < n; ++j) {
    if (lb[j] > ub[j] + tol) return false;
  }

  bool changed = enabled;
  while (changed) {
    changed = false;
    for (auto& row : rows) {
      if (!row.active) continue;
      int free_col = -1;
      int free_count = 0;
      double constant = 0.0;
      for (const auto& [j, a] : row.terms) {
        if (fixed(j)) {
          constant += a * lb[j];
        } else {
          ++free_count;
          free_col = j;
        }
      }
      if (free_count > 1) continue;
      const double rhs = row.rhs - constant;
      const double scale = 1.0 + std::abs(row.rhs);
      if (free_count == 0) {
        const bool ok = (row.sense == RowSense::le && 0.0 <= rhs + tol * scale) ||
                        (row.sense == RowSense::ge && 0.0 >= rhs - tol * scale) ||
                        (row.sense == RowSense::eq && std::abs(rhs) <= tol * scale);
        if (!ok) return false;
        row.active = false;
        changed = true;
        continue;
      }
      const double a = row.terms.at(free_col);
      const double v = rhs / a;
      RowSense s = row.sense;
      if (a < 0.0 && s != RowSense::eq) s = s == RowSense::le ? RowSense::ge : RowSense::le;
      if (s == RowSense::le || s == RowSense::eq) ub[free_col] = std::min(ub[free_col], v);
      if (s == RowSense::ge || s == RowSense::eq) lb[free_col] = std::max(lb[free_col], v);
      if (lb[free_col] > ub[free_col]) {
        if (lb[free_col] > ub[free_col] + tol * (1.0 + std::abs(v))) return false;
        const double mid = 0.5 * (lb[free_col] + ub[free_col]);
        lb[free_col] = ub[free_col] = mid;
      }
      row.active = false;
      changed = true;
    }
  }

  std::vector<int> position(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    if (enabled && fixed(static_cast<int>(j))) continue;
    position[j] = static_cast<int>(out.cols.size());
    out.cols.push_back(static_cast<int>(j));
    out.cost.push_back(p.cost[j]);
    out.lb.push_back(lb[j]);
    out.ub.push_back(ub[j]);
  }
  for (const auto& row : rows) {
    if (!row.active) continue;
    std::vector<double> dense(out.cols.size(), 0.0);
    double rhs = row.rhs;
    for (const auto& [j, a] : row.terms) {
      if (position[j] < 0) {
        rhs -= a * lb[j];
      } else {
        dense[position[j]] += a;
      }
    }
    out.a.push_back(std::move(dense));
    out.rhs.push_back(rhs);
    out.sense.push_back(row.sense);
  }
  return true;
}

enum class Where { lower, upper, free_zero, basic };

class Tableau {
 public:
  Tableau(const Reduced& r, const Options& opt) : opt_(opt) {
    m_ = r.a.size();
    n_struct_ = r.cols.size();
    // Columns: structural | slack (one per row) | artificial (added as needed).
    lb_ = r.lb;
    ub_ = r.ub;
    cost_ = r.cost;
    for (std::size_t i = 0; i < m_; ++i) {
      switch (r.sense[i]) {
        case RowSense::le: lb_.push_back(0.0); ub_.push_back(kInf); break;
        case RowSense::ge: lb_.push_back(-kInf); ub_.push_back(0.0); break;
        case RowSense::eq: lb_.push_back(0.0); ub_.push_back(0.0); break;
      }
      cost_.push_back(0.0);
    }
    const std::size_t base_cols = n_struct_ + m_;
    x_.assign(base_cols, 0.0);
    where_.assign(base_cols, Where::lower);
    for (std::size_t j = 0; j < base_cols; ++j) place_at_bound(j);

    // Residuals with every column nonbasic.
    std::vector<double> resid(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      double s = r.rhs[i];
      for (std::size_t j = 0; j < n_struct_; ++j) s -= r.a[i][j] * x_[j];
      resid[i] = s;
    }
    basis_.assign(m_, 0);
    std::vector<int> artificial_row;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t slack = n_struct_ + i;
      if (resid[i] >= lb_[slack] - opt_.feasibility_tol && resid[i] <= ub_[slack] + opt_.feasibility_tol) {
        basis_[i] = slack;
        x_[slack] = resid[i];
        where_[slack] = Where::basic;
      } else {
        artificial_row.push_back(static_cast<int>(i));
      }
    }
    const std::size_t ncols = base_cols + artificial_row.size();
    t_.assign(m_, std::vector<double>(ncols, 0.0));
    rhs_.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_struct_; ++j) t_[i][j] = r.a[i][j];
      t_[i][n_struct_ + i] = 1.0;
      rhs_[i] = r.rhs[i];
    }
    for (std::size_t k = 0; k < artificial_row.size(); ++k) {
      const auto i = static_cast<std::size_t>(artificial_row[k]);
      const std::size_t col = base_cols + k;
      const std::size_t slack = n_struct_ + i;
      // Slack sits at the bound closest to the residual; the artificial absorbs the rest.
      const double target = std::clamp(resid[i], lb_[slack], ub_[slack]);
      x_[slack] = target;
      where_[slack] = std::isinf(lb_[slack]) ? Where::upper : (target == lb_[slack] ? Where::lower : Where::upper);
      const double rest = resid[i] - target;
      const double sign = rest >= 0.0 ? 1.0 : -1.0;
      for (std::size_t kk = 0; kk < m_; ++kk) t_[kk].resize(ncols, 0.0);
      t_[i][col] = sign;
      lb_.push_back(0.0);
      ub_.push_back(kInf);
      cost_.push_back(0.0);
      x_.push_back(std::abs(rest));
      where_.push_back(Where::basic);
      // Row i currently has the artificial as basic with coefficient sign; normalize.
      if (sign < 0.0) {
        for (double& v : t_[i]) v = -v;
        rhs_[i] = -rhs_[i];
      }
      basis_[i] = col;
    }
    first_artificial_ = base_cols;
  }

  Status run(bool phase_one) {
    const std::size_t ncols = x_.size();
    std::vector<double> c(ncols, 0.0);
    if (phase_one) {
      for (std::size_t j = first_artificial_; j < ncols; ++j) c[j] = 1.0;
    } else {
      for (std::size_t j = 0; j < first_artificial_; ++j) c[j] = cost_[j];
    }
    std::vector<double> d = c;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < ncols; ++j) d[j] -= cb * t_[i][j];
    }
    int degenerate_run = 0;
    while (true) {
      if (iterations_ >= opt_.max_iterations) return Status::iteration_limit;
      const bool bland = degenerate_run > 50;
      int q = -1;
      double best = 0.0;
      double dir = 0.0;
      for (std::size_t j = 0; j < ncols; ++j) {
        if (where_[j] == Where::basic) continue;
        if (ub_[j] - lb_[j] <= kFixTol) continue;
        double candidate_dir = 0.0;
        if (d[j] < -opt_.optimality_tol && (where_[j] == Where::lower || where_[j] == Where::free_zero)) {
          candidate_dir = 1.0;
        } else if (d[j] > opt_.optimality_tol && (where_[j] == Where::upper || where_[j] == Where::free_zero)) {
          candidate_dir = -1.0;
        }
        if (candidate_dir == 0.0) continue;
        if (bland) {
          q = static_cast<int>(j);
          dir = candidate_dir;
          break;
        }
        if (std::abs(d[j]) > best) {
          best = std::abs(d[j]);
          q = static_cast<int>(j);
          dir = candidate_dir;
        }
      }
      if (q < 0) return Status::optimal;
      const auto qc = static_cast<std::size_t>(q);

      // Ratio test.
      double step = kInf;
      int leave = -1;
      bool leave_to_upper = false;
      if (!std::isinf(lb_[qc]) && !std::isinf(ub_[qc])) step = ub_[qc] - lb_[qc];
      double leave_pivot = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double tiq = t_[i][qc];
        if (std::abs(tiq) <= kPivotTol) continue;
        const double rate = -dir * tiq;  // d x_B[i] / d step
        const std::size_t b = basis_[i];
        double limit = kInf;
        bool to_upper = false;
        if (rate < 0.0 && !std::isinf(lb_[b])) {
          limit = std::max(0.0, (x_[b] - lb_[b]) / -rate);
        } else if (rate > 0.0 && !std::isinf(ub_[b])) {
          limit = std::max(0.0, (ub_[b] - x_[b]) / rate);
          to_upper = true;
        }
        if (std::isinf(limit)) continue;
        const bool better = limit < step - 1e-12 ||
                            (limit <= step + 1e-12 && leave >= 0 &&
                             (bland ? b < basis_[static_cast<std::size_t>(leave)] : std::abs(tiq) > leave_pivot));
        if (better || (leave < 0 && limit <= step)) {
          step = limit;
          leave = static_cast<int>(i);
          leave_to_upper = to_upper;
          leave_pivot = std::abs(tiq);
        }
      }
      if (std::isinf(step)) return Status::unbounded;
      ++iterations_;
      degenerate_run = step <= 1e-12 ? degenerate_run + 1 : 0;

      x_[qc] += dir * step;
      for (std::size_t i = 0; i < m_; ++i) {
        if (t_[i][qc] != 0.0) x_[basis_[i]] -= dir * t_[i][qc] * step;
      }
      if (leave < 0) {
        // Bound flip of the entering column.
        where_[qc] = dir > 0 ? Where::upper : Where::lower;
        x_[qc] = dir > 0 ? ub_[qc] : lb_[qc];
        continue;
      }
      const auto r = static_cast<std::size_t>(leave);
      const std::size_t out_col = basis_[r];
      pivot(r, qc, d);
      basis_[r] = qc;
      where_[qc] = Where::basic;
      where_[out_col] = leave_to_upper ? Where::upper : Where::lower;
      x_[out_col] = leave_to_upper ? ub_[out_col] : lb_[out_col];
    }
  }

  /// Recomputes basic values from the nonbasic ones: x_B = B^-1 b - sum T_j x_j.
  void refresh() {
    for (std::size_t i = 0; i < m_; ++i) {
      double v = rhs_[i];
      for (std::size_t j = 0; j < x_.size(); ++j) {
        if (where_[j] != Where::basic && t_[i][j] != 0.0) v -= t_[i][j] * x_[j];
      }
      x_[basis_[i]] = v;
    }
  }

  double artificial_sum() const {
    double s = 0.0;
    for (std::size_t j = first_artificial_; j < x_.size(); ++j) s += std::abs(x_[j]);
    return s;
  }

  void lock_artificials() {
    for (std::size_t j = first_artificial_; j < x_.size(); ++j) {
      ub_[j] = 0.0;
      if (where_[j] != Where::basic) {
        x_[j] = 0.0;
        where_[j] = Where::lower;
      }
    }
  }

  [[nodiscard]] double value(std::size_t j) const { return x_[j]; }
  [[nodiscard]] int iterations() const { return iterations_; }

 private:
  void place_at_bound(std::size_t j) {
    if (!std::isinf(lb_[j])) {
      x_[j] = lb_[j];
      where_[j] = Where::lower;
    } else if (!std::isinf(ub_[j])) {
      x_[j] = ub_[j];
      where_[j] = Where::upper;
    } else {
      x_[j] = 0.0;
      where_[j] = Where::free_zero;
    }
  }

  void pivot(std::size_t r, std::size_t q, std::vector<double>& d) {
    auto& pr = t_[r];
    const double inv = 1.0 / pr[q];
    for (double& v : pr) v *= inv;
    rhs_[r] *= inv;
    pr[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = t_[i][q];
      if (f == 0.0) continue;
      auto& row = t_[i];
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (pr[j] != 0.0) row[j] -= f * pr[j];
      }
      row[q] = 0.0;
      rhs_[i] -= f * rhs_[r];
    }
    const double f = d[q];
    if (f != 0.0) {
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (pr[j] != 0.0) d[j] -= f * pr[j];
      }
      d[q] = 0.0;
    }
  }

  Options opt_;
  std::size_t m_ = 0;
  std::size_t n_struct_ = 0;
  std::size_t first_artificial_ = 0;
  std::vector<std::vector<double>> t_;
  std::vector<double> rhs_;
  std::vector<double> lb_, ub_, cost_, x_;
  std::vector<Where> where_;
  std::vector<std::size_t> basis_;
  int iterations_ = 0;
};

}  // namespace

Result solve(const Problem& problem, const Options& options) {
  Result result;
  const std::size_t n = problem.cost.size();
  std::vector<double> lb = problem.lb;
  std::vector<double> ub = problem.ub;
  Reduced reduced;
  if (!presolve(problem, lb, ub, reduced, options.feasibility_tol, options.presolve)) {
    result.status = Status::infeasible;
    return result;
  }
  result.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) result.x[j] = lb[j];

  if (!reduced.cols.empty() || !reduced.a.empty()) {
    Tableau tab(reduced, options);
    Status s = tab.run(true);
    if (s == Status::iteration_limit) {
      result.status = s;
      return result;
    }
    tab.refresh();
    double scale = 1.0;
    for (double v : reduced.rhs) scale = std::max(scale, std::abs(v));
    if (tab.artificial_sum() > options.feasibility_tol * scale * 10.0) {
      result.status = Status::infeasible;
      result.iterations = tab.iterations();
      return result;
    }
    tab.lock_artificials();
    s = tab.run(false);
    result.iterations = tab.iterations();
    if (s != Status::optimal) {
      result.status = s;
      return result;
    }
    tab.refresh();
    for (std::size_t k = 0; k < reduced.cols.size(); ++k) {
      double v = tab.value(k);
      // Clean round-off against the column's bounds.
      if (!std::isinf(reduced.lb[k]) && v < reduced.lb[k]) v = reduced.lb[k];
      if (!std::isinf(reduced.ub[k]) && v > reduced.ub[k]) v = reduced.ub[k];
      result.x[static_cast<std::size_t>(reduced.cols[k])] = v;
    }
  }
  result.status = Status::optimal;
  result.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) result.objective += problem.cost[j] * result.x[j];
  return result;
}

}  // namespace psps::lp
