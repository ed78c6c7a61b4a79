#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aepg/errors.hpp"
#include "aepg/trace.hpp"

namespace aepg {

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points_used = 0;
};

// Least-squares fit of log(running-average residual) against log(t) over the
// tail half of the sequence. A residual sequence behaving like c/sqrt(t)
// yields a slope near -1/2. Nonpositive averages are filtered before taking
// logs. Requires at least 100 entries.
inline RateFit fit_rate(const std::vector<double>& residuals) {
  if (residuals.size() < 100)
    throw DomainError("fit_rate: need at least 100 iterations");

  std::vector<double> log_t, log_avg;
  double running = 0.0;
  const std::size_t tail_start = residuals.size() / 2;
  for (std::size_t k = 0; k < residuals.size(); ++k) {
    running += residuals[k];
    const double avg = running / static_cast<double>(k + 1);
    if (k + 1 >= tail_start && avg > 0.0) {
      log_t.push_back(std::log(static_cast<double>(k + 1)));
      log_avg.push_back(std::log(avg));
    }
  }
  if (log_t.size() < 2)
    throw DomainError("fit_rate: not enough positive averages in the tail");

  const auto m = static_cast<double>(log_t.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < log_t.size(); ++i) {
    sx += log_t[i];
    sy += log_avg[i];
    sxx += log_t[i] * log_t[i];
    sxy += log_t[i] * log_avg[i];
  }
  const double denom = m * sxx - sx * sx;
  RateFit fit;
  fit.points_used = log_t.size();
  if (denom == 0.0) {
    fit.slope = 0.0;
    fit.intercept = sy / m;
  } else {
    fit.slope = (m * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / m;
  }
  return fit;
}

// The stationarity column of a trace, skipping the initial record.
inline RateFit fit_rate(const RunTrace& trace) {
  std::vector<double> residuals;
  residuals.reserve(trace.records.size());
  for (std::size_t i = 1; i < trace.records.size(); ++i)
    residuals.push_back(trace.records[i].stationarity);
  return fit_rate(residuals);
}

struct CompareBudget {
  std::optional<std::uint64_t> cost;  // component-evaluation equivalents
  std::optional<double> seconds;
};

struct CompareRow {
  std::string method;
  std::uint64_t seed = 0;
  double objective_at_cost = 0.0;
  double objective_at_time = 0.0;
  double final_objective = 0.0;
  int rank = 0;
};

// Ranks traces of one problem instance by objective at the given budget
// (cost budget first, then time budget, then final value). Ties break by
// method name, then seed, so the table is deterministic. Traces from
// different problem instances are refused.
inline std::vector<CompareRow> compare(const std::vector<const RunTrace*>& traces,
                                       const CompareBudget& budget) {
  if (traces.empty()) throw DomainError("compare: no traces");
  const std::uint64_t hash = traces.front()->meta.problem_hash;
  for (const auto* t : traces)
    if (t->meta.problem_hash != hash)
      throw DomainError("compare: traces come from different problem instances");

  std::vector<CompareRow> rows;
  rows.reserve(traces.size());
  for (const auto* t : traces) {
    CompareRow row;
    row.method = t->meta.method;
    row.seed = t->meta.seed;
    row.final_objective = t->back().objective;
    row.objective_at_cost =
        budget.cost ? t->at_cost_budget(*budget.cost, t->meta.n_components)
                          .objective
                    : row.final_objective;
    row.objective_at_time = budget.seconds
                                ? t->at_time_budget(*budget.seconds).objective
                                : row.final_objective;
    rows.push_back(row);
  }

  const auto key = [&](const CompareRow& r) {
    return budget.cost ? r.objective_at_cost
                       : (budget.seconds ? r.objective_at_time
                                         : r.final_objective);
  };
  std::sort(rows.begin(), rows.end(),
            [&](const CompareRow& a, const CompareRow& b) {
              if (key(a) != key(b)) return key(a) < key(b);
              if (a.method != b.method) return a.method < b.method;
              return a.seed < b.seed;
            });
  for (std::size_t i = 0; i < rows.size(); ++i)
    rows[i].rank = static_cast<int>(i + 1);
  return rows;
}

}  // namespace aepg
