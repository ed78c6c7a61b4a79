#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "aepg/errors.hpp"

namespace aepg {

// One row per iterate. Row 0 describes the initial point (stationarity and
// dsq are 0 there, sigma holds sigma^{-1} = theta); row t >= 1 describes the
// iterate produced by step t-1.
struct IterationRecord {
  std::uint64_t t = 0;
  double wall_s = 0.0;
  double objective = 0.0;
  double stationarity = 0.0;
  double min_v = 0.0;
  double max_v = 0.0;
  double sigma = 0.0;
  std::uint64_t comp_evals = 0;
  std::uint64_t full_evals = 0;
  double d_sq = 0.0;
};

struct TraceMeta {
  std::string method;
  std::uint64_t seed = 0;
  std::string problem_descriptor;
  std::uint64_t problem_hash = 0;
  std::uint64_t n_components = 1;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  TraceMeta meta;

  const IterationRecord& back() const { return records.back(); }

  // Last record whose cumulative gradient cost (component evaluations, with
  // a full gradient charged as N) does not exceed the budget; the first
  // record if none qualifies.
  const IterationRecord& at_cost_budget(std::uint64_t budget,
                                        std::uint64_t n) const {
    const IterationRecord* best = &records.front();
    for (const auto& rec : records) {
      if (rec.comp_evals + n * rec.full_evals <= budget) best = &rec;
    }
    return *best;
  }

  const IterationRecord& at_time_budget(double seconds) const {
    const IterationRecord* best = &records.front();
    for (const auto& rec : records)
      if (rec.wall_s <= seconds) best = &rec;
    return *best;
  }

  // Structural invariants: t strictly increasing, wall clock and cost
  // counters nondecreasing.
  void validate() const {
    for (std::size_t i = 1; i < records.size(); ++i) {
      const auto& a = records[i - 1];
      const auto& b = records[i];
      if (b.t <= a.t) throw DomainError("trace: t not strictly increasing");
      if (b.wall_s < a.wall_s) throw DomainError("trace: wall_s decreased");
      if (b.comp_evals < a.comp_evals || b.full_evals < a.full_evals)
        throw DomainError("trace: cost counter decreased");
    }
  }
};

namespace detail {
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline constexpr const char* kTraceCsvHeader =
    "t,wall_s,objective,stationarity,min_v,max_v,sigma,comp_evals,full_evals,dsq";

inline void write_trace_csv(const RunTrace& trace, std::ostream& os,
                            bool zero_timing = false) {
  os << kTraceCsvHeader << "\n";
  for (const auto& r : trace.records) {
    os << r.t << ',' << detail::fmt_double(zero_timing ? 0.0 : r.wall_s) << ','
       << detail::fmt_double(r.objective) << ','
       << detail::fmt_double(r.stationarity) << ','
       << detail::fmt_double(r.min_v) << ',' << detail::fmt_double(r.max_v)
       << ',' << detail::fmt_double(r.sigma) << ',' << r.comp_evals << ','
       << r.full_evals << ',' << detail::fmt_double(r.d_sq) << "\n";
  }
}

inline RunTrace read_trace_csv(std::istream& is) {
  RunTrace trace;
  std::string line;
  if (!std::getline(is, line) || line != kTraceCsvHeader)
    throw ParseError("trace csv: bad header");
  long line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    IterationRecord r;
    char c;
    if (!(ls >> r.t >> c >> r.wall_s >> c >> r.objective >> c >>
          r.stationarity >> c >> r.min_v >> c >> r.max_v >> c >> r.sigma >>
          c >> r.comp_evals >> c >> r.full_evals >> c >> r.d_sq))
      throw ParseError("trace csv: malformed row", line_no);
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace aepg
