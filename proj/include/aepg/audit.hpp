#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "aepg/core.hpp"
#include "aepg/errors.hpp"
#include "aepg/optimizer.hpp"

namespace aepg {

class AuditFailure : public Error {
 public:
  AuditFailure(const std::string& check, std::uint64_t t, double violation)
      : Error("audit: " + check + " violated at t=" + std::to_string(t) +
              " (violation " + std::to_string(violation) + ")"),
        check_(check),
        t_(t) {}
  const std::string& check() const { return check_; }
  std::uint64_t iteration() const { return t_; }

 private:
  std::string check_;
  std::uint64_t t_;
};

struct AuditCheck {
  std::string name;
  bool pass = true;
  double worst_violation = 0.0;  // raw violation measure; pass iff <= tolerance
  double tolerance = 0.0;
  std::uint64_t worst_t = 0;
};

struct AuditReport {
  std::vector<AuditCheck> checks;
  double kappa_bound = 1.0;            // 1 + sqrt(beta/alpha)
  double kappa_observed = 1.0;         // max_t max(v^t)/min(v^t)
  double kappa_grave_observed = 1.0;   // max_t min(v^{t+1})/min(v^t)
  double sum_dsq = 0.0;                // sum_t ||d^t||^2
  double sum_dsq_bound = 0.0;          // (min(v^{T+1})^2 - vf^2)/(alpha vf^2)

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const AuditCheck& c) { return c.pass; });
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& c : checks)
      os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name
         << "  worst=" << c.worst_violation << " tol=" << c.tolerance
         << " at t=" << c.worst_t << "\n";
    os << "kappa: observed " << kappa_observed << " <= bound " << kappa_bound
       << "\n"
       << "kappa_grave observed: " << kappa_grave_observed << "\n"
       << "sum ||d||^2: observed " << sum_dsq << " <= bound " << sum_dsq_bound
       << "\n";
    return os.str();
  }
};

// Re-derives every loop invariant from the per-step snapshots:
//  - the cumulative form of the v update, per coordinate
//  - the v envelope between the alpha-only and (alpha+beta) accumulators
//  - the conditioning ratio max(v)/min(v) <= 1 + sqrt(beta/alpha)
//  - monotonicity of v
//  - sigma in [0, theta], the sigma recursion replayed exactly, and the
//    lower bound theta(1-theta)/(kappa kappa_grave) with the run's observed
//    kappa_grave
//  - summability of ||d^t||^2 against the accumulator growth
// Exact identities get a 1e-12 relative tolerance; accumulating bounds get
// 1e-9 absolute plus 1e-9 relative slack. In strict mode the first violation
// throws an AuditFailure naming the check and iteration.
inline AuditReport audit(const StateLog& log, bool strict = false) {
  if (log.dimension <= 0)
    throw AuditUnavailable("audit: no state log retained (run in audit mode)");

  const double vf = log.v_floor;
  const double alpha = log.alpha;
  const double beta = log.beta;
  const double theta = log.theta;
  const Index n = log.dimension;

  AuditReport report;
  report.kappa_bound = 1.0 + std::sqrt(beta / alpha);

  AuditCheck c_cumulative{"v cumulative agreement", true, 0.0, 1e-8, 0};
  AuditCheck c_envelope{"v envelope", true, 0.0, 1e-9, 0};
  AuditCheck c_conditioning{"v conditioning ratio", true, 0.0, 1e-9, 0};
  AuditCheck c_monotone{"v nondecreasing", true, 0.0, 1e-12, 0};
  AuditCheck c_sigma_range{"sigma within [0, theta]", true, 0.0, 1e-12, 0};
  AuditCheck c_sigma_rec{"sigma recursion replay", true, 0.0, 1e-12, 0};
  AuditCheck c_sigma_low{"sigma lower bound", true, 0.0, 1e-9, 0};
  AuditCheck c_summable{"step summability", true, 0.0, 1e-9, 0};

  const auto note = [&](AuditCheck& c, double violation, std::uint64_t t) {
    if (violation > c.worst_violation) {
      c.worst_violation = violation;
      c.worst_t = t;
    }
    if (violation > c.tolerance) {
      c.pass = false;
      if (strict) throw AuditFailure(c.name, t, violation);
    }
  };

  Eigen::ArrayXd v_prev = Eigen::ArrayXd::Constant(n, vf);
  Eigen::ArrayXd beta_accum = Eigen::ArrayXd::Zero(n);
  double r_accum = 0.0;
  double sigma_prev = theta;
  double sum_dsq = 0.0;
  double min_v_last = vf;

  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const auto& s = log.steps[k];
    const auto t = static_cast<std::uint64_t>(k);
    const double r_sq = s.r.squared_norm();
    r_accum += r_sq;
    beta_accum += s.r.array().square();
    sum_dsq += s.d_sq;

    const Eigen::ArrayXd& v_next = s.v_next.array();

    // cumulative form: v^{t+1}_j^2 = vf^2 + alpha R_t + beta sum_i (r^i_j)^2
    const Eigen::ArrayXd cumulative =
        (vf * vf + alpha * r_accum + beta * beta_accum).sqrt();
    note(c_cumulative,
         ((v_next - cumulative).abs() / cumulative.abs()).maxCoeff(), t);

    // envelope between the alpha-only and (alpha+beta) accumulators
    const double lo = std::sqrt(vf * vf + alpha * r_accum);
    const double hi = std::sqrt(vf * vf + (alpha + beta) * r_accum);
    const double rel = 1e-9;
    note(c_envelope,
         std::max((lo - v_next.minCoeff()) - rel * lo,
                  (v_next.maxCoeff() - hi) - rel * hi),
         t);

    // conditioning: max(v^{t+1})/min(v^{t+1}) <= kappa
    note(c_conditioning,
         v_next.maxCoeff() / v_next.minCoeff() - report.kappa_bound, t);
    report.kappa_observed =
        std::max(report.kappa_observed, v_next.maxCoeff() / v_next.minCoeff());

    note(c_monotone, ((v_prev - v_next) / v_prev).maxCoeff(), t);

    report.kappa_grave_observed = std::max(
        report.kappa_grave_observed, v_next.minCoeff() / v_prev.minCoeff());

    // sigma recursion replayed from the stored stepsize factors
    const double ratio = (v_prev / v_next).minCoeff();
    const double sigma_expected = theta * (1.0 - sigma_prev) * ratio;
    const double denom = std::max(std::fabs(sigma_expected), 1e-300);
    note(c_sigma_rec, std::fabs(s.sigma - sigma_expected) / denom, t);

    note(c_sigma_range, std::max(-s.sigma, s.sigma - theta), t);

    v_prev = v_next;
    sigma_prev = s.sigma;
    min_v_last = v_next.minCoeff();
  }

  // sigma lower bound with the observed kappa_grave (vacuous when theta = 0)
  if (!log.steps.empty() && theta > 0.0) {
    const double floor_bound = theta * (1.0 - theta) /
                               (report.kappa_bound * report.kappa_grave_observed);
    for (std::size_t k = 0; k < log.steps.size(); ++k)
      note(c_sigma_low, floor_bound - log.steps[k].sigma,
           static_cast<std::uint64_t>(k));
  }

  report.sum_dsq = sum_dsq;
  report.sum_dsq_bound =
      (min_v_last * min_v_last - vf * vf) / (alpha * vf * vf);
  if (!log.steps.empty())
    note(c_summable,
         (sum_dsq - report.sum_dsq_bound) - 1e-9 * std::fabs(report.sum_dsq_bound),
         static_cast<std::uint64_t>(log.steps.size() - 1));

  report.checks = {c_cumulative, c_envelope, c_conditioning, c_monotone,
                   c_sigma_range, c_sigma_rec, c_sigma_low, c_summable};
  return report;
}

}  // namespace aepg
