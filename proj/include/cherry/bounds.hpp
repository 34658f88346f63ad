#pragma once

// Recursive bounds on the gap ratios alpha_n and the critical-orbit distances.
//
// Everything here runs in log space on doubles: theta_n = -log alpha_n stays
// moderate even when alpha_n itself is far below any floating-point range.

#include "cherry/cf.hpp"
#include "cherry/flatmap.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cherry::bounds {

using cf::Quotient;

/// (1 - ell^-a) / ((ell - 1) a).
double base_quantity(double ell, Quotient a);

/// sup over the quotients of base_quantity(ell, a)^(1/n0). Domain error for ell <= 1.
double c_of_ell(double ell, const std::vector<Quotient>& quotients, int n0);

/// ((1 - ell^-a_next)/(ell - 1)) theta_prev + ell^-a_cur theta_prev2.
double theta_step(double ell, Quotient a_next, Quotient a_cur, double theta_prev, double theta_prev2);

enum class ThetaOrigin { synthetic_recurrence, measured_from_map };

const char* to_string(ThetaOrigin o);

/// theta_n for n = first_index, first_index + 1, ...
struct ThetaSequence {
  std::vector<double> theta;
  ThetaOrigin origin = ThetaOrigin::synthetic_recurrence;
  long first_index = 0;

  long last_index() const { return first_index + static_cast<long>(theta.size()) - 1; }
  bool has(long n) const { return n >= first_index && n <= last_index(); }
  double at(long n) const;
};

/// Saturated recurrence: seeds theta_{-1}, theta_0, then
/// theta_n = theta_step(ell, a_{n+1}, a_n, theta_{n-1}, theta_{n-2}) for
/// n = 1..n_last, which needs quotients a_1..a_{n_last+1}.
ThetaSequence synthetic_theta(double ell, const std::vector<Quotient>& quotients, std::size_t n_last,
                              double seed_minus1, double seed0);

struct BoundParams {
  double K = 1.0;
  double C = 0.5;
  int n0 = 2;
  double ell = 2.0;
};

/// C from c_of_ell over a_1..a_{n_last+1} and K = max(theta_{n0-2}, theta_{n0-1}).
BoundParams bound_params_for(const ThetaSequence& theta, double ell, const std::vector<Quotient>& quotients,
                             int n0, std::size_t n_last);

struct PropositionRow {
  long n;
  BigInt q_next;      // q_{n+1}
  double log_q_next;
  double theta;
  double ratio;       // theta_n / (q_{n+1} C^n)
  bool verdict;       // ratio <= K
};

struct PropositionReport {
  std::vector<PropositionRow> rows;
  bool overall = true;
  std::size_t violations = 0;
};

/// Relative slack on the log-space comparison ratio <= K.
inline constexpr double kLogTolerance = 1e-12;

/// Checks theta_n <= K C^n q_{n+1} for n = n0..last. Throws
/// index_misalignment when theta does not cover n0 or the table lacks q_{n+1}.
PropositionReport verify_proposition(const ThetaSequence& theta, const cf::ConvergentTable& table,
                                     const BoundParams& params);

/// Map-derived sequences used by the empirical checks.
struct MeasuredGeometry {
  std::vector<std::size_t> n;
  std::vector<std::uint64_t> qn;
  std::vector<double> theta;    // from the gap rows
  std::vector<double> log_fwd;  // log d(F^{q_n}(c), c)
  int precision_bits = 0;
};

template <class T>
MeasuredGeometry measure(const flatmap::PreimageGeometry<T>& g) {
  MeasuredGeometry out;
  out.precision_bits = g.precision_bits;
  for (const auto& row : g.gaps) {
    out.n.push_back(row.n);
    out.qn.push_back(row.qn);
    out.theta.push_back(row.theta);
  }
  for (const auto& row : g.forward) out.log_fwd.push_back(log2_magnitude(row.distance) * std::log(2.0));
  return out;
}

ThetaSequence theta_from_geometry(const MeasuredGeometry& g);

/// Trend summary of a log-scale series over its trailing window.
struct TrendReport {
  std::size_t window = 0;
  bool strictly_decreasing = false;
  double contraction = 0.0;      // geometric-fit ratio of successive decrements
  bool decaying = false;         // keeps falling with non-contracting decrements
  std::optional<double> limit;   // extrapolated limit of the log series when contracting
};

/// A series "decays" when it is strictly decreasing over the last `window`
/// values and its decrements do not contract (geometric-fit ratio >= 1).
/// Contracting decrements have a finite extrapolated limit.
TrendReport decay_trend(const std::vector<double>& log_values, std::size_t window);

struct SenkRow {
  std::size_t n;
  std::uint64_t qn;
  double theta;
  double log_k1;      // log of the largest K1 valid at this n
  double correction;  // log(K1_min)/q_n, the per-step additive term of the normalized recurrence
};

struct SenkReport {
  std::vector<SenkRow> rows;
  double k1_min = 0.0;  // largest K1 valid for every n
  TrendReport trend;
};

/// alpha_n >= K1 alpha_{n-1}^{(1-ell^-a_{n+1})/(ell-1)} alpha_{n-2}^{ell^-a_n}:
/// the per-n largest admissible K1 and its trend. Throws insufficient_data with
/// fewer than 4 alpha values.
SenkReport verify_senk_empirical(const MeasuredGeometry& g, double ell, const std::vector<Quotient>& quotients,
                                 std::size_t trend_window = 6);

struct RatioRow {
  std::size_t n;
  double ratio;          // |(0,q_n)| / |(0,q_{n-2})|
  double running_inf;
};

struct RatioReport {
  std::vector<RatioRow> rows;
  double inf = 0.0;
  double fit_alpha = 0.0;  // sqrt(inf)
  double fit_C = 0.0;      // largest C with |(0,q_n)| >= C alpha^n on the data
  TrendReport trend;
};

/// Ratios of forward critical-orbit distances two closest returns apart.
RatioReport ratio_sequence(const std::vector<double>& log_fwd, std::size_t trend_window = 6);

struct CorollaryRow {
  std::size_t n;
  double value;  // -log|(q_n, 0)| / q_{n+1}
  double ratio;  // value / C^n
  bool verdict;  // ratio <= K
};

struct CorollaryReport {
  std::vector<CorollaryRow> rows;
  double fitted_K = 0.0;  // max ratio over n >= n0
  bool overall = true;
};

/// -log|(q_n, 0)|/q_{n+1} <= K C^n for n = n0..last, with q from the table.
CorollaryReport verify_corollary(const MeasuredGeometry& g, const cf::ConvergentTable& table,
                                 const BoundParams& params);

}  // namespace cherry::bounds
