#include "cherry/bounds.hpp"

#include "cherry/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cherry::bounds {

namespace {

void require_ell(double ell) {
  if (!(ell > 1)) fail(ErrorKind::domain, "ell must exceed 1");
}

bool log_le(double lhs, double rhs) { return lhs <= rhs + kLogTolerance * std::max(1.0, std::abs(rhs)); }

}  // namespace

double base_quantity(double ell, Quotient a) {
  require_ell(ell);
  if (a < 1) fail(ErrorKind::invalid_parameter, "partial quotients must be >= 1");
  const double ad = static_cast<double>(a);
  return -std::expm1(-ad * std::log(ell)) / ((ell - 1) * ad);
}

double c_of_ell(double ell, const std::vector<Quotient>& quotients, int n0) {
  require_ell(ell);
  if (quotients.empty()) fail(ErrorKind::invalid_parameter, "no quotients supplied");
  if (n0 < 1) fail(ErrorKind::invalid_parameter, "n0 must be >= 1");
  double best = 0.0;
  for (auto a : quotients) best = std::max(best, base_quantity(ell, a));
  return std::pow(best, 1.0 / n0);
}

double theta_step(double ell, Quotient a_next, Quotient a_cur, double theta_prev, double theta_prev2) {
  require_ell(ell);
  if (a_next < 1 || a_cur < 1) fail(ErrorKind::invalid_parameter, "partial quotients must be >= 1");
  if (theta_prev < 0 || theta_prev2 < 0) fail(ErrorKind::invalid_parameter, "theta values must be non-negative");
  const double coef_prev = -std::expm1(-static_cast<double>(a_next) * std::log(ell)) / (ell - 1);
  const double coef_prev2 = std::pow(ell, -static_cast<double>(a_cur));
  return coef_prev * theta_prev + coef_prev2 * theta_prev2;
}

const char* to_string(ThetaOrigin o) {
  switch (o) {
    case ThetaOrigin::synthetic_recurrence: return "synthetic_recurrence";
    case ThetaOrigin::measured_from_map: return "measured_from_map";
  }
  return "unknown";
}

double ThetaSequence::at(long n) const {
  if (!has(n)) fail(ErrorKind::index_misalignment, "theta_" + std::to_string(n) + " not available");
  return theta[static_cast<std::size_t>(n - first_index)];
}

ThetaSequence synthetic_theta(double ell, const std::vector<Quotient>& quotients, std::size_t n_last,
                              double seed_minus1, double seed0) {
  if (quotients.size() < n_last + 1)
    fail(ErrorKind::index_misalignment, "synthetic theta needs quotients a_1..a_{n_last+1}");
  ThetaSequence out;
  out.origin = ThetaOrigin::synthetic_recurrence;
  out.first_index = -1;
  out.theta = {seed_minus1, seed0};
  for (std::size_t n = 1; n <= n_last; ++n) {
    const double t = theta_step(ell, quotients[n], quotients[n - 1], out.theta[n], out.theta[n - 1]);
    out.theta.push_back(t);
  }
  return out;
}

BoundParams bound_params_for(const ThetaSequence& theta, double ell, const std::vector<Quotient>& quotients,
                             int n0, std::size_t n_last) {
  if (quotients.size() < n_last + 1) fail(ErrorKind::index_misalignment, "quotients shorter than n_last + 1");
  BoundParams p;
  p.ell = ell;
  p.n0 = n0;
  p.C = c_of_ell(ell, std::vector<Quotient>(quotients.begin(), quotients.begin() + static_cast<long>(n_last) + 1),
                 n0);
  p.K = std::max(theta.at(n0 - 2), theta.at(n0 - 1));
  return p;
}

PropositionReport verify_proposition(const ThetaSequence& theta, const cf::ConvergentTable& table,
                                     const BoundParams& params) {
  if (params.n0 < 1) fail(ErrorKind::invalid_parameter, "n0 must be >= 1");
  if (!(params.C > 0 && params.C < 1)) fail(ErrorKind::invalid_parameter, "C must lie in (0, 1)");
  if (!theta.has(params.n0)) fail(ErrorKind::index_misalignment, "theta does not reach n0");
  if (static_cast<long>(table.size()) < theta.last_index() + 2)
    fail(ErrorKind::index_misalignment, "convergent table lacks q_{n+1} for the last theta");
  PropositionReport out;
  const double log_c = std::log(params.C);
  const double log_k = params.K > 0 ? std::log(params.K) : -std::numeric_limits<double>::infinity();
  for (long n = params.n0; n <= theta.last_index(); ++n) {
    const double th = theta.at(n);
    const BigInt& q_next = table.q(static_cast<std::size_t>(n + 1));
    const double lq = log_of(q_next);
    PropositionRow row{n, q_next, lq, th, 0.0, true};
    if (th > 0) {
      const double lr = std::log(th) - lq - static_cast<double>(n) * log_c;
      row.ratio = std::exp(lr);
      row.verdict = log_le(lr, log_k);
    }
    if (!row.verdict) {
      out.overall = false;
      ++out.violations;
    }
    out.rows.push_back(row);
  }
  return out;
}

ThetaSequence theta_from_geometry(const MeasuredGeometry& g) {
  ThetaSequence out;
  out.origin = ThetaOrigin::measured_from_map;
  out.first_index = g.n.empty() ? 0 : static_cast<long>(g.n.front());
  for (std::size_t k = 0; k < g.n.size(); ++k) {
    if (g.n[k] != g.n.front() + k) fail(ErrorKind::index_misalignment, "geometry rows are not consecutive");
    out.theta.push_back(g.theta[k]);
  }
  return out;
}

TrendReport decay_trend(const std::vector<double>& log_values, std::size_t window) {
  TrendReport out;
  const std::size_t w = std::min(window, log_values.size());
  out.window = w;
  if (w < 2) return out;
  const auto first = log_values.end() - static_cast<long>(w);
  std::vector<double> dec;
  for (auto it = first + 1; it != log_values.end(); ++it) dec.push_back(*(it - 1) - *it);
  out.strictly_decreasing = std::all_of(dec.begin(), dec.end(), [](double d) { return d > 0; });
  if (!out.strictly_decreasing) return out;
  if (dec.size() < 2) {
    out.decaying = true;
    return out;
  }
  // Least-squares slope of log(decrement) against its index.
  const double m = static_cast<double>(dec.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < dec.size(); ++k) {
    const double x = static_cast<double>(k), y = std::log(dec[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  out.contraction = std::exp(slope);
  out.decaying = out.contraction >= 1.0;
  if (!out.decaying) out.limit = log_values.back() - dec.back() * out.contraction / (1 - out.contraction);
  return out;
}

SenkReport verify_senk_empirical(const MeasuredGeometry& g, double ell, const std::vector<Quotient>& quotients,
                                 std::size_t trend_window) {
  require_ell(ell);
  if (g.theta.size() < 4) fail(ErrorKind::insufficient_data, "need at least 4 alpha values");
  const ThetaSequence theta = theta_from_geometry(g);
  SenkReport out;
  std::vector<double> logs;
  for (long n = std::max(2L, theta.first_index + 2); n <= theta.last_index(); ++n) {
    if (static_cast<std::size_t>(n + 1) > quotients.size()) break;
    const double a_next = static_cast<double>(quotients[static_cast<std::size_t>(n)]);
    const double a_cur = static_cast<double>(quotients[static_cast<std::size_t>(n - 1)]);
    const double coef_prev = -std::expm1(-a_next * std::log(ell)) / (ell - 1);
    const double coef_prev2 = std::pow(ell, -a_cur);
    const double lk = coef_prev * theta.at(n - 1) + coef_prev2 * theta.at(n - 2) - theta.at(n);
    out.rows.push_back({static_cast<std::size_t>(n), g.qn[static_cast<std::size_t>(n - theta.first_index)],
                        theta.at(n), lk, 0.0});
    logs.push_back(lk);
  }
  if (logs.size() < 2) fail(ErrorKind::insufficient_data, "fewer than 2 indices with both predecessors");
  const double lmin = *std::min_element(logs.begin(), logs.end());
  out.k1_min = std::exp(lmin);
  for (auto& row : out.rows) row.correction = lmin / static_cast<double>(row.qn);
  out.trend = decay_trend(logs, trend_window);
  return out;
}

RatioReport ratio_sequence(const std::vector<double>& log_fwd, std::size_t trend_window) {
  RatioReport out;
  std::vector<double> logs;
  double inf = std::numeric_limits<double>::infinity();
  for (std::size_t n = 2; n < log_fwd.size(); ++n) {
    const double lr = log_fwd[n] - log_fwd[n - 2];
    inf = std::min(inf, std::exp(lr));
    out.rows.push_back({n, std::exp(lr), inf});
    logs.push_back(lr);
  }
  if (out.rows.empty()) fail(ErrorKind::insufficient_data, "need at least 3 forward distances");
  out.inf = inf;
  out.fit_alpha = std::sqrt(inf);
  const double la = std::log(out.fit_alpha);
  double lc = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < log_fwd.size(); ++n) lc = std::min(lc, log_fwd[n] - static_cast<double>(n) * la);
  out.fit_C = std::exp(lc);
  out.trend = decay_trend(logs, trend_window);
  return out;
}

CorollaryReport verify_corollary(const MeasuredGeometry& g, const cf::ConvergentTable& table,
                                 const BoundParams& params) {
  if (!(params.C > 0 && params.C < 1)) fail(ErrorKind::invalid_parameter, "C must lie in (0, 1)");
  if (g.log_fwd.size() < static_cast<std::size_t>(params.n0) + 1)
    fail(ErrorKind::missing_geometry, "forward distances do not reach n0");
  CorollaryReport out;
  const double log_c = std::log(params.C);
  const double log_k = params.K > 0 ? std::log(params.K) : -std::numeric_limits<double>::infinity();
  double best = 0.0;
  for (std::size_t n = static_cast<std::size_t>(params.n0); n < g.log_fwd.size(); ++n) {
    if (n + 1 >= table.size()) fail(ErrorKind::index_misalignment, "convergent table lacks q_{n+1}");
    const double value = -g.log_fwd[n] / std::exp(log_of(table.q(n + 1)));
    CorollaryRow row{n, value, 0.0, true};
    if (value > 0) {
      const double lr = std::log(value) - static_cast<double>(n) * log_c;
      row.ratio = std::exp(lr);
      row.verdict = log_le(lr, log_k);
    }
    best = std::max(best, row.ratio);
    if (!row.verdict) out.overall = false;
    out.rows.push_back(row);
  }
  out.fitted_K = best;
  return out;
}

}  // namespace cherry::bounds
