#pragma once

// Suspension flow over the inverse branch g with a logarithmic return time.
//
// A flow orbit starting on the section at z visits z_1 = z, z_2 = g(z_1), ...
// and spends t_i = tau(z_i) between consecutive visits. Distances are taken to
// the critical value c, the section point on the stable manifold of the saddle.

#include "cherry/cf.hpp"
#include "cherry/error.hpp"
#include "cherry/flatmap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace cherry::suspension {

struct ReturnTimeModel {
  double tau0 = 1.0;
  double kappa = 1.0;
  double epsilon_cut = 0.1;

  /// tau at distance exp(log_d) from c.
  double tau(double log_d) const { return tau0 - kappa * log_d; }
  /// Time spent inside the epsilon box during a passage at distance exp(log_d).
  double dwell(double log_d) const { return std::max(0.0, kappa * (std::log(epsilon_cut) - log_d)); }
};

/// tau0 = 1, kappa = 1/lambda1.
ReturnTimeModel default_model(const flatmap::FlatMapParams& params, double epsilon_cut = 0.1);

/// Throws invalid_parameter unless tau0 > 0, kappa >= 0 and epsilon_cut in (0, 1/2).
void validate(const ReturnTimeModel& m);

template <class T>
struct OrbitSegment {
  std::vector<T> z;              // z_1 .. z_{N+1}
  std::vector<double> log_dist;  // log d(z_i, c)
  std::vector<double> t;         // t_i = tau(z_i)
  double remainder = 0.0;        // 0 < remainder <= t_{N+1}
  double total = 0.0;            // t_1 + ... + t_N + remainder

  std::size_t N() const { return z.empty() ? 0 : z.size() - 1; }
};

namespace detail {

template <class T>
double log_distance(const T& z, const T& c) {
  return log2_magnitude(circle_distance(z, c)) * std::log(2.0);
}

inline double sum_times(const std::vector<double>& t, std::size_t count, double remainder) {
  double s = 0.0;
  for (std::size_t i = 0; i < count; ++i) s += t[i];
  return s + remainder;
}

template <class T>
void check_start(const flatmap::Lift<T>& lift, const T& z) {
  if (!(z > lift.a() && z < lift.b())) fail(ErrorKind::invalid_parameter, "start point must lie inside the flat interval");
}

template <class T>
T next_point(const flatmap::Lift<T>& lift, const T& z, std::size_t i) {
  const double l2 = log2_magnitude(circle_distance(z, lift.c()));
  if (l2 < flatmap::geometry_guard_log2(lift.precision_bits()))
    fail(ErrorKind::discontinuity_hit, "orbit point " + std::to_string(i) + " within the precision guard of c");
  return lift.inverse(z);
}

}  // namespace detail

/// z_1 = z, z_{i+1} = g(z_i) for i = 1..N; remainder = t_{N+1}.
template <class T>
OrbitSegment<T> iterate_segment(const flatmap::Lift<T>& lift, const ReturnTimeModel& model, const T& z,
                                std::size_t N) {
  validate(model);
  detail::check_start(lift, z);
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  OrbitSegment<T> s;
  s.z.reserve(N + 1);
  T cur = z;
  for (std::size_t i = 1; i <= N + 1; ++i) {
    if (i > 1) cur = detail::next_point(lift, cur, i);
    const double ld = detail::log_distance(cur, lift.c());
    s.z.push_back(cur);
    s.log_dist.push_back(ld);
    s.t.push_back(model.tau(ld));
  }
  s.remainder = s.t.back();
  s.total = detail::sum_times(s.t, N, s.remainder);
  return s;
}

/// Shortest segment whose full length reaches `t`; the remainder is cut so the
/// total equals t.
template <class T>
OrbitSegment<T> iterate_until(const flatmap::Lift<T>& lift, const ReturnTimeModel& model, const T& z, double t) {
  validate(model);
  detail::check_start(lift, z);
  if (!(t > 0)) fail(ErrorKind::invalid_parameter, "segment time must be positive");
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  OrbitSegment<T> s;
  T cur = z;
  double acc = 0.0;
  for (std::size_t i = 1;; ++i) {
    if (i > 1) cur = detail::next_point(lift, cur, i);
    const double ld = detail::log_distance(cur, lift.c());
    s.z.push_back(cur);
    s.log_dist.push_back(ld);
    s.t.push_back(model.tau(ld));
    if (acc + s.t.back() >= t) break;
    acc += s.t.back();
  }
  s.remainder = t - acc;
  s.total = detail::sum_times(s.t, s.N(), s.remainder);
  return s;
}

/// The prefix of `s` covering flow time t (t <= s.total).
template <class T>
OrbitSegment<T> truncate(const OrbitSegment<T>& s, double t) {
  if (!(t > 0) || t > s.total) fail(ErrorKind::invalid_parameter, "truncation time outside (0, total]");
  OrbitSegment<T> out;
  double acc = 0.0;
  for (std::size_t i = 0; i < s.z.size(); ++i) {
    out.z.push_back(s.z[i]);
    out.log_dist.push_back(s.log_dist[i]);
    out.t.push_back(s.t[i]);
    if (acc + s.t[i] >= t || i + 1 == s.z.size()) break;
    acc += s.t[i];
  }
  out.remainder = t - acc;
  out.total = detail::sum_times(out.t, out.N(), out.remainder);
  return out;
}

enum class PassageProfile { uniform, saddle_log };

const char* to_string(PassageProfile p);

/// A flow observable given by a section function (of the chart position as a
/// double and the log-distance to c) and how it accumulates during a return.
/// uniform: the value is held for the whole return time. saddle_log: the value
/// is held only during the dwell window centered in the return.
struct Observable {
  std::function<double(double z, double log_dist)> section;
  PassageProfile profile = PassageProfile::uniform;
};

/// Time spent by passage i in the part of its profile window lying in [0, elapsed].
double profile_time(PassageProfile profile, const ReturnTimeModel& model, double return_time, double log_dist,
                    double elapsed);

template <class T>
double time_average(const OrbitSegment<T>& s, const ReturnTimeModel& model, const Observable& obs) {
  double acc = 0.0;
  const std::size_t n = s.N();
  for (std::size_t i = 0; i <= n; ++i) {
    const double elapsed = i < n ? s.t[i] : s.remainder;
    const double w = profile_time(obs.profile, model, s.t[i], s.log_dist[i], elapsed);
    acc += w * obs.section(scalar_traits<T>::to_double(s.z[i]), s.log_dist[i]);
  }
  return acc / s.total;
}

/// Fraction of the segment's time spent inside the model saddle neighborhood.
template <class T>
double gamma_hat(const OrbitSegment<T>& s, const ReturnTimeModel& model) {
  return time_average(s, model, Observable{[](double, double) { return 1.0; }, PassageProfile::saddle_log});
}

/// Signed offsets s(x) in [-1/2, 1/2) of the forward critical orbit points
/// F^{q_l}(c) relative to c, for l = 0..l_last.
template <class T>
std::vector<T> forward_offsets(const flatmap::Lift<T>& lift, const cf::ConvergentTable& table, std::size_t l_last) {
  if (l_last + 1 > table.size()) fail(ErrorKind::missing_geometry, "convergent table shallower than requested");
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  std::vector<T> out;
  T x = lift.c();
  std::uint64_t done = 0;
  for (std::size_t l = 0; l <= l_last; ++l) {
    for (const std::uint64_t q = table.q64(l); done < q; ++done) x = lift(x);
    T s = frac(T(x - lift.c()));
    if (2 * s >= 1) s -= 1;
    out.push_back(s);
  }
  return out;
}

template <class T>
T signed_offset(const T& z, const T& c) {
  T s = frac(T(z - c));
  if (2 * s >= 1) s -= 1;
  return s;
}

struct GapOccupation {
  std::size_t l;
  std::size_t count;  // segment points z_1..z_N in (q_l, q_{l+2})
  double time;        // t_{B_l}
};

struct GammaDecomposition {
  double t = 0.0;
  double gamma_hat = 0.0;
  std::size_t N = 0;
  std::size_t n = 0;   // q_n <= N < q_{n+1}
  std::size_t n0 = 0;
  std::vector<GapOccupation> occupation;  // l = n0 .. n-1
  double t_A = 0.0;          // direct occupation of (q_{n0}, q_{n0+1})
  std::size_t count_A = 0;
  double t_A_from_B = 0.0;   // sum of t_{B_l}
  double comparison = 0.0;   // sum over l of -log|(q_{l+2}, 0)| / q_{l+1}
};

namespace detail {

template <class T>
bool strictly_between(const T& x, const T& e1, const T& e2) {
  return e1 < e2 ? (e1 < x && x < e2) : (e2 < x && x < e1);
}

}  // namespace detail

/// Occupation times of the gaps (q_l, q_{l+2}), l = n0..n-1, and of
/// (q_{n0}, q_{n0+1}), over the returns z_1..z_N. `offsets` are the signed
/// offsets from forward_offsets and must reach n+1. When n is not given it is
/// the largest index with q_n <= N.
template <class T>
GammaDecomposition occupation_times(const OrbitSegment<T>& s, const flatmap::Lift<T>& lift,
                                    const cf::ConvergentTable& table, const std::vector<T>& offsets,
                                    std::size_t n0, std::optional<std::size_t> n_opt = std::nullopt) {
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  GammaDecomposition out;
  out.t = s.total;
  out.N = s.N();
  out.n0 = n0;
  out.n = n_opt ? *n_opt : cf::last_index_with_q_at_most(table, BigInt(out.N));
  if (n0 > out.n) fail(ErrorKind::invalid_parameter, "n0 exceeds n");
  if (offsets.size() < out.n + 2) fail(ErrorKind::missing_geometry, "forward critical orbit does not reach q_{n+1}");
  std::vector<T> pos;
  pos.reserve(out.N);
  for (std::size_t i = 0; i < out.N; ++i) pos.push_back(signed_offset(s.z[i], lift.c()));

  for (std::size_t i = 0; i < out.N; ++i)
    if (detail::strictly_between(pos[i], offsets[n0], offsets[n0 + 1])) {
      out.t_A += s.t[i];
      ++out.count_A;
    }
  for (std::size_t l = n0; l < out.n; ++l) {
    GapOccupation g{l, 0, 0.0};
    for (std::size_t i = 0; i < out.N; ++i)
      if (detail::strictly_between(pos[i], offsets[l], offsets[l + 2])) {
        ++g.count;
        g.time += s.t[i];
      }
    out.t_A_from_B += g.time;
    const double log_d = log2_magnitude(offsets[l + 2]) * std::log(2.0);
    out.comparison += -log_d / std::exp(log_of(table.q(l + 1)));
    out.occupation.push_back(g);
  }
  return out;
}

/// True when the circular order of z_1..z_{N+1} read from c equals the order of
/// R^{-i}(0), i = 1..N+1, read from 0.
template <class T>
bool segment_order_matches(const OrbitSegment<T>& s, const T& c, const cf::RotationTarget& rho) {
  const std::size_t m = s.z.size();
  std::vector<T> pos;
  pos.reserve(m);
  for (const T& z : s.z) pos.push_back(frac(T(z - c)));
  std::vector<std::size_t> map_order(m), rot_order(m);
  for (std::size_t i = 0; i < m; ++i) map_order[i] = rot_order[i] = i;
  std::stable_sort(map_order.begin(), map_order.end(), [&](std::size_t i, std::size_t j) { return pos[i] < pos[j]; });
  const cf::RotationOrbit orbit(rho.value);
  std::vector<CircleFixed> rpos(m);
  for (std::size_t i = 0; i < m; ++i) rpos[i] = orbit.at(-static_cast<std::int64_t>(i + 1));
  std::stable_sort(rot_order.begin(), rot_order.end(), [&](std::size_t i, std::size_t j) { return rpos[i] < rpos[j]; });
  return map_order == rot_order;
}

/// Number of i in 1..N with R^{-i}(0) strictly inside the arc between
/// R^{q_j}(0) and R^{q_k}(0) that has length below 1/2 (the rotation image of
/// the gap (q_j, q_k)).
std::size_t rotation_gap_count(const cf::RotationTarget& rho, std::uint64_t qj, std::uint64_t qk, std::uint64_t N);

/// Full decomposition of one segment: gamma_hat plus occupation.
template <class T>
GammaDecomposition gamma_estimate(const OrbitSegment<T>& s, const ReturnTimeModel& model,
                                  const flatmap::Lift<T>& lift, const cf::ConvergentTable& table,
                                  const std::vector<T>& offsets, std::size_t n0) {
  if (s.z.empty()) fail(ErrorKind::invalid_parameter, "empty segment");
  const std::size_t n = cf::last_index_with_q_at_most(table, BigInt(s.N()));
  GammaDecomposition out = n0 <= n ? occupation_times(s, lift, table, offsets, n0, n) : GammaDecomposition{};
  out.t = s.total;
  out.N = s.N();
  out.n = n;
  out.n0 = n0;
  out.gamma_hat = gamma_hat(s, model);
  return out;
}

struct TauMuReport {
  double estimate = 0.0;        // mean of the truncated tau over the orbit
  double truncated_mass = 0.0;  // mean of kappa max(0, log(r/d))
  double radius = 0.0;
  std::vector<std::size_t> checkpoints;  // N/8, N/4, N/2, N
  std::vector<double> estimates;         // estimate at each checkpoint
  std::vector<double> cauchy;            // |successive differences|
  bool converging = true;                // Cauchy differences shrink
};

/// Mean of tau over f^i(c), i = 1..N, with distances below `radius` replaced by
/// radius (default: the precision guard).
template <class T>
TauMuReport tau_mu_integral_estimate(const flatmap::Lift<T>& lift, const ReturnTimeModel& model, std::size_t N,
                                     std::optional<double> log_radius = std::nullopt) {
  if (N < 8) fail(ErrorKind::invalid_parameter, "tau_mu estimate needs N >= 8");
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  TauMuReport out;
  const double lr = log_radius ? *log_radius : flatmap::geometry_guard_log2(lift.precision_bits()) * std::log(2.0);
  out.radius = std::exp(lr);
  out.checkpoints = {N / 8, N / 4, N / 2, N};
  T x = lift.c();
  double sum = 0.0, cut = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 1; i <= N; ++i) {
    x = lift(x);
    const double ld = detail::log_distance(x, lift.c());
    sum += model.tau(std::max(ld, lr));
    cut += model.kappa * std::max(0.0, lr - ld);
    if (i == out.checkpoints[next]) {
      out.estimates.push_back(sum / static_cast<double>(i));
      ++next;
    }
  }
  out.estimate = sum / static_cast<double>(N);
  out.truncated_mass = cut / static_cast<double>(N);
  for (std::size_t k = 1; k < out.estimates.size(); ++k)
    out.cauchy.push_back(std::abs(out.estimates[k] - out.estimates[k - 1]));
  for (std::size_t k = 1; k < out.cauchy.size(); ++k)
    if (out.cauchy[k] > out.cauchy[k - 1]) out.converging = false;
  return out;
}

}  // namespace cherry::suspension
