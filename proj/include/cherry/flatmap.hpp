#pragma once

// Flat-interval circle maps.
//
// On the non-flat arc [b, a+1] the lift is
//   F(x) = c + I((x - b)/L),  L = 1 - (b - a),
// where I is the regularized incomplete beta function with both shape
// parameters equal to ell, i.e. the normalized integral of the weight
// w(s) = (s-b)^(ell-1) (a+1-s)^(ell-1). F is constant (= c) on [a, b] and
// F(x + 1) = F(x) + 1. The critical value c plays the role of the point 0 in
// all geometric quantities below.

#include "cherry/cf.hpp"
#include "cherry/error.hpp"
#include "cherry/real.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

namespace cherry::flatmap {

struct FlatMapParams {
  double ell = 1.5;
  double lambda1 = 1.5;
  double lambda2 = -1.0;
  Real a;  // flat interval [a, b] in the chart [-1/2, 1/2]
  Real b;
  Real c;  // critical value
  int precision_bits = 256;

  Real flat_length() const { return b - a; }
};

/// Parameters with a = -flat_length/2, b = flat_length/2, lambda1 = ell and
/// lambda2 = -1. Endpoints and offset are stored at `bits`.
FlatMapParams make_params(double ell, double flat_length, const Real& c, int bits);

/// Throws invalid_parameter unless ell > 0, lambda1 > 0 > lambda2,
/// ell = lambda1/(-lambda2), -1/2 <= a < b <= 1/2 and precision_bits >= 64.
void validate(const FlatMapParams& p);

namespace detail {

// Series coefficients of S(u) = 2F1(2 ell, 1; ell + 1; u), shared by copies of a lift.
template <class T>
struct BetaSeries {
  std::vector<T> coeff;
  std::vector<double> log2_coeff;
  T ell_beta;      // ell * B(ell, ell)
  T log_ell_beta;  // log(ell * B(ell, ell))
  double ell_beta_d;
};

// log u with I(u) = exp(log_y), u <= 1/2, by Newton in double precision;
// starting point for the high-precision solve.
double beta_inverse_small_double(double ell, double log_ell_beta, double log_y);

}  // namespace detail

template <class T>
class Lift {
 public:
  explicit Lift(const FlatMapParams& params);

  const FlatMapParams& params() const { return params_; }
  int precision_bits() const { return bits_; }
  const T& a() const { return a_; }
  const T& b() const { return b_; }
  const T& c() const { return c_; }
  const T& ell() const { return ell_; }
  /// Length of the non-flat arc.
  const T& arc_length() const { return L_; }
  /// Integral of the weight over the non-flat arc.
  const T& normalization() const { return Z_; }

  /// Same map family with a different critical value; shares the series table.
  Lift with_offset(const T& c) const;

  /// F(x).
  T operator()(const T& x) const;
  /// Inverse branch g(z) in (b, a+1). Throws DiscontinuityError when z = c mod 1.
  T inverse(const T& z) const;
  /// g(c-) = a + 1 in the lift, reported as the chart point a.
  T inverse_left_limit() const { return a_; }
  /// g(c+) = b.
  T inverse_right_limit() const { return b_; }

  /// I(u) for u in [0, 1].
  T profile(const T& u) const;
  /// The u in [0, 1] with I(u) = y.
  T profile_inverse(const T& y) const;
  /// Unnormalized weight w at a point s of the non-flat arc [b, a+1].
  T weight(const T& s) const;

 private:
  T series_sum(const T& u) const;
  T profile_small(const T& u) const;
  T profile_inverse_small(const T& y) const;

  FlatMapParams params_;
  int bits_;
  T ell_, a_, b_, c_, L_, Z_;
  std::shared_ptr<const detail::BetaSeries<T>> series_;
};

// --- Lift implementation ---------------------------------------------------

template <class T>
Lift<T>::Lift(const FlatMapParams& params) : params_(params) {
  validate(params_);
  using traits = scalar_traits<T>;
  bits_ = traits::bits(params_.precision_bits);
  typename traits::Scope scope(bits_);
  if constexpr (std::is_same_v<T, double>) {
    a_ = params_.a.template convert_to<double>();
    b_ = params_.b.template convert_to<double>();
    c_ = params_.c.template convert_to<double>();
  } else {
    a_ = traits::rebase(params_.a);
    b_ = traits::rebase(params_.b);
    c_ = traits::rebase(params_.c);
  }
  ell_ = traits::from_double(params_.ell);
  L_ = T(1) - (b_ - a_);

  auto series = std::make_shared<detail::BetaSeries<T>>();
  const double ell = params_.ell;
  // Enough terms for u = 1/2: coefficients grow like k^(ell-1), terms shrink like 2^-k.
  T ck(1);
  double l2 = 0.0;
  for (std::size_t k = 0;; ++k) {
    series->coeff.push_back(ck);
    series->log2_coeff.push_back(l2);
    if (l2 - static_cast<double>(k) < -(bits_ + 24) && k > 4) break;
    const double kd = static_cast<double>(k);
    ck = ck * (2 * ell_ + kd) / (ell_ + 1 + kd);
    l2 += std::log2((2 * ell + kd) / (ell + 1 + kd));
  }
  series_ = series;
  // I(1/2) = 1/2 fixes ell*B: (1/4)^ell S(1/2) / (ell B) = 1/2.
  using std::pow;
  using std::log;
  const T half = T(1) / 2;
  series->ell_beta = 2 * pow(T(4), -ell_) * series_sum(half);
  series->log_ell_beta = log(series->ell_beta);
  series->ell_beta_d = traits::to_double(series->ell_beta);
  Z_ = pow(L_, 2 * ell_ - 1) * series->ell_beta / ell_;
}

template <class T>
Lift<T> Lift<T>::with_offset(const T& c) const {
  Lift out(*this);
  typename scalar_traits<T>::Scope scope(bits_);
  out.c_ = scalar_traits<T>::rebase(c);
  if constexpr (std::is_same_v<T, double>) {
    PrecisionScope ps(64);
    out.params_.c = scalar_traits<Real>::from_double(c);
  } else {
    out.params_.c = out.c_;
  }
  return out;
}

template <class T>
T Lift<T>::series_sum(const T& u) const {
  if (u == 0) return T(1);
  const double lu = log2_magnitude(u);
  const auto& l2c = series_->log2_coeff;
  const double cutoff = -(bits_ + 10);
  std::size_t K = 1;
  while (K < l2c.size() && l2c[K] + static_cast<double>(K) * lu > cutoff) ++K;
  const auto& c = series_->coeff;
  T s = c[K - 1];
  for (std::size_t k = K - 1; k-- > 0;) {
    s *= u;
    s += c[k];
  }
  return s;
}

template <class T>
T Lift<T>::profile_small(const T& u) const {
  using std::exp;
  using std::log;
  if (u <= 0) return T(0);
  return exp(ell_ * log(u * (1 - u)) - series_->log_ell_beta) * series_sum(u);
}

template <class T>
T Lift<T>::profile(const T& u) const {
  typename scalar_traits<T>::Scope scope(bits_);
  if (u <= 0) return T(0);
  if (u >= 1) return T(1);
  if (2 * u <= 1) return profile_small(u);
  return 1 - profile_small(T(1 - u));
}

template <class T>
T Lift<T>::profile_inverse_small(const T& y) const {
  using std::abs;
  using std::exp;
  using std::ldexp;
  using std::log;
  if (y <= 0) return T(0);
  const T ly = log(y);
  const T vmax = -log(T(2));
  const double ly_d = scalar_traits<T>::to_double(ly);
  T v;
  if (std::isfinite(ly_d) && ly_d > -700.0) {
    v = scalar_traits<T>::from_double(
        detail::beta_inverse_small_double(params_.ell, std::log(series_->ell_beta_d), ly_d));
  } else {
    v = (ly + series_->log_ell_beta) / ell_;
  }
  if (v > vmax) v = vmax;
  // Newton on phi(v) = log I(e^v) - log y; phi is close to linear in v.
  std::optional<T> lo;
  T hi = vmax;
  T tol = ldexp(T(1), -bits_ + 4);
  for (int iter = 0; iter < 200; ++iter) {
    const T u = exp(v);
    const T s = series_sum(u);
    const T phi = ell_ * log(u * (1 - u)) + log(s) - series_->log_ell_beta - ly;
    const T dphi = ell_ / ((1 - u) * s);
    if (phi > 0)
      hi = v;
    else
      lo = v;
    const T step = phi / dphi;
    T next = v - step;
    if (next > hi || (lo && next < *lo)) next = lo ? (*lo + hi) / 2 : hi - 2 * abs(step) - 1;
    const bool done = abs(step) <= tol || phi == 0;
    v = next;
    if (done) break;
  }
  return exp(v);
}

template <class T>
T Lift<T>::profile_inverse(const T& y) const {
  typename scalar_traits<T>::Scope scope(bits_);
  if (y <= 0) return T(0);
  if (y >= 1) return T(1);
  if (2 * y <= 1) return profile_inverse_small(y);
  return 1 - profile_inverse_small(T(1 - y));
}

template <class T>
T Lift<T>::weight(const T& s) const {
  typename scalar_traits<T>::Scope scope(bits_);
  using std::pow;
  const T left = s - b_;
  const T right = a_ + 1 - s;
  if (left < 0 || right < 0) return T(0);
  return pow(left, ell_ - 1) * pow(right, ell_ - 1);
}

template <class T>
T Lift<T>::operator()(const T& x) const {
  typename scalar_traits<T>::Scope scope(bits_);
  using std::floor;
  const T y = x - b_;
  const T k = floor(y);
  const T r = y - k;
  if (r >= L_) return k + c_ + 1;
  return k + c_ + profile(T(r / L_));
}

template <class T>
T Lift<T>::inverse(const T& z) const {
  typename scalar_traits<T>::Scope scope(bits_);
  const T y = frac(T(z - c_));
  if (y == 0)
    throw DiscontinuityError(scalar_traits<T>::to_string(a_, output_digits(bits_)),
                             scalar_traits<T>::to_string(b_, output_digits(bits_)));
  return b_ + L_ * profile_inverse(y);
}

// --- Free-function interface ------------------------------------------------

/// Builds the lift with a = -flat_length/2, b = flat_length/2.
template <class T>
Lift<T> build_map(double ell, double flat_length, const Real& c, int precision_bits) {
  return Lift<T>(make_params(ell, flat_length, c, precision_bits));
}

template <class T>
T eval(const Lift<T>& lift, const T& x) {
  return lift(x);
}

template <class T>
T eval_inverse_g(const Lift<T>& lift, const T& z) {
  return lift.inverse(z);
}

template <class T>
struct RotationEstimate {
  T estimate;
  T error_bound;
};

/// (F^n(b) - b)/n with the a-priori bound 1/n.
template <class T>
RotationEstimate<T> rotation_number(const Lift<T>& lift, std::uint64_t n_iter) {
  if (n_iter < 1) fail(ErrorKind::invalid_parameter, "rotation_number needs n_iter >= 1");
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  T x = lift.b();
  for (std::uint64_t i = 0; i < n_iter; ++i) x = lift(x);
  const T n = static_cast<T>(static_cast<double>(n_iter));
  return {T((x - lift.b()) / n), T(T(1) / n)};
}

enum class Comparison { below, above, undecided };

const char* to_string(Comparison c);

/// Sign of F^q(x) - x - p over a 2^10-point grid of [b, b+1) plus the flat
/// endpoints: all negative means rho < p/q, all positive means rho > p/q.
template <class T>
Comparison compare_with_rational(const Lift<T>& lift, std::uint64_t p, std::uint64_t q,
                                 std::size_t grid_points = 1024) {
  if (q < 1) fail(ErrorKind::invalid_parameter, "denominator must be positive");
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  std::vector<T> xs;
  xs.reserve(grid_points + 2);
  for (std::size_t k = 0; k < grid_points; ++k)
    xs.push_back(lift.b() + T(static_cast<double>(k)) / T(static_cast<double>(grid_points)));
  xs.push_back(lift.a());
  xs.push_back(lift.b());
  bool any_pos = false, any_nonpos = false, any_neg = false, any_nonneg = false;
  const T pp(static_cast<double>(p));
  for (const T& x0 : xs) {
    T x = x0;
    for (std::uint64_t i = 0; i < q; ++i) x = lift(x);
    const T d = x - x0 - pp;
    (d > 0 ? any_pos : any_nonpos) = true;
    (d < 0 ? any_neg : any_nonneg) = true;
  }
  if (!any_nonpos) return Comparison::above;
  if (!any_nonneg) return Comparison::below;
  return Comparison::undecided;
}

/// Where rho(f) sits relative to the target's convergent window, decided from
/// the critical orbit alone: F^{q_n}(c) <= c + p_n proves rho <= p_n/q_n and
/// F^{q_n}(c) >= c + p_n proves rho >= p_n/q_n.
struct OrbitVerdict {
  Comparison side = Comparison::undecided;  // undecided: rho inside the depth-n window
  std::size_t decided_at = 0;               // convergent index that decided, 0 if none
};

template <class T>
OrbitVerdict classify_by_orbit(const Lift<T>& lift, const cf::ConvergentTable& table, std::size_t depth) {
  if (depth + 1 > table.size()) fail(ErrorKind::invalid_parameter, "convergent table shallower than depth");
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  T x = lift.c();
  std::uint64_t done = 0;
  for (std::size_t n = 1; n <= depth; ++n) {
    const std::uint64_t qn = table.q64(n);
    for (; done < qn; ++done) x = lift(x);
    const T d = x - lift.c() - T(static_cast<double>(table.p64(n)));
    // Even convergents lie below the target, odd ones above.
    if (n % 2 == 0 && d <= 0) return {Comparison::below, n};
    if (n % 2 == 1 && d >= 0) return {Comparison::above, n};
  }
  return {};
}

struct TuneOptions {
  double tol = 1e-8;
  std::size_t min_depth = 0;  // also resolve at least this many convergents
  int precision_bits = 256;
  int max_precision_bits = 4096;  // precision doubles up to this when the bracket outgrows it
  int margin_bits = 64;           // working precision above -log2(bracket width)
};

struct TuneResult {
  FlatMapParams params;
  std::size_t depth = 0;    // convergents pinned
  std::size_t steps = 0;    // bisection steps
  double log2_width = 0.0;  // final bracket width
  int max_bits_used = 0;
};

/// Bisection in c on [0, 1] until the critical orbit places rho(f_c) inside the
/// window of every convergent up to the smallest depth n with
/// 1/(q_n q_{n+1}) <= tol (or min_depth). Precision doubles whenever the
/// bracket comes within 16 bits of it; the returned params carry the final
/// precision. Throws invalid_target for a terminating target and plateau_stall
/// when the bracket outgrows max_precision_bits.
TuneResult tune(double ell, double flat_length, const cf::RotationTarget& target, const TuneOptions& opts);

/// Smallest depth n with q_n q_{n+1} >= 1/tol.
std::size_t depth_for_tolerance(const cf::ConvergentTable& table, double tol);

// --- Preimage geometry -------------------------------------------------------

template <class T>
struct PreimageInterval {
  std::uint64_t i;  // the interval -i
  T left;           // lift coordinates with left <= right
  T right;
};

template <class T>
struct GapRow {
  std::size_t n;
  std::uint64_t qn;
  T gap;         // |(-q_n, c)|
  T bracket;     // |[-q_n, c)| = |-q_n| + gap
  T alpha;       // gap / bracket
  double theta;  // log bracket - log gap
};

template <class T>
struct ForwardRow {
  std::size_t n;
  std::uint64_t qn;
  T distance;  // d(F^{q_n}(c), c)
};

template <class T>
struct PreimageGeometry {
  std::vector<PreimageInterval<T>> intervals;
  std::vector<GapRow<T>> gaps;
  std::vector<ForwardRow<T>> forward;
  int precision_bits = 0;
  double log2_min_tracked = 0.0;  // smallest length, gap or distance seen
};

/// log2 of the guard below which tracked lengths are meaningless.
inline double geometry_guard_log2(int bits) { return -bits + 32.0; }

/// Intervals -1 = [a, b], -(i+1) = g(-i) for i up to q_{n_max}; gaps and alpha at
/// every n <= n_max; forward critical-orbit distances at every n <= n_max.
/// Throws precision_exhausted when a tracked length drops below the guard.
template <class T>
PreimageGeometry<T> preimage_geometry(const Lift<T>& lift, const cf::ConvergentTable& table, std::size_t n_max) {
  if (n_max + 1 > table.size()) fail(ErrorKind::invalid_parameter, "convergent table shallower than n_max");
  using std::log;
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  const double guard = geometry_guard_log2(lift.precision_bits());
  PreimageGeometry<T> out;
  out.precision_bits = lift.precision_bits();
  out.log2_min_tracked = std::numeric_limits<double>::infinity();
  auto track = [&](const T& v, const char* what, std::uint64_t i) {
    const double l2 = log2_magnitude(v);
    out.log2_min_tracked = std::min(out.log2_min_tracked, l2);
    if (!(v > 0) || l2 < guard)
      fail(ErrorKind::precision_exhausted, std::string(what) + " at index " + std::to_string(i) +
                                               " below the precision guard at " +
                                               std::to_string(lift.precision_bits()) + " bits");
  };

  const std::uint64_t count = table.q64(n_max);
  out.intervals.reserve(count);
  T left = lift.a();
  T right = lift.b();
  for (std::uint64_t i = 1; i <= count; ++i) {
    if (i > 1) {
      T nl = lift.inverse(left);
      T nr = lift.inverse(right);
      // g maps into (b, a+1); an interval straddling that seam is unwrapped.
      if (nr < nl) nr += 1;
      left = std::move(nl);
      right = std::move(nr);
    }
    track(T(right - left), "interval length", i);
    out.intervals.push_back({i, left, right});
  }

  for (std::size_t n = 0; n <= n_max; ++n) {
    const std::uint64_t qn = table.q64(n);
    const auto& iv = out.intervals[qn - 1];
    const T len = iv.right - iv.left;
    // Forward arc from the right end to c and from c to the left end.
    const T after = frac(T(lift.c() - iv.right));
    const T before = frac(T(iv.left - lift.c()));
    if (after + len >= 1) fail(ErrorKind::invariant_violation, "preimage interval contains the critical value");
    const T gap = after < before ? after : before;
    track(gap, "gap", qn);
    const T bracket = len + gap;
    const double theta = scalar_traits<T>::to_double(T(log(bracket) - log(gap)));
    out.gaps.push_back({n, qn, gap, bracket, T(gap / bracket), theta});
  }

  T x = lift.c();
  std::uint64_t done = 0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    const std::uint64_t qn = table.q64(n);
    for (; done < qn; ++done) x = lift(x);
    const T d = circle_distance(x, lift.c());
    track(d, "forward distance", qn);
    out.forward.push_back({n, qn, d});
  }
  return out;
}

/// True when no two intervals overlap and none contains the critical value.
template <class T>
bool intervals_disjoint(const PreimageGeometry<T>& geometry, const T& c) {
  struct Arc {
    T start;
    T len;
  };
  std::vector<Arc> arcs;
  arcs.reserve(geometry.intervals.size() + 1);
  for (const auto& iv : geometry.intervals) arcs.push_back({frac(iv.left), T(iv.right - iv.left)});
  std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.start < y.start; });
  const T cc = frac(c);
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    const Arc& cur = arcs[k];
    const Arc& next = arcs[(k + 1) % arcs.size()];
    const T end = cur.start + cur.len;
    const T next_start = k + 1 < arcs.size() ? next.start : T(next.start + 1);
    if (arcs.size() > 1 && end > next_start) return false;
    if (frac(T(cc - cur.start)) <= cur.len) return false;
  }
  return true;
}

// --- Orbit order --------------------------------------------------------------

struct OrbitCombinatorics {
  std::size_t N = 0;
  std::vector<std::size_t> map_order;       // indices i sorted by position of f^i(c)
  std::vector<std::size_t> rotation_order;  // indices i sorted by position of R^i(0)
  double log2_min_separation = 0.0;         // smallest gap between sorted map points

  bool orders_equal() const { return map_order == rotation_order; }
};

/// Circular orders of {f^i(c)} and {R_rho^i(0)}, 0 <= i <= N, both read from
/// the base point (c and 0 respectively).
template <class T>
OrbitCombinatorics orbit_combinatorics(const Lift<T>& lift, const cf::RotationTarget& target, std::size_t N) {
  typename scalar_traits<T>::Scope scope(lift.precision_bits());
  std::vector<T> pos;
  pos.reserve(N + 1);
  T x = lift.c();
  for (std::size_t i = 0; i <= N; ++i) {
    if (i > 0) x = lift(x);
    pos.push_back(frac(T(x - lift.c())));
  }
  OrbitCombinatorics out;
  out.N = N;
  out.map_order.resize(N + 1);
  std::iota(out.map_order.begin(), out.map_order.end(), std::size_t{0});
  std::stable_sort(out.map_order.begin(), out.map_order.end(),
                   [&](std::size_t i, std::size_t j) { return pos[i] < pos[j]; });
  out.log2_min_separation = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= N; ++k)
    out.log2_min_separation =
        std::min(out.log2_min_separation, log2_magnitude(T(pos[out.map_order[k]] - pos[out.map_order[k - 1]])));

  const cf::RotationOrbit orbit(target.value);
  std::vector<CircleFixed> rpos(N + 1);
  for (std::size_t i = 0; i <= N; ++i) rpos[i] = orbit.at(static_cast<std::int64_t>(i));
  out.rotation_order.resize(N + 1);
  std::iota(out.rotation_order.begin(), out.rotation_order.end(), std::size_t{0});
  std::stable_sort(out.rotation_order.begin(), out.rotation_order.end(),
                   [&](std::size_t i, std::size_t j) { return rpos[i] < rpos[j]; });
  return out;
}

}  // namespace cherry::flatmap
