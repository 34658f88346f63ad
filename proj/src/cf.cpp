#include "cherry/cf.hpp"

#include "cherry/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cherry::cf {

namespace {

struct RawExpansion {
  std::vector<Quotient> quotients;
  bool terminated = false;
};

// Floating continued-fraction algorithm at the current default precision.
RawExpansion expand_at_precision(const Real& x, std::size_t depth, int bits) {
  PrecisionScope scope(bits);
  RawExpansion out;
  Real y = scalar_traits<Real>::rebase(x);
  // The remainder after step i carries an error of roughly q_i^2 ulps.
  long double q_prev = 0.0L;
  long double q = 1.0L;
  const Real quotient_cap = ldexp(Real(1), 62);
  while (out.quotients.size() < depth) {
    if (y == 0) {
      out.terminated = true;
      break;
    }
    Real r = 1 / y;
    if (r >= quotient_cap) break;  // remainder is noise at this precision
    Real a = floor(r);
    Real rem = r - a;
    auto qa = a.convert_to<Quotient>();
    const long double q_next = static_cast<long double>(qa) * q + q_prev;
    const Real guard = ldexp(Real(1), static_cast<int>(-bits + 16 + 2 * std::log2(q_next)));
    if (1 - rem <= guard) {
      qa += 1;
      rem = 0;
    }
    if (qa == 0) break;
    out.quotients.push_back(qa);
    q_prev = q;
    q = q_next;
    if (rem <= guard) {
      out.terminated = true;
      break;
    }
    y = rem;
  }
  return out;
}

}  // namespace

const char* to_string(Source s) {
  switch (s) {
    case Source::exact_rational: return "exact_rational";
    case Source::real_approximation: return "real_approximation";
    case Source::prescribed: return "prescribed";
  }
  return "unknown";
}

ContinuedFraction prescribed(std::vector<Quotient> quotients) {
  for (auto a : quotients)
    if (a < 1) fail(ErrorKind::invalid_parameter, "partial quotients must be >= 1");
  return {std::move(quotients), Source::prescribed};
}

Rational evaluate(const ContinuedFraction& cf) {
  if (cf.quotients.empty()) return Rational(0);
  Rational acc(0);
  for (auto it = cf.quotients.rbegin(); it != cf.quotients.rend(); ++it)
    acc = Rational(1) / (Rational(BigInt(*it)) + acc);
  return acc;
}

ContinuedFraction expand(const Rational& x, std::size_t depth) {
  if (x <= 0 || x >= 1) fail(ErrorKind::invalid_parameter, "expand expects a value in (0, 1)");
  BigInt num = numerator(x);
  BigInt den = denominator(x);
  ContinuedFraction out{{}, Source::exact_rational};
  // x = num/den < 1: each step inverts and takes the integer part.
  while (num != 0 && out.quotients.size() < depth) {
    BigInt a = den / num;
    BigInt r = den % num;
    out.quotients.push_back(a.convert_to<Quotient>());
    den = num;
    num = r;
  }
  return out;
}

ContinuedFraction expand(const Real& x, std::size_t depth) {
  if (x <= 0 || x >= 1) fail(ErrorKind::invalid_parameter, "expand expects a value in (0, 1)");
  const int bits = static_cast<int>(mpfr_get_prec(x.backend().data()));
  const RawExpansion lo = expand_at_precision(x, depth, bits);
  const RawExpansion hi = expand_at_precision(x, depth, 2 * bits);
  std::size_t common = 0;
  while (common < lo.quotients.size() && common < hi.quotients.size() &&
         lo.quotients[common] == hi.quotients[common])
    ++common;
  const bool terminated = lo.terminated && hi.terminated && common == lo.quotients.size() &&
                          common == hi.quotients.size();
  if (!terminated && common < depth)
    fail(ErrorKind::precision_insufficient,
         "only " + std::to_string(common) + " stable quotients at " + std::to_string(bits) + " bits");
  ContinuedFraction out{{lo.quotients.begin(), lo.quotients.begin() + static_cast<std::ptrdiff_t>(common)},
                        terminated ? Source::exact_rational : Source::real_approximation};
  if (out.quotients.size() > depth) out.quotients.resize(depth);
  return out;
}

std::uint64_t ConvergentTable::q64(std::size_t n) const {
  const BigInt& v = q(n);
  if (v > std::numeric_limits<std::uint64_t>::max()) fail(ErrorKind::domain, "q_n exceeds 64 bits");
  return v.convert_to<std::uint64_t>();
}

std::uint64_t ConvergentTable::p64(std::size_t n) const {
  const BigInt& v = p(n);
  if (v > std::numeric_limits<std::uint64_t>::max()) fail(ErrorKind::domain, "p_n exceeds 64 bits");
  return v.convert_to<std::uint64_t>();
}

ConvergentTable convergents(const ContinuedFraction& cf) {
  if (cf.quotients.empty()) fail(ErrorKind::invalid_parameter, "empty continued fraction");
  std::vector<ConvergentRow> rows;
  rows.reserve(cf.depth() + 1);
  BigInt p_prev = 1, q_prev = 0;  // n = -1
  BigInt p = 0, q = 1;            // n = 0
  rows.push_back({0, p, q});
  for (std::size_t n = 1; n <= cf.depth(); ++n) {
    const BigInt a(cf.a(n));
    BigInt p_next = a * p + p_prev;
    BigInt q_next = a * q + q_prev;
    p_prev = std::move(p);
    q_prev = std::move(q);
    p = std::move(p_next);
    q = std::move(q_next);
    rows.push_back({n, p, q});
  }
  return ConvergentTable(std::move(rows));
}

std::size_t last_index_with_q_at_most(const ConvergentTable& table, const BigInt& limit) {
  std::size_t best = 0;
  for (const auto& row : table.rows())
    if (row.q <= limit) best = row.n;
  return best;
}

RotationTarget golden_mean(int bits, std::size_t depth) {
  PrecisionScope scope(bits);
  Real v = (sqrt(Real(5)) - 1) / 2;
  return {v, prescribed(std::vector<Quotient>(depth, 1)), Quotient{2}};
}

RotationTarget sqrt2_minus_1(int bits, std::size_t depth) {
  PrecisionScope scope(bits);
  Real v = sqrt(Real(2)) - 1;
  return {v, prescribed(std::vector<Quotient>(depth, 2)), Quotient{3}};
}

RotationTarget from_quotients(const std::vector<Quotient>& head, int bits, std::size_t tail_depth) {
  if (head.empty()) fail(ErrorKind::invalid_parameter, "no quotients given");
  PrecisionScope scope(bits);
  Real acc = (sqrt(Real(5)) - 1) / 2;  // [0; 1, 1, 1, ...]
  for (auto it = head.rbegin(); it != head.rend(); ++it) {
    if (*it < 1) fail(ErrorKind::invalid_parameter, "partial quotients must be >= 1");
    acc = 1 / (Real(*it) + acc);
  }
  std::vector<Quotient> all = head;
  all.insert(all.end(), tail_depth, 1);
  Quotient bound = *std::max_element(all.begin(), all.end()) + 1;
  return {acc, prescribed(std::move(all)), bound};
}

RotationTarget from_value(const Real& value, std::size_t depth) {
  RotationTarget t{value, expand(value, depth), std::nullopt};
  return t;
}

void validate(const RotationTarget& target) {
  if (target.value <= 0 || target.value >= 1) fail(ErrorKind::invalid_target, "rotation target outside (0, 1)");
  if (target.cf.quotients.empty()) fail(ErrorKind::invalid_target, "rotation target has no quotients");
  if (target.bounded_bound) {
    for (auto a : target.cf.quotients)
      if (a >= *target.bounded_bound) fail(ErrorKind::invalid_target, "quotient violates bounded-type bound");
  }
  const int bits = static_cast<int>(mpfr_get_prec(target.value.backend().data()));
  PrecisionScope scope(bits + 64);
  const auto table = convergents(target.cf);
  const double resolvable = bits - 8;
  for (std::size_t n = 1; n + 1 < table.size(); ++n) {
    if ((log_of(table.q(n)) + log_of(table.q(n + 1))) / std::log(2.0) > resolvable) break;
    Real lo = Real(table.p(n)) / Real(table.q(n));
    Real hi = Real(table.p(n + 1)) / Real(table.q(n + 1));
    if (lo > hi) std::swap(lo, hi);
    if (!(lo < target.value && target.value < hi))
      fail(ErrorKind::invalid_target, "value does not lie between convergents " + std::to_string(n) + " and " +
                                          std::to_string(n + 1));
  }
}

FixedArc FixedArc::between(CircleFixed x, CircleFixed y) {
  const CircleFixed forward = y - x;
  if (forward <= (CircleFixed(1) << 127)) return {x, forward};
  return {y, x - y};
}

CircleFixed FixedArc::endpoint_distance(CircleFixed p) const {
  const CircleFixed a = circle_distance_fixed(p, start);
  const CircleFixed b = circle_distance_fixed(p, start + length);
  return std::min(a, b);
}

std::vector<std::uint64_t> closest_returns(const RotationTarget& rho, std::uint64_t N) {
  if (N < 1) fail(ErrorKind::invalid_parameter, "closest_returns needs N >= 1");
  const RotationOrbit orbit(rho.value);
  std::vector<std::uint64_t> out;
  CircleFixed best = ~CircleFixed(0);
  for (std::uint64_t q = 1; q <= N; ++q) {
    const CircleFixed d = circle_distance_fixed(orbit.at(static_cast<std::int64_t>(q)), 0);
    const CircleFixed guard = 2 * RotationOrbit::error_bound(q);
    if (d < best) {
      if (best - d <= guard)
        fail(ErrorKind::precision_insufficient, "closest-return candidates within the precision guard");
      best = d;
      out.push_back(q);
    } else if (d - best <= guard) {
      fail(ErrorKind::precision_insufficient, "closest-return candidates within the precision guard");
    }
  }
  return out;
}

GapCount count_in_gap(const RotationTarget& rho, std::size_t l, std::uint64_t N) {
  const auto table = convergents(rho.cf);
  if (l + 1 >= table.size()) fail(ErrorKind::invalid_parameter, "continued fraction too shallow for l");
  const std::uint64_t ql = table.q64(l);
  if (ql > N) fail(ErrorKind::invalid_parameter, "count_in_gap requires q_l <= N");
  const RotationOrbit orbit(rho.value);
  const FixedArc gap = FixedArc::between(orbit.at(static_cast<std::int64_t>(ql)), 0);
  const CircleFixed guard = RotationOrbit::error_bound(N) + RotationOrbit::error_bound(ql);
  GapCount out;
  for (std::uint64_t i = 1; i <= N; ++i) {
    const CircleFixed point = orbit.at(-static_cast<std::int64_t>(i));
    if (gap.endpoint_distance(point) <= guard)
      fail(ErrorKind::precision_insufficient, "orbit point within the precision guard of a gap endpoint");
    if (gap.contains(point)) ++out.count;
  }
  out.bound_ok = BigInt(table.q(l + 1)) * out.count <= N;
  return out;
}

}  // namespace cherry::cf
