#pragma once

// Continued fractions, convergents and the rotation combinatorics built on them.
//
// Convergent arithmetic is exact (arbitrary-size integers). Rotation-orbit
// questions (closest returns, points in a gap) run on a 128-bit fixed-point
// circle where multiplication by an integer is exact modular arithmetic; the
// only error is the initial rounding of rho, which the precision guard tracks.

#include "cherry/real.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace cherry::cf {

using Quotient = std::uint64_t;

enum class Source { exact_rational, real_approximation, prescribed };

const char* to_string(Source s);

struct ContinuedFraction {
  std::vector<Quotient> quotients;  // a_1 .. a_d, all >= 1
  Source source = Source::prescribed;

  std::size_t depth() const { return quotients.size(); }
  /// a_i with the 1-based indexing used throughout the bounds code.
  Quotient a(std::size_t i) const { return quotients.at(i - 1); }
};

/// Validates a_i >= 1 and wraps the quotients as a prescribed expansion.
ContinuedFraction prescribed(std::vector<Quotient> quotients);

/// Exact value [0; a_1, ..., a_d].
Rational evaluate(const ContinuedFraction& cf);

/// Euclid's algorithm on an exact rational in (0, 1); stops when the expansion
/// terminates or after `depth` quotients.
ContinuedFraction expand(const Rational& x, std::size_t depth);

/// Expansion of a real in (0, 1). Quotients are computed at the precision of x
/// and again at twice that precision; only the common prefix is accepted. A
/// remainder indistinguishable from zero ends the expansion (rational input).
/// Throws precision_insufficient if fewer than `depth` stable quotients exist
/// and the expansion did not terminate.
ContinuedFraction expand(const Real& x, std::size_t depth);

struct ConvergentRow {
  std::size_t n;
  BigInt p;
  BigInt q;
};

/// Rows n = 0..d with p_0/q_0 = 0/1, q_1 = a_1, q_{n+1} = a_{n+1} q_n + q_{n-1}.
class ConvergentTable {
 public:
  ConvergentTable() = default;
  explicit ConvergentTable(std::vector<ConvergentRow> rows) : rows_(std::move(rows)) {}

  const std::vector<ConvergentRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  const BigInt& p(std::size_t n) const { return rows_.at(n).p; }
  const BigInt& q(std::size_t n) const { return rows_.at(n).q; }
  /// q_n narrowed to 64 bits; throws if it does not fit.
  std::uint64_t q64(std::size_t n) const;
  std::uint64_t p64(std::size_t n) const;

 private:
  std::vector<ConvergentRow> rows_;
};

ConvergentTable convergents(const ContinuedFraction& cf);

/// Largest n with q_n <= limit (0 if only q_0 qualifies).
std::size_t last_index_with_q_at_most(const ConvergentTable& table, const BigInt& limit);

struct RotationTarget {
  Real value;  // in (0, 1), at the precision it was built with
  ContinuedFraction cf;
  std::optional<Quotient> bounded_bound;
};

/// (sqrt 5 - 1)/2 with `depth` all-ones quotients, value at `bits`.
RotationTarget golden_mean(int bits, std::size_t depth = 96);
/// sqrt 2 - 1 with all quotients 2.
RotationTarget sqrt2_minus_1(int bits, std::size_t depth = 96);
/// The irrational [0; a_1, ..., a_d, 1, 1, 1, ...]: prescribed head followed by a
/// golden-mean tail so the target is irrational; cf holds head plus `tail_depth` ones.
RotationTarget from_quotients(const std::vector<Quotient>& head, int bits, std::size_t tail_depth = 48);
/// Expands a real value (guarded) to `depth` quotients.
RotationTarget from_value(const Real& value, std::size_t depth);

/// Checks the target invariants (a_i < M if bounded; value strictly between
/// consecutive convergents as far as the value's precision resolves them).
void validate(const RotationTarget& target);

/// All q <= N for which ||q rho|| is a strict new minimum over 1..q.
std::vector<std::uint64_t> closest_returns(const RotationTarget& rho, std::uint64_t N);

struct GapCount {
  std::uint64_t count = 0;  // N_l
  bool bound_ok = true;     // q_{l+1} N_l <= N
};

/// Counts the backward rotation-orbit points R^{-i}(0), 1 <= i <= N, in the open
/// shortest arc between R^{q_l}(0) and 0. Requires q_l <= N.
GapCount count_in_gap(const RotationTarget& rho, std::size_t l, std::uint64_t N);

/// Rotation orbit on the fixed-point circle.
class RotationOrbit {
 public:
  explicit RotationOrbit(const Real& rho) : step_(to_circle_fixed(rho)) {}
  /// R^i(0) for signed i.
  CircleFixed at(std::int64_t i) const {
    return i >= 0 ? step_ * static_cast<CircleFixed>(i)
                  : CircleFixed(0) - step_ * static_cast<CircleFixed>(-i);
  }
  CircleFixed step() const { return step_; }
  /// Absolute error bound of at(i), in fixed-point units.
  static CircleFixed error_bound(std::uint64_t i) { return static_cast<CircleFixed>(i + 1) * 2; }

 private:
  CircleFixed step_;
};

/// Open shortest arc between two fixed-point circle points.
struct FixedArc {
  CircleFixed start;   // arc is (start, start + length)
  CircleFixed length;

  static FixedArc between(CircleFixed x, CircleFixed y);
  bool contains(CircleFixed p) const { return p - start > 0 && p - start < length; }
  /// Distance from p to the nearer endpoint (zero on an endpoint).
  CircleFixed endpoint_distance(CircleFixed p) const;
};

}  // namespace cherry::cf
