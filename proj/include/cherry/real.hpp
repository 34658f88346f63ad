#pragma once

// Scalar types and precision control shared by every numeric module.
//
// All map-level algorithms are templated on the scalar type T. Two scalars are
// supported: `double` (fast, used for quick probes and tests) and `Real`, an
// MPFR-backed float whose precision is chosen at runtime. Real values created
// inside a PrecisionScope get that scope's precision.

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <cstdint>
#include <string>

namespace cherry {

using Real = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                           boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Number of mantissa bits Real values get when created right now.
int current_precision_bits();

/// RAII guard setting the default Real precision. Nested scopes restore the
/// outer precision on exit.
class PrecisionScope {
 public:
  explicit PrecisionScope(int bits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned saved_digits10_;
};

template <class T>
struct scalar_traits;

template <>
struct scalar_traits<double> {
  struct Scope {
    explicit Scope(int) {}
  };
  static int bits(int /*requested*/) { return 53; }
  static double from_string(const std::string& s) { return std::stod(s); }
  static double from_double(double v) { return v; }
  static double to_double(double v) { return v; }
  static std::string to_string(double v, int digits);
  /// Copy of v carrying the current working precision (identity for double).
  static double rebase(double v) { return v; }
};

template <>
struct scalar_traits<Real> {
  using Scope = PrecisionScope;
  static int bits(int requested) { return requested; }
  static Real from_string(const std::string& s);
  static Real from_double(double v);
  static double to_double(const Real& v) { return v.convert_to<double>(); }
  static std::string to_string(const Real& v, int digits);
  static Real rebase(const Real& v);
};

/// Significant decimal digits printed for a value carrying `bits` of precision,
/// capped at 40 so text output stays diff-friendly.
int output_digits(int bits);

/// Scientific notation, '.' decimal point, `digits` significant digits,
/// independent of the global locale.
template <class T>
std::string format_sci(const T& v, int digits) {
  return scalar_traits<T>::to_string(v, digits);
}

/// Natural log of a positive big integer; exact conversion would overflow double
/// for the long convergent tables the bounds checks use.
double log_of(const BigInt& v);

/// log2|x| as a double, valid far outside the double exponent range; -inf at 0.
inline double log2_magnitude(double x) { return std::log2(std::abs(x)); }
double log2_magnitude(const Real& x);

/// x mod 1 in [0, 1).
template <class T>
T frac(const T& x) {
  using std::floor;
  return x - floor(x);
}

/// Length of the shortest arc between two circle points.
template <class T>
T circle_distance(const T& x, const T& y) {
  using std::abs;
  T d = frac(T(x - y));
  T e = T(1) - d;
  return d < e ? d : e;
}

/// Two's-complement fixed-point circle coordinate: the circle R/Z is mapped to
/// the 2^128 integers, so rotation by integer multiples is exact modular
/// arithmetic. Used for the rotation side of all combinatorial checks.
using CircleFixed = unsigned __int128;

/// floor(x mod 1 * 2^128); x must carry at least 128 bits to be meaningful.
CircleFixed to_circle_fixed(const Real& x);

/// Shortest-arc distance between two fixed-point circle points, in units of 2^-128.
inline CircleFixed circle_distance_fixed(CircleFixed x, CircleFixed y) {
  CircleFixed d = x - y;
  CircleFixed e = y - x;
  return d < e ? d : e;
}

/// Fixed-point value as a double fraction of the circle.
double circle_fixed_to_double(CircleFixed x);

}  // namespace cherry
