#include "cherry/real.hpp"

#include "cherry/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace cherry {

namespace {

unsigned digits10_for_bits(int bits) {
  return static_cast<unsigned>(std::ceil(bits * 0.30102999566398119521)) + 1;
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid_parameter";
    case ErrorKind::invalid_target: return "invalid_target";
    case ErrorKind::precision_insufficient: return "precision_insufficient";
    case ErrorKind::precision_exhausted: return "precision_exhausted";
    case ErrorKind::discontinuity: return "discontinuity";
    case ErrorKind::plateau_stall: return "plateau_stall";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::index_misalignment: return "index_misalignment";
    case ErrorKind::missing_geometry: return "missing_geometry";
    case ErrorKind::domain: return "domain";
    case ErrorKind::discontinuity_hit: return "discontinuity_hit";
    case ErrorKind::config: return "config";
    case ErrorKind::invariant_violation: return "invariant_violation";
  }
  return "unknown";
}

int current_precision_bits() {
  Real probe;
  return static_cast<int>(mpfr_get_prec(probe.backend().data()));
}

PrecisionScope::PrecisionScope(int bits) : saved_digits10_(Real::default_precision()) {
  if (bits < 16) fail(ErrorKind::invalid_parameter, "precision below 16 bits");
  Real::default_precision(digits10_for_bits(bits));
}

PrecisionScope::~PrecisionScope() { Real::default_precision(saved_digits10_); }

std::string scalar_traits<double>::to_string(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", std::clamp(digits, 1, 17) - 1, v);
  return buf;
}

Real scalar_traits<Real>::from_string(const std::string& s) {
  Real r;
  if (mpfr_set_str(r.backend().data(), s.c_str(), 10, MPFR_RNDN) != 0)
    fail(ErrorKind::invalid_parameter, "not a decimal number: '" + s + "'");
  return r;
}

Real scalar_traits<Real>::from_double(double v) {
  Real r;
  mpfr_set_d(r.backend().data(), v, MPFR_RNDN);
  return r;
}

std::string scalar_traits<Real>::to_string(const Real& v, int digits) {
  // mpfr formatting never consults the C locale for the exponent and uses the
  // "C" decimal point in the default locale, which the CLI never changes.
  digits = std::max(digits, 1);
  char* out = nullptr;
  if (mpfr_asprintf(&out, "%.*Re", digits - 1, v.backend().data()) < 0)
    fail(ErrorKind::invariant_violation, "mpfr formatting failed");
  std::string s(out);
  mpfr_free_str(out);
  return s;
}

Real scalar_traits<Real>::rebase(const Real& v) {
  Real r;
  mpfr_set(r.backend().data(), v.backend().data(), MPFR_RNDN);
  return r;
}

int output_digits(int bits) {
  return std::min(40, static_cast<int>(std::ceil(bits * 0.30102999566398119521)));
}

double log_of(const BigInt& v) {
  if (v <= 0) fail(ErrorKind::domain, "log of non-positive integer");
  const auto bits = boost::multiprecision::msb(v);
  if (bits < 1000) return std::log(v.convert_to<double>());
  const unsigned shift = static_cast<unsigned>(bits - 60);
  BigInt top = v >> shift;
  return std::log(top.convert_to<double>()) + shift * std::log(2.0);
}

double log2_magnitude(const Real& x) {
  if (mpfr_zero_p(x.backend().data())) return -std::numeric_limits<double>::infinity();
  long exp = 0;
  const double mant = mpfr_get_d_2exp(&exp, x.backend().data(), MPFR_RNDN);
  return std::log2(std::abs(mant)) + static_cast<double>(exp);
}

CircleFixed to_circle_fixed(const Real& x) {
  Real f;
  mpfr_set_prec(f.backend().data(), std::max<mpfr_prec_t>(mpfr_get_prec(x.backend().data()), 256));
  mpfr_frac(f.backend().data(), x.backend().data(), MPFR_RNDN);
  if (mpfr_sgn(f.backend().data()) < 0) mpfr_add_ui(f.backend().data(), f.backend().data(), 1, MPFR_RNDN);
  mpfr_mul_2ui(f.backend().data(), f.backend().data(), 128, MPFR_RNDN);
  mpz_t z;
  mpz_init(z);
  mpfr_get_z(z, f.backend().data(), MPFR_RNDD);
  // Reduce mod 2^128 and split into two 64-bit words.
  mpz_fdiv_r_2exp(z, z, 128);
  mpz_t hi;
  mpz_init(hi);
  mpz_fdiv_q_2exp(hi, z, 64);
  mpz_fdiv_r_2exp(z, z, 64);
  CircleFixed out = (static_cast<CircleFixed>(mpz_get_ui(hi)) << 64) | mpz_get_ui(z);
  mpz_clear(hi);
  mpz_clear(z);
  return out;
}

double circle_fixed_to_double(CircleFixed x) {
  return std::ldexp(static_cast<double>(static_cast<std::uint64_t>(x >> 64)), -64) +
         std::ldexp(static_cast<double>(static_cast<std::uint64_t>(x)), -128);
}

}  // namespace cherry
