#include "cherry/flatmap.hpp"

#include <cmath>
#include <map>

namespace cherry::flatmap {

FlatMapParams make_params(double ell, double flat_length, const Real& c, int bits) {
  if (!(flat_length > 0 && flat_length < 1))
    fail(ErrorKind::invalid_parameter, "flat_length must lie in (0, 1)");
  if (!(ell > 0)) fail(ErrorKind::invalid_parameter, "ell must be positive");
  PrecisionScope scope(bits);
  FlatMapParams p;
  p.ell = ell;
  p.lambda1 = ell;
  p.lambda2 = -1.0;
  p.b = scalar_traits<Real>::from_double(flat_length) / 2;
  p.a = -p.b;
  p.c = scalar_traits<Real>::rebase(c);
  p.precision_bits = bits;
  return p;
}

void validate(const FlatMapParams& p) {
  if (!(p.ell > 0) || !std::isfinite(p.ell)) fail(ErrorKind::invalid_parameter, "ell must be positive");
  if (!(p.lambda1 > 0)) fail(ErrorKind::invalid_parameter, "lambda1 must be positive");
  if (!(p.lambda2 < 0)) fail(ErrorKind::invalid_parameter, "lambda2 must be negative");
  if (std::abs(p.lambda1 / -p.lambda2 - p.ell) > 1e-12 * p.ell)
    fail(ErrorKind::invalid_parameter, "ell must equal lambda1/(-lambda2)");
  if (p.precision_bits < 64) fail(ErrorKind::invalid_parameter, "precision_bits must be at least 64");
  if (!(p.a < p.b)) fail(ErrorKind::invalid_parameter, "flat interval must satisfy a < b");
  if (p.a < Real(-0.5) || p.b > Real(0.5)) fail(ErrorKind::invalid_parameter, "flat interval must lie in [-1/2, 1/2]");
  if (!(p.b - p.a < 1)) fail(ErrorKind::invalid_parameter, "flat interval must be a proper arc");
}

const char* to_string(Comparison c) {
  switch (c) {
    case Comparison::below: return "below";
    case Comparison::above: return "above";
    case Comparison::undecided: return "undecided";
  }
  return "unknown";
}

namespace detail {

namespace {

double series_double(double ell, double u) {
  double term = 1.0, sum = 1.0;
  for (int k = 0; k < 4000; ++k) {
    term *= (2 * ell + k) / (ell + 1 + k) * u;
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

}  // namespace

double beta_inverse_small_double(double ell, double log_ell_beta, double log_y) {
  const double vmax = -std::log(2.0);
  double v = std::min((log_y + log_ell_beta) / ell, vmax);
  double lo = -std::numeric_limits<double>::infinity(), hi = vmax;
  for (int iter = 0; iter < 100; ++iter) {
    const double u = std::exp(v);
    const double s = series_double(ell, u);
    const double phi = ell * std::log(u * (1 - u)) + std::log(s) - log_ell_beta - log_y;
    const double dphi = ell / ((1 - u) * s);
    if (phi > 0)
      hi = v;
    else
      lo = v;
    double next = v - phi / dphi;
    if (next > hi || next < lo) next = std::isfinite(lo) ? (lo + hi) / 2 : hi - 1;
    if (std::abs(next - v) <= 1e-15 * std::max(1.0, std::abs(v))) return next;
    v = next;
  }
  return v;
}

}  // namespace detail

std::size_t depth_for_tolerance(const cf::ConvergentTable& table, double tol) {
  if (!(tol > 0)) fail(ErrorKind::invalid_parameter, "tol must be positive");
  const double need = -std::log(tol);
  for (std::size_t n = 1; n + 1 < table.size(); ++n)
    if (log_of(table.q(n)) + log_of(table.q(n + 1)) >= need) return n;
  return table.size();
}

TuneResult tune(double ell, double flat_length, const cf::RotationTarget& target, const TuneOptions& opts) {
  if (!(opts.tol > 0)) fail(ErrorKind::invalid_parameter, "tol must be positive");
  if (target.cf.source == cf::Source::exact_rational)
    fail(ErrorKind::invalid_target, "rotation target is rational");
  cf::validate(target);
  const auto table = cf::convergents(target.cf);
  std::size_t depth = std::max(depth_for_tolerance(table, opts.tol), opts.min_depth);
  if (depth + 1 > table.size())
    fail(ErrorKind::invalid_target, "continued fraction of the target is too shallow for the requested tolerance");
  int full_bits = opts.precision_bits;
  if (opts.max_precision_bits < full_bits) fail(ErrorKind::invalid_parameter, "max_precision_bits below precision_bits");

  std::map<int, Lift<Real>> lifts;
  auto lift_at = [&](int bits) -> const Lift<Real>& {
    auto it = lifts.find(bits);
    if (it == lifts.end()) {
      PrecisionScope scope(bits);
      it = lifts.emplace(bits, build_map<Real>(ell, flat_length, Real(0), bits)).first;
    }
    return it->second;
  };

  PrecisionScope scope(opts.max_precision_bits + 8);
  Real lo(0), hi(1);
  TuneResult out;
  out.depth = depth;
  for (;;) {
    const double lw = log2_magnitude(Real(hi - lo));
    while (-lw + 16 > full_bits) {
      if (2 * full_bits > opts.max_precision_bits)
        fail(ErrorKind::plateau_stall, "bisection bracket reached 2^" + std::to_string(static_cast<int>(lw)) +
                                           " without pinning the rotation number at " +
                                           std::to_string(full_bits) + " bits");
      full_bits *= 2;
    }
    int bits = static_cast<int>(std::ceil(-lw)) + opts.margin_bits;
    bits = std::min(full_bits, std::max(64, (bits + 31) / 32 * 32));
    const Real mid = (lo + hi) / 2;
    ++out.steps;
    out.max_bits_used = std::max(out.max_bits_used, bits);
    OrbitVerdict verdict = classify_by_orbit(lift_at(bits).with_offset(mid), table, depth);
    if (verdict.side == Comparison::undecided && bits < full_bits) {
      out.max_bits_used = full_bits;
      verdict = classify_by_orbit(lift_at(full_bits).with_offset(mid), table, depth);
    }
    if (verdict.side == Comparison::undecided) {
      out.params = lift_at(full_bits).with_offset(mid).params();
      out.log2_width = lw;
      return out;
    }
    (verdict.side == Comparison::below ? lo : hi) = mid;
  }
}

}  // namespace cherry::flatmap
