#include "cherry/flatmap.hpp"

#include "doctest.h"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

using namespace cherry;
using flatmap::Lift;

namespace {

// F(x) - c by direct quadrature of the weight over [b, x].
double quadrature_profile(double ell, double flat, double x) {
  const double b = flat / 2, a = -b;
  auto w = [&](double s) { return std::pow(s - b, ell - 1) * std::pow(a + 1 - s, ell - 1); };
  boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate(w, b, x) / q.integrate(w, b, a + 1);
}

Lift<Real> real_lift(double ell, double flat, int bits = 256, double c = 0.0) {
  PrecisionScope scope(bits);
  return flatmap::build_map<Real>(ell, flat, scalar_traits<Real>::from_double(c), bits);
}

}  // namespace

TEST_CASE("params validation") {
  CHECK_THROWS_AS(flatmap::make_params(1.5, 0.0, Real(0), 128), Error);
  CHECK_THROWS_AS(flatmap::make_params(1.5, 1.0, Real(0), 128), Error);
  CHECK_THROWS_AS(flatmap::make_params(-1.0, 0.2, Real(0), 128), Error);
  auto p = flatmap::make_params(1.5, 0.2, Real(0), 128);
  CHECK_NOTHROW(flatmap::validate(p));
  p.lambda2 = 1.0;
  CHECK_THROWS_AS(flatmap::validate(p), Error);
  CHECK(scalar_traits<Real>::to_double(flatmap::make_params(2.0, 0.2, Real(0), 128).flat_length()) == doctest::Approx(0.2));
}

TEST_CASE("ell = 2 profile is the cubic smoothstep") {
  const auto lift = real_lift(2.0, 0.2);
  PrecisionScope scope(256);
  for (double u : {0.01, 0.1, 0.3, 0.5, 0.7, 0.99}) {
    const Real uu = scalar_traits<Real>::from_double(u);
    const Real exact = 3 * uu * uu - 2 * uu * uu * uu;
    CHECK(abs(Real(lift.profile(uu) - exact)) < Real(1e-70));
  }
}

TEST_CASE("ell = 1 profile is linear") {
  const auto lift = real_lift(1.0, 0.3);
  PrecisionScope scope(256);
  for (double u : {0.001, 0.25, 0.5, 0.875}) {
    const Real uu = scalar_traits<Real>::from_double(u);
    CHECK(abs(Real(lift.profile(uu) - uu)) < Real(1e-70));
  }
}

TEST_CASE("lift agrees with quadrature of the weight") {
  for (double ell : {0.8, 1.2, 1.5, 2.0, 3.5}) {
    const auto d = flatmap::build_map<double>(ell, 0.2, Real(0), 64);
    for (double x : {0.11, 0.2, 0.45, 0.6, 0.89}) {
      const double ref = quadrature_profile(ell, 0.2, x);
      CHECK(d(x) == doctest::Approx(ref).epsilon(1e-9));
    }
  }
}

TEST_CASE("lift structure") {
  const auto lift = real_lift(1.5, 0.2, 128, 0.3);
  PrecisionScope scope(128);
  // Constant on the flat interval, degree one, monotone.
  CHECK(lift(Real(-0.05)) == lift(Real(0.07)));
  CHECK(lift(Real(0.0)) == lift.c());
  const Real x0(0.37);
  CHECK(abs(Real(lift(Real(x0 + 1)) - lift(x0) - 1)) < Real(1e-35));
  Real prev = lift(Real(0.1));
  for (int k = 1; k <= 100; ++k) {
    const Real x = Real(0.1) + Real(k) / 100;
    const Real y = lift(x);
    CHECK(y >= prev);
    prev = y;
  }
}

TEST_CASE("double and Real lifts agree") {
  const auto d = flatmap::build_map<double>(1.5, 0.2, Real(0.25), 64);
  const auto r = real_lift(1.5, 0.2, 128, 0.25);
  PrecisionScope scope(128);
  for (double x : {0.15, 0.33, 0.5, 0.77}) CHECK(d(x) == doctest::Approx(scalar_traits<Real>::to_double(r(Real(x)))).epsilon(1e-13));
}

TEST_CASE("inverse branch round trip") {
  for (double ell : {0.8, 1.5, 3.5}) {
    const auto lift = real_lift(ell, 0.2, 256, 0.4);
    PrecisionScope scope(256);
    for (double z : {0.41, 0.5, 0.9, 1.2, 0.3999}) {
      const Real zz(z);
      const Real x = lift.inverse(zz);
      CHECK(x > lift.b());
      CHECK(x < lift.a() + 1);
      CHECK(circle_distance(lift(x), zz) < Real(1e-60));
    }
    CHECK_THROWS_AS(lift.inverse(lift.c()), DiscontinuityError);
  }
}

TEST_CASE("inverse near the critical value") {
  const auto lift = real_lift(1.5, 0.2, 512, 0.0);
  PrecisionScope scope(512);
  const Real z = ldexp(Real(1), -300);
  const Real x = lift.inverse(z);
  // x - b carries about 512 - 200 significant bits.
  CHECK(abs(Real(lift(x) - z) / z) < Real(1e-90));
  CHECK(lift.inverse_left_limit() == lift.a());
  CHECK(lift.inverse_right_limit() == lift.b());
}

TEST_CASE("local exponent at the flat endpoint") {
  for (double ell : {1.2, 2.0}) {
    const auto lift = real_lift(ell, 0.2);
    PrecisionScope scope(256);
    const Real h1(1e-4), h2(1e-5);
    const Real y1 = lift(Real(lift.b() + h1)) - lift.c();
    const Real y2 = lift(Real(lift.b() + h2)) - lift.c();
    const double slope = scalar_traits<Real>::to_double(Real(log(y1 / y2) / log(h1 / h2)));
    CHECK(slope == doctest::Approx(ell).epsilon(0.01));
  }
}

TEST_CASE("rotation number of a rigid-like map") {
  const auto lift = real_lift(1.0, 0.01, 128, 0.5);
  const auto r = flatmap::rotation_number(lift, 10000);
  CHECK(scalar_traits<Real>::to_double(r.error_bound) == doctest::Approx(1e-4));
  CHECK(scalar_traits<Real>::to_double(r.estimate) > 0);
  CHECK_THROWS_AS(flatmap::rotation_number(lift, 0), Error);
}

TEST_CASE("rational comparison is monotone in c") {
  const auto lo = real_lift(1.5, 0.2, 128, 0.05);
  const auto hi = real_lift(1.5, 0.2, 128, 0.95);
  CHECK(flatmap::compare_with_rational(lo, 1, 2, 64) == flatmap::Comparison::below);
  CHECK(flatmap::compare_with_rational(hi, 1, 2, 64) == flatmap::Comparison::above);
}

TEST_CASE("depth for tolerance") {
  const auto t = cf::convergents(cf::golden_mean(256).cf);
  const std::size_t d = flatmap::depth_for_tolerance(t, 1e-8);
  CHECK(t.q(d) * t.q(d + 1) >= 100000000);
  CHECK(t.q(d - 1) * t.q(d) < 100000000);
}

TEST_CASE("tune places the critical orbit inside the window") {
  const auto target = cf::golden_mean(256);
  const auto table = cf::convergents(target.cf);
  flatmap::TuneOptions o;
  o.tol = 1e-5;
  const auto r = flatmap::tune(1.5, 0.2, target, o);
  CHECK(r.depth == flatmap::depth_for_tolerance(table, 1e-5));
  const Lift<Real> lift(r.params);
  CHECK(flatmap::classify_by_orbit(lift, table, r.depth).side == flatmap::Comparison::undecided);
  const auto est = flatmap::rotation_number(lift, 20000);
  const double err = scalar_traits<Real>::to_double(Real(est.estimate - target.value));
  CHECK(std::abs(err) <= 1e-5 + 1.0 / 20000);
  // Orbit order follows the rotation for short orbits.
  CHECK(flatmap::orbit_combinatorics(lift, target, 200).orders_equal());
}

TEST_CASE("tune rejects rational targets") {
  cf::RotationTarget t;
  t.value = Real(0.5);
  t.cf = cf::expand(Rational(1, 2), 8);
  CHECK_THROWS_AS(flatmap::tune(1.5, 0.2, t, {}), Error);
}

TEST_CASE("preimage geometry") {
  const auto target = cf::golden_mean(256);
  const auto table = cf::convergents(target.cf);
  flatmap::TuneOptions o;
  o.tol = 1e-6;
  o.min_depth = 10;
  const Lift<Real> lift(flatmap::tune(1.5, 0.2, target, o).params);
  const auto g = flatmap::preimage_geometry(lift, table, 8);
  CHECK(g.intervals.size() == table.q64(8));
  CHECK(g.gaps.size() == 9);
  CHECK(flatmap::intervals_disjoint(g, lift.c()));
  for (const auto& row : g.gaps) {
    CHECK(row.gap > 0);
    CHECK(row.alpha > 0);
    CHECK(row.alpha < 1);
    CHECK(row.theta == doctest::Approx(-std::log(scalar_traits<Real>::to_double(row.alpha))));
  }
  // Closest returns approach c.
  for (std::size_t n = 2; n < g.forward.size(); ++n) CHECK(g.forward[n].distance < g.forward[n - 2].distance);
  // The guard fires when the precision cannot resolve the geometry.
  const auto low = flatmap::Lift<Real>([&] {
    auto p = lift.params();
    p.precision_bits = 64;
    return p;
  }());
  CHECK_THROWS_AS(flatmap::preimage_geometry(low, table, 16), Error);
}
