#include "cherry/suspension.hpp"

#include "doctest.h"

#include <cmath>

using namespace cherry;
using suspension::ReturnTimeModel;

namespace {

const flatmap::Lift<Real>& tuned_lift() {
  static const flatmap::Lift<Real> lift = [] {
    flatmap::TuneOptions o;
    o.tol = 1e-5;
    return flatmap::Lift<Real>(flatmap::tune(1.5, 0.2, cf::golden_mean(256), o).params);
  }();
  return lift;
}

}  // namespace

TEST_CASE("return time model") {
  ReturnTimeModel m{1.0, 2.0, 0.1};
  CHECK(m.tau(0.0) == 1.0);
  CHECK(m.tau(-3.0) == doctest::Approx(7.0));
  CHECK(m.dwell(std::log(0.5)) == 0.0);
  CHECK(m.dwell(std::log(0.01)) == doctest::Approx(2 * std::log(10.0)));
  CHECK_THROWS_AS(suspension::validate(ReturnTimeModel{0.0, 1.0, 0.1}), Error);
  CHECK_THROWS_AS(suspension::validate(ReturnTimeModel{1.0, 1.0, 0.7}), Error);
  const auto p = flatmap::make_params(1.5, 0.2, Real(0), 64);
  CHECK(suspension::default_model(p).kappa == doctest::Approx(1 / 1.5));
}

TEST_CASE("profile time") {
  ReturnTimeModel m{1.0, 1.0, 0.1};
  const double ld = std::log(1e-4);  // dwell = log(1000)
  const double s = m.dwell(ld);
  const double t = m.tau(ld);
  CHECK(suspension::profile_time(suspension::PassageProfile::uniform, m, t, ld, 2.0) == 2.0);
  CHECK(suspension::profile_time(suspension::PassageProfile::saddle_log, m, t, ld, t) == doctest::Approx(s));
  CHECK(suspension::profile_time(suspension::PassageProfile::saddle_log, m, t, ld, (t - s) / 2) == 0.0);
  CHECK(suspension::profile_time(suspension::PassageProfile::saddle_log, m, t, ld, t / 2) == doctest::Approx(s / 2));
}

TEST_CASE("segment bookkeeping") {
  const auto& lift = tuned_lift();
  const auto model = suspension::default_model(lift.params());
  const auto s = suspension::iterate_segment(lift, model, Real(0), 200);
  REQUIRE(s.N() == 200);
  PrecisionScope scope(lift.precision_bits());
  for (std::size_t i = 0; i + 1 < s.z.size(); ++i) {
    // z_{i+1} = g(z_i) means F(z_{i+1}) = z_i on the circle.
    CHECK(circle_distance(lift(s.z[i + 1]), s.z[i]) < Real(1e-40));
    CHECK(s.t[i] == doctest::Approx(model.tau(s.log_dist[i])));
    CHECK(s.t[i] > 0);
  }
  double sum = s.remainder;
  for (std::size_t i = 0; i < s.N(); ++i) sum += s.t[i];
  CHECK(s.total == doctest::Approx(sum));
  CHECK_THROWS_AS(suspension::iterate_segment(lift, model, Real(0.3), 5), Error);
}

TEST_CASE("iterate_until and truncate") {
  const auto& lift = tuned_lift();
  const auto model = suspension::default_model(lift.params());
  const auto s = suspension::iterate_until(lift, model, Real(0), 500.0);
  CHECK(s.total == doctest::Approx(500.0));
  CHECK(s.remainder > 0);
  CHECK(s.remainder <= s.t.back());
  const auto p = suspension::truncate(s, 200.0);
  CHECK(p.total == doctest::Approx(200.0));
  CHECK(p.N() <= s.N());
  for (std::size_t i = 0; i < p.z.size(); ++i) CHECK(p.z[i] == s.z[i]);
  CHECK_THROWS_AS(suspension::truncate(s, 600.0), Error);
}

TEST_CASE("time averages") {
  const auto& lift = tuned_lift();
  const auto model = suspension::default_model(lift.params());
  const auto s = suspension::iterate_until(lift, model, Real(0), 300.0);
  const suspension::Observable one{[](double, double) { return 1.0; }, suspension::PassageProfile::uniform};
  CHECK(suspension::time_average(s, model, one) == doctest::Approx(1.0));
  const double g = suspension::gamma_hat(s, model);
  CHECK(g >= 0);
  CHECK(g < 1);
}

TEST_CASE("gamma decomposition") {
  const auto& lift = tuned_lift();
  const auto table = cf::convergents(cf::golden_mean(256).cf);
  const auto model = suspension::default_model(lift.params());
  const auto s = suspension::iterate_until(lift, model, Real(0), 600.0);
  const std::size_t n = cf::last_index_with_q_at_most(table, BigInt(s.N()));
  const auto offsets = suspension::forward_offsets(lift, table, n + 1);
  CHECK(offsets.size() == n + 2);
  const auto d = suspension::gamma_estimate(s, model, lift, table, offsets, 3);
  CHECK(d.N == s.N());
  CHECK(d.n == n);
  CHECK(d.occupation.size() == n - 3);
  // Gaps (q_l, q_{l+2}) of one parity are disjoint.
  double by_parity[2] = {0, 0};
  for (const auto& o : d.occupation) by_parity[o.l % 2] += o.time;
  CHECK(by_parity[0] <= s.total);
  CHECK(by_parity[1] <= s.total);
  CHECK(d.t_A <= s.total);
  CHECK_THROWS_AS(suspension::occupation_times(s, lift, table, offsets, n + 1), Error);
}

TEST_CASE("rotation gap count agrees with count_in_gap") {
  const auto rho = cf::golden_mean(256);
  const auto table = cf::convergents(rho.cf);
  for (std::size_t l = 1; l < 8; ++l)
    CHECK(suspension::rotation_gap_count(rho, table.q64(l), 0, 1000) == cf::count_in_gap(rho, l, 1000).count);
}

TEST_CASE("segment order follows the rotation") {
  const auto& lift = tuned_lift();
  const auto model = suspension::default_model(lift.params());
  const auto s = suspension::iterate_segment(lift, model, Real(0), 150);
  CHECK(suspension::segment_order_matches(s, lift.c(), cf::golden_mean(256)));
}

TEST_CASE("tau integral estimate") {
  const auto& lift = tuned_lift();
  const auto model = suspension::default_model(lift.params());
  const auto r = suspension::tau_mu_integral_estimate(lift, model, 800);
  CHECK(r.checkpoints == std::vector<std::size_t>{100, 200, 400, 800});
  CHECK(r.estimates.size() == 4);
  CHECK(r.cauchy.size() == 3);
  CHECK(r.estimate > model.tau0);
  CHECK_THROWS_AS(suspension::tau_mu_integral_estimate(lift, model, 4), Error);
}

TEST_CASE("truncated mass grows with the radius") {
  const auto& lift = tuned_lift();
  const auto model = suspension::default_model(lift.params());
  const auto small = suspension::tau_mu_integral_estimate(lift, model, 400, std::log(1e-3));
  const auto large = suspension::tau_mu_integral_estimate(lift, model, 400, std::log(1e-2));
  CHECK(large.truncated_mass >= small.truncated_mass);
  CHECK(large.radius == doctest::Approx(1e-2));
}
