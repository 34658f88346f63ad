#include "cherry/suspension.hpp"

#include <algorithm>

namespace cherry::suspension {

ReturnTimeModel default_model(const flatmap::FlatMapParams& params, double epsilon_cut) {
  ReturnTimeModel m;
  m.tau0 = 1.0;
  m.kappa = 1.0 / params.lambda1;
  m.epsilon_cut = epsilon_cut;
  validate(m);
  return m;
}

void validate(const ReturnTimeModel& m) {
  if (!(m.tau0 > 0)) fail(ErrorKind::invalid_parameter, "tau0 must be positive");
  if (!(m.kappa >= 0)) fail(ErrorKind::invalid_parameter, "kappa must be non-negative");
  if (!(m.epsilon_cut > 0 && m.epsilon_cut < 0.5)) fail(ErrorKind::invalid_parameter, "epsilon_cut must lie in (0, 1/2)");
}

const char* to_string(PassageProfile p) {
  switch (p) {
    case PassageProfile::uniform: return "uniform";
    case PassageProfile::saddle_log: return "saddle_log";
  }
  return "unknown";
}

double profile_time(PassageProfile profile, const ReturnTimeModel& model, double return_time, double log_dist,
                    double elapsed) {
  if (profile == PassageProfile::uniform) return elapsed;
  const double s = std::min(model.dwell(log_dist), return_time);
  if (elapsed >= return_time) return s;
  const double start = (return_time - s) / 2;
  return std::clamp(elapsed - start, 0.0, s);
}

std::size_t rotation_gap_count(const cf::RotationTarget& rho, std::uint64_t qj, std::uint64_t qk, std::uint64_t N) {
  const cf::RotationOrbit orbit(rho.value);
  const cf::FixedArc arc =
      cf::FixedArc::between(orbit.at(static_cast<std::int64_t>(qj)), orbit.at(static_cast<std::int64_t>(qk)));
  const CircleFixed guard = cf::RotationOrbit::error_bound(N) + cf::RotationOrbit::error_bound(std::max(qj, qk));
  std::size_t count = 0;
  for (std::uint64_t i = 1; i <= N; ++i) {
    const CircleFixed p = orbit.at(-static_cast<std::int64_t>(i));
    if (arc.endpoint_distance(p) <= guard)
      fail(ErrorKind::precision_insufficient, "orbit point within the precision guard of a gap endpoint");
    if (arc.contains(p)) ++count;
  }
  return count;
}

}  // namespace cherry::suspension
