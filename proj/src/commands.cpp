#include "cherry/commands.hpp"

#include "cherry/bounds.hpp"
#include "cherry/cf.hpp"
#include "cherry/flatmap.hpp"
#include "cherry/report_io.hpp"
#include "cherry/suspension.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>

namespace cherry::commands {

namespace {

using nlohmann::json;
using flatmap::FlatMapParams;
using flatmap::Lift;

struct Context {
  config::ExperimentConfig cfg;
  int bits = 0;
  int max_bits = 0;
  cf::RotationTarget target;
  cf::ConvergentTable table;
  std::string out_dir;
};

Context make_context(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  Context ctx;
  ctx.cfg = cfg;
  ctx.bits = cfg.map.precision_bits;
  ctx.max_bits = cfg.map.max_precision_bits;
  if (opts.precision_override) {
    if (*opts.precision_override < 64) throw ConfigError("--precision-override", "must be at least 64");
    ctx.bits = *opts.precision_override;
    ctx.max_bits = std::max(ctx.max_bits, ctx.bits);
  }
  ctx.target = config::make_target(cfg.target, std::max(256, ctx.bits));
  if (ctx.target.cf.source == cf::Source::exact_rational)
    fail(ErrorKind::invalid_target, "rotation target is rational");
  ctx.table = cf::convergents(ctx.target.cf);
  ctx.out_dir = opts.out_dir;
  std::filesystem::create_directories(ctx.out_dir);
  return ctx;
}

std::string path_in(const Context& ctx, const std::string& name) {
  return (std::filesystem::path(ctx.out_dir) / name).string();
}

void apply_exponents(const Context& ctx, FlatMapParams& p) {
  const auto& m = ctx.cfg.map;
  if (m.lambda1) {
    p.lambda1 = *m.lambda1;
    p.lambda2 = m.lambda2 ? *m.lambda2 : -*m.lambda1 / m.ell;
  } else if (m.lambda2) {
    p.lambda2 = *m.lambda2;
    p.lambda1 = -*m.lambda2 * m.ell;
  }
}

struct Tuned {
  FlatMapParams params;
  json info;
};

/// Parameters from params_file when given, otherwise from tuning at the
/// configured tolerance with at least `min_depth` convergents pinned.
Tuned tuned(const Context& ctx, std::size_t min_depth) {
  Tuned out;
  if (ctx.cfg.params_file) {
    out.params = io::load_params(*ctx.cfg.params_file);
    if (out.params.ell != ctx.cfg.map.ell) throw ConfigError("/params_file", "ell differs from /map/ell");
    out.info = {{"source", "params_file"}};
  } else {
    flatmap::TuneOptions o;
    o.tol = ctx.cfg.tune.tol;
    o.min_depth = min_depth;
    o.precision_bits = ctx.bits;
    o.max_precision_bits = ctx.max_bits;
    const auto r = flatmap::tune(ctx.cfg.map.ell, ctx.cfg.map.flat_length, ctx.target, o);
    out.params = r.params;
    out.info = {{"source", "tune"},
                {"depth", r.depth},
                {"steps", r.steps},
                {"log2_width", r.log2_width},
                {"max_bits_used", r.max_bits_used}};
  }
  apply_exponents(ctx, out.params);
  return out;
}

bool ladder_error(ErrorKind k) {
  return k == ErrorKind::precision_exhausted || k == ErrorKind::discontinuity_hit ||
         k == ErrorKind::precision_insufficient;
}

/// Runs `f` on the lift at the params' precision, doubling it on precision
/// failures up to max_bits. Returns the precision that succeeded.
int with_ladder(const Context& ctx, FlatMapParams p, const std::function<void(const Lift<Real>&)>& f) {
  for (;;) {
    try {
      PrecisionScope scope(p.precision_bits);
      f(Lift<Real>(p));
      return p.precision_bits;
    } catch (const Error& e) {
      if (!ladder_error(e.kind()) || 2 * p.precision_bits > ctx.max_bits) throw;
      p.precision_bits *= 2;
    }
  }
}

json trend_json(const bounds::TrendReport& t) {
  json j = {{"window", t.window},
            {"strictly_decreasing", t.strictly_decreasing},
            {"contraction", t.contraction},
            {"decaying", t.decaying}};
  j["limit"] = t.limit ? json(*t.limit) : json(nullptr);
  return j;
}

json summary_head(const Context& ctx, const std::string& command) {
  return {{"command", command}, {"config", config::to_json(ctx.cfg)}};
}

void write_summary(const Context& ctx, const json& j) {
  io::write_file(path_in(ctx, "summary.json"), j.dump(2) + "\n");
}

std::string real_cell(const Real& v, int bits) { return io::cell(v, bits); }

}  // namespace

const std::vector<std::string>& names() {
  static const std::vector<std::string> n = {"tune", "alpha", "bounds", "gamma", "orbit", "report"};
  return n;
}

json run(const std::string& command, const config::ExperimentConfig& cfg, const RunOptions& opts) {
  if (command == "tune") return cmd_tune(cfg, opts);
  if (command == "alpha") return cmd_alpha(cfg, opts);
  if (command == "bounds") return cmd_bounds(cfg, opts);
  if (command == "gamma") return cmd_gamma(cfg, opts);
  if (command == "orbit") return cmd_orbit(cfg, opts);
  if (command == "report") return cmd_report(cfg, opts);
  throw ConfigError("command", "unknown subcommand '" + command + "'");
}

json cmd_tune(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  const Context ctx = make_context(cfg, opts);
  const Tuned t = tuned(ctx, 0);
  json params_doc = {{"params", io::params_to_json(t.params)}, {"config", config::to_json(ctx.cfg)}, {"tune", t.info}};
  io::write_file(path_in(ctx, "params.json"), params_doc.dump(2) + "\n");

  json s = summary_head(ctx, "tune");
  s["params"] = io::params_to_json(t.params);
  s["tune"] = t.info;
  s["precision_bits_used"] = t.params.precision_bits;
  s["target"] = {{"value", format_sci(ctx.target.value, 40)}, {"quotients_used", t.info.value("depth", 0)}};
  write_summary(ctx, s);
  return s;
}

json cmd_alpha(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  const Context ctx = make_context(cfg, opts);
  const std::size_t n_max = cfg.depths.n_max;
  if (n_max + 2 > ctx.table.size()) throw ConfigError("/depths/n_max", "exceeds the target's continued fraction depth");
  const Tuned t = tuned(ctx, n_max + 2);

  std::optional<flatmap::PreimageGeometry<Real>> geometry;
  bool disjoint = false;
  const int used = with_ladder(ctx, t.params, [&](const Lift<Real>& lift) {
    geometry = flatmap::preimage_geometry(lift, ctx.table, n_max);
    disjoint = flatmap::intervals_disjoint(*geometry, lift.c());
  });
  const auto measured = bounds::measure(*geometry);
  const auto senk = bounds::verify_senk_empirical(measured, cfg.map.ell, ctx.target.cf.quotients);

  io::write_file(path_in(ctx, "geometry.csv"), io::geometry_csv(*geometry));
  io::Csv alpha({"n", "qn", "alpha_n", "theta_n"});
  for (const auto& row : geometry->gaps)
    alpha.row({std::to_string(row.n), io::cell(row.qn), real_cell(row.alpha, used), io::cell(row.theta)});
  io::write_file(path_in(ctx, "alpha.csv"), alpha.str());
  io::Csv senk_csv({"n", "qn", "theta_n", "log_k1", "correction"});
  for (const auto& row : senk.rows)
    senk_csv.row({std::to_string(row.n), io::cell(row.qn), io::cell(row.theta), io::cell(row.log_k1),
                  io::cell(row.correction)});
  io::write_file(path_in(ctx, "senk.csv"), senk_csv.str());

  json s = summary_head(ctx, "alpha");
  s["params"] = io::params_to_json(t.params);
  s["tune"] = t.info;
  s["precision_bits_used"] = used;
  s["intervals_disjoint"] = disjoint;
  s["log2_min_tracked"] = geometry->log2_min_tracked;
  s["senk"] = {{"k1_min", senk.k1_min}, {"log_k1_min", std::log(senk.k1_min)}, {"trend", trend_json(senk.trend)},
               {"uniform_k1", senk.k1_min > 0 && !senk.trend.decaying}};
  write_summary(ctx, s);
  return s;
}

json cmd_bounds(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  const Context ctx = make_context(cfg, opts);
  const double ell = cfg.map.ell;
  if (!(ell > 1)) throw ConfigError("/map/ell", "the bounds need ell > 1");
  const int n0 = cfg.bounds.n0;

  // Synthetic: exact recurrence over prescribed quotients.
  const std::vector<cf::Quotient> quotients =
      cfg.bounds.synthetic_quotients ? *cfg.bounds.synthetic_quotients : ctx.target.cf.quotients;
  const std::size_t n_last = std::min(cfg.bounds.synthetic_n, quotients.size() - 1);
  if (n_last < static_cast<std::size_t>(n0)) throw ConfigError("/bounds/synthetic_n", "quotients do not reach n0");
  const auto syn_table = cf::convergents(cf::prescribed(quotients));
  auto theta = bounds::synthetic_theta(ell, quotients, n_last, 1.0, 1.0);
  auto syn_params = bounds::bound_params_for(theta, ell, quotients, n0, n_last);
  if (cfg.bounds.K) syn_params.K = *cfg.bounds.K;
  if (cfg.bounds.inject_adversarial) {
    const long n = static_cast<long>(n_last);
    theta.theta[static_cast<std::size_t>(n - theta.first_index)] =
        2 * syn_params.K * std::exp(log_of(syn_table.q(n_last + 1)));
  }
  const auto syn = bounds::verify_proposition(theta, syn_table, syn_params);
  io::write_file(path_in(ctx, "bounds.csv"), io::proposition_csv(syn));

  // Empirical: the same statements on map-measured quantities.
  const std::size_t n_max = cfg.depths.n_max;
  if (n_max + 2 > ctx.table.size()) throw ConfigError("/depths/n_max", "exceeds the target's continued fraction depth");
  const Tuned t = tuned(ctx, n_max + 2);
  std::optional<flatmap::PreimageGeometry<Real>> geometry;
  const int used = with_ladder(ctx, t.params, [&](const Lift<Real>& lift) {
    geometry = flatmap::preimage_geometry(lift, ctx.table, n_max);
  });
  const auto measured = bounds::measure(*geometry);
  const auto mtheta = bounds::theta_from_geometry(measured);
  const int en0 = std::max<long>(n0, mtheta.first_index + 2);
  bounds::BoundParams emp_params =
      bounds::bound_params_for(mtheta, ell, ctx.target.cf.quotients, en0, static_cast<std::size_t>(mtheta.last_index()));
  if (cfg.bounds.K) emp_params.K = *cfg.bounds.K;
  const auto emp = bounds::verify_proposition(mtheta, ctx.table, emp_params);
  const auto cor = bounds::verify_corollary(measured, ctx.table, emp_params);
  const auto ratios = bounds::ratio_sequence(measured.log_fwd);
  io::write_file(path_in(ctx, "bounds_empirical.csv"), io::proposition_csv(emp));
  io::Csv corollary_csv({"n", "value", "ratio", "verdict"});
  for (const auto& r : cor.rows)
    corollary_csv.row({std::to_string(r.n), io::cell(r.value), io::cell(r.ratio), r.verdict ? "true" : "false"});
  io::write_file(path_in(ctx, "corollary.csv"), corollary_csv.str());
  io::Csv ratio_csv({"n", "r_n", "running_inf"});
  for (const auto& r : ratios.rows) ratio_csv.row({std::to_string(r.n), io::cell(r.ratio), io::cell(r.running_inf)});
  io::write_file(path_in(ctx, "ratios.csv"), ratio_csv.str());

  auto verdicts = [](const bounds::PropositionReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) rows.push_back({{"n", row.n}, {"ratio", row.ratio}, {"verdict", row.verdict}});
    return rows;
  };
  json s = summary_head(ctx, "bounds");
  s["precision_bits_used"] = used;
  s["params"] = io::params_to_json(t.params);
  s["tune"] = t.info;
  s["synthetic"] = {{"K", syn_params.K},
                    {"C", syn_params.C},
                    {"n0", syn_params.n0},
                    {"n_last", n_last},
                    {"adversarial", cfg.bounds.inject_adversarial},
                    {"overall", syn.overall},
                    {"violations", syn.violations},
                    {"rows", verdicts(syn)}};
  double emp_fitted = 0.0;
  for (const auto& row : emp.rows) emp_fitted = std::max(emp_fitted, row.ratio);
  s["empirical"] = {{"K", emp_params.K},         {"C", emp_params.C},
                    {"n0", emp_params.n0},       {"overall", emp.overall},
                    {"violations", emp.violations}, {"fitted_K", emp_fitted},
                    {"rows", verdicts(emp)}};
  json cor_rows = json::array();
  for (const auto& r : cor.rows) cor_rows.push_back({{"n", r.n}, {"ratio", r.ratio}, {"verdict", r.verdict}});
  s["corollary"] = {{"fitted_K", cor.fitted_K}, {"overall", cor.overall}, {"rows", cor_rows}};
  s["ratios"] = {{"inf", ratios.inf},
                 {"fit_alpha", ratios.fit_alpha},
                 {"fit_C", ratios.fit_C},
                 {"trend", trend_json(ratios.trend)},
                 {"positive_inf_no_decay", ratios.inf > 0 && !ratios.trend.decaying}};
  write_summary(ctx, s);
  return s;
}

json cmd_gamma(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  const Context ctx = make_context(cfg, opts);
  if (!cfg.gamma) throw ConfigError("/gamma", "missing required field");
  const auto& g = *cfg.gamma;
  const Tuned t = tuned(ctx, 0);
  suspension::ReturnTimeModel model = suspension::default_model(t.params, cfg.model.epsilon_cut);
  model.tau0 = cfg.model.tau0;
  if (cfg.model.kappa) model.kappa = *cfg.model.kappa;

  struct Row {
    double t;
    suspension::GammaDecomposition d;
  };
  std::vector<Row> rows;
  std::optional<suspension::OrbitSegment<Real>> segment;
  Real c;
  const int used = with_ladder(ctx, t.params, [&](const Lift<Real>& lift) {
    rows.clear();
    const Real z = scalar_traits<Real>::from_string(g.z);
    segment = suspension::iterate_until(lift, model, z, g.t_grid.back() * model.tau0);
    const std::size_t n = cf::last_index_with_q_at_most(ctx.table, BigInt(segment->N()));
    if (n + 2 > ctx.table.size()) fail(ErrorKind::missing_geometry, "target continued fraction too shallow for N");
    const auto offsets = suspension::forward_offsets(lift, ctx.table, n + 1);
    for (const double tg : g.t_grid) {
      const auto part = suspension::truncate(*segment, tg * model.tau0);
      rows.push_back({tg, suspension::gamma_estimate(part, model, lift, ctx.table, offsets, g.n0)});
    }
    c = lift.c();
  });

  io::Csv csv({"t", "gamma_hat", "tA", "n0"});
  json jrows = json::array();
  for (const auto& r : rows) {
    const double ta = r.d.t_A / r.d.t;
    csv.row({io::cell(r.d.t), io::cell(r.d.gamma_hat), io::cell(ta), std::to_string(g.n0)});
    jrows.push_back({{"t", r.d.t},
                     {"N", r.d.N},
                     {"n", r.d.n},
                     {"gamma_hat", r.d.gamma_hat},
                     {"tA_over_t", ta},
                     {"count_A", r.d.count_A},
                     {"tA_from_B_over_t", r.d.t_A_from_B / r.d.t},
                     {"comparison", r.d.comparison}});
  }
  io::write_file(path_in(ctx, "gamma.csv"), csv.str());
  io::write_file(path_in(ctx, "segment.csv"), io::segment_csv(*segment, c, used));

  json s = summary_head(ctx, "gamma");
  s["precision_bits_used"] = used;
  s["params"] = io::params_to_json(t.params);
  s["tune"] = t.info;
  s["model"] = {{"tau0", model.tau0}, {"kappa", model.kappa}, {"epsilon_cut", model.epsilon_cut}};
  s["rows"] = jrows;
  s["gamma_first"] = rows.front().d.gamma_hat;
  s["gamma_last"] = rows.back().d.gamma_hat;
  s["decreasing"] = rows.back().d.gamma_hat < rows.front().d.gamma_hat;
  write_summary(ctx, s);
  return s;
}

json cmd_orbit(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  const Context ctx = make_context(cfg, opts);
  const std::uint64_t N = cfg.depths.N;
  const std::size_t need = cf::last_index_with_q_at_most(ctx.table, BigInt(N)) + 1;
  if (need + 1 >= ctx.table.size()) throw ConfigError("/depths/N", "exceeds the target's continued fraction depth");
  const Tuned t = tuned(ctx, need);
  const suspension::ReturnTimeModel model = suspension::default_model(t.params, cfg.model.epsilon_cut);

  std::optional<flatmap::OrbitCombinatorics> combo;
  bool segment_order = false;
  struct GapRow {
    std::size_t l;
    std::uint64_t ql, ql1, rotation, map;
  };
  std::vector<GapRow> gaps;
  const int used = with_ladder(ctx, t.params, [&](const Lift<Real>& lift) {
    combo = flatmap::orbit_combinatorics(lift, ctx.target, N);
    const auto seg = suspension::iterate_segment(lift, model, Real(0), N);
    segment_order = suspension::segment_order_matches(seg, lift.c(), ctx.target);
    const std::size_t l_max = cf::last_index_with_q_at_most(ctx.table, BigInt(N)) - 1;
    const auto offsets = suspension::forward_offsets(lift, ctx.table, l_max);
    gaps.clear();
    for (std::size_t l = 0; l <= l_max; ++l) {
      const auto rc = cf::count_in_gap(ctx.target, l, N);
      std::uint64_t mc = 0;
      const Real zero(0);
      for (std::size_t i = 1; i <= N; ++i)
        if (suspension::detail::strictly_between(suspension::signed_offset(seg.z[i], lift.c()), zero, offsets[l]))
          ++mc;
      gaps.push_back({l, ctx.table.q64(l), ctx.table.q64(l + 1), rc.count, mc});
    }
  });

  io::Csv order({"rank", "i_map", "i_rotation"});
  for (std::size_t k = 0; k < combo->map_order.size(); ++k)
    order.row({std::to_string(k), std::to_string(combo->map_order[k]), std::to_string(combo->rotation_order[k])});
  io::write_file(path_in(ctx, "orbit_order.csv"), order.str());

  io::Csv gap_csv({"l", "q_l", "q_l1", "rotation_count", "map_count", "rotation_bound_ok", "map_within_slack"});
  std::size_t rotation_violations = 0, map_violations = 0;
  for (const auto& g : gaps) {
    const bool rok = g.ql1 * g.rotation <= N;
    const bool mok = g.ql1 * g.map <= N + 2 * g.ql1;
    rotation_violations += rok ? 0 : 1;
    map_violations += mok ? 0 : 1;
    gap_csv.row({std::to_string(g.l), io::cell(g.ql), io::cell(g.ql1), io::cell(g.rotation), io::cell(g.map),
                 rok ? "true" : "false", mok ? "true" : "false"});
  }
  io::write_file(path_in(ctx, "gap_counts.csv"), gap_csv.str());

  json s = summary_head(ctx, "orbit");
  s["precision_bits_used"] = used;
  s["params"] = io::params_to_json(t.params);
  s["tune"] = t.info;
  s["N"] = N;
  s["orders_equal"] = combo->orders_equal();
  s["backward_orders_equal"] = segment_order;
  s["log2_min_separation"] = combo->log2_min_separation;
  s["rotation_count_violations"] = rotation_violations;
  s["map_count_violations"] = map_violations;
  write_summary(ctx, s);
  return s;
}

json cmd_report(const config::ExperimentConfig& cfg, const RunOptions& opts) {
  const Context ctx = make_context(cfg, opts);
  const Tuned t = tuned(ctx, 0);
  suspension::ReturnTimeModel model = suspension::default_model(t.params, cfg.model.epsilon_cut);
  model.tau0 = cfg.model.tau0;
  if (cfg.model.kappa) model.kappa = *cfg.model.kappa;

  std::optional<flatmap::RotationEstimate<Real>> rot;
  std::optional<suspension::TauMuReport> tau;
  json comparisons = json::array();
  const int used = with_ladder(ctx, t.params, [&](const Lift<Real>& lift) {
    rot = flatmap::rotation_number(lift, cfg.report.n_iter);
    tau = suspension::tau_mu_integral_estimate(lift, model, cfg.report.tau_mu_N);
    comparisons = json::array();
    for (std::size_t n = 1; n < ctx.table.size() && ctx.table.q(n) <= 1000; ++n) {
      const auto side = flatmap::compare_with_rational(lift, ctx.table.p64(n), ctx.table.q64(n), 64);
      comparisons.push_back(
          {{"n", n}, {"p", ctx.table.p64(n)}, {"q", ctx.table.q64(n)}, {"rho_vs_pq", flatmap::to_string(side)}});
    }
  });

  const double err = scalar_traits<Real>::to_double(Real(rot->estimate - ctx.target.value));
  io::Csv tau_csv({"N", "estimate"});
  for (std::size_t k = 0; k < tau->estimates.size(); ++k)
    tau_csv.row({std::to_string(tau->checkpoints[k]), io::cell(tau->estimates[k])});
  io::write_file(path_in(ctx, "tau_mu.csv"), tau_csv.str());

  json s = summary_head(ctx, "report");
  s["precision_bits_used"] = used;
  s["params"] = io::params_to_json(t.params);
  s["tune"] = t.info;
  s["rotation"] = {{"n_iter", cfg.report.n_iter},
                   {"estimate", format_sci(rot->estimate, output_digits(used))},
                   {"error_bound", scalar_traits<Real>::to_double(rot->error_bound)},
                   {"target", format_sci(ctx.target.value, output_digits(used))},
                   {"difference", err}};
  s["tau_mu"] = {{"estimate", tau->estimate},
                 {"truncated_mass", tau->truncated_mass},
                 {"radius", tau->radius},
                 {"converging", tau->converging}};
  s["comparisons"] = comparisons;
  write_summary(ctx, s);
  return s;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::invalid_parameter:
    case ErrorKind::invalid_target:
      return 1;
    case ErrorKind::plateau_stall:
    case ErrorKind::precision_insufficient:
    case ErrorKind::precision_exhausted:
    case ErrorKind::discontinuity_hit:
      return 2;
    default:
      return 3;
  }
}

json error_json(const Error& e) {
  json j = {{"error", to_string(e.kind())}, {"message", e.what()}};
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) j["field"] = ce->field();
  return j;
}

}  // namespace cherry::commands
