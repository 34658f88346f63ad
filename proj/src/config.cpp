#include "cherry/config.hpp"

#include "cherry/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace cherry::config {

namespace {

using nlohmann::json;

template <class T>
struct Kind;
template <>
struct Kind<double> {
  static constexpr const char* name = "a number";
  static bool ok(const json& j) { return j.is_number(); }
};
template <>
struct Kind<int> {
  static constexpr const char* name = "an integer";
  static bool ok(const json& j) { return j.is_number_integer(); }
};
template <>
struct Kind<std::uint64_t> {
  static constexpr const char* name = "a non-negative integer";
  static bool ok(const json& j) { return j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0); }
};
template <>
struct Kind<bool> {
  static constexpr const char* name = "a boolean";
  static bool ok(const json& j) { return j.is_boolean(); }
};
template <>
struct Kind<std::string> {
  static constexpr const char* name = "a string";
  static bool ok(const json& j) { return j.is_string(); }
};

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_ + "/" + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  std::optional<T> opt(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    const json& v = j_.at(key);
    if (!Kind<T>::ok(v)) throw ConfigError(field(key), std::string("expected ") + Kind<T>::name);
    return v.get<T>();
  }

  template <class T>
  T req(const std::string& key) {
    auto v = opt<T>(key);
    if (!v) throw ConfigError(field(key), "missing required field");
    return *v;
  }

  template <class T>
  std::optional<std::vector<T>> opt_list(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!Kind<T>::ok(v[i]))
        throw ConfigError(field(key) + "/" + std::to_string(i), std::string("expected ") + Kind<T>::name);
      out.push_back(v[i].get<T>());
    }
    return out;
  }

  std::optional<Reader> child(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Reader(j_.at(key), field(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");

  auto map = root.child("map");
  if (!map) throw ConfigError("/map", "missing required field");
  c.map.ell = map->req<double>("ell");
  check(c.map.ell > 0, map->field("ell"), "must be positive");
  c.map.flat_length = map->req<double>("flat_length");
  check(c.map.flat_length > 0 && c.map.flat_length < 1, map->field("flat_length"), "must lie in (0, 1)");
  c.map.precision_bits = map->req<int>("precision_bits");
  check(c.map.precision_bits >= 64, map->field("precision_bits"), "must be at least 64");
  c.map.max_precision_bits = map->opt<int>("max_precision_bits").value_or(std::max(4096, c.map.precision_bits));
  check(c.map.max_precision_bits >= c.map.precision_bits, map->field("max_precision_bits"),
        "must be at least precision_bits");
  c.map.lambda1 = map->opt<double>("lambda1");
  c.map.lambda2 = map->opt<double>("lambda2");
  if (c.map.lambda1) check(*c.map.lambda1 > 0, map->field("lambda1"), "must be positive");
  if (c.map.lambda2) check(*c.map.lambda2 < 0, map->field("lambda2"), "must be negative");
  if (c.map.lambda1 && c.map.lambda2)
    check(std::abs(*c.map.lambda1 / -*c.map.lambda2 - c.map.ell) <= 1e-12 * c.map.ell, map->field("lambda1"),
          "lambda1/(-lambda2) must equal ell");
  map->finish();

  auto target = root.child("target");
  if (!target) throw ConfigError("/target", "missing required field");
  c.target.named = target->opt<std::string>("named");
  c.target.quotients = target->opt_list<std::uint64_t>("quotients");
  c.target.value = target->opt<std::string>("value");
  if (auto d = target->opt<std::uint64_t>("depth")) c.target.depth = *d;
  const int forms = (c.target.named ? 1 : 0) + (c.target.quotients ? 1 : 0) + (c.target.value ? 1 : 0);
  check(forms == 1, "/target", "exactly one of named, quotients, value is required");
  if (c.target.named)
    check(*c.target.named == "golden" || *c.target.named == "sqrt2m1", target->field("named"),
          "must be \"golden\" or \"sqrt2m1\"");
  if (c.target.quotients) {
    check(!c.target.quotients->empty(), target->field("quotients"), "must not be empty");
    for (std::size_t i = 0; i < c.target.quotients->size(); ++i)
      check((*c.target.quotients)[i] >= 1, target->field("quotients") + "/" + std::to_string(i), "must be >= 1");
  }
  check(c.target.depth >= 4, target->field("depth"), "must be at least 4");
  target->finish();

  if (auto tune = root.child("tune")) {
    if (auto tol = tune->opt<double>("tol")) c.tune.tol = *tol;
    check(c.tune.tol > 0, tune->field("tol"), "must be positive");
    tune->finish();
  }

  if (auto depths = root.child("depths")) {
    if (auto v = depths->opt<std::uint64_t>("n_max")) c.depths.n_max = *v;
    if (auto v = depths->opt<std::uint64_t>("N")) c.depths.N = *v;
    check(c.depths.n_max >= 2, depths->field("n_max"), "must be at least 2");
    check(c.depths.N >= 1, depths->field("N"), "must be at least 1");
    depths->finish();
  }

  if (auto model = root.child("model")) {
    if (auto v = model->opt<double>("tau0")) c.model.tau0 = *v;
    c.model.kappa = model->opt<double>("kappa");
    if (auto v = model->opt<double>("epsilon_cut")) c.model.epsilon_cut = *v;
    check(c.model.tau0 > 0, model->field("tau0"), "must be positive");
    if (c.model.kappa) check(*c.model.kappa >= 0, model->field("kappa"), "must be non-negative");
    check(c.model.epsilon_cut > 0 && c.model.epsilon_cut < 0.5, model->field("epsilon_cut"), "must lie in (0, 1/2)");
    model->finish();
  }

  if (auto gamma = root.child("gamma")) {
    GammaConfig g;
    auto grid = gamma->opt_list<double>("t_grid");
    if (!grid) throw ConfigError(gamma->field("t_grid"), "missing required field");
    g.t_grid = *grid;
    check(!g.t_grid.empty(), gamma->field("t_grid"), "must not be empty");
    for (std::size_t i = 0; i < g.t_grid.size(); ++i)
      check(g.t_grid[i] > 0 && (i == 0 || g.t_grid[i] == 2 * g.t_grid[i - 1]),
            gamma->field("t_grid") + "/" + std::to_string(i), "must be positive and double the previous entry");
    if (auto v = gamma->opt<std::uint64_t>("n0")) g.n0 = *v;
    check(g.n0 >= 1, gamma->field("n0"), "must be at least 1");
    if (auto v = gamma->opt<std::string>("z")) g.z = *v;
    gamma->finish();
    c.gamma = g;
  }

  if (auto bounds = root.child("bounds")) {
    if (auto v = bounds->opt<int>("n0")) c.bounds.n0 = *v;
    c.bounds.K = bounds->opt<double>("K");
    if (auto v = bounds->opt<bool>("inject_adversarial")) c.bounds.inject_adversarial = *v;
    if (auto v = bounds->opt<std::uint64_t>("synthetic_n")) c.bounds.synthetic_n = *v;
    c.bounds.synthetic_quotients = bounds->opt_list<std::uint64_t>("synthetic_quotients");
    check(c.bounds.n0 >= 1, bounds->field("n0"), "must be at least 1");
    if (c.bounds.K) check(*c.bounds.K > 0, bounds->field("K"), "must be positive");
    check(c.bounds.synthetic_n >= static_cast<std::size_t>(c.bounds.n0), bounds->field("synthetic_n"),
          "must be at least n0");
    if (c.bounds.synthetic_quotients) {
      check(c.bounds.synthetic_quotients->size() >= c.bounds.synthetic_n + 1, bounds->field("synthetic_quotients"),
            "needs at least synthetic_n + 1 entries");
      for (std::size_t i = 0; i < c.bounds.synthetic_quotients->size(); ++i)
        check((*c.bounds.synthetic_quotients)[i] >= 1,
              bounds->field("synthetic_quotients") + "/" + std::to_string(i), "must be >= 1");
    }
    bounds->finish();
  }

  if (auto report = root.child("report")) {
    if (auto v = report->opt<std::uint64_t>("n_iter")) c.report.n_iter = *v;
    if (auto v = report->opt<std::uint64_t>("tau_mu_N")) c.report.tau_mu_N = *v;
    check(c.report.n_iter >= 1, report->field("n_iter"), "must be at least 1");
    check(c.report.tau_mu_N >= 8, report->field("tau_mu_N"), "must be at least 8");
    report->finish();
  }

  c.params_file = root.opt<std::string>("params_file");
  root.finish();
  return c;
}

ExperimentConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return from_json(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["map"] = {{"ell", c.map.ell},
              {"flat_length", c.map.flat_length},
              {"precision_bits", c.map.precision_bits},
              {"max_precision_bits", c.map.max_precision_bits}};
  if (c.map.lambda1) j["map"]["lambda1"] = *c.map.lambda1;
  if (c.map.lambda2) j["map"]["lambda2"] = *c.map.lambda2;
  j["target"] = {{"depth", c.target.depth}};
  if (c.target.named) j["target"]["named"] = *c.target.named;
  if (c.target.quotients) j["target"]["quotients"] = *c.target.quotients;
  if (c.target.value) j["target"]["value"] = *c.target.value;
  j["tune"] = {{"tol", c.tune.tol}};
  j["depths"] = {{"n_max", c.depths.n_max}, {"N", c.depths.N}};
  j["model"] = {{"tau0", c.model.tau0}, {"epsilon_cut", c.model.epsilon_cut}};
  if (c.model.kappa) j["model"]["kappa"] = *c.model.kappa;
  if (c.gamma) j["gamma"] = {{"t_grid", c.gamma->t_grid}, {"n0", c.gamma->n0}, {"z", c.gamma->z}};
  j["bounds"] = {{"n0", c.bounds.n0},
                 {"inject_adversarial", c.bounds.inject_adversarial},
                 {"synthetic_n", c.bounds.synthetic_n}};
  if (c.bounds.K) j["bounds"]["K"] = *c.bounds.K;
  if (c.bounds.synthetic_quotients) j["bounds"]["synthetic_quotients"] = *c.bounds.synthetic_quotients;
  j["report"] = {{"n_iter", c.report.n_iter}, {"tau_mu_N", c.report.tau_mu_N}};
  if (c.params_file) j["params_file"] = *c.params_file;
  return j;
}

cf::RotationTarget make_target(const TargetConfig& t, int bits) {
  if (t.named) {
    if (*t.named == "golden") return cf::golden_mean(bits, t.depth);
    return cf::sqrt2_minus_1(bits, t.depth);
  }
  if (t.quotients) {
    const std::size_t tail = t.depth > t.quotients->size() ? t.depth - t.quotients->size() : 48;
    return cf::from_quotients(*t.quotients, bits, tail);
  }
  PrecisionScope scope(bits);
  const Real v = scalar_traits<Real>::from_string(*t.value);
  if (!(v > 0 && v < 1)) fail(ErrorKind::invalid_target, "target value must lie in (0, 1)");
  return cf::from_value(v, t.depth);
}

}  // namespace cherry::config
