#include "cherry/report_io.hpp"

#include "cherry/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace cherry::io {

using nlohmann::json;

std::string exact_decimal(const Real& v) {
  const auto bits = static_cast<int>(mpfr_get_prec(v.backend().data()));
  return scalar_traits<Real>::to_string(v, static_cast<int>(std::ceil(bits * 0.30102999566398119521)) + 2);
}

json params_to_json(const flatmap::FlatMapParams& p) {
  return {{"ell", p.ell},
          {"lambda1", p.lambda1},
          {"lambda2", p.lambda2},
          {"a", exact_decimal(p.a)},
          {"b", exact_decimal(p.b)},
          {"c", exact_decimal(p.c)},
          {"precision_bits", p.precision_bits}};
}

namespace {

double number_field(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "/" + key, "missing required field");
  if (!j.at(key).is_number()) throw ConfigError(path + "/" + key, "expected a number");
  return j.at(key).get<double>();
}

Real real_field(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "/" + key, "missing required field");
  const json& v = j.at(key);
  if (v.is_string()) {
    try {
      return scalar_traits<Real>::from_string(v.get<std::string>());
    } catch (const Error&) {
      throw ConfigError(path + "/" + key, "not a decimal number");
    }
  }
  if (v.is_number()) return scalar_traits<Real>::from_double(v.get<double>());
  throw ConfigError(path + "/" + key, "expected a decimal string or number");
}

}  // namespace

flatmap::FlatMapParams params_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  flatmap::FlatMapParams p;
  if (!j.contains("precision_bits") || !j.at("precision_bits").is_number_integer())
    throw ConfigError(path + "/precision_bits", "expected an integer");
  p.precision_bits = j.at("precision_bits").get<int>();
  if (p.precision_bits < 64) throw ConfigError(path + "/precision_bits", "must be at least 64");
  PrecisionScope scope(p.precision_bits);
  p.ell = number_field(j, "ell", path);
  p.lambda1 = number_field(j, "lambda1", path);
  p.lambda2 = number_field(j, "lambda2", path);
  p.a = real_field(j, "a", path);
  p.b = real_field(j, "b", path);
  p.c = real_field(j, "c", path);
  try {
    flatmap::validate(p);
  } catch (const Error& e) {
    throw ConfigError(path.empty() ? "/" : path, e.what());
  }
  return p;
}

flatmap::FlatMapParams load_params(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("/params_file", "cannot open '" + file + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/params_file", std::string("invalid JSON: ") + e.what());
  }
  // Params files written by the tune command nest the map under "params".
  if (j.contains("params")) return params_from_json(j.at("params"), "/params");
  return params_from_json(j);
}

std::string cell(double v) { return format_sci(v, 17); }

std::string cell(std::uint64_t v) { return std::to_string(v); }

Csv::Csv(std::vector<std::string> header) : width_(header.size()) { row(std::move(header)); }

void Csv::row(std::vector<std::string> cells) {
  if (cells.size() != width_) fail(ErrorKind::invariant_violation, "CSV row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
}

std::string Csv::str() const { return text_; }

std::string proposition_csv(const bounds::PropositionReport& r) {
  Csv csv({"n", "qn1", "theta", "ratio", "verdict"});
  for (const auto& row : r.rows)
    csv.row({std::to_string(row.n), row.q_next.str(), cell(row.theta), cell(row.ratio),
             row.verdict ? "true" : "false"});
  return csv.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::invalid_parameter, "cannot write '" + path + "'");
  out << content;
  if (!out) fail(ErrorKind::invalid_parameter, "write to '" + path + "' failed");
}

}  // namespace cherry::io
