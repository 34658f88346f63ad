#pragma once

// JSON and CSV serialization of parameters and reports. Output is
// locale-independent and byte-stable: fixed column order, scientific notation
// with '.' decimal point, no timestamps.

#include "cherry/bounds.hpp"
#include "cherry/flatmap.hpp"
#include "cherry/suspension.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace cherry::io {

/// Keys ell, lambda1, lambda2, a, b, c, precision_bits. a, b and c are decimal
/// strings carrying every bit of the stored value.
nlohmann::json params_to_json(const flatmap::FlatMapParams& p);
/// Accepts a, b, c as strings or numbers; throws ConfigError on bad fields.
flatmap::FlatMapParams params_from_json(const nlohmann::json& j, const std::string& path = "");
flatmap::FlatMapParams load_params(const std::string& file);

/// Exact decimal form of a Real: enough digits to round-trip at its precision.
std::string exact_decimal(const Real& v);

/// Doubles in CSV cells: 17 significant digits.
std::string cell(double v);
std::string cell(std::uint64_t v);
template <class T>
std::string cell(const T& v, int bits) {
  return format_sci(v, output_digits(bits));
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header);
  void row(std::vector<std::string> cells);
  std::string str() const;

 private:
  std::size_t width_;
  std::string text_;
};

/// n,qn,gap,bracket,alpha_n,fwd_dist
template <class T>
std::string geometry_csv(const flatmap::PreimageGeometry<T>& g) {
  Csv csv({"n", "qn", "gap", "bracket", "alpha_n", "fwd_dist"});
  for (std::size_t k = 0; k < g.gaps.size(); ++k) {
    const auto& r = g.gaps[k];
    csv.row({std::to_string(r.n), cell(r.qn), cell(r.gap, g.precision_bits), cell(r.bracket, g.precision_bits),
             cell(r.alpha, g.precision_bits), cell(g.forward[k].distance, g.precision_bits)});
  }
  return csv.str();
}

/// i,z_i,dist_to_crit,t_i
template <class T>
std::string segment_csv(const suspension::OrbitSegment<T>& s, const T& c, int bits) {
  Csv csv({"i", "z_i", "dist_to_crit", "t_i"});
  for (std::size_t i = 0; i < s.z.size(); ++i)
    csv.row({std::to_string(i + 1), cell(s.z[i], bits), cell(T(circle_distance(s.z[i], c)), bits), cell(s.t[i])});
  return csv.str();
}

/// n,qn1,theta,ratio,verdict
std::string proposition_csv(const bounds::PropositionReport& r);

void write_file(const std::string& path, const std::string& content);

}  // namespace cherry::io
