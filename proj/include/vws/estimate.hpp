#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

namespace vws {

/// Two sides of a measured inequality. A 0/0 ratio is stored as NaN and
/// serialized as null.
struct EstimateReport {
  std::string id;  ///< keyest, unlocal, apriori, apriori2, apriori3, itm_weight, algebra
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  nlohmann::json context = nlohmann::json::object();

  bool sentinel() const { return std::isnan(ratio); }
};

inline double safe_ratio(double lhs, double rhs) {
  if (rhs == 0.0) return lhs == 0.0 ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

inline EstimateReport make_estimate(std::string id, double lhs, double rhs, nlohmann::json context = nlohmann::json::object()) {
  return EstimateReport{std::move(id), lhs, rhs, safe_ratio(lhs, rhs), std::move(context)};
}

inline void to_json(nlohmann::json& j, const EstimateReport& r) {
  j = nlohmann::json{{"id", r.id}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"context", r.context}};
  if (std::isfinite(r.ratio)) j["ratio"] = r.ratio;
  else if (std::isnan(r.ratio)) j["ratio"] = nullptr;
  else j["ratio"] = "inf";
}

inline void from_json(const nlohmann::json& j, EstimateReport& r) {
  r.id = j.at("id").get<std::string>();
  r.lhs = j.at("lhs").get<double>();
  r.rhs = j.at("rhs").get<double>();
  const auto& ratio = j.at("ratio");
  if (ratio.is_null()) r.ratio = std::numeric_limits<double>::quiet_NaN();
  else if (ratio.is_string()) r.ratio = std::numeric_limits<double>::infinity();
  else r.ratio = ratio.get<double>();
  r.context = j.value("context", nlohmann::json::object());
}

}  // namespace vws
