#pragma once

#include "adlsense/error.hpp"
#include "adlsense/profile_builder.hpp"
#include "adlsense/time.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adlsense {

/// The six fall-risk axes. Enumeration order is the radar axis order.
enum class RiskFactor { Sleep, SleepDisturbances, RoomTransitions, Activity, Wandering, Toilet };

inline constexpr std::size_t kFactorCount = 6;
inline constexpr std::array<RiskFactor, kFactorCount> kAllFactors = {
    RiskFactor::Sleep,    RiskFactor::SleepDisturbances, RiskFactor::RoomTransitions,
    RiskFactor::Activity, RiskFactor::Wandering,         RiskFactor::Toilet};

inline std::string_view to_string(RiskFactor f) {
  switch (f) {
    case RiskFactor::Sleep: return "Sleep";
    case RiskFactor::SleepDisturbances: return "SleepDisturbances";
    case RiskFactor::RoomTransitions: return "RoomTransitions";
    case RiskFactor::Activity: return "Activity";
    case RiskFactor::Wandering: return "Wandering";
    case RiskFactor::Toilet: return "Toilet";
  }
  return "?";
}

inline std::optional<RiskFactor> parse_risk_factor(std::string_view s) {
  for (auto f : kAllFactors) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

inline RiskFactor risk_factor_from_string(std::string_view s) {
  auto f = parse_risk_factor(s);
  if (!f) fail(ErrorCode::Validation, "unknown risk factor '" + std::string(s) + "'");
  return *f;
}

inline std::size_t index_of(RiskFactor f) { return static_cast<std::size_t>(f); }

enum class RiskDirection { increasing_risk, decreasing_risk };

inline std::string_view to_string(RiskDirection d) {
  return d == RiskDirection::increasing_risk ? "increasing_risk" : "decreasing_risk";
}

inline RiskDirection risk_direction_from_string(std::string_view s) {
  if (s == "increasing_risk") return RiskDirection::increasing_risk;
  if (s == "decreasing_risk") return RiskDirection::decreasing_risk;
  fail(ErrorCode::Validation, "unknown direction '" + std::string(s) + "'");
}

struct FactorConfig {
  RiskFactor factor = RiskFactor::Sleep;
  std::string source_feature;
  double lower = 0.0;
  double upper = 1.0;
  RiskDirection direction = RiskDirection::increasing_risk;
  bool operator==(const FactorConfig&) const = default;
};

inline void validate(const FactorConfig& c) {
  if (!(c.lower < c.upper)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ": lower (%g) must be < upper (%g)", c.lower, c.upper);
    fail(ErrorCode::Validation, "factor " + std::string(to_string(c.factor)) + buf);
  }
  if (c.source_feature.empty()) fail(ErrorCode::Validation, "factor " + std::string(to_string(c.factor)) + ": no source feature");
}

/// Non-clinical stand-ins for expert thresholds.
inline std::vector<FactorConfig> default_factor_configs() {
  using D = RiskDirection;
  return {
      {RiskFactor::Sleep, "sleep_duration", 240, 480, D::decreasing_risk},
      {RiskFactor::SleepDisturbances, "sleep_disturbance_count", 0, 5, D::increasing_risk},
      {RiskFactor::RoomTransitions, "room_transition_count", 20, 80, D::increasing_risk},
      {RiskFactor::Activity, "active_minutes", 60, 300, D::decreasing_risk},
      {RiskFactor::Wandering, "wandering_episode_count", 0, 3, D::increasing_risk},
      {RiskFactor::Toilet, "toilet_visit_count", 4, 12, D::increasing_risk},
  };
}

using FactorScores = std::array<std::optional<double>, kFactorCount>;

struct RiskyTemplate {
  std::array<double, kFactorCount> scores{};
  std::string provenance;
  /// Flag only when a score strictly exceeds the template value.
  bool strict = false;
  bool operator==(const RiskyTemplate&) const = default;
};

inline RiskyTemplate default_risky_template() {
  RiskyTemplate t;
  t.scores.fill(0.6);
  t.provenance = "synthetic default";
  return t;
}

inline void validate(const RiskyTemplate& t) {
  for (auto f : kAllFactors) {
    double v = t.scores[index_of(f)];
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorCode::Validation, "template value for " + std::string(to_string(f)) + " must be in [0,1]");
    }
  }
}

struct RiskProfile {
  std::string resident_id;
  Date date{};
  FactorScores scores{};
  /// Factors at or above the template, in axis order.
  std::vector<RiskFactor> flags;

  bool flagged(RiskFactor f) const { return std::find(flags.begin(), flags.end(), f) != flags.end(); }
  bool operator==(const RiskProfile&) const = default;
};

/// Linear ramp between the thresholds, clamped to [0,1] and inverted for
/// decreasing-risk factors.
inline double factor_score(double x, const FactorConfig& cfg) {
  double t = (x - cfg.lower) / (cfg.upper - cfg.lower);
  if (std::isnan(t)) t = x > cfg.lower ? 1.0 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return cfg.direction == RiskDirection::increasing_risk ? t : 1.0 - t;
}

/// Checks that every factor is configured exactly once and returns the
/// configs in axis order.
inline std::array<FactorConfig, kFactorCount> order_configs(const std::vector<FactorConfig>& configs) {
  std::array<std::optional<FactorConfig>, kFactorCount> slots;
  for (const auto& c : configs) {
    auto& slot = slots[index_of(c.factor)];
    if (slot) fail(ErrorCode::ConfigIncomplete, "factor " + std::string(to_string(c.factor)) + " configured twice");
    validate(c);
    slot = c;
  }
  std::array<FactorConfig, kFactorCount> out;
  for (auto f : kAllFactors) {
    if (!slots[index_of(f)]) fail(ErrorCode::ConfigIncomplete, "factor " + std::string(to_string(f)) + " not configured");
    out[index_of(f)] = *slots[index_of(f)];
  }
  return out;
}

inline RiskProfile score_profile(const DailyProfile& profile, const std::vector<FactorConfig>& configs) {
  auto ordered = order_configs(configs);
  RiskProfile r;
  r.resident_id = profile.resident_id;
  r.date = profile.date;
  for (auto f : kAllFactors) {
    const auto& cfg = ordered[index_of(f)];
    const FeatureValue& v = profile.at(cfg.source_feature);
    if (v.value) r.scores[index_of(f)] = factor_score(*v.value, cfg);
  }
  return r;
}

inline RiskProfile compare_to_template(RiskProfile risk, const RiskyTemplate& tmpl) {
  risk.flags.clear();
  for (auto f : kAllFactors) {
    const auto& s = risk.scores[index_of(f)];
    if (!s) continue;
    const double t = tmpl.scores[index_of(f)];
    if (tmpl.strict ? *s > t : *s >= t) risk.flags.push_back(f);
  }
  return risk;
}

inline std::vector<RiskProfile> score_series(const std::vector<DailyProfile>& profiles,
                                             const std::vector<FactorConfig>& configs, const RiskyTemplate& tmpl) {
  order_configs(configs);
  std::vector<RiskProfile> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) out.push_back(compare_to_template(score_profile(p, configs), tmpl));
  return out;
}

inline nlohmann::ordered_json risk_to_json(const RiskProfile& r) {
  nlohmann::ordered_json j;
  j["resident"] = r.resident_id;
  j["date"] = format_date(r.date);
  j["scores"] = nlohmann::ordered_json::object();
  for (auto f : kAllFactors) {
    const auto& s = r.scores[index_of(f)];
    if (s) {
      j["scores"][std::string(to_string(f))] = *s;
    } else {
      j["scores"][std::string(to_string(f))] = nullptr;
    }
  }
  j["flags"] = nlohmann::ordered_json::array();
  for (auto f : r.flags) j["flags"].push_back(std::string(to_string(f)));
  return j;
}

inline nlohmann::ordered_json template_to_json(const RiskyTemplate& t) {
  nlohmann::ordered_json j;
  j["scores"] = nlohmann::ordered_json::object();
  for (auto f : kAllFactors) j["scores"][std::string(to_string(f))] = t.scores[index_of(f)];
  j["provenance"] = t.provenance;
  j["strict"] = t.strict;
  return j;
}

}  // namespace adlsense
