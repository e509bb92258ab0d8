#pragma once

#include "adlsense/adl_segmentation.hpp"
#include "adlsense/error.hpp"
#include "adlsense/event_model.hpp"
#include "adlsense/time.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace adlsense {

enum class FeatureKind { binary, count, duration_minutes, numeric };

inline std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::binary: return "binary";
    case FeatureKind::count: return "count";
    case FeatureKind::duration_minutes: return "duration_minutes";
    case FeatureKind::numeric: return "numeric";
  }
  return "?";
}

inline FeatureKind feature_kind_from_string(std::string_view s) {
  for (auto k : {FeatureKind::binary, FeatureKind::count, FeatureKind::duration_minutes, FeatureKind::numeric}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::Validation, "unknown feature kind '" + std::string(s) + "'");
}

struct ValueRange {
  double min = 0.0;
  double max = 0.0;
  double width() const { return max - min; }
  bool operator==(const ValueRange&) const = default;
};

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::optional<ValueRange> range_hint;
  bool operator==(const FeatureSpec&) const = default;
};

struct FeatureSchema {
  std::vector<FeatureSpec> features;

  const FeatureSpec* find(std::string_view name) const {
    for (const auto& f : features) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }
  bool operator==(const FeatureSchema&) const = default;
};

inline void validate(const FeatureSchema& schema) {
  std::set<std::string> seen;
  for (const auto& f : schema.features) {
    if (f.name.empty()) fail(ErrorCode::Validation, "feature with empty name");
    if (!seen.insert(f.name).second) fail(ErrorCode::Validation, "duplicate feature '" + f.name + "'");
    if (f.range_hint && !(f.range_hint->min < f.range_hint->max)) {
      fail(ErrorCode::Validation, "feature '" + f.name + "': range_hint min must be < max");
    }
  }
}

enum class NullReason { none, no_sensor, no_episodes };

inline std::string_view to_string(NullReason r) {
  switch (r) {
    case NullReason::none: return "none";
    case NullReason::no_sensor: return "no_sensor";
    case NullReason::no_episodes: return "no_episodes";
  }
  return "?";
}

inline NullReason null_reason_from_string(std::string_view s) {
  if (s == "no_sensor") return NullReason::no_sensor;
  if (s == "no_episodes") return NullReason::no_episodes;
  fail(ErrorCode::Validation, "unknown null reason '" + std::string(s) + "'");
}

/// A feature value or an explicit null that says why it is missing.
struct FeatureValue {
  std::optional<double> value;
  NullReason reason = NullReason::none;

  static FeatureValue of(double v) { return {v, NullReason::none}; }
  static FeatureValue null(NullReason why) { return {std::nullopt, why}; }
  bool is_null() const { return !value.has_value(); }
  bool operator==(const FeatureValue&) const = default;
};

struct DailyProfile {
  std::string resident_id;
  Date date{};
  std::map<std::string, FeatureValue> values;
  /// Feature name -> indices into the day's episode list.
  std::map<std::string, std::vector<std::size_t>> provenance;

  const FeatureValue& at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) fail(ErrorCode::SchemaMismatch, "profile has no feature '" + name + "'");
    return it->second;
  }
  bool operator==(const DailyProfile&) const = default;
};

/// Descriptor of an installed sensor, used for missing-sensor detection and
/// as movement geometry.
struct SensorInfo {
  std::string id;
  SensorKind kind = SensorKind::motion;
  std::string room;
  double x = 0.0;
  double y = 0.0;

  SensorEvent probe() const { return SensorEvent{id, kind, Instant{}, 0.0, room}; }
  bool operator==(const SensorInfo&) const = default;
};

inline SensorGeometry geometry_of(const std::vector<SensorInfo>& sensors) {
  SensorGeometry g;
  for (const auto& s : sensors) {
    if (s.kind == SensorKind::motion) g[s.id] = SensorPlacement{s.room, s.x, s.y};
  }
  return g;
}

struct ProfileOptions {
  int disturbed_threshold = 2;
  /// Installed sensors. Empty means "assume everything is installed".
  std::vector<SensorInfo> inventory;
  /// Rules used to decide which episode kinds the inventory can produce.
  std::vector<AdlRule> rules;
};

struct FeatureInputs {
  const std::vector<AdlEpisode>& episodes;
  const EventStream& stream;
  const ProfileOptions& options;
};

struct FeatureResult {
  FeatureValue value;
  std::vector<std::size_t> provenance;
};

struct FeatureExtractor {
  FeatureKind kind;
  std::vector<AdlKind> consumes;
  std::function<FeatureResult(const FeatureInputs&)> extract;
};

namespace detail {

inline std::vector<std::size_t> episodes_of(const std::vector<AdlEpisode>& eps, AdlKind kind) {
  std::vector<std::size_t> ids;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (eps[i].kind == kind) ids.push_back(i);
  }
  return ids;
}

inline FeatureExtractor counter(AdlKind kind) {
  return {FeatureKind::count, {kind}, [kind](const FeatureInputs& in) {
            auto ids = episodes_of(in.episodes, kind);
            return FeatureResult{FeatureValue::of(static_cast<double>(ids.size())), ids};
          }};
}

inline FeatureExtractor total_minutes(AdlKind kind) {
  return {FeatureKind::duration_minutes, {kind}, [kind](const FeatureInputs& in) {
            auto ids = episodes_of(in.episodes, kind);
            Millis total{0};
            for (auto i : ids) total += in.episodes[i].duration();
            return FeatureResult{FeatureValue::of(to_minutes(total)), ids};
          }};
}

}  // namespace detail

/// Every feature the builder knows how to compute, keyed by name.
inline const std::map<std::string, FeatureExtractor>& feature_extractors() {
  using detail::episodes_of;
  static const std::map<std::string, FeatureExtractor> registry = [] {
    std::map<std::string, FeatureExtractor> r;
    r["sleep_duration"] = detail::total_minutes(AdlKind::sleep);
    r["sleep_disturbance_count"] = detail::counter(AdlKind::bed_exit);
    r["disturbed_sleep"] = {FeatureKind::binary, {AdlKind::bed_exit}, [](const FeatureInputs& in) {
                              auto ids = episodes_of(in.episodes, AdlKind::bed_exit);
                              bool disturbed = static_cast<int>(ids.size()) >= in.options.disturbed_threshold;
                              return FeatureResult{FeatureValue::of(disturbed ? 1.0 : 0.0), ids};
                            }};
    r["room_transition_count"] = detail::counter(AdlKind::room_transition);
    r["stand_up_count"] = {FeatureKind::count, {AdlKind::sitting}, [](const FeatureInputs& in) {
                             // A stand-up is a sitting episode closed by a chair deactivation.
                             std::vector<std::size_t> ids;
                             for (auto i : episodes_of(in.episodes, AdlKind::sitting)) {
                               const auto& ep = in.episodes[i];
                               bool released = std::any_of(ep.sources.begin(), ep.sources.end(), [&](std::size_t s) {
                                 const auto& e = in.stream.events.at(s);
                                 return e.is_deactivation() && e.timestamp == ep.end;
                               });
                               if (released) ids.push_back(i);
                             }
                             return FeatureResult{FeatureValue::of(static_cast<double>(ids.size())), ids};
                           }};
    r["time_sitting"] = detail::total_minutes(AdlKind::sitting);
    r["avg_gait_speed"] = {FeatureKind::numeric, {AdlKind::room_transition}, [](const FeatureInputs& in) {
                             std::vector<std::size_t> ids;
                             double sum = 0.0;
                             for (auto i : episodes_of(in.episodes, AdlKind::room_transition)) {
                               auto it = in.episodes[i].attributes.find("gait_speed");
                               if (it == in.episodes[i].attributes.end()) continue;
                               sum += it->second;
                               ids.push_back(i);
                             }
                             if (ids.empty()) return FeatureResult{FeatureValue::null(NullReason::no_episodes), {}};
                             return FeatureResult{FeatureValue::of(sum / static_cast<double>(ids.size())), ids};
                           }};
    r["toilet_visit_count"] = detail::counter(AdlKind::toileting);
    r["wandering_episode_count"] = detail::counter(AdlKind::wandering);
    r["active_minutes"] = {FeatureKind::duration_minutes, {AdlKind::active_movement}, [](const FeatureInputs& in) {
                             // Distinct 1-minute buckets, anchored at the day start, holding a motion activation.
                             const Instant anchor = in.stream.window ? in.stream.window->begin : Instant{};
                             std::set<std::int64_t> buckets;
                             for (const auto& e : in.stream.events) {
                               if (e.kind == SensorKind::motion && e.is_activation()) {
                                 buckets.insert(std::chrono::floor<std::chrono::minutes>(e.timestamp - anchor).count());
                               }
                             }
                             return FeatureResult{FeatureValue::of(static_cast<double>(buckets.size())),
                                                  episodes_of(in.episodes, AdlKind::active_movement)};
                           }};
    r["shower_count"] = detail::counter(AdlKind::shower);
    r["cooking_count"] = detail::counter(AdlKind::cooking);
    r["eating_drinking_count"] = detail::counter(AdlKind::eating_drinking);
    r["grooming_count"] = detail::counter(AdlKind::grooming);
    return r;
  }();
  return registry;
}

/// Range hints span what the risk thresholds treat as the meaningful band,
/// so a full-range difference is roughly "low risk vs. high risk".
inline FeatureSchema default_schema() {
  using K = FeatureKind;
  return FeatureSchema{{
      {"disturbed_sleep", K::binary, std::nullopt},
      {"sleep_duration", K::duration_minutes, ValueRange{240, 600}},
      {"sleep_disturbance_count", K::count, ValueRange{0, 4}},
      {"room_transition_count", K::count, ValueRange{20, 80}},
      {"stand_up_count", K::count, ValueRange{0, 10}},
      {"time_sitting", K::duration_minutes, ValueRange{0, 360}},
      {"avg_gait_speed", K::numeric, ValueRange{0.4, 1.2}},
      {"toilet_visit_count", K::count, ValueRange{2, 12}},
      {"wandering_episode_count", K::count, ValueRange{0, 2}},
      {"active_minutes", K::duration_minutes, ValueRange{60, 360}},
      {"shower_count", K::count, ValueRange{0, 2}},
      {"cooking_count", K::count, ValueRange{0, 4}},
      {"eating_drinking_count", K::count, ValueRange{0, 6}},
  }};
}

namespace detail {

inline bool kind_observable(AdlKind kind, const ProfileOptions& opts) {
  if (opts.inventory.empty()) return true;
  if (kind == AdlKind::room_transition || kind == AdlKind::wandering) {
    std::set<std::string> rooms;
    for (const auto& s : opts.inventory) {
      if (s.kind == SensorKind::motion) rooms.insert(s.room);
    }
    return rooms.size() >= 2;
  }
  if (kind == AdlKind::active_movement) {
    return std::any_of(opts.inventory.begin(), opts.inventory.end(),
                       [](const SensorInfo& s) { return s.kind == SensorKind::motion; });
  }
  for (const auto& rule : opts.rules) {
    if (rule.produces != kind) continue;
    for (const auto& s : opts.inventory) {
      if (rule.trigger.matches_sensor(s.probe())) return true;
    }
  }
  return false;
}

}  // namespace detail

inline void validate(const DailyProfile& p, const FeatureSchema& schema) {
  for (const auto& [name, v] : p.values) {
    if (!schema.find(name)) fail(ErrorCode::SchemaMismatch, "feature '" + name + "' is not in the schema");
  }
  for (const auto& f : schema.features) {
    auto it = p.values.find(f.name);
    if (it == p.values.end()) fail(ErrorCode::SchemaMismatch, "profile is missing feature '" + f.name + "'");
    const FeatureValue& v = it->second;
    if (v.is_null()) {
      if (v.reason == NullReason::none) fail(ErrorCode::Validation, "null feature '" + f.name + "' without a reason");
      continue;
    }
    if (v.reason != NullReason::none) fail(ErrorCode::Validation, "feature '" + f.name + "' has a value and a null reason");
    const double x = *v.value;
    if (!std::isfinite(x)) fail(ErrorCode::Validation, "feature '" + f.name + "' is not finite");
    switch (f.kind) {
      case FeatureKind::binary:
        if (x != 0.0 && x != 1.0) fail(ErrorCode::Validation, "binary feature '" + f.name + "' must be 0 or 1");
        break;
      case FeatureKind::count:
        if (x < 0.0 || x != std::floor(x)) {
          fail(ErrorCode::Validation, "count feature '" + f.name + "' must be a non-negative integer");
        }
        break;
      case FeatureKind::duration_minutes:
        if (x < 0.0) fail(ErrorCode::Validation, "duration feature '" + f.name + "' must be >= 0");
        break;
      case FeatureKind::numeric: break;
    }
  }
}

/// Folds one day of episodes (as produced by segment_day) and its stream
/// into a profile covering every schema feature.
inline DailyProfile build_profile(const std::vector<AdlEpisode>& episodes, const EventStream& stream,
                                  const FeatureSchema& schema, Date date, const ProfileOptions& options = {}) {
  const auto& registry = feature_extractors();
  DailyProfile profile;
  profile.resident_id = stream.resident_id;
  profile.date = date;
  FeatureInputs inputs{episodes, stream, options};
  for (const auto& f : schema.features) {
    auto it = registry.find(f.name);
    if (it == registry.end()) fail(ErrorCode::SchemaMismatch, "no extractor registered for feature '" + f.name + "'");
    const FeatureExtractor& ex = it->second;
    if (ex.kind != f.kind) {
      fail(ErrorCode::SchemaMismatch, "feature '" + f.name + "' is declared " + std::string(to_string(f.kind)) +
                                          " but its extractor yields " + std::string(to_string(ex.kind)));
    }
    bool observable = std::all_of(ex.consumes.begin(), ex.consumes.end(),
                                  [&](AdlKind k) { return detail::kind_observable(k, options); });
    if (!observable) {
      profile.values[f.name] = FeatureValue::null(NullReason::no_sensor);
      profile.provenance[f.name] = {};
      continue;
    }
    FeatureResult r = ex.extract(inputs);
    profile.values[f.name] = r.value;
    profile.provenance[f.name] = std::move(r.provenance);
  }
  return profile;
}

/// Flat JSON record: resident, date, features (value or null), nulls
/// (reason per null feature) and provenance.
inline nlohmann::ordered_json profile_to_record(const DailyProfile& p) {
  nlohmann::ordered_json j;
  j["resident"] = p.resident_id;
  j["date"] = format_date(p.date);
  j["features"] = nlohmann::ordered_json::object();
  j["nulls"] = nlohmann::ordered_json::object();
  for (const auto& [name, v] : p.values) {
    if (v.is_null()) {
      j["features"][name] = nullptr;
      j["nulls"][name] = std::string(to_string(v.reason));
    } else {
      j["features"][name] = *v.value;
    }
  }
  j["provenance"] = nlohmann::ordered_json::object();
  for (const auto& [name, ids] : p.provenance) j["provenance"][name] = ids;
  return j;
}

template <class Json>
DailyProfile record_to_profile(const Json& j, const FeatureSchema& schema) {
  DailyProfile p;
  try {
    p.resident_id = j.at("resident").template get<std::string>();
    p.date = parse_date(j.at("date").template get<std::string>());
    const auto& features = j.at("features");
    if (!features.is_object()) fail(ErrorCode::Validation, "features must be an object");
    for (auto it = features.begin(); it != features.end(); ++it) {
      if (it.value().is_null()) {
        NullReason why = NullReason::no_episodes;
        if (j.contains("nulls") && j.at("nulls").contains(it.key())) {
          why = null_reason_from_string(j.at("nulls").at(it.key()).template get<std::string>());
        }
        p.values[it.key()] = FeatureValue::null(why);
      } else if (it.value().is_number()) {
        p.values[it.key()] = FeatureValue::of(it.value().template get<double>());
      } else {
        fail(ErrorCode::Validation, "feature '" + it.key() + "' must be a number or null");
      }
    }
    if (j.contains("provenance")) {
      const auto& prov = j.at("provenance");
      for (auto it = prov.begin(); it != prov.end(); ++it) {
        p.provenance[it.key()] = it.value().template get<std::vector<std::size_t>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("bad profile record: ") + e.what());
  }
  validate(p, schema);
  return p;
}

}  // namespace adlsense
