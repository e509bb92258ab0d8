#pragma once

#include "adlsense/adl_segmentation.hpp"
#include "adlsense/casebase_cbr.hpp"
#include "adlsense/error.hpp"
#include "adlsense/profile_builder.hpp"
#include "adlsense/resident_sim.hpp"
#include "adlsense/risk_scoring.hpp"
#include "adlsense/time.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace adlsense {

/// A resident the service loads at startup: simulated from a scenario or
/// read from an event file.
struct ServiceResident {
  std::string id;
  std::string scenario;
  std::string events;
  std::optional<std::uint64_t> seed;
  std::optional<int> days;
  CaseLabel label = CaseLabel::unlabelled;
  std::string label_source;
  bool operator==(const ServiceResident&) const = default;
};

/// Demo population: one resident per built-in scenario. The two extremes
/// are labelled so retrieval has something to vote with.
inline std::vector<ServiceResident> default_service_residents() {
  return {
      {"res-decline", "gradual_decline", "", std::nullopt, std::nullopt, CaseLabel::unlabelled, ""},
      {"res-poor-sleep", "poor_sleep_frequent_toilet", "", std::nullopt, std::nullopt, CaseLabel::risky,
       "synthetic scenario"},
      {"res-steady", "steady_healthy", "", std::nullopt, std::nullopt, CaseLabel::not_risky, "synthetic scenario"},
  };
}

struct ServiceSettings {
  std::string listen = "127.0.0.1:8080";
  bool cors = true;
  int history_days = 30;
  /// Optional extra case base merged into the snapshot.
  std::string casebase;
  std::vector<ServiceResident> residents = default_service_residents();
  bool operator==(const ServiceSettings&) const = default;
};

/// Every knob in one document.
struct AppConfig {
  TimeOfDay day_start = TimeOfDay::hm(12, 0);
  int disturbed_threshold = 2;
  FeatureSchema schema = default_schema();
  std::vector<SensorInfo> sensors = default_home_layout().sensors;
  std::vector<std::pair<std::string, std::string>> doors = default_home_layout().doors;
  std::vector<AdlRule> rules = default_rules();
  TransitionOptions transitions;
  WanderingOptions wandering;
  SimilarityConfig similarity = default_similarity_config();
  int trend_window = 14;
  double trend_threshold = kDefaultTrendThreshold;
  std::vector<FactorConfig> factors = default_factor_configs();
  RiskyTemplate risky_template = default_risky_template();
  std::vector<Scenario> scenarios;
  ServiceSettings service;

  SegmentationConfig segmentation() const { return SegmentationConfig{rules, geometry_of(sensors), transitions, wandering}; }

  ProfileOptions profile_options() const { return ProfileOptions{disturbed_threshold, sensors, rules}; }

  HomeLayout home_layout() const {
    HomeLayout h = default_home_layout();
    h.sensors = sensors;
    h.doors = doors;
    return h;
  }

  bool operator==(const AppConfig&) const = default;
};

/// Configured scenarios first, then the built-in ones. The config's home
/// layout replaces the scenario's.
inline std::optional<Scenario> find_scenario(const AppConfig& cfg, std::string_view name) {
  for (const auto& s : cfg.scenarios) {
    if (s.name == name) return s;
  }
  for (auto s : builtin_scenarios()) {
    if (s.name == name) {
      s.home_layout = cfg.home_layout();
      return s;
    }
  }
  return std::nullopt;
}

inline std::vector<std::string> scenario_names(const AppConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& s : cfg.scenarios) names.push_back(s.name);
  for (const auto& s : builtin_scenarios()) {
    if (std::find(names.begin(), names.end(), s.name) == names.end()) names.push_back(s.name);
  }
  return names;
}

// ---------------------------------------------------------------------------
// Canonical JSON form. The service fingerprint hashes exactly this.

namespace detail {

using ojson = nlohmann::ordered_json;

inline double seconds_of(Millis d) { return to_seconds(d); }

inline ojson predicate_to_json(const SensorPredicate& p) {
  ojson j = ojson::object();
  if (p.kind) j["kind"] = std::string(to_string(*p.kind));
  if (!p.locations.empty()) j["locations"] = p.locations;
  if (!p.sensor_prefix.empty()) j["prefix"] = p.sensor_prefix;
  j["edge"] = std::string(to_string(p.edge));
  if (p.continuous()) {
    j["rise"] = p.rise;
    j["baseline_window_s"] = seconds_of(p.baseline_window);
  }
  return j;
}

inline ojson rule_to_json(const AdlRule& r) {
  ojson j;
  j["name"] = r.name;
  j["produces"] = std::string(to_string(r.produces));
  j["trigger"] = predicate_to_json(r.trigger);
  j["supporting"] = ojson::array();
  for (const auto& p : r.supporting) j["supporting"].push_back(predicate_to_json(p));
  j["absence"] = ojson::array();
  for (const auto& p : r.absence) j["absence"].push_back(predicate_to_json(p));
  j["max_gap_s"] = seconds_of(r.max_gap);
  j["min_duration_s"] = seconds_of(r.min_duration);
  j["max_duration_s"] = seconds_of(r.max_duration);
  if (r.start_window) {
    j["start_window"] = {format_time_of_day(r.start_window->begin), format_time_of_day(r.start_window->end)};
  }
  if (r.within) j["within"] = std::string(to_string(*r.within));
  j["support_side"] = std::string(to_string(r.support_side));
  j["min_support"] = r.min_support;
  j["extend_with_support"] = r.extend_with_support;
  return j;
}

inline ojson sensors_to_json(const std::vector<SensorInfo>& sensors) {
  ojson arr = ojson::array();
  for (const auto& s : sensors) {
    arr.push_back(ojson{{"id", s.id}, {"kind", std::string(to_string(s.kind))}, {"room", s.room}, {"x", s.x}, {"y", s.y}});
  }
  return arr;
}

inline ojson doors_to_json(const std::vector<std::pair<std::string, std::string>>& doors) {
  ojson arr = ojson::array();
  for (const auto& [a, b] : doors) arr.push_back({a, b});
  return arr;
}

inline ojson scenario_to_json(const Scenario& s) {
  ojson j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["days"] = s.days;
  j["start_date"] = format_date(s.start_date);
  j["walk_speed"] = s.walk_speed;
  j["walk_speed_sigma"] = s.walk_speed_sigma;
  j["motion_hold_s"] = s.motion_hold_s;
  j["poll_interval_s"] = s.poll_interval_s;
  j["humidity_base"] = s.humidity_base;
  j["humidity_noise"] = s.humidity_noise;
  j["shower_humidity_rise"] = s.shower_humidity_rise;
  j["power_base"] = s.power_base;
  j["power_noise"] = s.power_noise;
  j["stove_watts"] = s.stove_watts;
  j["night_motion"] = s.night_motion;
  j["blocks"] = ojson::array();
  for (const auto& b : s.day_templates) {
    ojson bj;
    bj["name"] = b.name;
    bj["activity"] = std::string(to_string(b.activity));
    bj["start"] = clock_of_minutes_after_noon(b.start);
    bj["start_sigma"] = b.start_sigma;
    bj["duration"] = b.duration;
    bj["duration_sigma"] = b.duration_sigma;
    bj["probability"] = b.probability;
    bj["count"] = b.count;
    bj["spread"] = b.spread;
    bj["during_sleep"] = b.during_sleep;
    j["blocks"].push_back(std::move(bj));
  }
  j["drift"] = ojson::array();
  for (const auto& d : s.drift) {
    j["drift"].push_back(
        ojson{{"block", d.block}, {"field", std::string(to_string(d.field))}, {"per_day", d.per_day}, {"from_day", d.from_day}});
  }
  return j;
}

}  // namespace detail

inline nlohmann::ordered_json config_to_json(const AppConfig& c) {
  using detail::ojson;
  ojson j;
  j["profile"] = ojson{{"day_start", format_time_of_day(c.day_start)}, {"disturbed_threshold", c.disturbed_threshold}};
  j["schema"] = ojson{{"features", schema_to_json(c.schema)}};
  j["sensors"] = detail::sensors_to_json(c.sensors);
  j["segmentation"] = ojson{
      {"transition_timeout_s", to_seconds(c.transitions.timeout)},
      {"gait_min_gap_s", to_seconds(c.transitions.gait_min_gap)},
      {"night_window", {format_time_of_day(c.wandering.night_window.begin), format_time_of_day(c.wandering.night_window.end)}},
      {"wander_min_transitions", c.wandering.min_transitions},
      {"wander_max_gap_s", to_seconds(c.wandering.max_gap)},
  };
  j["rules"] = ojson::array();
  for (const auto& r : c.rules) j["rules"].push_back(detail::rule_to_json(r));
  ojson weights = ojson::object();
  for (const auto& [k, v] : c.similarity.weights) weights[k] = v;
  j["similarity"] = ojson{{"null_similarity", c.similarity.null_similarity},
                          {"k", c.similarity.k},
                          {"trend_window", c.trend_window},
                          {"trend_threshold", c.trend_threshold},
                          {"weights", weights}};
  ojson factors = ojson::array();
  for (const auto& f : c.factors) {
    factors.push_back(ojson{{"factor", std::string(to_string(f.factor))},
                            {"source_feature", f.source_feature},
                            {"lower", f.lower},
                            {"upper", f.upper},
                            {"direction", std::string(to_string(f.direction))}});
  }
  j["risk"] = ojson{{"factors", factors}, {"template", template_to_json(c.risky_template)}};
  ojson scenarios = ojson::array();
  for (const auto& s : c.scenarios) scenarios.push_back(detail::scenario_to_json(s));
  j["simulator"] = ojson{{"doors", detail::doors_to_json(c.doors)}, {"scenarios", scenarios}};
  ojson residents = ojson::array();
  for (const auto& r : c.service.residents) {
    ojson rj;
    rj["id"] = r.id;
    if (!r.scenario.empty()) rj["scenario"] = r.scenario;
    if (!r.events.empty()) rj["events"] = r.events;
    if (r.seed) rj["seed"] = *r.seed;
    if (r.days) rj["days"] = *r.days;
    rj["label"] = std::string(to_string(r.label));
    if (!r.label_source.empty()) rj["label_source"] = r.label_source;
    residents.push_back(std::move(rj));
  }
  j["service"] = ojson{{"listen", c.service.listen},
                       {"cors", c.service.cors},
                       {"history_days", c.service.history_days},
                       {"casebase", c.service.casebase},
                       {"residents", residents}};
  return j;
}

/// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
inline std::string config_fingerprint(const AppConfig& c) {
  const std::string text = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Reading. Everything goes through a JSON tree so TOML and JSON documents
// share one reader; every error names the dotted path of the bad entry.

namespace detail {

inline nlohmann::json toml_to_json(const toml::node& n) {
  if (const auto* t = n.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (auto&& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (const auto* a = n.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (auto&& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (const auto* s = n.as_string()) return s->get();
  if (const auto* i = n.as_integer()) return i->get();
  if (const auto* f = n.as_floating_point()) return f->get();
  if (const auto* b = n.as_boolean()) return b->get();
  std::ostringstream out;
  if (const auto* d = n.as_date()) {
    out << d->get();
  } else if (const auto* t = n.as_time()) {
    out << t->get();
  } else if (const auto* dt = n.as_date_time()) {
    out << dt->get();
  }
  return out.str();
}

class ConfigNode {
 public:
  ConfigNode(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const nlohmann::json& raw() const { return j_; }

  std::string path_of(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  [[noreturn]] void bad(std::string_view key, const std::string& msg) const {
    fail(ErrorCode::Config, (key.empty() ? path_ : path_of(key)) + ": " + msg);
  }

  bool has(std::string_view key) const { return j_.is_object() && j_.contains(std::string(key)); }

  void allow(std::initializer_list<std::string_view> keys) const {
    if (!j_.is_object()) bad("", "expected a table");
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) bad(it.key(), "unknown key");
    }
  }

  ConfigNode table(std::string_view key) const {
    const auto& v = j_.at(std::string(key));
    if (!v.is_object()) bad(key, "expected a table");
    return ConfigNode(v, path_of(key));
  }

  std::vector<ConfigNode> tables(std::string_view key) const {
    const auto& v = j_.at(std::string(key));
    if (!v.is_array()) bad(key, "expected an array of tables");
    std::vector<ConfigNode> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = path_of(key) + "[" + std::to_string(i) + "]";
      if (!v[i].is_object()) fail(ErrorCode::Config, p + ": expected a table");
      out.emplace_back(v[i], p);
    }
    return out;
  }

  double number(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }
  double number(std::string_view key) const {
    const auto& v = need(key);
    if (!v.is_number()) bad(key, "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(std::string_view key, std::int64_t fallback) const { return has(key) ? integer(key) : fallback; }
  std::int64_t integer(std::string_view key) const {
    const auto& v = need(key);
    if (!v.is_number_integer()) bad(key, "expected an integer");
    return v.get<std::int64_t>();
  }

  bool boolean(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = need(key);
    if (!v.is_boolean()) bad(key, "expected true or false");
    return v.get<bool>();
  }

  std::string text(std::string_view key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }
  std::string text(std::string_view key) const {
    const auto& v = need(key);
    if (!v.is_string()) bad(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<std::string> texts(std::string_view key) const {
    const auto& v = need(key);
    if (!v.is_array()) bad(key, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) bad(key, "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<double> numbers(std::string_view key) const {
    const auto& v = need(key);
    if (!v.is_array()) bad(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) bad(key, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  /// Runs `fn`, re-raising library errors as Config errors under this path.
  template <class Fn>
  auto guard(std::string_view key, Fn&& fn) const -> decltype(fn()) {
    try {
      return fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Config) throw;
      bad(key, e.detail());
    } catch (const std::exception& e) {
      bad(key, e.what());
    }
  }

 private:
  const nlohmann::json& need(std::string_view key) const {
    if (!has(key)) bad(key, "missing");
    return j_.at(std::string(key));
  }

  const nlohmann::json& j_;
  std::string path_;
};

inline Millis seconds_key(const ConfigNode& n, std::string_view key, Millis fallback) {
  if (!n.has(key)) return fallback;
  const double s = n.number(key);
  if (!std::isfinite(s)) n.bad(key, "must be finite");
  return from_seconds(s);
}

inline TimeOfDayRange clock_range(const ConfigNode& n, std::string_view key) {
  auto v = n.texts(key);
  if (v.size() != 2) n.bad(key, "expected [\"HH:MM\", \"HH:MM\"]");
  return n.guard(key, [&] { return TimeOfDayRange{parse_time_of_day(v[0]), parse_time_of_day(v[1])}; });
}

inline SensorPredicate read_predicate(const ConfigNode& n) {
  n.allow({"kind", "locations", "prefix", "edge", "rise", "baseline_window_s"});
  SensorPredicate p;
  if (n.has("kind")) p.kind = n.guard("kind", [&] { return sensor_kind_from_string(n.text("kind")); });
  if (n.has("locations")) p.locations = n.texts("locations");
  p.sensor_prefix = n.text("prefix", "");
  const std::string edge = n.text("edge", "activate");
  if (edge == "activate") {
    p.edge = Edge::activate;
  } else if (edge == "deactivate") {
    p.edge = Edge::deactivate;
  } else {
    n.bad("edge", "expected activate or deactivate");
  }
  p.rise = n.number("rise", 0.0);
  p.baseline_window = seconds_key(n, "baseline_window_s", p.baseline_window);
  return p;
}

inline AdlRule read_rule(const ConfigNode& n) {
  n.allow({"name", "produces", "trigger", "supporting", "absence", "max_gap_s", "min_duration_s", "max_duration_s",
           "start_window", "within", "support_side", "min_support", "extend_with_support"});
  AdlRule r;
  r.name = n.text("name");
  r.produces = n.guard("produces", [&] { return adl_kind_from_string(n.text("produces")); });
  r.trigger = read_predicate(n.table("trigger"));
  if (n.has("supporting")) {
    for (const auto& p : n.tables("supporting")) r.supporting.push_back(read_predicate(p));
  }
  if (n.has("absence")) {
    for (const auto& p : n.tables("absence")) r.absence.push_back(read_predicate(p));
  }
  r.max_gap = seconds_key(n, "max_gap_s", r.max_gap);
  r.min_duration = seconds_key(n, "min_duration_s", r.min_duration);
  r.max_duration = seconds_key(n, "max_duration_s", r.max_duration);
  if (n.has("start_window")) r.start_window = clock_range(n, "start_window");
  if (n.has("within")) r.within = n.guard("within", [&] { return adl_kind_from_string(n.text("within")); });
  const std::string side = n.text("support_side", "both");
  if (side == "both") {
    r.support_side = SupportSide::both;
  } else if (side == "before") {
    r.support_side = SupportSide::before;
  } else if (side == "after") {
    r.support_side = SupportSide::after;
  } else {
    n.bad("support_side", "expected both, before or after");
  }
  r.min_support = static_cast<int>(n.integer("min_support", 0));
  r.extend_with_support = n.boolean("extend_with_support", true);
  return r;
}

inline SensorInfo read_sensor(const ConfigNode& n) {
  n.allow({"id", "kind", "room", "x", "y"});
  SensorInfo s;
  s.id = n.text("id");
  s.kind = n.guard("kind", [&] { return sensor_kind_from_string(n.text("kind")); });
  s.room = n.text("room");
  s.x = n.number("x", 0.0);
  s.y = n.number("y", 0.0);
  return s;
}

inline double block_start(const ConfigNode& n) {
  const auto& v = n.raw().at("start");
  if (v.is_number()) return v.get<double>();
  return n.guard("start", [&] { return minutes_after_noon(n.text("start")); });
}

inline Scenario read_scenario(const ConfigNode& n, const HomeLayout& layout) {
  n.allow({"name", "base", "seed", "days", "start_date", "walk_speed", "walk_speed_sigma", "motion_hold_s",
           "poll_interval_s", "humidity_base", "humidity_noise", "shower_humidity_rise", "power_base", "power_noise",
           "stove_watts", "night_motion", "blocks", "drift"});
  Scenario s;
  if (n.has("base")) {
    const std::string base = n.text("base");
    bool found = false;
    for (const auto& b : builtin_scenarios()) {
      if (b.name == base) {
        s = b;
        found = true;
      }
    }
    if (!found) n.bad("base", "unknown built-in scenario '" + base + "'");
  }
  s.name = n.text("name");
  s.home_layout = layout;
  s.seed = static_cast<std::uint64_t>(n.integer("seed", static_cast<std::int64_t>(s.seed)));
  s.days = static_cast<int>(n.integer("days", s.days));
  if (n.has("start_date")) s.start_date = n.guard("start_date", [&] { return parse_date(n.text("start_date")); });
  s.walk_speed = n.number("walk_speed", s.walk_speed);
  s.walk_speed_sigma = n.number("walk_speed_sigma", s.walk_speed_sigma);
  s.motion_hold_s = n.number("motion_hold_s", s.motion_hold_s);
  s.poll_interval_s = n.number("poll_interval_s", s.poll_interval_s);
  s.humidity_base = n.number("humidity_base", s.humidity_base);
  s.humidity_noise = n.number("humidity_noise", s.humidity_noise);
  s.shower_humidity_rise = n.number("shower_humidity_rise", s.shower_humidity_rise);
  s.power_base = n.number("power_base", s.power_base);
  s.power_noise = n.number("power_noise", s.power_noise);
  s.stove_watts = n.number("stove_watts", s.stove_watts);
  s.night_motion = static_cast<int>(n.integer("night_motion", s.night_motion));
  if (n.has("blocks")) {
    s.day_templates.clear();
    for (const auto& b : n.tables("blocks")) {
      b.allow({"name", "activity", "start", "start_sigma", "duration", "duration_sigma", "probability", "count",
               "spread", "during_sleep"});
      ActivityBlock blk;
      blk.name = b.text("name");
      blk.activity = b.guard("activity", [&] { return sim_activity_from_string(b.text("activity")); });
      blk.start = block_start(b);
      blk.start_sigma = b.number("start_sigma", 0.0);
      blk.duration = b.number("duration");
      blk.duration_sigma = b.number("duration_sigma", 0.0);
      blk.probability = b.number("probability", 1.0);
      blk.count = b.number("count", 1.0);
      blk.spread = b.number("spread", 0.0);
      blk.during_sleep = b.boolean("during_sleep", false);
      s.day_templates.push_back(std::move(blk));
    }
  }
  if (n.has("drift")) {
    s.drift.clear();
    for (const auto& d : n.tables("drift")) {
      d.allow({"block", "field", "per_day", "from_day"});
      Drift dr;
      dr.block = d.text("block");
      dr.field = d.guard("field", [&] { return drift_field_from_string(d.text("field")); });
      dr.per_day = d.number("per_day");
      dr.from_day = static_cast<int>(d.integer("from_day", 0));
      s.drift.push_back(std::move(dr));
    }
  }
  return s;
}

inline ServiceResident read_resident(const ConfigNode& n) {
  n.allow({"id", "scenario", "events", "seed", "days", "label", "label_source"});
  ServiceResident r;
  r.id = n.text("id");
  r.scenario = n.text("scenario", "");
  r.events = n.text("events", "");
  if (n.has("seed")) r.seed = static_cast<std::uint64_t>(n.integer("seed"));
  if (n.has("days")) r.days = static_cast<int>(n.integer("days"));
  r.label = n.guard("label", [&] { return case_label_from_string(n.text("label", "unlabelled")); });
  r.label_source = n.text("label_source", "");
  return r;
}

}  // namespace detail

/// Checks the document as a whole; errors name the offending path.
inline void validate(const AppConfig& c) {
  auto at = [](const std::string& path, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Config) throw;
      fail(ErrorCode::Config, path + ": " + e.detail());
    }
  };
  at("schema", [&] { validate(c.schema); });
  if (c.disturbed_threshold < 0) fail(ErrorCode::Config, "profile.disturbed_threshold: must be >= 0");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < c.sensors.size(); ++i) {
    if (!ids.insert(c.sensors[i].id).second) {
      fail(ErrorCode::Config, "sensors[" + std::to_string(i) + "]: duplicate sensor id '" + c.sensors[i].id + "'");
    }
  }
  for (std::size_t i = 0; i < c.rules.size(); ++i) {
    at("rules[" + std::to_string(i) + "] (" + c.rules[i].name + ")", [&] { validate(c.rules[i]); });
  }
  at("rules", [&] { validate_rules(c.rules); });
  if (c.transitions.timeout <= Millis{0}) fail(ErrorCode::Config, "segmentation.transition_timeout_s: must be positive");
  if (c.transitions.gait_min_gap < Millis{0}) fail(ErrorCode::Config, "segmentation.gait_min_gap_s: must be >= 0");
  if (c.wandering.min_transitions < 1) fail(ErrorCode::Config, "segmentation.wander_min_transitions: must be >= 1");
  if (c.wandering.max_gap <= Millis{0}) fail(ErrorCode::Config, "segmentation.wander_max_gap_s: must be positive");

  for (const auto& [name, w] : c.similarity.weights) {
    if (!c.schema.find(name)) fail(ErrorCode::Config, "similarity.weights." + name + ": not a schema feature");
  }
  at("similarity", [&] { validate(c.similarity, c.schema); });
  if (c.trend_window < 1) fail(ErrorCode::Config, "similarity.trend_window: must be >= 1");
  if (!(c.trend_threshold >= 0.0 && c.trend_threshold <= 1.0)) {
    fail(ErrorCode::Config, "similarity.trend_threshold: must be in [0,1]");
  }

  for (std::size_t i = 0; i < c.factors.size(); ++i) {
    const auto& f = c.factors[i];
    const std::string path = "risk.factors[" + std::to_string(i) + "] (" + std::string(to_string(f.factor)) + ")";
    at(path, [&] { validate(f); });
    const FeatureSpec* spec = c.schema.find(f.source_feature);
    if (!spec) fail(ErrorCode::Config, path + ": source feature '" + f.source_feature + "' is not in the schema");
  }
  at("risk.factors", [&] { order_configs(c.factors); });
  at("risk.template", [&] { validate(c.risky_template); });

  std::set<std::string> scenario_seen;
  for (std::size_t i = 0; i < c.scenarios.size(); ++i) {
    const std::string path = "simulator.scenarios[" + std::to_string(i) + "]";
    if (!scenario_seen.insert(c.scenarios[i].name).second) {
      fail(ErrorCode::Config, path + ": duplicate scenario '" + c.scenarios[i].name + "'");
    }
    at(path, [&] { validate(c.scenarios[i]); });
  }

  if (c.service.history_days < 1) fail(ErrorCode::Config, "service.history_days: must be >= 1");
  std::set<std::string> residents;
  for (std::size_t i = 0; i < c.service.residents.size(); ++i) {
    const auto& r = c.service.residents[i];
    const std::string path = "service.residents[" + std::to_string(i) + "]";
    if (r.id.empty()) fail(ErrorCode::Config, path + ": empty id");
    if (!residents.insert(r.id).second) fail(ErrorCode::Config, path + ": duplicate resident '" + r.id + "'");
    if (r.scenario.empty() == r.events.empty()) fail(ErrorCode::Config, path + ": give exactly one of scenario or events");
    if (!r.scenario.empty() && !find_scenario(c, r.scenario)) {
      fail(ErrorCode::Config, path + ": unknown scenario '" + r.scenario + "'");
    }
    if (r.days && *r.days < 1) fail(ErrorCode::Config, path + ".days: must be >= 1");
    if (r.label != CaseLabel::unlabelled && r.label_source.empty()) {
      fail(ErrorCode::Config, path + ": labelled residents need a label_source");
    }
  }
}

/// Builds a config from a parsed document; absent sections keep defaults.
inline AppConfig config_from_json(const nlohmann::json& doc) {
  using detail::ConfigNode;
  ConfigNode root(doc, "");
  root.allow({"profile", "schema", "sensors", "segmentation", "rules", "similarity", "risk", "simulator", "service"});
  AppConfig c;

  if (root.has("profile")) {
    auto n = root.table("profile");
    n.allow({"day_start", "disturbed_threshold"});
    if (n.has("day_start")) c.day_start = n.guard("day_start", [&] { return parse_time_of_day(n.text("day_start")); });
    c.disturbed_threshold = static_cast<int>(n.integer("disturbed_threshold", c.disturbed_threshold));
  }
  if (root.has("schema")) {
    auto n = root.table("schema");
    n.allow({"features"});
    c.schema.features.clear();
    for (const auto& f : n.tables("features")) {
      f.allow({"name", "kind", "range"});
      FeatureSpec spec;
      spec.name = f.text("name");
      spec.kind = f.guard("kind", [&] { return feature_kind_from_string(f.text("kind")); });
      if (f.has("range")) {
        auto r = f.numbers("range");
        if (r.size() != 2) f.bad("range", "expected [min, max]");
        spec.range_hint = ValueRange{r[0], r[1]};
      }
      c.schema.features.push_back(std::move(spec));
    }
  }
  if (root.has("sensors")) {
    c.sensors.clear();
    for (const auto& s : root.tables("sensors")) c.sensors.push_back(detail::read_sensor(s));
  }
  if (root.has("segmentation")) {
    auto n = root.table("segmentation");
    n.allow({"transition_timeout_s", "gait_min_gap_s", "night_window", "wander_min_transitions", "wander_max_gap_s"});
    c.transitions.timeout = detail::seconds_key(n, "transition_timeout_s", c.transitions.timeout);
    c.transitions.gait_min_gap = detail::seconds_key(n, "gait_min_gap_s", c.transitions.gait_min_gap);
    if (n.has("night_window")) c.wandering.night_window = detail::clock_range(n, "night_window");
    c.wandering.min_transitions = static_cast<int>(n.integer("wander_min_transitions", c.wandering.min_transitions));
    c.wandering.max_gap = detail::seconds_key(n, "wander_max_gap_s", c.wandering.max_gap);
  }
  if (root.has("rules")) {
    c.rules.clear();
    for (const auto& r : root.tables("rules")) c.rules.push_back(detail::read_rule(r));
  }
  if (root.has("similarity")) {
    auto n = root.table("similarity");
    n.allow({"null_similarity", "k", "trend_window", "trend_threshold", "weights"});
    c.similarity.null_similarity = n.number("null_similarity", c.similarity.null_similarity);
    c.similarity.k = static_cast<int>(n.integer("k", c.similarity.k));
    c.trend_window = static_cast<int>(n.integer("trend_window", c.trend_window));
    c.trend_threshold = n.number("trend_threshold", c.trend_threshold);
    if (n.has("weights")) {
      auto w = n.table("weights");
      c.similarity.weights.clear();
      for (auto it = w.raw().begin(); it != w.raw().end(); ++it) c.similarity.weights[it.key()] = w.number(it.key());
    }
  }
  if (root.has("risk")) {
    auto n = root.table("risk");
    n.allow({"factors", "template"});
    if (n.has("factors")) {
      c.factors.clear();
      for (const auto& f : n.tables("factors")) {
        f.allow({"factor", "source_feature", "lower", "upper", "direction"});
        FactorConfig fc;
        fc.factor = f.guard("factor", [&] { return risk_factor_from_string(f.text("factor")); });
        fc.source_feature = f.text("source_feature");
        fc.lower = f.number("lower");
        fc.upper = f.number("upper");
        fc.direction = f.guard("direction", [&] { return risk_direction_from_string(f.text("direction")); });
        c.factors.push_back(std::move(fc));
      }
    }
    if (n.has("template")) {
      auto t = n.table("template");
      t.allow({"scores", "provenance", "strict"});
      if (t.has("scores")) {
        auto s = t.table("scores");
        for (auto it = s.raw().begin(); it != s.raw().end(); ++it) {
          auto f = parse_risk_factor(it.key());
          if (!f) s.bad(it.key(), "not a risk factor");
          c.risky_template.scores[index_of(*f)] = s.number(it.key());
        }
      }
      c.risky_template.provenance = t.text("provenance", c.risky_template.provenance);
      c.risky_template.strict = t.boolean("strict", c.risky_template.strict);
    }
  }
  if (root.has("simulator")) {
    auto n = root.table("simulator");
    n.allow({"doors", "scenarios"});
    if (n.has("doors")) {
      c.doors.clear();
      const auto& arr = n.raw().at("doors");
      if (!arr.is_array()) n.bad("doors", "expected an array of [room, room] pairs");
      for (const auto& d : arr) {
        if (!d.is_array() || d.size() != 2 || !d[0].is_string() || !d[1].is_string()) {
          n.bad("doors", "expected an array of [room, room] pairs");
        }
        c.doors.emplace_back(d[0].get<std::string>(), d[1].get<std::string>());
      }
    }
    if (n.has("scenarios")) {
      const HomeLayout layout = c.home_layout();
      for (const auto& s : n.tables("scenarios")) c.scenarios.push_back(detail::read_scenario(s, layout));
    }
  }
  if (root.has("service")) {
    auto n = root.table("service");
    n.allow({"listen", "cors", "history_days", "casebase", "residents"});
    c.service.listen = n.text("listen", c.service.listen);
    c.service.cors = n.boolean("cors", c.service.cors);
    c.service.history_days = static_cast<int>(n.integer("history_days", c.service.history_days));
    c.service.casebase = n.text("casebase", c.service.casebase);
    if (n.has("residents")) {
      c.service.residents.clear();
      for (const auto& r : n.tables("residents")) c.service.residents.push_back(detail::read_resident(r));
    }
  }
  validate(c);
  return c;
}

inline AppConfig parse_config_toml(std::string_view text, const std::string& source = "config") {
  toml::table table;
  try {
    table = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    fail(ErrorCode::Config, source + ":" + std::to_string(where.line) + ":" + std::to_string(where.column) + ": " +
                                std::string(e.description()));
  }
  return config_from_json(detail::toml_to_json(table));
}

/// Reads a TOML document, or JSON when the file name ends in ".json".
inline AppConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Config, "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::Config, path + ": " + e.what());
    }
    return config_from_json(doc);
  }
  return parse_config_toml(text, path);
}

}  // namespace adlsense
