#pragma once

#include "adlsense/error.hpp"
#include "adlsense/time.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace adlsense {

enum class SensorKind { motion, contact, pressure, power, float_switch, humidity };

inline constexpr std::array<SensorKind, 6> kAllSensorKinds = {SensorKind::motion,   SensorKind::contact,
                                                              SensorKind::pressure, SensorKind::power,
                                                              SensorKind::float_switch, SensorKind::humidity};

inline std::string_view to_string(SensorKind kind) {
  switch (kind) {
    case SensorKind::motion: return "motion";
    case SensorKind::contact: return "contact";
    case SensorKind::pressure: return "pressure";
    case SensorKind::power: return "power";
    case SensorKind::float_switch: return "float";
    case SensorKind::humidity: return "humidity";
  }
  return "?";
}

inline SensorKind sensor_kind_from_string(std::string_view token) {
  for (SensorKind k : kAllSensorKinds) {
    if (to_string(k) == token) return k;
  }
  fail(ErrorCode::UnknownKind, "unknown sensor kind '" + std::string(token) + "'");
}

/// motion, contact, pressure and float sensors report 0/1 edges; power and
/// humidity report continuous readings.
inline bool is_binary(SensorKind kind) {
  return kind != SensorKind::power && kind != SensorKind::humidity;
}

struct SensorEvent {
  std::string sensor_id;
  SensorKind kind = SensorKind::motion;
  Instant timestamp{};
  double value = 0.0;
  std::string location;

  bool is_activation() const { return is_binary(kind) && value == 1.0; }
  bool is_deactivation() const { return is_binary(kind) && value == 0.0; }

  bool operator==(const SensorEvent&) const = default;
};

inline void validate(const SensorEvent& e) {
  if (e.sensor_id.empty()) fail(ErrorCode::MalformedLine, "empty sensor id");
  if (!std::isfinite(e.value)) fail(ErrorCode::BadValue, "non-finite value for " + e.sensor_id);
  if (is_binary(e.kind)) {
    if (e.value != 0.0 && e.value != 1.0) {
      fail(ErrorCode::BadValue, "binary sensor " + e.sensor_id + " must report 0 or 1");
    }
  } else if (e.value < 0.0) {
    fail(ErrorCode::BadValue, "continuous sensor " + e.sensor_id + " reported a negative value");
  }
}

/// Events of one resident, sorted by (timestamp, sensor_id). `window` is set
/// when the stream was cut to a day; open binary states close at its end.
struct EventStream {
  std::string resident_id;
  std::vector<SensorEvent> events;
  std::optional<TimeWindow> window;

  bool operator==(const EventStream&) const = default;
};

inline bool event_order(const SensorEvent& a, const SensorEvent& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.sensor_id < b.sensor_id;
}

inline EventStream make_stream(std::string resident_id, std::vector<SensorEvent> events) {
  std::stable_sort(events.begin(), events.end(), event_order);
  return EventStream{std::move(resident_id), std::move(events), std::nullopt};
}

inline SensorEvent parse_event_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::MalformedLine, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::MalformedLine, "event line is not a JSON object");
  auto field = [&](const char* name) -> const nlohmann::json& {
    auto it = j.find(name);
    if (it == j.end()) fail(ErrorCode::MalformedLine, std::string("missing field '") + name + "'");
    return *it;
  };
  const auto& sensor = field("sensor");
  const auto& kind = field("kind");
  const auto& ts = field("ts");
  const auto& value = field("value");
  const auto& location = field("location");
  if (!sensor.is_string() || !kind.is_string() || !ts.is_string() || !location.is_string()) {
    fail(ErrorCode::MalformedLine, "sensor, kind, ts and location must be strings");
  }
  if (!value.is_number()) fail(ErrorCode::MalformedLine, "value must be a number");

  SensorEvent e;
  e.sensor_id = sensor.get<std::string>();
  e.kind = sensor_kind_from_string(kind.get<std::string>());
  e.timestamp = parse_rfc3339(ts.get<std::string>());
  e.value = value.get<double>();
  e.location = location.get<std::string>();
  validate(e);
  return e;
}

/// Inverse of parse_event_line. Binary values are written as integers.
inline std::string serialize_event_line(const SensorEvent& e) {
  nlohmann::ordered_json j;
  j["sensor"] = e.sensor_id;
  j["kind"] = std::string(to_string(e.kind));
  j["ts"] = format_rfc3339(e.timestamp);
  if (is_binary(e.kind)) {
    j["value"] = static_cast<int>(e.value);
  } else {
    j["value"] = e.value;
  }
  j["location"] = e.location;
  return j.dump();
}

inline void write_events(std::ostream& out, const EventStream& stream) {
  for (const auto& e : stream.events) out << serialize_event_line(e) << '\n';
}

/// Reads a JSONL event file. Blank lines are skipped; parse failures are
/// re-raised with the 1-based line number.
inline EventStream load_stream(const std::string& path, const std::string& resident_id) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open event file '" + path + "'");
  std::vector<SensorEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      events.push_back(parse_event_line(line));
    } catch (const Error& e) {
      throw Error(e.code(), path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (in.bad()) fail(ErrorCode::Io, "read error on '" + path + "'");
  return make_stream(resident_id, std::move(events));
}

inline TimeWindow day_window(Date date, TimeOfDay day_start) {
  Instant begin = at(date, day_start);
  return TimeWindow{begin, begin + std::chrono::hours(24)};
}

/// The profile day a timestamp belongs to: the date whose window
/// [date + day_start, +24h) contains it.
inline Date profile_date(Instant t, TimeOfDay day_start) {
  auto shifted = t - day_start.since_midnight;
  return Date{std::chrono::floor<std::chrono::days>(shifted)};
}

inline EventStream slice_day(const EventStream& stream, Date date, TimeOfDay day_start) {
  TimeWindow w = day_window(date, day_start);
  auto lo = std::lower_bound(stream.events.begin(), stream.events.end(), w.begin,
                             [](const SensorEvent& e, Instant t) { return e.timestamp < t; });
  auto hi = std::lower_bound(lo, stream.events.end(), w.end,
                             [](const SensorEvent& e, Instant t) { return e.timestamp < t; });
  return EventStream{stream.resident_id, std::vector<SensorEvent>(lo, hi), w};
}

/// Profile dates touched by at least one event, ascending.
inline std::vector<Date> covered_dates(const EventStream& stream, TimeOfDay day_start) {
  std::vector<Date> dates;
  for (const auto& e : stream.events) {
    Date d = profile_date(e.timestamp, day_start);
    if (dates.empty() || dates.back() != d) dates.push_back(d);
  }
  return dates;
}

}  // namespace adlsense
