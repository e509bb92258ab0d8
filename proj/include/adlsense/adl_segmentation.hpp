#pragma once

#include "adlsense/error.hpp"
#include "adlsense/event_model.hpp"
#include "adlsense/time.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adlsense {

enum class AdlKind {
  sleep,
  bed_exit,
  shower,
  cooking,
  eating_drinking,
  toileting,
  grooming,
  sitting,
  room_transition,
  wandering,
  active_movement,
};

inline constexpr std::array<AdlKind, 11> kAllAdlKinds = {
    AdlKind::sleep,     AdlKind::bed_exit,        AdlKind::shower,    AdlKind::cooking,
    AdlKind::eating_drinking, AdlKind::toileting, AdlKind::grooming,  AdlKind::sitting,
    AdlKind::room_transition, AdlKind::wandering, AdlKind::active_movement};

inline std::string_view to_string(AdlKind kind) {
  switch (kind) {
    case AdlKind::sleep: return "sleep";
    case AdlKind::bed_exit: return "bed_exit";
    case AdlKind::shower: return "shower";
    case AdlKind::cooking: return "cooking";
    case AdlKind::eating_drinking: return "eating_drinking";
    case AdlKind::toileting: return "toileting";
    case AdlKind::grooming: return "grooming";
    case AdlKind::sitting: return "sitting";
    case AdlKind::room_transition: return "room_transition";
    case AdlKind::wandering: return "wandering";
    case AdlKind::active_movement: return "active_movement";
  }
  return "?";
}

inline AdlKind adl_kind_from_string(std::string_view token) {
  for (AdlKind k : kAllAdlKinds) {
    if (to_string(k) == token) return k;
  }
  fail(ErrorCode::Validation, "unknown ADL kind '" + std::string(token) + "'");
}

enum class Edge { activate, deactivate };
enum class SupportSide { both, before, after };

inline std::string_view to_string(Edge e) { return e == Edge::activate ? "activate" : "deactivate"; }
inline std::string_view to_string(SupportSide s) {
  switch (s) {
    case SupportSide::both: return "both";
    case SupportSide::before: return "before";
    case SupportSide::after: return "after";
  }
  return "?";
}

/// Selects sensors by kind, room and id prefix. For binary kinds `edge`
/// picks which transition fires the predicate; continuous kinds fire when a
/// reading rises `rise` units above the minimum of the trailing
/// `baseline_window`, and stay up until they fall below 80 % of that rise.
struct SensorPredicate {
  std::optional<SensorKind> kind;
  std::vector<std::string> locations;
  std::string sensor_prefix;
  Edge edge = Edge::activate;
  double rise = 0.0;
  Millis baseline_window = std::chrono::minutes(10);

  bool matches_sensor(const SensorEvent& e) const {
    if (kind && e.kind != *kind) return false;
    if (!locations.empty() && std::find(locations.begin(), locations.end(), e.location) == locations.end()) {
      return false;
    }
    return sensor_prefix.empty() || e.sensor_id.compare(0, sensor_prefix.size(), sensor_prefix) == 0;
  }

  bool continuous() const { return kind && !is_binary(*kind); }

  bool operator==(const SensorPredicate&) const = default;
};

inline constexpr double kHysteresisFraction = 0.8;

struct AdlRule {
  std::string name;
  AdlKind produces = AdlKind::active_movement;
  SensorPredicate trigger;
  std::vector<SensorPredicate> supporting;
  /// Seeds closer than this merge; supporting events are looked up this far out.
  Millis max_gap = std::chrono::minutes(1);
  Millis min_duration{0};
  Millis max_duration = std::chrono::hours(24);
  std::vector<SensorPredicate> absence;
  std::optional<TimeOfDayRange> start_window;
  /// Episode must lie inside an episode of this kind (e.g. bed_exit in sleep).
  std::optional<AdlKind> within;
  SupportSide support_side = SupportSide::both;
  int min_support = 0;
  bool extend_with_support = true;

  bool operator==(const AdlRule&) const = default;
};

struct AdlEpisode {
  AdlKind kind = AdlKind::active_movement;
  Instant start{};
  Instant end{};
  std::vector<std::size_t> sources;
  std::map<std::string, double> attributes;
  std::map<std::string, std::string> tags;

  Millis duration() const { return end - start; }
  bool operator==(const AdlEpisode&) const = default;
};

inline bool episode_order(const AdlEpisode& a, const AdlEpisode& b) {
  if (a.start != b.start) return a.start < b.start;
  if (a.kind != b.kind) return a.kind < b.kind;
  return a.end < b.end;
}

inline void validate(const SensorPredicate& p, const std::string& where) {
  if (p.continuous()) {
    if (!(p.rise > 0.0)) fail(ErrorCode::InvalidRule, where + ": continuous predicate needs rise > 0");
    if (p.baseline_window <= Millis{0}) fail(ErrorCode::InvalidRule, where + ": baseline_window must be positive");
  }
}

inline void validate(const AdlRule& rule) {
  const std::string where = "rule '" + rule.name + "'";
  if (!rule.trigger.kind) fail(ErrorCode::InvalidRule, where + ": trigger must name a sensor kind");
  if (rule.min_duration > rule.max_duration) fail(ErrorCode::InvalidRule, where + ": min_duration > max_duration");
  if (rule.max_gap <= Millis{0}) fail(ErrorCode::InvalidRule, where + ": max_gap must be positive");
  if (rule.min_support < 0) fail(ErrorCode::InvalidRule, where + ": min_support must be >= 0");
  if (rule.within && *rule.within == rule.produces) fail(ErrorCode::InvalidRule, where + ": within its own kind");
  validate(rule.trigger, where + " trigger");
  for (const auto& p : rule.supporting) validate(p, where + " supporting");
  for (const auto& p : rule.absence) validate(p, where + " absence");
}

inline void validate_rules(const std::vector<AdlRule>& rules) {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    validate(rules[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (rules[i].produces == rules[j].produces && rules[i].trigger == rules[j].trigger) {
        fail(ErrorCode::RuleConflict, "rules '" + rules[j].name + "' and '" + rules[i].name + "' both produce " +
                                          std::string(to_string(rules[i].produces)) + " from the same trigger");
      }
    }
  }
  for (const auto& r : rules) {
    if (!r.within) continue;
    for (const auto& other : rules) {
      if (other.produces == *r.within && other.within) {
        fail(ErrorCode::InvalidRule, "rule '" + r.name + "' nests inside '" + other.name + "' which is itself nested");
      }
    }
  }
}

/// True when `e` could have been cited by an episode of `rule`.
inline bool rule_accepts_source(const AdlRule& rule, const SensorEvent& e) {
  if (rule.trigger.matches_sensor(e)) return true;
  return std::any_of(rule.supporting.begin(), rule.supporting.end(),
                     [&](const SensorPredicate& p) { return p.matches_sensor(e); });
}

namespace detail {

struct Interval {
  Instant start{};
  Instant end{};
  std::vector<std::size_t> sources;
};

struct Mark {
  Instant at{};
  std::size_t index = 0;
};

inline Instant close_time(const EventStream& stream) {
  if (stream.window) return stream.window->end;
  return stream.events.empty() ? Instant{} : stream.events.back().timestamp;
}

/// State spans of binary sensors: from the chosen edge to the opposite edge
/// of the same sensor. Spans still open at the end close at `close_at`.
inline std::vector<Interval> binary_spans(const EventStream& stream, const SensorPredicate& pred) {
  struct Open {
    bool open = false;
    Instant start{};
    std::vector<std::size_t> sources;
  };
  std::map<std::string, Open> state;
  std::vector<Interval> out;
  const double opening_value = pred.edge == Edge::activate ? 1.0 : 0.0;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const auto& e = stream.events[i];
    if (!is_binary(e.kind) || !pred.matches_sensor(e)) continue;
    Open& s = state[e.sensor_id];
    if (e.value == opening_value) {
      if (!s.open) {
        s.open = true;
        s.start = e.timestamp;
        s.sources = {i};
      } else {
        s.sources.push_back(i);
      }
    } else if (s.open) {
      s.sources.push_back(i);
      if (e.timestamp > s.start) out.push_back({s.start, e.timestamp, std::move(s.sources)});
      s = Open{};
    }
  }
  const Instant close_at = close_time(stream);
  for (auto& [id, s] : state) {
    if (s.open && close_at > s.start) out.push_back({s.start, close_at, std::move(s.sources)});
  }
  std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  return out;
}

/// Hysteresis spans of continuous sensors against a trailing-minimum baseline.
inline std::vector<Interval> level_spans(const EventStream& stream, const SensorPredicate& pred) {
  struct Track {
    std::deque<std::pair<Instant, double>> recent;
    bool on = false;
    double baseline_on = 0.0;
    Instant start{};
    std::vector<std::size_t> sources;
  };
  std::map<std::string, Track> tracks;
  std::vector<Interval> out;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const auto& e = stream.events[i];
    if (is_binary(e.kind) || !pred.matches_sensor(e)) continue;
    Track& t = tracks[e.sensor_id];
    while (!t.recent.empty() && t.recent.front().first < e.timestamp - pred.baseline_window) t.recent.pop_front();
    if (!t.on) {
      if (!t.recent.empty()) {
        double baseline = t.recent.front().second;
        for (const auto& r : t.recent) baseline = std::min(baseline, r.second);
        if (e.value - baseline >= pred.rise) {
          t.on = true;
          t.baseline_on = baseline;
          t.start = e.timestamp;
          t.sources = {i};
        }
      }
    } else {
      t.sources.push_back(i);
      if (e.value < t.baseline_on + kHysteresisFraction * pred.rise) {
        if (e.timestamp > t.start) out.push_back({t.start, e.timestamp, std::move(t.sources)});
        t.on = false;
        t.sources.clear();
      }
    }
    t.recent.emplace_back(e.timestamp, e.value);
  }
  const Instant close_at = close_time(stream);
  for (auto& [id, t] : tracks) {
    if (t.on && close_at > t.start) out.push_back({t.start, close_at, std::move(t.sources)});
  }
  std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  return out;
}

/// Instants at which a predicate fires: matching edges for binary sensors,
/// rise crossings for continuous ones.
inline std::vector<Mark> marks(const EventStream& stream, const SensorPredicate& pred) {
  std::vector<Mark> out;
  if (pred.continuous()) {
    for (const auto& span : level_spans(stream, pred)) out.push_back({span.start, span.sources.front()});
    std::sort(out.begin(), out.end(), [](const Mark& a, const Mark& b) { return a.at < b.at; });
    return out;
  }
  const double fire_value = pred.edge == Edge::activate ? 1.0 : 0.0;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const auto& e = stream.events[i];
    if (is_binary(e.kind) && pred.matches_sensor(e) && e.value == fire_value) out.push_back({e.timestamp, i});
  }
  return out;
}

/// Precomputed firing pattern of one absence predicate.
struct Veto {
  bool continuous = false;
  std::vector<Interval> spans;
  std::vector<Mark> points;

  Veto(const EventStream& stream, const SensorPredicate& pred) : continuous(pred.continuous()) {
    if (continuous) {
      spans = level_spans(stream, pred);
    } else {
      points = marks(stream, pred);
    }
  }

  bool fires_during(Instant start, Instant end) const {
    if (continuous) {
      return std::any_of(spans.begin(), spans.end(),
                         [&](const Interval& s) { return s.start < end && s.end > start; });
    }
    return std::any_of(points.begin(), points.end(), [&](const Mark& m) { return m.at >= start && m.at <= end; });
  }
};

inline void merge_sources(std::vector<std::size_t>& into, const std::vector<std::size_t>& from) {
  into.insert(into.end(), from.begin(), from.end());
  std::sort(into.begin(), into.end());
  into.erase(std::unique(into.begin(), into.end()), into.end());
}

inline std::vector<AdlEpisode> apply_rule(const EventStream& stream, const AdlRule& rule) {
  std::vector<Interval> seeds =
      rule.trigger.continuous() ? level_spans(stream, rule.trigger) : binary_spans(stream, rule.trigger);
  if (seeds.empty()) return {};

  std::vector<Interval> clusters;
  for (auto& s : seeds) {
    if (!clusters.empty() && s.start - clusters.back().end <= rule.max_gap) {
      auto& c = clusters.back();
      c.end = std::max(c.end, s.end);
      merge_sources(c.sources, s.sources);
    } else {
      std::sort(s.sources.begin(), s.sources.end());
      clusters.push_back(std::move(s));
    }
  }

  std::vector<std::vector<Mark>> support_marks;
  for (const auto& p : rule.supporting) support_marks.push_back(marks(stream, p));

  std::vector<Veto> vetoes;
  for (const auto& p : rule.absence) vetoes.emplace_back(stream, p);

  std::vector<AdlEpisode> out;
  for (auto& c : clusters) {
    Instant lo = c.start - (rule.support_side == SupportSide::after ? Millis{0} : rule.max_gap);
    Instant hi = c.end + (rule.support_side == SupportSide::before ? Millis{0} : rule.max_gap);
    std::vector<Mark> found;
    for (const auto& ms : support_marks) {
      for (const auto& m : ms) {
        if (m.at >= lo && m.at <= hi) found.push_back(m);
      }
    }
    if (static_cast<int>(found.size()) < rule.min_support) continue;

    AdlEpisode ep;
    ep.kind = rule.produces;
    ep.start = c.start;
    ep.end = c.end;
    ep.sources = c.sources;
    for (const auto& m : found) {
      if (rule.extend_with_support) {
        ep.start = std::min(ep.start, m.at);
        ep.end = std::max(ep.end, m.at);
      }
      ep.sources.push_back(m.index);
    }
    std::sort(ep.sources.begin(), ep.sources.end());
    ep.sources.erase(std::unique(ep.sources.begin(), ep.sources.end()), ep.sources.end());

    const Millis d = ep.duration();
    if (d <= Millis{0} || d < rule.min_duration || d > rule.max_duration) continue;
    if (rule.start_window && !rule.start_window->contains(time_of_day(ep.start))) continue;
    bool vetoed = std::any_of(vetoes.begin(), vetoes.end(),
                              [&](const Veto& v) { return v.fires_during(ep.start, ep.end); });
    if (vetoed) continue;
    out.push_back(std::move(ep));
  }
  return out;
}

/// Merges overlapping episodes of the same kind; touching ones stay apart.
inline std::vector<AdlEpisode> merge_same_kind(std::vector<AdlEpisode> episodes) {
  std::stable_sort(episodes.begin(), episodes.end(), [](const AdlEpisode& a, const AdlEpisode& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  std::vector<AdlEpisode> out;
  for (auto& ep : episodes) {
    if (!out.empty() && out.back().kind == ep.kind && ep.start < out.back().end) {
      auto& cur = out.back();
      cur.end = std::max(cur.end, ep.end);
      merge_sources(cur.sources, ep.sources);
      for (const auto& [k, v] : ep.attributes) cur.attributes.emplace(k, v);
      for (const auto& [k, v] : ep.tags) cur.tags.emplace(k, v);
    } else {
      out.push_back(std::move(ep));
    }
  }
  std::sort(out.begin(), out.end(), episode_order);
  return out;
}

}  // namespace detail

/// Rule-driven episode recognition over one stream (usually one profile day).
/// Rules carrying `within` are evaluated after the rest, against the merged
/// episodes of their container kind.
inline std::vector<AdlEpisode> segment(const EventStream& stream, const std::vector<AdlRule>& rules) {
  validate_rules(rules);
  std::vector<AdlEpisode> first;
  for (const auto& rule : rules) {
    if (rule.within) continue;
    auto eps = detail::apply_rule(stream, rule);
    first.insert(first.end(), std::make_move_iterator(eps.begin()), std::make_move_iterator(eps.end()));
  }
  first = detail::merge_same_kind(std::move(first));

  std::vector<AdlEpisode> nested;
  for (const auto& rule : rules) {
    if (!rule.within) continue;
    for (auto& ep : detail::apply_rule(stream, rule)) {
      bool inside = std::any_of(first.begin(), first.end(), [&](const AdlEpisode& c) {
        return c.kind == *rule.within && c.start <= ep.start && ep.end <= c.end;
      });
      if (inside) nested.push_back(std::move(ep));
    }
  }
  nested = detail::merge_same_kind(std::move(nested));
  first.insert(first.end(), std::make_move_iterator(nested.begin()), std::make_move_iterator(nested.end()));
  return detail::merge_same_kind(std::move(first));
}

struct SensorPlacement {
  std::string room;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const SensorPlacement&) const = default;
};

using SensorGeometry = std::map<std::string, SensorPlacement>;

struct TransitionOptions {
  Millis timeout = std::chrono::seconds(60);
  Millis gait_min_gap = Millis(500);
  bool operator==(const TransitionOptions&) const = default;
};

/// One room_transition per consecutive pair of motion activations in
/// different rooms no more than `timeout` apart. gait_speed (m/s) is the
/// straight-line sensor distance over the gap, omitted for gaps under
/// `gait_min_gap`.
inline std::vector<AdlEpisode> detect_room_transitions(const EventStream& stream, const SensorGeometry& geometry,
                                                       const TransitionOptions& opts = {}) {
  std::vector<AdlEpisode> out;
  std::optional<std::size_t> prev;
  const SensorPlacement* prev_place = nullptr;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const auto& e = stream.events[i];
    if (e.kind != SensorKind::motion) continue;
    auto it = geometry.find(e.sensor_id);
    if (it == geometry.end()) fail(ErrorCode::UnknownSensor, "motion sensor '" + e.sensor_id + "' has no geometry");
    if (!e.is_activation()) continue;
    const SensorPlacement& place = it->second;
    if (prev && prev_place->room != place.room) {
      const auto& p = stream.events[*prev];
      const Millis gap = e.timestamp - p.timestamp;
      if (gap <= opts.timeout) {
        AdlEpisode ep;
        ep.kind = AdlKind::room_transition;
        ep.start = p.timestamp;
        ep.end = gap > Millis{0} ? e.timestamp : p.timestamp + Millis{1};
        ep.sources = {*prev, i};
        ep.tags = {{"from", prev_place->room}, {"to", place.room}};
        if (gap >= opts.gait_min_gap) {
          ep.attributes["gait_speed"] = std::hypot(place.x - prev_place->x, place.y - prev_place->y) / to_seconds(gap);
        }
        out.push_back(std::move(ep));
      }
    }
    prev = i;
    prev_place = &place;
  }
  return out;
}

struct WanderingOptions {
  TimeOfDayRange night_window{TimeOfDay::hm(22, 0), TimeOfDay::hm(6, 0)};
  int min_transitions = 4;
  Millis max_gap = std::chrono::minutes(10);
  bool operator==(const WanderingOptions&) const = default;
};

/// Maximal runs of night-time transitions (consecutive gaps <= max_gap) with
/// at least `min_transitions` members whose room sequence revisits a room.
inline std::vector<AdlEpisode> detect_wandering(const std::vector<AdlEpisode>& transitions,
                                                const WanderingOptions& opts = {}) {
  std::vector<const AdlEpisode*> night;
  for (const auto& t : transitions) {
    if (t.kind == AdlKind::room_transition && opts.night_window.contains(time_of_day(t.start))) night.push_back(&t);
  }
  std::vector<AdlEpisode> out;
  auto flush = [&](std::size_t begin, std::size_t end) {
    if (static_cast<int>(end - begin) < opts.min_transitions) return;
    std::vector<std::string> rooms;
    auto room = [](const AdlEpisode& ep, const char* key) {
      auto it = ep.tags.find(key);
      return it == ep.tags.end() ? std::string{} : it->second;
    };
    rooms.push_back(room(*night[begin], "from"));
    for (std::size_t i = begin; i < end; ++i) rooms.push_back(room(*night[i], "to"));
    std::vector<std::string> sorted = rooms;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) return;
    AdlEpisode ep;
    ep.kind = AdlKind::wandering;
    ep.start = night[begin]->start;
    ep.end = night[begin]->end;
    for (std::size_t i = begin; i < end; ++i) {
      ep.end = std::max(ep.end, night[i]->end);
      detail::merge_sources(ep.sources, night[i]->sources);
    }
    ep.attributes["transitions"] = static_cast<double>(end - begin);
    out.push_back(std::move(ep));
  };
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= night.size(); ++i) {
    if (i == night.size() || night[i]->start - night[i - 1]->end > opts.max_gap) {
      if (i > run_start) flush(run_start, i);
      run_start = i;
    }
  }
  return out;
}

struct SegmentationConfig {
  std::vector<AdlRule> rules;
  SensorGeometry geometry;
  TransitionOptions transitions;
  WanderingOptions wandering;
  bool operator==(const SegmentationConfig&) const = default;
};

/// Everything recognised in one day: rule episodes, room transitions and
/// wandering, sorted by (start, kind, end).
inline std::vector<AdlEpisode> segment_day(const EventStream& stream, const SegmentationConfig& cfg) {
  std::vector<AdlEpisode> all = segment(stream, cfg.rules);
  auto transitions = detect_room_transitions(stream, cfg.geometry, cfg.transitions);
  auto wandering = detect_wandering(transitions, cfg.wandering);
  all.insert(all.end(), transitions.begin(), transitions.end());
  all.insert(all.end(), wandering.begin(), wandering.end());
  std::stable_sort(all.begin(), all.end(), episode_order);
  return all;
}

/// Stock rule set. Sensor ids follow the "<role>.<place>" convention used by
/// the simulated homes (bed.pressure, chair.pressure, ...).
inline std::vector<AdlRule> default_rules() {
  using namespace std::chrono_literals;
  using K = SensorKind;
  auto pred = [](std::optional<SensorKind> kind, std::vector<std::string> rooms = {}, std::string prefix = "") {
    SensorPredicate p;
    p.kind = kind;
    p.locations = std::move(rooms);
    p.sensor_prefix = std::move(prefix);
    return p;
  };
  auto level = [&](SensorKind kind, std::string room, double rise) {
    SensorPredicate p = pred(kind, {std::move(room)});
    p.rise = rise;
    return p;
  };
  std::vector<AdlRule> rules;

  AdlRule sleep;
  sleep.name = "sleep";
  sleep.produces = AdlKind::sleep;
  sleep.trigger = pred(K::pressure, {}, "bed");
  sleep.max_gap = 10min;
  sleep.min_duration = 3h;
  sleep.max_duration = 16h;
  sleep.start_window = TimeOfDayRange{TimeOfDay::hm(20, 0), TimeOfDay::hm(11, 0)};
  rules.push_back(sleep);

  AdlRule bed_exit;
  bed_exit.name = "bed_exit";
  bed_exit.produces = AdlKind::bed_exit;
  bed_exit.trigger = pred(K::pressure, {}, "bed");
  bed_exit.trigger.edge = Edge::deactivate;
  bed_exit.supporting = {pred(K::motion)};
  bed_exit.max_gap = 1min;
  bed_exit.max_duration = 10min;
  bed_exit.min_support = 1;
  bed_exit.extend_with_support = false;
  bed_exit.within = AdlKind::sleep;
  rules.push_back(bed_exit);

  AdlRule shower;
  shower.name = "shower";
  shower.produces = AdlKind::shower;
  shower.trigger = level(K::humidity, "bathroom", 15.0);
  shower.max_gap = 1min;
  shower.min_duration = 5min;
  shower.max_duration = 60min;
  rules.push_back(shower);

  AdlRule cooking;
  cooking.name = "cooking";
  cooking.produces = AdlKind::cooking;
  cooking.trigger = level(K::power, "kitchen", 500.0);
  cooking.supporting = {pred(K::motion, {"kitchen"})};
  cooking.max_gap = 20min;
  cooking.min_support = 1;
  cooking.min_duration = 5min;
  cooking.max_duration = 3h;
  rules.push_back(cooking);

  AdlRule toileting;
  toileting.name = "toileting";
  toileting.produces = AdlKind::toileting;
  toileting.trigger = pred(K::float_switch);
  toileting.supporting = {pred(K::motion, {"bathroom"})};
  toileting.max_gap = 2min;
  rules.push_back(toileting);

  AdlRule sitting;
  sitting.name = "sitting";
  sitting.produces = AdlKind::sitting;
  sitting.trigger = pred(K::pressure, {}, "chair");
  sitting.max_gap = 30s;
  sitting.min_duration = 2min;
  rules.push_back(sitting);

  AdlRule eating;
  eating.name = "eating_drinking";
  eating.produces = AdlKind::eating_drinking;
  eating.trigger = pred(K::contact, {"kitchen"});
  eating.supporting = {pred(K::motion, {"kitchen", "living"})};
  eating.support_side = SupportSide::after;
  eating.max_gap = 10min;
  eating.min_support = 1;
  eating.max_duration = 30min;
  eating.absence = {level(K::power, "kitchen", 500.0)};
  rules.push_back(eating);

  AdlRule grooming;
  grooming.name = "grooming";
  grooming.produces = AdlKind::grooming;
  grooming.trigger = pred(K::motion, {"bathroom"});
  grooming.max_gap = 3min;
  grooming.min_duration = 2min;
  grooming.max_duration = 30min;
  grooming.absence = {pred(K::float_switch), level(K::humidity, "bathroom", 15.0)};
  rules.push_back(grooming);

  AdlRule active;
  active.name = "active_movement";
  active.produces = AdlKind::active_movement;
  active.trigger = pred(K::motion);
  active.max_gap = 2min;
  rules.push_back(active);
  return rules;
}

inline nlohmann::ordered_json episode_to_json(const AdlEpisode& ep) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(ep.kind));
  j["start"] = format_rfc3339(ep.start);
  j["end"] = format_rfc3339(ep.end);
  j["sources"] = ep.sources;
  j["attributes"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : ep.attributes) j["attributes"][k] = v;
  if (!ep.tags.empty()) {
    j["tags"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : ep.tags) j["tags"][k] = v;
  }
  return j;
}

inline AdlEpisode episode_from_json(const nlohmann::json& j) {
  try {
    AdlEpisode ep;
    ep.kind = adl_kind_from_string(j.at("kind").get<std::string>());
    ep.start = parse_rfc3339(j.at("start").get<std::string>());
    ep.end = parse_rfc3339(j.at("end").get<std::string>());
    ep.sources = j.at("sources").get<std::vector<std::size_t>>();
    ep.attributes = j.at("attributes").get<std::map<std::string, double>>();
    if (j.contains("tags")) ep.tags = j.at("tags").get<std::map<std::string, std::string>>();
    return ep;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedLine, std::string("bad episode record: ") + e.what());
  }
}

}  // namespace adlsense
