#pragma once

#include "adlsense/adl_segmentation.hpp"
#include "adlsense/error.hpp"
#include "adlsense/event_model.hpp"
#include "adlsense/profile_builder.hpp"
#include "adlsense/time.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adlsense {

enum class SimActivity { sleep, toilet, shower, cooking, eating, grooming, sitting, housework, wander };

inline constexpr std::array<SimActivity, 9> kAllSimActivities = {
    SimActivity::sleep,    SimActivity::toilet,  SimActivity::shower,    SimActivity::cooking, SimActivity::eating,
    SimActivity::grooming, SimActivity::sitting, SimActivity::housework, SimActivity::wander};

inline std::string_view to_string(SimActivity a) {
  switch (a) {
    case SimActivity::sleep: return "sleep";
    case SimActivity::toilet: return "toilet";
    case SimActivity::shower: return "shower";
    case SimActivity::cooking: return "cooking";
    case SimActivity::eating: return "eating";
    case SimActivity::grooming: return "grooming";
    case SimActivity::sitting: return "sitting";
    case SimActivity::housework: return "housework";
    case SimActivity::wander: return "wander";
  }
  return "?";
}

inline SimActivity sim_activity_from_string(std::string_view s) {
  for (auto a : kAllSimActivities) {
    if (to_string(a) == s) return a;
  }
  fail(ErrorCode::InvalidScenario, "unknown activity '" + std::string(s) + "'");
}

/// Sensors, doors between rooms, and which sensor plays which part in the
/// activity signatures.
struct HomeLayout {
  std::vector<SensorInfo> sensors;
  std::vector<std::pair<std::string, std::string>> doors;
  std::string home = "living";
  std::string bedroom = "bedroom";
  std::string bathroom = "bathroom";
  std::string kitchen = "kitchen";
  std::string bed = "bed.pressure";
  std::string chair = "chair.pressure";
  std::string flush = "float.toilet";
  std::string humidity = "humidity.bathroom";
  std::string stove = "power.kitchen";
  std::vector<std::string> food_contacts = {"contact.fridge", "contact.cupboard"};
  /// Rooms visited in order by a housework block, starting from home.
  std::vector<std::string> housework_route = {"kitchen", "living", "hall", "living", "bedroom", "living"};
  /// Rooms visited in order by a night-time wander, starting from the bedroom.
  std::vector<std::string> wander_route = {"living", "kitchen", "living", "hall", "living", "bedroom"};

  const SensorInfo* sensor(const std::string& id) const {
    for (const auto& s : sensors) {
      if (s.id == id) return &s;
    }
    return nullptr;
  }

  const SensorInfo* motion_in(const std::string& room) const {
    for (const auto& s : sensors) {
      if (s.kind == SensorKind::motion && s.room == room) return &s;
    }
    return nullptr;
  }

  bool operator==(const HomeLayout&) const = default;
};

/// Five rooms, no hallway hub: every room opens onto the living room and
/// the bathroom is also reachable from the bedroom.
inline HomeLayout default_home_layout() {
  HomeLayout h;
  using K = SensorKind;
  h.sensors = {
      {"motion.living", K::motion, "living", 4, 4},
      {"motion.kitchen", K::motion, "kitchen", 8, 4},
      {"motion.bathroom", K::motion, "bathroom", 4, 0},
      {"motion.bedroom", K::motion, "bedroom", 0, 4},
      {"motion.hall", K::motion, "hall", 4, 8},
      {"bed.pressure", K::pressure, "bedroom", 0, 5},
      {"chair.pressure", K::pressure, "living", 5, 5},
      {"float.toilet", K::float_switch, "bathroom", 5, 0},
      {"humidity.bathroom", K::humidity, "bathroom", 3, 0},
      {"power.kitchen", K::power, "kitchen", 9, 4},
      {"contact.fridge", K::contact, "kitchen", 9, 5},
      {"contact.cupboard", K::contact, "kitchen", 8, 5},
  };
  h.doors = {{"living", "kitchen"}, {"living", "bathroom"}, {"living", "bedroom"}, {"bedroom", "bathroom"},
             {"living", "hall"}};
  return h;
}

/// One recurring piece of the daily routine. Times are minutes after the
/// profile-day start (noon); `count` occurrences are spaced `spread` minutes
/// apart, a fractional count adding one more occurrence with that probability.
struct ActivityBlock {
  std::string name;
  SimActivity activity = SimActivity::toilet;
  double start = 0.0;
  double start_sigma = 0.0;
  double duration = 10.0;
  double duration_sigma = 0.0;
  double probability = 1.0;
  double count = 1.0;
  double spread = 0.0;
  /// Night excursion out of bed (toilet or wander only).
  bool during_sleep = false;
  bool operator==(const ActivityBlock&) const = default;
};

enum class DriftField { count, probability, start, duration, walk_speed };

inline std::string_view to_string(DriftField f) {
  switch (f) {
    case DriftField::count: return "count";
    case DriftField::probability: return "probability";
    case DriftField::start: return "start";
    case DriftField::duration: return "duration";
    case DriftField::walk_speed: return "walk_speed";
  }
  return "?";
}

inline DriftField drift_field_from_string(std::string_view s) {
  for (auto f : {DriftField::count, DriftField::probability, DriftField::start, DriftField::duration,
                 DriftField::walk_speed}) {
    if (to_string(f) == s) return f;
  }
  fail(ErrorCode::InvalidScenario, "unknown drift field '" + std::string(s) + "'");
}

/// Linear per-day change of one template parameter, starting at day
/// `from_day` (0-based).
struct Drift {
  std::string block;
  DriftField field = DriftField::count;
  double per_day = 0.0;
  int from_day = 0;
  bool operator==(const Drift&) const = default;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 1;
  int days = 30;
  Date start_date{std::chrono::year{2023}, std::chrono::month{1}, std::chrono::day{1}};
  HomeLayout home_layout = default_home_layout();
  std::vector<ActivityBlock> day_templates;
  std::vector<Drift> drift;
  double walk_speed = 0.9;
  double walk_speed_sigma = 0.05;
  double motion_hold_s = 10.0;
  double poll_interval_s = 60.0;
  double humidity_base = 50.0;
  double humidity_noise = 0.7;
  double shower_humidity_rise = 30.0;
  double power_base = 150.0;
  double power_noise = 15.0;
  double stove_watts = 1500.0;
  /// Isolated bedroom motion pulses per night while asleep.
  int night_motion = 2;
  bool operator==(const Scenario&) const = default;
};

/// Clock time "HH:MM" as minutes after noon, wrapping past midnight.
inline double minutes_after_noon(std::string_view clock) {
  const auto tod = parse_time_of_day(clock);
  const double m = to_minutes(tod.since_midnight);
  return m >= 720.0 ? m - 720.0 : m + 720.0;
}

inline std::string clock_of_minutes_after_noon(double m) {
  double wall = std::fmod(m + 720.0, 1440.0);
  return format_time_of_day(TimeOfDay{std::chrono::duration_cast<Millis>(std::chrono::duration<double, std::ratio<60>>(wall))});
}

// ---------------------------------------------------------------------------
// Random source: std::mt19937_64 (fully specified by the C++ standard), one
// generator per simulated day seeded with splitmix64(seed + day * golden).
// Uniforms take the top 53 bits; normals use Box-Muller, one draw per call.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Gaussian truncated at +-3 sigma by resampling.
  double jitter(double mean, double sigma) {
    if (sigma <= 0.0) return mean;
    for (;;) {
      const double z = normal();
      if (std::fabs(z) <= 3.0) return mean + sigma * z;
    }
  }

  bool bernoulli(double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return uniform() < p;
  }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t day_seed(std::uint64_t seed, int day) {
  return splitmix64(seed + static_cast<std::uint64_t>(day) * 0x9E3779B97F4A7C15ULL);
}

// ---------------------------------------------------------------------------

inline void validate(const HomeLayout& h) {
  auto bad = [](const std::string& msg) { fail(ErrorCode::InvalidScenario, "home layout: " + msg); };
  std::set<std::string> ids;
  std::set<std::string> rooms;
  for (const auto& s : h.sensors) {
    if (s.id.empty()) bad("sensor with empty id");
    if (!ids.insert(s.id).second) bad("duplicate sensor '" + s.id + "'");
    if (s.kind == SensorKind::motion) rooms.insert(s.room);
  }
  auto need_room = [&](const std::string& r) {
    if (!rooms.count(r)) bad("room '" + r + "' has no motion sensor");
  };
  auto need_sensor = [&](const std::string& id, SensorKind kind) {
    const SensorInfo* s = h.sensor(id);
    if (!s) bad("sensor '" + id + "' is not installed");
    if (s->kind != kind) bad("sensor '" + id + "' must be of kind " + std::string(to_string(kind)));
  };
  for (const auto& r : {h.home, h.bedroom, h.bathroom, h.kitchen}) need_room(r);
  for (const auto& r : h.housework_route) need_room(r);
  for (const auto& r : h.wander_route) need_room(r);
  for (const auto& [a, b] : h.doors) {
    need_room(a);
    need_room(b);
  }
  need_sensor(h.bed, SensorKind::pressure);
  need_sensor(h.chair, SensorKind::pressure);
  need_sensor(h.flush, SensorKind::float_switch);
  need_sensor(h.humidity, SensorKind::humidity);
  need_sensor(h.stove, SensorKind::power);
  if (h.food_contacts.empty()) bad("no food contacts");
  for (const auto& c : h.food_contacts) need_sensor(c, SensorKind::contact);

  std::set<std::string> seen{h.home};
  std::deque<std::string> queue{h.home};
  while (!queue.empty()) {
    std::string r = queue.front();
    queue.pop_front();
    for (const auto& [a, b] : h.doors) {
      const std::string* next = a == r ? &b : (b == r ? &a : nullptr);
      if (next && seen.insert(*next).second) queue.push_back(*next);
    }
  }
  for (const auto& r : rooms) {
    if (!seen.count(r)) bad("room '" + r + "' is not reachable from '" + h.home + "'");
  }
}

namespace detail {

/// Value of a block parameter on a given day after drift.
inline double drifted(const Scenario& sc, const std::string& block, DriftField field, double base, int day) {
  double v = base;
  for (const auto& d : sc.drift) {
    if (d.block == block && d.field == field && day > d.from_day) v += d.per_day * (day - d.from_day);
  }
  return v;
}

inline ActivityBlock block_on_day(const Scenario& sc, const ActivityBlock& b, int day) {
  ActivityBlock out = b;
  out.count = drifted(sc, b.name, DriftField::count, b.count, day);
  out.probability = drifted(sc, b.name, DriftField::probability, b.probability, day);
  out.start = drifted(sc, b.name, DriftField::start, b.start, day);
  out.duration = drifted(sc, b.name, DriftField::duration, b.duration, day);
  return out;
}

}  // namespace detail

inline void validate(const Scenario& sc) {
  auto bad = [&](const std::string& msg) { fail(ErrorCode::InvalidScenario, "scenario '" + sc.name + "': " + msg); };
  if (sc.name.empty()) fail(ErrorCode::InvalidScenario, "scenario without a name");
  if (sc.days < 1) bad("days must be >= 1");
  if (!(sc.walk_speed > 0.0) || sc.walk_speed_sigma < 0.0) bad("walk speed must be positive with sigma >= 0");
  if (!(sc.motion_hold_s > 0.0)) bad("motion_hold_s must be positive");
  if (!(sc.poll_interval_s >= 1.0)) bad("poll_interval_s must be >= 1");
  if (sc.humidity_base < 0 || sc.power_base < 0 || sc.humidity_noise < 0 || sc.power_noise < 0) {
    bad("sensor baselines and noise must be non-negative");
  }
  if (sc.night_motion < 0) bad("night_motion must be >= 0");
  validate(sc.home_layout);

  std::set<std::string> names;
  int sleep_blocks = 0;
  for (const auto& b : sc.day_templates) {
    const std::string where = "block '" + b.name + "': ";
    if (b.name.empty()) bad("block without a name");
    if (!names.insert(b.name).second) bad("duplicate block '" + b.name + "'");
    if (b.start_sigma < 0 || b.duration_sigma < 0) bad(where + "sigma must be >= 0");
    if (b.during_sleep && b.activity != SimActivity::toilet && b.activity != SimActivity::wander) {
      bad(where + "only toilet and wander blocks can happen during sleep");
    }
    if (b.activity == SimActivity::wander && !b.during_sleep) bad(where + "wander blocks must be during_sleep");
    if (b.activity == SimActivity::sleep) ++sleep_blocks;
    for (int day : {0, sc.days - 1}) {
      ActivityBlock d = detail::block_on_day(sc, b, day);
      if (!(d.probability >= 0.0 && d.probability <= 1.0)) bad(where + "probability must stay in [0,1]");
      if (d.count < 0.0) bad(where + "count must stay >= 0");
      if (d.start < 0.0 || d.start >= 1440.0) bad(where + "start must stay within the day");
      if (!(d.duration > 0.0)) bad(where + "duration must stay positive");
      if (b.spread < 0.0) bad(where + "spread must be >= 0");
    }
  }
  if (sleep_blocks > 1) bad("at most one sleep block");
  for (const auto& d : sc.drift) {
    if (d.field == DriftField::walk_speed) {
      if (d.block != "walk_speed") bad("walk_speed drift must target 'walk_speed'");
      const double last = detail::drifted(sc, d.block, DriftField::walk_speed, sc.walk_speed, sc.days - 1);
      if (!(last > 0.0)) bad("walk speed must stay positive");
    } else if (!names.count(d.block)) {
      bad("drift names unknown block '" + d.block + "'");
    }
    if (d.from_day < 0) bad("drift from_day must be >= 0");
  }
}

struct DayTruth {
  Date date{};
  std::vector<AdlEpisode> episodes;
};

struct SimulationResult {
  EventStream stream;
  std::vector<DayTruth> ground_truth;
};

namespace detail {

inline constexpr double kBlockGapS = 12 * 60.0;
inline constexpr double kBedtimeMarginS = 15 * 60.0;
inline constexpr double kWakeMarginS = 10 * 60.0;
inline constexpr double kDayEndMarginS = 10 * 60.0;
inline constexpr double kNightMarginS = 30 * 60.0;
inline constexpr double kExcursionGapS = 30 * 60.0;
inline constexpr double kExcursionMaxS = 9 * 60.0;

/// Builds one profile day of events; times are seconds after the day start.
class DayBuilder {
 public:
  DayBuilder(const Scenario& sc, Instant origin, SimRng& rng, double walk_speed)
      : sc_(sc), home_(sc.home_layout), origin_(origin), rng_(rng), speed_(walk_speed) {}

  Instant at(double s) const { return origin_ + Millis{std::llround(s * 1000.0)}; }

  void binary(const std::string& id, double t, double value) {
    const SensorInfo* s = home_.sensor(id);
    events_.push_back(SensorEvent{s->id, s->kind, at(t), value, s->room});
  }

  void pulse(const std::string& room, double t) { pulses_[room].push_back(t); }

  /// Pulses roughly every `every` seconds while present in a room.
  void presence(const std::string& room, double from, double to, double every) {
    double t = from + every * rng_.uniform(0.6, 1.0);
    while (t < to - sc_.motion_hold_s) {
      pulse(room, t);
      t += every * rng_.uniform(0.6, 1.4);
    }
  }

  std::vector<std::string> path(const std::string& from, const std::string& to) const {
    std::map<std::string, std::string> parent{{from, from}};
    std::deque<std::string> queue{from};
    while (!queue.empty()) {
      std::string r = queue.front();
      queue.pop_front();
      if (r == to) break;
      for (const auto& [a, b] : home_.doors) {
        const std::string* next = a == r ? &b : (b == r ? &a : nullptr);
        if (next && !parent.count(*next)) {
          parent[*next] = r;
          queue.push_back(*next);
        }
      }
    }
    std::vector<std::string> rooms{to};
    while (rooms.back() != from) rooms.push_back(parent.at(rooms.back()));
    std::reverse(rooms.begin(), rooms.end());
    return rooms;
  }

  double step_time(const std::string& a, const std::string& b) const {
    const SensorInfo* p = home_.motion_in(a);
    const SensorInfo* q = home_.motion_in(b);
    return std::hypot(q->x - p->x, q->y - p->y) / speed_;
  }

  double walk_time(const std::string& from, const std::string& to) const {
    auto rooms = path(from, to);
    double t = 0.0;
    for (std::size_t i = 1; i < rooms.size(); ++i) t += step_time(rooms[i - 1], rooms[i]);
    return t;
  }

  /// Departure pulse, then one pulse per room entered. Returns arrival time.
  double walk(const std::string& from, const std::string& to, double t) {
    if (from == to) return t;
    auto rooms = path(from, to);
    pulse(from, t);
    for (std::size_t i = 1; i < rooms.size(); ++i) {
      const double arrive = t + step_time(rooms[i - 1], rooms[i]);
      pulse(rooms[i], arrive);
      AdlEpisode ep;
      ep.kind = AdlKind::room_transition;
      ep.start = at(t);
      ep.end = at(arrive);
      ep.tags = {{"from", rooms[i - 1]}, {"to", rooms[i]}};
      truth_.push_back(std::move(ep));
      transitions_.push_back(truth_.size() - 1);
      t = arrive;
    }
    return t;
  }

  void truth(AdlKind kind, double start, double end) {
    AdlEpisode ep;
    ep.kind = kind;
    ep.start = at(start);
    ep.end = at(end);
    truth_.push_back(std::move(ep));
  }

  void shower_interval(double a, double b) { showers_.emplace_back(a, b); }
  void stove_interval(double a, double b) { stove_.emplace_back(a, b); }

  /// Time a day block needs beyond its nominal duration (walking there and back).
  double overhead(const ActivityBlock& b) const {
    const std::string& h = home_.home;
    switch (b.activity) {
      case SimActivity::toilet:
      case SimActivity::shower:
      case SimActivity::grooming: return 2 * walk_time(h, home_.bathroom) + 130.0;
      case SimActivity::cooking:
      case SimActivity::eating: return 2 * walk_time(h, home_.kitchen) + 10.0;
      case SimActivity::housework: {
        double t = 0.0;
        std::string cur = h;
        for (const auto& r : home_.housework_route) {
          t += walk_time(cur, r);
          cur = r;
        }
        return t + walk_time(cur, h) + 10.0;
      }
      default: return 10.0;
    }
  }

  /// Plays one day block starting at t from home; returns the time back home.
  double day_block(const ActivityBlock& b, double t, double dur) {
    const std::string& h = home_.home;
    switch (b.activity) {
      case SimActivity::toilet: return toilet(h, t, dur);
      case SimActivity::shower: {
        const double a = walk(h, home_.bathroom, t);
        shower_interval(a + 60.0, a + 60.0 + dur);
        const double leave = a + dur + 120.0;
        presence(home_.bathroom, a, leave, 45.0);
        truth(AdlKind::shower, a, leave);
        return walk(home_.bathroom, h, leave);
      }
      case SimActivity::grooming: {
        const double a = walk(h, home_.bathroom, t);
        const double leave = a + dur;
        presence(home_.bathroom, a, leave, 40.0);
        truth(AdlKind::grooming, a, leave);
        return walk(home_.bathroom, h, leave);
      }
      case SimActivity::cooking: {
        const double a = walk(h, home_.kitchen, t);
        const double leave = a + dur;
        presence(home_.kitchen, a, leave, 60.0);
        stove_interval(a + 60.0, leave - 120.0);
        const std::string& c = home_.food_contacts.front();
        binary(c, a + 300.0, 1.0);
        binary(c, a + 320.0, 0.0);
        truth(AdlKind::cooking, a, leave);
        return walk(home_.kitchen, h, leave);
      }
      case SimActivity::eating: {
        const double a = walk(h, home_.kitchen, t);
        const double leave = a + dur;
        const auto& contacts = home_.food_contacts;
        const std::string& c = contacts[static_cast<std::size_t>(rng_.uniform() * contacts.size()) % contacts.size()];
        binary(c, a + 15.0, 1.0);
        binary(c, a + 35.0, 0.0);
        presence(home_.kitchen, a + 35.0, leave, 50.0);
        truth(AdlKind::eating_drinking, a + 15.0, leave);
        return walk(home_.kitchen, h, leave);
      }
      case SimActivity::sitting: {
        pulse(h, t);
        binary(home_.chair, t + 5.0, 1.0);
        binary(home_.chair, t + dur, 0.0);
        presence(h, t + 5.0, t + dur, 600.0);
        pulse(h, t + dur + 3.0);
        truth(AdlKind::sitting, t + 5.0, t + dur);
        return t + dur + 5.0;
      }
      case SimActivity::housework: {
        const double dwell = dur / static_cast<double>(std::max<std::size_t>(1, home_.housework_route.size()));
        std::string cur = h;
        double now = t;
        for (const auto& r : home_.housework_route) {
          now = walk(cur, r, now);
          presence(r, now, now + dwell, 30.0);
          now += dwell;
          cur = r;
        }
        return walk(cur, h, now);
      }
      case SimActivity::sleep:
      case SimActivity::wander: break;
    }
    return t;
  }

  double toilet(const std::string& from, double t, double dur) {
    const double a = walk(from, home_.bathroom, t);
    const double leave = a + dur;
    presence(home_.bathroom, a, leave, 40.0);
    const double flush = std::max(a + 5.0, leave - 40.0);
    binary(home_.flush, flush, 1.0);
    binary(home_.flush, flush + 30.0, 0.0);
    truth(AdlKind::toileting, a, leave);
    return walk(home_.bathroom, from, leave);
  }

  /// Out of bed and back. Returns the time the bed is re-occupied.
  double excursion(const ActivityBlock& b, double t, double dur) {
    const std::string& bedroom = home_.bedroom;
    binary(home_.bed, t, 0.0);
    pulse(bedroom, t + 3.0);
    double back = t + 8.0;
    if (b.activity == SimActivity::toilet) {
      back = toilet(bedroom, t + 8.0, dur);
    } else {
      const std::size_t first = transitions_.size();
      std::string cur = bedroom;
      for (const auto& r : home_.wander_route) {
        back = walk(cur, r, back);
        const double dwell = rng_.uniform(25.0, 55.0);
        presence(r, back, back + dwell, 20.0);
        back += dwell;
        cur = r;
      }
      back = walk(cur, bedroom, back);
      if (transitions_.size() > first) {
        AdlEpisode ep;
        ep.kind = AdlKind::wandering;
        ep.start = truth_[transitions_[first]].start;
        ep.end = truth_[transitions_.back()].end;
        truth_.push_back(std::move(ep));
      }
    }
    pulse(bedroom, back + 4.0);
    const double settled = back + 10.0;
    binary(home_.bed, settled, 1.0);
    truth(AdlKind::bed_exit, t, settled);
    return settled;
  }

  double excursion_length(const ActivityBlock& b, double dur) const {
    if (b.activity == SimActivity::toilet) return dur + 2 * walk_time(home_.bedroom, home_.bathroom) + 30.0;
    double t = 0.0;
    std::string cur = home_.bedroom;
    for (const auto& r : home_.wander_route) {
      t += walk_time(cur, r) + 55.0;
      cur = r;
    }
    return t + walk_time(cur, home_.bedroom) + 30.0;
  }

  void sample_continuous(double day_len) {
    const SensorInfo* hum = home_.sensor(home_.humidity);
    const SensorInfo* pow = home_.sensor(home_.stove);
    const double rise_time = 180.0;
    const double decay = 360.0;
    for (double t = 0.0; t < day_len; t += sc_.poll_interval_s) {
      double h = sc_.humidity_base + rng_.jitter(0.0, sc_.humidity_noise);
      for (const auto& [a, b] : showers_) {
        if (t >= a && t <= b) {
          h += sc_.shower_humidity_rise * std::min(1.0, (t - a) / rise_time);
        } else if (t > b) {
          h += sc_.shower_humidity_rise * std::min(1.0, (b - a) / rise_time) * std::exp(-(t - b) / decay);
        }
      }
      double w = sc_.power_base + rng_.jitter(0.0, sc_.power_noise);
      for (const auto& [a, b] : stove_) {
        if (t >= a && t <= b) w += sc_.stove_watts;
      }
      events_.push_back(SensorEvent{hum->id, hum->kind, at(t), std::max(0.0, std::round(h * 10.0) / 10.0), hum->room});
      events_.push_back(SensorEvent{pow->id, pow->kind, at(t), std::max(0.0, std::round(w * 10.0) / 10.0), pow->room});
    }
  }

  /// Turns motion pulses into activate/deactivate pairs; a pulse while the
  /// sensor is still on extends the hold instead of re-activating.
  void flush_motion() {
    const double hold = sc_.motion_hold_s;
    for (auto& [room, times] : pulses_) {
      const SensorInfo* s = home_.motion_in(room);
      std::sort(times.begin(), times.end());
      std::size_t i = 0;
      while (i < times.size()) {
        const double on = times[i];
        double off = on + hold;
        ++i;
        while (i < times.size() && times[i] < off) off = times[i++] + hold;
        events_.push_back(SensorEvent{s->id, s->kind, at(on), 1.0, s->room});
        events_.push_back(SensorEvent{s->id, s->kind, at(off), 0.0, s->room});
      }
    }
    pulses_.clear();
  }

  std::vector<SensorEvent> take_events() { return std::move(events_); }

  std::vector<AdlEpisode> take_truth() {
    std::stable_sort(truth_.begin(), truth_.end(), episode_order);
    return std::move(truth_);
  }

 private:
  const Scenario& sc_;
  const HomeLayout& home_;
  Instant origin_;
  SimRng& rng_;
  double speed_;
  std::vector<SensorEvent> events_;
  std::map<std::string, std::vector<double>> pulses_;
  std::vector<AdlEpisode> truth_;
  std::vector<std::size_t> transitions_;
  std::vector<std::pair<double, double>> showers_;
  std::vector<std::pair<double, double>> stove_;
};

struct Occurrence {
  double start = 0.0;
  double duration = 0.0;
  std::size_t block = 0;
};

inline double duration_floor(SimActivity a) {
  switch (a) {
    case SimActivity::toilet: return 1.5;
    case SimActivity::shower: return 5.0;
    case SimActivity::grooming: return 3.0;
    case SimActivity::cooking: return 8.0;
    case SimActivity::eating: return 2.0;
    case SimActivity::sitting: return 10.0;
    case SimActivity::sleep: return 200.0;
    default: return 1.0;
  }
}

inline double duration_ceiling(SimActivity a) {
  switch (a) {
    case SimActivity::toilet: return 6.0;
    case SimActivity::grooming: return 25.0;
    case SimActivity::shower: return 45.0;
    case SimActivity::eating: return 25.0;
    case SimActivity::cooking: return 150.0;
    default: return 1e9;
  }
}

inline void simulate_day(const Scenario& sc, int day, std::vector<SensorEvent>& events, DayTruth& truth) {
  SimRng rng(day_seed(sc.seed, day));
  const Date date = add_days(sc.start_date, day);
  const Instant origin = at(date, TimeOfDay::hm(12, 0));
  const double speed_mean = drifted(sc, "walk_speed", DriftField::walk_speed, sc.walk_speed, day);
  const double speed = std::max(0.1, rng.jitter(speed_mean, sc.walk_speed_sigma));
  DayBuilder day_builder(sc, origin, rng, speed);
  const double day_len = 86400.0;

  // Draw every occurrence first, in template order, so the random sequence
  // does not depend on scheduling outcomes.
  std::optional<std::pair<double, double>> sleep;
  std::vector<Occurrence> nights;
  std::vector<Occurrence> blocks;
  for (std::size_t bi = 0; bi < sc.day_templates.size(); ++bi) {
    const ActivityBlock b = block_on_day(sc, sc.day_templates[bi], day);
    const double whole = std::floor(b.count);
    const int n = static_cast<int>(whole) + (rng.bernoulli(b.count - whole) ? 1 : 0);
    for (int i = 0; i < n; ++i) {
      const bool happens = rng.bernoulli(b.probability);
      const double start = rng.jitter(b.start + i * b.spread, b.start_sigma);
      const double dur = std::clamp(rng.jitter(b.duration, b.duration_sigma), duration_floor(b.activity),
                                    duration_ceiling(b.activity));
      if (!happens) continue;
      Occurrence o{std::clamp(start, 0.0, 1439.0) * 60.0, dur * 60.0, bi};
      if (b.activity == SimActivity::sleep) {
        if (!sleep) sleep = std::make_pair(o.start, std::min(o.start + o.duration, day_len - 2 * 3600.0));
      } else if (b.during_sleep) {
        nights.push_back(o);
      } else {
        blocks.push_back(o);
      }
    }
  }
  std::vector<double> night_pulses;
  for (int i = 0; i < sc.night_motion; ++i) night_pulses.push_back(rng.uniform());

  auto by_start = [](const Occurrence& a, const Occurrence& b) {
    return a.start != b.start ? a.start < b.start : a.block < b.block;
  };
  std::stable_sort(blocks.begin(), blocks.end(), by_start);
  std::stable_sort(nights.begin(), nights.end(), by_start);

  const std::string& home = sc.home_layout.home;
  double cursor = 120.0;
  for (const auto& o : blocks) {
    const ActivityBlock& b = sc.day_templates[o.block];
    const double need = o.duration + day_builder.overhead(b);
    double st = std::max(o.start, cursor);
    if (sleep && st < sleep->second + kWakeMarginS && st + need > sleep->first - kBedtimeMarginS) {
      st = std::max(st, sleep->second + kWakeMarginS);
    }
    if (st + need > day_len - kDayEndMarginS) continue;
    const double back = day_builder.day_block(b, st, o.duration);
    cursor = back + kBlockGapS;
  }

  if (sleep) {
    const auto [s, e] = *sleep;
    const std::string& bedroom = sc.home_layout.bedroom;
    day_builder.walk(home, bedroom, s - 90.0);
    day_builder.binary(sc.home_layout.bed, s, 1.0);
    std::vector<std::pair<double, double>> away;
    double free_from = s + kNightMarginS;
    for (const auto& o : nights) {
      const ActivityBlock& b = sc.day_templates[o.block];
      const double len = std::min(kExcursionMaxS, day_builder.excursion_length(b, o.duration));
      const double st = std::max(o.start, free_from);
      if (st + len > e - kNightMarginS) continue;
      const double back = day_builder.excursion(b, st, std::min(o.duration, kExcursionMaxS - 60.0 - 2 * 30.0));
      away.emplace_back(st, back);
      free_from = back + kExcursionGapS;
    }
    const double lo = s + 20 * 60.0;
    const double hi = e - 20 * 60.0;
    for (double u : night_pulses) {
      if (hi <= lo) break;
      const double t = lo + u * (hi - lo);
      const bool clear = std::none_of(away.begin(), away.end(), [&](const auto& w) {
        return t > w.first - 600.0 && t < w.second + 600.0;
      });
      if (clear) day_builder.pulse(bedroom, t);
    }
    day_builder.binary(sc.home_layout.bed, e, 0.0);
    day_builder.truth(AdlKind::sleep, s, e);
    day_builder.pulse(bedroom, e + 5.0);
    day_builder.walk(bedroom, home, e + 60.0);
  }

  day_builder.sample_continuous(day_len);
  day_builder.flush_motion();
  auto evs = day_builder.take_events();
  events.insert(events.end(), std::make_move_iterator(evs.begin()), std::make_move_iterator(evs.end()));
  truth.date = date;
  truth.episodes = day_builder.take_truth();
}

}  // namespace detail

/// Deterministic multi-day stream plus ground-truth episodes per day.
inline SimulationResult simulate(const Scenario& scenario, const std::string& resident_id = "") {
  validate(scenario);
  std::vector<SensorEvent> events;
  std::vector<DayTruth> truth(static_cast<std::size_t>(scenario.days));
  for (int d = 0; d < scenario.days; ++d) detail::simulate_day(scenario, d, events, truth[static_cast<std::size_t>(d)]);
  SimulationResult r;
  r.stream = make_stream(resident_id.empty() ? scenario.name : resident_id, std::move(events));
  r.ground_truth = std::move(truth);
  return r;
}

namespace detail {

inline ActivityBlock block(std::string name, SimActivity a, std::string_view clock, double start_sigma, double duration,
                           double duration_sigma, double probability = 1.0, double count = 1.0, double spread = 0.0,
                           bool during_sleep = false) {
  return ActivityBlock{std::move(name), a,     minutes_after_noon(clock), start_sigma, duration, duration_sigma,
                       probability,     count, spread,                    during_sleep};
}

/// A healthy routine shared by the steady and declining residents.
inline std::vector<ActivityBlock> healthy_routine() {
  using A = SimActivity;
  return {
      block("sleep", A::sleep, "23:00", 20, 465, 20),
      block("night_toilet", A::toilet, "03:00", 60, 3, 0.7, 0.4, 1, 0, true),
      block("late_night_toilet", A::toilet, "04:00", 30, 3, 0.7, 0.0, 1, 0, true),
      block("night_wander", A::wander, "01:30", 30, 5, 0, 0.0, 1, 0, true),
      block("late_night_wander", A::wander, "02:45", 30, 5, 0, 0.0, 1, 0, true),
      block("morning_toilet", A::toilet, "07:20", 10, 3, 0.7),
      block("morning_grooming", A::grooming, "07:40", 10, 10, 3),
      block("shower", A::shower, "08:05", 15, 12, 3, 0.85),
      block("breakfast", A::eating, "08:40", 15, 8, 2),
      block("morning_housework", A::housework, "09:30", 20, 36, 8),
      block("lunch_cooking", A::cooking, "12:40", 10, 30, 6),
      block("lunch", A::eating, "13:25", 10, 10, 3),
      block("day_toilet", A::toilet, "14:00", 20, 3, 0.7, 1.0, 2.5, 150),
      block("afternoon_sitting", A::sitting, "14:30", 15, 75, 15),
      block("restless_sitting", A::sitting, "15:00", 10, 15, 4, 1.0, 0.0, 45),
      block("afternoon_housework", A::housework, "16:15", 20, 30, 8),
      block("dinner_cooking", A::cooking, "17:30", 15, 40, 8),
      block("dinner", A::eating, "18:25", 10, 12, 3),
      block("evening_sitting", A::sitting, "19:10", 15, 110, 20),
      block("evening_grooming", A::grooming, "22:15", 10, 8, 2),
  };
}

}  // namespace detail

inline Scenario steady_healthy_scenario() {
  Scenario s;
  s.name = "steady_healthy";
  s.seed = 1001;
  s.day_templates = detail::healthy_routine();
  return s;
}

/// Late, short nights with two trips to the toilet and frequent daytime
/// toilet visits; everything else stays ordinary.
inline Scenario poor_sleep_frequent_toilet_scenario() {
  using A = SimActivity;
  using detail::block;
  Scenario s;
  s.name = "poor_sleep_frequent_toilet";
  s.seed = 2002;
  s.day_templates = {
      block("sleep", A::sleep, "01:30", 10, 285, 15),
      block("night_toilet", A::toilet, "02:45", 15, 3, 0.7, 1.0, 2, 105, true),
      block("morning_grooming", A::grooming, "06:45", 10, 10, 3),
      block("shower", A::shower, "07:15", 10, 12, 3, 0.85),
      block("breakfast", A::eating, "07:50", 10, 8, 2),
      block("morning_housework", A::housework, "08:40", 15, 36, 8),
      block("morning_toilet", A::toilet, "09:40", 10, 3, 0.7, 1.0, 2, 50),
      block("lunch_cooking", A::cooking, "12:30", 10, 30, 6),
      block("lunch", A::eating, "13:15", 10, 10, 3),
      block("day_toilet", A::toilet, "13:50", 10, 3, 0.7, 1.0, 6, 65),
      block("afternoon_housework", A::housework, "15:05", 10, 30, 8),
      block("dinner_cooking", A::cooking, "17:45", 10, 40, 8),
      block("dinner", A::eating, "18:40", 10, 12, 3),
      block("evening_sitting", A::sitting, "19:40", 10, 140, 20),
      block("late_sitting", A::sitting, "22:40", 10, 110, 15),
      block("evening_grooming", A::grooming, "00:55", 5, 8, 2),
  };
  return s;
}

/// Starts like the steady resident; after day 20 sleep shortens, toilet
/// visits, night wandering and sitting creep up and walking slows.
inline Scenario gradual_decline_scenario() {
  Scenario s;
  s.name = "gradual_decline";
  s.seed = 3003;
  s.day_templates = detail::healthy_routine();
  const int onset = 20;
  s.drift = {
      {"sleep", DriftField::start, 5.0, onset},
      {"sleep", DriftField::duration, -20.0, onset},
      {"night_toilet", DriftField::probability, 0.065, onset},
      {"late_night_toilet", DriftField::probability, 0.08, onset},
      {"night_wander", DriftField::probability, 0.11, onset},
      {"late_night_wander", DriftField::probability, 0.09, onset},
      {"day_toilet", DriftField::count, 0.75, onset},
      {"restless_sitting", DriftField::count, 0.5, onset},
      {"morning_housework", DriftField::duration, -2.5, onset},
      {"afternoon_housework", DriftField::duration, -2.2, onset},
      {"afternoon_sitting", DriftField::duration, 12.0, onset},
      {"walk_speed", DriftField::walk_speed, -0.05, onset},
  };
  return s;
}

inline std::vector<Scenario> builtin_scenarios() {
  return {steady_healthy_scenario(), poor_sleep_frequent_toilet_scenario(), gradual_decline_scenario()};
}

inline nlohmann::ordered_json truth_to_json(const Date& date, const AdlEpisode& ep) {
  nlohmann::ordered_json j;
  j["date"] = format_date(date);
  const auto body = episode_to_json(ep);
  for (const auto& [key, v] : body.items()) j[key] = v;
  return j;
}

inline void write_ground_truth(std::ostream& out, const std::vector<DayTruth>& truth) {
  for (const auto& day : truth) {
    for (const auto& ep : day.episodes) out << truth_to_json(day.date, ep).dump() << '\n';
  }
}

}  // namespace adlsense
