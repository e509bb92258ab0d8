#pragma once

#include "adlsense/casebase_cbr.hpp"
#include "adlsense/config.hpp"
#include "adlsense/pipeline.hpp"
#include "adlsense/radar_render.hpp"
#include "adlsense/resident_sim.hpp"

#include <json.hpp>

#include <charconv>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adlsense {

struct ResidentSeries {
  std::string id;
  CaseLabel label = CaseLabel::unlabelled;
  std::string label_source;
  std::vector<DayAnalysis> days;

  const DayAnalysis* find(Date d) const {
    for (const auto& day : days) {
      if (day.date == d) return &day;
    }
    return nullptr;
  }
};

/// Everything the API serves, computed once and never mutated.
struct ApiSnapshot {
  AppConfig config;
  std::string fingerprint;
  CaseBase casebase;
  std::map<std::string, ResidentSeries> residents;
};

/// The resident's raw events: simulated from its scenario or read from disk.
inline EventStream resident_stream(const AppConfig& cfg, const ServiceResident& r) {
  if (!r.events.empty()) return load_stream(r.events, r.id);
  auto sc = find_scenario(cfg, r.scenario);
  if (!sc) fail(ErrorCode::Config, "resident '" + r.id + "': unknown scenario '" + r.scenario + "'");
  if (r.seed) sc->seed = *r.seed;
  if (r.days) sc->days = *r.days;
  return simulate(*sc, r.id).stream;
}

/// Analyses every configured resident. Each analysed day becomes a case
/// "<resident>:<date>" carrying the resident's label; cases from
/// `service.casebase` are appended after them.
inline std::shared_ptr<const ApiSnapshot> build_snapshot(const AppConfig& cfg) {
  validate(cfg);
  auto snap = std::make_shared<ApiSnapshot>();
  snap->config = cfg;
  snap->fingerprint = config_fingerprint(cfg);
  snap->casebase.schema = cfg.schema;
  for (const auto& r : cfg.service.residents) {
    ResidentSeries series;
    series.id = r.id;
    series.label = r.label;
    series.label_source = r.label_source;
    series.days = analyse_stream(resident_stream(cfg, r), cfg);
    snap->casebase = cases_from(std::move(snap->casebase), series.days, r.label, r.label_source);
    snap->residents.emplace(r.id, std::move(series));
  }
  if (!cfg.service.casebase.empty()) {
    CaseBase extra = load_casebase(cfg.service.casebase);
    if (!(extra.schema == cfg.schema)) {
      fail(ErrorCode::SchemaMismatch, "case base '" + cfg.service.casebase + "' uses a different schema");
    }
    for (auto& c : extra.cases) {
      if (snap->casebase.find(c.case_id)) fail(ErrorCode::DuplicateCaseId, "duplicate case id '" + c.case_id + "'");
      snap->casebase = add_case(std::move(snap->casebase), std::move(c));
    }
    // Keep stored ranges that are wider than the cases themselves.
    for (const auto& [name, r] : extra.feature_ranges) {
      auto& dst = snap->casebase.feature_ranges[name];
      dst.min = std::min(dst.min, r.min);
      dst.max = std::max(dst.max, r.max);
    }
  }
  return snap;
}

/// Atomic publish point. Readers keep their shared_ptr for the whole
/// request, so a reload never tears a response.
class SnapshotHolder {
 public:
  std::shared_ptr<const ApiSnapshot> get() const {
    std::lock_guard lock(mu_);
    return snap_;
  }
  void publish(std::shared_ptr<const ApiSnapshot> s) {
    std::lock_guard lock(mu_);
    snap_ = std::move(s);
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const ApiSnapshot> snap_;
};

struct ApiRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> params;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

namespace detail {

inline std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size()) {
      int v = 0;
      auto r = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
      if (r.ec == std::errc{} && r.ptr == s.data() + i + 3) {
        out += static_cast<char>(v);
        i += 2;
      } else {
        out += s[i];
      }
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace detail

/// "/path?a=1&b=2" -> request. Later duplicates win.
inline ApiRequest parse_target(std::string_view target, std::string method = "GET") {
  ApiRequest req;
  req.method = std::move(method);
  auto q = target.find('?');
  req.path = detail::percent_decode(target.substr(0, q));
  if (q == std::string_view::npos) return req;
  std::string_view rest = target.substr(q + 1);
  while (!rest.empty()) {
    auto amp = rest.find('&');
    std::string_view pair = rest.substr(0, amp);
    if (!pair.empty()) {
      auto eq = pair.find('=');
      std::string key = detail::percent_decode(pair.substr(0, eq));
      std::string value = eq == std::string_view::npos ? "" : detail::percent_decode(pair.substr(eq + 1));
      req.params[key] = value;
    }
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return req;
}

namespace detail {

struct ApiFailure {
  int status;
  std::string code;
  std::string detail;
};

[[noreturn]] inline void api_fail(int status, std::string code, std::string detail) {
  throw ApiFailure{status, std::move(code), std::move(detail)};
}

inline ApiResponse json_response(const nlohmann::ordered_json& j, int status = 200) {
  ApiResponse r;
  r.status = status;
  r.body = j.dump();
  return r;
}

inline ApiResponse error_response(int status, const std::string& code, const std::string& detail) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["detail"] = detail;
  return json_response(j, status);
}

inline std::optional<std::string> param(const ApiRequest& req, const std::string& key) {
  auto it = req.params.find(key);
  if (it == req.params.end()) return std::nullopt;
  return it->second;
}

inline std::optional<long long> int_param(const ApiRequest& req, const std::string& key) {
  auto v = param(req, key);
  if (!v) return std::nullopt;
  long long out = 0;
  auto r = std::from_chars(v->data(), v->data() + v->size(), out);
  if (v->empty() || r.ec != std::errc{} || r.ptr != v->data() + v->size()) {
    api_fail(400, "bad_parameter", key + " must be an integer");
  }
  return out;
}

inline bool bool_param(const ApiRequest& req, const std::string& key) {
  auto v = param(req, key);
  if (!v) return false;
  if (*v == "" || *v == "1" || *v == "true") return true;
  if (*v == "0" || *v == "false") return false;
  api_fail(400, "bad_parameter", key + " must be true or false");
}

/// The requested day; the latest one when `date` is absent.
inline const DayAnalysis& day_param(const ApiRequest& req, const ResidentSeries& res) {
  auto v = param(req, "date");
  if (!v) {
    if (res.days.empty()) api_fail(404, "no_profile", "resident '" + res.id + "' has no profiles");
    return res.days.back();
  }
  Date d;
  try {
    d = parse_date(*v);
  } catch (const Error&) {
    api_fail(400, "bad_parameter", "date must be YYYY-MM-DD");
  }
  const DayAnalysis* day = res.find(d);
  if (!day) {
    std::string detail = "no profile for " + res.id + " on " + *v;
    if (!res.days.empty()) {
      detail += " (available " + format_date(res.days.front().date) + " to " + format_date(res.days.back().date) + ")";
    }
    api_fail(404, "no_profile", detail);
  }
  return *day;
}

inline ApiResponse list_residents(const ApiSnapshot& s) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& [id, r] : s.residents) {
    nlohmann::ordered_json j;
    j["resident_id"] = id;
    j["days_available"] = r.days.size();
    j["first_date"] = r.days.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(format_date(r.days.front().date));
    j["last_date"] = r.days.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(format_date(r.days.back().date));
    j["label"] = std::string(to_string(r.label));
    arr.push_back(std::move(j));
  }
  return json_response(arr);
}

inline ApiResponse similar(const ApiSnapshot& s, const ResidentSeries& res, const ApiRequest& req) {
  const DayAnalysis& day = day_param(req, res);
  SimilarityConfig cfg = s.config.similarity;
  if (auto k = int_param(req, "k")) {
    if (*k < 1) api_fail(422, "invalid_k", "k must be >= 1");
    cfg.k = static_cast<int>(std::min<long long>(*k, 1000000));
  }
  return json_response(retrieval_payload(day, s.casebase, cfg, bool_param(req, "include_self")));
}

inline ApiResponse trend(const ApiSnapshot& s, const ResidentSeries& res, const ApiRequest& req) {
  auto token = param(req, "factor");
  if (!token) api_fail(400, "bad_parameter", "factor is required");
  auto factor = parse_risk_factor(*token);
  if (!factor) api_fail(404, "unknown_factor", "'" + *token + "' is not one of the six risk factors");
  return json_response(trend_payload(res.id, res.days, *factor, s.config));
}

inline ApiResponse self_similarity(const ApiSnapshot& s, const ResidentSeries& res, const ApiRequest& req) {
  int window = s.config.trend_window;
  if (auto w = int_param(req, "window")) {
    if (*w < 1) api_fail(422, "invalid_window", "window must be >= 1");
    window = static_cast<int>(std::min<long long>(*w, 1000000));
  }
  return json_response(self_similarity_payload(res.id, res.days, window, s.casebase, s.config));
}

inline ApiResponse radar(const ApiSnapshot& s, const ResidentSeries& res, const ApiRequest& req) {
  const DayAnalysis& day = day_param(req, res);
  RadarOverlays overlays;
  if (auto o = param(req, "overlay")) {
    auto parsed = parse_overlays(*o);
    if (!parsed) api_fail(400, "bad_parameter", "overlay must be a comma list of risky, history");
    overlays = *parsed;
  }
  ApiResponse r;
  r.content_type = "image/svg+xml";
  r.body = render_radar(radar_spec_for(res.days, day, s.config, overlays));
  return r;
}

inline ApiResponse route(const ApiSnapshot& s, const ApiRequest& req) {
  if (req.path == "/api/residents" || req.path == "/api/residents/") return list_residents(s);
  const std::string prefix = "/api/residents/";
  if (req.path.compare(0, prefix.size(), prefix) != 0) api_fail(404, "not_found", "no route for " + req.path);
  std::string_view rest = std::string_view(req.path).substr(prefix.size());
  auto slash = rest.find('/');
  if (slash == std::string_view::npos) api_fail(404, "not_found", "no route for " + req.path);
  const std::string id(rest.substr(0, slash));
  const std::string_view what = rest.substr(slash + 1);
  auto it = s.residents.find(id);
  if (it == s.residents.end()) api_fail(404, "unknown_resident", "no resident '" + id + "'");
  const ResidentSeries& res = it->second;
  if (what == "risk") return json_response(risk_payload(day_param(req, res), s.config));
  if (what == "profile") return json_response(profile_to_record(day_param(req, res).profile));
  if (what == "similar") return similar(s, res, req);
  if (what == "trend") return trend(s, res, req);
  if (what == "self-similarity") return self_similarity(s, res, req);
  if (what == "radar.svg") return radar(s, res, req);
  api_fail(404, "not_found", "no route for " + req.path);
}

}  // namespace detail

/// Pure request handler: same snapshot and request, same bytes.
inline ApiResponse handle(const ApiSnapshot* snap, const ApiRequest& req) {
  ApiResponse r;
  if (req.method == "OPTIONS") {
    r.status = 204;
    r.content_type.clear();
  } else if (req.method != "GET" && req.method != "HEAD") {
    r = detail::error_response(405, "method_not_allowed", "the API is read-only");
  } else if (!snap) {
    r = detail::error_response(503, "no_snapshot", "no data has been loaded yet");
  } else {
    try {
      r = detail::route(*snap, req);
    } catch (const detail::ApiFailure& f) {
      r = detail::error_response(f.status, f.code, f.detail);
    } catch (const Error& e) {
      r = detail::error_response(500, std::string(to_string(e.code())), e.detail());
    }
  }
  if (snap) r.headers["X-Config-Fingerprint"] = snap->fingerprint;
  if (!snap || snap->config.service.cors) {
    r.headers["Access-Control-Allow-Origin"] = "*";
    r.headers["Access-Control-Allow-Methods"] = "GET, OPTIONS";
    r.headers["Access-Control-Allow-Headers"] = "Content-Type";
    r.headers["Access-Control-Expose-Headers"] = "X-Config-Fingerprint";
  }
  return r;
}

inline ApiResponse handle(const std::shared_ptr<const ApiSnapshot>& snap, const ApiRequest& req) {
  return handle(snap.get(), req);
}

}  // namespace adlsense
