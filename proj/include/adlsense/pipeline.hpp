#pragma once

#include "adlsense/adl_segmentation.hpp"
#include "adlsense/casebase_cbr.hpp"
#include "adlsense/config.hpp"
#include "adlsense/event_model.hpp"
#include "adlsense/profile_builder.hpp"
#include "adlsense/radar_render.hpp"
#include "adlsense/risk_scoring.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace adlsense {

/// Inclusive date bounds; either end may be open.
struct DateRange {
  std::optional<Date> from;
  std::optional<Date> to;

  bool contains(Date d) const {
    if (from && std::chrono::sys_days{d} < std::chrono::sys_days{*from}) return false;
    if (to && std::chrono::sys_days{d} > std::chrono::sys_days{*to}) return false;
    return true;
  }
};

struct DayAnalysis {
  Date date{};
  std::vector<AdlEpisode> episodes;
  DailyProfile profile;
  RiskProfile risk;
};

inline DayAnalysis analyse_day(const EventStream& stream, Date date, const AppConfig& cfg) {
  DayAnalysis day;
  day.date = date;
  const EventStream slice = slice_day(stream, date, cfg.day_start);
  day.episodes = segment_day(slice, cfg.segmentation());
  day.profile = build_profile(day.episodes, slice, cfg.schema, date, cfg.profile_options());
  day.risk = compare_to_template(score_profile(day.profile, cfg.factors), cfg.risky_template);
  return day;
}

/// Every profile day the stream touches, in date order.
inline std::vector<DayAnalysis> analyse_stream(const EventStream& stream, const AppConfig& cfg,
                                               const DateRange& range = {}) {
  std::vector<DayAnalysis> out;
  for (Date d : covered_dates(stream, cfg.day_start)) {
    if (range.contains(d)) out.push_back(analyse_day(stream, d, cfg));
  }
  return out;
}

inline std::string case_id_of(const std::string& resident, Date date) { return resident + ":" + format_date(date); }

/// One case per analysed day.
inline CaseBase cases_from(CaseBase base, const std::vector<DayAnalysis>& days, CaseLabel label = CaseLabel::unlabelled,
                           const std::string& label_source = "") {
  for (const auto& d : days) {
    Case c;
    c.case_id = case_id_of(d.profile.resident_id, d.date);
    c.profile = d.profile;
    c.label = label;
    c.label_source = label_source;
    base = add_case(std::move(base), std::move(c));
  }
  return base;
}

inline std::vector<DailyProfile> profiles_of(const std::vector<DayAnalysis>& days) {
  std::vector<DailyProfile> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(d.profile);
  return out;
}

/// Risk scores with the template and the raw feature value behind each
/// factor. The CLI and the HTTP API both emit exactly this.
inline nlohmann::ordered_json risk_payload(const DayAnalysis& day, const AppConfig& cfg) {
  nlohmann::ordered_json j = risk_to_json(day.risk);
  j["template"] = template_to_json(cfg.risky_template);
  nlohmann::ordered_json sources = nlohmann::ordered_json::object();
  for (const auto& fc : order_configs(cfg.factors)) {
    const FeatureValue& v = day.profile.at(fc.source_feature);
    nlohmann::ordered_json s;
    s["feature"] = fc.source_feature;
    if (v.value) {
      s["value"] = *v.value;
    } else {
      s["value"] = nullptr;
      s["null_reason"] = std::string(to_string(v.reason));
    }
    s["lower"] = fc.lower;
    s["upper"] = fc.upper;
    s["direction"] = std::string(to_string(fc.direction));
    sources[std::string(to_string(fc.factor))] = std::move(s);
  }
  j["sources"] = std::move(sources);
  return j;
}

namespace detail {

inline nlohmann::ordered_json per_feature_json(const std::map<std::string, double>& m, const FeatureSchema& schema) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& f : schema.features) {
    auto it = m.find(f.name);
    if (it != m.end()) j[f.name] = it->second;
  }
  return j;
}

}  // namespace detail

/// Nearest cases for one day with the per-feature breakdown of each. The
/// day's own resident is skipped unless `include_self`.
inline nlohmann::ordered_json retrieval_payload(const DayAnalysis& day, const CaseBase& base,
                                                const SimilarityConfig& cfg, bool include_self) {
  const std::string& resident = day.profile.resident_id;
  auto result = retrieve(day.profile, base, cfg, include_self ? std::nullopt : std::optional<std::string>(resident));
  nlohmann::ordered_json j;
  j["resident"] = resident;
  j["date"] = format_date(day.date);
  j["k"] = cfg.k;
  j["include_self"] = include_self;
  j["recommendation"] = std::string(to_string(result.recommendation));
  j["vote_score"] = result.vote_score;
  j["neighbours"] = nlohmann::ordered_json::array();
  for (const auto& n : result.neighbours) {
    nlohmann::ordered_json nj;
    nj["case_id"] = n.case_id;
    nj["similarity"] = n.similarity;
    nj["label"] = std::string(to_string(n.label));
    nj["per_feature"] = detail::per_feature_json(n.per_feature, base.schema);
    j["neighbours"].push_back(std::move(nj));
  }
  return j;
}

inline nlohmann::ordered_json trend_payload(const std::string& resident, const std::vector<DayAnalysis>& days,
                                            RiskFactor factor, const AppConfig& cfg) {
  const std::size_t i = index_of(factor);
  nlohmann::ordered_json j;
  j["resident"] = resident;
  j["factor"] = std::string(to_string(factor));
  j["template"] = cfg.risky_template.scores[i];
  j["series"] = nlohmann::ordered_json::array();
  for (const auto& d : days) {
    nlohmann::ordered_json p;
    p["date"] = format_date(d.date);
    const auto& sc = d.risk.scores[i];
    p["score"] = sc ? nlohmann::ordered_json(*sc) : nlohmann::ordered_json(nullptr);
    p["flagged"] = d.risk.flagged(factor);
    j["series"].push_back(std::move(p));
  }
  return j;
}

/// Self-trend normalised with the case base's similarity ranges.
inline nlohmann::ordered_json self_similarity_payload(const std::string& resident, const std::vector<DayAnalysis>& days,
                                                      int window, const CaseBase& base, const AppConfig& cfg) {
  auto points = self_trend(profiles_of(days), window, base.schema, cfg.similarity, base.similarity_ranges(),
                           cfg.trend_threshold);
  nlohmann::ordered_json j;
  j["resident"] = resident;
  j["window"] = window;
  j["threshold"] = cfg.trend_threshold;
  j["series"] = nlohmann::ordered_json::array();
  for (const auto& p : points) {
    j["series"].push_back(nlohmann::ordered_json{
        {"date", format_date(p.date)}, {"self_similarity", p.self_similarity}, {"flag", p.flag}});
  }
  return j;
}

/// Per-factor mean of the non-null scores of the days in
/// [date - n days, date). Nullopt when no day falls in the window.
inline std::optional<FactorScores> history_mean(const std::vector<DayAnalysis>& days, Date date, int n) {
  const auto end = std::chrono::sys_days{date};
  const auto begin = end - std::chrono::days{n};
  std::array<double, kFactorCount> sum{};
  std::array<int, kFactorCount> count{};
  bool any = false;
  for (const auto& d : days) {
    const auto t = std::chrono::sys_days{d.date};
    if (t < begin || t >= end) continue;
    any = true;
    for (auto f : kAllFactors) {
      const auto& s = d.risk.scores[index_of(f)];
      if (!s) continue;
      sum[index_of(f)] += *s;
      ++count[index_of(f)];
    }
  }
  if (!any) return std::nullopt;
  FactorScores out{};
  for (auto f : kAllFactors) {
    const std::size_t i = index_of(f);
    if (count[i] > 0) out[i] = sum[i] / count[i];
  }
  return out;
}

struct RadarOverlays {
  bool risky = false;
  bool history = false;
};

/// "risky,history" -> overlays; nullopt on an unknown token.
inline std::optional<RadarOverlays> parse_overlays(std::string_view list) {
  RadarOverlays o;
  while (!list.empty()) {
    auto comma = list.find(',');
    std::string_view tok = list.substr(0, comma);
    if (tok == "risky") {
      o.risky = true;
    } else if (tok == "history") {
      o.history = true;
    } else if (!tok.empty()) {
      return std::nullopt;
    }
    if (comma == std::string_view::npos) break;
    list = list.substr(comma + 1);
  }
  return o;
}

/// The resident's day, optionally with the risky template and the mean of
/// the preceding `cfg.service.history_days` days. The history series is
/// left out when there is no earlier day.
inline RadarSpec radar_spec_for(const std::vector<DayAnalysis>& days, const DayAnalysis& day, const AppConfig& cfg,
                                RadarOverlays overlays) {
  RadarSpec spec;
  spec.series.push_back(RadarSeries{day.profile.resident_id + " " + format_date(day.date), day.risk.scores,
                                    SeriesColour::resident});
  if (overlays.risky) {
    FactorScores t{};
    for (auto f : kAllFactors) t[index_of(f)] = cfg.risky_template.scores[index_of(f)];
    spec.series.push_back(RadarSeries{"risky template", t, SeriesColour::risky, 0.1});
  }
  if (overlays.history) {
    if (auto h = history_mean(days, day.date, cfg.service.history_days)) {
      spec.series.push_back(RadarSeries{std::to_string(cfg.service.history_days) + "-day mean", *h,
                                        SeriesColour::historical, 0.1});
    }
  }
  return spec;
}

struct PipelineResult {
  std::vector<DayAnalysis> days;
  CaseBase casebase;
};

inline PipelineResult run_pipeline(const EventStream& stream, const AppConfig& cfg, const DateRange& range = {}) {
  PipelineResult r;
  r.days = analyse_stream(stream, cfg, range);
  CaseBase base;
  base.schema = cfg.schema;
  r.casebase = cases_from(std::move(base), r.days);
  return r;
}

inline PipelineResult run_pipeline(const std::string& events_path, const AppConfig& cfg, const std::string& resident,
                                   const DateRange& range = {}) {
  return run_pipeline(load_stream(events_path, resident), cfg, range);
}

namespace detail {

inline std::ofstream open_artifact(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + p.string() + "'");
  return out;
}

}  // namespace detail

/// episodes.jsonl, profiles.jsonl, risk.jsonl and casebase.json under `dir`.
inline void write_artifacts(const PipelineResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create '" + dir.string() + "': " + ec.message());
  auto episodes = detail::open_artifact(dir / "episodes.jsonl");
  auto profiles = detail::open_artifact(dir / "profiles.jsonl");
  auto risks = detail::open_artifact(dir / "risk.jsonl");
  for (const auto& d : r.days) {
    for (const auto& ep : d.episodes) {
      nlohmann::ordered_json j;
      j["resident"] = d.profile.resident_id;
      j["date"] = format_date(d.date);
      const auto body = episode_to_json(ep);
      for (const auto& [key, v] : body.items()) j[key] = v;
      episodes << j.dump() << '\n';
    }
    profiles << profile_to_record(d.profile).dump() << '\n';
    risks << risk_to_json(d.risk).dump() << '\n';
  }
  save_casebase(r.casebase, (dir / "casebase.json").string());
  if (!episodes || !profiles || !risks) fail(ErrorCode::Io, "write failed under '" + dir.string() + "'");
}

}  // namespace adlsense
