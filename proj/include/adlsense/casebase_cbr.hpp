#pragma once

#include "adlsense/error.hpp"
#include "adlsense/profile_builder.hpp"
#include "adlsense/time.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace adlsense {

enum class CaseLabel { risky, not_risky, unlabelled };

inline std::string_view to_string(CaseLabel l) {
  switch (l) {
    case CaseLabel::risky: return "risky";
    case CaseLabel::not_risky: return "not_risky";
    case CaseLabel::unlabelled: return "unlabelled";
  }
  return "?";
}

inline CaseLabel case_label_from_string(std::string_view s) {
  for (auto l : {CaseLabel::risky, CaseLabel::not_risky, CaseLabel::unlabelled}) {
    if (to_string(l) == s) return l;
  }
  fail(ErrorCode::Validation, "unknown case label '" + std::string(s) + "'");
}

struct Case {
  std::string case_id;
  DailyProfile profile;
  std::map<std::string, std::string> context;
  CaseLabel label = CaseLabel::unlabelled;
  std::string label_source;
  bool operator==(const Case&) const = default;
};

using FeatureRanges = std::map<std::string, ValueRange>;

/// Immutable-by-convention snapshot: add_case returns a new base.
struct CaseBase {
  FeatureSchema schema;
  std::vector<Case> cases;
  /// Observed min/max of every non-null value stored.
  FeatureRanges feature_ranges;

  /// Normalisation ranges: schema hints win over observed ranges.
  FeatureRanges similarity_ranges() const {
    FeatureRanges out = feature_ranges;
    for (const auto& f : schema.features) {
      if (f.range_hint) out[f.name] = *f.range_hint;
    }
    return out;
  }

  const Case* find(std::string_view id) const {
    for (const auto& c : cases) {
      if (c.case_id == id) return &c;
    }
    return nullptr;
  }
  bool operator==(const CaseBase&) const = default;
};

struct SimilarityConfig {
  /// Features missing from the map weigh 1.0; weight 0 excludes a feature.
  std::map<std::string, double> weights;
  double null_similarity = 0.5;
  int k = 5;
  bool operator==(const SimilarityConfig&) const = default;

  double weight(const std::string& feature) const {
    auto it = weights.find(feature);
    return it == weights.end() ? 1.0 : it->second;
  }
};

inline SimilarityConfig default_similarity_config() {
  SimilarityConfig c;
  for (const char* f : {"avg_gait_speed", "room_transition_count", "stand_up_count", "sleep_duration",
                        "sleep_disturbance_count", "toilet_visit_count", "wandering_episode_count"}) {
    c.weights[f] = 2.0;
  }
  for (const char* f : {"disturbed_sleep", "time_sitting", "active_minutes", "shower_count", "cooking_count",
                        "eating_drinking_count"}) {
    c.weights[f] = 1.0;
  }
  return c;
}

inline void validate(const SimilarityConfig& c, const FeatureSchema& schema) {
  double total = 0.0;
  for (const auto& [name, w] : c.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::Validation, "weight for '" + name + "' must be >= 0");
  }
  for (const auto& f : schema.features) total += c.weight(f.name);
  if (!(total > 0.0)) fail(ErrorCode::Validation, "similarity weights must not all be zero");
  if (!(c.null_similarity >= 0.0 && c.null_similarity <= 1.0)) {
    fail(ErrorCode::Validation, "null_similarity must be in [0,1]");
  }
  if (c.k < 1) fail(ErrorCode::Validation, "k must be >= 1");
}

/// Per-feature similarity in [0,1]: equality for binary features,
/// 1 - |a-b| / range width (clamped) for the rest, `null_similarity` when
/// either side is missing.
inline double local_similarity(FeatureKind kind, std::optional<double> a, std::optional<double> b,
                               const ValueRange& range, double null_similarity) {
  if (kind != FeatureKind::binary && !(range.width() > 0.0)) {
    fail(ErrorCode::DegenerateRange, "range [" + std::to_string(range.min) + ", " + std::to_string(range.max) +
                                         "] has no width");
  }
  if (!a || !b) return null_similarity;
  if (kind == FeatureKind::binary) return *a == *b ? 1.0 : 0.0;
  double s = 1.0 - std::fabs(*a - *b) / range.width();
  return std::clamp(s, 0.0, 1.0);
}

struct SimilarityBreakdown {
  double score = 0.0;
  std::map<std::string, double> per_feature;
  bool operator==(const SimilarityBreakdown&) const = default;
};

/// Weighted mean of local similarities over the schema, in schema order.
inline SimilarityBreakdown global_similarity(const DailyProfile& p, const DailyProfile& q, const FeatureSchema& schema,
                                             const SimilarityConfig& config, const FeatureRanges& ranges) {
  SimilarityBreakdown out;
  double num = 0.0;
  double den = 0.0;
  for (const auto& f : schema.features) {
    const double w = config.weight(f.name);
    if (w == 0.0) continue;
    ValueRange r{0.0, 1.0};
    if (f.kind != FeatureKind::binary) {
      auto it = ranges.find(f.name);
      if (it == ranges.end()) fail(ErrorCode::DegenerateRange, "no normalisation range for '" + f.name + "'");
      r = it->second;
    }
    double local;
    try {
      local = local_similarity(f.kind, p.at(f.name).value, q.at(f.name).value, r, config.null_similarity);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateRange) throw;
      fail(ErrorCode::DegenerateRange, "feature '" + f.name + "': " + e.what());
    }
    out.per_feature[f.name] = local;
    num += w * local;
    den += w;
  }
  if (!(den > 0.0)) fail(ErrorCode::Validation, "similarity weights must not all be zero");
  out.score = std::clamp(num / den, 0.0, 1.0);
  return out;
}

enum class Recommendation { intervene, none };

inline std::string_view to_string(Recommendation r) { return r == Recommendation::intervene ? "intervene" : "none"; }

struct Neighbour {
  std::string case_id;
  double similarity = 0.0;
  std::map<std::string, double> per_feature;
  CaseLabel label = CaseLabel::unlabelled;
  bool operator==(const Neighbour&) const = default;
};

struct RetrievalResult {
  std::vector<Neighbour> neighbours;
  Recommendation recommendation = Recommendation::none;
  double vote_score = 0.0;
  bool operator==(const RetrievalResult&) const = default;
};

inline constexpr double kInterventionThreshold = 0.5;

/// Similarity-weighted share of risky cases among the labelled neighbours.
inline void tally_vote(RetrievalResult& r) {
  double risky = 0.0;
  double labelled = 0.0;
  int labelled_count = 0;
  for (const auto& n : r.neighbours) {
    if (n.label == CaseLabel::unlabelled) continue;
    ++labelled_count;
    labelled += n.similarity;
    if (n.label == CaseLabel::risky) risky += n.similarity;
  }
  r.vote_score = labelled > 0.0 ? risky / labelled : 0.0;
  r.recommendation = (labelled_count > 0 && r.vote_score >= kInterventionThreshold) ? Recommendation::intervene
                                                                                    : Recommendation::none;
}

/// Top-k cases by global similarity, ties broken by case_id ascending.
/// Cases of `exclude_resident` are skipped.
inline RetrievalResult retrieve(const DailyProfile& query, const CaseBase& base, const SimilarityConfig& config,
                                const std::optional<std::string>& exclude_resident = std::nullopt) {
  if (config.k < 1) fail(ErrorCode::Validation, "k must be >= 1");
  const FeatureRanges ranges = base.similarity_ranges();
  std::vector<Neighbour> all;
  all.reserve(base.cases.size());
  for (const auto& c : base.cases) {
    if (exclude_resident && c.profile.resident_id == *exclude_resident) continue;
    auto sim = global_similarity(query, c.profile, base.schema, config, ranges);
    all.push_back(Neighbour{c.case_id, sim.score, std::move(sim.per_feature), c.label});
  }
  auto better = [](const Neighbour& a, const Neighbour& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.case_id < b.case_id;
  };
  const std::size_t k = std::min(all.size(), static_cast<std::size_t>(config.k));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), better);
  all.resize(k);
  RetrievalResult r;
  r.neighbours = std::move(all);
  tally_vote(r);
  return r;
}

struct TrendPoint {
  Date date{};
  double self_similarity = 0.0;
  bool flag = false;
  bool operator==(const TrendPoint&) const = default;
};

inline constexpr double kDefaultTrendThreshold = 0.7;

/// For every profile with at least `window` predecessors, the mean
/// similarity to its `window` immediate predecessors.
inline std::vector<TrendPoint> self_trend(const std::vector<DailyProfile>& history, int window,
                                          const FeatureSchema& schema, const SimilarityConfig& config,
                                          const FeatureRanges& ranges, double threshold = kDefaultTrendThreshold) {
  if (window < 1) fail(ErrorCode::Validation, "self-trend window must be >= 1");
  std::vector<TrendPoint> out;
  for (std::size_t d = static_cast<std::size_t>(window); d < history.size(); ++d) {
    double sum = 0.0;
    for (std::size_t j = d - static_cast<std::size_t>(window); j < d; ++j) {
      sum += global_similarity(history[d], history[j], schema, config, ranges).score;
    }
    double mean = sum / static_cast<double>(window);
    out.push_back(TrendPoint{history[d].date, mean, mean < threshold});
  }
  return out;
}

inline void widen_ranges(FeatureRanges& ranges, const DailyProfile& p) {
  for (const auto& [name, v] : p.values) {
    if (v.is_null()) continue;
    auto it = ranges.find(name);
    if (it == ranges.end()) {
      ranges[name] = ValueRange{*v.value, *v.value};
    } else {
      it->second.min = std::min(it->second.min, *v.value);
      it->second.max = std::max(it->second.max, *v.value);
    }
  }
}

inline void validate(const Case& c, const FeatureSchema& schema) {
  if (c.case_id.empty()) fail(ErrorCode::Validation, "case with empty id");
  if (c.label != CaseLabel::unlabelled && c.label_source.empty()) {
    fail(ErrorCode::Validation, "case '" + c.case_id + "' is labelled but has no label_source");
  }
  validate(c.profile, schema);
}

inline CaseBase add_case(CaseBase base, Case c) {
  if (base.find(c.case_id)) fail(ErrorCode::DuplicateCaseId, "case id '" + c.case_id + "' already exists");
  validate(c, base.schema);
  widen_ranges(base.feature_ranges, c.profile);
  base.cases.push_back(std::move(c));
  return base;
}

inline nlohmann::ordered_json schema_to_json(const FeatureSchema& schema) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : schema.features) {
    nlohmann::ordered_json j;
    j["name"] = f.name;
    j["kind"] = std::string(to_string(f.kind));
    if (f.range_hint) j["range"] = {f.range_hint->min, f.range_hint->max};
    arr.push_back(std::move(j));
  }
  return arr;
}

inline FeatureSchema schema_from_json(const nlohmann::json& arr) {
  FeatureSchema schema;
  for (const auto& j : arr) {
    FeatureSpec f;
    f.name = j.at("name").get<std::string>();
    f.kind = feature_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("range")) {
      auto r = j.at("range").get<std::vector<double>>();
      if (r.size() != 2) fail(ErrorCode::Validation, "range of '" + f.name + "' must have two entries");
      f.range_hint = ValueRange{r[0], r[1]};
    }
    schema.features.push_back(std::move(f));
  }
  validate(schema);
  return schema;
}

inline nlohmann::ordered_json casebase_to_json(const CaseBase& base) {
  nlohmann::ordered_json j;
  j["schema"] = schema_to_json(base.schema);
  j["ranges"] = nlohmann::ordered_json::object();
  for (const auto& [name, r] : base.feature_ranges) j["ranges"][name] = {r.min, r.max};
  j["cases"] = nlohmann::ordered_json::array();
  for (const auto& c : base.cases) {
    nlohmann::ordered_json cj;
    cj["case_id"] = c.case_id;
    cj["label"] = std::string(to_string(c.label));
    cj["label_source"] = c.label_source;
    cj["context"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : c.context) cj["context"][k] = v;
    cj["profile"] = profile_to_record(c.profile);
    j["cases"].push_back(std::move(cj));
  }
  return j;
}

inline CaseBase casebase_from_json(const nlohmann::json& j) {
  CaseBase base;
  try {
    base.schema = schema_from_json(j.at("schema"));
    for (const auto& jc : j.at("cases")) {
      Case c;
      c.case_id = jc.at("case_id").get<std::string>();
      c.label = case_label_from_string(jc.at("label").get<std::string>());
      c.label_source = jc.value("label_source", std::string{});
      if (jc.contains("context")) c.context = jc.at("context").get<std::map<std::string, std::string>>();
      try {
        c.profile = record_to_profile(jc.at("profile"), base.schema);
      } catch (const Error& e) {
        fail(ErrorCode::SchemaMismatch, "case '" + c.case_id + "': " + e.what());
      }
      base = add_case(std::move(base), std::move(c));
    }
    // Stored ranges may be wider than what the cases span (e.g. after pruning).
    if (j.contains("ranges")) {
      for (auto it = j.at("ranges").begin(); it != j.at("ranges").end(); ++it) {
        auto r = it.value().get<std::vector<double>>();
        if (r.size() != 2 || r[0] > r[1]) fail(ErrorCode::Validation, "bad stored range for '" + it.key() + "'");
        if (!base.schema.find(it.key())) fail(ErrorCode::SchemaMismatch, "range for unknown feature '" + it.key() + "'");
        auto found = base.feature_ranges.find(it.key());
        if (found == base.feature_ranges.end()) {
          base.feature_ranges[it.key()] = ValueRange{r[0], r[1]};
        } else {
          found->second.min = std::min(found->second.min, r[0]);
          found->second.max = std::max(found->second.max, r[1]);
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("bad case base document: ") + e.what());
  }
  return base;
}

inline void save_casebase(const CaseBase& base, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot write case base '" + path + "'");
  out << casebase_to_json(base).dump(2) << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for '" + path + "'");
}

inline CaseBase load_casebase(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open case base '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Validation, "case base '" + path + "' is not valid JSON: " + e.what());
  }
  return casebase_from_json(j);
}

}  // namespace adlsense
