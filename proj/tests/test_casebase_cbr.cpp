#include "adlsense/casebase_cbr.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace adlsense;

namespace {

const Date kDay = parse_date("2023-01-01");

FeatureSchema two_numeric() {
  return FeatureSchema{{{"a", FeatureKind::numeric, ValueRange{0, 40}}, {"b", FeatureKind::count, ValueRange{0, 10}}}};
}

DailyProfile profile(const std::string& resident, std::map<std::string, std::optional<double>> values) {
  DailyProfile p;
  p.resident_id = resident;
  p.date = kDay;
  for (const auto& [k, v] : values) {
    p.values[k] = v ? FeatureValue::of(*v) : FeatureValue::null(NullReason::no_sensor);
    p.provenance[k] = {};
  }
  return p;
}

Case make_case(const std::string& id, DailyProfile p, CaseLabel label = CaseLabel::unlabelled) {
  Case c;
  c.case_id = id;
  c.profile = std::move(p);
  c.label = label;
  if (label != CaseLabel::unlabelled) c.label_source = "clinician";
  return c;
}

}  // namespace

TEST(LocalSimilarity, Examples) {
  EXPECT_DOUBLE_EQ(local_similarity(FeatureKind::numeric, 10.0, 20.0, {0, 40}, 0.5), 0.75);
  EXPECT_EQ(local_similarity(FeatureKind::binary, 1.0, 0.0, {0, 1}, 0.5), 0.0);
  for (auto k : {FeatureKind::binary, FeatureKind::count, FeatureKind::duration_minutes, FeatureKind::numeric}) {
    EXPECT_EQ(local_similarity(k, 1.0, 1.0, {0, 4}, 0.5), 1.0);
  }
}

TEST(LocalSimilarity, NullsAndClamp) {
  EXPECT_EQ(local_similarity(FeatureKind::count, std::nullopt, 3.0, {0, 4}, 0.3), 0.3);
  EXPECT_EQ(local_similarity(FeatureKind::count, std::nullopt, std::nullopt, {0, 4}, 0.3), 0.3);
  EXPECT_EQ(local_similarity(FeatureKind::numeric, -100.0, 100.0, {0, 4}, 0.5), 0.0);
}

TEST(LocalSimilarity, DegenerateRange) {
  try {
    local_similarity(FeatureKind::numeric, 1.0, 2.0, {3, 3}, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateRange);
  }
  // Binary features ignore the range.
  EXPECT_EQ(local_similarity(FeatureKind::binary, 1.0, 1.0, {3, 3}, 0.5), 1.0);
}

TEST(GlobalSimilarity, WeightedMeanExample) {
  auto schema = two_numeric();
  SimilarityConfig cfg;
  auto p = profile("x", {{"a", 10}, {"b", 4}});
  auto q = profile("y", {{"a", 10}, {"b", 9}});
  FeatureRanges ranges{{"a", {0, 40}}, {"b", {0, 10}}};
  auto s = global_similarity(p, q, schema, cfg, ranges);
  EXPECT_DOUBLE_EQ(s.per_feature.at("a"), 1.0);
  EXPECT_DOUBLE_EQ(s.per_feature.at("b"), 0.5);
  EXPECT_DOUBLE_EQ(s.score, 0.75);
  EXPECT_EQ(global_similarity(p, p, schema, cfg, ranges).score, 1.0);
}

TEST(GlobalSimilarity, ZeroWeightExcludesFeature) {
  auto schema = two_numeric();
  SimilarityConfig cfg;
  cfg.weights["b"] = 0.0;
  auto p = profile("x", {{"a", 10}, {"b", 0}});
  auto q = profile("y", {{"a", 10}, {"b", 10}});
  auto s = global_similarity(p, q, schema, cfg, {{"a", {0, 40}}, {"b", {0, 10}}});
  EXPECT_EQ(s.score, 1.0);
  EXPECT_EQ(s.per_feature.count("b"), 0u);
}

TEST(GlobalSimilarity, DegenerateRangeNamesFeature) {
  auto schema = FeatureSchema{{{"a", FeatureKind::numeric, std::nullopt}}};
  auto p = profile("x", {{"a", 1}});
  try {
    global_similarity(p, p, schema, {}, {{"a", {2, 2}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateRange);
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
}

TEST(GlobalSimilarity, MatchesOracleOnRandomPairs) {
  std::mt19937_64 rng(11);
  const auto schema = default_schema();
  CaseBase ranges_from;
  ranges_from.schema = schema;
  for (int trial = 0; trial < 2000; ++trial) {
    auto cfg = oracle::random_config(schema, rng);
    auto p = oracle::random_profile(schema, rng, "p", kDay, 0.1);
    auto q = oracle::random_profile(schema, rng, "q", kDay, 0.1);
    auto ranges = ranges_from.similarity_ranges();
    const double got = global_similarity(p, q, schema, cfg, ranges).score;
    EXPECT_NEAR(got, oracle::similarity(p, q, schema, cfg, ranges), 1e-9);
    EXPECT_EQ(got, global_similarity(q, p, schema, cfg, ranges).score);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(GlobalSimilarity, ReflexiveOnNullFreeProfiles) {
  std::mt19937_64 rng(12);
  const auto schema = default_schema();
  CaseBase b;
  b.schema = schema;
  for (int trial = 0; trial < 500; ++trial) {
    auto cfg = oracle::random_config(schema, rng);
    auto p = oracle::random_profile(schema, rng, "p", kDay, 0.0);
    EXPECT_EQ(global_similarity(p, p, schema, cfg, b.similarity_ranges()).score, 1.0);
  }
}

TEST(Retrieve, IdentityAtKOne) {
  CaseBase base;
  base.schema = two_numeric();
  base = add_case(base, make_case("c1", profile("x", {{"a", 5}, {"b", 1}})));
  base = add_case(base, make_case("c2", profile("x", {{"a", 30}, {"b", 9}})));
  SimilarityConfig cfg;
  cfg.k = 1;
  auto r = retrieve(profile("q", {{"a", 30}, {"b", 9}}), base, cfg);
  ASSERT_EQ(r.neighbours.size(), 1u);
  EXPECT_EQ(r.neighbours[0].case_id, "c2");
  EXPECT_EQ(r.neighbours[0].similarity, 1.0);
}

TEST(Retrieve, KLargerThanBase) {
  CaseBase base;
  base.schema = two_numeric();
  base = add_case(base, make_case("b", profile("x", {{"a", 5}, {"b", 1}})));
  base = add_case(base, make_case("a", profile("x", {{"a", 5}, {"b", 1}})));
  base = add_case(base, make_case("c", profile("x", {{"a", 40}, {"b", 1}})));
  SimilarityConfig cfg;
  cfg.k = 10;
  auto r = retrieve(profile("q", {{"a", 5}, {"b", 1}}), base, cfg);
  ASSERT_EQ(r.neighbours.size(), 3u);
  // Tie at 1.0 broken by id.
  EXPECT_EQ(r.neighbours[0].case_id, "a");
  EXPECT_EQ(r.neighbours[1].case_id, "b");
  EXPECT_EQ(r.neighbours[2].case_id, "c");
}

TEST(Retrieve, EmptyAfterExclusion) {
  CaseBase base;
  base.schema = two_numeric();
  base = add_case(base, make_case("c1", profile("me", {{"a", 5}, {"b", 1}})));
  auto r = retrieve(profile("me", {{"a", 5}, {"b", 1}}), base, {}, std::string("me"));
  EXPECT_TRUE(r.neighbours.empty());
  EXPECT_EQ(r.recommendation, Recommendation::none);
  EXPECT_EQ(r.vote_score, 0.0);
}

TEST(Retrieve, VoteSkipsUnlabelled) {
  CaseBase base;
  base.schema = two_numeric();
  base = add_case(base, make_case("r", profile("x", {{"a", 10}, {"b", 5}}), CaseLabel::risky));
  base = add_case(base, make_case("n", profile("x", {{"a", 20}, {"b", 5}}), CaseLabel::not_risky));
  base = add_case(base, make_case("u", profile("x", {{"a", 10}, {"b", 5}})));
  auto r = retrieve(profile("q", {{"a", 10}, {"b", 5}}), base, {});
  // risky sim 1.0, not_risky sim (0.75 + 1) / 2.
  const double not_risky = (0.75 + 1.0) / 2.0;
  EXPECT_DOUBLE_EQ(r.vote_score, 1.0 / (1.0 + not_risky));
  EXPECT_EQ(r.recommendation, Recommendation::intervene);
}

TEST(Retrieve, OnlyUnlabelledNeverIntervenes) {
  CaseBase base;
  base.schema = two_numeric();
  base = add_case(base, make_case("u", profile("x", {{"a", 10}, {"b", 5}})));
  auto r = retrieve(profile("q", {{"a", 10}, {"b", 5}}), base, {});
  EXPECT_EQ(r.recommendation, Recommendation::none);
}

TEST(Retrieve, MatchesExhaustiveScan) {
  std::mt19937_64 rng(99);
  const auto schema = default_schema();
  for (int trial = 0; trial < 30; ++trial) {
    auto base = oracle::random_base(schema, rng, 100);
    auto cfg = oracle::random_config(schema, rng);
    cfg.k = 5;
    auto q = oracle::random_profile(schema, rng, "q", kDay);
    auto got = retrieve(q, base, cfg);
    auto want = oracle::exhaustive_scan(q, base, cfg);
    ASSERT_EQ(got.neighbours.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(got.neighbours[i].case_id, want[i].id);
      EXPECT_NEAR(got.neighbours[i].similarity, want[i].score, 1e-9);
    }
  }
}

TEST(Retrieve, WeightRescalingKeepsOrder) {
  std::mt19937_64 rng(7);
  const auto schema = default_schema();
  for (int trial = 0; trial < 20; ++trial) {
    auto base = oracle::random_base(schema, rng, 80);
    auto cfg = oracle::random_config(schema, rng);
    auto q = oracle::random_profile(schema, rng, "q", kDay);
    auto scaled = cfg;
    const double c = std::ldexp(1.0, static_cast<int>(rng() % 9) - 4);
    for (auto& [k, w] : scaled.weights) w *= c;
    auto a = retrieve(q, base, cfg);
    auto b = retrieve(q, base, scaled);
    ASSERT_EQ(a.neighbours.size(), b.neighbours.size());
    for (std::size_t i = 0; i < a.neighbours.size(); ++i) {
      EXPECT_EQ(a.neighbours[i].case_id, b.neighbours[i].case_id);
      EXPECT_EQ(a.neighbours[i].similarity, b.neighbours[i].similarity);
    }
  }
}

TEST(SelfTrend, ConstantHistory) {
  auto schema = two_numeric();
  std::vector<DailyProfile> h(20, profile("me", {{"a", 10}, {"b", 2}}));
  auto t = self_trend(h, 14, schema, {}, {{"a", {0, 40}}, {"b", {0, 10}}});
  ASSERT_EQ(t.size(), 6u);
  for (const auto& p : t) {
    EXPECT_EQ(p.self_similarity, 1.0);
    EXPECT_FALSE(p.flag);
  }
}

TEST(SelfTrend, FinalDayAtExtremes) {
  auto schema = two_numeric();
  FeatureRanges ranges{{"a", {0, 40}}, {"b", {0, 10}}};
  std::vector<DailyProfile> h(15, profile("me", {{"a", 10}, {"b", 2}}));
  h.back() = profile("me", {{"a", 40}, {"b", 10}});
  SimilarityConfig cfg;
  cfg.weights = {{"a", 2.0}, {"b", 1.0}};
  auto t = self_trend(h, 14, schema, cfg, ranges);
  ASSERT_EQ(t.size(), 1u);
  // a: 1 - 30/40 = 0.25, b: 1 - 8/10 = 0.2, weighted (2*0.25 + 0.2) / 3.
  EXPECT_NEAR(t[0].self_similarity, (2 * 0.25 + 0.2) / 3.0, 1e-12);
  EXPECT_TRUE(t[0].flag);
}

TEST(SelfTrend, ShortHistory) {
  auto schema = two_numeric();
  std::vector<DailyProfile> h(5, profile("me", {{"a", 10}, {"b", 2}}));
  EXPECT_TRUE(self_trend(h, 14, schema, {}, {{"a", {0, 40}}, {"b", {0, 10}}}).empty());
  EXPECT_THROW(self_trend(h, 0, schema, {}, {}), Error);
}

TEST(CaseBaseOps, AddExtendsRange) {
  CaseBase base;
  base.schema = two_numeric();
  base = add_case(base, make_case("c1", profile("x", {{"a", 5}, {"b", 1}})));
  EXPECT_EQ(base.feature_ranges.at("a"), (ValueRange{5, 5}));
  base = add_case(base, make_case("c2", profile("x", {{"a", 50}, {"b", std::nullopt}})));
  EXPECT_EQ(base.feature_ranges.at("a"), (ValueRange{5, 50}));
  EXPECT_EQ(base.feature_ranges.at("b"), (ValueRange{1, 1}));
  // The schema hint still wins for normalisation.
  EXPECT_EQ(base.similarity_ranges().at("a"), (ValueRange{0, 40}));
}

TEST(CaseBaseOps, DuplicateId) {
  CaseBase base;
  base.schema = two_numeric();
  base = add_case(base, make_case("c1", profile("x", {{"a", 5}, {"b", 1}})));
  try {
    add_case(base, make_case("c1", profile("y", {{"a", 6}, {"b", 1}})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateCaseId);
  }
}

TEST(CaseBaseOps, LabelNeedsSource) {
  CaseBase base;
  base.schema = two_numeric();
  auto c = make_case("c1", profile("x", {{"a", 5}, {"b", 1}}), CaseLabel::risky);
  c.label_source.clear();
  EXPECT_THROW(add_case(base, c), Error);
}

TEST(CaseBaseOps, SaveLoadRoundTrip) {
  std::mt19937_64 rng(3);
  auto base = oracle::random_base(default_schema(), rng, 40);
  base.cases[0].context = {{"age_band", "80-89"}, {"mobility_aid", "frame"}};
  testsupport::TempDir dir;
  const auto path = (dir / "cb.json").string();
  save_casebase(base, path);
  EXPECT_EQ(load_casebase(path), base);
}

TEST(CaseBaseOps, LoadErrors) {
  testsupport::TempDir dir;
  try {
    load_casebase((dir / "missing.json").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
  CaseBase base;
  base.schema = two_numeric();
  base = add_case(base, make_case("c1", profile("x", {{"a", 5}, {"b", 1}})));
  auto j = nlohmann::json::parse(casebase_to_json(base).dump());
  j["cases"][0]["profile"]["features"]["zzz"] = 1;
  try {
    casebase_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
}
