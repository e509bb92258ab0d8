#include "adlsense/service_server.hpp"
#include "api_replay.hpp"
#include "oracles.hpp"
#include "support.hpp"
#include "svg_check.hpp"

#include <gtest/gtest.h>

#include <thread>

using namespace adlsense;
using json = nlohmann::json;

namespace {

/// Shared across tests: building the three 30-day residents takes a moment.
const std::shared_ptr<const ApiSnapshot>& demo() {
  static const auto snap = build_snapshot(AppConfig{});
  return snap;
}

ApiResponse get(const std::string& target) { return handle(demo(), parse_target(target)); }

void expect_error(const ApiResponse& r, int status, const std::string& code) {
  EXPECT_EQ(r.status, status) << r.body;
  EXPECT_EQ(r.json()["error"], code) << r.body;
}

AppConfig small_config(int residents) {
  AppConfig cfg;
  cfg.service.residents.resize(static_cast<std::size_t>(residents));
  for (auto& r : cfg.service.residents) r.days = 4;
  return cfg;
}

int polygon_count(const std::string& svg) {
  int n = 0;
  for (const auto& e : svgcheck::by_class(svgcheck::parse(svg), "series")) n += e.tag == "polygon";
  return n;
}

}  // namespace

TEST(ServiceApi, NoSnapshotIs503) {
  auto r = handle(nullptr, parse_target("/api/residents"));
  expect_error(r, 503, "no_snapshot");
  EXPECT_EQ(r.headers.count("X-Config-Fingerprint"), 0u);
}

TEST(ServiceApi, ListsResidentsSorted) {
  auto r = get("/api/residents");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "application/json");
  auto arr = r.json();
  ASSERT_EQ(arr.size(), 3u);
  EXPECT_EQ(arr[0]["resident_id"], "res-decline");
  EXPECT_EQ(arr[1]["resident_id"], "res-poor-sleep");
  EXPECT_EQ(arr[2]["resident_id"], "res-steady");
  for (const auto& e : arr) {
    EXPECT_EQ(e["days_available"], 30);
    EXPECT_EQ(e["first_date"], "2023-01-01");
    EXPECT_EQ(e["last_date"], "2023-01-30");
  }
  EXPECT_EQ(arr[1]["label"], "risky");
  EXPECT_EQ(arr[2]["label"], "not_risky");
  EXPECT_EQ(r.headers.at("X-Config-Fingerprint"), config_fingerprint(AppConfig{}));
}

TEST(ServiceApi, ReloadPublishesNewSnapshot) {
  SnapshotHolder holder;
  EXPECT_EQ(handle(holder.get(), parse_target("/api/residents")).status, 503);
  holder.publish(build_snapshot(small_config(2)));
  auto before = handle(holder.get(), parse_target("/api/residents"));
  ASSERT_EQ(before.json().size(), 2u);
  // A reader holding the old snapshot keeps seeing it.
  auto old = holder.get();
  holder.publish(build_snapshot(small_config(3)));
  auto after = handle(holder.get(), parse_target("/api/residents"));
  EXPECT_EQ(after.json().size(), 3u);
  EXPECT_NE(before.headers.at("X-Config-Fingerprint"), after.headers.at("X-Config-Fingerprint"));
  EXPECT_EQ(handle(old, parse_target("/api/residents")).body, before.body);
}

TEST(ServiceApi, RiskFlagsPoorSleeper) {
  auto r = get("/api/residents/res-poor-sleep/risk?date=2023-01-05");
  ASSERT_EQ(r.status, 200) << r.body;
  auto j = r.json();
  std::set<std::string> flags(j["flags"].begin(), j["flags"].end());
  EXPECT_TRUE(flags.count("Sleep"));
  EXPECT_TRUE(flags.count("Toilet"));
  EXPECT_EQ(j["sources"]["Sleep"]["feature"], "sleep_duration");
  EXPECT_EQ(j["sources"]["Toilet"]["feature"], "toilet_visit_count");
  EXPECT_TRUE(j["template"]["scores"].contains("Wandering"));
}

TEST(ServiceApi, DateDefaultsToLatestDay) {
  EXPECT_EQ(get("/api/residents/res-steady/risk").body, get("/api/residents/res-steady/risk?date=2023-01-30").body);
}

TEST(ServiceApi, UnknownResidentAndMissingDay) {
  expect_error(get("/api/residents/nobody/risk"), 404, "unknown_resident");
  auto r = get("/api/residents/res-steady/risk?date=2022-12-01");
  expect_error(r, 404, "no_profile");
  EXPECT_NE(r.json()["detail"].get<std::string>().find("2023-01-01"), std::string::npos);
  expect_error(get("/api/residents/res-steady/profile?date=2023-13-01"), 400, "bad_parameter");
  expect_error(get("/api/residents/res-steady/risk?date=yesterday"), 400, "bad_parameter");
}

TEST(ServiceApi, UnknownRoutes) {
  expect_error(get("/api/nothing"), 404, "not_found");
  expect_error(get("/api/residents/res-steady"), 404, "not_found");
  expect_error(get("/api/residents/res-steady/bogus"), 404, "not_found");
}

TEST(ServiceApi, SimilarValidatesK) {
  expect_error(get("/api/residents/res-steady/similar?k=0"), 422, "invalid_k");
  expect_error(get("/api/residents/res-steady/similar?k=-3"), 422, "invalid_k");
  expect_error(get("/api/residents/res-steady/similar?k=two"), 400, "bad_parameter");
  expect_error(get("/api/residents/res-steady/similar?include_self=maybe"), 400, "bad_parameter");
}

TEST(ServiceApi, SimilarIncludeSelfFindsTheDayItself) {
  auto j = get("/api/residents/res-poor-sleep/similar?date=2023-01-05&k=1&include_self=true").json();
  ASSERT_EQ(j["neighbours"].size(), 1u);
  EXPECT_EQ(j["neighbours"][0]["case_id"], "res-poor-sleep:2023-01-05");
  EXPECT_EQ(j["neighbours"][0]["similarity"], 1.0);
}

TEST(ServiceApi, SimilarMatchesExhaustiveScan) {
  const auto& snap = *demo();
  for (const auto& [id, res] : snap.residents) {
    for (std::size_t d = 0; d < res.days.size(); d += 7) {
      const auto& day = res.days[d];
      auto j = get("/api/residents/" + id + "/similar?k=5&date=" + format_date(day.date)).json();
      // The scan sees only other residents' cases.
      CaseBase others = snap.casebase;
      others.cases.clear();
      for (const auto& c : snap.casebase.cases) {
        if (c.profile.resident_id != id) others.cases.push_back(c);
      }
      SimilarityConfig sc = snap.config.similarity;
      sc.k = 5;
      auto want = oracle::exhaustive_scan(day.profile, others, sc, snap.casebase.similarity_ranges());
      ASSERT_EQ(j["neighbours"].size(), want.size());
      for (std::size_t n = 0; n < want.size(); ++n) {
        EXPECT_EQ(j["neighbours"][n]["case_id"], want[n].id);
        EXPECT_NEAR(j["neighbours"][n]["similarity"].get<double>(), want[n].score, 1e-9);
        EXPECT_NE(j["neighbours"][n]["case_id"].get<std::string>().rfind(id + ":", 0), 0u);
      }
    }
  }
}

TEST(ServiceApi, TrendParameters) {
  expect_error(get("/api/residents/res-steady/trend"), 400, "bad_parameter");
  expect_error(get("/api/residents/res-steady/trend?factor=Gait"), 404, "unknown_factor");
  auto j = get("/api/residents/res-steady/trend?factor=Sleep").json();
  EXPECT_EQ(j["factor"], "Sleep");
  EXPECT_EQ(j["series"].size(), 30u);
}

TEST(ServiceApi, SelfSimilarityFallsForDecline) {
  auto j = get("/api/residents/res-decline/self-similarity").json();
  auto& s = j["series"];
  ASSERT_EQ(s.size(), 30u - 14u);
  EXPECT_LT(s.back()["self_similarity"].get<double>(), s.front()["self_similarity"].get<double>());
  expect_error(get("/api/residents/res-decline/self-similarity?window=0"), 422, "invalid_window");
  EXPECT_EQ(get("/api/residents/res-decline/self-similarity?window=29").json()["series"].size(), 1u);
  EXPECT_TRUE(get("/api/residents/res-decline/self-similarity?window=40").json()["series"].empty());
}

TEST(ServiceApi, RadarOverlays) {
  auto plain = get("/api/residents/res-poor-sleep/radar.svg?date=2023-01-05");
  ASSERT_EQ(plain.status, 200);
  EXPECT_EQ(plain.content_type, "image/svg+xml");
  EXPECT_EQ(polygon_count(plain.body), 1);
  EXPECT_EQ(polygon_count(get("/api/residents/res-poor-sleep/radar.svg?date=2023-01-05&overlay=risky").body), 2);
  EXPECT_EQ(polygon_count(get("/api/residents/res-poor-sleep/radar.svg?date=2023-01-05&overlay=risky,history").body), 3);
  // Nothing precedes the first day.
  EXPECT_EQ(polygon_count(get("/api/residents/res-poor-sleep/radar.svg?date=2023-01-01&overlay=history").body), 1);
  expect_error(get("/api/residents/res-poor-sleep/radar.svg?overlay=neighbours"), 400, "bad_parameter");
}

TEST(ServiceApi, MethodsAndCors) {
  auto post = handle(demo(), parse_target("/api/residents", "POST"));
  expect_error(post, 405, "method_not_allowed");
  auto opt = handle(demo(), parse_target("/api/residents", "OPTIONS"));
  EXPECT_EQ(opt.status, 204);
  EXPECT_TRUE(opt.body.empty());
  EXPECT_EQ(opt.headers.at("Access-Control-Allow-Origin"), "*");
  EXPECT_EQ(get("/api/residents").headers.at("Access-Control-Allow-Origin"), "*");

  AppConfig cfg = small_config(1);
  cfg.service.cors = false;
  auto r = handle(build_snapshot(cfg), parse_target("/api/residents"));
  EXPECT_EQ(r.headers.count("Access-Control-Allow-Origin"), 0u);
}

TEST(ServiceApi, RepeatedRequestsAreIdentical) {
  for (const char* t : {"/api/residents", "/api/residents/res-decline/risk?date=2023-01-20",
                        "/api/residents/res-decline/similar?k=7", "/api/residents/res-decline/radar.svg?overlay=risky,history",
                        "/api/residents/res-decline/self-similarity?window=5"}) {
    auto a = get(t);
    auto b = get(t);
    EXPECT_EQ(a.status, b.status) << t;
    EXPECT_EQ(a.body, b.body) << t;
    EXPECT_EQ(a.headers, b.headers) << t;
  }
}

TEST(ServiceApi, ReplayMatchesDirectComputation) {
  auto report = replay::run(*demo());
  EXPECT_GT(report.requests, 400);
  EXPECT_GT(report.numbers, 10000);
  for (std::size_t i = 0; i < std::min<std::size_t>(report.mismatches.size(), 10); ++i) {
    ADD_FAILURE() << report.mismatches[i];
  }
}

TEST(ServiceApi, ExtraCasebaseMergedAndDuplicatesRejected) {
  testsupport::TempDir dir;
  AppConfig base_cfg = small_config(1);
  auto first = build_snapshot(base_cfg);
  // Re-label the cases under new ids and feed them back in.
  CaseBase extra = first->casebase;
  for (auto& c : extra.cases) c.case_id = "archive:" + c.case_id;
  const auto path = (dir / "extra.json").string();
  save_casebase(extra, path);
  AppConfig cfg = base_cfg;
  cfg.service.casebase = path;
  auto snap = build_snapshot(cfg);
  EXPECT_EQ(snap->casebase.cases.size(), 2 * first->casebase.cases.size());
  EXPECT_TRUE(replay::run(*snap).ok());

  save_casebase(first->casebase, path);
  try {
    build_snapshot(cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateCaseId);
  }
}

TEST(ParseTarget, DecodesPathAndQuery) {
  auto r = parse_target("/api/residents/a%20b/trend?factor=Sleep%20Disturbances&x&y=1+2", "HEAD");
  EXPECT_EQ(r.method, "HEAD");
  EXPECT_EQ(r.path, "/api/residents/a b/trend");
  EXPECT_EQ(r.params.at("factor"), "Sleep Disturbances");
  EXPECT_EQ(r.params.at("x"), "");
  EXPECT_TRUE(r.params.count("y"));
}

TEST(ParseListen, Addresses) {
  EXPECT_EQ(parse_listen("127.0.0.1:8080"), std::make_pair(std::string("127.0.0.1"), 8080));
  EXPECT_EQ(parse_listen("[::1]:0").second, 0);
  for (const char* bad : {"localhost", ":80", "host:", "host:http", "host:70000", "host:-1"}) {
    EXPECT_THROW(parse_listen(bad), Error) << bad;
  }
}

TEST(ApiServer, HttpRoundTrip) {
  SnapshotHolder holder;
  holder.publish(build_snapshot(small_config(2)));
  ApiServer server(holder);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  for (int i = 0; i < 200 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));

  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/api/residents");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, handle(holder.get(), parse_target("/api/residents")).body);
  EXPECT_EQ(res->get_header_value("X-Config-Fingerprint"), holder.get()->fingerprint);

  auto svg = client.Get("/api/residents/res-decline/radar.svg?overlay=risky");
  ASSERT_TRUE(svg);
  EXPECT_EQ(svg->get_header_value("Content-Type"), "image/svg+xml");

  auto missing = client.Get("/api/residents/nobody/risk");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  auto post = client.Post("/api/residents", "{}", "application/json");
  ASSERT_TRUE(post);
  EXPECT_EQ(post->status, 405);

  server.stop();
  t.join();
  EXPECT_FALSE(server.running());
}
