#include "adlsense/config.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <regex>

using namespace adlsense;

namespace {

const std::string kDefault = std::string(ADLSENSE_SOURCE_DIR) + "/config/default.toml";

std::string config_error(const std::string& toml) {
  try {
    parse_config_toml(toml);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
    return e.what();
  }
  ADD_FAILURE() << "accepted:\n" << toml;
  return {};
}

/// The shipped file with one line replaced.
std::string default_with(const std::string& from, const std::string& to) {
  std::string text = testsupport::slurp(kDefault);
  auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

}  // namespace

TEST(Config, ShippedFileEqualsDefaults) {
  EXPECT_EQ(load_config(kDefault), AppConfig{});
}

TEST(Config, EmptyDocumentGivesDefaults) {
  EXPECT_EQ(parse_config_toml(""), AppConfig{});
}

TEST(Config, JsonRoundTrip) {
  testsupport::TempDir dir;
  const AppConfig c = load_config(kDefault);
  const auto path = dir.write("c.json", config_to_json(c).dump(2));
  EXPECT_EQ(load_config(path), c);
}

TEST(Config, FingerprintIsStableAndSensitive) {
  const AppConfig a;
  EXPECT_TRUE(std::regex_match(config_fingerprint(a), std::regex("[0-9a-f]{16}")));
  EXPECT_EQ(config_fingerprint(a), config_fingerprint(load_config(kDefault)));
  AppConfig b;
  b.risky_template.scores[0] = 0.61;
  EXPECT_NE(config_fingerprint(a), config_fingerprint(b));
}

TEST(Config, BadFactorThresholdsNameTheFactor) {
  auto msg = config_error(default_with("lower = 240.0", "lower = 500.0"));
  EXPECT_NE(msg.find("risk.factors[0]"), std::string::npos) << msg;
  EXPECT_NE(msg.find("Sleep"), std::string::npos) << msg;
}

TEST(Config, UnknownKeyRejected) {
  auto msg = config_error("[profile]\nfoo = 1\n");
  EXPECT_NE(msg.find("profile.foo"), std::string::npos) << msg;
  msg = config_error("[nonsense]\n");
  EXPECT_NE(msg.find("nonsense"), std::string::npos) << msg;
}

TEST(Config, SyntaxErrorHasPosition) {
  auto msg = config_error("[profile\n");
  EXPECT_NE(msg.find("config:1:"), std::string::npos) << msg;
}

TEST(Config, WrongTypeNamesPath) {
  auto msg = config_error("[similarity]\nk = \"five\"\n");
  EXPECT_NE(msg.find("similarity.k"), std::string::npos) << msg;
}

TEST(Config, MissingFactor) {
  std::string text = testsupport::slurp(kDefault);
  auto start = text.find("[[risk.factors]]\nfactor = \"Toilet\"");
  ASSERT_NE(start, std::string::npos);
  auto end = text.find("\n\n", start);
  text.erase(start, end - start);
  auto msg = config_error(text);
  EXPECT_NE(msg.find("Toilet"), std::string::npos) << msg;
}

TEST(Config, WeightForUnknownFeature) {
  auto msg = config_error("[similarity.weights]\nheart_rate = 2.0\n");
  EXPECT_NE(msg.find("heart_rate"), std::string::npos) << msg;
}

TEST(Config, OverridesApply) {
  auto c = parse_config_toml(R"(
[profile]
day_start = "18:00"
disturbed_threshold = 3

[similarity]
k = 7
trend_window = 10

[risk.template.scores]
Sleep = 0.5
)");
  EXPECT_EQ(c.day_start, TimeOfDay::hm(18, 0));
  EXPECT_EQ(c.disturbed_threshold, 3);
  EXPECT_EQ(c.similarity.k, 7);
  EXPECT_EQ(c.trend_window, 10);
  EXPECT_EQ(c.risky_template.scores[index_of(RiskFactor::Sleep)], 0.5);
  EXPECT_EQ(c.risky_template.scores[index_of(RiskFactor::Toilet)], 0.6);
}

TEST(Config, CustomScenarioFromBase) {
  auto c = parse_config_toml(R"(
[[simulator.scenarios]]
name = "short_steady"
base = "steady_healthy"
days = 3
seed = 42
)");
  auto sc = find_scenario(c, "short_steady");
  ASSERT_TRUE(sc.has_value());
  EXPECT_EQ(sc->days, 3);
  EXPECT_EQ(sc->seed, 42u);
  EXPECT_EQ(sc->day_templates, steady_healthy_scenario().day_templates);
  EXPECT_TRUE(find_scenario(c, "steady_healthy").has_value());
  EXPECT_FALSE(find_scenario(c, "nope").has_value());
}

TEST(Config, ResidentNeedsKnownScenario) {
  auto msg = config_error("[[service.residents]]\nid = \"x\"\nscenario = \"nope\"\n");
  EXPECT_NE(msg.find("service.residents[0]"), std::string::npos) << msg;
}

TEST(Config, MissingFile) {
  try {
    load_config("/nonexistent/adlsense.toml");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
  }
}
