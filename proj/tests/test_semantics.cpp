// Template rendering, attribute summaries, provider validation and the
// semantic bank generator.

#include <doctest.h>

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "scdt/binning.hpp"
#include "scdt/errors.hpp"
#include "scdt/manifest.hpp"
#include "scdt/sa_index.hpp"
#include "scdt/semantics.hpp"

using namespace scdt;

namespace {

// Mode whose median descriptor is exactly `med` (identity scaler, mu 0).
ModeRule mode_at(const Descriptor& med, int mode_id, int support) {
  ModeRule m;
  m.mode_id = mode_id;
  m.support = support;
  m.distance.scaler.med = med;
  for (std::size_t j = 0; j < kDescriptorDims; ++j) {
    m.distance.scaler.iqr[j] = 1.0;
    m.distance.mu[j] = 0.0;
    m.distance.sigma[j] = 1.0;
  }
  m.envelope.lo[kDimMin] = med[kDimMean] - 5.0;
  m.envelope.hi[kDimMax] = med[kDimMean] + 5.0;
  return m;
}

Descriptor sig_descriptor(double mean, double slope, double stddev, double delta) {
  Descriptor y{};
  y[kDimMean] = mean;
  y[kDimSlope1] = slope;
  y[kDimSlope2] = slope;
  y[kDimSlope3] = slope;
  y[kDimStd] = stddev;
  y[kDimDelta] = delta;
  y[kDimAmp] = 4.0 * stddev;
  return y;
}

// Reference FNV-1a 64 written from the published constants, kept separate
// from the production hash on purpose.
std::string reference_digest(const std::string& payload) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : payload) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// One sensor S driven by actuator A (two states, distinct level bands) and
// an inert actuator B: A is related, B is not.
struct SemanticsFixture {
  Manifest manifest;
  RuleBank bank;
  std::vector<ActuatorBinning> binnings;
  SaIndex index;
  EngineConfig cfg;

  void rebuild_index() { index = build_sa_index(bank, binnings, manifest, cfg); }

  SemanticsFixture() {
    manifest.window = 30;
    manifest.stride = 30;
    manifest.sensors = {"S"};
    manifest.actuators = {"A", "B"};
    manifest.scope["S"] = {"A", "B"};

    bank.meta.window = 30;
    bank.meta.sensor_ranges["S"] = {0.0, 100.0};

    KeyRules low;
    low.key = {"S", {0, 0}};
    low.modes.push_back(mode_at(sig_descriptor(10.0, 0.0, 1.0, 1.0), 0, 30));
    KeyRules high;
    high.key = {"S", {1, 0}};
    high.modes.push_back(mode_at(sig_descriptor(90.0, 0.0, 1.0, 1.0), 0, 30));
    bank.keys = {low, high};

    std::vector<double> a_col = {0.0, 1.0};
    std::vector<double> b_col = {0.0};
    binnings.push_back(fit_binning("A", a_col, cfg));
    binnings.push_back(fit_binning("B", b_col, cfg));
    rebuild_index();
  }
};

class CannedProvider final : public TextProvider {
 public:
  explicit CannedProvider(std::string reply) : reply_(std::move(reply)) {}
  const char* kind() const override { return "canned"; }
  std::string complete(const SemanticPrompt&) override {
    calls.fetch_add(1);
    return reply_;
  }
  std::atomic<int> calls{0};

 private:
  std::string reply_;
};

class ThrowingProvider final : public TextProvider {
 public:
  const char* kind() const override { return "throwing"; }
  std::string complete(const SemanticPrompt&) override {
    throw ProviderError("backend unreachable");
  }
};

}  // namespace

TEST_CASE("template sentence renders every field in a fixed shape") {
  AttributeSummary s;
  s.mean = 55.25;
  s.lo = 10.0;
  s.hi = 97.5;
  s.trend = Trend::kIncrease;
  s.variability = Variability::kCompact;
  s.shape = Shape::kMiddle;
  const SemanticTarget target{"LIT", "MV", 2};

  CHECK(render_template_text(s, target) ==
        "Under MV=2, LIT typically rises within [10.00, 97.50] (mean 55.25), "
        "with compact variability and middle dynamics.");

  s.trend = Trend::kDecrease;
  s.variability = Variability::kDispersed;
  s.shape = Shape::kFluctuating;
  CHECK(render_template_text(s, target) ==
        "Under MV=2, LIT typically falls within [10.00, 97.50] (mean 55.25), "
        "with dispersed variability and fluctuating dynamics.");

  s.trend = Trend::kMaintain;
  CHECK(render_template_text(s, target).find("holds steady") != std::string::npos);
  CHECK(sentence_count(render_template_text(s, target)) == 1);
}

TEST_CASE("attribute summaries mirror the mode's medians and signature") {
  EngineConfig cfg;
  const SensorRange range{0.0, 100.0};
  const ModeRule mode = mode_at(sig_descriptor(50.0, 1.0, 1.0, 1.0), 0, 25);

  const AttributeSummary s = summarize_attributes(mode, range, 30, cfg);
  CHECK(s.mean == doctest::Approx(50.0));
  CHECK(s.lo == doctest::Approx(45.0));
  CHECK(s.hi == doctest::Approx(55.0));
  CHECK(s.amp == doctest::Approx(4.0));
  CHECK(s.lo <= s.mean);
  CHECK(s.mean <= s.hi);

  const ModeSignature sig = mode_signature(mode, range, 30, cfg);
  CHECK(s.trend == sig.trend);
  CHECK(s.variability == sig.variability);
  CHECK(s.shape == sig.shape);
}

TEST_CASE("degenerate sensor ranges cannot be summarized") {
  EngineConfig cfg;
  const ModeRule mode = mode_at(sig_descriptor(5.0, 0.0, 1.0, 1.0), 0, 25);
  CHECK_THROWS_AS(summarize_attributes(mode, SensorRange{5.0, 5.0}, 30, cfg), UsageError);
  CHECK_THROWS_AS(summarize_attributes(mode, SensorRange{9.0, 3.0}, 30, cfg), UsageError);
}

TEST_CASE("sentence counting groups terminators and counts fragments") {
  CHECK(sentence_count("") == 0);
  CHECK(sentence_count("   \n\t ") == 0);
  CHECK(sentence_count("Hello.") == 1);
  CHECK(sentence_count("Hello") == 1);
  CHECK(sentence_count("One. Two.") == 2);
  CHECK(sentence_count("One. Two. Three!") == 3);
  CHECK(sentence_count("Wait... what") == 2);
  CHECK(sentence_count("Really? Yes!") == 2);
  CHECK(sentence_count("...") == 0);
}

TEST_CASE("offline generation covers exactly the related entries") {
  SemanticsFixture fx;
  const SemanticBank sem = generate_semantic_bank(fx.bank, fx.index, fx.cfg, nullptr);

  // A (r = 1) contributes both states; B (r = 0 < r_min) contributes nothing.
  REQUIRE(sem.size() == 2);
  REQUIRE(sem.count(SemanticTarget{"S", "A", 0}) == 1);
  REQUIRE(sem.count(SemanticTarget{"S", "A", 1}) == 1);
  CHECK(sem.count(SemanticTarget{"S", "B", 0}) == 0);

  const SemanticRule& low = sem.at(SemanticTarget{"S", "A", 0});
  CHECK(low.provider == "template");
  CHECK(low.text ==
        render_template_text(summarize_attributes(fx.bank.keys[0].modes[0],
                                                  fx.bank.meta.sensor_ranges.at("S"), 30, fx.cfg),
                             low.target));
  CHECK(low.provider_digest.size() == 16);
  CHECK(low.target.to_string() == "S|A=0");

  const SemanticRule& high = sem.at(SemanticTarget{"S", "A", 1});
  CHECK(high.attributes.mean == doctest::Approx(90.0));
}

TEST_CASE("the highest-support pooled mode describes the entry") {
  SemanticsFixture fx;
  // Second mode under the low key with more support and a different level.
  fx.bank.keys[0].modes.push_back(mode_at(sig_descriptor(30.0, 0.0, 1.0, 1.0), 1, 45));
  fx.rebuild_index();
  SemanticBank sem = generate_semantic_bank(fx.bank, fx.index, fx.cfg, nullptr);
  CHECK(sem.at(SemanticTarget{"S", "A", 0}).attributes.mean == doctest::Approx(30.0));

  // With equal support the lower mode_id wins.
  fx.bank.keys[0].modes[1].support = 30;
  sem = generate_semantic_bank(fx.bank, fx.index, fx.cfg, nullptr);
  CHECK(sem.at(SemanticTarget{"S", "A", 0}).attributes.mean == doctest::Approx(10.0));
}

TEST_CASE("prompt payloads are well-formed JSON with fixed fields") {
  SemanticsFixture fx;
  const AttributeSummary s = summarize_attributes(fx.bank.keys[0].modes[0],
                                                  fx.bank.meta.sensor_ranges.at("S"), 30, fx.cfg);
  const std::string payload = build_prompt_payload(SemanticTarget{"S", "A", 0}, s);

  const nlohmann::json j = nlohmann::json::parse(payload);
  CHECK(j.at("sensor") == "S");
  CHECK(j.at("actuator") == "A");
  CHECK(j.at("state") == 0);
  CHECK(j.at("attributes").at("trend").is_string());
  CHECK(j.at("attributes").at("variability").is_string());
  CHECK(j.at("attributes").at("shape").is_string());
  CHECK(j.at("representative_stats").at("mean").is_number());
  CHECK(j.at("representative_stats").at("lo").is_number());
  CHECK(j.at("representative_stats").at("hi").is_number());
  CHECK(j.at("representative_stats").at("amp").is_number());
  CHECK(j.at("instructions").is_string());
}

TEST_CASE("the audit digest is the FNV-1a hash of the prompt payload") {
  SemanticsFixture fx;
  const SemanticBank sem = generate_semantic_bank(fx.bank, fx.index, fx.cfg, nullptr);
  for (const auto& [target, rule] : sem) {
    const std::string payload = build_prompt_payload(target, rule.attributes);
    CHECK(rule.provider_digest == reference_digest(payload));
  }
}

TEST_CASE("valid provider replies are kept verbatim after trimming") {
  SemanticsFixture fx;
  CannedProvider provider("  The level settles low. Expect readings near 10.  ");
  const SemanticBank sem = generate_semantic_bank(fx.bank, fx.index, fx.cfg, &provider);

  REQUIRE(sem.size() == 2);
  CHECK(provider.calls.load() == 2);
  for (const auto& [target, rule] : sem) {
    CHECK(rule.text == "The level settles low. Expect readings near 10.");
    CHECK(rule.provider == "canned");
    CHECK(rule.provider_digest.rfind("rejected:", 0) == std::string::npos);
  }
}

TEST_CASE("overlong or empty replies fall back to the template") {
  SemanticsFixture fx;

  SUBCASE("three sentences") {
    CannedProvider provider("One. Two. Three.");
    const SemanticBank sem = generate_semantic_bank(fx.bank, fx.index, fx.cfg, &provider);
    for (const auto& [target, rule] : sem) {
      CHECK(rule.provider == "template");
      CHECK(rule.provider_digest.rfind("rejected:", 0) == 0);
      CHECK(rule.text == render_template_text(rule.attributes, target));
      // The digest body still identifies the prompt that was attempted.
      CHECK(rule.provider_digest.substr(9) ==
            reference_digest(build_prompt_payload(target, rule.attributes)));
    }
  }
  SUBCASE("whitespace-only reply") {
    CannedProvider provider("   \n ");
    const SemanticBank sem = generate_semantic_bank(fx.bank, fx.index, fx.cfg, &provider);
    for (const auto& [_, rule] : sem) {
      CHECK(rule.provider == "template");
      CHECK(rule.provider_digest.rfind("rejected:", 0) == 0);
    }
  }
  SUBCASE("two sentences with trailing fragment is still accepted") {
    CannedProvider provider("Holds low. Stays put");
    const SemanticBank sem = generate_semantic_bank(fx.bank, fx.index, fx.cfg, &provider);
    for (const auto& [_, rule] : sem) CHECK(rule.provider == "canned");
  }
}

TEST_CASE("provider transport errors propagate out of generation") {
  SemanticsFixture fx;
  ThrowingProvider provider;
  CHECK_THROWS_AS(generate_semantic_bank(fx.bank, fx.index, fx.cfg, &provider), ProviderError);
}

TEST_CASE("fan-out over a worker pool is deterministic") {
  // Five states of one actuator, each in its own level band.
  Manifest manifest;
  manifest.window = 30;
  manifest.sensors = {"S"};
  manifest.actuators = {"A"};
  manifest.scope["S"] = {"A"};

  EngineConfig cfg;
  cfg.provider.max_in_flight = 4;

  RuleBank bank;
  bank.meta.window = 30;
  bank.meta.sensor_ranges["S"] = {0.0, 100.0};
  std::vector<double> a_values;
  for (int st = 0; st < 5; ++st) {
    KeyRules k;
    k.key = {"S", {st}};
    k.modes.push_back(mode_at(sig_descriptor(10.0 + 20.0 * st, 0.0, 1.0, 1.0), 0, 20));
    bank.keys.push_back(std::move(k));
    a_values.push_back(static_cast<double>(st));
  }
  std::vector<ActuatorBinning> binnings = {fit_binning("A", a_values, cfg)};
  const SaIndex index = build_sa_index(bank, binnings, manifest, cfg);
  REQUIRE(index.r_of("S", "A") == doctest::Approx(1.0));

  CannedProvider p1("Stays in its band.");
  const SemanticBank one = generate_semantic_bank(bank, index, cfg, &p1);
  CannedProvider p2("Stays in its band.");
  const SemanticBank two = generate_semantic_bank(bank, index, cfg, &p2);

  REQUIRE(one.size() == 5);
  CHECK(p1.calls.load() == 5);
  REQUIRE(two.size() == one.size());
  for (const auto& [target, rule] : one) {
    const auto it = two.find(target);
    REQUIRE(it != two.end());
    CHECK(it->second.text == rule.text);
    CHECK(it->second.provider == rule.provider);
    CHECK(it->second.provider_digest == rule.provider_digest);
  }
}

TEST_CASE("bank annotation fills every mode with a grounded sentence") {
  SemanticsFixture fx;
  annotate_bank_semantics(fx.bank, fx.index, fx.manifest, fx.cfg);

  for (const KeyRules& key : fx.bank.keys) {
    for (const ModeRule& mode : key.modes) {
      REQUIRE_FALSE(mode.semantic_text.empty());
      CHECK(sentence_count(mode.semantic_text) == 1);
    }
  }
  // A is the strongest related actuator, so each key names A with its own
  // state from the key tuple.
  CHECK(fx.bank.keys[0].modes[0].semantic_text.rfind("Under A=0, S typically", 0) == 0);
  CHECK(fx.bank.keys[1].modes[0].semantic_text.rfind("Under A=1, S typically", 0) == 0);
}

TEST_CASE("annotation falls back to the first scoped actuator when nothing relates") {
  SemanticsFixture fx;
  EngineConfig strict = fx.cfg;
  strict.r_min = 2.0;  // impossible bar: nothing is related
  annotate_bank_semantics(fx.bank, fx.index, fx.manifest, strict);
  CHECK(fx.bank.keys[0].modes[0].semantic_text.rfind("Under A=0,", 0) == 0);
}
