// Release gate for the detection engine. Every check prints exactly one
// PASS/FAIL line with its measured numbers; the process exits non-zero if
// any line fails. All inputs are seeded and the entire run stays offline.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "scdt/config.hpp"
#include "scdt/dataset.hpp"
#include "scdt/errors.hpp"
#include "scdt/features.hpp"
#include "scdt/inference.hpp"
#include "scdt/llm_client.hpp"
#include "scdt/manifest.hpp"
#include "scdt/metrics.hpp"
#include "scdt/rulelearn.hpp"
#include "scdt/sa_index.hpp"
#include "scdt/semantics.hpp"
#include "scdt/serialize.hpp"
#include "scdt/simulator.hpp"

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Gate {
  int failures = 0;

  void report(const std::string& name, bool ok, const std::string& detail) {
    std::string line = (ok ? "PASS: " : "FAIL: ") + name;
    if (!detail.empty()) line += " (" + detail + ")";
    std::puts(line.c_str());
    if (!ok) ++failures;
  }
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Feature extraction agrees with the independent brute-force oracle on
//    1000 seeded random windows (relative error <= 1e-9, under 5 seconds),
//    and the shift/scale invariances hold.
// ---------------------------------------------------------------------------

bool close_rel(double a, double b, double tol = 1e-9) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

void check_feature_oracle(Gate& gate) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(811u);
  double worst = 0.0;
  bool agree = true;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t w = 30 + static_cast<std::size_t>(i % 5);
    const auto window = synth::random_window(rng, w, i);
    const auto got = scdt::extract_descriptor(window);
    const auto ref = oracle::descriptor(window.values);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const double rel =
          std::fabs(got[j] - ref[j]) / std::max({1.0, std::fabs(got[j]), std::fabs(ref[j])});
      worst = std::max(worst, rel);
      if (rel > 1e-9) agree = false;
    }
  }

  bool invariant = true;
  for (int i = 0; i < 100; ++i) {
    const auto window = synth::random_window(rng, 30, i);
    auto shifted = window;
    for (auto& v : shifted.values) v += 211.5;
    auto scaled = window;
    for (auto& v : scaled.values) v *= 2.75;

    const auto a = scdt::extract_descriptor(window);
    const auto s = scdt::extract_descriptor(shifted);
    const auto m = scdt::extract_descriptor(scaled);

    invariant = invariant && close_rel(s[scdt::kDimMean], a[scdt::kDimMean] + 211.5) &&
                close_rel(s[scdt::kDimMin], a[scdt::kDimMin] + 211.5) &&
                close_rel(s[scdt::kDimMax], a[scdt::kDimMax] + 211.5);
    for (std::size_t j :
         {scdt::kDimSlope1, scdt::kDimSlope2, scdt::kDimSlope3, scdt::kDimAmp, scdt::kDimStd,
          scdt::kDimRmse, scdt::kDimDelta, scdt::kDimDelta2, scdt::kDimNeg, scdt::kDimSpec}) {
      invariant = invariant && close_rel(s[j], a[j]);
    }
    for (std::size_t j : {scdt::kDimMin, scdt::kDimMax, scdt::kDimSlope1, scdt::kDimSlope2,
                          scdt::kDimSlope3, scdt::kDimMean, scdt::kDimAmp, scdt::kDimStd,
                          scdt::kDimRmse, scdt::kDimDelta, scdt::kDimDelta2}) {
      invariant = invariant && close_rel(m[j], 2.75 * a[j]);
    }
    invariant = invariant && m[scdt::kDimNeg] == a[scdt::kDimNeg] &&
                std::fabs(m[scdt::kDimSpec] - a[scdt::kDimSpec]) <= 1e-6;
  }

  const double elapsed = seconds_since(t0);
  gate.report("feature extraction matches the independent oracle",
              agree && invariant && elapsed < 5.0,
              fmt("max rel err %.2e over 1000 windows, %.2f s", worst, elapsed) +
                  (invariant ? ", invariances hold" : ", INVARIANCE BROKEN"));
}

// ---------------------------------------------------------------------------
// 2. Quantile envelopes trimmed at alpha = 0.005 keep >= 98% of a seeded
//    1000-window cluster fully inside, with per-dimension exceedance no
//    worse than 2*alpha + 2/n.
// ---------------------------------------------------------------------------

void check_envelope_coverage(Gate& gate) {
  // One behavioral mode: every window is the same ramp-plus-sine shape moved
  // along a single latent factor, the way windows inside one regime co-vary.
  // A tiny per-sample jitter keeps the order statistics distinct.
  constexpr int n = 1000;
  constexpr int w = 30;
  constexpr double alpha = 0.005;
  std::mt19937_64 rng(812u);
  std::normal_distribution<double> unit(0.0, 1.0);

  scdt::Matrix desc(n, scdt::kDescriptorDims);
  std::vector<int> members(n);
  for (int i = 0; i < n; ++i) {
    members[i] = i;
    const double u = unit(rng);
    const double base = 500.0 + 40.0 * u;
    const double slope = 0.2 + 0.02 * u;
    const double amp = 5.0 + 0.5 * u;
    scdt::SensorWindow window;
    window.sensor_id = "S";
    window.values.resize(w);
    for (int t = 0; t < w; ++t) {
      window.values[t] = base + slope * t +
                         amp * std::sin(2.0 * std::numbers::pi * t / 7.3) +
                         1e-3 * unit(rng);
    }
    const auto d = scdt::extract_descriptor(window);
    for (std::size_t j = 0; j < scdt::kDescriptorDims; ++j) desc.at(i, j) = d[j];
  }

  const auto env = scdt::build_envelope(desc, members, alpha);
  int fully_inside = 0;
  std::array<int, scdt::kDescriptorDims> dim_out{};
  for (int i = 0; i < n; ++i) {
    bool inside = true;
    for (std::size_t j = 0; j < scdt::kDescriptorDims; ++j) {
      const double v = desc.at(i, j);
      if (v < env.lo[j] || v > env.hi[j]) {
        ++dim_out[j];
        inside = false;
      }
    }
    if (inside) ++fully_inside;
  }

  const double frac = static_cast<double>(fully_inside) / n;
  const double dim_bound = 2.0 * alpha + 2.0 / n;
  double worst_dim = 0.0;
  for (std::size_t j = 0; j < scdt::kDescriptorDims; ++j) {
    worst_dim = std::max(worst_dim, static_cast<double>(dim_out[j]) / n);
  }
  gate.report("envelope coverage on a single-mode cluster",
              frac >= 0.98 && worst_dim <= dim_bound,
              fmt("%.1f%% fully inside (need >= 98%%), worst dim %.3f (cap %.3f)", 100.0 * frac,
                  worst_dim, dim_bound));
}

// ---------------------------------------------------------------------------
// 3. Distance thresholds calibrated at q = 0.999 leave at most 0.3% of the
//    10000 training distances above theta.
// ---------------------------------------------------------------------------

void check_threshold_calibration(Gate& gate) {
  constexpr int n = 10000;
  constexpr int w = 30;
  std::mt19937_64 rng(813u);
  std::normal_distribution<double> unit(0.0, 1.0);

  scdt::Matrix desc(n, scdt::kDescriptorDims);
  std::vector<int> members(n);
  for (int i = 0; i < n; ++i) {
    members[i] = i;
    const double base = 300.0 + 25.0 * unit(rng);
    const double slope = 0.5 * unit(rng);
    const double sigma = 2.0 + 0.4 * std::fabs(unit(rng));
    scdt::SensorWindow window;
    window.sensor_id = "S";
    window.values.resize(w);
    for (int t = 0; t < w; ++t) window.values[t] = base + slope * t + sigma * unit(rng);
    const auto d = scdt::extract_descriptor(window);
    for (std::size_t j = 0; j < scdt::kDescriptorDims; ++j) desc.at(i, j) = d[j];
  }

  scdt::EngineConfig cfg;  // q = 0.999
  const auto scaler = scdt::fit_robust_scaler(desc, cfg.sigma_floor);
  const auto model = scdt::fit_distance_model(desc, members, scaler, cfg);

  int exceed = 0;
  for (int i = 0; i < n; ++i) {
    scdt::Descriptor d{};
    for (std::size_t j = 0; j < scdt::kDescriptorDims; ++j) d[j] = desc.at(i, j);
    if (model.distance2(d) > model.theta) ++exceed;
  }
  const double frac = static_cast<double>(exceed) / n;
  gate.report("threshold calibration exceedance", frac >= 0.0 && frac <= 0.003,
              fmt("%.4f of training distances above theta (cap 0.003)", frac));
}

// ---------------------------------------------------------------------------
// 4. Jensen-Shannon divergence hits its reference values.
// ---------------------------------------------------------------------------

void check_js_divergence(Gate& gate) {
  const std::map<std::string, double> p{{"a", 0.3}, {"b", 0.7}};
  const double same = scdt::js_divergence(p, p);

  const double disjoint =
      scdt::js_divergence({{"a", 1.0}}, {{"b", 1.0}});

  // One shared outcome, one missing: 0.5*KL(P||M) + 0.5*KL(Q||M) with
  // M = {x: 0.75, y: 0.25} evaluates to 0.3112781244591328 bits.
  const double hand = scdt::js_divergence({{"x", 1.0}}, {{"x", 0.5}, {"y", 0.5}});

  const bool ok = std::fabs(same) <= 1e-12 && std::fabs(disjoint - 1.0) <= 1e-12 &&
                  std::fabs(hand - 0.311278) <= 1e-5;
  gate.report("jensen-shannon divergence reference values", ok,
              fmt("identical %.1e, disjoint-1 %.1e, hand case %.6f", std::fabs(same),
                  std::fabs(disjoint - 1.0), hand));
}

// ---------------------------------------------------------------------------
// 5. Mode discovery: a two-level sensor under one context learns at least two
//    modes, a single-level one learns exactly one, and reruns are identical.
// ---------------------------------------------------------------------------

scdt::Dataset regime_dataset(const std::vector<double>& window_levels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  scdt::Dataset data;
  data.rows = window_levels.size() * 30;
  auto& s = data.series["S"];
  auto& a = data.series["A"];
  for (const double level : window_levels) {
    for (int t = 0; t < 30; ++t) {
      s.push_back(level + noise(rng));
      a.push_back(0.0);
    }
  }
  return data;
}

void check_mode_discovery(Gate& gate) {
  const auto manifest = scdt::parse_manifest({{"window", "30"},
                                              {"stride", "30"},
                                              {"column.S", "sensor"},
                                              {"column.A", "actuator"},
                                              {"scope.S", "A"}});
  scdt::EngineConfig cfg;

  std::vector<double> two;
  for (int i = 0; i < 60; ++i) two.push_back(i % 2 == 0 ? 100.0 : 900.0);
  const auto data_two = regime_dataset(two, 814u);
  const auto learned_two = scdt::learn_rulebank(data_two, manifest, cfg);
  const std::size_t modes_two =
      learned_two.bank.keys.empty() ? 0 : learned_two.bank.keys[0].modes.size();

  const std::vector<double> one(40, 500.0);
  const auto data_one = regime_dataset(one, 815u);
  const auto learned_one = scdt::learn_rulebank(data_one, manifest, cfg);
  const std::size_t modes_one =
      learned_one.bank.keys.empty() ? 0 : learned_one.bank.keys[0].modes.size();

  // Rerun both from scratch and require byte-identical serialized models.
  auto snapshot = [&](const scdt::Dataset& data) {
    auto learned = scdt::learn_rulebank(data, manifest, cfg);
    auto sa = scdt::build_sa_index(learned.bank, learned.binnings, manifest, cfg);
    return scdt::model_to_json({learned.bank, std::move(sa), {}});
  };
  const bool deterministic =
      snapshot(data_two) == snapshot(data_two) && snapshot(data_one) == snapshot(data_one);

  gate.report("mode discovery separates regimes and is deterministic",
              modes_two >= 2 && modes_one == 1 && deterministic,
              fmt("two-regime modes %.0f (need >= 2), single-regime %.0f (need 1), rerun ",
                  static_cast<double>(modes_two), static_cast<double>(modes_one)) +
                  (deterministic ? "identical" : "DIVERGED"));
}

// ---------------------------------------------------------------------------
// 6-8. End-to-end: train offline on a 30000-sample normal trace, detect a
//      forced valve plus a frozen sensor, hold the false-alarm rate on a
//      clean trace, ground the diagnosis, and honor the pipeline contracts.
// ---------------------------------------------------------------------------

struct EndToEnd {
  scdt::Manifest manifest;
  scdt::EngineConfig cfg;
  scdt::ModelBundle model;
  double learn_seconds = 0.0;

  scdt::Trace test_trace;
  scdt::Dataset test_data;
  std::vector<int> truth;
  scdt::DetectionResult result;
  std::vector<int> predicted;
  scdt::RunMetrics metrics;

  double clean_alarm_rate = 0.0;
  std::size_t clean_windows = 0;
  double screen_rate = 0.0;
};

EndToEnd run_end_to_end(const fs::path& dir) {
  EndToEnd e;
  const std::string manifest_path = (dir / "plant.manifest").string();
  {
    std::FILE* f = std::fopen(manifest_path.c_str(), "w");
    const std::string text = scdt::simulator_manifest_text(30, 30);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }
  e.manifest = scdt::load_manifest(manifest_path);
  e.cfg.window = e.manifest.window;
  e.cfg.stride = e.manifest.stride;

  // Train on a clean month-scale trace.
  scdt::PlantConfig plant;
  const auto train_trace = scdt::run_simulation(plant, 30000);
  const std::string train_csv = (dir / "train.csv").string();
  scdt::write_trace_csv(train_csv, train_trace);
  const auto train_data = scdt::ingest_csv(train_csv, e.manifest);

  const auto t0 = Clock::now();
  auto learned = scdt::learn_rulebank(train_data, e.manifest, e.cfg);
  auto index = scdt::build_sa_index(learned.bank, learned.binnings, e.manifest, e.cfg);
  auto semantics = scdt::generate_semantic_bank(learned.bank, index, e.cfg, nullptr);
  scdt::annotate_bank_semantics(learned.bank, index, e.manifest, e.cfg);
  e.learn_seconds = seconds_since(t0);
  e.model = scdt::ModelBundle{std::move(learned.bank), std::move(index), std::move(semantics)};

  // Attacked trace: freeze the level sensor during a quiet stretch, then
  // force the valve open mid-fill so the tank saturates.
  scdt::PlantConfig test_plant = plant;
  test_plant.seed = 7;
  std::vector<scdt::AttackSpec> attacks;
  attacks.push_back({scdt::AttackKind::kFreezeSensor, 900, 1500, 0.0});
  attacks.push_back({scdt::AttackKind::kForceValveOpen, 3030, 3630, 0.0});
  e.test_trace = scdt::run_simulation(test_plant, 6000, attacks);
  const std::string test_csv = (dir / "test.csv").string();
  scdt::write_trace_csv(test_csv, e.test_trace);
  e.test_data = scdt::ingest_csv(test_csv, e.manifest);
  e.truth = scdt::label_windows(e.test_data, 30, 30);

  const scdt::Detector detector(e.model.bank, e.model.sa, e.manifest, e.model.semantics, e.cfg);
  e.result = detector.run(e.test_data);
  e.predicted.reserve(e.result.system.size());
  for (const auto& sys : e.result.system) {
    e.predicted.push_back(sys.decision == scdt::Decision::kAnomaly ? 1 : 0);
  }
  e.metrics = scdt::compute_metrics(e.predicted, e.truth);

  // Clean held-out trace for the false-alarm budget.
  scdt::PlantConfig clean_plant = plant;
  clean_plant.seed = 9;
  const auto clean_trace = scdt::run_simulation(clean_plant, 6000);
  const std::string clean_csv = (dir / "clean.csv").string();
  scdt::write_trace_csv(clean_csv, clean_trace);
  const auto clean_data = scdt::ingest_csv(clean_csv, e.manifest);
  const auto clean_result = detector.run(clean_data);
  e.clean_windows = clean_result.system.size();
  std::size_t alarms = 0;
  for (const auto& sys : clean_result.system) {
    if (sys.decision == scdt::Decision::kAnomaly) ++alarms;
  }
  e.clean_alarm_rate = e.clean_windows == 0
                           ? 0.0
                           : static_cast<double>(alarms) / static_cast<double>(e.clean_windows);

  // Screening throughput, measured over enough repetitions to be stable.
  std::vector<scdt::SensorWindow> windows;
  for (const auto& sensor : e.manifest.sensors) {
    auto per_sensor = scdt::make_windows(e.test_data, e.manifest, sensor);
    windows.insert(windows.end(), per_sensor.begin(), per_sensor.end());
  }
  const auto bench0 = Clock::now();
  std::size_t screened = 0;
  do {
    for (const auto& window : windows) {
      (void)detector.screen(window);
      ++screened;
    }
  } while (seconds_since(bench0) < 0.2);
  e.screen_rate = static_cast<double>(screened) / seconds_since(bench0);
  return e;
}

void check_detection_quality(Gate& gate, const EndToEnd& e) {
  const bool ok = e.metrics.f1 >= 0.80 && e.clean_alarm_rate <= 0.02 &&
                  e.learn_seconds < 300.0 && e.screen_rate >= 1000.0;
  gate.report(
      "end-to-end simulator benchmark", ok,
      fmt("F1 %.3f (need >= 0.80), clean alarms %.2f%% (cap 2%%), ", e.metrics.f1,
          100.0 * e.clean_alarm_rate) +
          fmt("learn %.1f s (cap 300), screen %.0f windows/s (floor 1000)", e.learn_seconds,
              e.screen_rate));
}

void check_diagnosis_grounding(Gate& gate, const EndToEnd& e) {
  // Inside the forced-valve interval, anomalous level-sensor windows must
  // put the valve at the top of the suspect list.
  int anomalous = 0;
  int valve_first = 0;
  for (const auto& record : e.result.records) {
    const auto& v = record.verdict;
    if (v.sensor != "LIT") continue;
    if (v.start < 3030 || v.start + 30 > 3630) continue;
    if (v.decision != scdt::Decision::kAnomaly) continue;
    ++anomalous;
    if (record.has_diagnosis && !record.diagnosis.suspects.empty() &&
        record.diagnosis.suspects.front().actuator == "MV") {
      ++valve_first;
    }
  }
  const double frac = anomalous == 0 ? 0.0 : static_cast<double>(valve_first) / anomalous;
  gate.report("diagnosis ranks the forced valve first", anomalous > 0 && frac >= 0.90,
              fmt("valve first in %.0f of %.0f anomalous attack windows (%.0f%%, need >= 90%%)",
                  static_cast<double>(valve_first), static_cast<double>(anomalous),
                  100.0 * frac));
}

void check_contracts(Gate& gate, const EndToEnd& e, const fs::path& dir) {
  std::string detail;

  // System decisions are the exact OR of the per-sensor decisions.
  bool or_exact = true;
  std::map<std::int64_t, bool> any_anomaly;
  std::map<std::int64_t, int> group_size;
  for (const auto& record : e.result.records) {
    const bool anom = record.verdict.decision == scdt::Decision::kAnomaly;
    any_anomaly[record.verdict.start] = any_anomaly[record.verdict.start] || anom;
    ++group_size[record.verdict.start];
  }
  if (e.result.system.size() != any_anomaly.size()) or_exact = false;
  for (const auto& sys : e.result.system) {
    const auto it = any_anomaly.find(sys.start);
    if (it == any_anomaly.end() ||
        (sys.decision == scdt::Decision::kAnomaly) != it->second ||
        sys.sensors != group_size[sys.start]) {
      or_exact = false;
    }
  }
  if (!or_exact) detail += "OR aggregation mismatch; ";

  // Diagnosis may explain but never overrule: the recorded diagnosis always
  // carries the verdict's decision, and turning diagnosis off changes no
  // decision anywhere.
  bool diag_neutral = true;
  for (const auto& record : e.result.records) {
    if (record.has_diagnosis &&
        record.diagnosis.final_decision != record.verdict.decision) {
      diag_neutral = false;
    }
  }
  scdt::EngineConfig no_diag = e.cfg;
  no_diag.diagnose = scdt::DiagnoseMode::kNone;
  const scdt::Detector bare(e.model.bank, e.model.sa, e.manifest, e.model.semantics, no_diag);
  const auto bare_result = bare.run(e.test_data);
  if (bare_result.records.size() != e.result.records.size()) diag_neutral = false;
  for (std::size_t i = 0; diag_neutral && i < bare_result.records.size(); ++i) {
    if (bare_result.records[i].verdict.decision != e.result.records[i].verdict.decision) {
      diag_neutral = false;
    }
  }
  if (!diag_neutral) detail += "diagnosis altered a decision; ";

  // Offline means no transport is even attempted.
  bool offline_refused = false;
  scdt::ProviderConfig offline_cfg;
  offline_cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  offline_cfg.model = "local";
  offline_cfg.offline = true;
  scdt::LlmClient client(offline_cfg);
  try {
    (void)client.complete("system", "payload");
  } catch (const scdt::UsageError&) {
    offline_refused = client.records().empty();
  }
  const bool offline_default = scdt::EngineConfig{}.provider.offline;
  if (!offline_refused || !offline_default) detail += "offline contract violated; ";

  // Round trips: the model survives disk byte-for-byte and drives identical
  // decisions; the CSV writer/reader preserve every sample bit.
  bool lossless = true;
  const std::string model_path = (dir / "model.json").string();
  scdt::save_model(model_path, e.model);
  const auto reloaded = scdt::load_model(model_path, &e.manifest);
  if (scdt::model_to_json(reloaded) != scdt::model_to_json(e.model)) lossless = false;
  const scdt::Detector replay(reloaded.bank, reloaded.sa, e.manifest, reloaded.semantics, e.cfg);
  const auto replay_result = replay.run(e.test_data);
  if (replay_result.records.size() != e.result.records.size()) lossless = false;
  for (std::size_t i = 0; lossless && i < replay_result.records.size(); ++i) {
    if (replay_result.records[i].verdict.decision != e.result.records[i].verdict.decision) {
      lossless = false;
    }
  }
  const std::string echo_csv = (dir / "echo.csv").string();
  scdt::write_trace_csv(echo_csv, e.test_trace);
  const auto echoed = scdt::ingest_csv(echo_csv, e.manifest);
  if (echoed.rows != e.test_trace.size()) lossless = false;
  for (std::size_t i = 0; lossless && i < echoed.rows; ++i) {
    if (echoed.column("LIT")[i] != e.test_trace.lit[i] ||
        echoed.column("FIT")[i] != e.test_trace.fit[i]) {
      lossless = false;
    }
  }
  if (!lossless) detail += "round trip lost information; ";

  gate.report("pipeline contracts (OR policy, neutral diagnosis, offline, round trips)",
              or_exact && diag_neutral && offline_refused && offline_default && lossless,
              detail.empty() ? "all hold" : detail);
}

}  // namespace

int main() {
  Gate gate;
  const fs::path dir =
      fs::temp_directory_path() / ("scdt-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);

  try {
    check_feature_oracle(gate);
    check_envelope_coverage(gate);
    check_threshold_calibration(gate);
    check_js_divergence(gate);
    check_mode_discovery(gate);

    const EndToEnd e = run_end_to_end(dir);
    check_detection_quality(gate, e);
    check_diagnosis_grounding(gate, e);
    check_contracts(gate, e, dir);
  } catch (const std::exception& ex) {
    gate.report("acceptance run completed", false, ex.what());
  }

  std::error_code ec;
  fs::remove_all(dir, ec);

  std::printf("%s: %d criterion(s) failed\n", gate.failures == 0 ? "OK" : "NOT OK",
              gate.failures);
  return gate.failures == 0 ? 0 : 1;
}
