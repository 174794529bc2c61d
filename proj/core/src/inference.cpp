#include "scdt/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "scdt/errors.hpp"
#include "scdt/features.hpp"
#include "scdt/jsonout.hpp"

namespace scdt {
namespace {

const char* trend_label(Trend t) {
  switch (t) {
    case Trend::kIncrease: return "rise";
    case Trend::kDecrease: return "fall";
    case Trend::kMaintain: return "hold steady";
  }
  return "hold steady";
}

// d2 relative to a threshold, tolerating degenerate (zero) thresholds.
double threshold_ratio(double d2, double theta) {
  if (d2 <= 0.0) return 0.0;
  if (theta <= 0.0) return std::numeric_limits<double>::infinity();
  return d2 / theta;
}

const SensorRange& range_of(const RuleBank& bank, const std::string& sensor) {
  auto it = bank.meta.sensor_ranges.find(sensor);
  if (it == bank.meta.sensor_ranges.end())
    throw UsageError("inference: bank has no training range for sensor '" + sensor + "'");
  return it->second;
}

// Conflicting related actuators ranked by r (the evidence list is already
// sorted); when nothing conflicts but the window is anomalous, the full
// related list is returned so diagnosis always has candidates to offer.
std::vector<SuspectActuator> rank_suspects(const EvidenceBundle& evidence) {
  std::vector<SuspectActuator> conflicts;
  std::vector<SuspectActuator> all;
  for (const auto& re : evidence.related) {
    std::string reason = "related";
    bool conflict = false;
    if (re.has_rule) {
      if (re.expected_trend != evidence.observed_sig.trend) {
        conflict = true;
        reason = std::string("expected ") + trend_label(re.expected_trend) + ", observed " +
                 trend_label(evidence.observed_sig.trend);
      } else if (re.expected_level_bin != evidence.observed_sig.level_bin) {
        conflict = true;
        reason = "expected level band L" + std::to_string(re.expected_level_bin) +
                 ", observed L" + std::to_string(evidence.observed_sig.level_bin);
      }
    }
    all.push_back({re.actuator, re.r, reason});
    if (conflict) conflicts.push_back({re.actuator, re.r, reason});
  }
  return conflicts.empty() ? all : conflicts;
}

}  // namespace

const char* to_string(Decision d) {
  return d == Decision::kNormal ? "normal" : "anomaly";
}

const char* to_string(DecisionPath p) {
  switch (p) {
    case DecisionPath::kEnvelope: return "envelope";
    case DecisionPath::kDistance: return "distance";
    case DecisionPath::kArbiter: return "arbiter";
  }
  return "arbiter";
}

const char* to_string(RetrievalSource s) {
  switch (s) {
    case RetrievalSource::kExact: return "exact";
    case RetrievalSource::kSaFallback: return "sa_fallback";
    case RetrievalSource::kEmpty: return "empty";
  }
  return "empty";
}

CandidateSet retrieve_candidates(const RuleBank& bank, const SaIndex& index,
                                 const Manifest& manifest, const std::string& sensor,
                                 const std::vector<double>& ac_raw) {
  const auto& scope = manifest.scope_of(sensor);
  if (ac_raw.size() != scope.size())
    throw UsageError("retrieve_candidates: expected " + std::to_string(scope.size()) +
                     " actuator values for sensor '" + sensor + "', got " +
                     std::to_string(ac_raw.size()));
  SacKey key;
  key.sensor = sensor;
  key.states.reserve(scope.size());
  for (std::size_t k = 0; k < scope.size(); ++k) {
    const ActuatorBinning* b = index.binning(scope[k]);
    if (b == nullptr)
      throw UsageError("retrieve_candidates: index has no binning for actuator '" + scope[k] +
                       "'");
    key.states.push_back(b->discretize(ac_raw[k]));
  }

  CandidateSet out;
  const int ki = bank.key_index(key);
  if (ki >= 0) {
    out.source = RetrievalSource::kExact;
    for (const ModeRule& m : bank.keys[static_cast<std::size_t>(ki)].modes)
      out.modes.push_back({ki, m.mode_id});
    return out;
  }
  for (std::size_t k = 0; k < scope.size(); ++k) {
    const SaEntry* entry = index.entry(sensor, scope[k], key.states[k]);
    if (entry == nullptr) continue;
    out.modes.insert(out.modes.end(), entry->modes.begin(), entry->modes.end());
  }
  std::sort(out.modes.begin(), out.modes.end());
  out.modes.erase(std::unique(out.modes.begin(), out.modes.end()), out.modes.end());
  out.source = out.modes.empty() ? RetrievalSource::kEmpty : RetrievalSource::kSaFallback;
  return out;
}

std::vector<const ModeRule*> resolve_modes(const RuleBank& bank, const CandidateSet& candidates) {
  std::vector<const ModeRule*> out;
  out.reserve(candidates.modes.size());
  for (const ModeRef& ref : candidates.modes) {
    out.push_back(&bank.keys[static_cast<std::size_t>(ref.key_index)]
                       .modes[static_cast<std::size_t>(ref.mode_id)]);
  }
  return out;
}

int envelope_check(const Descriptor& y, const std::vector<const ModeRule*>& modes) {
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i]->envelope.contains(y)) return static_cast<int>(i);
  }
  return -1;
}

DistanceResult distance_check(const Descriptor& y, const std::vector<const ModeRule*>& modes,
                              double rho) {
  DistanceResult res;
  res.margins.reserve(modes.size());
  res.d2.reserve(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double d2 = modes[i]->distance.distance2(y);
    const double margin = modes[i]->distance.theta * (1.0 + rho) - d2;
    res.d2.push_back(d2);
    res.margins.push_back(margin);
    if (res.best < 0 || margin > res.best_margin) {
      res.best = static_cast<int>(i);
      res.best_margin = margin;
    }
  }
  res.accept = res.best >= 0 && res.best_margin >= 0.0;
  return res;
}

std::string build_evidence_json(const EvidenceBundle& evidence, const Verdict& verdict) {
  std::string j = "{";
  j += "\"sensor\":" + json_quote(evidence.sensor);
  j += ",\"window_start\":" + std::to_string(evidence.start);
  j += ",\"actuator_states\":[";
  for (std::size_t i = 0; i < evidence.states.size(); ++i) {
    if (i) j += ",";
    j += "{\"actuator\":" + json_quote(evidence.states[i].actuator);
    j += ",\"state\":" + std::to_string(evidence.states[i].state);
    j += ",\"raw\":" + fmt_g17(evidence.states[i].raw) + "}";
  }
  j += "],\"verdict\":{";
  j += "\"decision\":" + json_quote(to_string(verdict.decision));
  j += ",\"path\":" + json_quote(to_string(verdict.path));
  j += ",\"source\":" + json_quote(to_string(verdict.source));
  j += ",\"margin\":" + (verdict.has_margin ? fmt_g17(verdict.margin) : "null");
  j += ",\"score\":" + (verdict.has_score ? fmt_g17(verdict.score) : "null");
  j += "},\"observed\":{\"signature\":{";
  j += "\"level_bin\":" + std::to_string(evidence.observed_sig.level_bin);
  j += ",\"trend\":" + json_quote(to_string(evidence.observed_sig.trend));
  j += ",\"variability\":" + json_quote(to_string(evidence.observed_sig.variability));
  j += ",\"shape\":" + json_quote(to_string(evidence.observed_sig.shape));
  j += "},\"descriptor\":[";
  for (std::size_t d = 0; d < kDescriptorDims; ++d) {
    if (d) j += ",";
    j += fmt_g17(evidence.observed[d]);
  }
  j += "]},\"deviation\":{";
  if (evidence.has_z) {
    j += "\"z_scores\":[";
    for (std::size_t d = 0; d < kDescriptorDims; ++d) {
      if (d) j += ",";
      j += fmt_g17(evidence.z_scores[d]);
    }
    j += "]";
  } else {
    j += "\"z_scores\":null";
  }
  j += ",\"violated\":[";
  for (std::size_t v = 0; v < verdict.violated.size(); ++v) {
    const DimViolation& dv = verdict.violated[v];
    if (v) j += ",";
    j += "{\"dim\":" + json_quote(kDescriptorDimNames[static_cast<std::size_t>(dv.dim)]);
    j += ",\"observed\":" + fmt_g17(dv.observed);
    j += ",\"lo\":" + fmt_g17(dv.lo);
    j += ",\"hi\":" + fmt_g17(dv.hi);
    j += ",\"z\":" + fmt_g17(dv.z) + "}";
  }
  j += "]},\"related\":[";
  for (std::size_t i = 0; i < evidence.related.size(); ++i) {
    const RelatedExpectation& re = evidence.related[i];
    if (i) j += ",";
    j += "{\"actuator\":" + json_quote(re.actuator);
    j += ",\"r\":" + fmt_g17(re.r);
    j += ",\"state\":" + std::to_string(re.state);
    j += ",\"expectation\":" + (re.has_rule ? json_quote(re.text) : "null");
    if (re.has_rule) {
      j += ",\"expected_trend\":" + json_quote(to_string(re.expected_trend));
      j += ",\"expected_level_bin\":" + std::to_string(re.expected_level_bin);
    }
    j += "}";
  }
  j += "]}";
  return j;
}

ScreenOutcome screen_window(const SensorWindow& window, const RuleBank& bank,
                            const SaIndex& index, const Manifest& manifest,
                            const SemanticBank& semantics, const EngineConfig& cfg) {
  ScreenOutcome out;
  const Descriptor y = extract_descriptor(window);
  out.candidates = retrieve_candidates(bank, index, manifest, window.sensor_id, window.ac_raw);
  const std::vector<const ModeRule*> modes = resolve_modes(bank, out.candidates);
  const SensorRange& range = range_of(bank, window.sensor_id);

  Verdict& v = out.verdict;
  v.sensor = window.sensor_id;
  v.start = window.start;
  v.source = out.candidates.source;

  EvidenceBundle& ev = out.evidence;
  ev.sensor = window.sensor_id;
  ev.start = window.start;
  ev.observed = y;
  ev.observed_sig = window_signature(y, range, bank.meta.window, cfg);
  const auto& scope = manifest.scope_of(window.sensor_id);
  for (std::size_t k = 0; k < scope.size(); ++k) {
    const ActuatorBinning* b = index.binning(scope[k]);
    ev.states.push_back({scope[k], b ? b->discretize(window.ac_raw[k]) : 0, window.ac_raw[k]});
  }
  for (const auto& rel :
       related_actuators(index, window.sensor_id, cfg.related_top_k, cfg.r_min)) {
    RelatedExpectation re;
    re.actuator = rel.actuator;
    re.r = rel.r;
    for (const auto& st : ev.states) {
      if (st.actuator == rel.actuator) re.state = st.state;
    }
    auto it = semantics.find(SemanticTarget{window.sensor_id, rel.actuator, re.state});
    if (it != semantics.end()) {
      re.has_rule = true;
      re.text = it->second.text;
      re.expected_trend = it->second.attributes.trend;
      re.expected_level_bin = level_bin(it->second.attributes.mean, range, cfg.level_bins);
    }
    ev.related.push_back(std::move(re));
  }

  auto fill_best = [&](int candidate_idx) {
    v.has_best = true;
    v.best = out.candidates.modes[static_cast<std::size_t>(candidate_idx)];
    ev.has_z = true;
    ev.z_scores = modes[static_cast<std::size_t>(candidate_idx)]->distance.z_scores(y);
  };

  if (modes.empty()) {
    v.decision = Decision::kAnomaly;  // provisional; arbitration decides
    v.path = DecisionPath::kArbiter;
    out.ambiguous = true;
    v.ambiguity_reason = "no matching context";
    return out;
  }

  const int inside = envelope_check(y, modes);
  if (inside >= 0) {
    v.decision = Decision::kNormal;
    v.path = DecisionPath::kEnvelope;
    v.has_score = true;
    v.score = 0.0;
    fill_best(inside);
    return out;
  }

  const DistanceResult dr = distance_check(y, modes, cfg.rho);
  double score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < modes.size(); ++i)
    score = std::min(score, threshold_ratio(dr.d2[i], modes[i]->distance.theta * (1.0 + cfg.rho)));
  v.has_score = true;
  v.score = score;
  v.has_margin = true;
  v.margin = dr.best_margin;
  v.path = DecisionPath::kDistance;
  fill_best(dr.best);

  if (dr.accept) {
    v.decision = Decision::kNormal;
    return out;
  }

  // Rejected: list the dimensions outside the representative mode's envelope.
  const ModeRule& bm = *modes[static_cast<std::size_t>(dr.best)];
  for (std::size_t d = 0; d < kDescriptorDims; ++d) {
    if (y[d] < bm.envelope.lo[d] || y[d] > bm.envelope.hi[d]) {
      v.violated.push_back({static_cast<int>(d), y[d], bm.envelope.lo[d], bm.envelope.hi[d],
                            ev.z_scores[d]});
    }
  }
  v.decision = Decision::kAnomaly;
  if (out.candidates.source == RetrievalSource::kSaFallback && cfg.arbitrate_fallback &&
      dr.best_margin < -cfg.theta_amb) {
    out.ambiguous = true;
    v.path = DecisionPath::kArbiter;
    v.ambiguity_reason = "fallback rejection";
  }
  return out;
}

Diagnosis arbitrate_fallback(const EvidenceBundle& evidence, const Verdict& verdict,
                             const std::vector<const ModeRule*>& candidates,
                             const EngineConfig& cfg, ArbiterProvider* provider) {
  Diagnosis d;
  d.provider = "deterministic";

  double best_ratio = std::numeric_limits<double>::infinity();
  for (const ModeRule* m : candidates)
    best_ratio = std::min(best_ratio,
                          threshold_ratio(m->distance.distance2(evidence.observed),
                                          m->distance.theta));
  if (candidates.empty()) {
    d.final_decision = Decision::kAnomaly;
    d.narrative = "No learned mode matches this context for " + evidence.sensor +
                  ": no matching context.";
  } else if (best_ratio <= 1.0 + cfg.rho_arb) {
    d.final_decision = Decision::kNormal;
    d.narrative = "Pooled fallback mode for " + evidence.sensor +
                  " fits within the relaxed tolerance (distance ratio " + fmt_fixed2(best_ratio) +
                  ").";
  } else {
    d.final_decision = Decision::kAnomaly;
    d.narrative = "Every pooled fallback mode rejects this " + evidence.sensor +
                  " window (best distance ratio " + fmt_fixed2(best_ratio) + ").";
  }
  if (d.final_decision == Decision::kAnomaly) d.suspects = rank_suspects(evidence);

  if (provider != nullptr) {
    const auto reply = provider->arbitrate(build_evidence_json(evidence, verdict));
    if (reply.has_value()) {
      d.final_decision = reply->decision;
      if (!reply->narrative.empty()) d.narrative = reply->narrative;
      d.provider = provider->kind();
    } else {
      d.provider_rejected = true;  // deterministic result stands
    }
  }
  return d;
}

Diagnosis diagnose(const Verdict& verdict, const EvidenceBundle& evidence,
                   const EngineConfig& cfg, ArbiterProvider* provider) {
  (void)cfg;
  Diagnosis d;
  d.final_decision = verdict.decision;  // diagnosis never alters the decision
  d.provider = "template";

  if (verdict.decision == Decision::kNormal) {
    d.narrative = evidence.sensor + " window at " + std::to_string(evidence.start) +
                  " is consistent with its learned context.";
  } else {
    d.suspects = rank_suspects(evidence);
    d.narrative = evidence.sensor + " window at " + std::to_string(evidence.start) +
                  " deviates from every learned mode (" +
                  std::to_string(verdict.violated.size()) +
                  " descriptor dimensions outside the expected envelope).";
    if (!d.suspects.empty() && d.suspects.front().reason != "related") {
      const SuspectActuator& top = d.suspects.front();
      d.narrative += " Most inconsistent actuator: " + top.actuator + " (r=" +
                     fmt_fixed2(top.r) + "); " + top.reason + ".";
    } else if (!d.suspects.empty()) {
      d.narrative += " No related expectation conflicts directly; related actuators listed by "
                     "strength of coupling.";
    } else {
      d.narrative += " No related actuators are known for this sensor.";
    }
  }

  if (provider != nullptr) {
    const auto reply = provider->arbitrate(build_evidence_json(evidence, verdict));
    if (reply.has_value() && !reply->narrative.empty()) {
      d.narrative = reply->narrative;
      d.provider = provider->kind();
    } else {
      d.provider_rejected = true;
    }
    d.final_decision = verdict.decision;  // contract: providers cannot flip it
  }
  return d;
}

std::vector<SystemVerdict> system_decisions(const std::vector<Verdict>& verdicts) {
  std::map<std::int64_t, SystemVerdict> grouped;
  for (const Verdict& v : verdicts) {
    SystemVerdict& sv = grouped[v.start];
    sv.start = v.start;
    sv.sensors += 1;
    if (v.decision == Decision::kAnomaly) sv.anomalous += 1;
  }
  std::vector<SystemVerdict> out;
  out.reserve(grouped.size());
  for (auto& [_, sv] : grouped) {
    sv.decision = sv.anomalous > 0 ? Decision::kAnomaly : Decision::kNormal;
    out.push_back(sv);
  }
  return out;
}

Detector::Detector(const RuleBank& bank, const SaIndex& index, const Manifest& manifest,
                   const SemanticBank& semantics, EngineConfig cfg, ArbiterProvider* provider)
    : bank_(bank),
      index_(index),
      manifest_(manifest),
      semantics_(semantics),
      cfg_(std::move(cfg)),
      provider_(provider) {}

ScreenOutcome Detector::screen(const SensorWindow& window) const {
  return screen_window(window, bank_, index_, manifest_, semantics_, cfg_);
}

VerdictRecord Detector::decide(const SensorWindow& window) const {
  ScreenOutcome outcome = screen(window);
  VerdictRecord rec;
  if (outcome.ambiguous) {
    const auto modes = resolve_modes(bank_, outcome.candidates);
    rec.diagnosis =
        arbitrate_fallback(outcome.evidence, outcome.verdict, modes, cfg_, provider_);
    outcome.verdict.decision = rec.diagnosis.final_decision;
    outcome.verdict.arbitrated = true;
    rec.has_diagnosis = true;
  } else if (cfg_.diagnose == DiagnoseMode::kAll ||
             (cfg_.diagnose == DiagnoseMode::kAnomalies &&
              outcome.verdict.decision == Decision::kAnomaly)) {
    rec.diagnosis = diagnose(outcome.verdict, outcome.evidence, cfg_, provider_);
    rec.has_diagnosis = true;
  }
  rec.verdict = std::move(outcome.verdict);
  return rec;
}

DetectionResult Detector::run(const Dataset& data) const {
  DetectionResult result;
  for (const auto& sensor : manifest_.sensors) {
    for (const auto& window : make_windows(data, manifest_, sensor))
      result.records.push_back(decide(window));
  }
  std::vector<Verdict> verdicts;
  verdicts.reserve(result.records.size());
  for (const auto& rec : result.records) verdicts.push_back(rec.verdict);
  result.system = system_decisions(verdicts);
  return result;
}

}  // namespace scdt
