#include "scdt/semantics.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "scdt/errors.hpp"
#include "scdt/jsonout.hpp"
#include "scdt/rng.hpp"

namespace scdt {
namespace {

constexpr const char* kPromptInstructions =
    "Describe, in at most two sentences, how the sensor normally behaves while "
    "the actuator holds this state. Ground every claim in the provided statistics.";

std::string hex_digest(const std::string& payload) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(payload)));
  return buf;
}

const char* trend_verb(Trend t) {
  switch (t) {
    case Trend::kIncrease: return "rises";
    case Trend::kDecrease: return "falls";
    case Trend::kMaintain: return "holds steady";
  }
  return "holds steady";
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const ModeRule& resolve(const RuleBank& bank, const ModeRef& ref) {
  return bank.keys[static_cast<std::size_t>(ref.key_index)]
      .modes[static_cast<std::size_t>(ref.mode_id)];
}

}  // namespace

AttributeSummary summarize_attributes(const ModeRule& mode, const SensorRange& range, int window,
                                      const EngineConfig& cfg) {
  if (range.span() <= 0.0)
    throw UsageError("summarize_attributes: degenerate sensor range [" + fmt_g17(range.lo) +
                     ", " + fmt_g17(range.hi) + "]");
  AttributeSummary s;
  s.mean = mode_median(mode, kDimMean);
  s.lo = mode.envelope.lo[kDimMin];
  s.hi = mode.envelope.hi[kDimMax];
  s.amp = mode_median(mode, kDimAmp);
  const ModeSignature sig = mode_signature(mode, range, window, cfg);
  s.trend = sig.trend;
  s.variability = sig.variability;
  s.shape = sig.shape;
  return s;
}

std::string SemanticTarget::to_string() const {
  return sensor + "|" + actuator + "=" + std::to_string(state);
}

std::string render_template_text(const AttributeSummary& summary, const SemanticTarget& target) {
  std::string out = "Under " + target.actuator + "=" + std::to_string(target.state) + ", " +
                    target.sensor + " typically " + trend_verb(summary.trend) + " within [" +
                    fmt_fixed2(summary.lo) + ", " + fmt_fixed2(summary.hi) + "] (mean " +
                    fmt_fixed2(summary.mean) + "), with " + to_string(summary.variability) +
                    " variability and " + to_string(summary.shape) + " dynamics.";
  return out;
}

std::string build_prompt_payload(const SemanticTarget& target, const AttributeSummary& summary) {
  std::string j = "{";
  j += "\"sensor\":" + json_quote(target.sensor);
  j += ",\"actuator\":" + json_quote(target.actuator);
  j += ",\"state\":" + std::to_string(target.state);
  j += ",\"attributes\":{\"trend\":" + json_quote(to_string(summary.trend));
  j += ",\"variability\":" + json_quote(to_string(summary.variability));
  j += ",\"shape\":" + json_quote(to_string(summary.shape)) + "}";
  j += ",\"representative_stats\":{\"mean\":" + fmt_fixed2(summary.mean);
  j += ",\"lo\":" + fmt_fixed2(summary.lo);
  j += ",\"hi\":" + fmt_fixed2(summary.hi);
  j += ",\"amp\":" + fmt_fixed2(summary.amp) + "}";
  j += ",\"instructions\":" + json_quote(kPromptInstructions);
  j += "}";
  return j;
}

int sentence_count(const std::string& text) {
  auto is_term = [](char c) { return c == '.' || c == '!' || c == '?'; };
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  int count = 0;
  bool have_content = false;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (is_term(text[i])) {
      // Only a terminator run followed by whitespace (or the end) closes a
      // sentence; the dot in "523.40" is part of the number, not a break.
      std::size_t j = i;
      while (j < n && is_term(text[j])) ++j;
      if (j == n || is_space(text[j])) {
        if (have_content) {
          ++count;
          have_content = false;
        }
      } else {
        have_content = true;
      }
      i = j - 1;
    } else if (!is_space(text[i])) {
      have_content = true;
    }
  }
  if (have_content) ++count;
  return count;
}

SemanticBank generate_semantic_bank(const RuleBank& bank, const SaIndex& index,
                                    const EngineConfig& cfg, TextProvider* provider) {
  struct Job {
    SemanticPrompt prompt;
    std::string digest;
    std::string template_text;
  };
  std::vector<Job> jobs;
  for (const auto& entry : index.entries) {
    if (entry.modes.empty()) continue;
    if (index.r_of(entry.sensor, entry.actuator) < cfg.r_min) continue;

    // Dominant pooled mode: highest support, ties to the lowest mode_id and
    // then the earliest key.
    const ModeRef* best_ref = nullptr;
    const ModeRule* best_mode = nullptr;
    for (const ModeRef& ref : entry.modes) {
      const ModeRule& m = resolve(bank, ref);
      bool take;
      if (!best_mode) {
        take = true;
      } else if (m.support != best_mode->support) {
        take = m.support > best_mode->support;
      } else if (ref.mode_id != best_ref->mode_id) {
        take = ref.mode_id < best_ref->mode_id;
      } else {
        take = ref.key_index < best_ref->key_index;
      }
      if (take) {
        best_ref = &ref;
        best_mode = &m;
      }
    }

    Job job;
    job.prompt.target = SemanticTarget{entry.sensor, entry.actuator, entry.state};
    job.prompt.attributes = summarize_attributes(
        *best_mode, bank.meta.sensor_ranges.at(entry.sensor), bank.meta.window, cfg);
    job.prompt.payload_json = build_prompt_payload(job.prompt.target, job.prompt.attributes);
    job.digest = hex_digest(job.prompt.payload_json);
    job.template_text = render_template_text(job.prompt.attributes, job.prompt.target);
    jobs.push_back(std::move(job));
  }

  std::vector<std::optional<std::string>> responses(jobs.size());
  if (provider != nullptr && !jobs.empty()) {
    // Bounded fan-out; the merge below runs in job (= target) order, so the
    // result does not depend on completion order.
    const unsigned pool_size = static_cast<unsigned>(
        std::min<std::size_t>(std::max(cfg.provider.max_in_flight, 1), jobs.size()));
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
        try {
          responses[i] = provider->complete(jobs[i].prompt);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    if (pool_size == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(pool_size);
      for (unsigned w = 0; w < pool_size; ++w) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  SemanticBank out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& job = jobs[i];
    SemanticRule rule;
    rule.target = job.prompt.target;
    rule.attributes = job.prompt.attributes;
    if (provider == nullptr) {
      rule.text = job.template_text;
      rule.provider = "template";
      rule.provider_digest = job.digest;
    } else {
      const std::string text = responses[i] ? trim(*responses[i]) : "";
      if (!text.empty() && sentence_count(text) <= 2) {
        rule.text = text;
        rule.provider = provider->kind();
        rule.provider_digest = job.digest;
      } else {
        rule.text = job.template_text;
        rule.provider = "template";
        rule.provider_digest = "rejected:" + job.digest;
      }
    }
    out.emplace(rule.target, std::move(rule));
  }
  return out;
}

void annotate_bank_semantics(RuleBank& bank, const SaIndex& index, const Manifest& manifest,
                             const EngineConfig& cfg) {
  for (KeyRules& key : bank.keys) {
    const auto& scope = manifest.scope_of(key.key.sensor);
    if (scope.empty()) continue;
    std::string actuator = scope.front();
    const auto related = related_actuators(index, key.key.sensor, 1, cfg.r_min);
    if (!related.empty()) actuator = related.front().actuator;
    int state = 0;
    for (std::size_t k = 0; k < scope.size(); ++k) {
      if (scope[k] == actuator) {
        state = key.key.states[k];
        break;
      }
    }
    const SemanticTarget target{key.key.sensor, actuator, state};
    const SensorRange& range = bank.meta.sensor_ranges.at(key.key.sensor);
    for (ModeRule& mode : key.modes) {
      mode.semantic_text =
          render_template_text(summarize_attributes(mode, range, bank.meta.window, cfg), target);
    }
  }
}

}  // namespace scdt
