#include "scdt/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "scdt/errors.hpp"
#include "scdt/features.hpp"
#include "scdt/jsonout.hpp"

namespace scdt {
namespace {

std::string diagnosis_to_json(const Diagnosis& d) {
  std::string j = "{\"narrative\":" + json_quote(d.narrative);
  j += ",\"suspects\":[";
  for (std::size_t i = 0; i < d.suspects.size(); ++i) {
    if (i) j += ",";
    j += "{\"actuator\":" + json_quote(d.suspects[i].actuator);
    j += ",\"r\":" + fmt_g17(d.suspects[i].r);
    j += ",\"reason\":" + json_quote(d.suspects[i].reason) + "}";
  }
  j += "],\"final_decision\":" + json_quote(to_string(d.final_decision));
  j += ",\"provider\":" + json_quote(d.provider);
  j += ",\"provider_rejected\":" + std::string(d.provider_rejected ? "true" : "false");
  return j + "}";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report file: " + path);
  out << content;
  if (!out) throw DataError("failed while writing report file: " + path);
}

std::string fmt_svg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string verdict_to_json(const VerdictRecord& record) {
  const Verdict& v = record.verdict;
  std::string j = "{\"sensor\":" + json_quote(v.sensor);
  j += ",\"start\":" + std::to_string(v.start);
  j += ",\"decision\":" + json_quote(to_string(v.decision));
  j += ",\"path\":" + json_quote(to_string(v.path));
  j += ",\"source\":" + json_quote(to_string(v.source));
  if (v.has_best) {
    j += ",\"best\":{\"key\":" + std::to_string(v.best.key_index) +
         ",\"mode\":" + std::to_string(v.best.mode_id) + "}";
  } else {
    j += ",\"best\":null";
  }
  j += ",\"margin\":" + (v.has_margin ? fmt_g17(v.margin) : "null");
  j += ",\"score\":" + (v.has_score ? fmt_g17(v.score) : "null");
  j += ",\"violated\":[";
  for (std::size_t i = 0; i < v.violated.size(); ++i) {
    const DimViolation& dv = v.violated[i];
    if (i) j += ",";
    j += "{\"dim\":" + json_quote(kDescriptorDimNames[static_cast<std::size_t>(dv.dim)]);
    j += ",\"observed\":" + fmt_g17(dv.observed);
    j += ",\"lo\":" + fmt_g17(dv.lo);
    j += ",\"hi\":" + fmt_g17(dv.hi);
    j += ",\"z\":" + fmt_g17(dv.z) + "}";
  }
  j += "],\"arbitrated\":" + std::string(v.arbitrated ? "true" : "false");
  j += ",\"ambiguity_reason\":" +
       (v.ambiguity_reason.empty() ? std::string("null") : json_quote(v.ambiguity_reason));
  j += ",\"diagnosis\":" +
       (record.has_diagnosis ? diagnosis_to_json(record.diagnosis) : std::string("null"));
  return j + "}";
}

std::string system_verdict_to_json(const SystemVerdict& verdict) {
  std::string j = "{\"start\":" + std::to_string(verdict.start);
  j += ",\"decision\":" + json_quote(to_string(verdict.decision));
  j += ",\"sensors\":" + std::to_string(verdict.sensors);
  j += ",\"anomalous\":" + std::to_string(verdict.anomalous);
  return j + "}";
}

std::string metrics_to_json(const RunMetrics& m) {
  std::string j = "{\"tp\":" + std::to_string(m.tp);
  j += ",\"fp\":" + std::to_string(m.fp);
  j += ",\"fn\":" + std::to_string(m.fn);
  j += ",\"tn\":" + std::to_string(m.tn);
  j += ",\"precision\":" + fmt_g17(m.precision);
  j += ",\"recall\":" + fmt_g17(m.recall);
  j += ",\"f1\":" + fmt_g17(m.f1);
  j += ",\"false_alarm_rate\":" + fmt_g17(m.false_alarm_rate);
  return j + "}\n";
}

void write_verdicts_jsonl(const std::string& path, const std::vector<VerdictRecord>& records) {
  std::string content;
  for (const auto& rec : records) content += verdict_to_json(rec) + "\n";
  write_text_file(path, content);
}

void write_system_jsonl(const std::string& path, const std::vector<SystemVerdict>& system) {
  std::string content;
  for (const auto& sv : system) content += system_verdict_to_json(sv) + "\n";
  write_text_file(path, content);
}

void write_metrics_json(const std::string& path, const RunMetrics& metrics) {
  write_text_file(path, metrics_to_json(metrics));
}

std::string timeline_svg(const std::string& sensor, const std::vector<VerdictRecord>& records,
                         const std::vector<int>& truth_windows) {
  constexpr double kWidth = 960.0, kHeight = 240.0, kPad = 30.0;
  constexpr double kScoreCap = 3.0;  // display clip; 1.0 is the decision line
  const double plot_w = kWidth - 2 * kPad;
  const double plot_h = kHeight - 2 * kPad;
  const std::size_t n = records.size();

  auto x_of = [&](std::size_t i) {
    return kPad + (n <= 1 ? 0.0 : plot_w * static_cast<double>(i) / static_cast<double>(n - 1));
  };
  auto y_of = [&](double score) {
    const double clipped = std::min(score, kScoreCap);
    return kHeight - kPad - plot_h * clipped / kScoreCap;
  };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_svg(kWidth) +
                    "\" height=\"" + fmt_svg(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt_svg(kPad) + "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" +
         json_escape(sensor) + " anomaly score (window-level)</text>\n";

  // Ground-truth attack windows as shaded bands.
  for (std::size_t i = 0; i < truth_windows.size() && i < n; ++i) {
    if (!truth_windows[i]) continue;
    const double x0 = x_of(i) - (n > 1 ? plot_w / (2.0 * (n - 1)) : plot_w / 2.0);
    const double bw = n > 1 ? plot_w / static_cast<double>(n - 1) : plot_w;
    svg += "<rect x=\"" + fmt_svg(std::max(x0, kPad)) + "\" y=\"" + fmt_svg(kPad) + "\" width=\"" +
           fmt_svg(bw) + "\" height=\"" + fmt_svg(plot_h) + "\" fill=\"#fbd5d5\"/>\n";
  }

  // Decision threshold (score = 1) reference line.
  svg += "<line x1=\"" + fmt_svg(kPad) + "\" y1=\"" + fmt_svg(y_of(1.0)) + "\" x2=\"" +
         fmt_svg(kWidth - kPad) + "\" y2=\"" + fmt_svg(y_of(1.0)) +
         "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

  std::string polyline;
  for (std::size_t i = 0; i < n; ++i) {
    if (!records[i].verdict.has_score) continue;
    if (!polyline.empty()) polyline += " ";
    polyline += fmt_svg(x_of(i)) + "," + fmt_svg(y_of(records[i].verdict.score));
  }
  if (!polyline.empty()) {
    svg += "<polyline points=\"" + polyline +
           "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\"/>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (records[i].verdict.decision != Decision::kAnomaly) continue;
    const double y = records[i].verdict.has_score ? y_of(records[i].verdict.score) : y_of(kScoreCap);
    svg += "<circle cx=\"" + fmt_svg(x_of(i)) + "\" cy=\"" + fmt_svg(y) +
           "\" r=\"2.5\" fill=\"#d62728\"/>\n";
  }
  svg += "<line x1=\"" + fmt_svg(kPad) + "\" y1=\"" + fmt_svg(kHeight - kPad) + "\" x2=\"" +
         fmt_svg(kWidth - kPad) + "\" y2=\"" + fmt_svg(kHeight - kPad) +
         "\" stroke=\"black\"/>\n";
  svg += "</svg>\n";
  return svg;
}

void emit_report(const std::string& out_dir, const DetectionResult& result,
                 const RunMetrics& metrics, const std::vector<int>& truth_windows) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create report directory " + out_dir + ": " + ec.message());

  const std::filesystem::path dir(out_dir);
  write_metrics_json((dir / "metrics.json").string(), metrics);
  write_verdicts_jsonl((dir / "verdicts.jsonl").string(), result.records);
  write_system_jsonl((dir / "system.jsonl").string(), result.system);

  std::map<std::string, std::vector<VerdictRecord>> by_sensor;
  for (const auto& rec : result.records) by_sensor[rec.verdict.sensor].push_back(rec);
  for (const auto& [sensor, records] : by_sensor) {
    write_text_file((dir / ("timeline_" + sensor + ".svg")).string(),
                    timeline_svg(sensor, records, truth_windows));
  }
}

}  // namespace scdt
