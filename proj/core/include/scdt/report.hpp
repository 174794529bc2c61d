#pragma once

#include <string>
#include <vector>

#include "scdt/inference.hpp"
#include "scdt/metrics.hpp"

namespace scdt {

// One JSON object per line; field order fixed so reruns are byte-identical.
std::string verdict_to_json(const VerdictRecord& record);
std::string system_verdict_to_json(const SystemVerdict& verdict);
std::string metrics_to_json(const RunMetrics& metrics);

void write_verdicts_jsonl(const std::string& path, const std::vector<VerdictRecord>& records);
void write_system_jsonl(const std::string& path, const std::vector<SystemVerdict>& system);
void write_metrics_json(const std::string& path, const RunMetrics& metrics);

// Anomaly-score timeline for one sensor: score polyline (clipped for
// display), anomaly markers, and ground-truth shading when labels exist.
std::string timeline_svg(const std::string& sensor, const std::vector<VerdictRecord>& records,
                         const std::vector<int>& truth_windows);

// metrics.json + verdicts.jsonl + system.jsonl + timeline_<sensor>.svg per
// sensor (plots skipped when there are no verdicts). Creates out_dir when
// missing; I/O failures raise DataError.
void emit_report(const std::string& out_dir, const DetectionResult& result,
                 const RunMetrics& metrics, const std::vector<int>& truth_windows);

}  // namespace scdt
