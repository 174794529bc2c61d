#include "scdt/dataset.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>

#include "scdt/errors.hpp"

namespace scdt {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& field, bool& ok) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  ok = ec == std::errc() && ptr == end && begin != end;
  return value;
}

}  // namespace

const std::vector<double>& Dataset::column(const std::string& name) const {
  const auto it = series.find(name);
  if (it == series.end()) throw UsageError("unknown column: " + name);
  return it->second;
}

Dataset ingest_csv(const std::string& path, const Manifest& manifest) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);

  auto column_index = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };

  // Resolve every column the manifest asks for up front.
  std::vector<std::pair<std::string, int>> value_columns;  // sensors + actuators
  for (const auto& s : manifest.sensors) {
    const int idx = column_index(s);
    if (idx < 0) throw DataError(path + ": missing sensor column '" + s + "'");
    value_columns.emplace_back(s, idx);
  }
  for (const auto& a : manifest.actuators) {
    const int idx = column_index(a);
    if (idx < 0) throw DataError(path + ": missing actuator column '" + a + "'");
    value_columns.emplace_back(a, idx);
  }
  int ts_idx = -1, label_idx = -1;
  if (!manifest.timestamp_column.empty()) {
    ts_idx = column_index(manifest.timestamp_column);
    if (ts_idx < 0) throw DataError(path + ": missing timestamp column '" +
                                    manifest.timestamp_column + "'");
  }
  if (!manifest.label_column.empty()) {
    label_idx = column_index(manifest.label_column);
    if (label_idx < 0) throw DataError(path + ": missing label column '" +
                                       manifest.label_column + "'");
  }

  Dataset data;
  for (const auto& [name, _] : value_columns) data.series[name] = {};

  std::vector<std::string> bad_lines;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    bool row_ok = true;
    for (const auto& [name, idx] : value_columns) {
      bool ok = false;
      const double v = parse_number(fields[idx], ok);
      if (!ok || !std::isfinite(v)) row_ok = false;
      data.series[name].push_back(v);
    }
    if (!row_ok && bad_lines.size() < 10) bad_lines.push_back(std::to_string(line_no));
    if (ts_idx >= 0) {
      bool ok = false;
      data.timestamps.push_back(parse_number(fields[ts_idx], ok));
      if (!ok) row_ok = false;
    }
    if (label_idx >= 0) {
      bool ok = false;
      const double v = parse_number(fields[label_idx], ok);
      if (!ok) row_ok = false;
      data.labels.push_back(v != 0.0 ? 1 : 0);
    }
    if (!row_ok && (bad_lines.empty() || bad_lines.back() != std::to_string(line_no)) &&
        bad_lines.size() < 10) {
      bad_lines.push_back(std::to_string(line_no));
    }
    ++data.rows;
  }

  if (!bad_lines.empty()) {
    std::string joined;
    for (std::size_t i = 0; i < bad_lines.size(); ++i) {
      if (i > 0) joined += ", ";
      joined += bad_lines[i];
    }
    throw DataError(path + ": non-finite or unparsable values at line(s) " + joined);
  }
  if (data.rows == 0) throw DataError(path + ": no data rows");
  return data;
}

std::size_t window_count(std::size_t rows, int window, int stride) {
  if (rows < static_cast<std::size_t>(window)) return 0;
  return (rows - static_cast<std::size_t>(window)) / static_cast<std::size_t>(stride) + 1;
}

std::vector<SensorWindow> make_windows(const Dataset& data, const Manifest& manifest,
                                       const std::string& sensor) {
  if (!manifest.has_sensor(sensor)) throw UsageError("unknown sensor: " + sensor);
  const std::vector<double>& values = data.column(sensor);
  const auto& scope = manifest.scope_of(sensor);
  const int w = manifest.window;
  const int stride = manifest.stride;

  std::vector<SensorWindow> out;
  out.reserve(window_count(data.rows, w, stride));
  for (std::size_t start = 0; start + static_cast<std::size_t>(w) <= data.rows;
       start += static_cast<std::size_t>(stride)) {
    SensorWindow win;
    win.sensor_id = sensor;
    win.start = static_cast<std::int64_t>(start);
    win.values.assign(values.begin() + start, values.begin() + start + w);
    win.ac_raw.reserve(scope.size());
    for (const auto& a : scope) win.ac_raw.push_back(data.column(a)[start]);
    out.push_back(std::move(win));
  }
  return out;
}

std::vector<int> label_windows(const Dataset& data, int window, int stride) {
  std::vector<int> out;
  if (data.labels.empty()) return out;
  out.reserve(window_count(data.rows, window, stride));
  for (std::size_t start = 0; start + static_cast<std::size_t>(window) <= data.rows;
       start += static_cast<std::size_t>(stride)) {
    int label = 0;
    for (std::size_t i = start; i < start + static_cast<std::size_t>(window); ++i) {
      if (data.labels[i] != 0) {
        label = 1;
        break;
      }
    }
    out.push_back(label);
  }
  return out;
}

}  // namespace scdt
