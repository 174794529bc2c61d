#include "scdt/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "scdt/config.hpp"
#include "scdt/errors.hpp"
#include "scdt/rng.hpp"
#include "scdt/window.hpp"

namespace scdt {

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    std::size_t b = 0, e = item.size();
    while (b < e && std::isspace(static_cast<unsigned char>(item[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(item[e - 1]))) --e;
    if (e > b) out.push_back(item.substr(b, e - b));
  }
  return out;
}

void validate(const Manifest& m) {
  if (m.sensors.empty()) throw UsageError("manifest declares no sensor columns");
  if (m.window < kMinWindowLength) {
    throw UsageError("manifest window must be >= " + std::to_string(kMinWindowLength));
  }
  if (m.stride < 1) throw UsageError("manifest stride must be >= 1");
  for (const auto& s : m.sensors) {
    const auto it = m.scope.find(s);
    if (it == m.scope.end() || it->second.empty()) {
      throw UsageError("sensor '" + s + "' has no configured actuators (scope." + s + ")");
    }
    for (const auto& a : it->second) {
      if (std::find(m.actuators.begin(), m.actuators.end(), a) == m.actuators.end()) {
        throw UsageError("scope." + s + " references unknown actuator '" + a + "'");
      }
    }
  }
  for (const auto& [sensor, _] : m.scope) {
    if (std::find(m.sensors.begin(), m.sensors.end(), sensor) == m.sensors.end()) {
      throw UsageError("scope." + sensor + " references unknown sensor column");
    }
  }
}

}  // namespace

const std::vector<std::string>& Manifest::scope_of(const std::string& sensor) const {
  const auto it = scope.find(sensor);
  if (it == scope.end()) throw UsageError("unknown sensor: " + sensor);
  return it->second;
}

bool Manifest::has_sensor(const std::string& name) const {
  return std::find(sensors.begin(), sensors.end(), name) != sensors.end();
}

std::string Manifest::canonical_text() const {
  std::string out;
  out += "window=" + std::to_string(window) + "\n";
  out += "stride=" + std::to_string(stride) + "\n";
  if (!timestamp_column.empty()) out += "timestamp=" + timestamp_column + "\n";
  if (!label_column.empty()) out += "label=" + label_column + "\n";
  for (const auto& s : sensors) out += "sensor=" + s + "\n";
  for (const auto& a : actuators) out += "actuator=" + a + "\n";
  for (const auto& s : sensors) {
    out += "scope." + s + "=";
    const auto& sc = scope.at(s);
    for (std::size_t i = 0; i < sc.size(); ++i) {
      if (i > 0) out += ",";
      out += sc[i];
    }
    out += "\n";
  }
  return out;
}

std::string Manifest::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

Manifest parse_manifest(const std::map<std::string, std::string>& kv) {
  Manifest m;
  for (const auto& [key, value] : kv) {
    if (key == "window") m.window = std::stoi(value);
    else if (key == "stride") m.stride = std::stoi(value);
    else if (key.rfind("column.", 0) == 0) {
      const std::string column = key.substr(7);
      if (value == "sensor") m.sensors.push_back(column);
      else if (value == "actuator") m.actuators.push_back(column);
      else if (value == "timestamp") m.timestamp_column = column;
      else if (value == "label") m.label_column = column;
      else throw UsageError("manifest column '" + column + "': unknown role '" + value + "'");
    } else if (key.rfind("scope.", 0) == 0) {
      m.scope[key.substr(6)] = split_list(value);
    } else {
      throw UsageError("unknown manifest key: " + key);
    }
  }
  std::sort(m.sensors.begin(), m.sensors.end());
  std::sort(m.actuators.begin(), m.actuators.end());
  validate(m);
  return m;
}

Manifest load_manifest(const std::string& path) {
  return parse_manifest(read_kv_file(path));
}

}  // namespace scdt
