#include "scdt/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scdt/errors.hpp"
#include "scdt/jsonout.hpp"

namespace scdt {
namespace {

using nlohmann::json;

std::string float_array(const double* values, std::size_t n) {
  std::string out = "[";
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ",";
    out += fmt_g17(values[i]);
  }
  return out + "]";
}

const char* strategy_name(ActuatorBinning::Strategy s) {
  return s == ActuatorBinning::Strategy::kValueMap ? "value_map" : "equal_width";
}

ActuatorBinning::Strategy parse_strategy(const std::string& name) {
  if (name == "value_map") return ActuatorBinning::Strategy::kValueMap;
  if (name == "equal_width") return ActuatorBinning::Strategy::kEqualWidth;
  throw DataError("model file: unknown binning strategy '" + name + "'");
}

Trend parse_trend(const std::string& name) {
  if (name == "increase") return Trend::kIncrease;
  if (name == "decrease") return Trend::kDecrease;
  if (name == "maintain") return Trend::kMaintain;
  throw DataError("model file: unknown trend category '" + name + "'");
}

Variability parse_variability(const std::string& name) {
  if (name == "compact") return Variability::kCompact;
  if (name == "middle") return Variability::kMiddle;
  if (name == "dispersed") return Variability::kDispersed;
  throw DataError("model file: unknown variability category '" + name + "'");
}

Shape parse_shape(const std::string& name) {
  if (name == "stable") return Shape::kStable;
  if (name == "middle") return Shape::kMiddle;
  if (name == "fluctuating") return Shape::kFluctuating;
  throw DataError("model file: unknown shape category '" + name + "'");
}

void read_dim_array(const json& node, const char* what, std::array<double, kDescriptorDims>& out) {
  if (!node.is_array() || node.size() != kDescriptorDims)
    throw DataError("model file: '" + std::string(what) + "' must be an array of " +
                    std::to_string(kDescriptorDims) + " numbers");
  for (std::size_t i = 0; i < kDescriptorDims; ++i) {
    if (!node[i].is_number()) throw DataError("model file: non-numeric entry in " + std::string(what));
    out[i] = node[i].get<double>();
  }
}

}  // namespace

std::string model_to_json(const ModelBundle& bundle) {
  const RuleBank& bank = bundle.bank;
  std::string j = "{";
  j += "\"version\":" + json_quote(kModelVersion);

  j += ",\"metadata\":{";
  j += "\"window\":" + std::to_string(bank.meta.window);
  j += ",\"stride\":" + std::to_string(bank.meta.stride);
  j += ",\"alpha\":" + fmt_g17(bank.meta.alpha);
  j += ",\"q\":" + fmt_g17(bank.meta.q);
  j += ",\"rho\":" + fmt_g17(bank.meta.rho);
  j += ",\"z_max\":" + fmt_g17(bank.meta.z_max);
  j += ",\"min_windows\":" + std::to_string(bank.meta.min_windows);
  j += ",\"seed\":" + std::to_string(bank.meta.seed);
  j += ",\"manifest_digest\":" + json_quote(bank.meta.manifest_digest);
  j += ",\"sensor_ranges\":{";
  bool first = true;
  for (const auto& [sensor, range] : bank.meta.sensor_ranges) {
    if (!first) j += ",";
    first = false;
    j += json_quote(sensor) + ":{\"lo\":" + fmt_g17(range.lo) + ",\"hi\":" + fmt_g17(range.hi) +
         "}";
  }
  j += "}}";

  j += ",\"keys\":[";
  for (std::size_t k = 0; k < bank.keys.size(); ++k) {
    const KeyRules& kr = bank.keys[k];
    if (k) j += ",";
    j += "{\"sensor\":" + json_quote(kr.key.sensor) + ",\"ac\":[";
    for (std::size_t s = 0; s < kr.key.states.size(); ++s) {
      if (s) j += ",";
      j += std::to_string(kr.key.states[s]);
    }
    j += "],\"modes\":[";
    for (std::size_t m = 0; m < kr.modes.size(); ++m) {
      const ModeRule& mode = kr.modes[m];
      if (m) j += ",";
      j += "{\"mode_id\":" + std::to_string(mode.mode_id);
      j += ",\"support\":" + std::to_string(mode.support);
      j += ",\"envelope\":{\"alpha\":" + fmt_g17(mode.envelope.alpha);
      j += ",\"lo\":" + float_array(mode.envelope.lo.data(), kDescriptorDims);
      j += ",\"hi\":" + float_array(mode.envelope.hi.data(), kDescriptorDims) + "}";
      j += ",\"distance\":{\"mu\":" + float_array(mode.distance.mu.data(), kDescriptorDims);
      j += ",\"sigma\":" + float_array(mode.distance.sigma.data(), kDescriptorDims);
      j += ",\"theta\":" + fmt_g17(mode.distance.theta);
      j += ",\"z_max\":" + fmt_g17(mode.distance.z_max);
      j += ",\"scaler\":{\"med\":" + float_array(mode.distance.scaler.med.data(), kDescriptorDims);
      j += ",\"iqr\":" + float_array(mode.distance.scaler.iqr.data(), kDescriptorDims) + "}}";
      j += ",\"semantic_text\":" +
           (mode.semantic_text.empty() ? std::string("null") : json_quote(mode.semantic_text));
      j += "}";
    }
    j += "]}";
  }
  j += "]";

  j += ",\"sa_index\":{\"binnings\":[";
  for (std::size_t b = 0; b < bundle.sa.binnings.size(); ++b) {
    const ActuatorBinning& bin = bundle.sa.binnings[b];
    if (b) j += ",";
    j += "{\"actuator\":" + json_quote(bin.actuator);
    j += ",\"strategy\":" + json_quote(strategy_name(bin.strategy));
    j += ",\"values\":" + float_array(bin.values.data(), bin.values.size());
    j += ",\"lo\":" + fmt_g17(bin.lo);
    j += ",\"hi\":" + fmt_g17(bin.hi);
    j += ",\"max_state\":" + std::to_string(bin.max_state) + "}";
  }
  j += "],\"entries\":[";
  for (std::size_t e = 0; e < bundle.sa.entries.size(); ++e) {
    const SaEntry& entry = bundle.sa.entries[e];
    if (e) j += ",";
    j += "{\"sensor\":" + json_quote(entry.sensor);
    j += ",\"actuator\":" + json_quote(entry.actuator);
    j += ",\"state\":" + std::to_string(entry.state);
    j += ",\"modes\":[";
    for (std::size_t m = 0; m < entry.modes.size(); ++m) {
      if (m) j += ",";
      j += "{\"key\":" + std::to_string(entry.modes[m].key_index);
      j += ",\"mode\":" + std::to_string(entry.modes[m].mode_id) + "}";
    }
    j += "]}";
  }
  j += "],\"relatedness\":[";
  for (std::size_t r = 0; r < bundle.sa.relatedness.size(); ++r) {
    const ActuatorRelatedness& rel = bundle.sa.relatedness[r];
    if (r) j += ",";
    j += "{\"sensor\":" + json_quote(rel.sensor);
    j += ",\"actuator\":" + json_quote(rel.actuator);
    j += ",\"r\":" + fmt_g17(rel.r) + "}";
  }
  j += "]}";

  j += ",\"semantics\":[";
  first = true;
  for (const auto& [target, rule] : bundle.semantics) {
    if (!first) j += ",";
    first = false;
    j += "{\"sensor\":" + json_quote(target.sensor);
    j += ",\"actuator\":" + json_quote(target.actuator);
    j += ",\"state\":" + std::to_string(target.state);
    j += ",\"text\":" + json_quote(rule.text);
    j += ",\"attributes\":{\"mean\":" + fmt_g17(rule.attributes.mean);
    j += ",\"lo\":" + fmt_g17(rule.attributes.lo);
    j += ",\"hi\":" + fmt_g17(rule.attributes.hi);
    j += ",\"amp\":" + fmt_g17(rule.attributes.amp);
    j += ",\"trend\":" + json_quote(to_string(rule.attributes.trend));
    j += ",\"variability\":" + json_quote(to_string(rule.attributes.variability));
    j += ",\"shape\":" + json_quote(to_string(rule.attributes.shape)) + "}";
    j += ",\"provider\":" + json_quote(rule.provider);
    j += ",\"provider_digest\":" + json_quote(rule.provider_digest);
    j += "}";
  }
  j += "]}";
  return j;
}

ModelBundle model_from_json(const std::string& text) {
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw DataError("model file: not valid JSON");
  try {
    if (!doc.contains("version") || !doc["version"].is_string())
      throw DataError("model file: missing version field");
    const std::string version = doc["version"].get<std::string>();
    if (version != kModelVersion)
      throw DataError("model file: unsupported version '" + version + "' (expected '" +
                      kModelVersion + "')");

    ModelBundle bundle;
    const json& meta = doc.at("metadata");
    bundle.bank.meta.window = meta.at("window").get<int>();
    bundle.bank.meta.stride = meta.at("stride").get<int>();
    bundle.bank.meta.alpha = meta.at("alpha").get<double>();
    bundle.bank.meta.q = meta.at("q").get<double>();
    bundle.bank.meta.rho = meta.at("rho").get<double>();
    bundle.bank.meta.z_max = meta.at("z_max").get<double>();
    bundle.bank.meta.min_windows = meta.at("min_windows").get<int>();
    bundle.bank.meta.seed = meta.at("seed").get<std::uint64_t>();
    bundle.bank.meta.manifest_digest = meta.at("manifest_digest").get<std::string>();
    for (const auto& [sensor, range] : meta.at("sensor_ranges").items()) {
      bundle.bank.meta.sensor_ranges[sensor] =
          SensorRange{range.at("lo").get<double>(), range.at("hi").get<double>()};
    }

    for (const json& key_node : doc.at("keys")) {
      KeyRules kr;
      kr.key.sensor = key_node.at("sensor").get<std::string>();
      for (const json& st : key_node.at("ac")) kr.key.states.push_back(st.get<int>());
      for (const json& mode_node : key_node.at("modes")) {
        ModeRule mode;
        mode.mode_id = mode_node.at("mode_id").get<int>();
        mode.support = mode_node.at("support").get<int>();
        const json& env = mode_node.at("envelope");
        mode.envelope.alpha = env.at("alpha").get<double>();
        read_dim_array(env.at("lo"), "envelope.lo", mode.envelope.lo);
        read_dim_array(env.at("hi"), "envelope.hi", mode.envelope.hi);
        const json& dist = mode_node.at("distance");
        read_dim_array(dist.at("mu"), "distance.mu", mode.distance.mu);
        read_dim_array(dist.at("sigma"), "distance.sigma", mode.distance.sigma);
        mode.distance.theta = dist.at("theta").get<double>();
        mode.distance.z_max = dist.at("z_max").get<double>();
        const json& scaler = dist.at("scaler");
        read_dim_array(scaler.at("med"), "scaler.med", mode.distance.scaler.med);
        read_dim_array(scaler.at("iqr"), "scaler.iqr", mode.distance.scaler.iqr);
        const json& sem = mode_node.at("semantic_text");
        if (sem.is_string()) mode.semantic_text = sem.get<std::string>();
        else if (!sem.is_null()) throw DataError("model file: semantic_text must be string or null");
        kr.modes.push_back(std::move(mode));
      }
      bundle.bank.keys.push_back(std::move(kr));
    }

    const json& sa = doc.at("sa_index");
    for (const json& bin_node : sa.at("binnings")) {
      ActuatorBinning bin;
      bin.actuator = bin_node.at("actuator").get<std::string>();
      bin.strategy = parse_strategy(bin_node.at("strategy").get<std::string>());
      for (const json& v : bin_node.at("values")) bin.values.push_back(v.get<double>());
      bin.lo = bin_node.at("lo").get<double>();
      bin.hi = bin_node.at("hi").get<double>();
      bin.max_state = bin_node.at("max_state").get<int>();
      bundle.sa.binnings.push_back(std::move(bin));
    }
    for (const json& entry_node : sa.at("entries")) {
      SaEntry entry;
      entry.sensor = entry_node.at("sensor").get<std::string>();
      entry.actuator = entry_node.at("actuator").get<std::string>();
      entry.state = entry_node.at("state").get<int>();
      for (const json& m : entry_node.at("modes"))
        entry.modes.push_back({m.at("key").get<int>(), m.at("mode").get<int>()});
      bundle.sa.entries.push_back(std::move(entry));
    }
    for (const json& rel_node : sa.at("relatedness")) {
      bundle.sa.relatedness.push_back({rel_node.at("sensor").get<std::string>(),
                                       rel_node.at("actuator").get<std::string>(),
                                       rel_node.at("r").get<double>()});
    }

    for (const json& rule_node : doc.at("semantics")) {
      SemanticRule rule;
      rule.target.sensor = rule_node.at("sensor").get<std::string>();
      rule.target.actuator = rule_node.at("actuator").get<std::string>();
      rule.target.state = rule_node.at("state").get<int>();
      rule.text = rule_node.at("text").get<std::string>();
      const json& attrs = rule_node.at("attributes");
      rule.attributes.mean = attrs.at("mean").get<double>();
      rule.attributes.lo = attrs.at("lo").get<double>();
      rule.attributes.hi = attrs.at("hi").get<double>();
      rule.attributes.amp = attrs.at("amp").get<double>();
      rule.attributes.trend = parse_trend(attrs.at("trend").get<std::string>());
      rule.attributes.variability = parse_variability(attrs.at("variability").get<std::string>());
      rule.attributes.shape = parse_shape(attrs.at("shape").get<std::string>());
      rule.provider = rule_node.at("provider").get<std::string>();
      rule.provider_digest = rule_node.at("provider_digest").get<std::string>();
      bundle.semantics.emplace(rule.target, std::move(rule));
    }
    return bundle;
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: malformed structure (") + e.what() + ")");
  }
}

void save_model(const std::string& path, const ModelBundle& bundle) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << model_to_json(bundle) << '\n';
  if (!out) throw DataError("failed while writing model file: " + path);
}

ModelBundle load_model(const std::string& path, const Manifest* manifest) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  ModelBundle bundle = model_from_json(buf.str());
  if (manifest != nullptr && bundle.bank.meta.manifest_digest != manifest->digest()) {
    throw DataError("model file " + path + ": manifest digest mismatch (model trained under " +
                    bundle.bank.meta.manifest_digest + ", current manifest is " +
                    manifest->digest() + ")");
  }
  return bundle;
}

}  // namespace scdt
