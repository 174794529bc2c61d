#include "scdt/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "scdt/errors.hpp"

namespace scdt {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw UsageError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

}  // namespace

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void apply_config_entry(EngineConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "window") cfg.window = to_int(key, value);
  else if (key == "stride") cfg.stride = to_int(key, value);
  else if (key == "alpha") cfg.alpha = to_double(key, value);
  else if (key == "q") cfg.q = to_double(key, value);
  else if (key == "level_gap_frac") cfg.level_gap_frac = to_double(key, value);
  else if (key == "level_gap_abs") cfg.level_gap_abs = to_double(key, value);
  else if (key == "min_windows") cfg.min_windows = to_int(key, value);
  else if (key == "umap_neighbors") cfg.umap_neighbors = to_int(key, value);
  else if (key == "umap_min_dist") cfg.umap_min_dist = to_double(key, value);
  else if (key == "umap_epochs") cfg.umap_epochs = to_int(key, value);
  else if (key == "density_min_size") cfg.density_min_size = to_int(key, value);
  else if (key == "density_min_frac") cfg.density_min_frac = to_double(key, value);
  else if (key == "z_max") cfg.z_max = to_double(key, value);
  else if (key == "sigma_floor") cfg.sigma_floor = to_double(key, value);
  else if (key == "theta_base") cfg.theta_base = to_double(key, value);
  else if (key == "small_support") cfg.small_support = to_int(key, value);
  else if (key == "rho") cfg.rho = to_double(key, value);
  else if (key == "rho_arb") cfg.rho_arb = to_double(key, value);
  else if (key == "theta_amb") cfg.theta_amb = to_double(key, value);
  else if (key == "arbitrate_fallback") cfg.arbitrate_fallback = to_bool(key, value);
  else if (key == "diagnose") {
    if (value == "none") cfg.diagnose = DiagnoseMode::kNone;
    else if (value == "anomalies") cfg.diagnose = DiagnoseMode::kAnomalies;
    else if (value == "all") cfg.diagnose = DiagnoseMode::kAll;
    else throw UsageError("config key 'diagnose': expected none|anomalies|all");
  }
  else if (key == "max_state") cfg.max_state = to_int(key, value);
  else if (key == "value_map_cardinality") cfg.value_map_cardinality = to_int(key, value);
  else if (key == "level_bins") cfg.level_bins = to_int(key, value);
  else if (key == "trend_band_frac") cfg.trend_band_frac = to_double(key, value);
  else if (key == "var_compact") cfg.var_compact = to_double(key, value);
  else if (key == "var_dispersed") cfg.var_dispersed = to_double(key, value);
  else if (key == "shape_stable") cfg.shape_stable = to_double(key, value);
  else if (key == "shape_fluctuating") cfg.shape_fluctuating = to_double(key, value);
  else if (key == "r_min") cfg.r_min = to_double(key, value);
  else if (key == "related_top_k") cfg.related_top_k = to_int(key, value);
  else if (key == "relatedness_agg") {
    if (value == "mean") cfg.relatedness_max_agg = false;
    else if (value == "max") cfg.relatedness_max_agg = true;
    else throw UsageError("config key 'relatedness_agg': expected mean|max");
  }
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "threads") cfg.threads = to_int(key, value);
  else if (key == "offline") cfg.provider.offline = to_bool(key, value);
  else if (key == "provider.endpoint") cfg.provider.endpoint = value;
  else if (key == "provider.model") cfg.provider.model = value;
  else if (key == "provider.api_key_env") cfg.provider.api_key_env = value;
  else if (key == "provider.timeout") cfg.provider.timeout_seconds = to_double(key, value);
  else if (key == "provider.retries") cfg.provider.max_retries = to_int(key, value);
  else if (key == "provider.max_output_tokens") cfg.provider.max_output_tokens = to_int(key, value);
  else if (key == "provider.max_in_flight") cfg.provider.max_in_flight = to_int(key, value);
  else throw UsageError("unknown config key: " + key);
}

EngineConfig load_engine_config(const std::string& path, EngineConfig base) {
  for (const auto& [key, value] : read_kv_file(path)) {
    apply_config_entry(base, key, value);
  }
  return base;
}

}  // namespace scdt
