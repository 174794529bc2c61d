#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace scdt {

// Outbound text-completion provider settings. `offline = true` (the default)
// refuses every network call; deterministic template providers are used
// instead, so the whole pipeline runs air-gapped unless explicitly opted in.
struct ProviderConfig {
  bool offline = true;
  std::string endpoint;          // e.g. https://host/v1/chat/completions
  std::string model;
  std::string api_key_env;       // name of the env var holding the key
  double timeout_seconds = 30.0;
  int max_retries = 2;           // retries after the first attempt
  int max_output_tokens = 450;   // 0 = no cap (used by the arbitration role)
  int max_in_flight = 4;
};

enum class DiagnoseMode { kNone, kAnomalies, kAll };

// Every tunable of the detection engine, with working defaults. Values are
// overridable through the key=value config file and CLI flags.
struct EngineConfig {
  // windowing
  int window = 30;
  int stride = 30;

  // mode learning
  double alpha = 0.005;          // envelope tail level per side
  double q = 0.999;              // distance threshold calibration quantile
  double level_gap_frac = 0.05;  // level split when gap > frac * sensor range
  double level_gap_abs = 1e-9;
  int min_windows = 10;          // keys below this learn no modes
  int umap_neighbors = 15;
  double umap_min_dist = 0.1;
  int umap_epochs = 200;
  int density_min_size = 5;
  double density_min_frac = 0.01;
  double z_max = 8.0;
  double sigma_floor = 1e-6;
  double theta_base = 52.0;      // threshold floor for small-support modes
  int small_support = 20;

  // screening
  double rho = 0.1;              // distance acceptance slack
  double rho_arb = 0.5;          // deterministic arbitration slack
  double theta_amb = 0.0;        // fallback rejections deeper than -theta_amb defer
  bool arbitrate_fallback = true;
  DiagnoseMode diagnose = DiagnoseMode::kAnomalies;

  // actuator relatedness / signatures
  int max_state = 4;             // equal-width binning emits states 0..max_state
  int value_map_cardinality = 10;
  int level_bins = 5;
  double trend_band_frac = 0.1;  // dead-band: 0.1 * range / W per sample
  double var_compact = 0.02;
  double var_dispersed = 0.10;
  double shape_stable = 0.5;
  double shape_fluctuating = 2.0;
  double r_min = 0.1;
  int related_top_k = 3;
  bool relatedness_max_agg = false;  // default: mean over state pairs

  std::uint64_t seed = 42;
  int threads = 0;  // 0 = hardware concurrency

  ProviderConfig provider;
};

// Parse a key=value config file ('#' comments, dotted keys such as
// provider.endpoint). Unknown keys raise UsageError naming the key.
EngineConfig load_engine_config(const std::string& path, EngineConfig base = {});
void apply_config_entry(EngineConfig& cfg, const std::string& key, const std::string& value);

// Shared low-level reader: returns the file's key=value pairs in order.
std::map<std::string, std::string> read_kv_file(const std::string& path);

}  // namespace scdt
