// scdt — command-line front end for the context-conditioned telemetry
// anomaly detector.  Subcommands cover the whole artifact pipeline:
//
//   simulate        emit a synthetic plant trace (CSV), optionally a manifest
//   learn-rules     train a rule bank from a trace, save the model bundle
//   build-sa-index  rebuild a bundle's (sensor, actuator, state) index
//   gen-semantics   attach semantic rule texts (template or LLM provider)
//   detect          run screening + diagnosis, write verdict streams
//   evaluate        score a labeled trace, print run metrics as JSON
//   report          full artifact emission: metrics, verdicts, timelines
//
// Exit codes: 0 ok, 1 usage/config, 2 data, 3 provider.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scdt/config.hpp"
#include "scdt/dataset.hpp"
#include "scdt/errors.hpp"
#include "scdt/inference.hpp"
#include "scdt/llm_client.hpp"
#include "scdt/manifest.hpp"
#include "scdt/metrics.hpp"
#include "scdt/report.hpp"
#include "scdt/rulelearn.hpp"
#include "scdt/sa_index.hpp"
#include "scdt/semantics.hpp"
#include "scdt/serialize.hpp"
#include "scdt/simulator.hpp"

namespace {

// Flags every subcommand shares. --seed / --offline override whatever the
// config file said, so a scripted pipeline can pin them per invocation.
struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force_offline = false;
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--config", c.config_path, "engine config file (key = value lines)")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "override the engine seed")
      ->each([&c](const std::string&) { c.seed_set = true; });
  sub->add_flag("--offline", c.force_offline,
                "force offline mode (deterministic template providers only)");
}

scdt::EngineConfig make_config(const CommonOpts& common) {
  scdt::EngineConfig cfg;
  if (!common.config_path.empty()) cfg = scdt::load_engine_config(common.config_path);
  if (common.seed_set) cfg.seed = common.seed;
  if (common.force_offline) cfg.provider.offline = true;
  return cfg;
}

std::int64_t parse_i64(const std::string& text, const char* what) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw scdt::UsageError(std::string("--attack: bad ") + what + " '" + text + "'");
  }
}

double parse_f64(const std::string& text, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw scdt::UsageError(std::string("--attack: bad ") + what + " '" + text + "'");
  }
}

// --attack kind:start:end[:magnitude], e.g. force_valve_open:10000:10600
scdt::AttackSpec parse_attack_arg(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  while (true) {
    std::size_t colon = text.find(':', begin);
    if (colon == std::string::npos) {
      parts.push_back(text.substr(begin));
      break;
    }
    parts.push_back(text.substr(begin, colon - begin));
    begin = colon + 1;
  }
  if (parts.size() < 3 || parts.size() > 4) {
    throw scdt::UsageError("--attack expects kind:start:end[:magnitude], got '" + text + "'");
  }
  scdt::AttackSpec spec;
  spec.kind = scdt::parse_attack_kind(parts[0]);
  spec.start = parse_i64(parts[1], "start");
  spec.end = parse_i64(parts[2], "end");
  if (parts.size() == 4) {
    spec.magnitude = parse_f64(parts[3], "magnitude");
  } else if (spec.kind == scdt::AttackKind::kBiasSensor) {
    throw scdt::UsageError("--attack: bias_sensor needs a magnitude (kind:start:end:magnitude)");
  }
  return spec;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw scdt::DataError("cannot open for writing: " + path);
  out << text;
  if (!out) throw scdt::DataError("write failed: " + path);
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw scdt::DataError("cannot create directory " + dir + ": " + ec.message());
}

// Everything detect/evaluate/report need: manifest, ingested trace, model.
struct RunInputs {
  scdt::Manifest manifest;
  scdt::Dataset data;
  scdt::ModelBundle model;
};

RunInputs load_run_inputs(const std::string& data_path, const std::string& manifest_path,
                          const std::string& model_path) {
  RunInputs in;
  in.manifest = scdt::load_manifest(manifest_path);
  in.data = scdt::ingest_csv(data_path, in.manifest);
  in.model = scdt::load_model(model_path, &in.manifest);
  return in;
}

// The LLM arbiter is only wired in when the provider is online; otherwise the
// detector falls back to its deterministic arbitration rule.
struct ArbiterHandle {
  std::unique_ptr<scdt::LlmClient> client;
  std::unique_ptr<scdt::LlmArbiterProvider> provider;
};

ArbiterHandle make_arbiter(const scdt::EngineConfig& cfg) {
  ArbiterHandle handle;
  if (!cfg.provider.offline) {
    handle.client = std::make_unique<scdt::LlmClient>(cfg.provider);
    handle.provider = std::make_unique<scdt::LlmArbiterProvider>(*handle.client);
  }
  return handle;
}

scdt::DiagnoseMode parse_diagnose_mode(const std::string& name) {
  if (name == "none") return scdt::DiagnoseMode::kNone;
  if (name == "anomalies") return scdt::DiagnoseMode::kAnomalies;
  if (name == "all") return scdt::DiagnoseMode::kAll;
  throw scdt::UsageError("--diagnose must be one of: none, anomalies, all");
}

std::vector<int> predicted_from_system(const std::vector<scdt::SystemVerdict>& system) {
  std::vector<int> predicted;
  predicted.reserve(system.size());
  for (const auto& s : system) {
    predicted.push_back(s.decision == scdt::Decision::kAnomaly ? 1 : 0);
  }
  return predicted;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  CommonOpts common;
  std::string out;
  std::string manifest_out;
  std::int64_t duration = 0;
  std::vector<std::string> attacks;
};

void run_simulate(const SimulateOpts& o) {
  scdt::EngineConfig cfg = make_config(o.common);
  scdt::PlantConfig plant;
  plant.seed = cfg.seed;
  std::vector<scdt::AttackSpec> attacks;
  for (const auto& text : o.attacks) attacks.push_back(parse_attack_arg(text));
  scdt::Trace trace = scdt::run_simulation(plant, o.duration, attacks);
  scdt::write_trace_csv(o.out, trace);
  if (!o.manifest_out.empty()) {
    write_text_file(o.manifest_out, scdt::simulator_manifest_text(cfg.window, cfg.stride));
  }
  std::printf("wrote %zu samples (%zu attack intervals) to %s\n", trace.size(), attacks.size(),
              o.out.c_str());
}

// -------------------------------------------------------------- learn-rules

struct LearnOpts {
  CommonOpts common;
  std::string data;
  std::string manifest;
  std::string model_out;
};

void run_learn(const LearnOpts& o) {
  scdt::EngineConfig cfg = make_config(o.common);
  scdt::Manifest manifest = scdt::load_manifest(o.manifest);
  scdt::Dataset data = scdt::ingest_csv(o.data, manifest);
  scdt::LearnResult learned = scdt::learn_rulebank(data, manifest, cfg);
  scdt::SaIndex sa = scdt::build_sa_index(learned.bank, std::move(learned.binnings), manifest, cfg);
  scdt::ModelBundle bundle{std::move(learned.bank), std::move(sa), {}};
  scdt::save_model(o.model_out, bundle);
  std::size_t modes = 0;
  for (const auto& key : bundle.bank.keys) modes += key.modes.size();
  std::printf("learned %zu context keys / %zu modes from %zu rows; model -> %s\n",
              bundle.bank.keys.size(), modes, data.rows, o.model_out.c_str());
}

// ----------------------------------------------------------- build-sa-index

struct IndexOpts {
  CommonOpts common;
  std::string model;
  std::string manifest;
  std::string model_out;
};

void run_index(const IndexOpts& o) {
  scdt::EngineConfig cfg = make_config(o.common);
  scdt::Manifest manifest = scdt::load_manifest(o.manifest);
  scdt::ModelBundle bundle = scdt::load_model(o.model, &manifest);
  bundle.sa = scdt::build_sa_index(bundle.bank, bundle.sa.binnings, manifest, cfg);
  const std::string& out = o.model_out.empty() ? o.model : o.model_out;
  scdt::save_model(out, bundle);
  std::printf("indexed %zu (sensor, actuator, state) entries, %zu relatedness rows; model -> %s\n",
              bundle.sa.entries.size(), bundle.sa.relatedness.size(), out.c_str());
}

// ------------------------------------------------------------ gen-semantics

struct SemanticsOpts {
  CommonOpts common;
  std::string model;
  std::string manifest;
  std::string model_out;
};

void run_semantics(const SemanticsOpts& o) {
  scdt::EngineConfig cfg = make_config(o.common);
  scdt::Manifest manifest = scdt::load_manifest(o.manifest);
  scdt::ModelBundle bundle = scdt::load_model(o.model, &manifest);
  std::unique_ptr<scdt::LlmClient> client;
  std::unique_ptr<scdt::TextProvider> provider;
  if (!cfg.provider.offline) {
    client = std::make_unique<scdt::LlmClient>(cfg.provider);
    provider = std::make_unique<scdt::LlmSemanticProvider>(*client);
  }
  bundle.semantics = scdt::generate_semantic_bank(bundle.bank, bundle.sa, cfg, provider.get());
  scdt::annotate_bank_semantics(bundle.bank, bundle.sa, manifest, cfg);
  const std::string& out = o.model_out.empty() ? o.model : o.model_out;
  scdt::save_model(out, bundle);
  std::size_t fallbacks = 0;
  for (const auto& [target, rule] : bundle.semantics) {
    if (rule.provider == "template") ++fallbacks;
  }
  if (provider) {
    std::printf("generated %zu semantic rules (llm provider, %zu template fallbacks); model -> %s\n",
                bundle.semantics.size(), fallbacks, out.c_str());
  } else {
    std::printf("generated %zu semantic rules (template provider); model -> %s\n",
                bundle.semantics.size(), out.c_str());
  }
}

// ------------------------------------------------------------------- detect

struct DetectOpts {
  CommonOpts common;
  std::string data;
  std::string manifest;
  std::string model;
  std::string out_dir;
  std::string diagnose;
};

void run_detect(const DetectOpts& o) {
  scdt::EngineConfig cfg = make_config(o.common);
  if (!o.diagnose.empty()) cfg.diagnose = parse_diagnose_mode(o.diagnose);
  RunInputs in = load_run_inputs(o.data, o.manifest, o.model);
  ArbiterHandle arbiter = make_arbiter(cfg);
  scdt::Detector detector(in.model.bank, in.model.sa, in.manifest, in.model.semantics, cfg,
                          arbiter.provider.get());
  scdt::DetectionResult result = detector.run(in.data);
  ensure_directory(o.out_dir);
  const auto dir = std::filesystem::path(o.out_dir);
  scdt::write_verdicts_jsonl((dir / "verdicts.jsonl").string(), result.records);
  scdt::write_system_jsonl((dir / "system.jsonl").string(), result.system);
  std::size_t anomalies = 0;
  std::size_t arbitrated = 0;
  for (const auto& r : result.records) {
    if (r.verdict.decision == scdt::Decision::kAnomaly) ++anomalies;
    if (r.verdict.arbitrated) ++arbitrated;
  }
  std::size_t system_anomalies = 0;
  for (const auto& s : result.system) {
    if (s.decision == scdt::Decision::kAnomaly) ++system_anomalies;
  }
  std::printf("screened %zu sensor windows: %zu anomalous, %zu arbitrated; "
              "%zu/%zu system windows anomalous\n",
              result.records.size(), anomalies, arbitrated, system_anomalies,
              result.system.size());
  std::printf("verdicts -> %s\n", (dir / "verdicts.jsonl").string().c_str());
}

// ----------------------------------------------------------------- evaluate

struct EvaluateOpts {
  CommonOpts common;
  std::string data;
  std::string manifest;
  std::string model;
  std::string metrics_out;
};

void run_evaluate(const EvaluateOpts& o) {
  scdt::EngineConfig cfg = make_config(o.common);
  RunInputs in = load_run_inputs(o.data, o.manifest, o.model);
  if (in.data.labels.empty()) {
    throw scdt::UsageError("evaluate needs a label column (manifest: column.<name> = label)");
  }
  ArbiterHandle arbiter = make_arbiter(cfg);
  scdt::Detector detector(in.model.bank, in.model.sa, in.manifest, in.model.semantics, cfg,
                          arbiter.provider.get());
  scdt::DetectionResult result = detector.run(in.data);
  std::vector<int> truth = scdt::label_windows(in.data, in.manifest.window, in.manifest.stride);
  scdt::RunMetrics metrics = scdt::compute_metrics(predicted_from_system(result.system), truth);
  if (!o.metrics_out.empty()) scdt::write_metrics_json(o.metrics_out, metrics);
  std::printf("%s\n", scdt::metrics_to_json(metrics).c_str());
}

// ------------------------------------------------------------------- report

struct ReportOpts {
  CommonOpts common;
  std::string data;
  std::string manifest;
  std::string model;
  std::string out_dir;
  std::string diagnose;
};

void run_report(const ReportOpts& o) {
  scdt::EngineConfig cfg = make_config(o.common);
  if (!o.diagnose.empty()) cfg.diagnose = parse_diagnose_mode(o.diagnose);
  RunInputs in = load_run_inputs(o.data, o.manifest, o.model);
  ArbiterHandle arbiter = make_arbiter(cfg);
  scdt::Detector detector(in.model.bank, in.model.sa, in.manifest, in.model.semantics, cfg,
                          arbiter.provider.get());
  scdt::DetectionResult result = detector.run(in.data);
  std::vector<int> truth;
  scdt::RunMetrics metrics;  // zero counts when the trace carries no labels
  if (!in.data.labels.empty()) {
    truth = scdt::label_windows(in.data, in.manifest.window, in.manifest.stride);
    metrics = scdt::compute_metrics(predicted_from_system(result.system), truth);
  }
  scdt::emit_report(o.out_dir, result, metrics, truth);
  std::printf("report -> %s (%zu verdicts, %zu sensors)\n", o.out_dir.c_str(),
              result.records.size(), in.manifest.sensors.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"context-conditioned anomaly detection and diagnosis for industrial telemetry"};
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* sim_cmd = app.add_subcommand("simulate", "emit a synthetic plant trace as CSV");
  add_common(sim_cmd, sim.common);
  sim_cmd->add_option("--out", sim.out, "output CSV path")->required();
  sim_cmd->add_option("--duration", sim.duration, "trace length in samples")->required();
  sim_cmd->add_option("--attack", sim.attacks,
                      "attack interval, kind:start:end[:magnitude]; kinds: force_valve_open, "
                      "freeze_sensor, bias_sensor (repeatable)");
  sim_cmd->add_option("--manifest-out", sim.manifest_out, "also write the matching manifest");
  sim_cmd->callback([&sim] { run_simulate(sim); });

  LearnOpts learn;
  auto* learn_cmd = app.add_subcommand("learn-rules", "train a rule bank and save the model");
  add_common(learn_cmd, learn.common);
  learn_cmd->add_option("--data", learn.data, "training CSV")->required()->check(CLI::ExistingFile);
  learn_cmd->add_option("--manifest", learn.manifest, "column/scope manifest")
      ->required()
      ->check(CLI::ExistingFile);
  learn_cmd->add_option("--model-out", learn.model_out, "output model path")->required();
  learn_cmd->callback([&learn] { run_learn(learn); });

  IndexOpts index;
  auto* index_cmd =
      app.add_subcommand("build-sa-index", "rebuild a model's (sensor, actuator, state) index");
  add_common(index_cmd, index.common);
  index_cmd->add_option("--model", index.model, "model to reindex")
      ->required()
      ->check(CLI::ExistingFile);
  index_cmd->add_option("--manifest", index.manifest, "column/scope manifest")
      ->required()
      ->check(CLI::ExistingFile);
  index_cmd->add_option("--model-out", index.model_out, "output path (default: overwrite input)");
  index_cmd->callback([&index] { run_index(index); });

  SemanticsOpts sem;
  auto* sem_cmd = app.add_subcommand("gen-semantics", "attach semantic rule texts to a model");
  add_common(sem_cmd, sem.common);
  sem_cmd->add_option("--model", sem.model, "model to annotate")
      ->required()
      ->check(CLI::ExistingFile);
  sem_cmd->add_option("--manifest", sem.manifest, "column/scope manifest")
      ->required()
      ->check(CLI::ExistingFile);
  sem_cmd->add_option("--model-out", sem.model_out, "output path (default: overwrite input)");
  sem_cmd->callback([&sem] { run_semantics(sem); });

  DetectOpts detect;
  auto* detect_cmd = app.add_subcommand("detect", "screen a trace and write verdict streams");
  add_common(detect_cmd, detect.common);
  detect_cmd->add_option("--data", detect.data, "trace CSV")->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--manifest", detect.manifest, "column/scope manifest")
      ->required()
      ->check(CLI::ExistingFile);
  detect_cmd->add_option("--model", detect.model, "trained model")
      ->required()
      ->check(CLI::ExistingFile);
  detect_cmd->add_option("--out", detect.out_dir, "output directory")->required();
  detect_cmd->add_option("--diagnose", detect.diagnose, "diagnosis scope: none, anomalies, all");
  detect_cmd->callback([&detect] { run_detect(detect); });

  EvaluateOpts evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "score a labeled trace, print metrics JSON");
  add_common(eval_cmd, evaluate.common);
  eval_cmd->add_option("--data", evaluate.data, "labeled trace CSV")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--manifest", evaluate.manifest, "column/scope manifest")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--model", evaluate.model, "trained model")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--metrics-out", evaluate.metrics_out, "also write metrics JSON here");
  eval_cmd->callback([&evaluate] { run_evaluate(evaluate); });

  ReportOpts report;
  auto* report_cmd =
      app.add_subcommand("report", "full run: metrics, verdict streams, timeline plots");
  add_common(report_cmd, report.common);
  report_cmd->add_option("--data", report.data, "trace CSV")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--manifest", report.manifest, "column/scope manifest")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--model", report.model, "trained model")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report.out_dir, "output directory")->required();
  report_cmd->add_option("--diagnose", report.diagnose, "diagnosis scope: none, anomalies, all");
  report_cmd->callback([&report] { run_report(report); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? scdt::kExitOk : scdt::kExitUsage;
  } catch (const scdt::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return scdt::kExitUsage;
  } catch (const scdt::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return scdt::kExitData;
  } catch (const scdt::ProviderError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return scdt::kExitProvider;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return scdt::kExitData;
  }
  return scdt::kExitOk;
}
