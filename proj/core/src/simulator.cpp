#include "scdt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "scdt/errors.hpp"
#include "scdt/jsonout.hpp"

namespace scdt {
namespace {

// Box-Muller over explicit 53-bit uniforms: the draw sequence depends only
// on the seed, not on the standard library's distribution internals.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) / 9007199254740992.0;  // (0,1]
    const double u2 = static_cast<double>(rng_() >> 11) / 9007199254740992.0;          // [0,1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

bool in_interval(const AttackSpec& a, std::int64_t t) { return t >= a.start && t < a.end; }

// MV is the target of valve forcing; LIT of the sensor attacks.
int attack_target(AttackKind kind) { return kind == AttackKind::kForceValveOpen ? 0 : 1; }

void validate(const PlantConfig& cfg, std::int64_t duration,
              const std::vector<AttackSpec>& attacks) {
  if (cfg.l_low >= cfg.l_high) throw UsageError("plant: l_low must be below l_high");
  if (cfg.q_in <= 0.0 || cfg.q_out <= 0.0) throw UsageError("plant: flow rates must be positive");
  if (cfg.dt <= 0.0) throw UsageError("plant: dt must be positive");
  if (cfg.tank_capacity < cfg.l_high)
    throw UsageError("plant: tank_capacity must be at least l_high");
  if (cfg.p1_off_seconds < 0 || cfg.p1_on_seconds <= 0)
    throw UsageError("plant: pump schedule phases must be positive");
  if (duration <= 0) throw UsageError("plant: duration must be positive");
  for (const AttackSpec& a : attacks) {
    if (a.start < 0 || a.start >= a.end || a.end > duration) {
      throw UsageError("attack " + std::string(to_string(a.kind)) + ": interval [" +
                       std::to_string(a.start) + ", " + std::to_string(a.end) +
                       ") must satisfy 0 <= start < end <= duration");
    }
  }
  for (std::size_t i = 0; i < attacks.size(); ++i) {
    for (std::size_t j = i + 1; j < attacks.size(); ++j) {
      if (attack_target(attacks[i].kind) != attack_target(attacks[j].kind)) continue;
      if (attacks[i].start < attacks[j].end && attacks[j].start < attacks[i].end) {
        throw UsageError("attacks " + std::string(to_string(attacks[i].kind)) + " and " +
                         std::string(to_string(attacks[j].kind)) +
                         " overlap on the same target");
      }
    }
  }
}

}  // namespace

const char* to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kForceValveOpen: return "force_valve_open";
    case AttackKind::kFreezeSensor: return "freeze_sensor";
    case AttackKind::kBiasSensor: return "bias_sensor";
  }
  return "force_valve_open";
}

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "force_valve_open") return AttackKind::kForceValveOpen;
  if (name == "freeze_sensor") return AttackKind::kFreezeSensor;
  if (name == "bias_sensor") return AttackKind::kBiasSensor;
  throw UsageError("unknown attack kind '" + name +
                   "' (expected force_valve_open, freeze_sensor, or bias_sensor)");
}

Trace run_simulation(const PlantConfig& cfg, std::int64_t duration,
                     const std::vector<AttackSpec>& attacks) {
  validate(cfg, duration, attacks);

  Trace trace;
  trace.timestamp.reserve(static_cast<std::size_t>(duration));
  trace.lit.reserve(static_cast<std::size_t>(duration));
  trace.fit.reserve(static_cast<std::size_t>(duration));
  trace.mv.reserve(static_cast<std::size_t>(duration));
  trace.p1.reserve(static_cast<std::size_t>(duration));
  trace.p2.reserve(static_cast<std::size_t>(duration));
  trace.label.reserve(static_cast<std::size_t>(duration));

  GaussianSampler noise(cfg.seed);
  const int period = cfg.p1_off_seconds + cfg.p1_on_seconds;

  double level = cfg.level0;          // true physical level
  int mv = 0;                         // controller state persists between steps
  double last_reading = cfg.level0;   // most recent emitted LIT value
  bool frozen_active = false;
  double frozen_value = 0.0;

  for (std::int64_t t = 0; t < duration; ++t) {
    // Controller acts on the true level; the demand schedule drives P1.
    if (level < cfg.l_low) mv = 1;
    else if (level > cfg.l_high) mv = 0;
    const int p1 = static_cast<int>(t % period) >= cfg.p1_off_seconds ? 1 : 0;
    const int p2 = 0;

    int mv_effective = mv;
    bool freeze_now = false;
    double bias = 0.0;
    int label = 0;
    for (const AttackSpec& a : attacks) {
      if (!in_interval(a, t)) continue;
      label = 1;
      switch (a.kind) {
        case AttackKind::kForceValveOpen: mv_effective = 1; break;
        case AttackKind::kFreezeSensor: freeze_now = true; break;
        case AttackKind::kBiasSensor: bias = a.magnitude; break;
      }
    }

    double reading;
    if (freeze_now) {
      if (!frozen_active) {
        frozen_active = true;
        frozen_value = last_reading;  // pre-attack reading (level0 at t=0)
      }
      reading = frozen_value;
    } else {
      frozen_active = false;
      reading = level + noise.next() * cfg.noise_sigma + bias;
    }
    const double flow_reading =
        cfg.q_in * mv_effective + noise.next() * cfg.fit_noise_sigma;

    trace.timestamp.push_back(static_cast<double>(t) * cfg.dt);
    trace.lit.push_back(reading);
    trace.fit.push_back(flow_reading);
    trace.mv.push_back(mv_effective);
    trace.p1.push_back(p1);
    trace.p2.push_back(p2);
    trace.label.push_back(label);
    last_reading = reading;

    level += (cfg.q_in * mv_effective - cfg.q_out * p1) * cfg.dt;
    level = std::clamp(level, 0.0, cfg.tank_capacity);
  }
  return trace;
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace file: " + path);
  out << "timestamp,LIT,FIT,MV,P1,P2,label\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << fmt_g17(trace.timestamp[i]) << ',' << fmt_g17(trace.lit[i]) << ','
        << fmt_g17(trace.fit[i]) << ',' << trace.mv[i] << ',' << trace.p1[i] << ','
        << trace.p2[i] << ',' << trace.label[i] << '\n';
  }
  if (!out) throw DataError("failed while writing trace file: " + path);
}

std::string simulator_manifest_text(int window, int stride) {
  std::string text;
  text += "# Column roles and sensor scopes for simulator traces.\n";
  text += "window=" + std::to_string(window) + "\n";
  text += "stride=" + std::to_string(stride) + "\n";
  text += "column.timestamp=timestamp\n";
  text += "column.LIT=sensor\n";
  text += "column.FIT=sensor\n";
  text += "column.MV=actuator\n";
  text += "column.P1=actuator\n";
  text += "column.P2=actuator\n";
  text += "column.label=label\n";
  text += "scope.LIT=MV,P1,P2\n";
  text += "scope.FIT=MV\n";
  return text;
}

}  // namespace scdt
