#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scdt {

// Two-tank process analogue: an inlet valve MV fills the tank, duty pump P1
// drains it on a fixed demand schedule, P2 is a normally-idle standby pump.
// The level controller is a simple hysteresis loop on the true level.
struct PlantConfig {
  double q_in = 6.0;              // fill rate while MV is open (level units/s)
  double q_out = 3.0;             // drain rate while P1 runs
  double l_low = 200.0;           // hysteresis: open MV below this level
  double l_high = 800.0;          // hysteresis: close MV above this level
  double tank_capacity = 1000.0;  // physical ceiling; forced filling saturates here
  double level0 = 500.0;
  double noise_sigma = 1.0;       // level sensor noise (std dev)
  double fit_noise_sigma = 0.05;  // flow sensor noise (std dev)
  double dt = 1.0;                // seconds per sample
  int p1_off_seconds = 500;       // demand schedule: idle phase first,
  int p1_on_seconds = 500;        // then a draining phase, repeating
  std::uint64_t seed = 1;
};

enum class AttackKind {
  kForceValveOpen,  // MV held open regardless of the controller
  kFreezeSensor,    // LIT reading held at its pre-attack value
  kBiasSensor,      // LIT reading shifted by `magnitude`
};

const char* to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& name);

struct AttackSpec {
  AttackKind kind = AttackKind::kForceValveOpen;
  std::int64_t start = 0;   // first attacked sample (inclusive)
  std::int64_t end = 0;     // one past the last attacked sample
  double magnitude = 0.0;   // bias_sensor only
};

// Column-oriented emitted trace; all columns share one length.
struct Trace {
  std::vector<double> timestamp;
  std::vector<double> lit;   // level sensor reading
  std::vector<double> fit;   // flow sensor reading
  std::vector<int> mv;
  std::vector<int> p1;
  std::vector<int> p2;
  std::vector<int> label;    // 1 inside any attack interval

  std::size_t size() const { return timestamp.size(); }
};

// Deterministic per seed. Attacks must lie inside [0, duration] and may not
// overlap another attack on the same target (MV for force_valve_open, LIT
// for the sensor attacks); violations raise UsageError.
Trace run_simulation(const PlantConfig& cfg, std::int64_t duration,
                     const std::vector<AttackSpec>& attacks = {});

// CSV with header timestamp,LIT,FIT,MV,P1,P2,label; floats at 17 significant
// digits so ingestion round-trips exactly.
void write_trace_csv(const std::string& path, const Trace& trace);

// The column/scope manifest describing the emitted CSV.
std::string simulator_manifest_text(int window, int stride);

}  // namespace scdt
