// Seeded synthetic inputs shared by the unit and acceptance suites.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "scdt/window.hpp"

namespace synth {

// A mix of window shapes — flat noise, ramps, sinusoids, random walks — so
// oracle comparisons exercise every feature, not just the noise-floor case.
inline scdt::SensorWindow random_window(std::mt19937_64& rng, std::size_t w, int flavor) {
  std::uniform_real_distribution<double> level(-100.0, 100.0);
  std::uniform_real_distribution<double> sigma_u(0.01, 10.0);
  std::uniform_real_distribution<double> slope_u(-5.0, 5.0);
  std::uniform_real_distribution<double> amp_u(0.1, 50.0);
  std::uniform_real_distribution<double> period_u(5.0, 40.0);

  const double base = level(rng);
  const double sigma = sigma_u(rng);
  std::normal_distribution<double> noise(0.0, sigma);

  scdt::SensorWindow window;
  window.sensor_id = "synthetic";
  window.values.resize(w);
  switch (flavor % 4) {
    case 0: {
      for (auto& v : window.values) v = base + noise(rng);
      break;
    }
    case 1: {
      const double slope = slope_u(rng);
      for (std::size_t t = 0; t < w; ++t) {
        window.values[t] = base + slope * static_cast<double>(t) + noise(rng);
      }
      break;
    }
    case 2: {
      const double amp = amp_u(rng);
      const double period = period_u(rng);
      for (std::size_t t = 0; t < w; ++t) {
        window.values[t] =
            base + amp * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period) +
            noise(rng);
      }
      break;
    }
    default: {
      double x = base;
      for (std::size_t t = 0; t < w; ++t) {
        x += noise(rng);
        window.values[t] = x;
      }
      break;
    }
  }
  return window;
}

}  // namespace synth
