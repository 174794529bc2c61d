#pragma once

#include <map>
#include <string>
#include <vector>

#include "scdt/manifest.hpp"
#include "scdt/window.hpp"

namespace scdt {

// Columnar view of an ingested trace. Only the columns named by the manifest
// are retained.
struct Dataset {
  std::size_t rows = 0;
  std::vector<double> timestamps;                    // empty if no timestamp column
  std::map<std::string, std::vector<double>> series; // sensors and actuators
  std::vector<int> labels;                           // empty if no label column

  const std::vector<double>& column(const std::string& name) const;
};

// Strict CSV ingestion: header must contain every manifest column; ragged
// rows and non-finite sensor/actuator values are data errors naming the
// offending line numbers.
Dataset ingest_csv(const std::string& path, const Manifest& manifest);

// Materialize fixed-length windows for one sensor at the manifest stride;
// each carries the scope actuators' raw values at the window start.
std::vector<SensorWindow> make_windows(const Dataset& data, const Manifest& manifest,
                                       const std::string& sensor);

// Per-window truth: OR of the sample labels inside each window. Empty when
// the dataset has no label column.
std::vector<int> label_windows(const Dataset& data, int window, int stride);

// Number of whole windows available at the given stride.
std::size_t window_count(std::size_t rows, int window, int stride);

}  // namespace scdt
