#pragma once

#include <string>

#include "scdt/manifest.hpp"
#include "scdt/rulebank.hpp"
#include "scdt/sa_index.hpp"
#include "scdt/semantics.hpp"

namespace scdt {

inline constexpr const char* kModelVersion = "scdt-rulebank/1";

// Everything the detector needs at runtime, persisted as one document.
struct ModelBundle {
  RuleBank bank;
  SaIndex sa;
  SemanticBank semantics;
};

// Versioned JSON with a fixed field order and 17-significant-digit floats:
// serializing the same bundle twice yields identical bytes, and a
// save/load/save cycle is lossless.
std::string model_to_json(const ModelBundle& bundle);

// Strict parse: version mismatch or structural problems raise DataError.
ModelBundle model_from_json(const std::string& text);

void save_model(const std::string& path, const ModelBundle& bundle);

// When `manifest` is given, its digest must match the one recorded at
// training time (DataError otherwise).
ModelBundle load_model(const std::string& path, const Manifest* manifest = nullptr);

}  // namespace scdt
