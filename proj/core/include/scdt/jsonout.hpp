#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

namespace scdt {

// Minimal JSON emission helpers shared by the serializers and report
// writers. Parsing is delegated to a real JSON library; emission is done by
// hand so field order and float formatting stay byte-stable across runs.

inline std::string json_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", static_cast<unsigned>(c));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

inline std::string json_quote(std::string_view s) { return "\"" + json_escape(s) + "\""; }

// 17 significant digits: enough for a lossless double round-trip. NaN/inf
// have no JSON representation; they are emitted as null and rejected on load.
inline std::string fmt_g17(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_fixed2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace scdt
