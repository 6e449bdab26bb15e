#pragma once

#include <string>

#include "json.hpp"

namespace evi {

// nlohmann::json keeps object keys in a sorted map, so dump() output is
// already canonical (stable key order, shortest round-trip numbers). The
// alias exists so the rest of the codebase has a single spelling.
using Json = nlohmann::json;

// Canonical compact rendering used everywhere two payloads are compared
// byte-for-byte (dedup keys, golden files, tool-message bodies).
inline std::string canon_dump(const Json& j) { return j.dump(); }

// Parse without exceptions; returns discarded value on bad input.
inline Json parse_lenient(const std::string& text) {
    return Json::parse(text, nullptr, /*allow_exceptions=*/false);
}

}  // namespace evi
