#pragma once

// Scenario files (JSON). Missing keys take their documented defaults; unknown
// keys are rejected so that typos do not silently fall back to a default.

#include <filesystem>
#include <string>
#include <string_view>

#include "loraplan/scenario.hpp"

namespace loraplan {

/// Throws ParseError (with line and column) on malformed JSON and
/// ValidationError (with the dotted key path) on bad values.
Scenario parse_scenario(std::string_view text, const std::string& source = "<scenario>");

Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON: every key present, keys sorted, no insignificant whitespace.
std::string scenario_to_json(const Scenario& scenario, int indent = -1);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// SHA-256 of the canonical JSON, as lowercase hex.
std::string scenario_digest(const Scenario& scenario);

std::string sha256_hex(std::string_view bytes);

}  // namespace loraplan
