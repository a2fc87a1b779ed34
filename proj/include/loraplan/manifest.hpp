#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace loraplan {

/// Provenance record written next to every command's outputs.
struct RunManifest {
    std::string config_digest;
    std::string tool_version;
    std::string command;  // full command line
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> outputs;
    double wall_time_s = 0.0;

    bool operator==(const RunManifest&) const = default;
};

std::string tool_version();

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace loraplan
