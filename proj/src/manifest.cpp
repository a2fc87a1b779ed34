#include "loraplan/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace loraplan {

using nlohmann::json;

std::string tool_version() { return LORAPLAN_VERSION; }

std::string manifest_to_json(const RunManifest& m) {
    const json j = {{"config_digest", m.config_digest}, {"tool_version", m.tool_version},
                    {"command", m.command},             {"seeds", m.seeds},
                    {"outputs", m.outputs},             {"wall_time_s", m.wall_time_s}};
    return j.dump(2);
}

RunManifest manifest_from_json(const std::string& text) {
    const json j = json::parse(text);
    RunManifest m;
    m.config_digest = j.at("config_digest").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.wall_time_s = j.at("wall_time_s").get<double>();
    return m;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << manifest_to_json(manifest) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return manifest_from_json(buf.str());
}

}  // namespace loraplan
