#include "loraplan/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "loraplan/errors.hpp"

namespace loraplan {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key)) throw ValidationError(join(path, key), "unknown key");
}

const json* member(const json& obj, const std::string& key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& require_object(const json& v, const std::string& path) {
    if (!v.is_object()) throw ValidationError(path.empty() ? "<root>" : path, "expected an object");
    return v;
}

double read_number(const json& obj, const std::string& path, const std::string& key, double fallback) {
    const json* v = member(obj, key);
    if (!v) return fallback;
    if (!v->is_number()) throw ValidationError(join(path, key), "expected a number");
    return v->get<double>();
}

std::int64_t read_integer(const json& v, const std::string& field) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    throw ValidationError(field, "expected an integer");
}

std::int64_t read_integer(const json& obj, const std::string& path, const std::string& key,
                          std::int64_t fallback) {
    const json* v = member(obj, key);
    return v ? read_integer(*v, join(path, key)) : fallback;
}

int read_int(const json& obj, const std::string& path, const std::string& key, int fallback) {
    const std::int64_t v = read_integer(obj, path, key, fallback);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ValidationError(join(path, key), "integer out of range");
    return static_cast<int>(v);
}

bool read_bool(const json& obj, const std::string& path, const std::string& key, bool fallback) {
    const json* v = member(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ValidationError(join(path, key), "expected true or false");
    return v->get<bool>();
}

LdroMode parse_ldro(const json& obj, const std::string& path) {
    const json* v = member(obj, "ldro");
    if (!v) return LdroMode::automatic;
    if (v->is_string()) {
        const auto s = v->get<std::string>();
        if (s == "auto") return LdroMode::automatic;
        if (s == "on") return LdroMode::always;
        if (s == "off") return LdroMode::never;
    }
    throw ValidationError(join(path, "ldro"), "expected \"auto\", \"on\" or \"off\"");
}

const char* ldro_name(LdroMode m) {
    switch (m) {
        case LdroMode::automatic: return "auto";
        case LdroMode::always: return "on";
        case LdroMode::never: return "off";
    }
    return "auto";
}

double parse_q(const json& obj, const std::string& path) {
    const json* v = member(obj, "q_db");
    if (!v) return PathLossParams<double>{}.q;
    if (v->is_number()) return v->get<double>();
    if (v->is_string() && (v->get<std::string>() == "inf" || v->get<std::string>() == "+inf"))
        return std::numeric_limits<double>::infinity();
    throw ValidationError(join(path, "q_db"), "expected a number or \"inf\"");
}

GroupSpec parse_group(const json& v, std::size_t index, int mcs_count) {
    const std::string path = "groups[" + std::to_string(index) + "]";
    require_object(v, path);
    reject_unknown(v, path, {"name", "n_motes", "rate_per_mote", "plr_target", "mcs", "mcs_counts"});
    GroupSpec g;
    if (const json* name = member(v, "name")) {
        if (!name->is_string()) throw ValidationError(join(path, "name"), "expected a string");
        g.name = name->get<std::string>();
    } else {
        g.name = "group" + std::to_string(index);
    }
    for (const char* key : {"n_motes", "rate_per_mote", "plr_target"})
        if (!member(v, key)) throw ValidationError(join(path, key), "required");
    g.n_motes = read_integer(v, path, "n_motes", 0);
    g.rate_per_mote = read_number(v, path, "rate_per_mote", 0.0);
    g.plr_target = read_number(v, path, "plr_target", 0.0);

    const json* mcs = member(v, "mcs");
    const json* counts = member(v, "mcs_counts");
    if (mcs && counts) throw ValidationError(join(path, "mcs"), "give either mcs or mcs_counts, not both");
    if (mcs) {
        const std::int64_t m = read_integer(*mcs, join(path, "mcs"));
        if (m < 0 || m >= mcs_count)
            throw ValidationError(join(path, "mcs"), "outside 0.." + std::to_string(mcs_count - 1));
        std::vector<std::int64_t> c(static_cast<std::size_t>(mcs_count), 0);
        c[static_cast<std::size_t>(m)] = g.n_motes;
        g.mcs_counts = std::move(c);
    }
    if (counts) {
        if (!counts->is_array()) throw ValidationError(join(path, "mcs_counts"), "expected an array");
        std::vector<std::int64_t> c;
        for (std::size_t i = 0; i < counts->size(); ++i)
            c.push_back(read_integer((*counts)[i], join(path, "mcs_counts[" + std::to_string(i) + "]")));
        g.mcs_counts = std::move(c);
    }
    return g;
}

Scenario from_json(const json& root) {
    require_object(root, "");
    reject_unknown(root, "", {"groups", "mcs_count", "main_channels", "retry_limit", "phy", "geometry",
                              "timing", "model"});
    Scenario s;
    s.mcs_count = read_int(root, "", "mcs_count", 6);
    s.main_channels = read_int(root, "", "main_channels", 1);
    s.retry_limit = read_int(root, "", "retry_limit", 7);
    if (s.mcs_count < 1 || s.mcs_count > kMaxMcsCount) throw ValidationError("mcs_count", "must be in [1, 6]");

    const json empty = json::object();
    {
        const json& phy = require_object(member(root, "phy") ? root["phy"] : empty, "phy");
        reject_unknown(phy, "phy", {"bandwidth_hz", "coding_rate", "preamble_symbols", "explicit_header",
                                    "uplink_crc", "downlink_crc", "ldro", "payload_bytes", "ack_payload_bytes"});
        PhyConfig p;
        p.bandwidth_hz = read_number(phy, "phy", "bandwidth_hz", p.bandwidth_hz);
        p.coding_rate = read_int(phy, "phy", "coding_rate", p.coding_rate);
        p.preamble_symbols = read_int(phy, "phy", "preamble_symbols", p.preamble_symbols);
        p.explicit_header = read_bool(phy, "phy", "explicit_header", p.explicit_header);
        p.uplink_crc = read_bool(phy, "phy", "uplink_crc", p.uplink_crc);
        p.downlink_crc = read_bool(phy, "phy", "downlink_crc", p.downlink_crc);
        p.ldro = parse_ldro(phy, "phy");
        p.payload_bytes = read_int(phy, "phy", "payload_bytes", p.payload_bytes);
        p.ack_payload_bytes = read_int(phy, "phy", "ack_payload_bytes", p.ack_payload_bytes);
        s.phy = p;
    }
    {
        const json& geo = require_object(member(root, "geometry") ? root["geometry"] : empty, "geometry");
        reject_unknown(geo, "geometry", {"radius_m", "c1_dbm", "c2_db", "q_db"});
        PathLossParams<double> g;
        g.radius = read_number(geo, "geometry", "radius_m", g.radius);
        g.c1 = read_number(geo, "geometry", "c1_dbm", g.c1);
        g.c2 = read_number(geo, "geometry", "c2_db", g.c2);
        g.q = parse_q(geo, "geometry");
        s.path_loss = g;
    }
    {
        const json& tm = require_object(member(root, "timing") ? root["timing"] : empty, "timing");
        reject_unknown(tm, "timing", {"t1_s", "t2_s", "delta_m", "retry_delay_min_s", "retry_delay_max_s"});
        RadioTiming t;
        t.t1 = read_number(tm, "timing", "t1_s", t.t1);
        t.t2 = read_number(tm, "timing", "t2_s", t.t2);
        t.delta_m = read_int(tm, "timing", "delta_m", t.delta_m);
        t.retry_delay_min = read_number(tm, "timing", "retry_delay_min_s", t.retry_delay_min);
        t.retry_delay_max = read_number(tm, "timing", "retry_delay_max_s", t.retry_delay_max);
        s.timing = t;
    }
    {
        const json& md = require_object(member(root, "model") ? root["model"] : empty, "model");
        reject_unknown(md, "model", {"grid_points", "ideal_ack", "frame_discard"});
        ModelOptions m;
        m.grid_points = read_int(md, "model", "grid_points", m.grid_points);
        m.ideal_ack = read_bool(md, "model", "ideal_ack", m.ideal_ack);
        m.frame_discard = read_bool(md, "model", "frame_discard", m.frame_discard);
        s.model = m;
    }

    const json* groups = member(root, "groups");
    if (!groups) throw ValidationError("groups", "required");
    if (!groups->is_array()) throw ValidationError("groups", "expected an array");
    for (std::size_t i = 0; i < groups->size(); ++i)
        s.groups.push_back(parse_group((*groups)[i], i, s.mcs_count));

    s.phy.validate();
    try {
        s.mcs_table = build_mcs_table(s.phy, s.mcs_count);
    } catch (const std::out_of_range& e) {
        throw ValidationError("phy", e.what());
    }
    s.validate();
    return s;
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

json to_json(const Scenario& s) {
    json groups = json::array();
    for (const auto& g : s.groups) {
        json j = {{"name", g.name},
                  {"n_motes", g.n_motes},
                  {"rate_per_mote", g.rate_per_mote},
                  {"plr_target", g.plr_target}};
        if (g.mcs_counts) j["mcs_counts"] = *g.mcs_counts;
        groups.push_back(std::move(j));
    }
    json q = std::isinf(s.path_loss.q) ? json("inf") : json(s.path_loss.q);
    return {
        {"groups", std::move(groups)},
        {"mcs_count", s.mcs_count},
        {"main_channels", s.main_channels},
        {"retry_limit", s.retry_limit},
        {"phy",
         {{"bandwidth_hz", s.phy.bandwidth_hz},
          {"coding_rate", s.phy.coding_rate},
          {"preamble_symbols", s.phy.preamble_symbols},
          {"explicit_header", s.phy.explicit_header},
          {"uplink_crc", s.phy.uplink_crc},
          {"downlink_crc", s.phy.downlink_crc},
          {"ldro", ldro_name(s.phy.ldro)},
          {"payload_bytes", s.phy.payload_bytes},
          {"ack_payload_bytes", s.phy.ack_payload_bytes}}},
        {"geometry",
         {{"radius_m", s.path_loss.radius},
          {"c1_dbm", s.path_loss.c1},
          {"c2_db", s.path_loss.c2},
          {"q_db", std::move(q)}}},
        {"timing",
         {{"t1_s", s.timing.t1},
          {"t2_s", s.timing.t2},
          {"delta_m", s.timing.delta_m},
          {"retry_delay_min_s", s.timing.retry_delay_min},
          {"retry_delay_max_s", s.timing.retry_delay_max}}},
        {"model",
         {{"grid_points", s.model.grid_points},
          {"ideal_ack", s.model.ideal_ack},
          {"frame_discard", s.model.frame_discard}}},
    };
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& source) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        std::string what = e.what();
        // drop the library's "[json.exception.parse_error.101] parse error at ..." prefix
        if (const auto pos = what.find(": "); pos != std::string::npos) what = what.substr(pos + 2);
        throw ParseError(source, line, col, what);
    }
    return from_json(root);
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open scenario file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

std::string scenario_to_json(const Scenario& scenario, int indent) {
    return to_json(scenario).dump(indent);
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << scenario_to_json(scenario, 2) << '\n';
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string scenario_digest(const Scenario& scenario) {
    return sha256_hex(scenario_to_json(scenario));
}

}  // namespace loraplan
