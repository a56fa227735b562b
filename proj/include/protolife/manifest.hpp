#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "protolife/engine.hpp"

namespace protolife {

// Everything needed to reproduce a run exactly: the full config echo, the
// seed, and the artifact paths (relative to the manifest's directory).
struct RunManifest {
    std::uint32_t manifest_version = 1;
    std::string config_text;
    std::uint64_t master_seed = 0;
    std::uint64_t start_tick = 0;
    std::uint64_t end_tick = 0;
    std::string stats_csv;
    std::string lineage_csv;  // empty when not recorded
    struct SnapshotRef {
        std::uint64_t tick = 0;
        std::string path;
    };
    std::vector<SnapshotRef> snapshots;
    std::string prng_algorithm = kRngAlgorithmId;
    std::uint32_t snapshot_format = kSnapshotFormatVersion;
    std::string stats_format = kStatsFormatVersion;

    std::string to_json() const {
        nlohmann::ordered_json j;
        j["manifest_version"] = manifest_version;
        j["master_seed"] = master_seed;
        j["start_tick"] = start_tick;
        j["end_tick"] = end_tick;
        j["stats_csv"] = stats_csv;
        j["lineage_csv"] = lineage_csv;
        j["prng_algorithm"] = prng_algorithm;
        j["snapshot_format"] = snapshot_format;
        j["stats_format"] = stats_format;
        j["snapshots"] = nlohmann::ordered_json::array();
        for (const auto& s : snapshots) j["snapshots"].push_back({{"tick", s.tick}, {"path", s.path}});
        j["config"] = config_text;
        return j.dump(2) + "\n";
    }

    static RunManifest from_json(const std::string& text) {
        nlohmann::json j = nlohmann::json::parse(text);
        RunManifest m;
        m.manifest_version = j.at("manifest_version").get<std::uint32_t>();
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.start_tick = j.at("start_tick").get<std::uint64_t>();
        m.end_tick = j.at("end_tick").get<std::uint64_t>();
        m.stats_csv = j.at("stats_csv").get<std::string>();
        m.lineage_csv = j.value("lineage_csv", std::string{});
        m.prng_algorithm = j.at("prng_algorithm").get<std::string>();
        m.snapshot_format = j.at("snapshot_format").get<std::uint32_t>();
        m.stats_format = j.at("stats_format").get<std::string>();
        for (const auto& s : j.at("snapshots"))
            m.snapshots.push_back({s.at("tick").get<std::uint64_t>(), s.at("path").get<std::string>()});
        m.config_text = j.at("config").get<std::string>();
        return m;
    }
};

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

inline std::string read_file_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for write: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_file_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for write: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace protolife
