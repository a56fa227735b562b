#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "protolife/lock_and_key.hpp"

namespace protolife {

inline constexpr const char* kStatsFormatVersion = "protolife-stats v1";

// One stats sample. Multicellular fields are present only when at least one
// bound component exists (components have size >= 2 by construction).
struct StatsRow {
    std::uint64_t tick = 0;
    std::uint32_t max_generation = 0;
    std::int64_t protozoa = 0;
    std::int64_t plants = 0;
    std::int64_t meats = 0;
    // completed attachments per live protozoan, indexed by AttachmentKind
    std::array<double, kAttachmentKinds> node_frequency{};
    std::optional<std::int64_t> component_min;
    std::optional<double> component_mean;
    std::optional<std::int64_t> component_max;
    bool no_protozoa = false;  // row flagged: frequencies forced to 0
};

namespace stats_detail {

inline std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

} // namespace stats_detail

inline std::string stats_csv_header() {
    std::string h = "tick,max_generation,protozoa,plants,meats";
    for (int k = 0; k < kAttachmentKinds; ++k) {
        h += ",freq_";
        h += attachment_name(static_cast<AttachmentKind>(k));
    }
    h += ",component_min,component_mean,component_max,no_protozoa\n";
    return h;
}

inline std::string stats_csv_row(const StatsRow& r) {
    std::string s = std::to_string(r.tick);
    s += ',' + std::to_string(r.max_generation);
    s += ',' + std::to_string(r.protozoa);
    s += ',' + std::to_string(r.plants);
    s += ',' + std::to_string(r.meats);
    for (double f : r.node_frequency) s += ',' + stats_detail::fmt(f);
    s += ',';
    if (r.component_min) s += std::to_string(*r.component_min);
    s += ',';
    if (r.component_mean) s += stats_detail::fmt(*r.component_mean);
    s += ',';
    if (r.component_max) s += std::to_string(*r.component_max);
    s += ',';
    s += r.no_protozoa ? '1' : '0';
    s += '\n';
    return s;
}

} // namespace protolife
