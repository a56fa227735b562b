#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "protolife/engine.hpp"
#include "protolife/manifest.hpp"
#include "protolife/render.hpp"
#include "protolife/stats.hpp"

namespace protolife {

namespace cli_detail {

inline std::string snapshot_name(std::uint64_t tick) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "snap_%012llu.bin", static_cast<unsigned long long>(tick));
    return buf;
}

inline std::string lineage_csv_header() { return "tick,event,cell_id,parent_id,generation\n"; }

inline std::string lineage_csv_row(const LineageEvent& e) {
    std::string s = std::to_string(e.tick);
    s += e.is_birth ? ",birth," : ",death,";
    s += std::to_string(e.cell_id);
    s += ',' + std::to_string(e.parent_id);
    s += ',' + std::to_string(e.generation);
    s += '\n';
    return s;
}

// Stats CSV is prefixed with '#' comment lines carrying the format id and the
// full config echo so every stats file is self-describing.
inline std::string stats_preamble(const SimConfig& cfg) {
    std::string out = "# ";
    out += kStatsFormatVersion;
    out += "\n";
    std::istringstream cfg_stream(cfg.serialize());
    std::string line;
    while (std::getline(cfg_stream, line)) {
        out += "# cfg ";
        out += line;
        out += "\n";
    }
    return out;
}

struct RunOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::uint64_t steps = 10000;
    std::string out_dir;
    std::uint64_t snapshot_interval = 5000;
    std::optional<std::int64_t> stats_interval;
    bool lineage = false;
};

inline SimConfig load_run_config(const RunOptions& opt) {
    SimConfig cfg;
    if (!opt.config_path.empty()) cfg = SimConfig::parse(read_file_text(opt.config_path));
    // precedence: --seed > PROTOLIFE_SEED > config file
    if (const char* env = std::getenv("PROTOLIFE_SEED")) {
        std::uint64_t v{};
        auto [p, ec] = std::from_chars(env, env + std::string_view(env).size(), v);
        if (ec != std::errc{} || *p != '\0')
            throw ConfigError(std::string("PROTOLIFE_SEED is not an unsigned integer: ") + env);
        cfg.sim.master_seed = v;
    }
    if (opt.seed) cfg.sim.master_seed = *opt.seed;
    if (opt.stats_interval) cfg.sim.stats_interval = *opt.stats_interval;
    cfg.validate();
    return cfg;
}

inline int cmd_run(const RunOptions& opt) {
    namespace fs = std::filesystem;
    SimConfig cfg = load_run_config(opt);
    fs::create_directories(opt.out_dir);

    Engine engine(cfg);
    RunManifest manifest;
    manifest.config_text = cfg.serialize();
    manifest.master_seed = cfg.sim.master_seed;
    manifest.start_tick = 0;
    manifest.stats_csv = "stats.csv";

    std::string stats = stats_preamble(cfg);
    stats += stats_csv_header();
    stats += stats_csv_row(engine.collect_stats());

    auto save_snapshot = [&](std::uint64_t at_tick) {
        std::string name = snapshot_name(at_tick);
        write_file_bytes((fs::path(opt.out_dir) / name).string(), engine.snapshot());
        manifest.snapshots.push_back({at_tick, name});
    };
    save_snapshot(0);

    for (std::uint64_t i = 0; i < opt.steps; ++i) {
        auto row = engine.step();
        if (row) stats += stats_csv_row(*row);
        if (opt.snapshot_interval > 0 && engine.tick() % opt.snapshot_interval == 0)
            save_snapshot(engine.tick());
    }
    if (manifest.snapshots.empty() || manifest.snapshots.back().tick != engine.tick())
        save_snapshot(engine.tick());
    manifest.end_tick = engine.tick();

    write_file_text((fs::path(opt.out_dir) / "stats.csv").string(), stats);
    if (opt.lineage) {
        std::string lineage = lineage_csv_header();
        for (const auto& e : engine.lineage_log()) lineage += lineage_csv_row(e);
        write_file_text((fs::path(opt.out_dir) / "lineage.csv").string(), lineage);
        manifest.lineage_csv = "lineage.csv";
    }
    write_file_text((fs::path(opt.out_dir) / "manifest.json").string(), manifest.to_json());
    std::cout << "run complete: " << engine.tick() << " ticks, "
              << manifest.snapshots.size() << " snapshots, out=" << opt.out_dir << "\n";
    return 0;
}

inline int cmd_verify_replay(const std::string& manifest_path, std::size_t index) {
    namespace fs = std::filesystem;
    RunManifest manifest = RunManifest::from_json(read_file_text(manifest_path));
    if (index + 1 >= manifest.snapshots.size()) {
        std::cerr << "verify-replay: need snapshots " << index << " and " << index + 1
                  << " but manifest lists " << manifest.snapshots.size() << "\n";
        return 1;
    }
    fs::path dir = fs::path(manifest_path).parent_path();
    auto base_path = (dir / manifest.snapshots[index].path).string();
    auto target_path = (dir / manifest.snapshots[index + 1].path).string();

    Engine engine = Engine::restore(read_file_bytes(base_path));
    std::uint64_t target_tick = manifest.snapshots[index + 1].tick;
    while (engine.tick() < target_tick) engine.step();
    auto replayed = engine.snapshot();
    auto stored = read_file_bytes(target_path);
    if (replayed == stored) {
        std::cout << "replay verified: snapshot " << index << " -> " << index + 1 << " (tick "
                  << target_tick << ") byte-identical\n";
        return 0;
    }
    std::size_t first_diff = 0;
    while (first_diff < std::min(replayed.size(), stored.size()) &&
           replayed[first_diff] == stored[first_diff])
        ++first_diff;
    std::cerr << "replay DIVERGED at snapshot tick " << target_tick << ": first differing byte "
              << first_diff << " of " << stored.size() << " (replayed " << replayed.size()
              << " bytes)\n";
    return 1;
}

inline int cmd_render(const std::string& snapshot_path, const std::string& out_path, double scale) {
    Engine engine = Engine::restore(read_file_bytes(snapshot_path));
    Renderer img = render_world(engine, scale);
    img.write_ppm(out_path);
    std::cout << "rendered " << img.width() << "x" << img.height() << " -> " << out_path << "\n";
    return 0;
}

struct SeriesStats {
    double min = 0, mean = 0, max = 0;
    std::size_t count = 0;
};

inline int cmd_stats(const std::string& manifest_path, const std::string& series_dir) {
    namespace fs = std::filesystem;
    RunManifest manifest = RunManifest::from_json(read_file_text(manifest_path));
    fs::path dir = fs::path(manifest_path).parent_path();
    std::string text = read_file_text((dir / manifest.stats_csv).string());

    std::vector<std::string> columns;
    std::vector<std::vector<std::pair<std::uint64_t, double>>> series;  // (tick, value)
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        // trailing empty field
        if (!line.empty() && line.back() == ',') fields.push_back("");
        if (!header_seen) {
            columns = fields;
            series.resize(columns.size());
            header_seen = true;
            continue;
        }
        if (fields.size() != columns.size())
            throw std::runtime_error("stats csv: malformed row (field count mismatch): " + line);
        std::uint64_t tick = std::stoull(fields[0]);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (fields[c].empty()) continue;
            series[c].emplace_back(tick, std::stod(fields[c]));
        }
    }
    if (!header_seen) throw std::runtime_error("stats csv: no header found");

    std::cout << "metric,count,min,mean,max\n";
    for (std::size_t c = 1; c < columns.size(); ++c) {
        const auto& s = series[c];
        if (s.empty()) {
            std::cout << columns[c] << ",0,,,\n";
            continue;
        }
        double mn = s[0].second, mx = s[0].second, sum = 0;
        for (const auto& [t, v] : s) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
            sum += v;
        }
        std::cout << columns[c] << ',' << s.size() << ',' << stats_detail::fmt(mn) << ','
                  << stats_detail::fmt(sum / static_cast<double>(s.size())) << ','
                  << stats_detail::fmt(mx) << "\n";
    }
    if (!series_dir.empty()) {
        fs::create_directories(series_dir);
        for (std::size_t c = 1; c < columns.size(); ++c) {
            std::string out = "tick," + columns[c] + "\n";
            for (const auto& [t, v] : series[c])
                out += std::to_string(t) + "," + stats_detail::fmt(v) + "\n";
            write_file_text((fs::path(series_dir) / (columns[c] + ".csv")).string(), out);
        }
        std::cout << "series exported to " << series_dir << "\n";
    }
    return 0;
}

inline int cmd_dump_genome(const std::string& snapshot_path, std::uint64_t cell_id) {
    Engine engine = Engine::restore(read_file_bytes(snapshot_path));
    auto it = engine.cells().find(cell_id);
    if (it == engine.cells().end()) {
        std::cerr << "no cell with id " << cell_id << "\n";
        return 1;
    }
    const Cell& c = it->second;
    if (!c.is_protozoan()) {
        std::cerr << "cell " << cell_id << " has no genome (kind "
                  << static_cast<int>(c.kind) << ")\n";
        return 1;
    }
    const Genome& g = c.genome;
    std::cout << "genome of cell " << cell_id << " (generation " << c.generation << ")\n";
    std::cout << "  nodes: " << g.traits.node_angles.size() << ", neurons: " << g.neurons.size()
              << ", connections: " << g.connections.size() << "\n";
    std::cout << "  colour: " << g.traits.colour.r << " " << g.traits.colour.g << " "
              << g.traits.colour.b << "\n";
    std::cout << "  node angles:";
    for (double a : g.traits.node_angles) std::cout << ' ' << a;
    std::cout << "\n  connections (innovation src->dst weight enabled):\n";
    for (const auto& conn : g.connections)
        std::cout << "    " << conn.innovation << "  " << conn.src << "->" << conn.dst << "  "
                  << conn.weight << "  " << (conn.enabled ? "on" : "off") << "\n";
    return 0;
}

inline int cmd_dump_cell(const std::string& snapshot_path, std::uint64_t cell_id) {
    Engine engine = Engine::restore(read_file_bytes(snapshot_path));
    auto it = engine.cells().find(cell_id);
    if (it == engine.cells().end()) {
        std::cerr << "no cell with id " << cell_id << "\n";
        return 1;
    }
    const Cell& c = it->second;
    const char* kind = c.kind == CellKind::Plant ? "plant"
                       : c.kind == CellKind::Meat ? "meat"
                                                  : "protozoan";
    std::cout << "cell " << cell_id << " (" << kind << ")\n";
    std::cout << "  pos: " << c.pos.x << " " << c.pos.y << "  radius: " << c.radius << "\n";
    std::cout << "  health: " << c.attr.health << "  energy: " << c.attr.energy << "\n";
    std::cout << "  construction_mass: " << c.attr.construction_mass
              << "  plant_food: " << c.attr.plant_food << "  meat_food: " << c.attr.meat_food
              << "\n";
    std::cout << "  molecules (total): " << c.attr.molecule_total() << "\n";
    std::cout << "  generation: " << c.generation << "  parent: " << c.parent_id << "\n";
    if (c.engulfed) std::cout << "  engulfed by " << c.engulfed_by << "\n";
    for (std::size_t n = 0; n < c.nodes.size(); ++n) {
        const auto& node = c.nodes[n];
        std::cout << "  node " << n << " angle " << node.angle << " signature " << node.signature;
        if (node.attachment)
            std::cout << " attachment " << attachment_name(node.attachment->kind);
        std::cout << "\n";
    }
    return 0;
}

} // namespace cli_detail

// Entry point shared by the binary and the tests.
inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"protolife: deterministic evolving protozoan ecosystem simulator"};
    app.require_subcommand(1);

    cli_detail::RunOptions run_opt;
    std::uint64_t seed_value = 0;
    auto* run = app.add_subcommand("run", "run a seeded experiment");
    run->add_option("--config", run_opt.config_path, "config file (defaults when omitted)");
    auto* seed_flag = run->add_option("--seed", seed_value, "master seed override");
    run->add_option("--steps", run_opt.steps, "physics steps to simulate");
    run->add_option("--out", run_opt.out_dir, "output directory")->required();
    run->add_option("--snapshot-interval", run_opt.snapshot_interval,
                    "steps between snapshots (0: endpoints only)");
    std::int64_t stats_interval = 0;
    auto* stats_flag = run->add_option("--stats-interval", stats_interval, "steps between stats rows");
    run->add_flag("--lineage", run_opt.lineage, "write lineage.csv (one row per birth/death)");

    std::string manifest_path;
    std::size_t snapshot_index = 0;
    auto* verify = app.add_subcommand("verify-replay", "re-simulate between snapshots and compare");
    verify->add_option("--manifest", manifest_path, "manifest.json path")->required();
    verify->add_option("--index", snapshot_index, "snapshot index to start from");

    std::string snapshot_path, image_path;
    double render_scale = 8.0;
    auto* render = app.add_subcommand("render", "render a snapshot to a PPM image");
    render->add_option("--snapshot", snapshot_path, "snapshot file")->required();
    render->add_option("--out", image_path, "output .ppm path")->required();
    render->add_option("--render-scale", render_scale, "pixels per metre");

    std::string stats_manifest, series_dir;
    auto* stats = app.add_subcommand("stats", "summarize a run's stats CSV");
    stats->add_option("--manifest", stats_manifest, "manifest.json path")->required();
    stats->add_option("--series-dir", series_dir, "export per-metric series here");

    std::string dump_snapshot;
    std::uint64_t dump_cell_id = 0;
    auto* dump_genome = app.add_subcommand("dump-genome", "print a cell's genome");
    dump_genome->add_option("--snapshot", dump_snapshot, "snapshot file")->required();
    dump_genome->add_option("--cell", dump_cell_id, "cell id")->required();

    std::string dump_cell_snapshot;
    std::uint64_t dump_cell_id2 = 0;
    auto* dump_cell = app.add_subcommand("dump-cell", "print a cell's state");
    dump_cell->add_option("--snapshot", dump_cell_snapshot, "snapshot file")->required();
    dump_cell->add_option("--cell", dump_cell_id2, "cell id")->required();

    std::string config_path_echo;
    auto* config_cmd = app.add_subcommand("config", "print the canonical config");
    config_cmd->add_option("--config", config_path_echo, "parse and echo this file instead of defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run->parsed()) {
            if (*seed_flag) run_opt.seed = seed_value;
            if (*stats_flag) run_opt.stats_interval = stats_interval;
            return cli_detail::cmd_run(run_opt);
        }
        if (verify->parsed()) return cli_detail::cmd_verify_replay(manifest_path, snapshot_index);
        if (render->parsed()) return cli_detail::cmd_render(snapshot_path, image_path, render_scale);
        if (stats->parsed()) return cli_detail::cmd_stats(stats_manifest, series_dir);
        if (dump_genome->parsed()) return cli_detail::cmd_dump_genome(dump_snapshot, dump_cell_id);
        if (dump_cell->parsed()) return cli_detail::cmd_dump_cell(dump_cell_snapshot, dump_cell_id2);
        if (config_cmd->parsed()) {
            SimConfig cfg;
            if (!config_path_echo.empty()) cfg = SimConfig::parse(read_file_text(config_path_echo));
            std::cout << cfg.serialize();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace protolife
