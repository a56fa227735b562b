#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "protolife/cell.hpp"
#include "protolife/chem_grid.hpp"
#include "protolife/config.hpp"
#include "protolife/evolution.hpp"
#include "protolife/genome.hpp"
#include "protolife/lock_and_key.hpp"
#include "protolife/physics.hpp"
#include "protolife/rng.hpp"
#include "protolife/snapshot.hpp"
#include "protolife/stats.hpp"
#include "protolife/surface_nodes.hpp"

namespace protolife {

inline constexpr std::uint32_t kSnapshotFormatVersion = 1;
inline constexpr const char* kSnapshotMagic = "PLSNAP01";

struct RockTriangle {
    std::uint64_t body_id = 0;
    std::array<Vec2, 3> verts{};
};

// A live adhesion binding: one joint, two cells, one receptor node on each.
struct Binding {
    std::uint64_t joint_id = 0;
    std::uint64_t cell_a = 0;
    std::uint32_t node_a = 0;
    std::uint64_t cell_b = 0;
    std::uint32_t node_b = 0;
};

struct LineageEvent {
    std::uint64_t tick = 0;
    bool is_birth = true;
    std::uint64_t cell_id = 0;
    std::uint64_t parent_id = 0;
    std::uint32_t generation = 0;
};

namespace engine_detail {

inline double segment_distance(Vec2 a1, Vec2 a2, Vec2 b1, Vec2 b2) {
    auto closest_t = [](Vec2 p, Vec2 q1, Vec2 q2) {
        Vec2 d = q2 - q1;
        double l2 = length_sq(d);
        if (l2 <= 0.0) return 0.0;
        return std::clamp(dot(p - q1, d) / l2, 0.0, 1.0);
    };
    // segment intersection means distance zero
    double d1 = cross(a2 - a1, b1 - a1);
    double d2 = cross(a2 - a1, b2 - a1);
    double d3 = cross(b2 - b1, a1 - b1);
    double d4 = cross(b2 - b1, a2 - b1);
    if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0))) return 0.0;
    double best = 1e300;
    for (const auto& [p, q1, q2] : {std::tuple{a1, b1, b2}, {a2, b1, b2}, {b1, a1, a2}, {b2, a1, a2}}) {
        double t = closest_t(p, q1, q2);
        best = std::min(best, length(p - (q1 + (q2 - q1) * t)));
    }
    return best;
}

inline double triangle_distance(const std::array<Vec2, 3>& a, const std::array<Vec2, 3>& b) {
    for (const auto& v : a)
        if (physics_detail::point_in_triangle(b, v)) return 0.0;
    for (const auto& v : b)
        if (physics_detail::point_in_triangle(a, v)) return 0.0;
    double best = 1e300;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            best = std::min(best, segment_distance(a[i], a[(i + 1) % 3], b[j], b[(j + 1) % 3]));
    return best;
}

inline double triangle_area(const std::array<Vec2, 3>& t) {
    return 0.5 * std::abs(cross(t[1] - t[0], t[2] - t[0]));
}

} // namespace engine_detail

// Procedurally grown rock formations: contiguous triangle clusters glued
// edge-to-edge, sized from a heavy-tailed draw so most formations are small
// with occasional sprawling ones (open areas, rings, tunnels). Every triangle
// stays inside the arena and keeps at least the configured corridor width to
// every other formation.
inline std::vector<std::vector<std::array<Vec2, 3>>> generate_environment(RngStream rng,
                                                                          const SimConfig& cfg) {
    std::vector<std::vector<std::array<Vec2, 3>>> formations;
    const double arena = cfg.sim.world_radius * 0.92;
    const double corridor = cfg.corridor_min();

    auto in_arena = [&](const std::array<Vec2, 3>& t) {
        for (const auto& v : t)
            if (length(v) > arena) return false;
        return true;
    };
    auto clear_of_others = [&](const std::array<Vec2, 3>& t, std::size_t own) {
        for (std::size_t f = 0; f < formations.size(); ++f) {
            if (f == own) continue;
            for (const auto& other : formations[f])
                if (engine_detail::triangle_distance(t, other) < corridor) return false;
        }
        return true;
    };

    for (std::int64_t f = 0; f < cfg.engine.n_formations; ++f) {
        // u^2 skews sizes small; the tail still reaches formation_tri_max
        double u = rng.uniform01();
        auto target = static_cast<std::int64_t>(
            cfg.engine.formation_tri_min +
            std::floor(u * u * static_cast<double>(cfg.engine.formation_tri_max -
                                                    cfg.engine.formation_tri_min + 1)));
        target = std::min(target, cfg.engine.formation_tri_max);

        std::vector<std::array<Vec2, 3>> tris;
        std::vector<std::pair<Vec2, Vec2>> exposed;  // open edges, outward on the left
        bool seeded = false;
        for (int attempt = 0; attempt < 60 && !seeded; ++attempt) {
            double r = arena * 0.9 * std::sqrt(rng.uniform01());
            Vec2 seed = from_angle(rng.uniform(0.0, kTwoPi)) * r;
            double edge = rng.uniform(cfg.engine.formation_edge_min, cfg.engine.formation_edge_max);
            double a0 = rng.uniform(0.0, kTwoPi);
            std::array<Vec2, 3> t{seed + from_angle(a0) * edge * 0.6,
                                  seed + from_angle(a0 + kTwoPi / 3.0) * edge * 0.6,
                                  seed + from_angle(a0 + 2.0 * kTwoPi / 3.0) * edge * 0.6};
            if (!in_arena(t) || !clear_of_others(t, formations.size())) continue;
            tris.push_back(t);
            for (int e = 0; e < 3; ++e) exposed.emplace_back(t[e], t[(e + 1) % 3]);
            seeded = true;
        }
        if (!seeded) continue;

        formations.push_back(tris);
        auto& mine = formations.back();
        int stall = 0;
        while (static_cast<std::int64_t>(mine.size()) < target && !exposed.empty() && stall < 40) {
            std::size_t pick = rng.below(exposed.size());
            auto [e1, e2] = exposed[pick];
            Vec2 mid = (e1 + e2) * 0.5;
            Vec2 along = e2 - e1;
            Vec2 n = normalized(Vec2{along.y, -along.x});  // left of e1->e2
            double h = rng.uniform(cfg.engine.formation_edge_min * 0.5, cfg.engine.formation_edge_max);
            double skew = rng.uniform(-0.3, 0.3);
            Vec2 apex = mid + n * h + along * skew;
            std::array<Vec2, 3> t{e2, e1, apex};
            if (engine_detail::triangle_area(t) < 0.05 || !in_arena(t) ||
                !clear_of_others(t, formations.size() - 1)) {
                ++stall;
                continue;
            }
            mine.push_back(t);
            exposed.erase(exposed.begin() + static_cast<std::ptrdiff_t>(pick));
            exposed.emplace_back(e1, apex);
            exposed.emplace_back(apex, e2);
            stall = 0;
        }
    }
    return formations;
}

class Engine {
public:
    explicit Engine(const SimConfig& cfg) : cfg_(cfg), physics_(cfg.physics) {
        cfg_.validate();
        root_ = RngStream::root(cfg_.sim.master_seed);
        grid_ = ChemGrid(cfg_.sim.chem_grid_size, cfg_.sim.world_radius, cfg_.chem);
        build_environment();
        seed_population();
    }

    // --- accessors ---------------------------------------------------------
    const SimConfig& config() const { return cfg_; }
    std::uint64_t tick() const { return tick_; }
    std::map<std::uint64_t, Cell>& cells() { return cells_; }
    const std::map<std::uint64_t, Cell>& cells() const { return cells_; }
    PhysicsWorld& physics() { return physics_; }
    const PhysicsWorld& physics() const { return physics_; }
    ChemGrid& grid() { return grid_; }
    const ChemGrid& grid() const { return grid_; }
    Ledger& ledger() { return ledger_; }
    const Ledger& ledger() const { return ledger_; }
    const std::vector<RockTriangle>& rocks() const { return rocks_; }
    const std::vector<Binding>& bindings() const { return bindings_; }
    std::vector<LineageEvent>& lineage_log() { return lineage_; }

    Cell& cell(std::uint64_t id) { return cells_.at(id); }

    double total_mass() const {
        double sum = grid_.resident_mass();
        for (const auto& [id, c] : cells_)
            sum += c.body_mass(cfg_.physics.density) + c.attr.stored_mass();
        return sum;
    }
    double total_energy() const {
        double sum = 0.0;
        for (const auto& [id, c] : cells_) sum += c.attr.energy;
        return sum;
    }

    // Health loss rate (per second) for a position; zero inside the arena.
    double void_damage_rate(Vec2 pos) const {
        double d = length(pos);
        if (d <= cfg_.sim.world_radius) return 0.0;
        return cfg_.sim.void_decay_rate * (d - cfg_.sim.world_radius);
    }

    // --- main loop ----------------------------------------------------------

    // One world step through the fixed phase order. Returns a stats row when
    // this step crossed the sampling interval.
    std::optional<StatsRow> step() {
        const double dt = cfg_.sim.physics_dt;
        if (tick_ % static_cast<std::uint64_t>(cfg_.sim.grn_tick_interval) == 0) phase_grn();
        phase_node_io(dt);
        auto contacts = phase_physics(dt);
        phase_interactions(contacts, dt);
        phase_metabolism(dt, contacts);
        if (tick_ % static_cast<std::uint64_t>(cfg_.sim.grid_tick_interval) == 0) phase_chemistry(dt);
        phase_void(dt);
        phase_deaths();
        phase_divisions();
        ++tick_;
        if (tick_ % static_cast<std::uint64_t>(cfg_.sim.stats_interval) == 0) return collect_stats();
        return std::nullopt;
    }

    // --- statistics ---------------------------------------------------------
    StatsRow collect_stats() const {
        StatsRow row;
        row.tick = tick_;
        std::map<std::uint64_t, std::uint64_t> root;  // union-find over protozoa
        for (const auto& [id, c] : cells_) {
            if (c.engulfed) continue;
            switch (c.kind) {
                case CellKind::Plant: ++row.plants; break;
                case CellKind::Meat: ++row.meats; break;
                case CellKind::Protozoan:
                    ++row.protozoa;
                    row.max_generation = std::max(row.max_generation, c.generation);
                    for (const auto& node : c.nodes)
                        if (node.attachment)
                            row.node_frequency[static_cast<std::size_t>(node.attachment->kind)] += 1.0;
                    root[id] = id;
                    break;
            }
        }
        if (row.protozoa == 0) {
            row.no_protozoa = true;
            row.node_frequency = {};
            return row;
        }
        for (auto& f : row.node_frequency) f /= static_cast<double>(row.protozoa);

        auto find = [&](std::uint64_t x) {
            while (root.at(x) != x) x = root.at(x);
            return x;
        };
        for (const auto& b : bindings_) {
            if (!root.count(b.cell_a) || !root.count(b.cell_b)) continue;
            root[find(b.cell_a)] = find(b.cell_b);
        }
        std::map<std::uint64_t, std::int64_t> sizes;
        for (const auto& [id, r] : root) ++sizes[find(id)];
        std::int64_t cmin = 0, cmax = 0, count = 0, total = 0;
        for (const auto& [r, n] : sizes) {
            if (n < 2) continue;
            cmin = count == 0 ? n : std::min(cmin, n);
            cmax = std::max(cmax, n);
            total += n;
            ++count;
        }
        if (count > 0) {
            row.component_min = cmin;
            row.component_max = cmax;
            row.component_mean = static_cast<double>(total) / static_cast<double>(count);
        }
        return row;
    }

    // --- snapshots ----------------------------------------------------------
    std::vector<std::uint8_t> snapshot() const {
        ByteWriter w;
        w.str(kSnapshotMagic);
        w.u32(kSnapshotFormatVersion);
        w.str(kRngAlgorithmId);
        w.str(cfg_.serialize());
        w.u64(tick_);
        w.u64(next_id_);
        w.u64(next_innovation_);
        w.u64(next_joint_);
        w.u64(root_.key);
        w.u64(root_.counter);
        // ledger
        for (double v : {ledger_.photosynthesis_mass, ledger_.photosynthesis_energy,
                         ledger_.digestion_energy, ledger_.decay_mass, ledger_.decay_energy,
                         ledger_.diffusion_mass, ledger_.construction_mass,
                         ledger_.construction_energy, ledger_.repair_mass, ledger_.repair_energy,
                         ledger_.growth_energy, ledger_.production_energy, ledger_.actuation_energy})
            w.f64(v);
        // rocks
        w.u64(rocks_.size());
        for (const auto& r : rocks_) {
            w.u64(r.body_id);
            for (const auto& v : r.verts) {
                w.f64(v.x);
                w.f64(v.y);
            }
        }
        // grid pixels
        w.f64_vec(grid_.pixels());
        // cells (map iteration: ascending id)
        w.u64(cells_.size());
        for (const auto& [id, c] : cells_) {
            auto bit = physics_.bodies.find(id);
            write_cell(w, c, bit == physics_.bodies.end() ? nullptr : &bit->second);
        }
        // joints
        w.u64(physics_.joints.size());
        for (const auto& [jid, j] : physics_.joints) {
            w.u64(j.id);
            w.u64(j.body_a);
            w.u64(j.body_b);
            w.f64(j.anchor_a.x); w.f64(j.anchor_a.y);
            w.f64(j.anchor_b.x); w.f64(j.anchor_b.y);
            w.f64(j.rest_length);
            w.f64(j.rest_relative_angle);
        }
        // bindings
        w.u64(bindings_.size());
        for (const auto& b : bindings_) {
            w.u64(b.joint_id);
            w.u64(b.cell_a); w.u32(b.node_a);
            w.u64(b.cell_b); w.u32(b.node_b);
        }
        w.finish_with_checksum();
        return w.bytes;
    }

    static Engine restore(const std::vector<std::uint8_t>& bytes) {
        ByteReader r(bytes);
        r.verify_checksum();
        if (r.str() != kSnapshotMagic) throw SnapshotError("not a protolife snapshot");
        std::uint32_t version = r.u32();
        if (version != kSnapshotFormatVersion)
            throw SnapshotError("snapshot format version mismatch: have " + std::to_string(version) +
                                ", want " + std::to_string(kSnapshotFormatVersion));
        std::string algo = r.str();
        if (algo != kRngAlgorithmId)
            throw SnapshotError("snapshot PRNG algorithm mismatch: " + algo);
        SimConfig cfg = SimConfig::parse(r.str());

        Engine e(cfg, PrivateTag{});
        e.tick_ = r.u64();
        e.next_id_ = r.u64();
        e.next_innovation_ = r.u64();
        e.next_joint_ = r.u64();
        e.root_.key = r.u64();
        e.root_.counter = r.u64();
        for (double* v : {&e.ledger_.photosynthesis_mass, &e.ledger_.photosynthesis_energy,
                          &e.ledger_.digestion_energy, &e.ledger_.decay_mass, &e.ledger_.decay_energy,
                          &e.ledger_.diffusion_mass, &e.ledger_.construction_mass,
                          &e.ledger_.construction_energy, &e.ledger_.repair_mass,
                          &e.ledger_.repair_energy, &e.ledger_.growth_energy,
                          &e.ledger_.production_energy, &e.ledger_.actuation_energy})
            *v = r.f64();
        std::uint64_t n_rocks = r.count();
        Rgb rock_colour{cfg.engine.rock_colour_r, cfg.engine.rock_colour_g, cfg.engine.rock_colour_b};
        for (std::uint64_t i = 0; i < n_rocks; ++i) {
            RockTriangle rock;
            rock.body_id = r.u64();
            for (auto& v : rock.verts) {
                v.x = r.f64();
                v.y = r.f64();
            }
            e.rocks_.push_back(rock);
            e.physics_.add_triangle(rock.body_id, rock.verts, rock_colour);
        }
        e.grid_ = ChemGrid(cfg.sim.chem_grid_size, cfg.sim.world_radius, cfg.chem);
        auto px = r.f64_vec();
        if (px.size() != e.grid_.pixels().size()) throw SnapshotError("snapshot grid size mismatch");
        e.grid_.pixels_mutable() = std::move(px);
        std::uint64_t n_cells = r.count();
        for (std::uint64_t i = 0; i < n_cells; ++i) {
            Cell c = read_cell(r, cfg);
            std::uint64_t id = c.id;
            e.cells_.emplace(id, std::move(c));
        }
        for (auto& [id, c] : e.cells_) {
            if (!c.engulfed) {
                Body& b = e.physics_.add_disc(id, c.pos, c.radius, cfg.physics.density, c.colour);
                b.vel = c.vel;
                b.angle = c.angle;
                b.angvel = c.angvel;
            }
            if (c.is_protozoan()) c.net = CompiledGrn::build(c.genome);
        }
        std::uint64_t n_joints = r.count();
        for (std::uint64_t i = 0; i < n_joints; ++i) {
            Joint j;
            j.id = r.u64();
            j.body_a = r.u64();
            j.body_b = r.u64();
            j.anchor_a = {r.f64(), r.f64()};
            j.anchor_b = {r.f64(), r.f64()};
            j.rest_length = r.f64();
            j.rest_relative_angle = r.f64();
            if (!e.physics_.bodies.count(j.body_a) || !e.physics_.bodies.count(j.body_b))
                throw SnapshotError("snapshot joint references missing body");
            e.physics_.joints.emplace(j.id, j);
        }
        std::uint64_t n_bindings = r.count();
        for (std::uint64_t i = 0; i < n_bindings; ++i) {
            Binding b;
            b.joint_id = r.u64();
            b.cell_a = r.u64();
            b.node_a = r.u32();
            b.cell_b = r.u64();
            b.node_b = r.u32();
            e.bindings_.push_back(b);
        }
        r.expect_end();
        return e;
    }

private:
    struct PrivateTag {};
    Engine(const SimConfig& cfg, PrivateTag) : cfg_(cfg), physics_(cfg.physics) {
        grid_ = ChemGrid(cfg_.sim.chem_grid_size, cfg_.sim.world_radius, cfg_.chem);
    }

    SimConfig cfg_;
    std::uint64_t tick_ = 0;
    PhysicsWorld physics_;
    ChemGrid grid_;
    std::map<std::uint64_t, Cell> cells_;
    std::vector<RockTriangle> rocks_;
    std::vector<Binding> bindings_;
    Ledger ledger_;
    RngStream root_;
    std::uint64_t next_id_ = 1;
    std::uint64_t next_innovation_ = 1;
    std::uint64_t next_joint_ = 1;
    std::vector<LineageEvent> lineage_;

    // --- construction -------------------------------------------------------
    void build_environment() {
        auto formations = generate_environment(root_.fork("env"), cfg_);
        Rgb rock_colour{cfg_.engine.rock_colour_r, cfg_.engine.rock_colour_g,
                        cfg_.engine.rock_colour_b};
        for (const auto& formation : formations) {
            for (const auto& t : formation) {
                RockTriangle rock{next_id_++, t};
                rocks_.push_back(rock);
                physics_.add_triangle(rock.body_id, t, rock_colour);
            }
        }
    }

    bool spot_is_free(Vec2 pos, double radius) const {
        if (length(pos) > cfg_.sim.world_radius * 0.95 - radius) return false;
        for (const auto& rock : rocks_) {
            Vec2 cp = physics_detail::closest_point_on_triangle(rock.verts, pos);
            if (physics_detail::point_in_triangle(rock.verts, pos)) return false;
            if (length(cp - pos) < radius + 0.2) return false;
        }
        for (const auto& [id, c] : cells_) {
            if (c.engulfed) continue;
            if (length(c.pos - pos) < radius + c.radius + 0.05) return false;
        }
        return true;
    }

    void seed_population() {
        RngStream init = root_.fork("init");
        for (std::int64_t i = 0; i < cfg_.engine.n_plants; ++i) {
            Vec2 pos;
            bool ok = false;
            for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
                double rr = cfg_.sim.world_radius * 0.93 * std::sqrt(init.uniform01());
                pos = from_angle(init.uniform(0.0, kTwoPi)) * rr;
                ok = spot_is_free(pos, cfg_.engine.init_radius_plant);
            }
            if (!ok) continue;
            double j = cfg_.engine.plant_colour_jitter;
            Rgb colour{clamp01(0.05 + init.uniform(-j, j) * 0.5),
                       clamp01(0.85 + init.uniform(-j, j)),
                       clamp01(0.08 + init.uniform(-j, j) * 0.5)};
            spawn_plant(pos, cfg_.engine.init_radius_plant, colour, 0, 0);
        }
        for (std::int64_t i = 0; i < cfg_.engine.n_protozoa; ++i) {
            Vec2 pos;
            bool ok = false;
            for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
                double rr = cfg_.sim.world_radius * 0.93 * std::sqrt(init.uniform01());
                pos = from_angle(init.uniform(0.0, kTwoPi)) * rr;
                ok = spot_is_free(pos, cfg_.engine.init_radius_proto);
            }
            if (!ok) continue;
            auto node_count = static_cast<int>(
                cfg_.engine.proto_nodes_min +
                static_cast<std::int64_t>(init.below(static_cast<std::uint64_t>(
                    cfg_.engine.proto_nodes_max - cfg_.engine.proto_nodes_min + 1))));
            std::vector<double> angles;
            angles.reserve(static_cast<std::size_t>(node_count));
            for (int a = 0; a < node_count; ++a) angles.push_back(init.uniform(0.0, kTwoPi));
            Rgb colour{clamp01(0.80 + init.uniform(-0.08, 0.08)),
                       clamp01(0.80 + init.uniform(-0.08, 0.08)),
                       clamp01(0.82 + init.uniform(-0.08, 0.08))};
            Genome genome = init_genome(node_count, angles, colour, init, next_innovation_, cfg_.grn);
            spawn_protozoan(pos, cfg_.engine.init_radius_proto, std::move(genome), 0, 0);
        }
    }

    Cell& new_cell(CellKind kind, Vec2 pos, double radius) {
        std::uint64_t id = next_id_++;
        Cell c;
        c.id = id;
        c.kind = kind;
        c.pos = pos;
        c.radius = radius;
        c.birth_tick = tick_;
        c.attr.molecules.assign(static_cast<std::size_t>(cfg_.sim.molecule_count), 0.0);
        c.rng = root_.fork("cell:" + std::to_string(id));
        auto [it, inserted] = cells_.emplace(id, std::move(c));
        physics_.add_disc(id, pos, radius, cfg_.physics.density, it->second.colour);
        return it->second;
    }

    Cell& spawn_plant(Vec2 pos, double radius, Rgb colour, std::uint64_t parent,
                      std::uint32_t generation) {
        Cell& c = new_cell(CellKind::Plant, pos, radius);
        c.colour = colour;
        c.base_colour = colour;
        c.parent_id = parent;
        c.generation = generation;
        c.attr.energy = parent == 0 ? cfg_.engine.init_energy : 0.0;
        c.attr.construction_mass = parent == 0 ? cfg_.engine.init_mass : 0.0;
        c.attr.growth_rate = cfg_.cell.plant_growth_rate;
        c.attr.digestion_rate = 0.0;
        c.attr.repair_priority = cfg_.cell.plant_repair_priority;
        physics_.bodies.at(c.id).colour = colour;
        lineage_.push_back({tick_, true, c.id, parent, generation});
        return c;
    }

    Cell& spawn_protozoan(Vec2 pos, double radius, Genome genome, std::uint64_t parent,
                          std::uint32_t generation) {
        Cell& c = new_cell(CellKind::Protozoan, pos, radius);
        c.genome = std::move(genome);
        c.colour = c.genome.traits.colour;
        c.base_colour = c.genome.traits.colour;
        c.parent_id = parent;
        c.generation = generation;
        if (parent == 0) {
            c.attr.energy = cfg_.engine.init_energy;
            c.attr.construction_mass = cfg_.engine.init_mass;
            // founders carry a lattice-uniform molecule endowment; later
            // generations inherit whatever reserves their parents kept
            double per_point = cfg_.engine.init_molecule_stock /
                               static_cast<double>(cfg_.sim.molecule_count);
            for (double& q : c.attr.molecules) q = per_point;
        }
        c.attr.repair_priority = cfg_.cell.repair_priority_default;
        c.division_threshold = cfg_.evolution.r_max_div;
        for (double angle : c.genome.traits.node_angles) {
            SurfaceNode node;
            node.angle = angle;
            c.nodes.push_back(node);
        }
        c.net = CompiledGrn::build(c.genome);
        c.grn = GrnState::zeros(c.genome.neurons.size());
        physics_.bodies.at(c.id).colour = c.colour;
        lineage_.push_back({tick_, true, c.id, parent, generation});
        return c;
    }

    Cell& spawn_meat(Vec2 pos, double radius, std::uint64_t parent) {
        Cell& c = new_cell(CellKind::Meat, pos, radius);
        c.colour = Rgb{0.75, 0.12, 0.10};
        c.base_colour = c.colour;
        c.parent_id = parent;
        lineage_.push_back({tick_, true, c.id, parent, 0});
        return c;
    }

    // --- phases --------------------------------------------------------------

    static double squash(double v, double scale) { return 2.0 * v / (v + scale) - 1.0; }

    void phase_grn() {
        std::vector<double> inputs, outputs;
        for (auto& [id, c] : cells_) {
            if (!c.is_protozoan() || c.dead || c.engulfed) continue;
            ChannelLayout lay = c.genome.layout();
            inputs.assign(static_cast<std::size_t>(lay.input_count()), 0.0);
            inputs[ChannelLayout::kBias] = 1.0;
            inputs[ChannelLayout::kRandom] = c.rng.uniform(-1.0, 1.0);
            inputs[ChannelLayout::kHealth] = 2.0 * c.attr.health - 1.0;
            inputs[ChannelLayout::kRadius] =
                std::clamp(2.0 * c.radius / cfg_.cell.radius_max - 1.0, -1.0, 1.0);
            inputs[ChannelLayout::kEnergy] = squash(c.attr.energy, cfg_.cell.energy_input_scale);
            inputs[ChannelLayout::kPlantFood] = squash(c.attr.plant_food, cfg_.cell.energy_input_scale);
            inputs[ChannelLayout::kMeatFood] = squash(c.attr.meat_food, cfg_.cell.energy_input_scale);
            inputs[ChannelLayout::kGeneration] =
                squash(static_cast<double>(c.generation), cfg_.cell.generation_input_scale);
            for (std::size_t n = 0; n < c.nodes.size(); ++n)
                for (int s = 0; s < 3; ++s)
                    inputs[static_cast<std::size_t>(lay.node_sensor(static_cast<int>(n), s))] =
                        c.nodes[n].sensor[static_cast<std::size_t>(s)];

            grn_tick(c.net, c.grn, inputs, outputs);

            c.attr.growth_rate = remap_cyclic(outputs[ChannelLayout::kGrowthRate], 0.0,
                                              cfg_.grn.growth_rate_max);
            c.attr.digestion_rate = remap_cyclic(outputs[ChannelLayout::kDigestionRate], 0.0,
                                                 cfg_.grn.digestion_rate_max);
            c.division_threshold = remap_cyclic(outputs[ChannelLayout::kDivisionThreshold],
                                                cfg_.evolution.r_min_div, cfg_.evolution.r_max_div);
            c.attr.repair_priority = remap_cyclic(outputs[ChannelLayout::kRepairPriority], 0.0, 1.0);
            c.production_signature = snap_to_lattice(
                remap_cyclic(outputs[ChannelLayout::kProductionSignature], 0.0, 1.0),
                cfg_.sim.molecule_count);
            c.production_rate = remap_cyclic(outputs[ChannelLayout::kProductionRate], 0.0,
                                             cfg_.grn.production_rate_max);
            for (std::size_t n = 0; n < c.nodes.size(); ++n) {
                auto& node = c.nodes[n];
                for (int i = 0; i < 3; ++i)
                    node.control[static_cast<std::size_t>(i)] = remap_cyclic(
                        outputs[static_cast<std::size_t>(lay.node_control(static_cast<int>(n), i))],
                        -1.0, 1.0);
                node.signature = remap_cyclic(
                    outputs[static_cast<std::size_t>(lay.node_signature(static_cast<int>(n)))],
                    0.0, 1.0);
            }
        }
    }

    void phase_node_io(double dt) {
        for (auto& [id, c] : cells_) {
            if (!c.is_protozoan() || c.dead || c.engulfed) continue;
            Body& body = physics_.bodies.at(id);
            for (auto& node : c.nodes) {
                AttachmentKind kind = node.attachment ? node.attachment->kind
                                                      : AttachmentKind::Flagellum;
                if (!node.attachment || kind == AttachmentKind::Flagellum) {
                    double budget = node.attachment ? cfg_.cell.flagellum_multiplier : 1.0;
                    ActuationResult act = actuate_node(c, node, body.angle, budget, dt, cfg_);
                    body.force += act.force;
                    body.torque += act.torque;
                    c.attr.energy -= act.energy_cost;
                    ledger_.actuation_energy += act.energy_cost;
                    node.sensor = {act.success, 0.0, 0.0};
                    continue;
                }
                switch (kind) {
                    case AttachmentKind::Spike: {
                        double target = node.control[0] >= 0.0 ? 1.0 : 0.0;
                        double& ext = node.attachment->spike_extension;
                        double step = cfg_.nodes.spike_extend_rate * dt;
                        ext = target > ext ? std::min(ext + step, target)
                                           : std::max(ext - step, target);
                        node.sensor = {0.0, 0.0, 0.0};  // interaction phase reports hits
                        break;
                    }
                    case AttachmentKind::Photoreceptor: {
                        double centre_angle = node_world_angle(node, body.angle);
                        double cone = cfg_.nodes.photo_cone_deg * kPi / 180.0;
                        double range = cfg_.nodes.photo_range_radii * c.radius;
                        auto rays = cfg_.nodes.photo_rays;
                        Vec2 origin = node_world_position(c, node, body.angle);
                        double wsum = 0.0;
                        Rgb acc;
                        for (std::int64_t k = 0; k < rays; ++k) {
                            double t = rays > 1 ? static_cast<double>(k) /
                                                      static_cast<double>(rays - 1)
                                                : 0.5;
                            double a = centre_angle + (t - 0.5) * cone;
                            auto hit = physics_.raycast(origin, from_angle(a), range, id);
                            if (!hit) continue;
                            double wgt = photo_ray_weight(hit->distance, range);
                            wsum += wgt;
                            acc.r += wgt * hit->surface_colour.r;
                            acc.g += wgt * hit->surface_colour.g;
                            acc.b += wgt * hit->surface_colour.b;
                        }
                        if (wsum > 0.0)
                            node.sensor = {acc.r / wsum, acc.g / wsum, acc.b / wsum};
                        else
                            node.sensor = {0.0, 0.0, 0.0};
                        break;
                    }
                    case AttachmentKind::Phagoreceptor: {
                        node.sensor = {0.0, 0.0, 0.0};
                        if (node.attachment->prey_id != 0) {
                            auto it = cells_.find(node.attachment->prey_id);
                            if (it != cells_.end() && it->second.engulfed &&
                                it->second.engulfed_by == id) {
                                const Cell& prey = it->second;
                                node.sensor = {prey.kind == CellKind::Plant ? 1.0 : 0.0,
                                               prey.kind == CellKind::Meat ? 1.0 : 0.0,
                                               std::max(prey.attr.health, 0.0)};
                            } else {
                                node.attachment->prey_id = 0;
                            }
                        }
                        break;
                    }
                    case AttachmentKind::AdhesionReceptor:
                        // sensors refreshed by the binding transfer phase;
                        // unbound receptors read zero
                        if (node.attachment->joint_id == 0) node.sensor = {0.0, 0.0, 0.0};
                        break;
                    case AttachmentKind::Flagellum:
                        break;
                }
            }
        }
    }

    std::vector<Contact> phase_physics(double dt) {
        auto contacts = physics_.step(dt);
        for (auto& [id, c] : cells_) {
            if (c.engulfed) continue;
            auto it = physics_.bodies.find(id);
            if (it != physics_.bodies.end()) c.pos = it->second.pos;
        }
        return contacts;
    }

    void phase_interactions(const std::vector<Contact>& contacts, double dt) {
        resolve_engulfs(contacts);
        resolve_spikes(dt);
        resolve_binding_creation(contacts);
        resolve_binding_transfer(dt);
        process_engulfed_prey(dt);
    }

    void phase_metabolism(double dt, const std::vector<Contact>& contacts) {
        std::unordered_map<std::uint64_t, int> contact_count;
        for (const auto& ct : contacts) {
            ++contact_count[ct.a];
            ++contact_count[ct.b];
        }
        for (auto& [id, c] : cells_) {
            if (c.dead || c.engulfed) continue;
            if (c.kind == CellKind::Plant) {
                photosynthesize(c, dt, cfg_, ledger_);
                // crowded plants stop growing (and so stop dividing), which is
                // what bounds the mat population
                auto it = contact_count.find(id);
                int contacts = it == contact_count.end() ? 0 : it->second;
                double shade = 1.0 - static_cast<double>(contacts) / cfg_.cell.plant_shade_contacts;
                c.attr.growth_rate = cfg_.cell.plant_growth_rate * std::max(0.0, shade);
            }
            update_metabolism(c, dt, cfg_, ledger_);
            if (c.kind == CellKind::Meat) continue;
            double before = c.radius;
            grow(c, dt, cfg_, ledger_);
            if (c.radius != before) {
                Body& b = physics_.bodies.at(id);
                b.set_radius(c.radius);
            }
            if (c.is_protozoan()) {
                for (auto& node : c.nodes)
                    if (!node.attachment) advance_construction(c, node, dt, cfg_, ledger_);
                if (c.production_rate > 0.0)
                    produce_molecule(c, lattice_index(c.production_signature, cfg_.sim.molecule_count),
                                     c.production_rate * dt, cfg_, ledger_);
            }
        }
    }

    void phase_chemistry(double dt) {
        (void)dt;
        for (auto& [id, c] : cells_) {
            if (c.dead || c.engulfed) continue;
            if (c.kind == CellKind::Plant || c.kind == CellKind::Meat) {
                auto res = grid_.deposit(c.pos, c.radius * cfg_.chem.deposit_radius_factor,
                                         c.colour, cfg_.chem.deposit_fraction,
                                         c.attr.construction_mass);
                if (res.mass_moved > 0.0) {
                    c.attr.construction_mass -= res.mass_moved;
                    double fade = cfg_.chem.colour_fade * (res.fraction_applied /
                                                           std::max(cfg_.chem.deposit_fraction, 1e-12));
                    c.colour = lerp(c.colour, Rgb{0.5, 0.5, 0.5}, std::min(1.0, fade));
                    physics_.bodies.at(id).colour = c.colour;
                }
            } else {
                auto res = grid_.extract(c.pos, c.radius);
                c.attr.plant_food += res.plant_food;
                c.attr.meat_food += res.meat_food;
            }
        }
        // interior-only blurs can measure a few ulps negative; sinks are monotone
        ledger_.diffusion_mass += std::max(0.0, grid_.diffuse());
    }

    void phase_void(double dt) {
        for (auto& [id, c] : cells_) {
            if (c.dead || c.engulfed) continue;
            c.attr.health -= void_damage_rate(c.pos) * dt;
        }
    }

    void phase_deaths() {
        std::vector<std::uint64_t> doomed;
        for (const auto& [id, c] : cells_)
            if (!c.engulfed && !c.dead && c.attr.health < kDeathHealth) doomed.push_back(id);
        for (std::uint64_t id : doomed) kill_cell(id, /*spawn_meat=*/true);
    }

    void phase_divisions() {
        std::vector<std::uint64_t> dividing;
        for (const auto& [id, c] : cells_) {
            if (c.dead || c.engulfed) continue;
            if (c.kind == CellKind::Meat) continue;
            bool ready = c.kind == CellKind::Plant
                             ? division_check(c, cfg_.cell.plant_div_radius)
                             : division_check(c);
            if (ready) dividing.push_back(id);
        }
        for (std::uint64_t id : dividing) apply_division(id);
    }

    // --- interaction helpers --------------------------------------------------

    void resolve_engulfs(const std::vector<Contact>& contacts) {
        struct Attempt {
            std::uint64_t predator, prey;
            std::uint32_t node;
        };
        std::vector<Attempt> attempts;
        for (const auto& ct : contacts) {
            auto try_pair = [&](std::uint64_t pid, std::uint64_t vid, Vec2 normal_to_prey) {
                auto pit = cells_.find(pid);
                auto vit = cells_.find(vid);
                if (pit == cells_.end() || vit == cells_.end()) return;
                Cell& pred = pit->second;
                Cell& prey = vit->second;
                if (!pred.is_protozoan() || pred.dead || pred.engulfed) return;
                if (prey.kind == CellKind::Protozoan || prey.dead || prey.engulfed) return;
                double contact_angle = std::atan2(normal_to_prey.y, normal_to_prey.x);
                double engulfed_area = 0.0;
                for (std::uint64_t eid : pred.engulfed_prey) {
                    auto eit = cells_.find(eid);
                    if (eit != cells_.end()) engulfed_area += eit->second.area();
                }
                const Body& pbody = physics_.bodies.at(pid);
                for (std::uint32_t n = 0; n < pred.nodes.size(); ++n) {
                    const auto& node = pred.nodes[n];
                    if (!node.attachment ||
                        node.attachment->kind != AttachmentKind::Phagoreceptor)
                        continue;
                    if (engulf_admissible(pred.area(), engulfed_area, prey.area(),
                                          node.control[0] > 0.0, node.control[1] > 0.0, prey.kind,
                                          node_world_angle(node, pbody.angle), contact_angle,
                                          cfg_.nodes.phago_accept_deg, cfg_.nodes.phago_capacity)) {
                        attempts.push_back({pid, vid, n});
                        return;
                    }
                }
            };
            try_pair(ct.a, ct.b, ct.normal);
            try_pair(ct.b, ct.a, -ct.normal);
        }
        std::sort(attempts.begin(), attempts.end(), [](const Attempt& a, const Attempt& b) {
            return a.predator != b.predator ? a.predator < b.predator : a.prey < b.prey;
        });
        for (const auto& at : attempts) {
            Cell& pred = cells_.at(at.predator);
            Cell& prey = cells_.at(at.prey);
            if (prey.engulfed || prey.dead || pred.dead) continue;
            // capacity may have filled up earlier in this pass
            double engulfed_area = 0.0;
            for (std::uint64_t eid : pred.engulfed_prey) {
                auto eit = cells_.find(eid);
                if (eit != cells_.end()) engulfed_area += eit->second.area();
            }
            if (engulfed_area + prey.area() > cfg_.nodes.phago_capacity * pred.area()) continue;
            prey.engulfed = true;
            prey.engulfed_by = pred.id;
            prey.engulf_offset = prey.pos - pred.pos;
            physics_.remove_body(prey.id);
            pred.engulfed_prey.push_back(prey.id);
            pred.nodes[at.node].attachment->prey_id = prey.id;
        }
    }

    void resolve_spikes(double dt) {
        for (auto& [id, c] : cells_) {
            if (!c.is_protozoan() || c.dead || c.engulfed) continue;
            const Body& body = physics_.bodies.at(id);
            for (auto& node : c.nodes) {
                if (!node.attachment || node.attachment->kind != AttachmentKind::Spike) continue;
                double ext = node.attachment->spike_extension;
                if (ext <= 0.05) continue;
                Vec2 root = node_world_position(c, node, body.angle);
                Vec2 dir = from_angle(body.angle + node.angle);
                Vec2 tip = root + dir * (ext * cfg_.nodes.spike_length_factor * c.radius);
                double best_depth = 0.0;
                CellKind best_kind = CellKind::Plant;
                double dealt = 0.0;
                for (auto& [vid, victim] : cells_) {
                    if (vid == id || victim.dead || victim.engulfed) continue;
                    double depth = victim.radius - length(tip - victim.pos);
                    if (depth <= 0.0) continue;
                    double damage = cfg_.nodes.spike_damage_rate * depth * dt;
                    victim.attr.health -= damage;
                    dealt += damage;
                    if (depth > best_depth) {
                        best_depth = depth;
                        best_kind = victim.kind;
                    }
                }
                if (best_depth > 0.0)
                    node.sensor = {std::min(best_depth, 1.0), prey_kind_code(best_kind),
                                   std::min(dealt * 10.0, 1.0)};
            }
        }
    }

    bool pair_bound(std::uint64_t a, std::uint64_t b) const {
        for (const auto& bind : bindings_)
            if ((bind.cell_a == a && bind.cell_b == b) || (bind.cell_a == b && bind.cell_b == a))
                return true;
        return false;
    }

    // First free completed adhesion receptor facing the partner, in node order.
    std::optional<std::uint32_t> candidate_receptor(const Cell& c, double body_angle,
                                                    Vec2 toward) const {
        double want = std::atan2(toward.y, toward.x);
        double half = cfg_.nodes.adhesion_accept_deg * kPi / 180.0 * 0.5;
        for (std::uint32_t n = 0; n < c.nodes.size(); ++n) {
            const auto& node = c.nodes[n];
            if (!node.attachment || node.attachment->kind != AttachmentKind::AdhesionReceptor)
                continue;
            if (node.attachment->joint_id != 0) continue;  // one binding per receptor
            if (std::abs(wrap_angle(want - node_world_angle(node, body_angle))) > half) continue;
            return n;
        }
        return std::nullopt;
    }

    void resolve_binding_creation(const std::vector<Contact>& contacts) {
        for (const auto& ct : contacts) {
            auto ait = cells_.find(ct.a);
            auto bit = cells_.find(ct.b);
            if (ait == cells_.end() || bit == cells_.end()) continue;
            Cell& a = ait->second;
            Cell& b = bit->second;
            if (!a.is_protozoan() || !b.is_protozoan()) continue;
            if (a.dead || b.dead || a.engulfed || b.engulfed) continue;
            if (pair_bound(a.id, b.id)) continue;
            const Body& ba = physics_.bodies.at(a.id);
            const Body& bb = physics_.bodies.at(b.id);
            auto na = candidate_receptor(a, ba.angle, b.pos - a.pos);
            if (!na) continue;
            auto nb = candidate_receptor(b, bb.angle, a.pos - b.pos);
            if (!nb) continue;
            // joint anchored at the closest surface points of each cell
            Vec2 dir = normalized(b.pos - a.pos);
            Vec2 anchor_a = rotated(dir * a.radius, -ba.angle);
            Vec2 anchor_b = rotated(-dir * b.radius, -bb.angle);
            std::uint64_t jid = next_joint_++;
            physics_.add_joint(jid, a.id, b.id, anchor_a, anchor_b);
            bindings_.push_back({jid, a.id, *na, b.id, *nb});
            a.nodes[*na].attachment->joint_id = jid;
            a.nodes[*na].attachment->bound_cell = b.id;
            a.nodes[*na].attachment->bound_node = *nb;
            b.nodes[*nb].attachment->joint_id = jid;
            b.nodes[*nb].attachment->bound_cell = a.id;
            b.nodes[*nb].attachment->bound_node = *na;
        }
    }

    void resolve_binding_transfer(double dt) {
        double cap = cfg_.nodes.transfer_max_rate * dt;
        for (const auto& bind : bindings_) {
            Cell& a = cells_.at(bind.cell_a);
            Cell& b = cells_.at(bind.cell_b);
            SurfaceNode& na = a.nodes[bind.node_a];
            SurfaceNode& nb = b.nodes[bind.node_b];
            // each side reads exactly the partner's outgoing triple
            na.sensor = nb.control;
            nb.sensor = na.control;
            double flow_m = std::clamp((a.attr.construction_mass - b.attr.construction_mass) * 0.5,
                                       -cap, cap);
            a.attr.construction_mass -= flow_m;
            b.attr.construction_mass += flow_m;
            double flow_e = std::clamp((a.attr.energy - b.attr.energy) * 0.5, -cap, cap);
            a.attr.energy -= flow_e;
            b.attr.energy += flow_e;
        }
    }

    void process_engulfed_prey(double dt) {
        std::vector<std::uint64_t> fully_drained;
        for (auto& [id, pred] : cells_) {
            if (pred.engulfed_prey.empty() || pred.dead) continue;
            for (std::uint64_t prey_id : pred.engulfed_prey) {
                auto it = cells_.find(prey_id);
                if (it == cells_.end()) continue;
                Cell& prey = it->second;
                prey.engulf_offset *= std::max(0.0, 1.0 - cfg_.nodes.engulf_pull_rate * dt);
                prey.pos = pred.pos + prey.engulf_offset;
                prey.attr.health -= cfg_.nodes.engulf_kill_rate * dt;

                double body_mass = prey.body_mass(cfg_.physics.density);
                double dm = std::min(cfg_.nodes.engulf_drain_rate * dt, body_mass);
                bool finished = dm >= body_mass - 1e-9;
                double share = finished ? 1.0 : dm / body_mass;
                double& food = prey.kind == CellKind::Meat ? pred.attr.meat_food
                                                           : pred.attr.plant_food;
                food += dm;
                // stores ride along in proportion to the drained body mass
                pred.attr.energy += share * prey.attr.energy;
                prey.attr.energy -= share * prey.attr.energy;
                pred.attr.construction_mass += share * prey.attr.construction_mass;
                prey.attr.construction_mass -= share * prey.attr.construction_mass;
                pred.attr.plant_food += share * prey.attr.plant_food;
                prey.attr.plant_food -= share * prey.attr.plant_food;
                pred.attr.meat_food += share * prey.attr.meat_food;
                prey.attr.meat_food -= share * prey.attr.meat_food;
                for (std::size_t m = 0; m < prey.attr.molecules.size(); ++m) {
                    pred.attr.molecules[m] += share * prey.attr.molecules[m];
                    prey.attr.molecules[m] -= share * prey.attr.molecules[m];
                }
                if (finished) {
                    prey.radius = 0.0;
                    fully_drained.push_back(prey_id);
                } else {
                    double new_area = (body_mass - dm) / (cfg_.physics.density * kPi);
                    prey.radius = std::sqrt(std::max(new_area, 0.0));
                }
            }
        }
        for (std::uint64_t id : fully_drained) {
            auto it = cells_.find(id);
            if (it == cells_.end()) continue;
            std::uint64_t pred_id = it->second.engulfed_by;
            auto pit = cells_.find(pred_id);
            if (pit != cells_.end()) {
                auto& list = pit->second.engulfed_prey;
                list.erase(std::remove(list.begin(), list.end(), id), list.end());
                for (auto& node : pit->second.nodes)
                    if (node.attachment && node.attachment->prey_id == id)
                        node.attachment->prey_id = 0;
            }
            lineage_.push_back({tick_, false, id, pred_id, it->second.generation});
            cells_.erase(it);
        }
    }

    // --- death and division ----------------------------------------------------

    void release_prey_of(Cell& pred) {
        for (std::uint64_t prey_id : pred.engulfed_prey) {
            auto it = cells_.find(prey_id);
            if (it == cells_.end()) continue;
            Cell& prey = it->second;
            prey.engulfed = false;
            prey.engulfed_by = 0;
            if (prey.radius < cfg_.cell.radius_min) prey.radius = cfg_.cell.radius_min;
            physics_.add_disc(prey.id, prey.pos, prey.radius, cfg_.physics.density, prey.colour);
        }
        pred.engulfed_prey.clear();
    }

    void dissolve_bindings_of(std::uint64_t cell_id) {
        for (auto it = bindings_.begin(); it != bindings_.end();) {
            if (it->cell_a != cell_id && it->cell_b != cell_id) {
                ++it;
                continue;
            }
            physics_.remove_joint(it->joint_id);
            for (auto [cid, nidx] : {std::pair{it->cell_a, it->node_a}, {it->cell_b, it->node_b}}) {
                auto cit = cells_.find(cid);
                if (cit == cells_.end()) continue;
                auto& nodes = cit->second.nodes;
                if (nidx < nodes.size() && nodes[nidx].attachment) {
                    nodes[nidx].attachment->joint_id = 0;
                    nodes[nidx].attachment->bound_cell = 0;
                    nodes[nidx].attachment->bound_node = 0;
                }
            }
            it = bindings_.erase(it);
        }
    }

    // Removes a cell. Dead protozoa leave meat cells carrying the configured
    // fraction of stores and body mass; the remainder goes to the decay sink.
    void kill_cell(std::uint64_t id, bool leave_meat) {
        Cell& c = cells_.at(id);
        c.dead = true;
        dissolve_bindings_of(id);
        release_prey_of(c);

        double body_mass = c.body_mass(cfg_.physics.density);
        double stored = c.attr.stored_mass();
        double energy = c.attr.energy;

        if (leave_meat && c.is_protozoan()) {
            double f = cfg_.cell.death_keep_fraction;
            int k = std::clamp(static_cast<int>(std::floor(c.radius / 0.25)), 1, 4);
            double meat_area = f * c.area() / k;
            double meat_r = std::sqrt(meat_area / kPi);
            double phase = c.rng.uniform(0.0, kTwoPi);
            double ring = std::max(0.0, c.radius - meat_r);
            for (int i = 0; i < k; ++i) {
                Vec2 pos = c.pos + from_angle(phase + kTwoPi * i / k) * (ring * 0.6);
                Cell& meat = spawn_meat(pos, meat_r, id);
                meat.attr.energy = f * energy / k;
                meat.attr.construction_mass = f * c.attr.construction_mass / k;
                meat.attr.plant_food = f * c.attr.plant_food / k;
                meat.attr.meat_food = f * c.attr.meat_food / k;
                for (std::size_t m = 0; m < meat.attr.molecules.size(); ++m)
                    meat.attr.molecules[m] = f * c.attr.molecules[m] / k;
            }
            ledger_.decay_mass += (1.0 - f) * (stored + body_mass);
            ledger_.decay_energy += (1.0 - f) * energy;
        } else {
            ledger_.decay_mass += stored + body_mass;
            ledger_.decay_energy += energy;
        }
        lineage_.push_back({tick_, false, id, cells_.at(id).parent_id, cells_.at(id).generation});
        physics_.remove_body(id);
        cells_.erase(id);
    }

    void apply_division(std::uint64_t id) {
        Cell& parent = cells_.at(id);
        dissolve_bindings_of(id);
        release_prey_of(parent);
        bool mutate = parent.is_protozoan();
        DivisionPlan plan = divide(parent, parent.rng, next_innovation_, cfg_, mutate);

        Vec2 parent_vel = physics_.bodies.at(id).vel;
        CellKind kind = parent.kind;
        Rgb plant_colour = parent.base_colour;
        std::uint32_t child_gen = parent.generation + 1;
        std::uint64_t parent_id = id;

        ledger_.decay_mass += plan.sink_mass;
        ledger_.decay_energy += plan.sink_energy;

        physics_.remove_body(id);
        lineage_.push_back({tick_, false, id, parent.parent_id, parent.generation});
        std::vector<DivisionPlan::Child>& children = plan.children;
        cells_.erase(id);

        for (auto& child : children) {
            Cell* cp = nullptr;
            if (kind == CellKind::Plant) {
                cp = &spawn_plant(child.pos, child.radius, plant_colour, parent_id, child_gen);
            } else {
                cp = &spawn_protozoan(child.pos, child.radius, std::move(child.genome), parent_id,
                                      child_gen);
            }
            cp->attr.energy = child.energy;
            cp->attr.construction_mass = child.construction_mass;
            cp->attr.plant_food = child.plant_food;
            cp->attr.meat_food = child.meat_food;
            cp->attr.molecules = child.molecules;
            physics_.bodies.at(cp->id).vel = parent_vel;
        }
    }

    // --- snapshot helpers -------------------------------------------------------

    static void write_cell(ByteWriter& w, const Cell& c, const Body* body) {
        w.u64(c.id);
        w.u8(static_cast<std::uint8_t>(c.kind));
        w.f64(c.pos.x); w.f64(c.pos.y);
        Vec2 vel = body ? body->vel : c.vel;
        double angle = body ? body->angle : c.angle;
        double angvel = body ? body->angvel : c.angvel;
        w.f64(vel.x); w.f64(vel.y);
        w.f64(angle);
        w.f64(angvel);
        w.f64(c.radius);
        for (double v : {c.colour.r, c.colour.g, c.colour.b, c.base_colour.r, c.base_colour.g,
                         c.base_colour.b})
            w.f64(v);
        w.u32(c.generation);
        w.u64(c.parent_id);
        w.u64(c.birth_tick);
        w.f64(c.age);
        for (double v : {c.attr.health, c.attr.energy, c.attr.construction_mass, c.attr.plant_food,
                         c.attr.meat_food})
            w.f64(v);
        w.f64_vec(c.attr.molecules);
        for (double v : {c.attr.digestion_rate, c.attr.growth_rate, c.attr.repair_priority,
                         c.division_threshold, c.production_signature, c.production_rate})
            w.f64(v);
        w.u64(c.rng.key);
        w.u64(c.rng.counter);
        w.u8(c.engulfed ? 1 : 0);
        w.u64(c.engulfed_by);
        w.f64(c.engulf_offset.x); w.f64(c.engulf_offset.y);
        w.u64(c.engulfed_prey.size());
        for (std::uint64_t p : c.engulfed_prey) w.u64(p);

        if (c.kind != CellKind::Protozoan) return;
        const Genome& g = c.genome;
        w.u32(g.next_neuron_id);
        w.u64(g.neurons.size());
        for (const auto& n : g.neurons) {
            w.u32(n.id);
            w.u8(static_cast<std::uint8_t>(n.kind));
        }
        w.u64(g.connections.size());
        for (const auto& conn : g.connections) {
            w.u32(conn.src);
            w.u32(conn.dst);
            w.f64(conn.weight);
            w.u8(conn.enabled ? 1 : 0);
            w.u64(conn.innovation);
        }
        w.u64(g.input_neurons.size());
        for (std::uint32_t v : g.input_neurons) w.u32(v);
        w.u64(g.output_neurons.size());
        for (std::uint32_t v : g.output_neurons) w.u32(v);
        w.f64_vec(g.traits.node_angles);
        for (double v : {g.traits.colour.r, g.traits.colour.g, g.traits.colour.b}) w.f64(v);
        w.f64_vec(c.grn.values);
        w.u64(c.nodes.size());
        for (const auto& node : c.nodes) {
            w.f64(node.angle);
            for (double p : node.progress) w.f64(p);
            for (double v : node.control) w.f64(v);
            w.f64(node.signature);
            for (double v : node.sensor) w.f64(v);
            w.u8(node.attachment ? 1 : 0);
            if (node.attachment) {
                w.u8(static_cast<std::uint8_t>(node.attachment->kind));
                w.f64(node.attachment->spike_extension);
                w.u64(node.attachment->bound_cell);
                w.u64(node.attachment->bound_node);
                w.u64(node.attachment->joint_id);
                w.u64(node.attachment->prey_id);
            }
        }
    }

    static Cell read_cell(ByteReader& r, const SimConfig& cfg) {
        Cell c;
        c.id = r.u64();
        c.kind = static_cast<CellKind>(r.u8());
        c.pos = {r.f64(), r.f64()};
        c.vel = {r.f64(), r.f64()};
        c.angle = r.f64();
        c.angvel = r.f64();
        c.radius = r.f64();
        c.colour = {r.f64(), r.f64(), r.f64()};
        c.base_colour = {r.f64(), r.f64(), r.f64()};
        c.generation = r.u32();
        c.parent_id = r.u64();
        c.birth_tick = r.u64();
        c.age = r.f64();
        c.attr.health = r.f64();
        c.attr.energy = r.f64();
        c.attr.construction_mass = r.f64();
        c.attr.plant_food = r.f64();
        c.attr.meat_food = r.f64();
        c.attr.molecules = r.f64_vec();
        if (c.attr.molecules.size() != static_cast<std::size_t>(cfg.sim.molecule_count))
            throw SnapshotError("snapshot molecule store size mismatch");
        c.attr.digestion_rate = r.f64();
        c.attr.growth_rate = r.f64();
        c.attr.repair_priority = r.f64();
        c.division_threshold = r.f64();
        c.production_signature = r.f64();
        c.production_rate = r.f64();
        c.rng.key = r.u64();
        c.rng.counter = r.u64();
        c.engulfed = r.u8() != 0;
        c.engulfed_by = r.u64();
        c.engulf_offset = {r.f64(), r.f64()};
        std::uint64_t n_prey = r.count();
        for (std::uint64_t i = 0; i < n_prey; ++i) c.engulfed_prey.push_back(r.u64());

        if (c.kind != CellKind::Protozoan) return c;
        Genome& g = c.genome;
        g.next_neuron_id = r.u32();
        std::uint64_t n_neurons = r.count();
        for (std::uint64_t i = 0; i < n_neurons; ++i) {
            Neuron n;
            n.id = r.u32();
            n.kind = static_cast<NeuronKind>(r.u8());
            g.neurons.push_back(n);
        }
        std::uint64_t n_conns = r.count();
        for (std::uint64_t i = 0; i < n_conns; ++i) {
            Connection conn;
            conn.src = r.u32();
            conn.dst = r.u32();
            conn.weight = r.f64();
            conn.enabled = r.u8() != 0;
            conn.innovation = r.u64();
            g.connections.push_back(conn);
        }
        std::uint64_t n_in = r.count();
        for (std::uint64_t i = 0; i < n_in; ++i) g.input_neurons.push_back(r.u32());
        std::uint64_t n_out = r.count();
        for (std::uint64_t i = 0; i < n_out; ++i) g.output_neurons.push_back(r.u32());
        g.traits.node_angles = r.f64_vec();
        g.traits.colour = {r.f64(), r.f64(), r.f64()};
        c.grn.values = r.f64_vec();
        if (c.grn.values.size() != g.neurons.size())
            throw SnapshotError("snapshot GRN state size mismatch");
        std::uint64_t n_nodes = r.count();
        for (std::uint64_t i = 0; i < n_nodes; ++i) {
            SurfaceNode node;
            node.angle = r.f64();
            for (double& p : node.progress) p = r.f64();
            for (double& v : node.control) v = r.f64();
            node.signature = r.f64();
            for (double& v : node.sensor) v = r.f64();
            if (r.u8() != 0) {
                Attachment a;
                a.kind = static_cast<AttachmentKind>(r.u8());
                a.spike_extension = r.f64();
                a.bound_cell = r.u64();
                a.bound_node = r.u64();
                a.joint_id = r.u64();
                a.prey_id = r.u64();
                node.attachment = a;
            }
            c.nodes.push_back(node);
        }
        if (c.nodes.size() != g.traits.node_angles.size())
            throw SnapshotError("snapshot node list size mismatch");
        return c;
    }
};

} // namespace protolife
