#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace protolife {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every tunable parameter in one place. Field defaults are the documented
// defaults; the schema table at the bottom of this file drives parsing,
// canonical serialization, and range validation.
struct SimConfig {
    struct Sim {
        std::uint64_t master_seed = 1;
        double physics_dt = 1.0 / 60.0;          // seconds per physics step
        std::int64_t grn_tick_interval = 5;      // physics steps per GRN tick
        std::int64_t grid_tick_interval = 4;     // physics steps per chem-grid tick
        std::int64_t stats_interval = 200;       // physics steps per stats sample
        std::int64_t molecule_count = 128;       // T_mol: signature lattice size
        std::int64_t attachment_type_count = 5;  // T: fixed by the attachment list
        std::int64_t chem_grid_size = 1024;      // N for the N x N chemical field
        double world_radius = 50.0;              // metres; beyond is the void
        double void_decay_rate = 0.02;           // health/sec per metre beyond the rim
    } sim;

    struct Physics {
        double restitution = 0.1;
        double density = 1.0;             // kg/m^2, mass = density * pi * r^2
        double c_lin = 2.0;               // linear drag, force per unit velocity
        double angular_damping = 1.0;     // 1/sec decay on angular velocity
        double drag_scale_min = 0.35;     // lower bound of the group drag scale
        double slop = 1e-3;               // allowed penetration, metres
        double baumgarte = 0.2;           // positional correction factor
        double contact_margin = 0.05;     // near-touch gap still reported as contact
        double v_max = 15.0;              // hard speed clamp, m/s
        double joint_stiffness = 30.0;    // N/m
        double joint_damping_ratio = 1.0;
        double joint_angular_stiffness = 2.0;  // N*m/rad
        double joint_angular_damping_ratio = 1.0;
        double broadphase_cell = 4.0;     // spatial hash cell size, metres
    } physics;

    struct Chem {
        double mass_per_channel_area = 2.0;  // mass per (channel value * m^2)
        double deposit_fraction = 0.4;       // blend toward cell colour per grid tick
        double deposit_radius_factor = 2.5;  // glow footprint in cell radii
        double extract_fraction = 0.02;      // share of dominant channel taken per pass
        double colour_fade = 0.02;           // cell colour -> grey per deposit
        double classify_threshold = 0.5;     // dominant channel must exceed this
        double classify_multiplier = 1.5;    // ... and this times the other channels
        bool classify_additive = false;      // alternative reading: dominant > other + multiplier
    } chem;

    struct Grn {
        double sigma_init = 1.0;          // stddev of initial control weights
        double p_weight_perturb = 0.8;
        double weight_perturb_sigma = 0.1;
        double p_weight_reset = 0.05;
        double p_add_connection = 0.05;
        double p_add_neuron = 0.02;
        double p_toggle_enable = 0.01;
        double growth_rate_max = 0.05;    // m/sec ceiling for the growth output
        double digestion_rate_max = 0.5;  // mass/sec ceiling
        double production_rate_max = 3.0; // molecule units/sec ceiling
    } grn;

    struct Cell {
        double health_decay = 0.002;           // health/sec baseline
        double repair_mass_per_health = 10.0;  // 1 mass per 0.1 health
        double repair_energy_per_health = 20.0;
        double repair_rate_max = 0.05;         // health/sec ceiling on repair
        double repair_priority_default = 0.25; // favours growth until the GRN says otherwise
        double energy_density_plant = 1.0;     // energy per digested mass unit
        double energy_density_meat = 2.0;
        double death_keep_fraction = 0.6;      // share of stores meat cells inherit
        double meat_lifetime = 120.0;          // seconds until a meat cell despawns
        double molecule_production_cost = 0.1; // energy per molecule mass unit
        double growth_energy_per_mass = 0.5;   // energy per body mass unit grown
        double radius_min = 0.1;
        double radius_max = 2.0;
        double energy_input_scale = 5.0;       // squash scale for GRN store inputs
        double generation_input_scale = 20.0;
        double base_thrust = 3.0;              // N at full request, bare node
        double base_torque = 0.5;              // N*m at full request, bare node
        double flagellum_multiplier = 5.0;     // flagella budget vs the default
        double thrust_energy_rate = 0.005;     // energy per N per second
        double torque_energy_rate = 0.005;     // energy per N*m per second
        double plant_photo_mass_rate = 0.08;   // construction mass/sec
        double plant_photo_energy_rate = 0.3;  // energy/sec
        double plant_growth_rate = 0.005;      // m/sec, fixed (plants have no GRN)
        double plant_div_radius = 0.7;         // metres, fixed division threshold
        double plant_shade_contacts = 2.0;     // contacts at which plant growth stops
        double plant_repair_priority = 0.5;
        double plant_digestion_rate = 0.1;
        double plant_colour_regen = 0.05;      // colour -> base colour per second
    } cell;

    struct Nodes {
        double d_critical = 0.1;          // critical matching distance, 1/(2T)
        double build_mass = 2.0;          // construction project requirements
        double build_energy = 4.0;
        double build_molecules = 1.0;
        double build_time = 10.0;         // seconds at full drive
        std::int64_t photo_rays = 8;
        double photo_cone_deg = 90.0;
        double photo_range_radii = 10.0;  // max ray range in cell radii
        double phago_accept_deg = 60.0;   // full cone about the node angle
        double phago_capacity = 0.8;      // engulfed prey area / predator area cap
        double engulf_drain_rate = 0.2;   // prey mass/sec into the predator
        double engulf_kill_rate = 0.1;    // prey health/sec while engulfed
        double engulf_pull_rate = 1.0;    // prey offset decay, 1/sec
        double adhesion_accept_deg = 90.0;
        double transfer_max_rate = 0.5;   // mass or energy/sec across a binding
        double spike_length_factor = 0.6; // spike length in cell radii
        double spike_damage_rate = 0.5;   // health/sec per metre of penetration
        double spike_extend_rate = 2.0;   // extension fraction/sec
    } nodes;

    struct Evolution {
        double p_node_add = 0.02;
        double p_node_del = 0.02;
        double p_node_angle = 0.05;
        double node_angle_sigma = 0.3;
        double p_colour = 0.05;
        double colour_step = 0.05;
        double r_min_div = 0.5;           // division threshold output range
        double r_max_div = 2.0;
        double division_overhead = 0.1;   // store fraction routed to the decay sink
    } evolution;

    struct Engine {
        std::int64_t n_plants = 150;
        std::int64_t n_protozoa = 60;
        std::int64_t proto_nodes_min = 3;
        std::int64_t proto_nodes_max = 5;
        std::int64_t n_formations = 12;
        std::int64_t formation_tri_min = 3;
        std::int64_t formation_tri_max = 12;
        double formation_edge_min = 1.5;  // metres, triangle edge scale
        double formation_edge_max = 4.0;
        double corridor_min_factor = 2.0; // corridors >= this times max cell diameter
        double init_radius_plant = 0.4;
        double init_radius_proto = 0.5;
        double init_energy = 60.0;
        double init_mass = 30.0;
        double init_molecule_stock = 30.0;  // founders' stores, spread over the lattice
        double rock_colour_r = 0.42;
        double rock_colour_g = 0.40;
        double rock_colour_b = 0.38;
        double plant_colour_jitter = 0.08;
    } engine;

    // Derived helpers.
    double max_cell_diameter() const { return 2.0 * cell.radius_max; }
    double corridor_min() const { return engine.corridor_min_factor * max_cell_diameter(); }

    void validate() const;
    std::string serialize() const;
    static SimConfig parse(std::string_view text);
};

namespace config_detail {

enum class KeyType { U64, I64, F64, Bool };

struct KeyDef {
    const char* name;
    KeyType type;
    void* (*field)(SimConfig&);
    double lo;
    double hi;
};

// Declaration order here is the canonical serialization order.
inline const std::vector<KeyDef>& schema() {
    static const std::vector<KeyDef> defs = {
#define PL_KEY(name, type, member, lo, hi) \
    {name, KeyType::type, [](SimConfig& c) -> void* { return &c.member; }, lo, hi}
        PL_KEY("sim.master_seed", U64, sim.master_seed, 0, 0),
        PL_KEY("sim.physics_dt", F64, sim.physics_dt, 1e-6, 1.0),
        PL_KEY("sim.grn_tick_interval", I64, sim.grn_tick_interval, 1, 1e9),
        PL_KEY("sim.grid_tick_interval", I64, sim.grid_tick_interval, 1, 1e9),
        PL_KEY("sim.stats_interval", I64, sim.stats_interval, 1, 1e9),
        PL_KEY("sim.molecule_count", I64, sim.molecule_count, 2, 1e6),
        PL_KEY("sim.attachment_type_count", I64, sim.attachment_type_count, 5, 5),
        PL_KEY("sim.chem_grid_size", I64, sim.chem_grid_size, 16, 16384),
        PL_KEY("sim.world_radius", F64, sim.world_radius, 1.0, 1e6),
        PL_KEY("sim.void_decay_rate", F64, sim.void_decay_rate, 0.0, 1e6),
        PL_KEY("physics.restitution", F64, physics.restitution, 0.0, 1.0),
        PL_KEY("physics.density", F64, physics.density, 1e-9, 1e9),
        PL_KEY("physics.c_lin", F64, physics.c_lin, 0.0, 1e9),
        PL_KEY("physics.angular_damping", F64, physics.angular_damping, 0.0, 1e9),
        PL_KEY("physics.drag_scale_min", F64, physics.drag_scale_min, 0.0, 1.0),
        PL_KEY("physics.slop", F64, physics.slop, 0.0, 1.0),
        PL_KEY("physics.baumgarte", F64, physics.baumgarte, 0.0, 1.0),
        PL_KEY("physics.contact_margin", F64, physics.contact_margin, 0.0, 10.0),
        PL_KEY("physics.v_max", F64, physics.v_max, 0.1, 1e6),
        PL_KEY("physics.joint_stiffness", F64, physics.joint_stiffness, 0.0, 1e9),
        PL_KEY("physics.joint_damping_ratio", F64, physics.joint_damping_ratio, 0.0, 100.0),
        PL_KEY("physics.joint_angular_stiffness", F64, physics.joint_angular_stiffness, 0.0, 1e9),
        PL_KEY("physics.joint_angular_damping_ratio", F64, physics.joint_angular_damping_ratio, 0.0, 100.0),
        PL_KEY("physics.broadphase_cell", F64, physics.broadphase_cell, 0.1, 1e6),
        PL_KEY("chem.mass_per_channel_area", F64, chem.mass_per_channel_area, 1e-9, 1e9),
        PL_KEY("chem.deposit_fraction", F64, chem.deposit_fraction, 0.0, 1.0),
        PL_KEY("chem.deposit_radius_factor", F64, chem.deposit_radius_factor, 0.1, 100.0),
        PL_KEY("chem.extract_fraction", F64, chem.extract_fraction, 0.0, 1.0),
        PL_KEY("chem.colour_fade", F64, chem.colour_fade, 0.0, 1.0),
        PL_KEY("chem.classify_threshold", F64, chem.classify_threshold, 0.0, 1.0),
        PL_KEY("chem.classify_multiplier", F64, chem.classify_multiplier, 1.0, 100.0),
        PL_KEY("chem.classify_additive", Bool, chem.classify_additive, 0, 0),
        PL_KEY("grn.sigma_init", F64, grn.sigma_init, 0.0, 100.0),
        PL_KEY("grn.p_weight_perturb", F64, grn.p_weight_perturb, 0.0, 1.0),
        PL_KEY("grn.weight_perturb_sigma", F64, grn.weight_perturb_sigma, 0.0, 100.0),
        PL_KEY("grn.p_weight_reset", F64, grn.p_weight_reset, 0.0, 1.0),
        PL_KEY("grn.p_add_connection", F64, grn.p_add_connection, 0.0, 1.0),
        PL_KEY("grn.p_add_neuron", F64, grn.p_add_neuron, 0.0, 1.0),
        PL_KEY("grn.p_toggle_enable", F64, grn.p_toggle_enable, 0.0, 1.0),
        PL_KEY("grn.growth_rate_max", F64, grn.growth_rate_max, 0.0, 1e6),
        PL_KEY("grn.digestion_rate_max", F64, grn.digestion_rate_max, 0.0, 1e6),
        PL_KEY("grn.production_rate_max", F64, grn.production_rate_max, 0.0, 1e6),
        PL_KEY("cell.health_decay", F64, cell.health_decay, 0.0, 1e6),
        PL_KEY("cell.repair_mass_per_health", F64, cell.repair_mass_per_health, 0.0, 1e9),
        PL_KEY("cell.repair_energy_per_health", F64, cell.repair_energy_per_health, 0.0, 1e9),
        PL_KEY("cell.repair_rate_max", F64, cell.repair_rate_max, 0.0, 1e6),
        PL_KEY("cell.repair_priority_default", F64, cell.repair_priority_default, 0.0, 1.0),
        PL_KEY("cell.energy_density_plant", F64, cell.energy_density_plant, 0.0, 1e9),
        PL_KEY("cell.energy_density_meat", F64, cell.energy_density_meat, 0.0, 1e9),
        PL_KEY("cell.death_keep_fraction", F64, cell.death_keep_fraction, 0.0, 1.0),
        PL_KEY("cell.meat_lifetime", F64, cell.meat_lifetime, 0.1, 1e9),
        PL_KEY("cell.molecule_production_cost", F64, cell.molecule_production_cost, 0.0, 1e9),
        PL_KEY("cell.growth_energy_per_mass", F64, cell.growth_energy_per_mass, 0.0, 1e9),
        PL_KEY("cell.radius_min", F64, cell.radius_min, 1e-3, 1e6),
        PL_KEY("cell.radius_max", F64, cell.radius_max, 1e-3, 1e6),
        PL_KEY("cell.energy_input_scale", F64, cell.energy_input_scale, 1e-9, 1e9),
        PL_KEY("cell.generation_input_scale", F64, cell.generation_input_scale, 1e-9, 1e9),
        PL_KEY("cell.base_thrust", F64, cell.base_thrust, 0.0, 1e9),
        PL_KEY("cell.base_torque", F64, cell.base_torque, 0.0, 1e9),
        PL_KEY("cell.flagellum_multiplier", F64, cell.flagellum_multiplier, 1.0, 1e6),
        PL_KEY("cell.thrust_energy_rate", F64, cell.thrust_energy_rate, 0.0, 1e9),
        PL_KEY("cell.torque_energy_rate", F64, cell.torque_energy_rate, 0.0, 1e9),
        PL_KEY("cell.plant_photo_mass_rate", F64, cell.plant_photo_mass_rate, 0.0, 1e9),
        PL_KEY("cell.plant_photo_energy_rate", F64, cell.plant_photo_energy_rate, 0.0, 1e9),
        PL_KEY("cell.plant_growth_rate", F64, cell.plant_growth_rate, 0.0, 1e6),
        PL_KEY("cell.plant_div_radius", F64, cell.plant_div_radius, 1e-3, 1e6),
        PL_KEY("cell.plant_shade_contacts", F64, cell.plant_shade_contacts, 0.1, 1e6),
        PL_KEY("cell.plant_repair_priority", F64, cell.plant_repair_priority, 0.0, 1.0),
        PL_KEY("cell.plant_digestion_rate", F64, cell.plant_digestion_rate, 0.0, 1e6),
        PL_KEY("cell.plant_colour_regen", F64, cell.plant_colour_regen, 0.0, 1e6),
        PL_KEY("nodes.d_critical", F64, nodes.d_critical, 1e-9, 0.5),
        PL_KEY("nodes.build_mass", F64, nodes.build_mass, 0.0, 1e9),
        PL_KEY("nodes.build_energy", F64, nodes.build_energy, 0.0, 1e9),
        PL_KEY("nodes.build_molecules", F64, nodes.build_molecules, 0.0, 1e9),
        PL_KEY("nodes.build_time", F64, nodes.build_time, 1e-3, 1e9),
        PL_KEY("nodes.photo_rays", I64, nodes.photo_rays, 1, 1024),
        PL_KEY("nodes.photo_cone_deg", F64, nodes.photo_cone_deg, 0.0, 360.0),
        PL_KEY("nodes.photo_range_radii", F64, nodes.photo_range_radii, 0.1, 1e6),
        PL_KEY("nodes.phago_accept_deg", F64, nodes.phago_accept_deg, 0.0, 360.0),
        PL_KEY("nodes.phago_capacity", F64, nodes.phago_capacity, 0.0, 1.0),
        PL_KEY("nodes.engulf_drain_rate", F64, nodes.engulf_drain_rate, 0.0, 1e9),
        PL_KEY("nodes.engulf_kill_rate", F64, nodes.engulf_kill_rate, 0.0, 1e9),
        PL_KEY("nodes.engulf_pull_rate", F64, nodes.engulf_pull_rate, 0.0, 1e9),
        PL_KEY("nodes.adhesion_accept_deg", F64, nodes.adhesion_accept_deg, 0.0, 360.0),
        PL_KEY("nodes.transfer_max_rate", F64, nodes.transfer_max_rate, 0.0, 1e9),
        PL_KEY("nodes.spike_length_factor", F64, nodes.spike_length_factor, 0.0, 10.0),
        PL_KEY("nodes.spike_damage_rate", F64, nodes.spike_damage_rate, 0.0, 1e9),
        PL_KEY("nodes.spike_extend_rate", F64, nodes.spike_extend_rate, 0.0, 1e9),
        PL_KEY("evolution.p_node_add", F64, evolution.p_node_add, 0.0, 1.0),
        PL_KEY("evolution.p_node_del", F64, evolution.p_node_del, 0.0, 1.0),
        PL_KEY("evolution.p_node_angle", F64, evolution.p_node_angle, 0.0, 1.0),
        PL_KEY("evolution.node_angle_sigma", F64, evolution.node_angle_sigma, 0.0, 10.0),
        PL_KEY("evolution.p_colour", F64, evolution.p_colour, 0.0, 1.0),
        PL_KEY("evolution.colour_step", F64, evolution.colour_step, 0.0, 1.0),
        PL_KEY("evolution.r_min_div", F64, evolution.r_min_div, 1e-3, 1e6),
        PL_KEY("evolution.r_max_div", F64, evolution.r_max_div, 1e-3, 1e6),
        PL_KEY("evolution.division_overhead", F64, evolution.division_overhead, 0.0, 0.99),
        PL_KEY("engine.n_plants", I64, engine.n_plants, 0, 1e9),
        PL_KEY("engine.n_protozoa", I64, engine.n_protozoa, 0, 1e9),
        PL_KEY("engine.proto_nodes_min", I64, engine.proto_nodes_min, 1, 64),
        PL_KEY("engine.proto_nodes_max", I64, engine.proto_nodes_max, 1, 64),
        PL_KEY("engine.n_formations", I64, engine.n_formations, 0, 1e6),
        PL_KEY("engine.formation_tri_min", I64, engine.formation_tri_min, 1, 1024),
        PL_KEY("engine.formation_tri_max", I64, engine.formation_tri_max, 1, 1024),
        PL_KEY("engine.formation_edge_min", F64, engine.formation_edge_min, 0.01, 1e6),
        PL_KEY("engine.formation_edge_max", F64, engine.formation_edge_max, 0.01, 1e6),
        PL_KEY("engine.corridor_min_factor", F64, engine.corridor_min_factor, 0.0, 1e6),
        PL_KEY("engine.init_radius_plant", F64, engine.init_radius_plant, 1e-3, 1e6),
        PL_KEY("engine.init_radius_proto", F64, engine.init_radius_proto, 1e-3, 1e6),
        PL_KEY("engine.init_energy", F64, engine.init_energy, 0.0, 1e9),
        PL_KEY("engine.init_mass", F64, engine.init_mass, 0.0, 1e9),
        PL_KEY("engine.init_molecule_stock", F64, engine.init_molecule_stock, 0.0, 1e9),
        PL_KEY("engine.rock_colour_r", F64, engine.rock_colour_r, 0.0, 1.0),
        PL_KEY("engine.rock_colour_g", F64, engine.rock_colour_g, 0.0, 1.0),
        PL_KEY("engine.rock_colour_b", F64, engine.rock_colour_b, 0.0, 1.0),
        PL_KEY("engine.plant_colour_jitter", F64, engine.plant_colour_jitter, 0.0, 1.0),
#undef PL_KEY
    };
    return defs;
}

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

inline std::string format_value(const SimConfig& c, const KeyDef& def) {
    void* p = def.field(const_cast<SimConfig&>(c));
    switch (def.type) {
        case KeyType::U64: return std::to_string(*static_cast<std::uint64_t*>(p));
        case KeyType::I64: return std::to_string(*static_cast<std::int64_t*>(p));
        case KeyType::F64: return format_double(*static_cast<double*>(p));
        case KeyType::Bool: return *static_cast<bool*>(p) ? "true" : "false";
    }
    return {};
}

inline void assign_value(SimConfig& c, const KeyDef& def, std::string_view value, int line) {
    void* p = def.field(c);
    auto fail = [&](const char* what) {
        throw ConfigError("config line " + std::to_string(line) + ": key '" + def.name +
                          "': " + what + " '" + std::string(value) + "'");
    };
    switch (def.type) {
        case KeyType::U64: {
            std::uint64_t v{};
            auto [ptr, ec] = std::from_chars(value.begin(), value.end(), v);
            if (ec != std::errc{} || ptr != value.end()) fail("invalid unsigned integer");
            *static_cast<std::uint64_t*>(p) = v;
            break;
        }
        case KeyType::I64: {
            std::int64_t v{};
            auto [ptr, ec] = std::from_chars(value.begin(), value.end(), v);
            if (ec != std::errc{} || ptr != value.end()) fail("invalid integer");
            if (v < static_cast<std::int64_t>(def.lo) || v > static_cast<std::int64_t>(def.hi))
                throw ConfigError("config line " + std::to_string(line) + ": key '" +
                                  std::string(def.name) + "' out of range [" +
                                  format_double(def.lo) + ", " + format_double(def.hi) + "]");
            *static_cast<std::int64_t*>(p) = v;
            break;
        }
        case KeyType::F64: {
            // from_chars for double is incomplete on some libstdc++ versions; strtod is fine here.
            std::string tmp(value);
            char* end = nullptr;
            double v = std::strtod(tmp.c_str(), &end);
            if (end == tmp.c_str() || *end != '\0') fail("invalid number");
            if (v < def.lo || v > def.hi)
                throw ConfigError("config line " + std::to_string(line) + ": key '" +
                                  std::string(def.name) + "' out of range [" +
                                  format_double(def.lo) + ", " + format_double(def.hi) + "]");
            *static_cast<double*>(p) = v;
            break;
        }
        case KeyType::Bool: {
            if (value == "true") *static_cast<bool*>(p) = true;
            else if (value == "false") *static_cast<bool*>(p) = false;
            else fail("invalid bool (want true/false)");
            break;
        }
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace config_detail

inline void SimConfig::validate() const {
    auto check = [](bool ok, const char* msg) {
        if (!ok) throw ConfigError(std::string("config invariant violated: ") + msg);
    };
    check(sim.molecule_count >= sim.attachment_type_count,
          "sim.molecule_count must be >= sim.attachment_type_count");
    check(sim.chem_grid_size >= 16, "sim.chem_grid_size must be >= 16");
    check(sim.physics_dt > 0, "sim.physics_dt must be > 0");
    check(sim.grn_tick_interval >= 1, "sim.grn_tick_interval must be >= 1");
    check(cell.radius_min < cell.radius_max, "cell.radius_min must be < cell.radius_max");
    check(evolution.r_min_div < evolution.r_max_div,
          "evolution.r_min_div must be < evolution.r_max_div");
    check(engine.proto_nodes_min <= engine.proto_nodes_max,
          "engine.proto_nodes_min must be <= engine.proto_nodes_max");
    check(engine.formation_tri_min <= engine.formation_tri_max,
          "engine.formation_tri_min must be <= engine.formation_tri_max");
    check(engine.formation_edge_min <= engine.formation_edge_max,
          "engine.formation_edge_min must be <= engine.formation_edge_max");
}

inline std::string SimConfig::serialize() const {
    std::string out = "# protolife config v1\n";
    std::string_view section;
    for (const auto& def : config_detail::schema()) {
        std::string_view name = def.name;
        std::string_view sec = name.substr(0, name.find('.'));
        if (sec != section) {
            section = sec;
            out += "\n# [";
            out += sec;
            out += "]\n";
        }
        out += name;
        out += " = ";
        out += config_detail::format_value(*this, def);
        out += "\n";
    }
    return out;
}

inline SimConfig SimConfig::parse(std::string_view text) {
    SimConfig cfg;
    const auto& defs = config_detail::schema();
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        std::string_view key = config_detail::trim(line.substr(0, eq));
        std::string_view value = config_detail::trim(line.substr(eq + 1));
        const config_detail::KeyDef* found = nullptr;
        for (const auto& def : defs)
            if (key == def.name) { found = &def; break; }
        if (!found)
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                              std::string(key) + "'");
        config_detail::assign_value(cfg, *found, value, line_no);
    }
    cfg.validate();
    return cfg;
}

} // namespace protolife
