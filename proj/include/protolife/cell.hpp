#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "protolife/config.hpp"
#include "protolife/genome.hpp"
#include "protolife/lock_and_key.hpp"
#include "protolife/rng.hpp"
#include "protolife/vec2.hpp"

namespace protolife {

enum class CellKind : std::uint8_t { Plant = 0, Meat = 1, Protozoan = 2 };

inline constexpr double kDeathHealth = 0.05;     // below this the cell dies
inline constexpr double kDivisionHealthMin = 0.15;  // division needs health > this

// Mass/energy flows that leave or enter the closed cell+grid system. Sources
// and sinks only ever grow; the conservation audit checks
//   delta(total) == sum(sources) - sum(sinks).
struct Ledger {
    // sources
    double photosynthesis_mass = 0.0;
    double photosynthesis_energy = 0.0;
    double digestion_energy = 0.0;  // energy yielded by converting food mass
    // sinks
    double decay_mass = 0.0;        // death remainders, division overhead, despawns
    double decay_energy = 0.0;
    double diffusion_mass = 0.0;    // blur losses at the arena boundary
    double construction_mass = 0.0; // completed/ongoing attachment projects
    double construction_energy = 0.0;
    double repair_mass = 0.0;
    double repair_energy = 0.0;
    double growth_energy = 0.0;
    double production_energy = 0.0; // molecule synthesis costs
    double actuation_energy = 0.0;  // thrust and torque

    double mass_sources() const { return photosynthesis_mass; }
    double mass_sinks() const { return decay_mass + diffusion_mass + construction_mass + repair_mass; }
    double energy_sources() const { return photosynthesis_energy + digestion_energy; }
    double energy_sinks() const {
        return decay_energy + construction_energy + repair_energy + growth_energy +
               production_energy + actuation_energy;
    }
};

struct CellAttributes {
    double health = 1.0;
    double energy = 0.0;
    double construction_mass = 0.0;
    double plant_food = 0.0;
    double meat_food = 0.0;
    std::vector<double> molecules;  // quantity per lattice index i -> signature i/T_mol
    double digestion_rate = 0.0;    // mass/sec, set by the GRN
    double growth_rate = 0.0;       // m/sec, set by the GRN
    double repair_priority = 0.25;

    double molecule_total() const {
        double sum = 0.0;
        for (double q : molecules) sum += q;
        return sum;
    }
    double stored_mass() const {
        return construction_mass + plant_food + meat_food + molecule_total();
    }
};

// Kind-specific runtime state of a completed attachment.
struct Attachment {
    AttachmentKind kind = AttachmentKind::Flagellum;
    double spike_extension = 0.0;   // [0,1]
    std::uint64_t bound_cell = 0;   // adhesion
    std::uint64_t bound_node = 0;
    std::uint64_t joint_id = 0;
    std::uint64_t prey_id = 0;      // phago: most recent engulfed prey still held
    bool operator==(const Attachment&) const = default;
};

// An ordered slot on the cell perimeter: a 4-in/3-out IO channel between the
// GRN and whatever attachment the fuzzy lock-and-key procedure builds there.
struct SurfaceNode {
    double angle = 0.0;  // radians, body-local
    std::optional<Attachment> attachment;
    std::array<double, kAttachmentKinds> progress{};  // per-type construction progress
    std::array<double, 3> control{};  // from the GRN, remapped to [-1,1]
    double signature = 0.0;           // construction signature, [0,1)
    std::array<double, 3> sensor{};   // to the GRN next tick
    bool operator==(const SurfaceNode&) const = default;
};

struct Cell {
    std::uint64_t id = 0;
    CellKind kind = CellKind::Plant;
    CellAttributes attr;
    Rgb colour;        // current rendered colour (fades while depositing)
    Rgb base_colour;   // genetic colour the cell regenerates toward
    std::uint32_t generation = 0;
    std::uint64_t parent_id = 0;
    std::uint64_t birth_tick = 0;
    double age = 0.0;  // seconds, drives meat despawn

    // protozoan-only state
    Genome genome;
    CompiledGrn net;   // rebuilt at birth/restore, not serialized
    GrnState grn;
    std::vector<SurfaceNode> nodes;
    RngStream rng;
    double division_threshold = 0.0;     // radius, set by the GRN
    double production_signature = 0.0;   // lattice-snapped molecule choice
    double production_rate = 0.0;

    // engulfment
    bool engulfed = false;
    std::uint64_t engulfed_by = 0;
    Vec2 engulf_offset;                  // position relative to the predator
    std::vector<std::uint64_t> engulfed_prey;  // predator side, in engulf order

    bool dead = false;

    // body mirror (the physics body is authoritative while one exists; the
    // kinematic fields are only synced across snapshot/restore)
    double radius = 0.0;
    Vec2 pos;
    Vec2 vel;
    double angle = 0.0;
    double angvel = 0.0;

    bool is_protozoan() const { return kind == CellKind::Protozoan; }
    double area() const { return kPi * radius * radius; }
    double body_mass(double density) const { return density * area(); }

    int completed_count(AttachmentKind k) const {
        int n = 0;
        for (const auto& node : nodes)
            if (node.attachment && node.attachment->kind == k) ++n;
        return n;
    }
};

// --- Metabolism ------------------------------------------------------------

// Baseline health decay plus digestion: each food store converts up to
// digestion_rate*dt of mass into construction mass 1:1, yielding energy at
// the food's energy density (meat is denser than plant). Surplus then repairs
// health, rate-capped and budgeted by repair_priority (growth keeps the rest;
// see grow()).
inline void update_metabolism(Cell& cell, double dt, const SimConfig& cfg, Ledger& ledger) {
    if (cell.kind == CellKind::Meat) {
        // inert: decays toward despawn over its lifetime
        cell.attr.health -= dt * (1.0 - kDeathHealth) / cfg.cell.meat_lifetime;
        cell.age += dt;
        return;
    }
    cell.attr.health -= cfg.cell.health_decay * dt;
    cell.age += dt;

    double cap = cell.attr.digestion_rate * dt;
    if (cap > 0.0) {
        double plant = std::min(cap, cell.attr.plant_food);
        double meat = std::min(cap, cell.attr.meat_food);
        cell.attr.plant_food -= plant;
        cell.attr.meat_food -= meat;
        cell.attr.construction_mass += plant + meat;
        double yielded = plant * cfg.cell.energy_density_plant + meat * cfg.cell.energy_density_meat;
        cell.attr.energy += yielded;
        ledger.digestion_energy += yielded;
    }

    double deficit = 1.0 - cell.attr.health;
    if (deficit > 0.0 && cell.attr.repair_priority > 0.0) {
        double want = std::min(deficit, cfg.cell.repair_rate_max * dt);
        double prio = cell.attr.repair_priority;
        double afford = want;
        if (cfg.cell.repair_mass_per_health > 0.0)
            afford = std::min(afford, cell.attr.construction_mass * prio / cfg.cell.repair_mass_per_health);
        if (cfg.cell.repair_energy_per_health > 0.0)
            afford = std::min(afford, cell.attr.energy * prio / cfg.cell.repair_energy_per_health);
        if (afford > 0.0) {
            double mass_cost = afford * cfg.cell.repair_mass_per_health;
            double energy_cost = afford * cfg.cell.repair_energy_per_health;
            cell.attr.construction_mass -= mass_cost;
            cell.attr.energy -= energy_cost;
            cell.attr.health += afford;
            ledger.repair_mass += mass_cost;
            ledger.repair_energy += energy_cost;
        }
    }
    if (cell.attr.health > 1.0) cell.attr.health = 1.0;
}

struct GrowResult {
    double new_radius = 0.0;
    double mass_used = 0.0;
    double energy_used = 0.0;
};

// Converts construction mass (and energy) into radius at up to
// growth_rate*dt per step. The area increase is paid in body mass at the
// physics density; insufficient stores scale the step down proportionally.
inline GrowResult grow(Cell& cell, double dt, const SimConfig& cfg, Ledger& ledger) {
    GrowResult out{cell.radius, 0.0, 0.0};
    double dr = cell.attr.growth_rate * dt;
    if (dr <= 0.0 || cell.attr.health <= 0.0) return out;
    double max_r = cell.kind == CellKind::Plant ? cfg.cell.plant_div_radius * 1.5 : cfg.cell.radius_max;
    dr = std::min(dr, max_r - cell.radius);
    if (dr <= 0.0) return out;

    auto mass_cost = [&](double step) {
        double r1 = cell.radius + step;
        return cfg.physics.density * kPi * (r1 * r1 - cell.radius * cell.radius);
    };
    double need_mass = mass_cost(dr);
    double need_energy = need_mass * cfg.cell.growth_energy_per_mass;
    double ratio = 1.0;
    if (need_mass > 0.0) ratio = std::min(ratio, cell.attr.construction_mass / need_mass);
    if (need_energy > 0.0) ratio = std::min(ratio, cell.attr.energy / need_energy);
    ratio = std::clamp(ratio, 0.0, 1.0);
    if (ratio <= 0.0) return out;
    dr *= ratio;
    double m = mass_cost(dr);
    double e = m * cfg.cell.growth_energy_per_mass;
    if (m > cell.attr.construction_mass || e > cell.attr.energy) return out;  // numeric guard
    cell.attr.construction_mass -= m;
    cell.attr.energy -= e;
    ledger.growth_energy += e;
    out.new_radius = cell.radius + dr;
    out.mass_used = m;
    out.energy_used = e;
    cell.radius = out.new_radius;
    return out;
}

// Spends construction mass and energy to stock one lattice molecule.
// Production is partial when either store runs short.
inline double produce_molecule(Cell& cell, std::int64_t lattice_i, double amount,
                               const SimConfig& cfg, Ledger& ledger) {
    if (amount <= 0.0) return 0.0;
    double cost = cfg.cell.molecule_production_cost;
    double afford = std::min(amount, cell.attr.construction_mass);
    if (cost > 0.0) afford = std::min(afford, cell.attr.energy / cost);
    if (afford <= 0.0) return 0.0;
    double energy_cost = afford * cost;
    cell.attr.construction_mass -= afford;
    cell.attr.energy -= energy_cost;
    cell.attr.molecules[static_cast<std::size_t>(lattice_i)] += afford;
    ledger.production_energy += energy_cost;
    return afford;
}

// Plants spontaneously generate resources; the world's only mass/energy
// source. Colour also regenerates toward the base colour so deposits stay
// classifiable. Crowding does not shade photosynthesis (mats must keep
// glowing); it gates growth instead, which is what caps the population.
inline void photosynthesize(Cell& plant, double dt, const SimConfig& cfg, Ledger& ledger) {
    double m = cfg.cell.plant_photo_mass_rate * dt;
    double e = cfg.cell.plant_photo_energy_rate * dt;
    plant.attr.construction_mass += m;
    plant.attr.energy += e;
    ledger.photosynthesis_mass += m;
    ledger.photosynthesis_energy += e;
    double t = std::min(1.0, cfg.cell.plant_colour_regen * dt);
    plant.colour = lerp(plant.colour, plant.base_colour, t);
}

} // namespace protolife
