#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "protolife/cell.hpp"
#include "protolife/config.hpp"
#include "protolife/lock_and_key.hpp"
#include "protolife/vec2.hpp"

namespace protolife {

// World-space position of a node on the cell surface.
inline Vec2 node_world_position(const Cell& cell, const SurfaceNode& node, double body_angle) {
    return cell.pos + from_angle(body_angle + node.angle) * cell.radius;
}

inline double node_world_angle(const SurfaceNode& node, double body_angle) {
    return wrap_angle_positive(body_angle + node.angle);
}

struct ConstructionStep {
    double mass_used = 0.0;
    double energy_used = 0.0;
    double molecules_used = 0.0;       // raw units removed from the store
    bool completed = false;
    AttachmentKind completed_kind = AttachmentKind::Flagellum;
};

// Advances one node's construction projects for dt seconds. Each stored
// molecule drives the project at its nearest function point by
// quantity * k_func * k_matching (select_project); the drive, capped at 1,
// scales the nominal dt/build_time progress step. A step costs
// (mass, energy, molecules) * requirement/build_time * dt; short stores slow
// progress by the worst availability ratio, and imperfectly matching
// molecules count toward the molecule requirement only at their matching
// coefficient, so they are consumed faster for the same progress. The first
// project to reach progress 1 instantiates its attachment.
inline ConstructionStep advance_construction(Cell& cell, SurfaceNode& node, double dt,
                                             const SimConfig& cfg, Ledger& ledger) {
    ConstructionStep out;
    if (node.attachment) return out;
    const std::int64_t t_mol = cfg.sim.molecule_count;
    const double d_crit = cfg.nodes.d_critical;
    auto drive = select_project(node.signature, cell.attr.molecules, t_mol, d_crit);

    for (int k = 0; k < kAttachmentKinds; ++k) {
        if (drive[static_cast<std::size_t>(k)] <= 0.0) continue;
        auto kind = static_cast<AttachmentKind>(k);
        double attempt = std::min(drive[static_cast<std::size_t>(k)], 1.0) * dt / cfg.nodes.build_time;
        attempt = std::min(attempt, 1.0 - node.progress[static_cast<std::size_t>(k)]);
        if (attempt <= 0.0) continue;

        double need_mass = cfg.nodes.build_mass * attempt;
        double need_energy = cfg.nodes.build_energy * attempt;
        double need_mol = cfg.nodes.build_molecules * attempt;

        // effective molecule supply for this project: matching-weighted units
        double effective = 0.0;
        for (std::int64_t i = 0; i < t_mol; ++i) {
            double qty = cell.attr.molecules[static_cast<std::size_t>(i)];
            if (qty <= 0.0) continue;
            double s_m = static_cast<double>(i) / static_cast<double>(t_mol);
            FunctionalPotency fp = functional_potency(s_m);
            if (fp.kind != kind || fp.k_func <= 0.0) continue;
            double km = matching_coefficient(cycle_distance(node.signature, s_m), d_crit);
            if (km > 0.0) effective += qty * km;
        }

        double ratio = 1.0;
        if (need_mass > 0.0) ratio = std::min(ratio, cell.attr.construction_mass / need_mass);
        if (need_energy > 0.0) ratio = std::min(ratio, cell.attr.energy / need_energy);
        if (need_mol > 0.0) ratio = std::min(ratio, effective / need_mol);
        ratio = std::clamp(ratio, 0.0, 1.0);
        if (ratio <= 0.0) continue;

        double mass_cost = need_mass * ratio;
        double energy_cost = need_energy * ratio;
        double mol_effective_cost = need_mol * ratio;

        // consume molecules best-match first; a unit of coefficient km counts
        // as km effective units
        double remaining = mol_effective_cost;
        double units_used = 0.0;
        if (remaining > 0.0) {
            std::vector<std::pair<double, std::int64_t>> candidates;  // (km, index)
            for (std::int64_t i = 0; i < t_mol; ++i) {
                double qty = cell.attr.molecules[static_cast<std::size_t>(i)];
                if (qty <= 0.0) continue;
                double s_m = static_cast<double>(i) / static_cast<double>(t_mol);
                FunctionalPotency fp = functional_potency(s_m);
                if (fp.kind != kind || fp.k_func <= 0.0) continue;
                double km = matching_coefficient(cycle_distance(node.signature, s_m), d_crit);
                if (km > 0.0) candidates.emplace_back(km, i);
            }
            std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
            for (const auto& [km, i] : candidates) {
                if (remaining <= 0.0) break;
                double& qty = cell.attr.molecules[static_cast<std::size_t>(i)];
                double take_units = std::min(qty, remaining / km);
                qty -= take_units;
                remaining -= take_units * km;
                units_used += take_units;
            }
        }

        cell.attr.construction_mass -= mass_cost;
        cell.attr.energy -= energy_cost;
        ledger.construction_mass += mass_cost + units_used;
        ledger.construction_energy += energy_cost;
        out.mass_used += mass_cost;
        out.energy_used += energy_cost;
        out.molecules_used += units_used;

        double& progress = node.progress[static_cast<std::size_t>(k)];
        progress += attempt * ratio;
        if (progress >= 1.0 - 1e-12) {
            progress = 1.0;
            node.attachment = Attachment{kind};
            out.completed = true;
            out.completed_kind = kind;
            break;  // one attachment per node
        }
    }
    return out;
}

// --- Pure attachment IO helpers --------------------------------------------

struct ActuationResult {
    Vec2 force;
    double torque = 0.0;
    double energy_cost = 0.0;
    double success = 1.0;  // produced / asked
};

// Thrust/torque request for a node (bare nodes get the default budget,
// flagella `multiplier` times as much). Thrust acts along the node->centre
// vector; whatever energy is available funds a proportional fraction and the
// success ratio reports it.
inline ActuationResult actuate_node(const Cell& cell, const SurfaceNode& node, double body_angle,
                                    double budget_multiplier, double dt, const SimConfig& cfg) {
    ActuationResult out;
    double thrust_req = node.control[0] * cfg.cell.base_thrust * budget_multiplier;
    double torque_req = node.control[1] * cfg.cell.base_torque * budget_multiplier;
    double cost = (std::abs(thrust_req) * cfg.cell.thrust_energy_rate +
                   std::abs(torque_req) * cfg.cell.torque_energy_rate) * dt;
    if (cost <= 0.0) {
        out.success = 1.0;
        return out;
    }
    double funded = cost <= cell.attr.energy ? 1.0 : cell.attr.energy / cost;
    Vec2 dir = -from_angle(body_angle + node.angle);  // node -> centre
    out.force = dir * (thrust_req * funded);
    out.torque = torque_req * funded;
    out.energy_cost = cost * funded;
    out.success = funded;
    return out;
}

// Engulf admission: permission for the prey's type, the contact within the
// receptor's angular acceptance, and the 80% capacity rule.
inline bool engulf_admissible(double predator_area, double engulfed_area_total, double prey_area,
                              bool permit_plant, bool permit_meat, CellKind prey_kind,
                              double node_world_angle_rad, double contact_angle_rad,
                              double accept_cone_deg, double capacity_fraction) {
    if (prey_kind == CellKind::Plant && !permit_plant) return false;
    if (prey_kind == CellKind::Meat && !permit_meat) return false;
    if (prey_kind == CellKind::Protozoan) return false;
    double half_cone = accept_cone_deg * kPi / 180.0 * 0.5;
    if (std::abs(wrap_angle(contact_angle_rad - node_world_angle_rad)) > half_cone) return false;
    return engulfed_area_total + prey_area <= capacity_fraction * predator_area;
}

// Quadratic distance weighting for photoreceptor rays.
inline double photo_ray_weight(double distance, double max_range) {
    double t = 1.0 - distance / max_range;
    if (t < 0.0) t = 0.0;
    return t * t;
}

inline double prey_kind_code(CellKind k) {
    switch (k) {
        case CellKind::Plant: return 1.0 / 3.0;
        case CellKind::Meat: return 2.0 / 3.0;
        case CellKind::Protozoan: return 1.0;
    }
    return 0.0;
}

} // namespace protolife
