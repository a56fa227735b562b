#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "protolife/cell.hpp"
#include "protolife/config.hpp"
#include "protolife/genome.hpp"
#include "protolife/rng.hpp"

namespace protolife {

struct LineageRecord {
    std::uint64_t cell_id = 0;
    std::uint64_t parent_id = 0;
    std::uint32_t generation = 0;
    std::uint64_t birth_tick = 0;
};

// Division needs the GRN-specified size and health strictly above 0.15.
inline bool division_check(const Cell& cell, double fixed_threshold_radius = -1.0) {
    if (cell.dead || cell.engulfed) return false;
    double threshold = fixed_threshold_radius > 0.0 ? fixed_threshold_radius : cell.division_threshold;
    return cell.radius >= threshold && cell.attr.health > kDivisionHealthMin;
}

// Expected child count rises linearly from 2 at r_min_div to 6 at r_max_div;
// the draw is the stochastic rounding of that mean, clamped to [2, 6].
inline int draw_child_count(double parent_radius, const SimConfig::Evolution& cfg, RngStream& rng) {
    double t = (parent_radius - cfg.r_min_div) / (cfg.r_max_div - cfg.r_min_div);
    t = std::clamp(t, 0.0, 1.0);
    double mean = 2.0 + 4.0 * t;
    double base = std::floor(mean);
    int k = static_cast<int>(base) + (rng.uniform01() < mean - base ? 1 : 0);
    return std::clamp(k, 2, 6);
}

// Mutates the traits outside the GRN: node add/delete/angle and colour. Node
// additions create fresh GRN IO bindings wired by the initial-population
// rules; deletions drop the node's bindings. Surviving nodes keep their
// relative order.
inline void mutate_unregulated(Genome& genome, RngStream& rng, std::uint64_t& innovation_counter,
                               const SimConfig& cfg) {
    auto& angles = genome.traits.node_angles;
    if (cfg.evolution.p_node_add > 0.0 && rng.chance(cfg.evolution.p_node_add)) {
        auto position = static_cast<int>(rng.below(angles.size() + 1));
        double angle = rng.uniform(0.0, kTwoPi);
        angles.insert(angles.begin() + position, angle);
        add_node_bindings(genome, position, rng, innovation_counter, cfg.grn);
    }
    if (cfg.evolution.p_node_del > 0.0 && rng.chance(cfg.evolution.p_node_del) && angles.size() > 1) {
        auto position = static_cast<int>(rng.below(angles.size()));
        angles.erase(angles.begin() + position);
        remove_node_bindings(genome, position);
    }
    if (cfg.evolution.p_node_angle > 0.0 && !angles.empty() && rng.chance(cfg.evolution.p_node_angle)) {
        auto position = static_cast<std::size_t>(rng.below(angles.size()));
        angles[position] = wrap_angle_positive(angles[position] +
                                               rng.normal(0.0, cfg.evolution.node_angle_sigma));
    }
    if (cfg.evolution.p_colour > 0.0 && rng.chance(cfg.evolution.p_colour)) {
        auto channel = static_cast<int>(rng.below(3));
        double step = rng.chance(0.5) ? cfg.evolution.colour_step : -cfg.evolution.colour_step;
        Rgb& c = genome.traits.colour;
        double& v = channel == 0 ? c.r : channel == 1 ? c.g : c.b;
        v = clamp01(v + step);
    }
}

// Ring placement: k children of radius rc fit without overlap when
// 2*(r - rc)*sin(pi/k) >= 2*rc.
inline double ring_pack_radius(double parent_radius, int k) {
    double s = std::sin(kPi / static_cast<double>(k));
    return parent_radius * s / (1.0 + s);
}

struct DivisionPlan {
    struct Child {
        Vec2 pos;
        double radius = 0.0;
        Genome genome;
        double energy = 0.0;
        double construction_mass = 0.0;
        double plant_food = 0.0;
        double meat_food = 0.0;
        std::vector<double> molecules;
    };
    std::vector<Child> children;
    double sink_mass = 0.0;    // division overhead, to the decay sink
    double sink_energy = 0.0;
};

// Plans a division: child count from the radius-dependent distribution,
// equal-area children placed in a jittered ring inside the parent's disc,
// stores split equally after the division overhead, and per-child mutated
// genomes. Body mass is conserved exactly: area lost to the packing limit
// returns to the children as construction mass.
inline DivisionPlan divide(const Cell& parent, RngStream& rng, std::uint64_t& innovation_counter,
                           const SimConfig& cfg, bool mutate) {
    DivisionPlan plan;
    int k = draw_child_count(parent.radius, cfg.evolution, rng);

    double child_r = parent.radius / std::sqrt(static_cast<double>(k));
    child_r = std::min(child_r, ring_pack_radius(parent.radius, k));
    child_r = std::max(child_r, cfg.cell.radius_min);
    double parent_body_mass = cfg.physics.density * kPi * parent.radius * parent.radius;
    double child_body_mass = cfg.physics.density * kPi * child_r * child_r;
    double leftover_body = std::max(0.0, parent_body_mass - child_body_mass * k);

    double overhead = cfg.evolution.division_overhead;
    double keep = 1.0 - overhead;
    plan.sink_mass = overhead * (parent.attr.stored_mass());
    plan.sink_energy = overhead * parent.attr.energy;

    double ring = std::max(0.0, parent.radius - child_r);
    double phase = rng.uniform(0.0, kTwoPi);
    for (int i = 0; i < k; ++i) {
        DivisionPlan::Child child;
        double theta = phase + kTwoPi * static_cast<double>(i) / static_cast<double>(k);
        child.pos = parent.pos + from_angle(theta) * ring;
        child.radius = child_r;
        child.energy = keep * parent.attr.energy / k;
        child.construction_mass = keep * parent.attr.construction_mass / k + leftover_body / k;
        child.plant_food = keep * parent.attr.plant_food / k;
        child.meat_food = keep * parent.attr.meat_food / k;
        child.molecules.resize(parent.attr.molecules.size());
        for (std::size_t m = 0; m < child.molecules.size(); ++m)
            child.molecules[m] = keep * parent.attr.molecules[m] / k;
        child.genome = parent.genome;
        if (mutate) {
            mutate_genome(child.genome, rng, innovation_counter, cfg.grn);
            mutate_unregulated(child.genome, rng, innovation_counter, cfg);
        }
        plan.children.push_back(std::move(child));
    }
    return plan;
}

} // namespace protolife
