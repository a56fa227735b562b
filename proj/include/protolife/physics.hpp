#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "protolife/config.hpp"
#include "protolife/vec2.hpp"

namespace protolife {

enum class BodyKind : std::uint8_t { DynamicDisc = 0, StaticTriangle = 1 };

struct Body {
    std::uint64_t id = 0;
    BodyKind kind = BodyKind::DynamicDisc;
    Vec2 pos;
    Vec2 vel;
    double angle = 0.0;
    double angvel = 0.0;
    double radius = 0.0;                 // discs
    std::array<Vec2, 3> verts{};         // triangles, world space
    double density = 1.0;
    Rgb colour;

    Vec2 force;        // cleared every step
    double torque = 0.0;

    double mass = 0.0;       // density * pi * r^2, tracks growth
    double inv_mass = 0.0;
    double inertia = 0.0;    // m r^2 / 2
    double inv_inertia = 0.0;

    bool is_disc() const { return kind == BodyKind::DynamicDisc; }

    void set_radius(double r) {
        radius = r;
        mass = density * kPi * r * r;
        inv_mass = mass > 0.0 ? 1.0 / mass : 0.0;
        inertia = 0.5 * mass * r * r;
        inv_inertia = inertia > 0.0 ? 1.0 / inertia : 0.0;
    }
};

struct Joint {
    std::uint64_t id = 0;
    std::uint64_t body_a = 0;
    std::uint64_t body_b = 0;
    Vec2 anchor_a;  // local frame of body_a
    Vec2 anchor_b;
    double rest_length = 0.0;
    double rest_relative_angle = 0.0;  // body_b.angle - body_a.angle at creation
    bool operator==(const Joint&) const = default;
};

struct RayHit {
    std::uint64_t body_id = 0;
    double distance = 0.0;
    Rgb surface_colour;
};

// A disc pair (or disc/triangle pair) that touched (or sat within the contact
// margin) during the step; consumed by the engine's interaction phase.
// penetration <= 0 means a near-touch within the margin.
struct Contact {
    std::uint64_t a = 0;  // a < b for disc pairs
    std::uint64_t b = 0;
    Vec2 normal;          // from a to b
    double penetration = 0.0;
};

namespace physics_detail {

// Closest point on a triangle to p (edges and interior).
inline Vec2 closest_point_on_triangle(const std::array<Vec2, 3>& v, const Vec2& p) {
    auto closest_on_segment = [](const Vec2& a, const Vec2& b, const Vec2& q) {
        Vec2 ab = b - a;
        double t = length_sq(ab) > 0.0 ? dot(q - a, ab) / length_sq(ab) : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        return a + ab * t;
    };
    double d1 = cross(v[1] - v[0], p - v[0]);
    double d2 = cross(v[2] - v[1], p - v[1]);
    double d3 = cross(v[0] - v[2], p - v[2]);
    bool all_pos = d1 >= 0 && d2 >= 0 && d3 >= 0;
    bool all_neg = d1 <= 0 && d2 <= 0 && d3 <= 0;
    if (all_pos || all_neg) return p;  // inside: caller handles push-out
    Vec2 best = closest_on_segment(v[0], v[1], p);
    double best_d = length_sq(p - best);
    Vec2 c2 = closest_on_segment(v[1], v[2], p);
    if (double d = length_sq(p - c2); d < best_d) { best = c2; best_d = d; }
    Vec2 c3 = closest_on_segment(v[2], v[0], p);
    if (double d = length_sq(p - c3); d < best_d) { best = c3; }
    return best;
}

inline bool point_in_triangle(const std::array<Vec2, 3>& v, const Vec2& p) {
    double d1 = cross(v[1] - v[0], p - v[0]);
    double d2 = cross(v[2] - v[1], p - v[1]);
    double d3 = cross(v[0] - v[2], p - v[2]);
    return (d1 >= 0 && d2 >= 0 && d3 >= 0) || (d1 <= 0 && d2 <= 0 && d3 <= 0);
}

// Ray/segment intersection: returns t along the ray, or nothing.
inline std::optional<double> ray_segment(const Vec2& o, const Vec2& d,
                                         const Vec2& a, const Vec2& b) {
    Vec2 s = b - a;
    double denom = cross(d, s);
    if (std::abs(denom) < 1e-12) return std::nullopt;
    Vec2 ao = a - o;
    double t = cross(ao, s) / denom;
    double u = cross(ao, d) / denom;
    if (t >= 0.0 && u >= 0.0 && u <= 1.0) return t;
    return std::nullopt;
}

inline std::optional<double> ray_circle(const Vec2& o, const Vec2& d,
                                        const Vec2& c, double r) {
    Vec2 oc = o - c;
    double b = dot(oc, d);
    double disc = b * b - (length_sq(oc) - r * r);
    if (disc < 0.0) return std::nullopt;
    double sq = std::sqrt(disc);
    double t = -b - sq;
    if (t < 0.0) t = -b + sq;  // origin inside the circle
    if (t < 0.0) return std::nullopt;
    return t;
}

struct CellKey {
    std::int32_t x, y;
    bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const {
        return static_cast<std::size_t>(
            static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.x)) * 0x9E3779B97F4A7C15ull ^
            static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.y)) * 0xC2B2AE3D27D4EB4Full);
    }
};

} // namespace physics_detail

// Minimal deterministic rigid-body core: dynamic discs, static triangles,
// distance joints with anchors and a relative-angle spring, viscous damping
// with the multicellular drag reduction, impulse contacts with positional
// correction, and raycasting. Bodies are iterated in stable id order
// everywhere, so identical worlds step to bit-identical results.
class PhysicsWorld {
public:
    std::map<std::uint64_t, Body> bodies;
    std::map<std::uint64_t, Joint> joints;
    SimConfig::Physics cfg;

    explicit PhysicsWorld(const SimConfig::Physics& c = {}) : cfg(c) {}

    Body& add_disc(std::uint64_t id, Vec2 pos, double radius, double density, Rgb colour) {
        Body b;
        b.id = id;
        b.kind = BodyKind::DynamicDisc;
        b.pos = pos;
        b.density = density;
        b.colour = colour;
        b.set_radius(radius);
        return bodies.emplace(id, b).first->second;
    }

    Body& add_triangle(std::uint64_t id, const std::array<Vec2, 3>& verts, Rgb colour) {
        Body b;
        b.id = id;
        b.kind = BodyKind::StaticTriangle;
        b.verts = verts;
        b.colour = colour;
        Vec2 centroid = (verts[0] + verts[1] + verts[2]) / 3.0;
        b.pos = centroid;
        return bodies.emplace(id, b).first->second;
    }

    void remove_body(std::uint64_t id) { bodies.erase(id); }

    Joint& add_joint(std::uint64_t joint_id, std::uint64_t a, std::uint64_t b,
                     Vec2 anchor_a, Vec2 anchor_b) {
        Joint j;
        j.id = joint_id;
        j.body_a = a;
        j.body_b = b;
        j.anchor_a = anchor_a;
        j.anchor_b = anchor_b;
        const Body& ba = bodies.at(a);
        const Body& bb = bodies.at(b);
        Vec2 pa = ba.pos + rotated(anchor_a, ba.angle);
        Vec2 pb = bb.pos + rotated(anchor_b, bb.angle);
        j.rest_length = length(pb - pa);
        j.rest_relative_angle = bb.angle - ba.angle;
        return joints.emplace(joint_id, j).first->second;
    }

    void remove_joint(std::uint64_t joint_id) { joints.erase(joint_id); }

    // Viscous damping force for one body. Solo bodies feel -c_lin * v; a body
    // with joined partners has its drag scaled by
    //   scale = scale_min + (1 - scale_min) * (1 + max_p |cos(theta_p)|) / 2
    // where theta_p is the angle between the velocity and the (undirected)
    // axis toward partner p. Moving along a partner axis gives full drag,
    // moving perpendicular to every partner gives the midpoint of
    // [scale_min, 1], so a line of cells resists motion along its axis more
    // than across it.
    Vec2 apply_damping(const Body& body, const std::vector<Vec2>& partner_positions) const {
        double scale = 1.0;
        if (!partner_positions.empty()) {
            double speed = length(body.vel);
            double max_cos = 0.0;
            if (speed > 1e-12) {
                Vec2 v_hat = body.vel / speed;
                for (const Vec2& p : partner_positions) {
                    Vec2 d = p - body.pos;
                    double len = length(d);
                    if (len < 1e-12) continue;
                    double c = std::abs(dot(v_hat, d / len));
                    max_cos = std::max(max_cos, c);
                }
            }
            scale = cfg.drag_scale_min + (1.0 - cfg.drag_scale_min) * (1.0 + max_cos) * 0.5;
            scale = std::clamp(scale, cfg.drag_scale_min, 1.0);
        }
        return body.vel * (-cfg.c_lin * scale);
    }

    // Nearest intersection among discs and triangles, excluding `ignore_id`.
    std::optional<RayHit> raycast(Vec2 origin, Vec2 direction, double max_range,
                                  std::uint64_t ignore_id = 0) const {
        std::optional<RayHit> best;
        for (const auto& [id, b] : bodies) {
            if (id == ignore_id) continue;
            std::optional<double> t;
            if (b.is_disc()) {
                t = physics_detail::ray_circle(origin, direction, b.pos, b.radius);
            } else {
                for (int e = 0; e < 3; ++e) {
                    auto te = physics_detail::ray_segment(origin, direction, b.verts[e],
                                                          b.verts[(e + 1) % 3]);
                    if (te && (!t || *te < *t)) t = te;
                }
            }
            if (!t || *t > max_range) continue;
            if (!best || *t < best->distance) best = RayHit{id, *t, b.colour};
        }
        return best;
    }

    // One simulation step. Returns the disc-disc contacts seen this step
    // (sorted by id pair) for the caller's interaction phase.
    std::vector<Contact> step(double dt) {
        prune_dangling_joints();
        apply_joint_forces();

        // integrate velocities, damping folded in as a clamped decay so very
        // light bodies stay stable
        auto partner_map = joint_partners();
        static const std::vector<Vec2> no_partners;
        for (auto& [id, b] : bodies) {
            if (!b.is_disc()) continue;
            b.vel += b.force * (b.inv_mass * dt);
            b.angvel += b.torque * (b.inv_inertia * dt);
            auto it = partner_map.find(id);
            const std::vector<Vec2>& partners = it == partner_map.end() ? no_partners : it->second;
            Vec2 f = apply_damping(b, partners);
            double decay = length(b.vel) > 1e-12
                               ? std::min(1.0, length(f) * b.inv_mass * dt / length(b.vel))
                               : 0.0;
            b.vel *= (1.0 - decay);
            b.angvel *= std::max(0.0, 1.0 - cfg.angular_damping * dt);
            double speed = length(b.vel);
            if (speed > cfg.v_max) b.vel *= cfg.v_max / speed;
        }

        auto pairs = broadphase_pairs();
        std::vector<Contact> contacts = solve_velocity_constraints(pairs);

        for (auto& [id, b] : bodies) {
            if (!b.is_disc()) continue;
            b.pos += b.vel * dt;
            b.angle = wrap_angle(b.angle + b.angvel * dt);
            b.force = {};
            b.torque = 0.0;
        }

        positional_correction(pairs);
        return contacts;
    }

    // Fixed distance between formations etc: discs never move, just clear forces.
    void clear_forces() {
        for (auto& [id, b] : bodies) {
            b.force = {};
            b.torque = 0.0;
        }
    }

    std::unordered_map<std::uint64_t, std::vector<Vec2>> joint_partners() const {
        std::unordered_map<std::uint64_t, std::vector<Vec2>> map;
        for (const auto& [jid, j] : joints) {
            auto a = bodies.find(j.body_a);
            auto b = bodies.find(j.body_b);
            if (a == bodies.end() || b == bodies.end()) continue;
            map[j.body_a].push_back(b->second.pos);
            map[j.body_b].push_back(a->second.pos);
        }
        return map;
    }

private:
    void prune_dangling_joints() {
        std::erase_if(joints, [&](const auto& kv) {
            return !bodies.count(kv.second.body_a) || !bodies.count(kv.second.body_b);
        });
    }

    // Distance spring between world anchors plus a relative-angle spring, both
    // with damping derived from the configured damping ratios.
    void apply_joint_forces() {
        for (auto& [jid, j] : joints) {
            Body& a = bodies.at(j.body_a);
            Body& b = bodies.at(j.body_b);
            Vec2 ra = rotated(j.anchor_a, a.angle);
            Vec2 rb = rotated(j.anchor_b, b.angle);
            Vec2 pa = a.pos + ra;
            Vec2 pb = b.pos + rb;
            Vec2 d = pb - pa;
            double len = length(d);
            Vec2 n = len > 1e-9 ? d / len : from_angle(a.angle);

            double reduced_mass = 1.0 / (a.inv_mass + b.inv_mass);
            double c_crit = 2.0 * std::sqrt(cfg.joint_stiffness * reduced_mass);
            Vec2 va = a.vel + Vec2{-ra.y, ra.x} * a.angvel;
            Vec2 vb = b.vel + Vec2{-rb.y, rb.x} * b.angvel;
            double rel_vn = dot(vb - va, n);
            double f_mag = cfg.joint_stiffness * (len - j.rest_length) +
                           cfg.joint_damping_ratio * c_crit * rel_vn;
            Vec2 f = n * f_mag;
            a.force += f;
            a.torque += cross(ra, f);
            b.force -= f;
            b.torque -= cross(rb, f);

            double reduced_inertia = 1.0 / (a.inv_inertia + b.inv_inertia);
            double ang_crit = 2.0 * std::sqrt(cfg.joint_angular_stiffness * reduced_inertia);
            double err = wrap_angle(b.angle - a.angle - j.rest_relative_angle);
            double tq = cfg.joint_angular_stiffness * err +
                        cfg.joint_angular_damping_ratio * ang_crit * (b.angvel - a.angvel);
            a.torque += tq;
            b.torque -= tq;
        }
    }

    // Spatial hash over dynamic discs plus a triangle sweep; pair list is
    // sorted so contact resolution order is independent of hash layout.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> broadphase_pairs() const {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
        double cell = cfg.broadphase_cell;
        std::unordered_map<physics_detail::CellKey, std::vector<const Body*>,
                           physics_detail::CellKeyHash> hash;
        for (const auto& [id, b] : bodies) {
            if (!b.is_disc()) continue;
            physics_detail::CellKey key{static_cast<std::int32_t>(std::floor(b.pos.x / cell)),
                                        static_cast<std::int32_t>(std::floor(b.pos.y / cell))};
            hash[key].push_back(&b);
        }
        for (const auto& [id, b] : bodies) {
            if (!b.is_disc()) continue;
            auto cx = static_cast<std::int32_t>(std::floor(b.pos.x / cell));
            auto cy = static_cast<std::int32_t>(std::floor(b.pos.y / cell));
            for (std::int32_t dx = -1; dx <= 1; ++dx) {
                for (std::int32_t dy = -1; dy <= 1; ++dy) {
                    auto it = hash.find({cx + dx, cy + dy});
                    if (it == hash.end()) continue;
                    for (const Body* other : it->second) {
                        if (other->id <= b.id) continue;
                        double reach = b.radius + other->radius + cell * 0.5;
                        if (length_sq(other->pos - b.pos) <= reach * reach)
                            pairs.emplace_back(b.id, other->id);
                    }
                }
            }
        }
        // disc vs static triangle (triangles are few; AABB precheck)
        for (const auto& [id, b] : bodies) {
            if (b.is_disc()) continue;
            double min_x = std::min({b.verts[0].x, b.verts[1].x, b.verts[2].x});
            double max_x = std::max({b.verts[0].x, b.verts[1].x, b.verts[2].x});
            double min_y = std::min({b.verts[0].y, b.verts[1].y, b.verts[2].y});
            double max_y = std::max({b.verts[0].y, b.verts[1].y, b.verts[2].y});
            for (const auto& [did, d] : bodies) {
                if (!d.is_disc()) continue;
                double reach = d.radius + cfg.contact_margin;
                if (d.pos.x + reach < min_x || d.pos.x - reach > max_x ||
                    d.pos.y + reach < min_y || d.pos.y - reach > max_y)
                    continue;
                pairs.emplace_back(std::min(id, did), std::max(id, did));
            }
        }
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
        return pairs;
    }

    struct Narrow {
        bool hit = false;
        Vec2 normal;  // from a to b
        double penetration = 0.0;
    };

    Narrow narrowphase(const Body& a, const Body& b) const {
        Narrow out;
        if (a.is_disc() && b.is_disc()) {
            Vec2 d = b.pos - a.pos;
            double dist = length(d);
            double pen = a.radius + b.radius - dist;
            if (pen <= -cfg.contact_margin) return out;
            out.hit = true;
            out.normal = dist > 1e-12 ? d / dist : Vec2{1.0, 0.0};
            out.penetration = pen;
            return out;
        }
        // exactly one is a triangle; orient so `disc` is the disc
        const Body& disc = a.is_disc() ? a : b;
        const Body& tri = a.is_disc() ? b : a;
        Vec2 cp = physics_detail::closest_point_on_triangle(tri.verts, disc.pos);
        if (physics_detail::point_in_triangle(tri.verts, disc.pos) && cp == disc.pos) {
            // centre inside: push out through the nearest edge
            double best_d = 1e300;
            Vec2 best_normal{1.0, 0.0};
            for (int e = 0; e < 3; ++e) {
                Vec2 va = tri.verts[e], vb = tri.verts[(e + 1) % 3];
                Vec2 edge = vb - va;
                Vec2 n{edge.y, -edge.x};
                n = normalized(n);
                Vec2 centroid = (tri.verts[0] + tri.verts[1] + tri.verts[2]) / 3.0;
                if (dot(n, va - centroid) < 0.0) n = -n;  // outward
                double dist = std::abs(dot(disc.pos - va, n));
                if (dist < best_d) {
                    best_d = dist;
                    best_normal = n;
                }
            }
            out.hit = true;
            out.normal = a.is_disc() ? -best_normal : best_normal;
            out.penetration = disc.radius + best_d;
            return out;
        }
        Vec2 d = disc.pos - cp;
        double dist = length(d);
        double pen = disc.radius - dist;
        if (pen <= -cfg.contact_margin) return out;
        Vec2 n = dist > 1e-12 ? d / dist : Vec2{1.0, 0.0};  // triangle -> disc
        out.hit = true;
        out.normal = a.is_disc() ? -n : n;  // stored as a -> b
        out.penetration = pen;
        return out;
    }

    std::vector<Contact> solve_velocity_constraints(
        const std::vector<std::pair<std::uint64_t, std::uint64_t>>& pairs) {
        std::vector<Contact> contacts;
        for (const auto& [ida, idb] : pairs) {
            Body& a = bodies.at(ida);
            Body& b = bodies.at(idb);
            Narrow n = narrowphase(a, b);
            if (!n.hit) continue;
            contacts.push_back({ida, idb, n.normal, n.penetration});
            if (n.penetration <= 0.0) continue;  // margin-only contact: report, don't resolve
            double inv_sum = a.inv_mass + b.inv_mass;
            if (inv_sum <= 0.0) continue;
            double vn = dot(b.vel - a.vel, n.normal);
            if (vn >= 0.0) continue;  // separating
            double jmag = -(1.0 + cfg.restitution) * vn / inv_sum;
            Vec2 impulse = n.normal * jmag;
            a.vel -= impulse * a.inv_mass;
            b.vel += impulse * b.inv_mass;
        }
        return contacts;
    }

    void positional_correction(
        const std::vector<std::pair<std::uint64_t, std::uint64_t>>& pairs) {
        for (const auto& [ida, idb] : pairs) {
            Body& a = bodies.at(ida);
            Body& b = bodies.at(idb);
            Narrow n = narrowphase(a, b);
            if (!n.hit) continue;
            double inv_sum = a.inv_mass + b.inv_mass;
            if (inv_sum <= 0.0) continue;
            double corr = std::max(n.penetration - cfg.slop, 0.0) * cfg.baumgarte / inv_sum;
            a.pos -= n.normal * (corr * a.inv_mass);
            b.pos += n.normal * (corr * b.inv_mass);
        }
    }
};

} // namespace protolife
