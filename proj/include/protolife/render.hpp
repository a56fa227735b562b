#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "protolife/engine.hpp"
#include "protolife/vec2.hpp"

namespace protolife {

// Deterministic raster of a world state: void background, arena disc with the
// chemical field beneath, rock triangles, cells colour-coded by kind with
// attachment glyphs at the node angles, and binding links. Output is binary
// PPM (P6) so identical snapshots render to identical bytes.
class Renderer {
public:
    Renderer(int width, int height) : w_(width), h_(height), px_(static_cast<std::size_t>(width) * height * 3, 0) {}

    int width() const { return w_; }
    int height() const { return h_; }

    void put(int x, int y, Rgb c) {
        if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
        std::size_t i = (static_cast<std::size_t>(y) * w_ + static_cast<std::size_t>(x)) * 3;
        px_[i + 0] = to_byte(c.r);
        px_[i + 1] = to_byte(c.g);
        px_[i + 2] = to_byte(c.b);
    }

    void fill_circle(Vec2 centre, double radius, Rgb c) {
        int x0 = static_cast<int>(std::floor(centre.x - radius));
        int x1 = static_cast<int>(std::ceil(centre.x + radius));
        int y0 = static_cast<int>(std::floor(centre.y - radius));
        int y1 = static_cast<int>(std::ceil(centre.y + radius));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                double dx = x + 0.5 - centre.x, dy = y + 0.5 - centre.y;
                if (dx * dx + dy * dy <= radius * radius) put(x, y, c);
            }
    }

    void fill_triangle(const std::array<Vec2, 3>& v, Rgb c) {
        double x0 = std::min({v[0].x, v[1].x, v[2].x});
        double x1 = std::max({v[0].x, v[1].x, v[2].x});
        double y0 = std::min({v[0].y, v[1].y, v[2].y});
        double y1 = std::max({v[0].y, v[1].y, v[2].y});
        for (int y = static_cast<int>(std::floor(y0)); y <= static_cast<int>(std::ceil(y1)); ++y)
            for (int x = static_cast<int>(std::floor(x0)); x <= static_cast<int>(std::ceil(x1)); ++x) {
                Vec2 p{x + 0.5, y + 0.5};
                if (physics_detail::point_in_triangle(v, p)) put(x, y, c);
            }
    }

    void line(Vec2 a, Vec2 b, Rgb c) {
        double len = length(b - a);
        int steps = std::max(1, static_cast<int>(std::ceil(len)));
        for (int i = 0; i <= steps; ++i) {
            Vec2 p = a + (b - a) * (static_cast<double>(i) / steps);
            put(static_cast<int>(p.x), static_cast<int>(p.y), c);
        }
    }

    void write_ppm(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open image output: " + path);
        out << "P6\n" << w_ << " " << h_ << "\n255\n";
        out.write(reinterpret_cast<const char*>(px_.data()), static_cast<std::streamsize>(px_.size()));
        if (!out) throw std::runtime_error("image write failed: " + path);
    }

    const std::vector<std::uint8_t>& pixels() const { return px_; }

private:
    int w_, h_;
    std::vector<std::uint8_t> px_;

    static std::uint8_t to_byte(double v) {
        return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0));
    }
};

inline Rgb attachment_glyph_colour(AttachmentKind k) {
    switch (k) {
        case AttachmentKind::Flagellum: return {0.95, 0.95, 0.95};
        case AttachmentKind::Spike: return {0.75, 0.75, 0.85};
        case AttachmentKind::Phagoreceptor: return {0.95, 0.55, 0.15};
        case AttachmentKind::Photoreceptor: return {0.25, 0.55, 0.95};
        case AttachmentKind::AdhesionReceptor: return {0.70, 0.30, 0.85};
    }
    return {1, 1, 1};
}

inline Renderer render_world(const Engine& engine, double pixels_per_metre) {
    const SimConfig& cfg = engine.config();
    double R = cfg.sim.world_radius;
    int size = std::max(16, static_cast<int>(std::ceil(2.0 * R * pixels_per_metre)));
    Renderer img(size, size);
    auto to_px = [&](Vec2 world) {
        return Vec2{(world.x + R) * pixels_per_metre, (world.y + R) * pixels_per_metre};
    };

    const ChemGrid& grid = engine.grid();
    auto n = grid.resolution();
    const auto& px = grid.pixels();
    Rgb void_colour{0.05, 0.05, 0.08};
    Rgb arena_colour{0.10, 0.10, 0.13};
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            Vec2 world{(x + 0.5) / pixels_per_metre - R, (y + 0.5) / pixels_per_metre - R};
            if (length_sq(world) > R * R) {
                img.put(x, y, void_colour);
                continue;
            }
            auto gx = std::clamp<std::int64_t>(
                static_cast<std::int64_t>((world.x + R) / (2.0 * R) * static_cast<double>(n)), 0, n - 1);
            auto gy = std::clamp<std::int64_t>(
                static_cast<std::int64_t>((world.y + R) / (2.0 * R) * static_cast<double>(n)), 0, n - 1);
            std::size_t i = (static_cast<std::size_t>(gy) * n + static_cast<std::size_t>(gx)) * 3;
            Rgb c{arena_colour.r + px[i] * 0.8, arena_colour.g + px[i + 1] * 0.8,
                  arena_colour.b + px[i + 2] * 0.8};
            img.put(x, y, clamped(c));
        }
    }

    for (const auto& rock : engine.rocks()) {
        std::array<Vec2, 3> v{to_px(rock.verts[0]), to_px(rock.verts[1]), to_px(rock.verts[2])};
        img.fill_triangle(v, {cfg.engine.rock_colour_r, cfg.engine.rock_colour_g,
                              cfg.engine.rock_colour_b});
    }

    for (const auto& bind : engine.bindings()) {
        auto a = engine.cells().find(bind.cell_a);
        auto b = engine.cells().find(bind.cell_b);
        if (a == engine.cells().end() || b == engine.cells().end()) continue;
        img.line(to_px(a->second.pos), to_px(b->second.pos), {0.8, 0.8, 0.5});
    }

    for (const auto& [id, c] : engine.cells()) {
        img.fill_circle(to_px(c.pos), std::max(1.0, c.radius * pixels_per_metre), c.colour);
        if (!c.is_protozoan()) continue;
        double body_angle = 0.0;
        auto bit = engine.physics().bodies.find(id);
        if (bit != engine.physics().bodies.end()) body_angle = bit->second.angle;
        for (const auto& node : c.nodes) {
            if (!node.attachment) continue;
            Vec2 p = c.pos + from_angle(body_angle + node.angle) * c.radius;
            img.fill_circle(to_px(p), std::max(1.0, c.radius * pixels_per_metre * 0.2),
                            attachment_glyph_colour(node.attachment->kind));
        }
    }
    return img;
}

} // namespace protolife
