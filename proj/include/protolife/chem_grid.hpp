#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "protolife/config.hpp"
#include "protolife/vec2.hpp"

namespace protolife {

// The chemical solution: an N x N RGB field over the arena's bounding square.
// Plant and meat cells deposit colour-coded mass into it, a 3x3 box blur
// spreads it, and passing protozoa extract classified pixels back into food
// stores. Every channel stays in [0,1]; pixels outside the circular arena
// are the void and stay zero. Mass flows are bookkept exactly: one channel
// unit on one pixel equals pixel_area * mass_per_channel_area mass units.
class ChemGrid {
public:
    ChemGrid() = default;

    ChemGrid(std::int64_t resolution, double world_radius, const SimConfig::Chem& chem)
        : n_(resolution), world_radius_(world_radius), cfg_(chem) {
        px_.assign(static_cast<std::size_t>(n_) * n_ * 3, 0.0);
        scratch_.assign(px_.size(), 0.0);
        mask_.assign(static_cast<std::size_t>(n_) * n_, 0);
        double pixel_size = 2.0 * world_radius_ / static_cast<double>(n_);
        pixel_area_ = pixel_size * pixel_size;
        for (std::int64_t y = 0; y < n_; ++y) {
            for (std::int64_t x = 0; x < n_; ++x) {
                Vec2 c = pixel_centre(x, y);
                if (length_sq(c) <= world_radius_ * world_radius_)
                    mask_[static_cast<std::size_t>(y * n_ + x)] = 1;
            }
        }
    }

    std::int64_t resolution() const { return n_; }
    double pixel_area() const { return pixel_area_; }
    double mass_per_channel() const { return pixel_area_ * cfg_.mass_per_channel_area; }
    const std::vector<double>& pixels() const { return px_; }
    std::vector<double>& pixels_mutable() { return px_; }
    bool in_arena(std::int64_t x, std::int64_t y) const {
        return x >= 0 && y >= 0 && x < n_ && y < n_ &&
               mask_[static_cast<std::size_t>(y * n_ + x)] != 0;
    }

    Vec2 pixel_centre(std::int64_t x, std::int64_t y) const {
        double s = 2.0 * world_radius_ / static_cast<double>(n_);
        return {-world_radius_ + (static_cast<double>(x) + 0.5) * s,
                -world_radius_ + (static_cast<double>(y) + 0.5) * s};
    }

    // Total mass currently resident on the grid.
    double resident_mass() const {
        double sum = 0.0;
        for (double v : px_) sum += v;
        return sum * mass_per_channel();
    }

    struct DepositResult {
        double mass_moved = 0.0;   // mass the cell lost to the grid
        double fraction_applied = 0.0;
    };

    // Draws a filled circle of the cell's colour: pixels under the disc move
    // toward cell_colour by `fraction` (channels only ever rise toward the
    // colour, so deposited mass is never negative). `max_mass` caps the cost;
    // the blend is scaled down uniformly when the cap binds. Returns the mass
    // moved cell -> grid. A cell fully in the void deposits nothing.
    DepositResult deposit(Vec2 centre, double radius, Rgb cell_colour, double fraction,
                          double max_mass = 1e300) {
        DepositResult out;
        if (fraction <= 0.0 || max_mass <= 0.0) return out;
        auto [x0, y0, x1, y1] = footprint(centre, radius);
        double want = 0.0;
        for (std::int64_t y = y0; y <= y1; ++y) {
            for (std::int64_t x = x0; x <= x1; ++x) {
                if (!covers(centre, radius, x, y)) continue;
                std::size_t i = index(x, y);
                want += positive_delta(px_[i + 0], cell_colour.r, fraction);
                want += positive_delta(px_[i + 1], cell_colour.g, fraction);
                want += positive_delta(px_[i + 2], cell_colour.b, fraction);
            }
        }
        if (want <= 0.0) return out;
        double want_mass = want * mass_per_channel();
        double scale = want_mass > max_mass ? max_mass / want_mass : 1.0;
        double f = fraction * scale;
        double moved_channels = 0.0;
        for (std::int64_t y = y0; y <= y1; ++y) {
            for (std::int64_t x = x0; x <= x1; ++x) {
                if (!covers(centre, radius, x, y)) continue;
                std::size_t i = index(x, y);
                moved_channels += apply_deposit(px_[i + 0], cell_colour.r, f);
                moved_channels += apply_deposit(px_[i + 1], cell_colour.g, f);
                moved_channels += apply_deposit(px_[i + 2], cell_colour.b, f);
            }
        }
        out.mass_moved = moved_channels * mass_per_channel();
        out.fraction_applied = f;
        return out;
    }

    struct ExtractResult {
        double plant_food = 0.0;  // mass units
        double meat_food = 0.0;
    };

    // Depositing in reverse: pixels under the disc are classified by colour
    // region; plant-like pixels (dominant green) yield plant food, meat-like
    // (dominant red) yield meat food. A configured low fraction of the
    // dominant channel transfers per pass, desaturating the pixel.
    ExtractResult extract(Vec2 centre, double radius) {
        ExtractResult out;
        if (cfg_.extract_fraction <= 0.0) return out;
        auto [x0, y0, x1, y1] = footprint(centre, radius);
        double plant_channels = 0.0, meat_channels = 0.0;
        for (std::int64_t y = y0; y <= y1; ++y) {
            for (std::int64_t x = x0; x <= x1; ++x) {
                if (!covers(centre, radius, x, y)) continue;
                std::size_t i = index(x, y);
                double r = px_[i + 0], g = px_[i + 1], b = px_[i + 2];
                if (classified(g, b, r)) {
                    double before = px_[i + 1];
                    px_[i + 1] -= before * cfg_.extract_fraction;
                    plant_channels += before - px_[i + 1];
                } else if (classified(r, g, b)) {
                    double before = px_[i + 0];
                    px_[i + 0] -= before * cfg_.extract_fraction;
                    meat_channels += before - px_[i + 0];
                }
            }
        }
        out.plant_food = plant_channels * mass_per_channel();
        out.meat_food = meat_channels * mass_per_channel();
        return out;
    }

    // 3x3 box blur over the whole field, run as two separable passes into a
    // scratch buffer. Pixels beyond the arena contribute zero and stay zero;
    // whatever flows into them is returned as the diffusion sink (mass).
    double diffuse() {
        double before = channel_sum();
        // horizontal: scratch = row sums of 3 neighbours (no divide yet)
        for (std::int64_t y = 0; y < n_; ++y) {
            std::size_t row = static_cast<std::size_t>(y) * n_ * 3;
            for (std::int64_t x = 0; x < n_; ++x) {
                std::size_t i = row + static_cast<std::size_t>(x) * 3;
                for (int c = 0; c < 3; ++c) {
                    double s = px_[i + c];
                    if (x > 0) s += px_[i - 3 + c];
                    if (x + 1 < n_) s += px_[i + 3 + c];
                    scratch_[i + c] = s;
                }
            }
        }
        // vertical: px = column sums of scratch / 9, masked to the arena
        std::size_t stride = static_cast<std::size_t>(n_) * 3;
        for (std::int64_t y = 0; y < n_; ++y) {
            for (std::int64_t x = 0; x < n_; ++x) {
                std::size_t i = static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x) * 3;
                if (!mask_[static_cast<std::size_t>(y * n_ + x)]) {
                    px_[i] = px_[i + 1] = px_[i + 2] = 0.0;
                    continue;
                }
                for (int c = 0; c < 3; ++c) {
                    double s = scratch_[i + c];
                    if (y > 0) s += scratch_[i - stride + c];
                    if (y + 1 < n_) s += scratch_[i + stride + c];
                    px_[i + c] = s / 9.0;
                }
            }
        }
        double after = channel_sum();
        return (before - after) * mass_per_channel();
    }

    double channel_sum() const {
        double sum = 0.0;
        for (double v : px_) sum += v;
        return sum;
    }

private:
    std::int64_t n_ = 0;
    double world_radius_ = 0.0;
    double pixel_area_ = 0.0;
    SimConfig::Chem cfg_;
    std::vector<double> px_;       // row-major, rgb triples
    std::vector<double> scratch_;  // blur double-buffer
    std::vector<std::uint8_t> mask_;

    std::size_t index(std::int64_t x, std::int64_t y) const {
        return (static_cast<std::size_t>(y) * n_ + static_cast<std::size_t>(x)) * 3;
    }

    struct Box {
        std::int64_t x0, y0, x1, y1;
    };

    Box footprint(Vec2 centre, double radius) const {
        double s = static_cast<double>(n_) / (2.0 * world_radius_);
        auto to_x = [&](double wx) { return static_cast<std::int64_t>(std::floor((wx + world_radius_) * s)); };
        Box b{to_x(centre.x - radius), to_x(centre.y - radius),
              to_x(centre.x + radius), to_x(centre.y + radius)};
        b.x0 = std::max<std::int64_t>(b.x0, 0);
        b.y0 = std::max<std::int64_t>(b.y0, 0);
        b.x1 = std::min<std::int64_t>(b.x1, n_ - 1);
        b.y1 = std::min<std::int64_t>(b.y1, n_ - 1);
        return b;
    }

    bool covers(Vec2 centre, double radius, std::int64_t x, std::int64_t y) const {
        if (!mask_[static_cast<std::size_t>(y * n_ + x)]) return false;
        return length_sq(pixel_centre(x, y) - centre) <= radius * radius;
    }

    bool classified(double dominant, double other1, double other2) const {
        if (dominant <= cfg_.classify_threshold) return false;
        if (cfg_.classify_additive)
            return dominant > other1 + cfg_.classify_multiplier &&
                   dominant > other2 + cfg_.classify_multiplier;
        return dominant > cfg_.classify_multiplier * other1 &&
               dominant > cfg_.classify_multiplier * other2;
    }

    static double positive_delta(double current, double target, double fraction) {
        double d = (target - current) * fraction;
        return d > 0.0 ? d : 0.0;
    }

    static double apply_deposit(double& channel, double target, double fraction) {
        double d = (target - channel) * fraction;
        if (d <= 0.0) return 0.0;
        double before = channel;
        channel += d;
        if (channel > 1.0) channel = 1.0;
        return channel - before;
    }
};

} // namespace protolife
