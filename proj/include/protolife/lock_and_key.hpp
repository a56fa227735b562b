#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace protolife {

// The five node functional attachments, in their fixed order. Type i sits at
// function point i/T on the unit signature interval, so with T = 5:
// Flagellum 0.0, Spike 0.2, Phagoreceptor 0.4, Photoreceptor 0.6,
// AdhesionReceptor 0.8.
enum class AttachmentKind : int {
    Flagellum = 0,
    Spike = 1,
    Phagoreceptor = 2,
    Photoreceptor = 3,
    AdhesionReceptor = 4,
};

inline constexpr int kAttachmentKinds = 5;

inline constexpr const char* attachment_name(AttachmentKind k) {
    switch (k) {
        case AttachmentKind::Flagellum: return "flagellum";
        case AttachmentKind::Spike: return "spike";
        case AttachmentKind::Phagoreceptor: return "phagoreceptor";
        case AttachmentKind::Photoreceptor: return "photoreceptor";
        case AttachmentKind::AdhesionReceptor: return "adhesion_receptor";
    }
    return "?";
}

inline constexpr double function_point(AttachmentKind k) {
    return static_cast<double>(static_cast<int>(k)) / kAttachmentKinds;
}

// Cyclic distance between two signatures on the unit interval:
//   D_cycle(s1, s2) = min(s_max - s_min, 1 - s_max + s_min)
// Always in [0, 0.5] and symmetric.
inline double cycle_distance(double s1, double s2) {
    double s_max = s1 > s2 ? s1 : s2;
    double s_min = s1 > s2 ? s2 : s1;
    double direct = s_max - s_min;
    double wrapped = 1.0 - s_max + s_min;
    return direct < wrapped ? direct : wrapped;
}

// Matching coefficient between a construction signature and a molecule
// signature: 1 at zero matching distance, 0 at or beyond the critical
// distance, linear in between.
inline double matching_coefficient(double d, double d_critical) {
    if (d >= d_critical) return 0.0;
    double k = (d_critical - d) / d_critical;
    return k > 1.0 ? 1.0 : k;
}

struct FunctionalPotency {
    double k_func = 0.0;
    AttachmentKind kind = AttachmentKind::Flagellum;
};

// How strongly a molecule promotes the attachment type at its nearest
// function point. The distance to the closest point is divided by 1/(2T),
// the distance at which that point stops being the closest, and complemented
// so a molecule sitting exactly on a function point has potency 1. Distances
// are cyclic, so signatures near 1.0 promote the flagellum at 0.0; ties
// between two equally close points go to the lower-index type.
inline FunctionalPotency functional_potency(double molecule_signature) {
    constexpr int T = kAttachmentKinds;
    int best = 0;
    double best_d = cycle_distance(molecule_signature, 0.0);
    for (int i = 1; i < T; ++i) {
        double d = cycle_distance(molecule_signature, static_cast<double>(i) / T);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    double k = 1.0 - 2.0 * T * best_d;
    if (k < 0.0) k = 0.0;
    return {k, static_cast<AttachmentKind>(best)};
}

// Molecule signatures live on the lattice {i / T_mol : 0 <= i < T_mol}.
inline double snap_to_lattice(double signature, std::int64_t t_mol) {
    double scaled = signature * static_cast<double>(t_mol);
    auto i = static_cast<std::int64_t>(std::llround(scaled));
    i %= t_mol;
    if (i < 0) i += t_mol;
    return static_cast<double>(i) / static_cast<double>(t_mol);
}

inline std::int64_t lattice_index(double signature, std::int64_t t_mol) {
    auto i = static_cast<std::int64_t>(std::llround(signature * static_cast<double>(t_mol)));
    i %= t_mol;
    if (i < 0) i += t_mol;
    return i;
}

// Aggregate construction drive a molecule store exerts on one node, per
// attachment type: each stored molecule contributes quantity * k_func *
// k_matching toward the type at its closest function point.
template <typename MoleculeRange>
std::array<double, kAttachmentKinds> select_project(double construction_signature,
                                                    const MoleculeRange& store,
                                                    std::int64_t t_mol,
                                                    double d_critical) {
    std::array<double, kAttachmentKinds> drive{};
    for (std::int64_t i = 0; i < t_mol; ++i) {
        double qty = store[static_cast<std::size_t>(i)];
        if (qty <= 0.0) continue;
        double s_m = static_cast<double>(i) / static_cast<double>(t_mol);
        FunctionalPotency fp = functional_potency(s_m);
        if (fp.k_func <= 0.0) continue;
        double k_match = matching_coefficient(cycle_distance(construction_signature, s_m), d_critical);
        if (k_match <= 0.0) continue;
        drive[static_cast<std::size_t>(fp.kind)] += qty * fp.k_func * k_match;
    }
    return drive;
}

} // namespace protolife
