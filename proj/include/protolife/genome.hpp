#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "protolife/config.hpp"
#include "protolife/rng.hpp"
#include "protolife/vec2.hpp"

namespace protolife {

// GRN IO channel layout. The network cannot tell sensors from gene
// regulators or controls from traits; this table is the simulation's side of
// the contract.
//
// Inputs:  0 bias (always 1), 1 random source in [-1,1], 2 health, 3 radius,
//          4 energy, 5 plant food, 6 meat food, 7 generation,
//          then per surface node: 3 sensor channels.
// Outputs: 0 growth rate, 1 digestion rate, 2 division-size threshold,
//          3 repair priority, 4 production signature, 5 production rate,
//          then per surface node: 3 control channels + 1 construction
//          signature.
struct ChannelLayout {
    static constexpr int kWholeCellInputs = 8;
    static constexpr int kWholeCellOutputs = 6;
    static constexpr int kPerNodeInputs = 3;
    static constexpr int kPerNodeOutputs = 4;

    int node_count = 0;

    int input_count() const { return kWholeCellInputs + kPerNodeInputs * node_count; }
    int output_count() const { return kWholeCellOutputs + kPerNodeOutputs * node_count; }

    static constexpr int kBias = 0;
    static constexpr int kRandom = 1;
    static constexpr int kHealth = 2;
    static constexpr int kRadius = 3;
    static constexpr int kEnergy = 4;
    static constexpr int kPlantFood = 5;
    static constexpr int kMeatFood = 6;
    static constexpr int kGeneration = 7;

    static constexpr int kGrowthRate = 0;
    static constexpr int kDigestionRate = 1;
    static constexpr int kDivisionThreshold = 2;
    static constexpr int kRepairPriority = 3;
    static constexpr int kProductionSignature = 4;
    static constexpr int kProductionRate = 5;

    int node_sensor(int node, int i) const { return kWholeCellInputs + kPerNodeInputs * node + i; }
    int node_control(int node, int i) const { return kWholeCellOutputs + kPerNodeOutputs * node + i; }
    int node_signature(int node) const { return kWholeCellOutputs + kPerNodeOutputs * node + 3; }

    // Trait outputs (construction signatures, growth rate, division
    // threshold) are wired to the bias term only at initialisation so they
    // pass unchanged to offspring; everything else counts as a control.
    bool is_trait_output(int channel) const {
        if (channel == kGrowthRate || channel == kDivisionThreshold) return true;
        if (channel >= kWholeCellOutputs &&
            (channel - kWholeCellOutputs) % kPerNodeOutputs == 3)
            return true;  // construction signatures
        return false;
    }
};

enum class NeuronKind : std::uint8_t { Input = 0, Hidden = 1, Output = 2 };

struct Neuron {
    std::uint32_t id = 0;
    NeuronKind kind = NeuronKind::Hidden;
    bool operator==(const Neuron&) const = default;
};

struct Connection {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    double weight = 0.0;
    bool enabled = true;
    std::uint64_t innovation = 0;
    bool operator==(const Connection&) const = default;
};

// Traits not expressed through the network: node placement and cell colour.
struct UnregulatedTraits {
    std::vector<double> node_angles;  // radians, list order == node order
    Rgb colour{0.8, 0.8, 0.8};
    bool operator==(const UnregulatedTraits&) const = default;
};

struct Genome {
    std::vector<Neuron> neurons;          // sorted by id
    std::vector<Connection> connections;  // sorted by innovation
    std::vector<std::uint32_t> input_neurons;   // channel -> neuron id
    std::vector<std::uint32_t> output_neurons;  // channel -> neuron id
    UnregulatedTraits traits;
    std::uint32_t next_neuron_id = 0;

    bool operator==(const Genome&) const = default;

    ChannelLayout layout() const {
        return ChannelLayout{static_cast<int>(traits.node_angles.size())};
    }

    const Neuron* find_neuron(std::uint32_t id) const {
        auto it = std::lower_bound(neurons.begin(), neurons.end(), id,
                                   [](const Neuron& n, std::uint32_t v) { return n.id < v; });
        return (it != neurons.end() && it->id == id) ? &*it : nullptr;
    }

    bool has_pair(std::uint32_t src, std::uint32_t dst) const {
        for (const auto& c : connections)
            if (c.src == src && c.dst == dst) return true;
        return false;
    }

    // Checks every structural invariant; returns an empty string when valid.
    std::string validate() const;
};

inline std::string Genome::validate() const {
    ChannelLayout lay = layout();
    if (traits.node_angles.empty()) return "genome has no surface nodes";
    if (static_cast<int>(input_neurons.size()) != lay.input_count())
        return "input binding count mismatch";
    if (static_cast<int>(output_neurons.size()) != lay.output_count())
        return "output binding count mismatch";

    std::unordered_set<std::uint32_t> ids;
    for (std::size_t i = 0; i < neurons.size(); ++i) {
        if (i > 0 && neurons[i - 1].id >= neurons[i].id) return "neurons not sorted by unique id";
        ids.insert(neurons[i].id);
        if (neurons[i].id >= next_neuron_id) return "neuron id beyond next_neuron_id";
    }
    std::unordered_set<std::uint32_t> bound;
    for (std::uint32_t id : input_neurons) {
        const Neuron* n = find_neuron(id);
        if (!n || n->kind != NeuronKind::Input) return "input channel bound to non-input neuron";
        if (!bound.insert(id).second) return "neuron bound to two channels";
    }
    for (std::uint32_t id : output_neurons) {
        const Neuron* n = find_neuron(id);
        if (!n || n->kind != NeuronKind::Output) return "output channel bound to non-output neuron";
        if (!bound.insert(id).second) return "neuron bound to two channels";
    }
    std::unordered_set<std::uint64_t> innovations;
    std::unordered_set<std::uint64_t> enabled_pairs;
    for (std::size_t i = 0; i < connections.size(); ++i) {
        const auto& c = connections[i];
        if (i > 0 && connections[i - 1].innovation >= c.innovation)
            return "connections not sorted by unique innovation";
        if (!innovations.insert(c.innovation).second) return "duplicate innovation number";
        if (!ids.count(c.src) || !ids.count(c.dst)) return "connection references missing neuron";
        const Neuron* dst = find_neuron(c.dst);
        if (dst->kind == NeuronKind::Input) return "connection into an input neuron";
        if (!std::isfinite(c.weight)) return "non-finite weight";
        if (c.enabled) {
            std::uint64_t pair = (static_cast<std::uint64_t>(c.src) << 32) | c.dst;
            if (!enabled_pairs.insert(pair).second) return "duplicate enabled (src,dst) pair";
        }
    }
    for (double a : traits.node_angles)
        if (!(a >= 0.0 && a < kTwoPi)) return "node angle outside [0, 2*pi)";
    return {};
}

// Cyclic linear remapping of an unbounded value into [lo, hi): the value is
// brought back into range with a non-negative modulo, so the output density
// has no tail bias at either end.
inline double remap_cyclic(double x, double lo, double hi) {
    double width = hi - lo;
    double m = std::fmod(x - lo, width);
    if (m < 0.0) m += width;
    double y = lo + m;
    if (y >= hi) y = lo;  // guard against rounding landing exactly on hi
    return y;
}

// --- Initial wiring ------------------------------------------------------

// Builds a genome for the initial population. Control outputs connect to
// every input independently with probability 0.5 (weights ~ N(0, sigma));
// trait outputs get a single bias connection whose weight is drawn so the
// remapped trait is uniform over its range (tanh(w) uniform in (-1,1)).
inline Genome init_genome(int node_count, const std::vector<double>& node_angles,
                          Rgb colour, RngStream& rng, std::uint64_t& innovation_counter,
                          const SimConfig::Grn& grn_cfg) {
    Genome g;
    g.traits.node_angles = node_angles;
    g.traits.colour = colour;
    ChannelLayout lay{node_count};

    g.input_neurons.resize(static_cast<std::size_t>(lay.input_count()));
    g.output_neurons.resize(static_cast<std::size_t>(lay.output_count()));
    for (int i = 0; i < lay.input_count(); ++i) {
        std::uint32_t id = g.next_neuron_id++;
        g.neurons.push_back({id, NeuronKind::Input});
        g.input_neurons[static_cast<std::size_t>(i)] = id;
    }
    for (int i = 0; i < lay.output_count(); ++i) {
        std::uint32_t id = g.next_neuron_id++;
        g.neurons.push_back({id, NeuronKind::Output});
        g.output_neurons[static_cast<std::size_t>(i)] = id;
    }

    for (int out = 0; out < lay.output_count(); ++out) {
        std::uint32_t dst = g.output_neurons[static_cast<std::size_t>(out)];
        if (lay.is_trait_output(out)) {
            double u = rng.uniform(-1.0, 1.0);
            u = std::clamp(u, -1.0 + 1e-12, 1.0 - 1e-12);
            g.connections.push_back({g.input_neurons[ChannelLayout::kBias], dst,
                                     std::atanh(u), true, innovation_counter++});
        } else {
            for (int in = 0; in < lay.input_count(); ++in) {
                bool connect = rng.chance(0.5);
                if (!connect) continue;
                double w = rng.normal(0.0, grn_cfg.sigma_init);
                g.connections.push_back({g.input_neurons[static_cast<std::size_t>(in)], dst,
                                         w, true, innovation_counter++});
            }
        }
    }
    return g;
}

// Creates the bindings for one freshly inserted surface node (mutation
// path), wired by the same rules as init_genome. `position` is the node's
// index in the post-insertion list.
inline void add_node_bindings(Genome& g, int position, RngStream& rng,
                              std::uint64_t& innovation_counter,
                              const SimConfig::Grn& grn_cfg) {
    ChannelLayout lay = g.layout();  // layout after the angle list grew
    std::vector<std::uint32_t> sensors, outputs;
    for (int i = 0; i < ChannelLayout::kPerNodeInputs; ++i) {
        std::uint32_t id = g.next_neuron_id++;
        g.neurons.push_back({id, NeuronKind::Input});
        sensors.push_back(id);
    }
    for (int i = 0; i < ChannelLayout::kPerNodeOutputs; ++i) {
        std::uint32_t id = g.next_neuron_id++;
        g.neurons.push_back({id, NeuronKind::Output});
        outputs.push_back(id);
    }
    g.input_neurons.insert(g.input_neurons.begin() + ChannelLayout::kWholeCellInputs +
                               ChannelLayout::kPerNodeInputs * position,
                           sensors.begin(), sensors.end());
    g.output_neurons.insert(g.output_neurons.begin() + ChannelLayout::kWholeCellOutputs +
                                ChannelLayout::kPerNodeOutputs * position,
                            outputs.begin(), outputs.end());

    for (int i = 0; i < ChannelLayout::kPerNodeOutputs; ++i) {
        int channel = lay.node_control(position, i);
        std::uint32_t dst = outputs[static_cast<std::size_t>(i)];
        if (lay.is_trait_output(channel)) {
            double u = std::clamp(rng.uniform(-1.0, 1.0), -1.0 + 1e-12, 1.0 - 1e-12);
            g.connections.push_back({g.input_neurons[ChannelLayout::kBias], dst,
                                     std::atanh(u), true, innovation_counter++});
        } else {
            for (std::uint32_t src : g.input_neurons) {
                if (!rng.chance(0.5)) continue;
                g.connections.push_back({src, dst, rng.normal(0.0, grn_cfg.sigma_init),
                                         true, innovation_counter++});
            }
        }
    }
}

// Drops one node's bindings, its neurons, and every connection touching them.
inline void remove_node_bindings(Genome& g, int position) {
    auto in_begin = g.input_neurons.begin() + ChannelLayout::kWholeCellInputs +
                    ChannelLayout::kPerNodeInputs * position;
    auto out_begin = g.output_neurons.begin() + ChannelLayout::kWholeCellOutputs +
                     ChannelLayout::kPerNodeOutputs * position;
    std::unordered_set<std::uint32_t> doomed(in_begin, in_begin + ChannelLayout::kPerNodeInputs);
    doomed.insert(out_begin, out_begin + ChannelLayout::kPerNodeOutputs);
    g.input_neurons.erase(in_begin, in_begin + ChannelLayout::kPerNodeInputs);
    g.output_neurons.erase(out_begin, out_begin + ChannelLayout::kPerNodeOutputs);
    std::erase_if(g.neurons, [&](const Neuron& n) { return doomed.count(n.id) != 0; });
    std::erase_if(g.connections,
                  [&](const Connection& c) { return doomed.count(c.src) || doomed.count(c.dst); });
}

// --- NEAT-style mutation --------------------------------------------------

// Weight perturbation/reset, add-connection, add-neuron (connection split),
// and enable-toggle. IO bindings are untouched; any draw that would violate
// an invariant is re-drawn a bounded number of times and then skipped.
inline void mutate_genome(Genome& g, RngStream& rng, std::uint64_t& innovation_counter,
                          const SimConfig::Grn& cfg) {
    for (auto& c : g.connections) {
        if (cfg.p_weight_perturb > 0.0 && rng.chance(cfg.p_weight_perturb)) {
            c.weight += rng.normal(0.0, cfg.weight_perturb_sigma);
        } else if (cfg.p_weight_reset > 0.0 && rng.chance(cfg.p_weight_reset)) {
            c.weight = rng.normal(0.0, cfg.sigma_init);
        }
    }

    if (cfg.p_add_connection > 0.0 && rng.chance(cfg.p_add_connection)) {
        // dst must be a non-input neuron; self-loops are fine (the network is
        // recurrent), duplicates of existing pairs are not.
        std::vector<std::uint32_t> dst_pool;
        for (const auto& n : g.neurons)
            if (n.kind != NeuronKind::Input) dst_pool.push_back(n.id);
        for (int attempt = 0; attempt < 20 && !dst_pool.empty(); ++attempt) {
            std::uint32_t src = g.neurons[rng.below(g.neurons.size())].id;
            std::uint32_t dst = dst_pool[rng.below(dst_pool.size())];
            if (g.has_pair(src, dst)) continue;
            g.connections.push_back({src, dst, rng.normal(0.0, cfg.sigma_init),
                                     true, innovation_counter++});
            break;
        }
    }

    if (cfg.p_add_neuron > 0.0 && rng.chance(cfg.p_add_neuron)) {
        std::vector<std::size_t> enabled;
        for (std::size_t i = 0; i < g.connections.size(); ++i)
            if (g.connections[i].enabled) enabled.push_back(i);
        if (!enabled.empty()) {
            std::size_t pick = enabled[rng.below(enabled.size())];
            std::uint32_t nid = g.next_neuron_id++;
            g.neurons.push_back({nid, NeuronKind::Hidden});
            Connection& old = g.connections[pick];
            old.enabled = false;
            std::uint32_t src = old.src, dst = old.dst;
            double w = old.weight;
            g.connections.push_back({src, nid, 1.0, true, innovation_counter++});
            g.connections.push_back({nid, dst, w, true, innovation_counter++});
        }
    }

    if (cfg.p_toggle_enable > 0.0 && rng.chance(cfg.p_toggle_enable) && !g.connections.empty()) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            Connection& c = g.connections[rng.below(g.connections.size())];
            if (!c.enabled) {
                // re-enabling must not recreate an enabled duplicate
                bool dup = false;
                for (const auto& other : g.connections)
                    if (&other != &c && other.enabled && other.src == c.src && other.dst == c.dst)
                        dup = true;
                if (dup) continue;
            }
            c.enabled = !c.enabled;
            break;
        }
    }
}

// --- Runtime state --------------------------------------------------------

// Flattened evaluation form of a genome, rebuilt whenever a cell is born or
// restored. Neuron order follows the genome's neuron list.
struct CompiledGrn {
    struct Incoming {
        std::uint32_t src_index;
        double weight;
    };
    std::vector<std::vector<Incoming>> incoming;  // per neuron index, sorted by src then weight order
    std::vector<std::uint32_t> is_input;          // 1 if NeuronKind::Input
    std::vector<std::uint32_t> input_index;       // channel -> neuron index
    std::vector<std::uint32_t> output_index;      // channel -> neuron index

    static CompiledGrn build(const Genome& g) {
        CompiledGrn c;
        std::size_t n = g.neurons.size();
        c.incoming.resize(n);
        c.is_input.resize(n, 0);
        std::unordered_map<std::uint32_t, std::uint32_t> index;
        index.reserve(n * 2);
        for (std::size_t i = 0; i < n; ++i) {
            index[g.neurons[i].id] = static_cast<std::uint32_t>(i);
            if (g.neurons[i].kind == NeuronKind::Input) c.is_input[i] = 1;
        }
        for (const auto& conn : g.connections) {
            if (!conn.enabled) continue;
            c.incoming[index.at(conn.dst)].push_back({index.at(conn.src), conn.weight});
        }
        c.input_index.reserve(g.input_neurons.size());
        for (std::uint32_t id : g.input_neurons) c.input_index.push_back(index.at(id));
        c.output_index.reserve(g.output_neurons.size());
        for (std::uint32_t id : g.output_neurons) c.output_index.push_back(index.at(id));
        return c;
    }
};

// Per-neuron activation values; all in [-1, 1] (tanh codomain, and inputs
// are clamped on load).
struct GrnState {
    std::vector<double> values;

    static GrnState zeros(std::size_t neuron_count) {
        GrnState s;
        s.values.assign(neuron_count, 0.0);
        return s;
    }
};

// One synchronous network tick. Inputs are loaded into the input neurons
// first; every other neuron then computes tanh of the weighted sum of the
// previous state snapshot. Raw (pre-remap) output neuron values land in
// `outputs_raw`.
inline void grn_tick(const CompiledGrn& net, GrnState& state,
                     const std::vector<double>& inputs, std::vector<double>& outputs_raw) {
    std::size_t n = net.incoming.size();
    for (std::size_t ch = 0; ch < net.input_index.size(); ++ch) {
        double v = ch < inputs.size() ? inputs[ch] : 0.0;
        state.values[net.input_index[ch]] = std::clamp(v, -1.0, 1.0);
    }
    static thread_local std::vector<double> next;
    next.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (net.is_input[i]) {
            next[i] = state.values[i];
            continue;
        }
        double sum = 0.0;
        for (const auto& in : net.incoming[i]) sum += in.weight * state.values[in.src_index];
        next[i] = std::tanh(sum);
    }
    state.values.swap(next);
    outputs_raw.resize(net.output_index.size());
    for (std::size_t ch = 0; ch < net.output_index.size(); ++ch)
        outputs_raw[ch] = state.values[net.output_index[ch]];
}

} // namespace protolife
