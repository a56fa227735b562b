#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "protolife/genome.hpp"
#include "protolife/rng.hpp"

using namespace protolife;

namespace {

SimConfig::Grn grn_defaults() { return SimConfig{}.grn; }

Genome make_genome(int nodes, RngStream& rng, std::uint64_t& innov) {
    std::vector<double> angles;
    for (int i = 0; i < nodes; ++i) angles.push_back(rng.uniform(0.0, kTwoPi));
    return init_genome(nodes, angles, {0.8, 0.8, 0.8}, rng, innov, grn_defaults());
}

} // namespace

TEST_CASE("remap_cyclic fixed points") {
    CHECK(remap_cyclic(0.5, 0.0, 1.0) == doctest::Approx(0.5));
    CHECK(remap_cyclic(1.25, 0.0, 1.0) == doctest::Approx(0.25));
    CHECK(remap_cyclic(-0.25, 0.0, 1.0) == doctest::Approx(0.75));
    CHECK(remap_cyclic(0.0, -1.0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("remap_cyclic periodicity and range (property)") {
    RngStream rng = RngStream::root(17).fork("remap");
    for (int i = 0; i < 50000; ++i) {
        double lo = rng.uniform(-10.0, 10.0);
        double hi = lo + rng.uniform(0.1, 20.0);
        double x = rng.uniform(-100.0, 100.0);
        int k = static_cast<int>(rng.below(21)) - 10;
        double w = hi - lo;
        double y1 = remap_cyclic(x, lo, hi);
        double y2 = remap_cyclic(x + k * w, lo, hi);
        CHECK(y1 >= lo);
        CHECK(y1 < hi);
        CHECK(std::abs(y1 - y2) < 1e-12 * std::max(1.0, std::abs(x) + std::abs(k) * w));
    }
}

TEST_CASE("neuron with no incoming connections ticks to tanh(0) = 0") {
    Genome g;
    g.neurons = {{0, NeuronKind::Input}, {1, NeuronKind::Output}};
    g.next_neuron_id = 2;
    g.input_neurons = {0};
    g.output_neurons = {1};
    g.traits.node_angles = {0.0};
    auto net = CompiledGrn::build(g);
    auto state = GrnState::zeros(2);
    state.values[1] = 0.7;  // stale value must be overwritten
    std::vector<double> out;
    grn_tick(net, state, {1.0}, out);
    CHECK(out[0] == 0.0);
}

TEST_CASE("output fed only by bias reaches tanh(w) after one tick") {
    Genome g;
    g.neurons = {{0, NeuronKind::Input}, {1, NeuronKind::Output}};
    g.next_neuron_id = 2;
    g.input_neurons = {0};
    g.output_neurons = {1};
    g.connections = {{0, 1, 0.8, true, 1}};
    g.traits.node_angles = {0.0};
    auto net = CompiledGrn::build(g);
    auto state = GrnState::zeros(2);
    std::vector<double> out;
    grn_tick(net, state, {1.0}, out);
    CHECK(out[0] == doctest::Approx(std::tanh(0.8)).epsilon(1e-15));
    grn_tick(net, state, {1.0}, out);  // steady state
    CHECK(out[0] == doctest::Approx(std::tanh(0.8)).epsilon(1e-15));
}

TEST_CASE("disabled connections do not contribute") {
    Genome g;
    g.neurons = {{0, NeuronKind::Input}, {1, NeuronKind::Output}};
    g.next_neuron_id = 2;
    g.input_neurons = {0};
    g.output_neurons = {1};
    g.connections = {{0, 1, 5.0, false, 1}};
    g.traits.node_angles = {0.0};
    auto net = CompiledGrn::build(g);
    auto state = GrnState::zeros(2);
    std::vector<double> out;
    grn_tick(net, state, {1.0}, out);
    CHECK(out[0] == 0.0);
}

TEST_CASE("tick matches the dense-matrix recurrence oracle on random genomes") {
    RngStream rng = RngStream::root(4242).fork("grn-oracle");
    for (int trial = 0; trial < 40; ++trial) {
        Genome g = oracle::random_genome(rng);
        auto net = CompiledGrn::build(g);
        auto state = GrnState::zeros(g.neurons.size());
        std::vector<double> ref_state(g.neurons.size(), 0.0);
        auto dense = oracle::DenseGrn::build(g);
        std::vector<double> out, ref_out;
        for (int t = 0; t < 12; ++t) {
            std::vector<double> inputs;
            for (std::size_t i = 0; i < g.input_neurons.size(); ++i)
                inputs.push_back(rng.uniform(-1.0, 1.0));
            grn_tick(net, state, inputs, out);
            dense.tick(ref_state, inputs, ref_out);
            REQUIRE(out.size() == ref_out.size());
            for (std::size_t i = 0; i < out.size(); ++i)
                CHECK(std::abs(out[i] - ref_out[i]) < 1e-12);
        }
    }
}

TEST_CASE("post-activation state stays in [-1, 1]") {
    RngStream rng = RngStream::root(99).fork("bounds");
    Genome g = oracle::random_genome(rng);
    auto net = CompiledGrn::build(g);
    auto state = GrnState::zeros(g.neurons.size());
    std::vector<double> out;
    for (int t = 0; t < 50; ++t) {
        std::vector<double> inputs;
        for (std::size_t i = 0; i < g.input_neurons.size(); ++i)
            inputs.push_back(rng.uniform(-5.0, 5.0));  // clamped on load
        grn_tick(net, state, inputs, out);
        for (double v : state.values) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
            CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("init_genome wires traits to the bias only") {
    RngStream rng = RngStream::root(1).fork("init");
    std::uint64_t innov = 1;
    Genome g = make_genome(4, rng, innov);
    CHECK(g.validate().empty());
    ChannelLayout lay = g.layout();
    std::uint32_t bias_id = g.input_neurons[ChannelLayout::kBias];
    for (int ch = 0; ch < lay.output_count(); ++ch) {
        if (!lay.is_trait_output(ch)) continue;
        std::uint32_t neuron = g.output_neurons[static_cast<std::size_t>(ch)];
        int incoming = 0;
        for (const auto& c : g.connections)
            if (c.dst == neuron) {
                ++incoming;
                CHECK(c.src == bias_id);
            }
        CHECK(incoming == 1);
    }
}

TEST_CASE("init_genome control connectivity is 50% (Monte Carlo)") {
    RngStream rng = RngStream::root(2).fork("mc");
    std::uint64_t innov = 1;
    std::int64_t realized = 0, possible = 0;
    for (int trial = 0; trial < 60; ++trial) {
        Genome g = make_genome(3, rng, innov);
        ChannelLayout lay = g.layout();
        for (int ch = 0; ch < lay.output_count(); ++ch) {
            if (lay.is_trait_output(ch)) continue;
            std::uint32_t neuron = g.output_neurons[static_cast<std::size_t>(ch)];
            for (const auto& c : g.connections)
                if (c.dst == neuron) ++realized;
            possible += lay.input_count();
        }
    }
    double fraction = static_cast<double>(realized) / static_cast<double>(possible);
    CHECK(fraction > 0.49);
    CHECK(fraction < 0.51);
}

TEST_CASE("trait outputs remap to a near-uniform distribution at init") {
    RngStream rng = RngStream::root(55).fork("uniform-traits");
    std::uint64_t innov = 1;
    int low = 0, high = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        Genome g = make_genome(1, rng, innov);
        ChannelLayout lay = g.layout();
        std::uint32_t sig_neuron = g.output_neurons[static_cast<std::size_t>(lay.node_signature(0))];
        double w = 0.0;
        for (const auto& c : g.connections)
            if (c.dst == sig_neuron) w = c.weight;
        double value = remap_cyclic(std::tanh(w), 0.0, 1.0);
        CHECK(value >= 0.0);
        CHECK(value < 1.0);
        (value < 0.5 ? low : high) += 1;
    }
    CHECK(std::abs(low - high) < 200);  // ~uniform halves
}

TEST_CASE("mutation with all rates zero is the identity") {
    RngStream rng = RngStream::root(5).fork("nomut");
    std::uint64_t innov = 1;
    Genome g = make_genome(3, rng, innov);
    Genome copy = g;
    SimConfig::Grn rates = grn_defaults();
    rates.p_weight_perturb = rates.p_weight_reset = rates.p_add_connection = 0.0;
    rates.p_add_neuron = rates.p_toggle_enable = 0.0;
    mutate_genome(copy, rng, innov, rates);
    CHECK(copy == g);
}

TEST_CASE("add-neuron splits a connection NEAT-style") {
    Genome g;
    g.neurons = {{0, NeuronKind::Input}, {1, NeuronKind::Output}};
    g.next_neuron_id = 2;
    g.input_neurons = {0};
    g.output_neurons = {1};
    g.connections = {{0, 1, 0.37, true, 1}};
    g.traits.node_angles = {0.0};
    SimConfig::Grn rates = grn_defaults();
    rates.p_weight_perturb = rates.p_weight_reset = rates.p_add_connection = 0.0;
    rates.p_toggle_enable = 0.0;
    rates.p_add_neuron = 1.0;
    std::uint64_t innov = 2;
    RngStream rng = RngStream::root(6).fork("split");
    mutate_genome(g, rng, innov, rates);
    REQUIRE(g.neurons.size() == 3);
    REQUIRE(g.connections.size() == 3);
    const Connection& old = g.connections[0];
    CHECK_FALSE(old.enabled);
    std::uint32_t mid = g.neurons[2].id;
    bool found_in = false, found_out = false;
    for (const auto& c : g.connections) {
        if (c.src == 0 && c.dst == mid) {
            CHECK(c.weight == doctest::Approx(1.0));
            CHECK(c.enabled);
            found_in = true;
        }
        if (c.src == mid && c.dst == 1) {
            CHECK(c.weight == doctest::Approx(0.37));
            CHECK(c.enabled);
            found_out = true;
        }
    }
    CHECK(found_in);
    CHECK(found_out);
}

TEST_CASE("random mutation chains preserve genome validity (property)") {
    RngStream rng = RngStream::root(7).fork("chains");
    std::uint64_t innov = 1;
    SimConfig::Grn rates = grn_defaults();
    for (int chain = 0; chain < 25; ++chain) {
        Genome g = make_genome(2 + static_cast<int>(rng.below(3)), rng, innov);
        for (int step = 0; step < 40; ++step) {
            mutate_genome(g, rng, innov, rates);
            auto err = g.validate();
            if (!err.empty()) FAIL("invalid genome after mutation: ", err);
        }
    }
}

TEST_CASE("heritability: identical genomes express identical outputs") {
    RngStream rng = RngStream::root(8).fork("herit");
    std::uint64_t innov = 1;
    Genome parent = make_genome(3, rng, innov);
    Genome child = parent;  // zero-rate mutation == copy
    auto net_p = CompiledGrn::build(parent);
    auto net_c = CompiledGrn::build(child);
    auto state_p = GrnState::zeros(parent.neurons.size());
    auto state_c = GrnState::zeros(child.neurons.size());
    std::vector<double> out_p, out_c;
    for (int t = 0; t < 20; ++t) {
        std::vector<double> inputs;
        for (std::size_t i = 0; i < parent.input_neurons.size(); ++i)
            inputs.push_back(rng.uniform(-1.0, 1.0));
        grn_tick(net_p, state_p, inputs, out_p);
        grn_tick(net_c, state_c, inputs, out_c);
        CHECK(out_p == out_c);
    }
}
