#include <doctest.h>

#include "protolife/config.hpp"

using namespace protolife;

TEST_CASE("empty document yields all defaults") {
    SimConfig cfg = SimConfig::parse("");
    CHECK(cfg.sim.molecule_count == 128);
    CHECK(cfg.sim.attachment_type_count == 5);
    CHECK(cfg.sim.chem_grid_size == 1024);
    CHECK(cfg.sim.master_seed == 1);
    CHECK(cfg.physics.c_lin == doctest::Approx(2.0));
    CHECK(cfg.nodes.d_critical == doctest::Approx(0.1));
}

TEST_CASE("molecule_count below attachment_type_count is rejected") {
    CHECK_THROWS_AS(SimConfig::parse("sim.molecule_count = 4"), ConfigError);
    try {
        SimConfig::parse("sim.molecule_count = 4");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("molecule_count") != std::string::npos);
    }
}

TEST_CASE("canonical serialization round-trips to identical text") {
    SimConfig cfg = SimConfig::parse("sim.chem_grid_size = 1024");
    std::string text = cfg.serialize();
    SimConfig again = SimConfig::parse(text);
    CHECK(again.serialize() == text);
}

TEST_CASE("parse then serialize preserves every field") {
    std::string doc =
        "sim.master_seed = 77\n"
        "sim.chem_grid_size = 256\n"
        "physics.c_lin = 0.5\n"
        "chem.classify_additive = true\n"
        "grn.p_add_neuron = 0.5\n"
        "evolution.r_min_div = 0.25\n";
    SimConfig cfg = SimConfig::parse(doc);
    CHECK(cfg.sim.master_seed == 77);
    CHECK(cfg.sim.chem_grid_size == 256);
    CHECK(cfg.physics.c_lin == doctest::Approx(0.5));
    CHECK(cfg.chem.classify_additive);
    CHECK(cfg.grn.p_add_neuron == doctest::Approx(0.5));
    SimConfig rt = SimConfig::parse(cfg.serialize());
    CHECK(rt.serialize() == cfg.serialize());
}

TEST_CASE("unknown keys are rejected with the line number and key name") {
    try {
        SimConfig::parse("# comment\nsim.not_a_key = 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("sim.not_a_key") != std::string::npos);
    }
}

TEST_CASE("range violations name the key and the bound") {
    try {
        SimConfig::parse("physics.restitution = 1.5");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        CHECK(msg.find("physics.restitution") != std::string::npos);
        CHECK(msg.find("1") != std::string::npos);
    }
}

TEST_CASE("malformed lines are diagnosed") {
    CHECK_THROWS_AS(SimConfig::parse("this is not a key value pair"), ConfigError);
    CHECK_THROWS_AS(SimConfig::parse("physics.c_lin = not_a_number"), ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
    SimConfig cfg = SimConfig::parse("\n# hello\n  \nsim.world_radius = 20 # inline\n");
    CHECK(cfg.sim.world_radius == doctest::Approx(20.0));
}

TEST_CASE("attachment_type_count is pinned at five") {
    CHECK_THROWS_AS(SimConfig::parse("sim.attachment_type_count = 4"), ConfigError);
    CHECK_THROWS_AS(SimConfig::parse("sim.attachment_type_count = 6"), ConfigError);
}
