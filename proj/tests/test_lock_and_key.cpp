#include <doctest.h>

#include "oracles.hpp"
#include "protolife/lock_and_key.hpp"
#include "protolife/rng.hpp"

using namespace protolife;

TEST_CASE("cycle_distance fixed points") {
    CHECK(cycle_distance(0.3, 0.3) == doctest::Approx(0.0));
    CHECK(cycle_distance(0.1, 0.9) == doctest::Approx(0.2));  // wrap-around is shorter
    CHECK(cycle_distance(0.25, 0.75) == doctest::Approx(0.5));  // antipodal maximum
}

TEST_CASE("cycle_distance bounds and symmetry (property)") {
    RngStream rng = RngStream::root(101).fork("dcycle");
    for (int i = 0; i < 20000; ++i) {
        double a = rng.uniform01();
        double b = rng.uniform01();
        double d = cycle_distance(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= 0.5);
        CHECK(d == cycle_distance(b, a));
        CHECK(d == doctest::Approx(oracle::cycle_distance(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("matching_coefficient paper-fixed endpoints") {
    const double d_crit = 0.1;
    CHECK(matching_coefficient(0.0, d_crit) == doctest::Approx(1.0));
    CHECK(matching_coefficient(d_crit, d_crit) == doctest::Approx(0.0));
    CHECK(matching_coefficient(d_crit * 2.0, d_crit) == doctest::Approx(0.0));
    // linear interpolation between the fixed endpoints
    CHECK(matching_coefficient(d_crit / 2.0, d_crit) == doctest::Approx(0.5));
    CHECK(matching_coefficient(d_crit / 4.0, d_crit) == doctest::Approx(0.75));
}

TEST_CASE("functional potency on the named lattice points") {
    auto [k1, kind1] = functional_potency(0.4);
    CHECK(k1 == doctest::Approx(1.0));
    CHECK(kind1 == AttachmentKind::Phagoreceptor);

    // 0.5 is equidistant to 0.4 and 0.6; lower index wins and potency is zero
    auto [k2, kind2] = functional_potency(0.5);
    CHECK(k2 == doctest::Approx(0.0));
    CHECK(kind2 == AttachmentKind::Phagoreceptor);

    // cyclic distance: 0.95 is 0.05 from flagellum at 0.0
    auto [k3, kind3] = functional_potency(0.95);
    CHECK(k3 == doctest::Approx(0.5));
    CHECK(kind3 == AttachmentKind::Flagellum);
}

TEST_CASE("functional potency matches the brute-force oracle on the full lattice") {
    for (int i = 0; i < 128; ++i) {
        double s = static_cast<double>(i) / 128.0;
        auto got = functional_potency(s);
        auto want = oracle::potency(s);
        CHECK(static_cast<int>(got.kind) == want.kind);
        CHECK(got.k_func == doctest::Approx(want.k_func).epsilon(1e-12));
    }
}

TEST_CASE("snap_to_lattice wraps and rounds to the nearest point") {
    CHECK(snap_to_lattice(0.5, 128) == doctest::Approx(64.0 / 128.0));
    CHECK(snap_to_lattice(0.9999, 128) == doctest::Approx(0.0));  // wraps to index 0
    CHECK(snap_to_lattice(0.0, 128) == doctest::Approx(0.0));
    CHECK(lattice_index(0.5, 128) == 64);
}

TEST_CASE("select_project drives") {
    std::vector<double> store(128, 0.0);
    const double d_crit = 0.1;

    SUBCASE("empty store gives zero drive everywhere") {
        auto drive = select_project(0.4, store, 128, d_crit);
        for (double d : drive) CHECK(d == 0.0);
    }

    SUBCASE("molecule on a function point with a matching signature drives only that type") {
        store[0] = 2.5;  // index 0: signature 0.0, exactly the flagellum point
        auto drive = select_project(0.0, store, 128, d_crit);
        CHECK(drive[static_cast<int>(AttachmentKind::Flagellum)] == doctest::Approx(2.5));
        for (int k = 0; k < kAttachmentKinds; ++k)
            if (k != static_cast<int>(AttachmentKind::Flagellum)) CHECK(drive[k] == 0.0);
    }

    SUBCASE("near-phagoreceptor molecule drives phagoreceptor by the oracle product") {
        std::int64_t idx = lattice_index(0.4, 128);  // 51/128, just off the 0.4 point
        store[static_cast<std::size_t>(idx)] = 2.5;
        double s_m = static_cast<double>(idx) / 128.0;
        auto drive = select_project(s_m, store, 128, d_crit);
        double want = 2.5 * oracle::potency(s_m).k_func;  // matching distance is exactly zero
        CHECK(drive[static_cast<int>(AttachmentKind::Phagoreceptor)] ==
              doctest::Approx(want).epsilon(1e-12));
    }

    SUBCASE("boundary molecule at 0.5 has zero potency and drives nothing") {
        store[64] = 3.0;  // 64/128 = 0.5, equidistant between two function points
        auto drive = select_project(0.5, store, 128, d_crit);
        for (double d : drive) CHECK(d < 1e-12);  // zero up to rounding in 0.5 - 0.4
    }

    SUBCASE("drive is the quantity-weighted product of the two coefficients") {
        // molecule at 0.2109375 (index 27): near spike (0.2)
        store[27] = 4.0;
        double s_m = 27.0 / 128.0;
        auto drive = select_project(0.25, store, 128, d_crit);
        double want = 4.0 * oracle::potency(s_m).k_func *
                      oracle::matching(oracle::cycle_distance(0.25, s_m), d_crit);
        CHECK(drive[static_cast<int>(AttachmentKind::Spike)] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("drive is non-negative and coefficients stay in [0,1] (property)") {
    RngStream rng = RngStream::root(303).fork("drive");
    std::vector<double> store(128, 0.0);
    for (int trial = 0; trial < 300; ++trial) {
        std::fill(store.begin(), store.end(), 0.0);
        for (int j = 0; j < 10; ++j) store[rng.below(128)] = rng.uniform(0.0, 5.0);
        double sig = rng.uniform01();
        auto drive = select_project(sig, store, 128, 0.1);
        for (double d : drive) CHECK(d >= 0.0);
        double s = rng.uniform01();
        auto pot = functional_potency(s);
        CHECK(pot.k_func >= 0.0);
        CHECK(pot.k_func <= 1.0);
        double km = matching_coefficient(cycle_distance(sig, s), 0.1);
        CHECK(km >= 0.0);
        CHECK(km <= 1.0);
    }
}
