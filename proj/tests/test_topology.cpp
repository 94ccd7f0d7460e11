#include <doctest.h>

#include <array>
#include <random>

#include "phfl/topology.hpp"

using namespace phfl;

TEST_CASE("balanced topology counts and uniform weights") {
    // L=2, 2 sBS/mBS, 2 VC/sBS, 6 UE/VC.
    const NetworkTopology t = build_topology(TopologyConfig::balanced(2, 2, 2, 6));
    CHECK(t.total_ues == 48);
    CHECK(t.total_vcs == 8);
    CHECK(t.total_sbs == 4);
    CHECK(t.alpha_mbs[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.alpha_ue[0][0][0][0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(t.ue_path_weight(0) == doctest::Approx(1.0 / 48.0).epsilon(1e-12));
}

TEST_CASE("single-node topology has unit weights") {
    const NetworkTopology t = build_topology(TopologyConfig::balanced(1, 1, 1, 1));
    CHECK(t.total_ues == 1);
    CHECK(t.ue_path_weight(0) == doctest::Approx(1.0));
}

TEST_CASE("explicit weights that do not sum to one are rejected") {
    TopologyConfig cfg = TopologyConfig::balanced(1, 1, 1, 2);
    cfg.weight_mode = TopologyConfig::WeightMode::Explicit;
    cfg.alpha_mbs = {1.0};
    cfg.alpha_sbs = {{1.0}};
    cfg.alpha_vc = {{{1.0}}};
    cfg.alpha_ue = {{{{0.3, 0.8}}}};
    CHECK_THROWS_AS(build_topology(cfg), Error);
    try {
        build_topology(cfg);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::WeightSumMismatch);
    }
}

TEST_CASE("empty tiers are rejected") {
    TopologyConfig cfg = TopologyConfig::balanced(1, 2, 1, 3);
    cfg.ues_per_vc[0][1][0] = 0;
    CHECK_THROWS_AS(build_topology(cfg), Error);
}

TEST_CASE("squared-weight product collapses to 1/U for balanced uniform trees") {
    for (const auto [l, k, j, u] : {std::array<int, 4>{2, 2, 2, 6}, {1, 3, 2, 4}, {2, 1, 4, 2}}) {
        const NetworkTopology t = build_topology(TopologyConfig::balanced(l, k, j, u));
        double sum = 0.0;
        for (int ue = 0; ue < t.total_ues; ++ue) {
            const auto& a = t.ue_address[ue];
            const double al = t.alpha_mbs[a.l];
            const double ak = t.alpha_sbs[a.l][a.k];
            const double aj = t.alpha_vc[a.l][a.k][a.j];
            const double ai = t.alpha_ue[a.l][a.k][a.j][a.i];
            sum += al * al * ak * ak * aj * aj * ai * ai;
        }
        CHECK(sum == doctest::Approx(1.0 / t.total_ues).epsilon(1e-12));
    }
}

TEST_CASE("flatten_index matches the nested round formula") {
    RoundSchedule s;
    s.kappa0 = 5;
    s.kappa1 = 2;
    s.kappa2 = 2;
    s.kappa3 = 2;
    s.global_rounds = 4;

    CHECK(flatten_index(0, 0, 0, 0, 1, s) == 1);
    // Hand-expansion: one full global round = 2*2*2*5 iterations.
    CHECK(flatten_index(1, 0, 0, 0, 0, s) == 40);
    CHECK_THROWS_AS(flatten_index(0, 0, 0, 0, 6, s), Error);
    CHECK_THROWS_AS(flatten_index(0, 2, 0, 0, 1, s), Error);
}

TEST_CASE("unflatten round-trips 1000 random canonical tuples") {
    std::mt19937_64 g(7);
    for (int rep = 0; rep < 1000; ++rep) {
        RoundSchedule s;
        s.kappa0 = 1 + static_cast<int>(g() % 6);
        s.kappa1 = 1 + static_cast<int>(g() % 4);
        s.kappa2 = 1 + static_cast<int>(g() % 3);
        s.kappa3 = 1 + static_cast<int>(g() % 3);
        s.global_rounds = 10;
        RoundIndices in;
        in.m = static_cast<int>(g() % 10);
        in.t3 = static_cast<int>(g() % s.kappa3);
        in.t2 = static_cast<int>(g() % s.kappa2);
        in.t1 = static_cast<int>(g() % s.kappa1);
        in.t0 = 1 + static_cast<int>(g() % s.kappa0);
        const auto t = flatten_index(in.m, in.t3, in.t2, in.t1, in.t0, s);
        CHECK(unflatten_index(t, s) == in);
    }
}

TEST_CASE("unflatten maps zero to the initial instant") {
    RoundSchedule s;
    s.kappa0 = 3;
    CHECK(unflatten_index(0, s) == RoundIndices{});
}

TEST_CASE("dbm conversion") {
    CHECK(dbm_to_watt(30.0) == doctest::Approx(1.0));
    CHECK(dbm_to_watt(23.0) == doctest::Approx(0.19952623).epsilon(1e-6));
    CHECK(watt_to_dbm(dbm_to_watt(27.5)) == doctest::Approx(27.5).epsilon(1e-12));
}

TEST_CASE("client profile validation") {
    ClientProfile p;
    p.f_max_hz = 2e9;
    p.p_max_w = 0.5;
    p.e_th_j = 10.0;
    p.cycles_per_bit = 20.0;
    p.sample_bits = 2080.0;
    p.distance_m = 100.0;
    CHECK_NOTHROW(p.validate());
    p.distance_m = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
}
