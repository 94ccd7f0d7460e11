#include <doctest.h>

#include <random>

#include "phfl/cost.hpp"

using namespace phfl;

namespace {

ClientProfile reference_profile() {
    ClientProfile p;
    p.f_max_hz = 2.8e9;
    p.p_max_w = 0.5;
    p.e_th_j = 10.0;
    p.cycles_per_bit = 20.0;
    p.sample_bits = 24576.0;
    p.distance_m = 100.0;
    p.batch_size = 32;
    p.batch_count = 10;
    return p;
}

}  // namespace

TEST_CASE("payload bits") {
    // Non-pruned CNN-sized model: d*(FPP+2) bits.
    CHECK(payload_bits(0.0, 151882, 32) == doctest::Approx(5163988.0));
    // Fully pruned: the mask alone.
    CHECK(payload_bits(1.0, 151882, 32) == doctest::Approx(151882.0));
    CHECK(payload_bits(0.5, 100, 32) == doctest::Approx(1750.0));
}

TEST_CASE("compute times") {
    const ClientProfile p = reference_profile();
    const ComputeTimes t = compute_times(p, 0.0, 2e9, 1, 5);
    // 32*10*20*24576 cycles / 2 GHz
    CHECK(t.dense_s == doctest::Approx(0.0786432).epsilon(1e-12));
    CHECK(t.sparse_s == doctest::Approx(5.0 * t.dense_s).epsilon(1e-12));

    const ComputeTimes t1 = compute_times(p, 1.0, 2e9, 1, 5);
    CHECK(t1.sparse_s == 0.0);
}

TEST_CASE("offload time and zero-rate error") {
    CHECK(offload_time(1e6, 2e6) == doctest::Approx(0.5));
    CHECK(offload_time(0.0, 0.0) == 0.0);
    CHECK_THROWS_AS(offload_time(10.0, 0.0), Error);
}

TEST_CASE("energies") {
    const ClientProfile p = reference_profile();
    const auto e = energies(p, 0.0, 2e9, 0.0, 1e6, 1, 5, 2e-28, 1000.0);
    // 1e-28 * 32*10*20*24576 * (2e9)^2
    CHECK(e.dense_j == doctest::Approx(0.06291456).epsilon(1e-9));
    CHECK(e.sparse_j == doctest::Approx(5.0 * e.dense_j).epsilon(1e-12));
    CHECK(e.uplink_j == 0.0);  // P = 0

    const auto e2 = energies(p, 0.0, 2e9, 0.25, 1e6, 1, 5, 2e-28, 1e6);
    CHECK(e2.uplink_j == doctest::Approx(0.25));
}

TEST_CASE("monotonicity in delta and f on random grids") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> ud(0.0, 0.89);
    std::uniform_real_distribution<double> uf(5e8, 3e9);
    const ClientProfile p = reference_profile();
    for (int rep = 0; rep < 200; ++rep) {
        const double delta = ud(g);
        const double f = uf(g);
        const double h = 1e-3;

        const auto t0 = compute_times(p, delta, f, 1, 5);
        const auto t1 = compute_times(p, delta + h, f, 1, 5);
        CHECK(t1.sparse_s <= t0.sparse_s);
        CHECK(payload_bits(delta + h, 10000, 32) <= payload_bits(delta, 10000, 32));

        const auto tf0 = compute_times(p, delta, f, 1, 5);
        const auto tf1 = compute_times(p, delta, f * (1.0 + h), 1, 5);
        CHECK(tf1.dense_s <= tf0.dense_s);
        CHECK(tf1.sparse_s <= tf0.sparse_s);

        const auto e0 = energies(p, delta, f, 0.1, 1e6, 1, 5, 2e-28, 1000.0);
        const auto e1 = energies(p, delta, f * (1.0 + h), 0.1, 1e6, 1, 5, 2e-28, 1000.0);
        CHECK(e1.dense_j >= e0.dense_j);
        CHECK(e1.sparse_j >= e0.sparse_j);
    }
}

TEST_CASE("cost breakdown totals") {
    const ClientProfile p = reference_profile();
    EnergyParams ep;
    const CostBreakdown c = cost_breakdown(p, 0.5, 2e9, 0.2, 1e6, 1, 5, ep, 10000);
    CHECK(c.t_total_s() ==
          doctest::Approx(c.t_cp_dense_s + c.t_cp_sparse_s + c.t_up_s).epsilon(1e-15));
    CHECK(c.e_total_j() ==
          doctest::Approx(c.e_cp_dense_j + c.e_cp_sparse_j + c.e_up_j).epsilon(1e-15));
    CHECK(c.payload_bits == doctest::Approx(payload_bits(0.5, 10000, 32)));
}
