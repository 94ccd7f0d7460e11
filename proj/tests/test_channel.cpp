#include <doctest.h>

#include <cmath>
#include <random>

#include "phfl/channel.hpp"
#include "phfl/rng.hpp"

using namespace phfl;

namespace {

ClientProfile link_profile() {
    ClientProfile p;
    p.f_max_hz = 2.8e9;
    p.p_max_w = 0.5;
    p.e_th_j = 10.0;
    p.cycles_per_bit = 20.0;
    p.sample_bits = 2080.0;
    p.distance_m = 80.0;
    p.batch_size = 32;
    p.batch_count = 10;
    return p;
}

}  // namespace

TEST_CASE("fading draws are unit-mean exponential and deterministic") {
    const NetworkTopology topo = build_topology(TopologyConfig::balanced(1, 1, 1, 4));
    ChannelParams params;
    params.seed = 42;

    const ChannelDraw a = draw_fading(topo, params, 17);
    const ChannelDraw b = draw_fading(topo, params, 17);
    CHECK(a.gain == b.gain);
    const ChannelDraw c = draw_fading(topo, params, 18);
    CHECK(a.gain != c.gain);

    // Law of large numbers on Exp(1), and the median check
    // P(h >= ln 2) = 1/2.
    auto g = make_rng(7, Stream::Fading, 0, 0);
    const int n = 1'000'000;
    double sum = 0.0;
    int above_ln2 = 0;
    for (int i = 0; i < n; ++i) {
        const double h = exp1(g);
        sum += h;
        if (h >= std::log(2.0)) ++above_ln2;
    }
    CHECK(sum / n == doctest::Approx(1.0).epsilon(0.005));
    CHECK(static_cast<double>(above_ln2) / n == doctest::Approx(0.5).epsilon(0.004));
}

TEST_CASE("interference sums over other cells only") {
    // Single cell: no interference.
    {
        const NetworkTopology topo = build_topology(TopologyConfig::balanced(1, 1, 2, 3));
        ChannelDraw draw;
        draw.gain.assign(6, 1.0);
        const std::vector<double> power(6, 0.5), dist(6, 100.0);
        CHECK(interference(power, topo, draw, dist, 2.0, 0) == 0.0);
    }
    // Two cells, one interferer: P=1, h=1, d=100, alpha=2 -> 1e-4 W.
    {
        const NetworkTopology topo = build_topology(TopologyConfig::balanced(1, 2, 1, 1));
        ChannelDraw draw;
        draw.gain = {1.0, 1.0};
        std::vector<double> power = {0.3, 1.0};
        const std::vector<double> dist = {50.0, 100.0};
        const double i0 = interference(power, topo, draw, dist, 2.0, 0);
        CHECK(i0 == doctest::Approx(1e-4).epsilon(1e-12));
        // Linearity in the interferers' powers.
        for (double& p : power) p *= 2.0;
        CHECK(interference(power, topo, draw, dist, 2.0, 0) == doctest::Approx(2.0 * i0));
    }
}

TEST_CASE("sinr and rate") {
    // gamma = 1 -> r = omega.
    CHECK(rate_bps(1.0, 1e6) == doctest::Approx(1e6));
    CHECK(rate_bps(3.0, 1e6) == doctest::Approx(2e6));
    CHECK(rate_bps(0.0, 1e6) == 0.0);
    CHECK(sinr(0.0, 1.0, 10.0, 3.0, 1e6, 1e-20, 0.0) == 0.0);

    // Scale consistency: scaling P, noise and I together leaves gamma fixed.
    const double g1 = sinr(0.4, 1.3, 120.0, 3.0, 1e6, 4e-21, 1e-13);
    const double g2 = sinr(0.4 * 7.0, 1.3, 120.0, 3.0, 1e6, 4e-21 * 7.0, 1e-13 * 7.0);
    CHECK(g1 == doctest::Approx(g2).epsilon(1e-12));
}

TEST_CASE("success probability limits") {
    const ClientProfile p = link_profile();
    ChannelParams params;

    // Zero payload: p -> 1.
    const auto one = success_probability(0.5, 2e9, 0.3, p, params, 0.0, 10.0, 1, 5, 0, 32);
    CHECK(one.p == doctest::Approx(1.0));

    // Interference -> infinity: p -> 0.
    const auto zero = success_probability(0.5, 2e9, 0.3, p, params, 1e9, 1.0, 1, 5, 20000, 32);
    CHECK(zero.p == doctest::Approx(0.0).epsilon(1e-30));

    // Compute alone exceeding the deadline is flagged, p = 0.
    const auto flagged = success_probability(0.0, 1e6, 0.3, p, params, 0.0, 0.01, 1, 5, 20000, 32);
    CHECK(flagged.deadline_exhausted_by_compute);
    CHECK(flagged.p == 0.0);
    // Just inside: p > 0 iff compute fits strictly inside the deadline.
    const auto inside = success_probability(0.0, 2e9, 0.3, p, params, 0.0, 10.0, 1, 5, 20000, 32);
    CHECK(!inside.deadline_exhausted_by_compute);
    CHECK(inside.p > 0.0);
}

TEST_CASE("success probability is monotone in P, t_th, f and delta") {
    const ClientProfile p = link_profile();
    ChannelParams params;
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> ud(0.0, 0.9), uf(1e9, 2.8e9), up(0.05, 0.5),
        ut(0.5, 3.0), ui(0.0, 1e-13);
    for (int rep = 0; rep < 300; ++rep) {
        const double delta = ud(g), f = uf(g), tx = up(g), t_th = ut(g), in = ui(g);
        const auto base =
            success_probability(delta, f, tx, p, params, in, t_th, 1, 5, 30000, 32);
        const auto more_p =
            success_probability(delta, f, tx * 1.1, p, params, in, t_th, 1, 5, 30000, 32);
        const auto more_t =
            success_probability(delta, f, tx, p, params, in, t_th * 1.1, 1, 5, 30000, 32);
        const auto more_f =
            success_probability(delta, f * 1.1, tx, p, params, in, t_th, 1, 5, 30000, 32);
        const auto more_d = success_probability(std::min(delta * 1.1, 1.0), f, tx, p, params, in,
                                                t_th, 1, 5, 30000, 32);
        CHECK(more_p.p >= base.p);
        CHECK(more_t.p >= base.p);
        CHECK(more_f.p >= base.p);
        CHECK(more_d.p >= base.p);
    }
}

TEST_CASE("closed form matches Monte Carlo over exponential gains") {
    const ClientProfile p = link_profile();
    ChannelParams params;
    const double delta = 0.3, f = 2e9, tx = 0.2, interf = 2e-15;
    const std::int64_t d_model = 40000;

    // Bisect the deadline so the success probability is informative (~0.5)
    // rather than saturated at 0 or 1.
    double lo = compute_times(p, delta, f, 1, 5).dense_s * 6.0, hi = 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double pm =
            success_probability(delta, f, tx, p, params, interf, mid, 1, 5, d_model, 32).p;
        (pm < 0.5 ? lo : hi) = mid;
    }
    const double t_th = 0.5 * (lo + hi);

    const auto closed =
        success_probability(delta, f, tx, p, params, interf, t_th, 1, 5, d_model, 32);
    CHECK(closed.p == doctest::Approx(0.5).epsilon(0.01));

    // Oracle: empirical frequency of {t_tot <= t_th} under h ~ Exp(1).
    const ComputeTimes ct = compute_times(p, delta, f, 1, 5);
    const double payload = payload_bits(delta, d_model, 32);
    auto g = make_rng(123, Stream::Fading, 9, 9);
    const int n = 1'000'000;
    int ok = 0;
    for (int i = 0; i < n; ++i) {
        const double h = exp1(g);
        const double r = rate_bps(sinr(tx, h, p.distance_m, params.pathloss_exponent,
                                       params.prb_width_hz, params.noise_w_per_hz, interf),
                                  params.prb_width_hz);
        const double t_tot = ct.dense_s + ct.sparse_s + (r > 0 ? payload / r : 1e30);
        if (t_tot <= t_th) ++ok;
    }
    const double mc = static_cast<double>(ok) / n;
    const double se = std::sqrt(std::max(mc * (1.0 - mc), 1e-12) / n);
    CHECK(std::fabs(closed.p - mc) <= 3.0 * se + 1e-9);
}
