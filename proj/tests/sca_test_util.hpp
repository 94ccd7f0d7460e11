#pragma once

// Shared helpers for the optimizer tests: random feasible instances and a
// grid-search oracle that re-evaluates everything through the channel and
// cost modules, independent of the optimizer's own code paths.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "phfl/channel.hpp"
#include "phfl/cost.hpp"
#include "phfl/rng.hpp"
#include "phfl/sca.hpp"

namespace sca_test {

struct Instance {
    phfl::ScaClient client;
    phfl::ScaSettings settings;
};

inline double oracle_exp_term(const phfl::ScaClient& c, const phfl::ScaSettings& s, double delta,
                              double f, double p_w) {
    const double chi = phfl::chi_exponent(delta, f, c.profile, s.channel.prb_width_hz, s.t_th_s,
                                          s.rho, s.kappa0, s.d_model, s.fpp_bits);
    if (std::isinf(chi)) return std::numeric_limits<double>::infinity();
    const double pl = std::pow(c.profile.distance_m, -s.channel.pathloss_exponent);
    const double noise_i = s.channel.prb_width_hz * s.channel.noise_w_per_hz + c.interference_w;
    if (p_w <= 0.0) return std::numeric_limits<double>::infinity();
    return std::exp(std::min((std::exp2(chi) - 1.0) * noise_i / (p_w * pl), 700.0));
}

inline double oracle_objective(const phfl::ScaClient& c, const phfl::ScaSettings& s, double delta,
                               double f, double p_w) {
    return c.weight * (s.phi1 * delta + s.phi2 * (oracle_exp_term(c, s, delta, f, p_w) - 1.0));
}

inline bool oracle_feasible(const phfl::ScaClient& c, const phfl::ScaSettings& s, double delta,
                            double f, double p_w, double tol = 1e-9) {
    using namespace phfl;
    if (delta < 0 || delta > s.delta_th + tol) return false;
    if (f <= 0 || f > c.profile.f_max_hz * (1 + tol)) return false;
    if (p_w < 0 || p_w > c.profile.p_max_w * (1 + tol)) return false;
    const double payload = payload_bits(delta, s.d_model, s.fpp_bits);
    const double pl = std::pow(c.profile.distance_m, -s.channel.pathloss_exponent);
    const double noise_i = s.channel.prb_width_hz * s.channel.noise_w_per_hz + c.interference_w;
    const double r = s.channel.prb_width_hz * std::log2(1.0 + p_w * c.gain * pl / noise_i);
    if (r <= 0.0) return false;
    const ComputeTimes ct = compute_times(c.profile, delta, f, s.rho, s.kappa0);
    if (ct.dense_s + ct.sparse_s + payload / r > s.t_th_s * (1 + tol) + tol) return false;
    const auto en = energies(c.profile, delta, f, p_w, r, s.rho, s.kappa0, s.xi, payload);
    return en.dense_j + en.sparse_j + en.uplink_j <= c.profile.e_th_j * (1 + tol) + tol;
}

struct GridBest {
    double value = std::numeric_limits<double>::infinity();
    double delta = 0, f = 0, p_w = 0;
    bool found = false;
};

inline GridBest grid_search(const phfl::ScaClient& c, const phfl::ScaSettings& s, int n) {
    GridBest best;
    const double pl = std::pow(c.profile.distance_m, -s.channel.pathloss_exponent);
    const double noise_i = s.channel.prb_width_hz * s.channel.noise_w_per_hz + c.interference_w;
    const double work = static_cast<double>(c.profile.batch_size) * c.profile.batch_count *
                        c.profile.cycles_per_bit * c.profile.sample_bits;

    std::vector<double> p_grid(n), r_grid(n);
    for (int k = 0; k < n; ++k) {
        p_grid[k] = c.profile.p_max_w * (k + 1) / n;
        r_grid[k] =
            s.channel.prb_width_hz * std::log2(1.0 + p_grid[k] * c.gain * pl / noise_i);
    }
    for (int i = 0; i < n; ++i) {
        const double delta = s.delta_th * i / (n - 1);
        const double payload = phfl::payload_bits(delta, s.d_model, s.fpp_bits);
        for (int j = 0; j < n; ++j) {
            const double f = c.profile.f_max_hz * (j + 1) / n;
            const phfl::ComputeTimes ct = phfl::compute_times(c.profile, delta, f, s.rho, s.kappa0);
            const double t_cp = ct.dense_s + ct.sparse_s;
            if (t_cp >= s.t_th_s) continue;
            const double chi = phfl::chi_exponent(delta, f, c.profile, s.channel.prb_width_hz,
                                                  s.t_th_s, s.rho, s.kappa0, s.d_model, s.fpp_bits);
            const double tau = (std::exp2(chi) - 1.0) * noise_i / pl;
            const double e_cp = (s.rho + s.kappa0 * (1.0 - delta)) * 0.5 * s.xi * work * f * f;
            for (int k = 0; k < n; ++k) {
                const double r = r_grid[k];
                if (r <= 0.0) continue;
                if (t_cp + payload / r > s.t_th_s) continue;
                if (e_cp + payload * p_grid[k] / r > c.profile.e_th_j) continue;
                const double value =
                    c.weight * (s.phi1 * delta + s.phi2 * (std::exp(std::min(tau / p_grid[k], 700.0)) - 1.0));
                if (value < best.value) {
                    best = {value, delta, f, p_grid[k], true};
                }
            }
        }
    }
    return best;
}

/// Random instance with a feasible relaxed corner; the deadline is placed so
/// the constraints actually bite for small delta.
inline Instance random_feasible_instance(std::mt19937_64& g) {
    using namespace phfl;
    for (;;) {
        Instance inst;
        ScaClient& c = inst.client;
        ScaSettings& s = inst.settings;
        c.profile.f_max_hz = uniform(g, 1.8e9, 2.8e9);
        c.profile.p_max_w = dbm_to_watt(uniform(g, 23.0, 30.0));
        c.profile.e_th_j = uniform(g, 4.0, 13.0);
        c.profile.cycles_per_bit = uniform(g, 20.0, 25.0);
        c.profile.sample_bits = uniform(g, 1000.0, 4000.0);
        c.profile.distance_m = uniform(g, 20.0, 250.0);
        c.profile.batch_size = 32;
        c.profile.batch_count = 10;
        c.gain = exp1(g);
        c.interference_w = uniform(g, 0.0, 5e-15);
        c.weight = 1.0;
        s.phi1 = 1.0;
        s.phi2 = uniform(g, 1e-4, 1e-2);
        s.delta_th = 0.9;
        s.rho = 1;
        s.kappa0 = 5;
        s.d_model = 20000 + static_cast<std::int64_t>(g() % 180000);
        s.fpp_bits = 32;
        s.xi = 2e-28;
        s.max_iterations = 25;
        s.epsilon = 1e-12;

        // Deadline between the relaxed-corner compute time and a loose cap.
        const ComputeTimes corner =
            compute_times(c.profile, s.delta_th, c.profile.f_max_hz, s.rho, s.kappa0);
        const double t_min = corner.dense_s + corner.sparse_s;
        s.t_th_s = uniform(g, t_min * 2.0, t_min * 2.0 + 1.0);

        if (check_exact(c, s, s.delta_th, c.profile.f_max_hz, c.profile.p_max_w).feasible)
            return inst;
    }
}

}  // namespace sca_test
