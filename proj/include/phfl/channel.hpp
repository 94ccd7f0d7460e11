#pragma once

#include <cstdint>
#include <vector>

#include "phfl/cost.hpp"
#include "phfl/errors.hpp"
#include "phfl/topology.hpp"

namespace phfl {

struct ChannelParams {
    double prb_width_hz = 1e6;        // omega
    double noise_w_per_hz = 3.9810717055349695e-21;  // zeta^2; -174 dBm/Hz thermal floor
    double pathloss_exponent = 3.0;   // alpha
    std::uint64_t seed = 0;

    void validate() const {
        if (!(prb_width_hz > 0)) raise(ErrorKind::ConfigError, "prb_width_hz must be positive");
        if (!(noise_w_per_hz > 0)) raise(ErrorKind::ConfigError, "noise_w_per_hz must be positive");
        if (!(pathloss_exponent >= 2.0))
            raise(ErrorKind::ConfigError, "pathloss_exponent must be >= 2");
    }
};

/// One fading realization: unit-mean exponential gain per UE towards its
/// serving sBS.
struct ChannelDraw {
    std::vector<double> gain;
};

/// Exp(1) gain per UE, keyed by (seed, client, t); identical regardless of
/// evaluation order.
ChannelDraw draw_fading(const NetworkTopology& topology, const ChannelParams& params,
                        std::int64_t t);

/// Inter-cell interference seen when client `ue` transmits: sum of
/// P*h*d^-alpha over UEs served by other sBSs. Dedicated pRBs within a cell,
/// so there is no intra-cell term.
double interference(const std::vector<double>& tx_power_w, const NetworkTopology& topology,
                    const ChannelDraw& draw, const std::vector<double>& distance_m,
                    double pathloss_exponent, int ue);

/// gamma = P*h*d^-alpha / (omega*zeta^2 + I)
double sinr(double tx_power_w, double gain, double distance_m, double pathloss_exponent,
            double prb_width_hz, double noise_w_per_hz, double interference_w);

/// r = omega * log2(1 + gamma) bits/s
double rate_bps(double sinr_value, double prb_width_hz);

/// Required spectral efficiency implied by deadline, payload and compute
/// time: chi = s / (omega * (t_th - t_cp)). Returns +inf when compute alone
/// exhausts the deadline.
double chi_exponent(double delta, double f_hz, const ClientProfile& profile, double prb_width_hz,
                    double t_th_s, int rho, int kappa0, std::int64_t d_model, int fpp_bits);

struct SuccessProbability {
    double p = 0.0;
    /// True when f*t_th <= b*n*c*D*(rho + kappa0*(1-delta)), i.e. the compute
    /// phase leaves no air time; p is then defined as 0.
    bool deadline_exhausted_by_compute = false;
};

/// Closed-form probability that the trained model lands inside the deadline
/// over the fading: p = exp[-(2^chi - 1)(omega*zeta^2 + I)/(P*d^-alpha)].
SuccessProbability success_probability(double delta, double f_hz, double tx_power_w,
                                       const ClientProfile& profile, const ChannelParams& params,
                                       double interference_w, double t_th_s, int rho, int kappa0,
                                       std::int64_t d_model, int fpp_bits);

}  // namespace phfl
