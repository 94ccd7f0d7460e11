#include "phfl/channel.hpp"

#include <cmath>
#include <limits>

#include "phfl/rng.hpp"

namespace phfl {

ChannelDraw draw_fading(const NetworkTopology& topology, const ChannelParams& params,
                        std::int64_t t) {
    ChannelDraw d;
    d.gain.resize(topology.total_ues);
    for (int ue = 0; ue < topology.total_ues; ++ue) {
        auto g = make_rng(params.seed, Stream::Fading, static_cast<std::uint64_t>(ue),
                          static_cast<std::uint64_t>(t));
        d.gain[ue] = exp1(g);
    }
    return d;
}

double interference(const std::vector<double>& tx_power_w, const NetworkTopology& topology,
                    const ChannelDraw& draw, const std::vector<double>& distance_m,
                    double pathloss_exponent, int ue) {
    const int own_cell = topology.ue_cell.at(ue);
    double total = 0.0;
    for (int other = 0; other < topology.total_ues; ++other) {
        if (topology.ue_cell[other] == own_cell) continue;
        total += tx_power_w[other] * draw.gain[other] *
                 std::pow(distance_m[other], -pathloss_exponent);
    }
    return total;
}

double sinr(double tx_power_w, double gain, double distance_m, double pathloss_exponent,
            double prb_width_hz, double noise_w_per_hz, double interference_w) {
    const double denom = prb_width_hz * noise_w_per_hz + interference_w;
    return tx_power_w * gain * std::pow(distance_m, -pathloss_exponent) / denom;
}

double rate_bps(double sinr_value, double prb_width_hz) {
    return prb_width_hz * std::log2(1.0 + sinr_value);
}

double chi_exponent(double delta, double f_hz, const ClientProfile& profile, double prb_width_hz,
                    double t_th_s, int rho, int kappa0, std::int64_t d_model, int fpp_bits) {
    const double work = static_cast<double>(profile.batch_size) * profile.batch_count *
                        profile.cycles_per_bit * profile.sample_bits;
    const double slack_cycles = f_hz * t_th_s - work * (rho + kappa0 * (1.0 - delta));
    if (slack_cycles <= 0.0) return std::numeric_limits<double>::infinity();
    const double numer = static_cast<double>(d_model) * f_hz *
                         ((1.0 - delta) * (fpp_bits + 1) + 1.0);
    return numer / (prb_width_hz * slack_cycles);
}

SuccessProbability success_probability(double delta, double f_hz, double tx_power_w,
                                       const ClientProfile& profile, const ChannelParams& params,
                                       double interference_w, double t_th_s, int rho, int kappa0,
                                       std::int64_t d_model, int fpp_bits) {
    SuccessProbability out;
    const double chi =
        chi_exponent(delta, f_hz, profile, params.prb_width_hz, t_th_s, rho, kappa0, d_model,
                     fpp_bits);
    if (std::isinf(chi)) {
        out.deadline_exhausted_by_compute = true;
        out.p = 0.0;
        return out;
    }
    const double threshold = std::exp2(chi) - 1.0;  // required SINR
    if (threshold <= 0.0) {
        out.p = 1.0;  // zero payload: reception certain
        return out;
    }
    if (tx_power_w <= 0.0) {
        out.p = 0.0;
        return out;
    }
    const double noise_plus_i = params.prb_width_hz * params.noise_w_per_hz + interference_w;
    const double exponent = threshold * noise_plus_i /
                            (tx_power_w * std::pow(profile.distance_m, -params.pathloss_exponent));
    out.p = std::exp(-exponent);
    return out;
}

}  // namespace phfl
