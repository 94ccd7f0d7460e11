#include "phfl/cost.hpp"

namespace phfl {

ComputeTimes compute_times(const ClientProfile& p, double delta, double f_hz, int rho,
                           int kappa0) {
    if (!(f_hz > 0)) raise(ErrorKind::ConfigError, "f_hz must be positive");
    const double work = static_cast<double>(p.batch_size) * p.batch_count * p.cycles_per_bit *
                        p.sample_bits;
    ComputeTimes t;
    t.dense_s = rho * work / f_hz;
    t.sparse_s = kappa0 * (1.0 - delta) * work / f_hz;
    return t;
}

double offload_time(double payload_bits, double rate_bps) {
    if (rate_bps <= 0.0) {
        if (payload_bits <= 0.0) return 0.0;
        raise(ErrorKind::ZeroRate, "zero rate with nonzero payload");
    }
    return payload_bits / rate_bps;
}

ComputeOffloadEnergies energies(const ClientProfile& p, double delta, double f_hz, double tx_w,
                                double rate_bps, int rho, int kappa0, double xi,
                                double payload_bits) {
    const double work = static_cast<double>(p.batch_size) * p.batch_count * p.cycles_per_bit *
                        p.sample_bits;
    ComputeOffloadEnergies e;
    e.dense_j = rho * 0.5 * xi * work * f_hz * f_hz;
    e.sparse_j = kappa0 * 0.5 * xi * (1.0 - delta) * work * f_hz * f_hz;
    if (tx_w <= 0.0 || payload_bits <= 0.0) {
        e.uplink_j = 0.0;
    } else {
        if (rate_bps <= 0.0) raise(ErrorKind::ZeroRate, "zero rate with nonzero payload");
        e.uplink_j = payload_bits * tx_w / rate_bps;
    }
    return e;
}

CostBreakdown cost_breakdown(const ClientProfile& p, double delta, double f_hz, double tx_w,
                             double rate_bps, int rho, int kappa0, const EnergyParams& ep,
                             std::int64_t d_model) {
    CostBreakdown c;
    c.payload_bits = payload_bits(delta, d_model, ep.fpp_bits);
    const ComputeTimes t = compute_times(p, delta, f_hz, rho, kappa0);
    c.t_cp_dense_s = t.dense_s;
    c.t_cp_sparse_s = t.sparse_s;
    c.t_up_s = offload_time(c.payload_bits, rate_bps);
    const ComputeOffloadEnergies e =
        energies(p, delta, f_hz, tx_w, rate_bps, rho, kappa0, ep.xi, c.payload_bits);
    c.e_cp_dense_j = e.dense_j;
    c.e_cp_sparse_j = e.sparse_j;
    c.e_up_j = e.uplink_j;
    return c;
}

}  // namespace phfl
