#pragma once

#include <cstdint>

#include "phfl/errors.hpp"
#include "phfl/topology.hpp"

namespace phfl {

/// Effective chip capacitance (the 0.5*xi factor uses xi) and float width.
struct EnergyParams {
    double xi = 2e-28;
    int fpp_bits = 32;

    void validate() const {
        if (!(xi > 0)) raise(ErrorKind::ConfigError, "xi must be positive");
        if (fpp_bits < 1) raise(ErrorKind::ConfigError, "fpp_bits must be >= 1");
    }
};

/// Per-client, per-VC-round delay and energy split: dense warm-up, sparse
/// training, uplink offload.
struct CostBreakdown {
    double t_cp_dense_s = 0.0;
    double t_cp_sparse_s = 0.0;
    double t_up_s = 0.0;
    double e_cp_dense_j = 0.0;
    double e_cp_sparse_j = 0.0;
    double e_up_j = 0.0;
    double payload_bits = 0.0;

    double t_total_s() const { return t_cp_dense_s + t_cp_sparse_s + t_up_s; }
    double e_total_j() const { return e_cp_dense_j + e_cp_sparse_j + e_up_j; }
};

/// Uplink payload upper bound: d*[(1-delta)*(FPP+1) + 1] bits.
/// The mask always ships (d bits); each surviving weight costs FPP+1 bits.
inline double payload_bits(double delta, std::int64_t d_model, int fpp_bits) {
    return static_cast<double>(d_model) * ((1.0 - delta) * (fpp_bits + 1) + 1.0);
}

struct ComputeTimes {
    double dense_s = 0.0;   // rho warm-up iterations on the full model
    double sparse_s = 0.0;  // kappa0 iterations on the pruned model
};

/// dense = rho*b*n*c*D/f, sparse = kappa0*b*n*(1-delta)*c*D/f.
ComputeTimes compute_times(const ClientProfile& p, double delta, double f_hz, int rho, int kappa0);

/// Offload delay s/r. Throws ZeroRate when rate is 0 with a nonzero payload.
double offload_time(double payload_bits, double rate_bps);

struct ComputeOffloadEnergies {
    double dense_j = 0.0;
    double sparse_j = 0.0;
    double uplink_j = 0.0;
};

/// dense = rho*0.5*xi*b*n*c*D*f^2, sparse = kappa0*0.5*xi*b*n*(1-delta)*c*D*f^2,
/// uplink = s*P/r.
ComputeOffloadEnergies energies(const ClientProfile& p, double delta, double f_hz, double tx_w,
                                double rate_bps, int rho, int kappa0, double xi,
                                double payload_bits);

/// Full per-round breakdown from a decision and a realized rate.
CostBreakdown cost_breakdown(const ClientProfile& p, double delta, double f_hz, double tx_w,
                             double rate_bps, int rho, int kappa0, const EnergyParams& e,
                             std::int64_t d_model);

}  // namespace phfl
