#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phfl/learner.hpp"
#include "phfl/topology.hpp"

namespace phfl {

/// The five reception-failure penalty sums of the convergence bound. They
/// differ only in which tier weights enter squared.
struct WirelessFactors {
    double phi_w0 = 0.0;   // alpha^2 at every level
    double phi_l1 = 0.0;   // alpha^1 at every level
    double phi_l2 = 0.0;   // alpha_i^2, the rest linear
    double phi_l3 = 0.0;   // alpha_j^2 alpha_i^2
    double phi_l4 = 0.0;   // alpha_k^2 alpha_j^2 alpha_i^2
};

/// p_trace[t][u] are per-round success probabilities in (0,1]. Each factor is
/// (1/T) * sum_t sum_clients weights * (1/p - 1). Throws ZeroProbability.
WirelessFactors wireless_factors(const std::vector<std::vector<double>>& p_trace,
                                 const NetworkTopology& topology);

struct BoundInputs {
    double beta = 1.0;
    double sigma2 = 0.0;
    double eps_vc2 = 0.0;
    double eps_sbs2 = 0.0;
    double eps_mbs2 = 0.0;
    double eps2 = 0.0;
    double g2 = 0.0;      // gradient-norm bound
    double d2 = 0.0;      // weight-norm bound
    double eta = 0.01;
    int kappa0 = 1, kappa1 = 1, kappa2 = 1, kappa3 = 1;
    double delta_th = 0.0;
    std::int64_t total_iterations = 1;  // T
    int total_clients = 1;              // U
    double loss_gap = 0.0;              // f(w~0) - f_inf
    double phi_w0 = 0.0;
};

struct BoundTerm {
    std::string name;
    double value = 0.0;
};

struct BoundBreakdown {
    std::vector<BoundTerm> terms;
    double total = 0.0;
    double eta_cap = 0.0;        // 1/(6*sqrt(2)*k0*k1*k2*k3*beta)
    bool eta_exceeds_cap = false;  // diagnostic warning, not fatal
};

/// Term-by-term evaluation of the eight bound terms with unit coefficients.
BoundBreakdown corollary_bound(const BoundInputs& in);

/// Right-continuous empirical CDF (unique sorted support, final value 1).
struct CdfSeries {
    std::vector<double> x;
    std::vector<double> f;
};
CdfSeries empirical_cdf(const std::vector<double>& values);  // throws EmptyGroup
double cdf_at(const CdfSeries& cdf, double x);

/// 1 - s(delta)/s(0) as a fraction.
double bandwidth_saving(double payload_pruned_bits, double payload_full_bits);

/// Empirical stand-ins for the assumption constants, measured on the actual
/// learner: smoothness from gradient-difference ratios on sampled weight
/// pairs, gradient variance from mini-batches, norm bounds from running
/// maxima, divergences from tier-aggregated full gradients. These are
/// estimates, not certified constants.
struct EstimatedBoundInputs {
    double beta = 0.0;
    double sigma2 = 0.0;
    double g2 = 0.0;
    double d2 = 0.0;
    double eps_vc2 = 0.0;
    double eps_sbs2 = 0.0;
    double eps_mbs2 = 0.0;
    double eps2 = 0.0;
};
EstimatedBoundInputs estimate_bound_inputs(const ModelSpec& spec, const Dataset& train,
                                           const std::vector<DataShard>& shards,
                                           const NetworkTopology& topology, double eta,
                                           int sample_points, int batch_size, std::uint64_t seed);

}  // namespace phfl
