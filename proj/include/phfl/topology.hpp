#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "phfl/errors.hpp"

namespace phfl {

/// Four-tier hierarchy sizes and aggregation weights. Nested vectors are
/// indexed [l][k][j][i] (mBS, sBS, virtual cluster, UE).
struct TopologyConfig {
    int mbs_count = 0;
    std::vector<int> sbs_per_mbs;                       // B_l
    std::vector<std::vector<int>> vcs_per_sbs;          // V_{k,l}
    std::vector<std::vector<std::vector<int>>> ues_per_vc;  // U_{j,k,l}

    enum class WeightMode { Uniform, Explicit };
    WeightMode weight_mode = WeightMode::Uniform;

    // Only read when weight_mode == Explicit.
    std::vector<double> alpha_mbs;
    std::vector<std::vector<double>> alpha_sbs;
    std::vector<std::vector<std::vector<double>>> alpha_vc;
    std::vector<std::vector<std::vector<std::vector<double>>>> alpha_ue;

    /// Balanced shorthand: L mBS, each with `sbs` sBS, each with `vcs` VCs of
    /// `ues` UEs.
    static TopologyConfig balanced(int mbs, int sbs, int vcs, int ues);
};

struct NetworkTopology {
    int mbs_count = 0;
    std::vector<int> sbs_per_mbs;
    std::vector<std::vector<int>> vcs_per_sbs;
    std::vector<std::vector<std::vector<int>>> ues_per_vc;

    std::vector<double> alpha_mbs;
    std::vector<std::vector<double>> alpha_sbs;
    std::vector<std::vector<std::vector<double>>> alpha_vc;
    std::vector<std::vector<std::vector<std::vector<double>>>> alpha_ue;

    int total_ues = 0;
    int total_vcs = 0;
    int total_sbs = 0;

    struct UeAddress {
        int l, k, j, i;
    };
    struct VcAddress {
        int l, k, j;
    };

    // Flat lookup tables; UEs are numbered contiguously VC by VC.
    std::vector<UeAddress> ue_address;
    std::vector<VcAddress> vc_address;
    std::vector<int> ue_vc;                // ue -> vc id
    std::vector<int> ue_cell;              // ue -> serving sBS id (global)
    std::vector<std::vector<int>> vc_ues;  // vc -> ue ids
    std::vector<int> vc_cell;              // vc -> serving sBS id (global)

    /// Product of the aggregation weights along the UE's path,
    /// alpha_l * alpha_k * alpha_j * alpha_i.
    double ue_path_weight(int ue) const;
    /// alpha_l * alpha_k * alpha_j for the VC.
    double vc_path_weight(int vc) const;

    double ue_alpha(int ue) const;  // alpha_i within the UE's VC
};

/// Validates tier sizes, normalizes/derives weights.
/// Throws EmptyTier or WeightSumMismatch.
NetworkTopology build_topology(const TopologyConfig& config);

/// Local / VC / sBS / mBS round counts plus the dense warm-up length.
struct RoundSchedule {
    int kappa0 = 1;
    int kappa1 = 1;
    int kappa2 = 1;
    int kappa3 = 1;
    int rho = 1;
    int global_rounds = 1;  // M

    void validate() const;
    std::int64_t iterations_per_global_round() const {
        return static_cast<std::int64_t>(kappa0) * kappa1 * kappa2 * kappa3;
    }
    /// T = M * kappa3 * kappa2 * kappa1 * kappa0
    std::int64_t total_iterations() const {
        return static_cast<std::int64_t>(global_rounds) * iterations_per_global_round();
    }
};

struct RoundIndices {
    int m = 0, t3 = 0, t2 = 0, t1 = 0, t0 = 0;
    bool operator==(const RoundIndices&) const = default;
};

/// t = [{(m*k3 + t3)*k2 + t2}*k1 + t1]*k0 + t0.
/// Accepts 0 <= t0 <= kappa0 so both sync instants (t0 = 0) and local steps
/// (1..kappa0) can be addressed. Throws IndexOutOfRange.
std::int64_t flatten_index(int m, int t3, int t2, int t1, int t0, const RoundSchedule& s);

/// Inverse of flatten_index on the canonical domain (t0 in 1..kappa0 for
/// t >= 1; t = 0 maps to the all-zero tuple).
RoundIndices unflatten_index(std::int64_t t, const RoundSchedule& s);

/// Per-UE compute/energy/radio capabilities; all SI units.
struct ClientProfile {
    double f_max_hz = 0.0;
    double p_max_w = 0.0;
    double e_th_j = 0.0;        // energy budget per VC round
    double cycles_per_bit = 0.0;  // c_i
    double sample_bits = 0.0;     // D_i
    double distance_m = 0.0;      // to the serving sBS
    int batch_size = 1;           // b
    int batch_count = 1;          // n
    int shard = -1;

    void validate() const;
};

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

}  // namespace phfl
