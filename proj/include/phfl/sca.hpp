#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phfl/channel.hpp"
#include "phfl/cost.hpp"
#include "phfl/topology.hpp"

namespace phfl {

/// Per-client data for one joint (delta, f, P) solve: profile, CSI snapshot
/// and frozen inter-cell interference. With interference frozen the joint
/// problem separates into independent 3-variable problems.
struct ScaClient {
    ClientProfile profile;
    double weight = 1.0;          // aggregation-weight product in the objective
    double gain = 1.0;            // channel gain snapshot h
    double interference_w = 0.0;  // frozen interference
};

struct ScaSettings {
    ChannelParams channel;
    double phi1 = 1.0;
    double phi2 = 1e-3;
    double t_th_s = 1.0;
    double delta_th = 0.9;
    int rho = 1;
    int kappa0 = 5;
    std::int64_t d_model = 0;
    int fpp_bits = 32;
    double xi = 2e-28;
    int max_iterations = 15;  // Q
    double epsilon = 1e-9;    // convergence precision on the objective
};

struct Decision {
    double delta = 0.0;
    double f_hz = 0.0;
    double tx_w = 0.0;
    double success_p = 0.0;
    bool feasible = false;
    std::string infeasible_constraint;  // "C1", "C2" or "C1+C2" when infeasible
};

/// Reception penalty exp((2^chi - 1)(omega zeta^2 + I)/(P d^-alpha)), i.e.
/// 1/p. Infinite when the compute phase exhausts the deadline.
double reception_exp_term(const ScaClient& client, const ScaSettings& s, double delta,
                          double f_hz, double tx_w);

/// Weighted objective phi1 * sum w*delta + phi2 * sum w*(1/p - 1) over the
/// given decisions (infeasible clients are skipped).
double objective(const std::vector<Decision>& decisions, const std::vector<ScaClient>& clients,
                 const ScaSettings& s);

/// Exact constraint check against the original problem: C1 (deadline),
/// C2 (energy) with the realized-rate uplink terms, C3-C5 boxes.
struct FeasibilityReport {
    bool feasible = false;
    bool c1_ok = false;
    bool c2_ok = false;
    double t_total_s = 0.0;
    double e_total_j = 0.0;
};
FeasibilityReport check_exact(const ScaClient& client, const ScaSettings& s, double delta,
                              double f_hz, double tx_w, double tolerance = 1e-9);

/// First-order model of the reception term plus affine/quadratic constraint
/// surrogates, all anchored at (delta_q, f_q, P_q).
struct LinearizedClient {
    double anchor_delta = 0.0, anchor_f = 0.0, anchor_p = 0.0;
    double exp_at_anchor = 0.0;     // A at the anchor
    double grad_delta = 0.0, grad_f = 0.0, grad_p = 0.0;

    // C1 surrogate: t0 + td*delta + tf*f + tp*P <= t_th
    double t0 = 0.0, td = 0.0, tf = 0.0, tp = 0.0;
    // C2 surrogate: qf*f^2 + e0 + ed*delta + ef*f + ep*P <= e_th
    double qf = 0.0, e0 = 0.0, ed = 0.0, ef = 0.0, ep = 0.0;
};

/// Throws SingularAnchor when the anchor leaves no air time or zero rate.
LinearizedClient linearize(const ScaClient& client, const ScaSettings& s, double delta_q,
                           double f_q, double p_q);

/// Minimize c . (delta, f, P) subject to the linearized constraints and the
/// boxes. Active-set enumeration over the (at most two) non-box constraints;
/// exact for this 3-variable problem. `fallback` must be feasible.
struct SubproblemResult {
    double delta = 0.0, f_hz = 0.0, tx_w = 0.0;
    double surrogate_value = 0.0;  // c . x of the winner (without constants)
};
SubproblemResult solve_subproblem(const LinearizedClient& lin, const ScaClient& client,
                                  const ScaSettings& s, double c_delta, double c_f, double c_p);

struct ScaTrace {
    std::vector<double> objective_values;  // true objective at accepted iterates
    std::vector<double> surrogate_values;  // linearized objective at accepted iterates
};

struct ScaResult {
    std::vector<Decision> decisions;
    ScaTrace trace;
    int iterations = 0;
};

/// Algorithm: start all clients at the constraint-relaxing corner
/// (delta_th, f_max, P_max); iterate linearize -> solve -> backtrack-to-exact-
/// feasible-and-descending until the objective change falls below epsilon or
/// max_iterations is hit. Throws NoFeasibleStart when no client admits a
/// feasible corner.
ScaResult sca_solve(const std::vector<ScaClient>& clients, const ScaSettings& s);

}  // namespace phfl
