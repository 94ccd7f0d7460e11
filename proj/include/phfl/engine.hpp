#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "phfl/channel.hpp"
#include "phfl/cost.hpp"
#include "phfl/learner.hpp"
#include "phfl/metrics.hpp"
#include "phfl/sca.hpp"
#include "phfl/topology.hpp"

namespace phfl {

enum class BaselineKind { Phfl, HflWc, RPhfl, HflVcUb, HflUb };

enum class PolicyMode { Sca, Fixed, Random };

enum class ReceptionMode { Physical, Perfect, Forced };

/// Fully resolved experiment inputs; the config layer builds this from the
/// experiment file, tests build it directly.
struct Experiment {
    NetworkTopology topology;
    RoundSchedule schedule;
    ChannelParams channel;
    EnergyParams energy;

    ModelSpec model_spec;
    double eta = 0.01;
    Dataset train;
    Dataset test;
    std::vector<DataShard> shards;        // one per client
    std::vector<ClientProfile> profiles;  // one per client

    PolicyMode policy = PolicyMode::Sca;
    double phi1 = 1.0;
    double phi2 = 1e-3;
    int sca_iterations = 15;
    double sca_epsilon = 1e-9;
    double t_th_s = 1.0;
    double delta_th = 0.9;
    double fixed_delta = 0.0;       // Fixed policy
    double fixed_f_fraction = 1.0;  // of f_max
    double fixed_p_fraction = 1.0;  // of P_max
    double inverse_p_cap = 0.0;     // cap on 1/p scaling; 0 disables (exact form)

    bool pruning = true;            // lottery ticket + masked updates
    ReceptionMode reception = ReceptionMode::Physical;
    double forced_p = 1.0;
    bool fixed_deadline_accounting = true;  // wall clock += t_th per VC round
    std::vector<int> vc_kappa0;             // per-VC local rounds; empty = schedule.kappa0

    std::uint64_t seed = 0;
    int jobs = 1;
    int tier_loss_eval_cap = 256;
    bool eval_tier_losses = true;
};

/// Rewrites the experiment for a baseline: collapses the VC tier, disables
/// pruning, switches policies/accounting. `Phfl` leaves it untouched.
void apply_baseline(Experiment& e, BaselineKind kind);

/// Maximum local rounds every client of the VC can run under the deadline and
/// energy budget with the dense model (reference gain 1, no interference).
int max_common_local_rounds(const std::vector<ClientProfile>& vc_profiles,
                            const ChannelParams& channel, const EnergyParams& energy,
                            std::int64_t d_model, double deadline_s, double energy_budget_scale);

/// VC update rule: weighted average of the winning tickets plus
/// inverse-probability-scaled client displacements. Entries with
/// received=false contribute only their ticket.
std::vector<double> aggregate_vc_update(const std::vector<std::vector<double>>& tickets,
                                        const std::vector<std::vector<double>>& deltas,
                                        const std::vector<double>& alphas,
                                        const std::vector<double>& success_p,
                                        const std::vector<char>& received,
                                        double inverse_p_cap = 0.0);

/// Test hooks: observe tier sync instants and the global trajectory.
struct EngineHooks {
    std::function<void(const char* tier, int parent_id, int child_id,
                       const std::vector<double>& parent, const std::vector<double>& child)>
        on_sync;
    std::function<void(int m, const std::vector<double>& global_model)> on_global_round;
};

MetricsLog run_experiment(const Experiment& e, const EngineHooks* hooks = nullptr);

}  // namespace phfl
