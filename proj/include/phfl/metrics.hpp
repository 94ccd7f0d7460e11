#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace phfl {

struct ClientRoundRecord {
    int client = 0;
    int vc = 0;
    bool feasible = true;
    double delta = 0.0;
    double f_hz = 0.0;
    double tx_w = 0.0;
    double success_p = 0.0;
    bool received = false;
    double t_tot_s = 0.0;
    double e_tot_j = 0.0;
    double payload_bits = 0.0;
};

/// One record per VC aggregation round (all VCs aggregate at the same
/// instant, so a record carries every client).
struct VcRoundRecord {
    int m = 0, t3 = 0, t2 = 0, t1 = 0;
    std::int64_t t = 0;  // flattened index of the round start
    std::vector<ClientRoundRecord> clients;
    std::vector<double> vc_loss;    // per VC, post-aggregation
    std::vector<double> sbs_loss;   // filled on sBS sync instants
    std::vector<double> mbs_loss;   // filled on mBS sync instants
    double cum_time_s = 0.0;
    double cum_energy_j = 0.0;
    double cum_bits = 0.0;
};

struct GlobalRoundRecord {
    int m = 0;
    double test_accuracy = 0.0;
    double global_loss = 0.0;
    double mean_delta = 0.0;
    double cum_time_s = 0.0;
    double cum_energy_j = 0.0;
    double cum_bits = 0.0;
};

struct MetricsLog {
    int schema_version = 1;
    std::vector<VcRoundRecord> vc_rounds;
    std::vector<GlobalRoundRecord> global_rounds;
};

/// One JSON object per line: vc_round records interleaved with global_round
/// records in execution order.
void write_jsonl(const MetricsLog& log, const std::string& path);
MetricsLog read_jsonl(const std::string& path);

/// Per-global-round summary (strictly derivable from the JSONL).
void write_summary_csv(const MetricsLog& log, const std::string& path);
/// Recompute the summary rows from vc_round records only (used to verify the
/// summary carries no hidden state).
std::vector<GlobalRoundRecord> recompute_summary(const MetricsLog& log);

void write_accuracy_vs_round_csv(const MetricsLog& log, const std::string& path);
void write_accuracy_vs_wallclock_csv(const MetricsLog& log, const std::string& path);
/// Empirical CDF of per-client pruning ratios grouped by VC:
/// columns vc_id, x, F.
void write_delta_cdf_csv(const MetricsLog& log, const std::string& path);

}  // namespace phfl
