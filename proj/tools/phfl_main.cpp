#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "phfl/analysis.hpp"
#include "phfl/config.hpp"
#include "phfl/engine.hpp"
#include "phfl/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 2 config error, 3 I/O error, 4 other runtime error.
int exit_code_for(const phfl::Error& e) {
    switch (e.kind()) {
        case phfl::ErrorKind::ConfigError: return 2;
        case phfl::ErrorKind::IoError: return 3;
        default: return 4;
    }
}

fs::path resolve_output_dir(const std::string& dir) {
    fs::path p(dir);
    if (p.is_relative()) {
        if (const char* root = std::getenv("PHFL_OUTPUT_ROOT")) p = fs::path(root) / p;
    }
    fs::create_directories(p);
    return p;
}

int cmd_run(const std::string& config_path, const phfl::CliOverrides& ov) {
    phfl::LoadedExperiment loaded = phfl::load_experiment_config(config_path, ov);
    const fs::path out = resolve_output_dir(loaded.output_dir);

    {
        std::ofstream echo(out / "resolved_config.json");
        if (!echo) phfl::raise(phfl::ErrorKind::IoError, "cannot write resolved config");
        echo << loaded.resolved.dump(2) << "\n";
    }

    const phfl::MetricsLog log = phfl::run_experiment(loaded.experiment);
    phfl::write_jsonl(log, (out / "metrics.jsonl").string());
    phfl::write_summary_csv(log, (out / "summary.csv").string());
    phfl::write_accuracy_vs_round_csv(log, (out / "accuracy_vs_round.csv").string());
    phfl::write_accuracy_vs_wallclock_csv(log, (out / "accuracy_vs_wallclock.csv").string());
    phfl::write_delta_cdf_csv(log, (out / "delta_cdf.csv").string());

    const auto& last = log.global_rounds.back();
    std::cout << "baseline=" << phfl::baseline_name(loaded.baseline)
              << " rounds=" << log.global_rounds.size() << " final_accuracy=" << last.test_accuracy
              << " wall_clock_s=" << last.cum_time_s << " energy_j=" << last.cum_energy_j
              << " bits=" << last.cum_bits << "\n";
    std::cout << "artifacts: " << out.string() << "\n";
    return 0;
}

int cmd_optimize(const std::string& instance_path, const std::string& output_path) {
    const phfl::OptimizeInstance inst = phfl::load_optimize_instance(instance_path);
    const phfl::ScaResult result = phfl::sca_solve(inst.clients, inst.settings);

    json decisions = json::array();
    for (const phfl::Decision& d : result.decisions) {
        decisions.push_back({{"feasible", d.feasible},
                             {"delta", d.delta},
                             {"f_hz", d.f_hz},
                             {"tx_w", d.tx_w},
                             {"p", d.success_p},
                             {"infeasible_constraint", d.infeasible_constraint}});
    }
    const json out = {{"iterations", result.iterations},
                      {"objective_trace", result.trace.objective_values},
                      {"surrogate_trace", result.trace.surrogate_values},
                      {"decisions", decisions}};
    std::ofstream f(output_path);
    if (!f) phfl::raise(phfl::ErrorKind::IoError, "cannot write " + output_path);
    f << out.dump(2) << "\n";
    std::cout << "iterations=" << result.iterations
              << " objective=" << result.trace.objective_values.back() << "\n";
    return 0;
}

int cmd_bound(const std::string& inputs_path, const std::string& output_path) {
    std::ifstream in(inputs_path);
    if (!in) phfl::raise(phfl::ErrorKind::IoError, "cannot open " + inputs_path);
    const json root = json::parse(in);

    phfl::BoundInputs b;
    b.beta = root.value("beta", 1.0);
    b.sigma2 = root.value("sigma2", 0.0);
    b.eps_vc2 = root.value("eps_vc2", 0.0);
    b.eps_sbs2 = root.value("eps_sbs2", 0.0);
    b.eps_mbs2 = root.value("eps_mbs2", 0.0);
    b.eps2 = root.value("eps2", 0.0);
    b.g2 = root.value("g2", 0.0);
    b.d2 = root.value("d2", 0.0);
    b.eta = root.value("eta", 0.01);
    if (root.contains("kappa")) {
        const auto k = root.at("kappa").get<std::vector<int>>();
        if (k.size() != 4) phfl::raise(phfl::ErrorKind::ConfigError, "kappa must be [k0,k1,k2,k3]");
        b.kappa0 = k[0];
        b.kappa1 = k[1];
        b.kappa2 = k[2];
        b.kappa3 = k[3];
    }
    b.delta_th = root.value("delta_th", 0.0);
    b.total_iterations = root.value("total_iterations", std::int64_t{1});
    b.total_clients = root.value("total_clients", 1);
    b.loss_gap = root.value("loss_gap", 0.0);
    b.phi_w0 = root.value("phi_w0", 0.0);

    json factors_json;
    if (root.contains("metrics_jsonl")) {
        // Recover the wireless factors from a run's success probabilities.
        if (!root.contains("topology"))
            phfl::raise(phfl::ErrorKind::ConfigError,
                        "'topology' (balanced: [L, sbs, vcs, ues]) is required with metrics_jsonl");
        const auto t = root.at("topology").get<std::vector<int>>();
        if (t.size() != 4)
            phfl::raise(phfl::ErrorKind::ConfigError, "topology must be [L, sbs, vcs, ues]");
        const phfl::NetworkTopology topo =
            phfl::build_topology(phfl::TopologyConfig::balanced(t[0], t[1], t[2], t[3]));
        const phfl::MetricsLog log = phfl::read_jsonl(root.at("metrics_jsonl").get<std::string>());
        std::vector<std::vector<double>> trace;
        for (const auto& r : log.vc_rounds) {
            std::vector<double> row(topo.total_ues, 1.0);
            for (const auto& c : r.clients) row[c.client] = c.success_p;
            trace.push_back(std::move(row));
        }
        const phfl::WirelessFactors f = phfl::wireless_factors(trace, topo);
        b.phi_w0 = f.phi_w0;
        factors_json = {{"phi_w0", f.phi_w0}, {"phi_l1", f.phi_l1}, {"phi_l2", f.phi_l2},
                        {"phi_l3", f.phi_l3}, {"phi_l4", f.phi_l4}};
    }

    const phfl::BoundBreakdown breakdown = phfl::corollary_bound(b);
    std::ofstream out(output_path);
    if (!out) phfl::raise(phfl::ErrorKind::IoError, "cannot write " + output_path);
    out.precision(17);
    out << "term,value\n";
    for (const auto& t : breakdown.terms) out << t.name << ',' << t.value << "\n";
    out << "total," << breakdown.total << "\n";
    out << "eta_cap," << breakdown.eta_cap << "\n";

    if (breakdown.eta_exceeds_cap)
        std::cerr << "warning: eta " << b.eta << " exceeds the smoothness cap "
                  << breakdown.eta_cap << "\n";
    if (!factors_json.is_null()) std::cout << "wireless factors: " << factors_json.dump() << "\n";
    std::cout << "total=" << breakdown.total << " (" << output_path << ")\n";
    return 0;
}

int cmd_cdf(const std::string& metrics_path, const std::string& output_path) {
    const phfl::MetricsLog log = phfl::read_jsonl(metrics_path);
    phfl::write_delta_cdf_csv(log, output_path);
    std::cout << "wrote " << output_path << "\n";
    return 0;
}

int cmd_partition(const std::string& spec_path, const std::string& output_dir) {
    std::ifstream in(spec_path);
    if (!in) phfl::raise(phfl::ErrorKind::IoError, "cannot open " + spec_path);
    const json root = json::parse(in);

    phfl::SyntheticSpec spec;
    spec.num_classes = root.value("classes", 10);
    spec.feature_dim = root.value("features", 32);
    spec.samples = root.value("samples", 4096);
    spec.class_separation = root.value("class_separation", 3.0);
    spec.noise_sigma = root.value("noise_sigma", 1.0);
    spec.seed = root.value("seed", std::uint64_t{1});
    const int clients = root.value("clients", 8);
    const double alpha = root.value("dirichlet_alpha", 0.5);

    phfl::Dataset data;
    if (root.contains("csv_path"))
        data = phfl::load_csv_dataset(root.at("csv_path").get<std::string>());
    else
        data = phfl::make_synthetic_dataset(spec);
    const auto shards = phfl::dirichlet_partition(data, clients, alpha, spec.seed);

    const fs::path out = resolve_output_dir(output_dir);
    json manifest;
    manifest["clients"] = json::array();
    for (int u = 0; u < clients; ++u)
        manifest["clients"].push_back({{"id", u},
                                       {"rows", shards[u].rows},
                                       {"label_proportions", shards[u].label_proportions}});
    manifest["seed"] = spec.seed;
    manifest["dirichlet_alpha"] = alpha;
    std::ofstream f(out / "shards.json");
    if (!f) phfl::raise(phfl::ErrorKind::IoError, "cannot write shard manifest");
    f << manifest.dump(2) << "\n";
    std::cout << "wrote " << (out / "shards.json").string() << " (" << clients << " shards)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pruning-enabled hierarchical federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, instance_path, inputs_path, metrics_path, spec_path;
    std::string output_path, output_dir;
    phfl::CliOverrides ov;
    std::string baseline_flag;
    std::uint64_t seed_flag = 0;
    int jobs_flag = 0;

    auto* run = app.add_subcommand("run", "Run a full experiment from a config file");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--output-dir", output_dir, "override output directory");
    run->add_option("--baseline", baseline_flag, "phfl|r-phfl|hfl-wc|hfl-vc-ub|hfl-ub");
    run->add_option("--seed", seed_flag, "override seed");
    run->add_option("--jobs", jobs_flag, "client-level parallelism");

    auto* optimize = app.add_subcommand("optimize", "Solve one joint resource-selection instance");
    optimize->add_option("--instance", instance_path, "instance file (JSON)")->required();
    optimize->add_option("--output", output_path, "decisions + trace output (JSON)")->required();

    auto* bound = app.add_subcommand("bound", "Evaluate the convergence-bound terms");
    bound->add_option("--inputs", inputs_path, "bound inputs (JSON)")->required();
    bound->add_option("--output", output_path, "per-term CSV")->required();

    auto* cdf = app.add_subcommand("cdf", "Per-VC pruning-ratio CDF from a metrics log");
    cdf->add_option("--metrics", metrics_path, "metrics.jsonl path")->required();
    cdf->add_option("--output", output_path, "CDF CSV path")->required();

    auto* partition = app.add_subcommand("partition", "Generate and dump dataset shards");
    partition->add_option("--spec", spec_path, "dataset spec (JSON)")->required();
    partition->add_option("--output-dir", output_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (!output_dir.empty()) ov.output_dir = output_dir;
            if (!baseline_flag.empty()) ov.baseline = baseline_flag;
            if (run->count("--seed")) ov.seed = seed_flag;
            if (run->count("--jobs")) ov.jobs = jobs_flag;
            return cmd_run(config_path, ov);
        }
        if (optimize->parsed()) return cmd_optimize(instance_path, output_path);
        if (bound->parsed()) return cmd_bound(inputs_path, output_path);
        if (cdf->parsed()) return cmd_cdf(metrics_path, output_path);
        if (partition->parsed()) return cmd_partition(spec_path, output_dir);
    } catch (const phfl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
