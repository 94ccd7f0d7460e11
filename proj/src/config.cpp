#include "phfl/config.hpp"

#include <fstream>
#include <set>

#include "phfl/rng.hpp"

namespace phfl {

using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        raise(ErrorKind::ConfigError, "JSON parse error in " + path + ": " + e.what());
    }
}

void expect_keys(const json& obj, const std::string& path,
                 std::initializer_list<const char*> keys) {
    if (!obj.is_object()) raise(ErrorKind::ConfigError, path + " must be an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            raise(ErrorKind::ConfigError, "unknown key '" + path + "." + key + "'");
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        raise(ErrorKind::ConfigError, std::string("bad value for '") + key + "': " + e.what());
    }
}

template <typename T>
T require(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key))
        raise(ErrorKind::ConfigError, "missing required field '" + path + "." + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        raise(ErrorKind::ConfigError, "bad value for '" + path + "." + key + "': " + e.what());
    }
}

std::pair<double, double> range_of(const json& obj, const char* key,
                                   std::pair<double, double> fallback) {
    if (!obj.contains(key)) return fallback;
    const auto v = obj.at(key).get<std::vector<double>>();
    if (v.size() != 2 || v[0] > v[1])
        raise(ErrorKind::ConfigError, std::string("'") + key + "' must be [lo, hi]");
    return {v[0], v[1]};
}

TopologyConfig parse_topology(const json& t) {
    expect_keys(t, "topology",
                {"mbs_count", "sbs_per_mbs", "vcs_per_sbs", "ues_per_vc", "weight_mode",
                 "alpha_mbs", "alpha_sbs", "alpha_vc", "alpha_ue"});
    TopologyConfig cfg;
    cfg.mbs_count = require<int>(t, "topology", "mbs_count");
    const json& sbs = t.contains("sbs_per_mbs") ? t.at("sbs_per_mbs") : json(1);
    const json& vcs = t.contains("vcs_per_sbs") ? t.at("vcs_per_sbs") : json(1);
    const json& ues = t.contains("ues_per_vc") ? t.at("ues_per_vc") : json(1);

    cfg.sbs_per_mbs = sbs.is_number() ? std::vector<int>(cfg.mbs_count, sbs.get<int>())
                                      : sbs.get<std::vector<int>>();
    if (static_cast<int>(cfg.sbs_per_mbs.size()) != cfg.mbs_count)
        raise(ErrorKind::ConfigError, "topology.sbs_per_mbs length must equal mbs_count");

    if (vcs.is_number()) {
        cfg.vcs_per_sbs.resize(cfg.mbs_count);
        for (int l = 0; l < cfg.mbs_count; ++l)
            cfg.vcs_per_sbs[l].assign(cfg.sbs_per_mbs[l], vcs.get<int>());
    } else {
        cfg.vcs_per_sbs = vcs.get<std::vector<std::vector<int>>>();
    }
    if (ues.is_number()) {
        cfg.ues_per_vc.resize(cfg.mbs_count);
        for (int l = 0; l < cfg.mbs_count; ++l) {
            cfg.ues_per_vc[l].resize(cfg.sbs_per_mbs[l]);
            for (int k = 0; k < cfg.sbs_per_mbs[l]; ++k)
                cfg.ues_per_vc[l][k].assign(cfg.vcs_per_sbs[l][k], ues.get<int>());
        }
    } else {
        cfg.ues_per_vc = ues.get<std::vector<std::vector<std::vector<int>>>>();
    }

    const std::string mode = get_or<std::string>(t, "weight_mode", "uniform");
    if (mode == "uniform") {
        cfg.weight_mode = TopologyConfig::WeightMode::Uniform;
    } else if (mode == "explicit") {
        cfg.weight_mode = TopologyConfig::WeightMode::Explicit;
        cfg.alpha_mbs = require<std::vector<double>>(t, "topology", "alpha_mbs");
        cfg.alpha_sbs = require<std::vector<std::vector<double>>>(t, "topology", "alpha_sbs");
        cfg.alpha_vc =
            require<std::vector<std::vector<std::vector<double>>>>(t, "topology", "alpha_vc");
        cfg.alpha_ue = require<std::vector<std::vector<std::vector<std::vector<double>>>>>(
            t, "topology", "alpha_ue");
    } else {
        raise(ErrorKind::ConfigError, "topology.weight_mode must be 'uniform' or 'explicit'");
    }
    return cfg;
}

}  // namespace

BaselineKind parse_baseline(const std::string& name) {
    if (name == "phfl") return BaselineKind::Phfl;
    if (name == "r-phfl") return BaselineKind::RPhfl;
    if (name == "hfl-wc") return BaselineKind::HflWc;
    if (name == "hfl-vc-ub") return BaselineKind::HflVcUb;
    if (name == "hfl-ub") return BaselineKind::HflUb;
    raise(ErrorKind::ConfigError,
          "unknown baseline '" + name + "' (phfl|r-phfl|hfl-wc|hfl-vc-ub|hfl-ub)");
}

const char* baseline_name(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::Phfl: return "phfl";
        case BaselineKind::RPhfl: return "r-phfl";
        case BaselineKind::HflWc: return "hfl-wc";
        case BaselineKind::HflVcUb: return "hfl-vc-ub";
        case BaselineKind::HflUb: return "hfl-ub";
    }
    return "phfl";
}

LoadedExperiment load_experiment_config(const std::string& path, const CliOverrides& ov) {
    const json root = load_json_file(path);
    expect_keys(root, "$",
                {"seed", "output_dir", "baseline", "jobs", "topology", "schedule", "channel",
                 "energy", "clients", "learner", "optimizer", "reception", "metrics"});

    LoadedExperiment out;
    Experiment& e = out.experiment;

    e.seed = ov.seed.value_or(get_or<std::uint64_t>(root, "seed", 1));
    e.jobs = ov.jobs.value_or(get_or<int>(root, "jobs", 1));
    out.output_dir = ov.output_dir.value_or(get_or<std::string>(root, "output_dir", "out"));
    out.baseline =
        parse_baseline(ov.baseline.value_or(get_or<std::string>(root, "baseline", "phfl")));

    if (!root.contains("topology"))
        raise(ErrorKind::ConfigError, "missing required field '$.topology'");
    const TopologyConfig topo_cfg = parse_topology(root.at("topology"));
    e.topology = build_topology(topo_cfg);

    if (!root.contains("schedule"))
        raise(ErrorKind::ConfigError, "missing required field '$.schedule'");
    const json& sch = root.at("schedule");
    expect_keys(sch, "schedule", {"kappa0", "kappa1", "kappa2", "kappa3", "rho", "global_rounds"});
    e.schedule.kappa0 = get_or<int>(sch, "kappa0", 5);
    e.schedule.kappa1 = get_or<int>(sch, "kappa1", 2);
    e.schedule.kappa2 = get_or<int>(sch, "kappa2", 2);
    e.schedule.kappa3 = get_or<int>(sch, "kappa3", 2);
    e.schedule.rho = get_or<int>(sch, "rho", 1);
    e.schedule.global_rounds = require<int>(sch, "schedule", "global_rounds");
    e.schedule.validate();

    const json chan = root.contains("channel") ? root.at("channel") : json::object();
    expect_keys(chan, "channel",
                {"prb_width_hz", "noise_w_per_hz", "pathloss_exponent", "distance"});
    e.channel.prb_width_hz = get_or<double>(chan, "prb_width_hz", 1e6);
    e.channel.noise_w_per_hz = get_or<double>(chan, "noise_w_per_hz", dbm_to_watt(-174.0));
    e.channel.pathloss_exponent = get_or<double>(chan, "pathloss_exponent", 3.0);
    e.channel.seed = e.seed;
    e.channel.validate();
    const json dist = chan.contains("distance") ? chan.at("distance") : json::object();
    expect_keys(dist, "channel.distance", {"mode", "min_m", "max_m", "value_m", "values_m"});
    const std::string dist_mode = get_or<std::string>(dist, "mode", "uniform");

    const json en = root.contains("energy") ? root.at("energy") : json::object();
    expect_keys(en, "energy", {"xi", "fpp_bits"});
    e.energy.xi = get_or<double>(en, "xi", 2e-28);
    e.energy.fpp_bits = get_or<int>(en, "fpp_bits", 32);
    e.energy.validate();

    // Learner and dataset come before client profiles because the default
    // per-sample size follows the data schema.
    const json lr = root.contains("learner") ? root.at("learner") : json::object();
    expect_keys(lr, "learner", {"model", "hidden", "eta", "dataset"});
    const std::string model_kind = get_or<std::string>(lr, "model", "mlp");
    e.model_spec.hidden = get_or<int>(lr, "hidden", 64);
    e.eta = get_or<double>(lr, "eta", 0.01);
    if (model_kind == "logistic")
        e.model_spec.kind = ModelSpec::Kind::Logistic;
    else if (model_kind == "mlp")
        e.model_spec.kind = ModelSpec::Kind::Mlp;
    else
        raise(ErrorKind::ConfigError, "learner.model must be 'logistic' or 'mlp'");

    const json ds = lr.contains("dataset") ? lr.at("dataset") : json::object();
    expect_keys(ds, "learner.dataset",
                {"kind", "classes", "features", "train_samples", "test_samples",
                 "class_separation", "noise_sigma", "dirichlet_alpha", "csv_path",
                 "csv_test_fraction"});
    const std::string ds_kind = get_or<std::string>(ds, "kind", "synthetic");
    const double dirichlet_alpha = get_or<double>(ds, "dirichlet_alpha", 0.5);
    int test_samples = get_or<int>(ds, "test_samples", 1024);
    if (ds_kind == "synthetic") {
        SyntheticSpec spec;
        spec.num_classes = get_or<int>(ds, "classes", 10);
        spec.feature_dim = get_or<int>(ds, "features", 32);
        const int train_samples = get_or<int>(ds, "train_samples", 4096);
        spec.samples = train_samples + test_samples;
        spec.class_separation = get_or<double>(ds, "class_separation", 3.0);
        spec.noise_sigma = get_or<double>(ds, "noise_sigma", 1.0);
        spec.seed = e.seed;
        const Dataset full = make_synthetic_dataset(spec);
        e.train.feature_dim = e.test.feature_dim = full.feature_dim;
        e.train.num_classes = e.test.num_classes = full.num_classes;
        for (int r = 0; r < full.size(); ++r) {
            Dataset& dst = r < train_samples ? e.train : e.test;
            dst.y.push_back(full.y[r]);
            dst.x.insert(dst.x.end(), full.row(r), full.row(r) + full.feature_dim);
        }
    } else if (ds_kind == "csv") {
        const std::string csv = require<std::string>(ds, "learner.dataset", "csv_path");
        const double frac = get_or<double>(ds, "csv_test_fraction", 0.2);
        Dataset full = load_csv_dataset(csv);
        const int test_n = static_cast<int>(full.size() * frac);
        const int train_n = full.size() - test_n;
        e.train.feature_dim = e.test.feature_dim = full.feature_dim;
        e.train.num_classes = e.test.num_classes = full.num_classes;
        for (int r = 0; r < full.size(); ++r) {
            Dataset& dst = r < train_n ? e.train : e.test;
            dst.y.push_back(full.y[r]);
            dst.x.insert(dst.x.end(), full.row(r), full.row(r) + full.feature_dim);
        }
        test_samples = test_n;
    } else {
        raise(ErrorKind::ConfigError, "learner.dataset.kind must be 'synthetic' or 'csv'");
    }
    e.model_spec.feature_dim = e.train.feature_dim;
    e.model_spec.num_classes = e.train.num_classes;
    if (e.test.size() == 0) raise(ErrorKind::TooFewSamples, "no test samples");

    e.shards = dirichlet_partition(e.train, e.topology.total_ues, dirichlet_alpha, e.seed);

    // Client profiles: one random draw per VC (UEs inside a VC share a
    // profile), optional per-UE overrides.
    const json cl = root.contains("clients") ? root.at("clients") : json::object();
    expect_keys(cl, "clients",
                {"per_vc_random", "batch_size", "batch_count", "sample_bits", "p_max_dbm_bounds",
                 "overrides"});
    const json pvr = cl.contains("per_vc_random") ? cl.at("per_vc_random") : json::object();
    expect_keys(pvr, "clients.per_vc_random",
                {"p_max_dbm", "e_th_j", "f_max_ghz", "cycles_per_bit"});
    const auto p_dbm = range_of(pvr, "p_max_dbm", {23.0, 30.0});
    const auto e_th = range_of(pvr, "e_th_j", {10.0, 13.0});
    const auto f_ghz = range_of(pvr, "f_max_ghz", {1.8, 2.8});
    const auto cyc = range_of(pvr, "cycles_per_bit", {20.0, 25.0});
    const auto dbm_bounds = range_of(cl, "p_max_dbm_bounds", {0.0, 40.0});
    const int batch_size = get_or<int>(cl, "batch_size", 32);
    const int batch_count = get_or<int>(cl, "batch_count", 10);
    double sample_bits = e.train.sample_bits();
    if (cl.contains("sample_bits") && !cl.at("sample_bits").is_string())
        sample_bits = cl.at("sample_bits").get<double>();

    e.profiles.resize(e.topology.total_ues);
    for (int vc = 0; vc < e.topology.total_vcs; ++vc) {
        auto g = make_rng(e.seed, Stream::ProfileDraw, vc);
        const double dbm = uniform(g, p_dbm.first, p_dbm.second);
        if (dbm < dbm_bounds.first || dbm > dbm_bounds.second)
            raise(ErrorKind::ConfigError, "drawn p_max outside configured dBm bounds");
        ClientProfile proto;
        proto.p_max_w = dbm_to_watt(dbm);
        proto.e_th_j = uniform(g, e_th.first, e_th.second);
        proto.f_max_hz = uniform(g, f_ghz.first, f_ghz.second) * 1e9;
        proto.cycles_per_bit = uniform(g, cyc.first, cyc.second);
        proto.batch_size = batch_size;
        proto.batch_count = batch_count;
        proto.sample_bits = sample_bits;
        for (int u : e.topology.vc_ues[vc]) {
            e.profiles[u] = proto;
            e.profiles[u].shard = u;
        }
    }
    for (int u = 0; u < e.topology.total_ues; ++u) {
        auto g = make_rng(e.seed, Stream::Placement, u);
        if (dist_mode == "uniform") {
            e.profiles[u].distance_m =
                uniform(g, get_or<double>(dist, "min_m", 10.0), get_or<double>(dist, "max_m", 250.0));
        } else if (dist_mode == "fixed") {
            e.profiles[u].distance_m = require<double>(dist, "channel.distance", "value_m");
        } else if (dist_mode == "per_client") {
            const auto values = require<std::vector<double>>(dist, "channel.distance", "values_m");
            if (static_cast<int>(values.size()) != e.topology.total_ues)
                raise(ErrorKind::ConfigError, "channel.distance.values_m length != client count");
            e.profiles[u].distance_m = values[u];
        } else {
            raise(ErrorKind::ConfigError, "channel.distance.mode must be uniform|fixed|per_client");
        }
    }
    if (cl.contains("overrides")) {
        for (const json& o : cl.at("overrides")) {
            expect_keys(o, "clients.overrides[]",
                        {"client", "p_max_dbm", "e_th_j", "f_max_ghz", "cycles_per_bit",
                         "distance_m", "batch_size", "batch_count", "sample_bits"});
            const int u = require<int>(o, "clients.overrides[]", "client");
            if (u < 0 || u >= e.topology.total_ues)
                raise(ErrorKind::ConfigError, "override client id out of range");
            ClientProfile& p = e.profiles[u];
            if (o.contains("p_max_dbm")) {
                const double dbm = o.at("p_max_dbm").get<double>();
                if (dbm < dbm_bounds.first || dbm > dbm_bounds.second)
                    raise(ErrorKind::ConfigError, "override p_max outside configured dBm bounds");
                p.p_max_w = dbm_to_watt(dbm);
            }
            if (o.contains("e_th_j")) p.e_th_j = o.at("e_th_j").get<double>();
            if (o.contains("f_max_ghz")) p.f_max_hz = o.at("f_max_ghz").get<double>() * 1e9;
            if (o.contains("cycles_per_bit")) p.cycles_per_bit = o.at("cycles_per_bit").get<double>();
            if (o.contains("distance_m")) p.distance_m = o.at("distance_m").get<double>();
            if (o.contains("batch_size")) p.batch_size = o.at("batch_size").get<int>();
            if (o.contains("batch_count")) p.batch_count = o.at("batch_count").get<int>();
            if (o.contains("sample_bits")) p.sample_bits = o.at("sample_bits").get<double>();
        }
    }
    for (const auto& p : e.profiles) p.validate();

    const json opt = root.contains("optimizer") ? root.at("optimizer") : json::object();
    expect_keys(opt, "optimizer",
                {"mode", "phi1", "phi2", "max_iterations", "epsilon", "t_th_s", "delta_th",
                 "fixed", "inverse_p_cap"});
    const std::string opt_mode = get_or<std::string>(opt, "mode", "sca");
    if (opt_mode == "sca")
        e.policy = PolicyMode::Sca;
    else if (opt_mode == "fixed")
        e.policy = PolicyMode::Fixed;
    else if (opt_mode == "random")
        e.policy = PolicyMode::Random;
    else
        raise(ErrorKind::ConfigError, "optimizer.mode must be sca|fixed|random");
    e.phi1 = get_or<double>(opt, "phi1", 1.0);
    e.phi2 = get_or<double>(opt, "phi2", 1e-3);
    e.sca_iterations = get_or<int>(opt, "max_iterations", 15);
    e.sca_epsilon = get_or<double>(opt, "epsilon", 1e-9);
    e.t_th_s = get_or<double>(opt, "t_th_s", 1.0);
    e.delta_th = get_or<double>(opt, "delta_th", 0.9);
    e.inverse_p_cap = get_or<double>(opt, "inverse_p_cap", 0.0);
    const json fx = opt.contains("fixed") ? opt.at("fixed") : json::object();
    expect_keys(fx, "optimizer.fixed", {"delta", "f_fraction", "p_fraction"});
    e.fixed_delta = get_or<double>(fx, "delta", 0.0);
    e.fixed_f_fraction = get_or<double>(fx, "f_fraction", 1.0);
    e.fixed_p_fraction = get_or<double>(fx, "p_fraction", 1.0);

    const json met = root.contains("metrics") ? root.at("metrics") : json::object();
    expect_keys(met, "metrics", {"tier_loss_eval_cap", "eval_tier_losses"});
    e.tier_loss_eval_cap = get_or<int>(met, "tier_loss_eval_cap", 256);
    e.eval_tier_losses = get_or<bool>(met, "eval_tier_losses", true);

    // Baseline preset first; an explicit reception mode then wins.
    apply_baseline(e, out.baseline);

    const json rec = root.contains("reception") ? root.at("reception") : json::object();
    expect_keys(rec, "reception", {"mode", "p"});
    const std::string rec_mode = get_or<std::string>(rec, "mode", "auto");
    if (rec_mode == "physical")
        e.reception = ReceptionMode::Physical;
    else if (rec_mode == "perfect")
        e.reception = ReceptionMode::Perfect;
    else if (rec_mode == "forced") {
        e.reception = ReceptionMode::Forced;
        e.forced_p = require<double>(rec, "reception", "p");
        if (!(e.forced_p > 0.0 && e.forced_p <= 1.0))
            raise(ErrorKind::ConfigError, "reception.p must lie in (0,1]");
    } else if (rec_mode != "auto") {
        raise(ErrorKind::ConfigError, "reception.mode must be auto|physical|perfect|forced");
    }

    // Echo with all defaults resolved (post-baseline values are reported so
    // every constant that shaped the run is on disk).
    json resolved;
    resolved["seed"] = e.seed;
    resolved["jobs"] = e.jobs;
    resolved["output_dir"] = out.output_dir;
    resolved["baseline"] = baseline_name(out.baseline);
    resolved["schedule"] = {{"kappa0", e.schedule.kappa0}, {"kappa1", e.schedule.kappa1},
                            {"kappa2", e.schedule.kappa2}, {"kappa3", e.schedule.kappa3},
                            {"rho", e.schedule.rho},       {"global_rounds", e.schedule.global_rounds}};
    resolved["channel"] = {{"prb_width_hz", e.channel.prb_width_hz},
                           {"noise_w_per_hz", e.channel.noise_w_per_hz},
                           {"pathloss_exponent", e.channel.pathloss_exponent},
                           {"distance_mode", dist_mode}};
    resolved["energy"] = {{"xi", e.energy.xi}, {"fpp_bits", e.energy.fpp_bits}};
    resolved["learner"] = {{"model", model_kind},
                           {"hidden", e.model_spec.hidden},
                           {"eta", e.eta},
                           {"model_dim", e.model_spec.dim()},
                           {"dataset_kind", ds_kind},
                           {"classes", e.train.num_classes},
                           {"features", e.train.feature_dim},
                           {"train_samples", e.train.size()},
                           {"test_samples", test_samples},
                           {"dirichlet_alpha", dirichlet_alpha}};
    resolved["optimizer"] = {{"mode", opt_mode},
                             {"phi1", e.phi1},
                             {"phi2", e.phi2},
                             {"max_iterations", e.sca_iterations},
                             {"epsilon", e.sca_epsilon},
                             {"t_th_s", e.t_th_s},
                             {"delta_th", e.delta_th},
                             {"inverse_p_cap", e.inverse_p_cap}};
    resolved["reception"] =
        json{{"mode", e.reception == ReceptionMode::Physical
                          ? "physical"
                          : e.reception == ReceptionMode::Perfect ? "perfect" : "forced"},
             {"p", e.forced_p}};
    json profiles = json::array();
    for (int u = 0; u < e.topology.total_ues; ++u) {
        const ClientProfile& p = e.profiles[u];
        profiles.push_back({{"client", u},
                            {"vc", e.topology.ue_vc[u]},
                            {"f_max_hz", p.f_max_hz},
                            {"p_max_w", p.p_max_w},
                            {"e_th_j", p.e_th_j},
                            {"cycles_per_bit", p.cycles_per_bit},
                            {"sample_bits", p.sample_bits},
                            {"distance_m", p.distance_m},
                            {"batch_size", p.batch_size},
                            {"batch_count", p.batch_count}});
    }
    resolved["clients"] = profiles;
    resolved["topology"] = {{"mbs_count", e.topology.mbs_count},
                            {"total_sbs", e.topology.total_sbs},
                            {"total_vcs", e.topology.total_vcs},
                            {"total_ues", e.topology.total_ues}};
    if (!e.vc_kappa0.empty()) resolved["vc_kappa0"] = e.vc_kappa0;
    out.resolved = std::move(resolved);
    return out;
}

OptimizeInstance load_optimize_instance(const std::string& path) {
    const json root = load_json_file(path);
    expect_keys(root, "$",
                {"phi1", "phi2", "t_th_s", "delta_th", "rho", "kappa0", "d_model", "fpp_bits",
                 "xi", "max_iterations", "epsilon", "channel", "clients"});
    OptimizeInstance inst;
    ScaSettings& s = inst.settings;
    s.phi1 = get_or<double>(root, "phi1", 1.0);
    s.phi2 = get_or<double>(root, "phi2", 1e-3);
    s.t_th_s = require<double>(root, "$", "t_th_s");
    s.delta_th = get_or<double>(root, "delta_th", 0.9);
    s.rho = get_or<int>(root, "rho", 1);
    s.kappa0 = get_or<int>(root, "kappa0", 5);
    s.d_model = require<std::int64_t>(root, "$", "d_model");
    s.fpp_bits = get_or<int>(root, "fpp_bits", 32);
    s.xi = get_or<double>(root, "xi", 2e-28);
    s.max_iterations = get_or<int>(root, "max_iterations", 15);
    s.epsilon = get_or<double>(root, "epsilon", 1e-9);
    const json chan = root.contains("channel") ? root.at("channel") : json::object();
    expect_keys(chan, "channel", {"prb_width_hz", "noise_w_per_hz", "pathloss_exponent"});
    s.channel.prb_width_hz = get_or<double>(chan, "prb_width_hz", 1e6);
    s.channel.noise_w_per_hz = get_or<double>(chan, "noise_w_per_hz", dbm_to_watt(-174.0));
    s.channel.pathloss_exponent = get_or<double>(chan, "pathloss_exponent", 3.0);

    if (!root.contains("clients"))
        raise(ErrorKind::ConfigError, "missing required field '$.clients'");
    for (const json& c : root.at("clients")) {
        expect_keys(c, "clients[]", {"weight", "gain", "interference_w", "profile"});
        ScaClient sc;
        sc.weight = get_or<double>(c, "weight", 1.0);
        sc.gain = get_or<double>(c, "gain", 1.0);
        sc.interference_w = get_or<double>(c, "interference_w", 0.0);
        const json& p = c.at("profile");
        expect_keys(p, "clients[].profile",
                    {"f_max_hz", "p_max_w", "p_max_dbm", "e_th_j", "cycles_per_bit",
                     "sample_bits", "distance_m", "batch_size", "batch_count"});
        sc.profile.f_max_hz = require<double>(p, "profile", "f_max_hz");
        if (p.contains("p_max_dbm"))
            sc.profile.p_max_w = dbm_to_watt(p.at("p_max_dbm").get<double>());
        else
            sc.profile.p_max_w = require<double>(p, "profile", "p_max_w");
        sc.profile.e_th_j = require<double>(p, "profile", "e_th_j");
        sc.profile.cycles_per_bit = require<double>(p, "profile", "cycles_per_bit");
        sc.profile.sample_bits = require<double>(p, "profile", "sample_bits");
        sc.profile.distance_m = require<double>(p, "profile", "distance_m");
        sc.profile.batch_size = get_or<int>(p, "batch_size", 32);
        sc.profile.batch_count = get_or<int>(p, "batch_count", 10);
        sc.profile.validate();
        inst.clients.push_back(sc);
    }
    if (inst.clients.empty()) raise(ErrorKind::ConfigError, "clients[] must be nonempty");
    return inst;
}

}  // namespace phfl
