#include "phfl/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "phfl/errors.hpp"

namespace phfl {

using nlohmann::json;

namespace {

json to_json(const VcRoundRecord& r) {
    json clients = json::array();
    for (const ClientRoundRecord& c : r.clients) {
        clients.push_back({{"id", c.client},
                           {"vc", c.vc},
                           {"feasible", c.feasible},
                           {"delta", c.delta},
                           {"f_hz", c.f_hz},
                           {"tx_w", c.tx_w},
                           {"p", c.success_p},
                           {"received", c.received},
                           {"t_tot_s", c.t_tot_s},
                           {"e_tot_j", c.e_tot_j},
                           {"s_bits", c.payload_bits}});
    }
    return json{{"type", "vc_round"}, {"v", 1},
                {"m", r.m},           {"t3", r.t3},
                {"t2", r.t2},         {"t1", r.t1},
                {"t", r.t},           {"clients", clients},
                {"vc_loss", r.vc_loss}, {"sbs_loss", r.sbs_loss},
                {"mbs_loss", r.mbs_loss}, {"cum_time_s", r.cum_time_s},
                {"cum_energy_j", r.cum_energy_j}, {"cum_bits", r.cum_bits}};
}

json to_json(const GlobalRoundRecord& r) {
    return json{{"type", "global_round"},
                {"v", 1},
                {"m", r.m},
                {"test_accuracy", r.test_accuracy},
                {"global_loss", r.global_loss},
                {"mean_delta", r.mean_delta},
                {"cum_time_s", r.cum_time_s},
                {"cum_energy_j", r.cum_energy_j},
                {"cum_bits", r.cum_bits}};
}

}  // namespace

void write_jsonl(const MetricsLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::IoError, "cannot open " + path + " for writing");
    // Interleave in execution order: all vc_rounds of global round m, then
    // its global_round record.
    std::size_t vi = 0;
    for (const GlobalRoundRecord& g : log.global_rounds) {
        while (vi < log.vc_rounds.size() && log.vc_rounds[vi].m <= g.m)
            out << to_json(log.vc_rounds[vi++]).dump() << "\n";
        out << to_json(g).dump() << "\n";
    }
    while (vi < log.vc_rounds.size()) out << to_json(log.vc_rounds[vi++]).dump() << "\n";
    if (!out) raise(ErrorKind::IoError, "failed writing " + path);
}

MetricsLog read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open " + path);
    MetricsLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        const std::string type = j.at("type");
        if (type == "vc_round") {
            VcRoundRecord r;
            r.m = j.at("m");
            r.t3 = j.at("t3");
            r.t2 = j.at("t2");
            r.t1 = j.at("t1");
            r.t = j.at("t");
            for (const json& c : j.at("clients")) {
                ClientRoundRecord cr;
                cr.client = c.at("id");
                cr.vc = c.at("vc");
                cr.feasible = c.at("feasible");
                cr.delta = c.at("delta");
                cr.f_hz = c.at("f_hz");
                cr.tx_w = c.at("tx_w");
                cr.success_p = c.at("p");
                cr.received = c.at("received");
                cr.t_tot_s = c.at("t_tot_s");
                cr.e_tot_j = c.at("e_tot_j");
                cr.payload_bits = c.at("s_bits");
                r.clients.push_back(cr);
            }
            r.vc_loss = j.at("vc_loss").get<std::vector<double>>();
            r.sbs_loss = j.at("sbs_loss").get<std::vector<double>>();
            r.mbs_loss = j.at("mbs_loss").get<std::vector<double>>();
            r.cum_time_s = j.at("cum_time_s");
            r.cum_energy_j = j.at("cum_energy_j");
            r.cum_bits = j.at("cum_bits");
            log.vc_rounds.push_back(std::move(r));
        } else if (type == "global_round") {
            GlobalRoundRecord g;
            g.m = j.at("m");
            g.test_accuracy = j.at("test_accuracy");
            g.global_loss = j.at("global_loss");
            g.mean_delta = j.at("mean_delta");
            g.cum_time_s = j.at("cum_time_s");
            g.cum_energy_j = j.at("cum_energy_j");
            g.cum_bits = j.at("cum_bits");
            log.global_rounds.push_back(g);
        } else {
            raise(ErrorKind::IoError, "unknown record type '" + type + "' in " + path);
        }
    }
    return log;
}

std::vector<GlobalRoundRecord> recompute_summary(const MetricsLog& log) {
    std::vector<GlobalRoundRecord> rows;
    for (const GlobalRoundRecord& g : log.global_rounds) {
        GlobalRoundRecord r = g;  // accuracy/loss live only in the global record
        double delta_sum = 0.0;
        std::int64_t count = 0;
        double cum_time = 0.0, cum_energy = 0.0, cum_bits = 0.0;
        for (const VcRoundRecord& v : log.vc_rounds) {
            if (v.m > g.m) break;
            if (v.m == g.m)
                for (const ClientRoundRecord& c : v.clients)
                    if (c.feasible) {
                        delta_sum += c.delta;
                        ++count;
                    }
            cum_time = v.cum_time_s;
            cum_energy = v.cum_energy_j;
            cum_bits = v.cum_bits;
        }
        r.mean_delta = count > 0 ? delta_sum / static_cast<double>(count) : 0.0;
        r.cum_time_s = cum_time;
        r.cum_energy_j = cum_energy;
        r.cum_bits = cum_bits;
        rows.push_back(r);
    }
    return rows;
}

namespace {

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::IoError, "cannot open " + path + " for writing");
    out.precision(17);
    return out;
}

}  // namespace

void write_summary_csv(const MetricsLog& log, const std::string& path) {
    auto out = open_csv(path);
    out << "m,test_accuracy,global_loss,mean_delta,cum_time_s,cum_energy_j,cum_bits\n";
    for (const GlobalRoundRecord& g : log.global_rounds)
        out << g.m << ',' << g.test_accuracy << ',' << g.global_loss << ',' << g.mean_delta << ','
            << g.cum_time_s << ',' << g.cum_energy_j << ',' << g.cum_bits << "\n";
}

void write_accuracy_vs_round_csv(const MetricsLog& log, const std::string& path) {
    auto out = open_csv(path);
    out << "m,test_accuracy\n";
    for (const GlobalRoundRecord& g : log.global_rounds)
        out << g.m << ',' << g.test_accuracy << "\n";
}

void write_accuracy_vs_wallclock_csv(const MetricsLog& log, const std::string& path) {
    auto out = open_csv(path);
    out << "cum_time_s,test_accuracy\n";
    for (const GlobalRoundRecord& g : log.global_rounds)
        out << g.cum_time_s << ',' << g.test_accuracy << "\n";
}

void write_delta_cdf_csv(const MetricsLog& log, const std::string& path) {
    std::map<int, std::vector<double>> by_vc;
    for (const VcRoundRecord& v : log.vc_rounds)
        for (const ClientRoundRecord& c : v.clients)
            if (c.feasible) by_vc[c.vc].push_back(c.delta);
    auto out = open_csv(path);
    out << "vc_id,x,F\n";
    for (auto& [vc, values] : by_vc) {
        std::sort(values.begin(), values.end());
        const double n = static_cast<double>(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
            out << vc << ',' << values[i] << ',' << (static_cast<double>(i + 1) / n) << "\n";
        }
    }
}

}  // namespace phfl
