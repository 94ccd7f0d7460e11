#include "phfl/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "phfl/rng.hpp"

namespace phfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> eval_subset(const std::vector<int>& rows, int cap, std::uint64_t seed,
                             std::uint64_t tier_code, std::uint64_t node) {
    if (cap <= 0 || static_cast<int>(rows.size()) <= cap) return rows;
    std::vector<int> shuffled = rows;
    auto g = make_rng(seed, Stream::EvalSubset, tier_code, node);
    std::shuffle(shuffled.begin(), shuffled.end(), g);
    shuffled.resize(cap);
    std::sort(shuffled.begin(), shuffled.end());
    return shuffled;
}

}  // namespace

void apply_baseline(Experiment& e, BaselineKind kind) {
    if (kind == BaselineKind::Phfl) return;

    const int kappa1_orig = e.schedule.kappa1;
    const bool merge = kind == BaselineKind::HflWc || kind == BaselineKind::HflUb;
    const bool unconstrained = kind == BaselineKind::HflVcUb || kind == BaselineKind::HflUb;

    if (kind == BaselineKind::RPhfl) {
        e.policy = PolicyMode::Random;
        return;  // same system model, random pruning ratios
    }

    // The remaining baselines train the dense model.
    e.pruning = false;
    e.policy = PolicyMode::Fixed;
    e.fixed_delta = 0.0;
    e.fixed_f_fraction = 1.0;
    e.fixed_p_fraction = 1.0;

    if (merge) {
        // Collapse the VC tier: one VC per sBS holding all of its UEs; UE
        // order (and thus global ids) is preserved.
        TopologyConfig cfg;
        cfg.mbs_count = e.topology.mbs_count;
        cfg.sbs_per_mbs = e.topology.sbs_per_mbs;
        cfg.vcs_per_sbs.assign(cfg.mbs_count, {});
        cfg.ues_per_vc.assign(cfg.mbs_count, {});
        for (int l = 0; l < cfg.mbs_count; ++l) {
            cfg.vcs_per_sbs[l].assign(e.topology.sbs_per_mbs[l], 1);
            cfg.ues_per_vc[l].resize(e.topology.sbs_per_mbs[l]);
            for (int k = 0; k < e.topology.sbs_per_mbs[l]; ++k) {
                int total = 0;
                for (int u : e.topology.ues_per_vc[l][k]) total += u;
                cfg.ues_per_vc[l][k] = {total};
            }
        }
        e.topology = build_topology(cfg);
        e.schedule.kappa1 = 1;
    }

    if (kind == BaselineKind::HflWc) {
        // Adapted deadline and energy budget: one UE-sBS round stands in for
        // kappa1 VC rounds.
        e.t_th_s *= kappa1_orig;
        for (auto& p : e.profiles) p.e_th_j *= kappa1_orig;
        // Largest common local-iteration count per (merged) VC.
        e.vc_kappa0.assign(e.topology.total_vcs, 0);
        for (int vc = 0; vc < e.topology.total_vcs; ++vc) {
            std::vector<ClientProfile> members;
            for (int u : e.topology.vc_ues[vc]) members.push_back(e.profiles[u]);
            e.vc_kappa0[vc] = max_common_local_rounds(members, e.channel, e.energy,
                                                      e.model_spec.dim(), e.t_th_s, 1.0);
        }
    }

    if (unconstrained) {
        e.reception = ReceptionMode::Perfect;
        e.fixed_deadline_accounting = false;
    }
}

int max_common_local_rounds(const std::vector<ClientProfile>& vc_profiles,
                            const ChannelParams& channel, const EnergyParams& energy,
                            std::int64_t d_model, double deadline_s, double energy_budget_scale) {
    // Planning-time reference link: unit gain, no interference.
    auto fits = [&](int k0) {
        for (const ClientProfile& p : vc_profiles) {
            const double work = static_cast<double>(p.batch_size) * p.batch_count *
                                p.cycles_per_bit * p.sample_bits;
            const double s = payload_bits(0.0, d_model, energy.fpp_bits);
            const double g = sinr(p.p_max_w, 1.0, p.distance_m, channel.pathloss_exponent,
                                  channel.prb_width_hz, channel.noise_w_per_hz, 0.0);
            const double r = rate_bps(g, channel.prb_width_hz);
            if (r <= 0.0) return false;
            const double t = k0 * work / p.f_max_hz + s / r;
            const double en = k0 * 0.5 * energy.xi * work * p.f_max_hz * p.f_max_hz +
                              s * p.p_max_w / r;
            if (t > deadline_s || en > p.e_th_j * energy_budget_scale) return false;
        }
        return true;
    };
    if (!fits(1)) return 0;
    int lo = 1, hi = 1;
    while (fits(hi * 2) && hi < (1 << 24)) hi *= 2;
    hi *= 2;
    while (lo + 1 < hi) {
        const int mid = lo + (hi - lo) / 2;
        (fits(mid) ? lo : hi) = mid;
    }
    return lo;
}

std::vector<double> aggregate_vc_update(const std::vector<std::vector<double>>& tickets,
                                        const std::vector<std::vector<double>>& deltas,
                                        const std::vector<double>& alphas,
                                        const std::vector<double>& success_p,
                                        const std::vector<char>& received,
                                        double inverse_p_cap) {
    const std::size_t n = tickets.size();
    std::vector<double> out(tickets[0].size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = alphas[i];
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += a * tickets[i][c];
        if (!received[i]) continue;
        const double p = std::max(success_p[i], 1e-300);
        double scale = 1.0 / p;
        if (inverse_p_cap > 0.0) scale = std::min(scale, inverse_p_cap);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += a * scale * deltas[i][c];
    }
    return out;
}

namespace {

struct ClientWork {
    bool feasible = true;
    double delta = 0.0, f_hz = 0.0, tx_w = 0.0;
    double p = 1.0;
    bool received = false;
    bool attempted = false;  // trained and transmitted this round
    std::vector<double> ticket;
    std::vector<double> delta_w;
    double t_tot_s = 0.0;
    double e_tot_j = 0.0;
    double payload = 0.0;
};

}  // namespace

MetricsLog run_experiment(const Experiment& e, const EngineHooks* hooks) {
    const NetworkTopology& topo = e.topology;
    e.schedule.validate();
    e.channel.validate();
    e.energy.validate();
    const int U = topo.total_ues;
    if (static_cast<int>(e.profiles.size()) != U)
        raise(ErrorKind::ConfigError, "profile count does not match topology");
    if (static_cast<int>(e.shards.size()) != U)
        raise(ErrorKind::ConfigError, "shard count does not match topology");
    for (const auto& p : e.profiles) p.validate();

    const std::int64_t d_model = e.model_spec.dim();
    const int rho_cost = e.pruning ? e.schedule.rho : 0;
    const double deadline = e.t_th_s;

    std::vector<int> k0(topo.total_vcs, e.schedule.kappa0);
    if (!e.vc_kappa0.empty()) {
        if (static_cast<int>(e.vc_kappa0.size()) != topo.total_vcs)
            raise(ErrorKind::ConfigError, "vc_kappa0 size does not match topology");
        k0 = e.vc_kappa0;
    }

    std::vector<double> distance(U), pmax(U);
    for (int u = 0; u < U; ++u) {
        distance[u] = e.profiles[u].distance_m;
        pmax[u] = e.profiles[u].p_max_w;
    }

    // Tier models start synchronized with the initial model.
    std::vector<double> w_global = init_weights(e.model_spec, e.seed);
    std::vector<std::vector<double>> w_mbs(topo.mbs_count, w_global);
    std::vector<std::vector<double>> w_sbs(topo.total_sbs, w_global);
    std::vector<std::vector<double>> w_vc(topo.total_vcs, w_global);

    // Fixed eval subsets per tier node.
    std::vector<std::vector<int>> vc_rows(topo.total_vcs), sbs_rows(topo.total_sbs),
        mbs_rows(topo.mbs_count);
    std::vector<int> all_rows;
    for (int u = 0; u < U; ++u) {
        const int vc = topo.ue_vc[u];
        vc_rows[vc].insert(vc_rows[vc].end(), e.shards[u].rows.begin(), e.shards[u].rows.end());
    }
    for (int vc = 0; vc < topo.total_vcs; ++vc) {
        const int cell = topo.vc_cell[vc];
        sbs_rows[cell].insert(sbs_rows[cell].end(), vc_rows[vc].begin(), vc_rows[vc].end());
        vc_rows[vc] = eval_subset(vc_rows[vc], e.tier_loss_eval_cap, e.seed, 1, vc);
    }
    {
        int cell = 0;
        for (int l = 0; l < topo.mbs_count; ++l) {
            for (int k = 0; k < topo.sbs_per_mbs[l]; ++k, ++cell)
                mbs_rows[l].insert(mbs_rows[l].end(), sbs_rows[cell].begin(),
                                   sbs_rows[cell].end());
            all_rows.insert(all_rows.end(), mbs_rows[l].begin(), mbs_rows[l].end());
        }
    }
    for (int s = 0; s < topo.total_sbs; ++s)
        sbs_rows[s] = eval_subset(sbs_rows[s], e.tier_loss_eval_cap, e.seed, 2, s);
    for (int l = 0; l < topo.mbs_count; ++l)
        mbs_rows[l] = eval_subset(mbs_rows[l], e.tier_loss_eval_cap, e.seed, 3, l);
    const std::vector<int> global_rows =
        eval_subset(all_rows, e.tier_loss_eval_cap * 4, e.seed, 4, 0);
    std::vector<int> test_rows(e.test.size());
    std::iota(test_rows.begin(), test_rows.end(), 0);

    std::vector<double> prev_power = pmax;

    MetricsLog log;
    double cum_time = 0.0, cum_energy = 0.0, cum_bits = 0.0;
    double round_delta_sum = 0.0;
    std::int64_t round_delta_count = 0;

    const int jobs = std::max(1, e.jobs);

    for (int m = 0; m < e.schedule.global_rounds; ++m) {
        round_delta_sum = 0.0;
        round_delta_count = 0;
        for (int t3 = 0; t3 < e.schedule.kappa3; ++t3) {
            for (int t2 = 0; t2 < e.schedule.kappa2; ++t2) {
                for (int t1 = 0; t1 < e.schedule.kappa1; ++t1) {
                    const std::int64_t tbar = flatten_index(m, t3, t2, t1, 0, e.schedule);
                    const ChannelDraw draw = draw_fading(topo, e.channel, tbar);

                    // Resource decisions for this VC round.
                    std::vector<ClientWork> work(U);
                    if (e.policy == PolicyMode::Sca) {
                        std::vector<ScaClient> sc(U);
                        for (int u = 0; u < U; ++u) {
                            sc[u].profile = e.profiles[u];
                            sc[u].weight = topo.ue_path_weight(u);
                            sc[u].gain = draw.gain[u];
                            sc[u].interference_w =
                                interference(prev_power, topo, draw, distance,
                                             e.channel.pathloss_exponent, u);
                        }
                        ScaSettings ss;
                        ss.channel = e.channel;
                        ss.phi1 = e.phi1;
                        ss.phi2 = e.phi2;
                        ss.t_th_s = deadline;
                        ss.delta_th = e.delta_th;
                        ss.rho = e.schedule.rho;
                        ss.kappa0 = e.schedule.kappa0;
                        ss.d_model = d_model;
                        ss.fpp_bits = e.energy.fpp_bits;
                        ss.xi = e.energy.xi;
                        ss.max_iterations = e.sca_iterations;
                        ss.epsilon = e.sca_epsilon;
                        std::vector<Decision> dec;
                        try {
                            dec = sca_solve(sc, ss).decisions;
                        } catch (const Error& err) {
                            if (err.kind() != ErrorKind::NoFeasibleStart) throw;
                            dec.assign(U, Decision{});  // everyone sits the round out
                        }
                        for (int u = 0; u < U; ++u) {
                            work[u].feasible = dec[u].feasible;
                            work[u].delta = dec[u].delta;
                            work[u].f_hz = dec[u].f_hz;
                            work[u].tx_w = dec[u].tx_w;
                        }
                    } else if (e.policy == PolicyMode::Random) {
                        for (int u = 0; u < U; ++u) {
                            auto g = make_rng(e.seed, Stream::BaselineDelta, u,
                                              static_cast<std::uint64_t>(tbar));
                            work[u].delta = uniform(g, 0.0, e.delta_th);
                            work[u].f_hz = e.profiles[u].f_max_hz;
                            work[u].tx_w = e.profiles[u].p_max_w;
                        }
                    } else {
                        for (int u = 0; u < U; ++u) {
                            work[u].delta = e.pruning ? e.fixed_delta : 0.0;
                            work[u].f_hz = e.fixed_f_fraction * e.profiles[u].f_max_hz;
                            work[u].tx_w = e.fixed_p_fraction * e.profiles[u].p_max_w;
                        }
                    }

                    std::vector<double> new_power(U, 0.0);
                    for (int u = 0; u < U; ++u)
                        if (work[u].feasible) new_power[u] = work[u].tx_w;

                    // Client-side training and transmission, parallel over
                    // clients; every random draw is stream-keyed so the
                    // result is identical for any job count.
                    auto run_client = [&](int u) {
                        ClientWork& cw = work[u];
                        if (!cw.feasible) {
                            cw.ticket = w_vc[topo.ue_vc[u]];
                            cw.delta_w.assign(cw.ticket.size(), 0.0);
                            return;
                        }
                        cw.attempted = true;
                        const int vc = topo.ue_vc[u];
                        const int kappa0_u = k0[vc];
                        PrunedModel model;
                        if (e.pruning) {
                            auto warm = make_rng(e.seed, Stream::WarmupBatch, u,
                                                 static_cast<std::uint64_t>(tbar));
                            model = lottery_ticket(e.model_spec, w_vc[vc], e.train, e.shards[u],
                                                   e.schedule.rho, e.eta, cw.delta,
                                                   e.profiles[u].batch_size, warm);
                        } else {
                            model.weights = w_vc[vc];
                            model.mask.assign(w_vc[vc].size(), 1);
                            model.ratio = 0.0;
                        }
                        cw.ticket = model.weights;
                        auto local = make_rng(e.seed, Stream::LocalBatch, u,
                                              static_cast<std::uint64_t>(tbar));
                        run_local_rounds(e.model_spec, model, e.train, e.shards[u], kappa0_u,
                                         e.eta, e.profiles[u].batch_size, local);
                        cw.delta_w.resize(model.weights.size());
                        for (std::size_t c = 0; c < model.weights.size(); ++c)
                            cw.delta_w[c] = model.weights[c] - cw.ticket[c];

                        // Realized link and costs.
                        const double i_true = interference(new_power, topo, draw, distance,
                                                           e.channel.pathloss_exponent, u);
                        const double g = sinr(cw.tx_w, draw.gain[u], distance[u],
                                              e.channel.pathloss_exponent, e.channel.prb_width_hz,
                                              e.channel.noise_w_per_hz, i_true);
                        const double r = rate_bps(g, e.channel.prb_width_hz);
                        cw.payload = payload_bits(cw.delta, d_model, e.energy.fpp_bits);
                        const ComputeTimes ct =
                            compute_times(e.profiles[u], cw.delta, cw.f_hz, rho_cost, kappa0_u);
                        const double t_up = r > 0.0 ? cw.payload / r : kInf;
                        cw.t_tot_s = ct.dense_s + ct.sparse_s + t_up;
                        const ComputeOffloadEnergies en =
                            energies(e.profiles[u], cw.delta, cw.f_hz, r > 0.0 ? cw.tx_w : 0.0,
                                     r, rho_cost, kappa0_u, e.energy.xi, cw.payload);
                        cw.e_tot_j = en.dense_j + en.sparse_j + en.uplink_j;

                        switch (e.reception) {
                            case ReceptionMode::Physical: {
                                const SuccessProbability sp = success_probability(
                                    cw.delta, cw.f_hz, cw.tx_w, e.profiles[u], e.channel, i_true,
                                    deadline, rho_cost, kappa0_u, d_model, e.energy.fpp_bits);
                                cw.p = sp.p;
                                cw.received = cw.t_tot_s <= deadline;
                                break;
                            }
                            case ReceptionMode::Perfect:
                                cw.p = 1.0;
                                cw.received = true;
                                break;
                            case ReceptionMode::Forced: {
                                auto g2 = make_rng(e.seed, Stream::Reception, u,
                                                   static_cast<std::uint64_t>(tbar));
                                cw.p = e.forced_p;
                                cw.received = uniform(g2, 0.0, 1.0) < e.forced_p;
                                break;
                            }
                        }
                    };
                    if (jobs == 1 || U == 1) {
                        for (int u = 0; u < U; ++u) run_client(u);
                    } else {
                        std::vector<std::thread> pool;
                        std::atomic<int> next{0};
                        for (int j = 0; j < std::min(jobs, U); ++j)
                            pool.emplace_back([&] {
                                for (int u = next.fetch_add(1); u < U; u = next.fetch_add(1))
                                    run_client(u);
                            });
                        for (auto& th : pool) th.join();
                    }

                    // VC aggregation (serial, fixed order).
                    for (int vc = 0; vc < topo.total_vcs; ++vc) {
                        std::vector<std::vector<double>> tickets, deltas;
                        std::vector<double> alphas, ps;
                        std::vector<char> recv;
                        for (int u : topo.vc_ues[vc]) {
                            tickets.push_back(std::move(work[u].ticket));
                            deltas.push_back(std::move(work[u].delta_w));
                            alphas.push_back(topo.ue_alpha(u));
                            ps.push_back(work[u].p);
                            recv.push_back(work[u].received ? 1 : 0);
                        }
                        w_vc[vc] = aggregate_vc_update(tickets, deltas, alphas, ps, recv,
                                                       e.inverse_p_cap);
                    }

                    // Wall clock, energy and payload accounting.
                    if (e.fixed_deadline_accounting) {
                        cum_time += deadline;
                    } else {
                        double worst = 0.0;
                        for (const auto& cw : work)
                            if (cw.attempted && std::isfinite(cw.t_tot_s))
                                worst = std::max(worst, cw.t_tot_s);
                        cum_time += worst;
                    }
                    for (const auto& cw : work) {
                        if (!cw.attempted) continue;
                        cum_energy += cw.e_tot_j;
                        cum_bits += cw.payload;
                    }

                    VcRoundRecord rec;
                    rec.m = m;
                    rec.t3 = t3;
                    rec.t2 = t2;
                    rec.t1 = t1;
                    rec.t = tbar;
                    rec.cum_time_s = cum_time;
                    rec.cum_energy_j = cum_energy;
                    rec.cum_bits = cum_bits;
                    for (int u = 0; u < U; ++u) {
                        const ClientWork& cw = work[u];
                        ClientRoundRecord c;
                        c.client = u;
                        c.vc = topo.ue_vc[u];
                        c.feasible = cw.feasible;
                        c.delta = cw.feasible ? cw.delta : 0.0;
                        c.f_hz = cw.feasible ? cw.f_hz : 0.0;
                        c.tx_w = cw.feasible ? cw.tx_w : 0.0;
                        c.success_p = cw.feasible ? cw.p : 0.0;
                        c.received = cw.received;
                        c.t_tot_s = cw.attempted && std::isfinite(cw.t_tot_s) ? cw.t_tot_s : -1.0;
                        c.e_tot_j = cw.attempted ? cw.e_tot_j : 0.0;
                        c.payload_bits = cw.attempted ? cw.payload : 0.0;
                        if (cw.feasible) {
                            round_delta_sum += cw.delta;
                            ++round_delta_count;
                        }
                        rec.clients.push_back(c);
                    }
                    if (e.eval_tier_losses) {
                        for (int vc = 0; vc < topo.total_vcs; ++vc)
                            rec.vc_loss.push_back(
                                local_loss(e.model_spec, w_vc[vc], e.train, vc_rows[vc]));
                    }
                    log.vc_rounds.push_back(std::move(rec));
                    prev_power = new_power;
                }

                // sBS sync: aggregate VC models, then refresh every VC.
                for (int s = 0; s < topo.total_sbs; ++s) w_sbs[s].assign(w_sbs[s].size(), 0.0);
                for (int vc = 0; vc < topo.total_vcs; ++vc) {
                    const auto& a = topo.vc_address[vc];
                    const double alpha = topo.alpha_vc[a.l][a.k][a.j];
                    const int cell = topo.vc_cell[vc];
                    for (std::size_t c = 0; c < w_global.size(); ++c)
                        w_sbs[cell][c] += alpha * w_vc[vc][c];
                }
                for (int vc = 0; vc < topo.total_vcs; ++vc) {
                    w_vc[vc] = w_sbs[topo.vc_cell[vc]];
                    if (hooks && hooks->on_sync)
                        hooks->on_sync("sbs", topo.vc_cell[vc], vc, w_sbs[topo.vc_cell[vc]],
                                       w_vc[vc]);
                }
                if (e.eval_tier_losses && !log.vc_rounds.empty()) {
                    for (int s = 0; s < topo.total_sbs; ++s)
                        log.vc_rounds.back().sbs_loss.push_back(
                            local_loss(e.model_spec, w_sbs[s], e.train, sbs_rows[s]));
                }
            }

            // mBS sync.
            for (int l = 0; l < topo.mbs_count; ++l) w_mbs[l].assign(w_mbs[l].size(), 0.0);
            {
                int cell = 0;
                for (int l = 0; l < topo.mbs_count; ++l)
                    for (int k = 0; k < topo.sbs_per_mbs[l]; ++k, ++cell) {
                        const double alpha = topo.alpha_sbs[l][k];
                        for (std::size_t c = 0; c < w_global.size(); ++c)
                            w_mbs[l][c] += alpha * w_sbs[cell][c];
                    }
                cell = 0;
                for (int l = 0; l < topo.mbs_count; ++l)
                    for (int k = 0; k < topo.sbs_per_mbs[l]; ++k, ++cell) {
                        w_sbs[cell] = w_mbs[l];
                        if (hooks && hooks->on_sync)
                            hooks->on_sync("mbs", l, cell, w_mbs[l], w_sbs[cell]);
                    }
                // The refresh cascades: VCs restart from the new sBS models.
                for (int vc = 0; vc < topo.total_vcs; ++vc) w_vc[vc] = w_sbs[topo.vc_cell[vc]];
            }
            if (e.eval_tier_losses && !log.vc_rounds.empty()) {
                for (int l = 0; l < topo.mbs_count; ++l)
                    log.vc_rounds.back().mbs_loss.push_back(
                        local_loss(e.model_spec, w_mbs[l], e.train, mbs_rows[l]));
            }
        }

        // Global aggregation.
        w_global.assign(w_global.size(), 0.0);
        for (int l = 0; l < topo.mbs_count; ++l) {
            const double alpha = topo.alpha_mbs[l];
            for (std::size_t c = 0; c < w_global.size(); ++c) w_global[c] += alpha * w_mbs[l][c];
        }
        for (int l = 0; l < topo.mbs_count; ++l) {
            w_mbs[l] = w_global;
            if (hooks && hooks->on_sync) hooks->on_sync("global", 0, l, w_global, w_mbs[l]);
        }
        // Children inherit the fresh global model through the tier chain.
        for (int s = 0; s < topo.total_sbs; ++s) w_sbs[s] = w_global;
        for (int vc = 0; vc < topo.total_vcs; ++vc) w_vc[vc] = w_global;

        GlobalRoundRecord gr;
        gr.m = m;
        gr.test_accuracy = accuracy(e.model_spec, w_global, e.test, test_rows);
        gr.global_loss = local_loss(e.model_spec, w_global, e.train, global_rows);
        gr.mean_delta =
            round_delta_count > 0 ? round_delta_sum / static_cast<double>(round_delta_count) : 0.0;
        gr.cum_time_s = cum_time;
        gr.cum_energy_j = cum_energy;
        gr.cum_bits = cum_bits;
        log.global_rounds.push_back(gr);
        if (hooks && hooks->on_global_round) hooks->on_global_round(m, w_global);
    }
    return log;
}

}  // namespace phfl
