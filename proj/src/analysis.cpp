#include "phfl/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "phfl/rng.hpp"

namespace phfl {

WirelessFactors wireless_factors(const std::vector<std::vector<double>>& p_trace,
                                 const NetworkTopology& topo) {
    if (p_trace.empty()) raise(ErrorKind::EmptyGroup, "empty success-probability trace");
    WirelessFactors out;
    const double inv_t = 1.0 / static_cast<double>(p_trace.size());
    for (const auto& round : p_trace) {
        if (static_cast<int>(round.size()) != topo.total_ues)
            raise(ErrorKind::ConfigError, "trace width does not match topology");
        for (int u = 0; u < topo.total_ues; ++u) {
            const double p = round[u];
            if (!(p > 0.0) || p > 1.0)
                raise(ErrorKind::ZeroProbability,
                      "success probability must lie in (0,1], got " + std::to_string(p));
            const auto& a = topo.ue_address[u];
            const double al = topo.alpha_mbs[a.l];
            const double ak = topo.alpha_sbs[a.l][a.k];
            const double aj = topo.alpha_vc[a.l][a.k][a.j];
            const double ai = topo.alpha_ue[a.l][a.k][a.j][a.i];
            const double penalty = 1.0 / p - 1.0;
            out.phi_w0 += inv_t * al * al * ak * ak * aj * aj * ai * ai * penalty;
            out.phi_l1 += inv_t * al * ak * aj * ai * penalty;
            out.phi_l2 += inv_t * al * ak * aj * ai * ai * penalty;
            out.phi_l3 += inv_t * al * ak * aj * aj * ai * ai * penalty;
            out.phi_l4 += inv_t * al * ak * ak * aj * aj * ai * ai * penalty;
        }
    }
    return out;
}

BoundBreakdown corollary_bound(const BoundInputs& in) {
    BoundBreakdown out;
    const double k0 = in.kappa0, k1 = in.kappa1, k2 = in.kappa2, k3 = in.kappa3;
    const double b = in.beta, eta = in.eta;
    out.terms = {
        {"init_gap", in.loss_gap / (eta * static_cast<double>(in.total_iterations))},
        {"gradient_noise", b * eta * in.sigma2 / static_cast<double>(in.total_clients)},
        {"divergence_vc", k0 * k0 * eta * eta * b * b * in.eps_vc2},
        {"divergence_sbs", k0 * k0 * k1 * k1 * eta * eta * b * b * in.eps_sbs2},
        {"divergence_mbs", k0 * k0 * k1 * k1 * k2 * k2 * eta * eta * b * b * b * b * in.eps_mbs2},
        {"divergence_global",
         k0 * k0 * k1 * k1 * k2 * k2 * k3 * k3 * b * b * b * b * eta * eta * in.eps2},
        {"pruning", in.delta_th * b * b * in.d2},
        {"wireless", b * eta * in.g2 * in.phi_w0},
    };
    out.total = 0.0;
    for (const BoundTerm& t : out.terms) out.total += t.value;
    out.eta_cap = 1.0 / (6.0 * std::sqrt(2.0) * k0 * k1 * k2 * k3 * b);
    out.eta_exceeds_cap = eta > out.eta_cap;
    return out;
}

CdfSeries empirical_cdf(const std::vector<double>& values) {
    if (values.empty()) raise(ErrorKind::EmptyGroup, "empty value set for CDF");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    CdfSeries cdf;
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        cdf.x.push_back(sorted[i]);
        cdf.f.push_back(static_cast<double>(i + 1) / n);
    }
    return cdf;
}

double cdf_at(const CdfSeries& cdf, double x) {
    const auto it = std::upper_bound(cdf.x.begin(), cdf.x.end(), x);
    if (it == cdf.x.begin()) return 0.0;
    return cdf.f[static_cast<std::size_t>(it - cdf.x.begin()) - 1];
}

double bandwidth_saving(double payload_pruned_bits, double payload_full_bits) {
    if (!(payload_full_bits > 0)) raise(ErrorKind::ConfigError, "full payload must be positive");
    return 1.0 - payload_pruned_bits / payload_full_bits;
}

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

std::vector<double> weighted_sum(const std::vector<std::vector<double>>& vs,
                                 const std::vector<double>& w) {
    std::vector<double> out(vs[0].size(), 0.0);
    for (std::size_t i = 0; i < vs.size(); ++i)
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[i] * vs[i][c];
    return out;
}

double diff_norm2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return s;
}

}  // namespace

EstimatedBoundInputs estimate_bound_inputs(const ModelSpec& spec, const Dataset& train,
                                           const std::vector<DataShard>& shards,
                                           const NetworkTopology& topo, double eta,
                                           int sample_points, int batch_size,
                                           std::uint64_t seed) {
    EstimatedBoundInputs est;
    const int U = topo.total_ues;
    auto g = make_rng(seed, Stream::ProfileDraw, 0xb0b);
    std::vector<double> w0 = init_weights(spec, seed);

    std::vector<std::vector<double>> points;
    points.push_back(w0);
    for (int s = 1; s < std::max(2, sample_points); ++s) {
        std::vector<double> w = w0;
        for (double& v : w) v += normal(g, 0.0, 0.1);
        points.push_back(std::move(w));
    }

    std::vector<std::vector<double>> prev_grads;
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const auto& w = points[pi];
        est.d2 = std::max(est.d2, norm2(w));

        // Full-shard gradient per client.
        std::vector<std::vector<double>> client_grad(U);
        for (int u = 0; u < U; ++u)
            client_grad[u] = stochastic_grad(spec, w, train, shards[u].rows);

        // Tier-aggregated gradients mirror the loss definitions.
        std::vector<std::vector<double>> vc_grad(topo.total_vcs), sbs_grad(topo.total_sbs),
            mbs_grad(topo.mbs_count);
        for (int vc = 0; vc < topo.total_vcs; ++vc) {
            std::vector<std::vector<double>> gs;
            std::vector<double> ws;
            for (int u : topo.vc_ues[vc]) {
                gs.push_back(client_grad[u]);
                ws.push_back(topo.ue_alpha(u));
            }
            vc_grad[vc] = weighted_sum(gs, ws);
        }
        {
            for (int s = 0; s < topo.total_sbs; ++s) sbs_grad[s].assign(w.size(), 0.0);
            for (int vc = 0; vc < topo.total_vcs; ++vc) {
                const auto& a = topo.vc_address[vc];
                const double alpha = topo.alpha_vc[a.l][a.k][a.j];
                for (std::size_t c = 0; c < w.size(); ++c)
                    sbs_grad[topo.vc_cell[vc]][c] += alpha * vc_grad[vc][c];
            }
            int cell = 0;
            for (int l = 0; l < topo.mbs_count; ++l) {
                mbs_grad[l].assign(w.size(), 0.0);
                for (int k = 0; k < topo.sbs_per_mbs[l]; ++k, ++cell)
                    for (std::size_t c = 0; c < w.size(); ++c)
                        mbs_grad[l][c] += topo.alpha_sbs[l][k] * sbs_grad[cell][c];
            }
        }
        std::vector<double> global_grad(w.size(), 0.0);
        for (int l = 0; l < topo.mbs_count; ++l)
            for (std::size_t c = 0; c < w.size(); ++c)
                global_grad[c] += topo.alpha_mbs[l] * mbs_grad[l][c];

        // Divergences (maxima over sample points and nodes).
        for (int vc = 0; vc < topo.total_vcs; ++vc) {
            double sum = 0.0;
            for (int u : topo.vc_ues[vc])
                sum += topo.ue_alpha(u) * diff_norm2(client_grad[u], vc_grad[vc]);
            est.eps_vc2 = std::max(est.eps_vc2, sum);
        }
        {
            int cell = 0;
            for (int l = 0; l < topo.mbs_count; ++l)
                for (int k = 0; k < topo.sbs_per_mbs[l]; ++k, ++cell) {
                    double sum = 0.0;
                    for (int vc = 0; vc < topo.total_vcs; ++vc) {
                        if (topo.vc_cell[vc] != cell) continue;
                        const auto& a = topo.vc_address[vc];
                        sum += topo.alpha_vc[a.l][a.k][a.j] *
                               diff_norm2(vc_grad[vc], sbs_grad[cell]);
                    }
                    est.eps_sbs2 = std::max(est.eps_sbs2, sum);
                }
            cell = 0;
            for (int l = 0; l < topo.mbs_count; ++l) {
                double sum = 0.0;
                for (int k = 0; k < topo.sbs_per_mbs[l]; ++k, ++cell)
                    sum += topo.alpha_sbs[l][k] * diff_norm2(sbs_grad[cell], mbs_grad[l]);
                est.eps_mbs2 = std::max(est.eps_mbs2, sum);
            }
            double sum = 0.0;
            for (int l = 0; l < topo.mbs_count; ++l)
                sum += topo.alpha_mbs[l] * diff_norm2(mbs_grad[l], global_grad);
            est.eps2 = std::max(est.eps2, sum);
        }

        // Smoothness from gradient-difference ratios across point pairs
        // (per client, matching the per-loss assumption).
        if (!prev_grads.empty()) {
            const double dw = diff_norm2(points[pi - 1], w);
            if (dw > 1e-20)
                for (int u = 0; u < U; ++u)
                    est.beta = std::max(
                        est.beta, std::sqrt(diff_norm2(prev_grads[u], client_grad[u]) / dw));
        }
        prev_grads = client_grad;

        // Mini-batch variance and gradient-norm bound.
        for (int u = 0; u < U; ++u) {
            for (int rep = 0; rep < 3; ++rep) {
                auto bg = make_rng(seed, Stream::ProfileDraw, 0xabba + u, pi * 8 + rep);
                const auto batch = sample_batch(shards[u], batch_size, bg);
                const auto gb = stochastic_grad(spec, w, train, batch);
                est.g2 = std::max(est.g2, norm2(gb));
                est.sigma2 = std::max(est.sigma2, diff_norm2(gb, client_grad[u]));
            }
        }
    }
    (void)eta;
    return est;
}

}  // namespace phfl
