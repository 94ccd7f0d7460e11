#include "phfl/topology.hpp"

#include <cmath>
#include <string>

namespace phfl {

namespace {

constexpr double kWeightTol = 1e-12;

void check_weight_sum(const std::vector<double>& w, const std::string& where) {
    double sum = 0.0;
    for (double x : w) {
        if (x < 0.0) raise(ErrorKind::WeightSumMismatch, "negative weight in " + where);
        sum += x;
    }
    if (std::fabs(sum - 1.0) > kWeightTol)
        raise(ErrorKind::WeightSumMismatch,
              where + " weights sum to " + std::to_string(sum) + ", expected 1");
}

}  // namespace

TopologyConfig TopologyConfig::balanced(int mbs, int sbs, int vcs, int ues) {
    TopologyConfig c;
    c.mbs_count = mbs;
    c.sbs_per_mbs.assign(mbs, sbs);
    c.vcs_per_sbs.assign(mbs, std::vector<int>(sbs, vcs));
    c.ues_per_vc.assign(mbs, std::vector<std::vector<int>>(sbs, std::vector<int>(vcs, ues)));
    return c;
}

NetworkTopology build_topology(const TopologyConfig& config) {
    if (config.mbs_count <= 0) raise(ErrorKind::EmptyTier, "mbs_count must be positive");
    if (static_cast<int>(config.sbs_per_mbs.size()) != config.mbs_count)
        raise(ErrorKind::EmptyTier, "sbs_per_mbs size does not match mbs_count");

    NetworkTopology t;
    t.mbs_count = config.mbs_count;
    t.sbs_per_mbs = config.sbs_per_mbs;
    t.vcs_per_sbs = config.vcs_per_sbs;
    t.ues_per_vc = config.ues_per_vc;

    const bool uniform = config.weight_mode == TopologyConfig::WeightMode::Uniform;

    t.alpha_mbs = uniform ? std::vector<double>(t.mbs_count, 1.0 / t.mbs_count)
                          : config.alpha_mbs;
    if (static_cast<int>(t.alpha_mbs.size()) != t.mbs_count)
        raise(ErrorKind::WeightSumMismatch, "alpha_mbs size mismatch");
    check_weight_sum(t.alpha_mbs, "mbs");

    t.alpha_sbs.resize(t.mbs_count);
    t.alpha_vc.resize(t.mbs_count);
    t.alpha_ue.resize(t.mbs_count);

    int sbs_id = 0;
    for (int l = 0; l < t.mbs_count; ++l) {
        const int bl = t.sbs_per_mbs[l];
        if (bl <= 0) raise(ErrorKind::EmptyTier, "mBS " + std::to_string(l) + " has no sBS");
        if (static_cast<int>(t.vcs_per_sbs.size()) <= l ||
            static_cast<int>(t.vcs_per_sbs[l].size()) != bl)
            raise(ErrorKind::EmptyTier, "vcs_per_sbs shape mismatch at mBS " + std::to_string(l));

        t.alpha_sbs[l] = uniform ? std::vector<double>(bl, 1.0 / bl) : config.alpha_sbs.at(l);
        if (static_cast<int>(t.alpha_sbs[l].size()) != bl)
            raise(ErrorKind::WeightSumMismatch, "alpha_sbs size mismatch");
        check_weight_sum(t.alpha_sbs[l], "sbs[" + std::to_string(l) + "]");

        t.alpha_vc[l].resize(bl);
        t.alpha_ue[l].resize(bl);
        for (int k = 0; k < bl; ++k) {
            const int vkl = t.vcs_per_sbs[l][k];
            if (vkl <= 0)
                raise(ErrorKind::EmptyTier,
                      "sBS (" + std::to_string(l) + "," + std::to_string(k) + ") has no VC");
            if (static_cast<int>(t.ues_per_vc.size()) <= l ||
                static_cast<int>(t.ues_per_vc[l].size()) <= k ||
                static_cast<int>(t.ues_per_vc[l][k].size()) != vkl)
                raise(ErrorKind::EmptyTier, "ues_per_vc shape mismatch");

            t.alpha_vc[l][k] =
                uniform ? std::vector<double>(vkl, 1.0 / vkl) : config.alpha_vc.at(l).at(k);
            if (static_cast<int>(t.alpha_vc[l][k].size()) != vkl)
                raise(ErrorKind::WeightSumMismatch, "alpha_vc size mismatch");
            check_weight_sum(t.alpha_vc[l][k], "vc[" + std::to_string(l) + "][" + std::to_string(k) + "]");

            t.alpha_ue[l][k].resize(vkl);
            for (int j = 0; j < vkl; ++j) {
                const int ujkl = t.ues_per_vc[l][k][j];
                if (ujkl <= 0)
                    raise(ErrorKind::EmptyTier, "VC (" + std::to_string(l) + "," +
                                                    std::to_string(k) + "," + std::to_string(j) +
                                                    ") has no UE");
                t.alpha_ue[l][k][j] = uniform ? std::vector<double>(ujkl, 1.0 / ujkl)
                                              : config.alpha_ue.at(l).at(k).at(j);
                if (static_cast<int>(t.alpha_ue[l][k][j].size()) != ujkl)
                    raise(ErrorKind::WeightSumMismatch, "alpha_ue size mismatch");
                check_weight_sum(t.alpha_ue[l][k][j], "ue weights of one VC");

                const int vc_id = t.total_vcs++;
                t.vc_address.push_back({l, k, j});
                t.vc_cell.push_back(sbs_id);
                t.vc_ues.emplace_back();
                for (int i = 0; i < ujkl; ++i) {
                    const int ue_id = t.total_ues++;
                    t.ue_address.push_back({l, k, j, i});
                    t.ue_vc.push_back(vc_id);
                    t.ue_cell.push_back(sbs_id);
                    t.vc_ues[vc_id].push_back(ue_id);
                }
            }
            ++sbs_id;
        }
    }
    t.total_sbs = sbs_id;
    return t;
}

double NetworkTopology::ue_path_weight(int ue) const {
    const auto& a = ue_address.at(ue);
    return alpha_mbs[a.l] * alpha_sbs[a.l][a.k] * alpha_vc[a.l][a.k][a.j] *
           alpha_ue[a.l][a.k][a.j][a.i];
}

double NetworkTopology::vc_path_weight(int vc) const {
    const auto& a = vc_address.at(vc);
    return alpha_mbs[a.l] * alpha_sbs[a.l][a.k] * alpha_vc[a.l][a.k][a.j];
}

double NetworkTopology::ue_alpha(int ue) const {
    const auto& a = ue_address.at(ue);
    return alpha_ue[a.l][a.k][a.j][a.i];
}

void RoundSchedule::validate() const {
    if (kappa0 < 1 || kappa1 < 1 || kappa2 < 1 || kappa3 < 1)
        raise(ErrorKind::IndexOutOfRange, "all kappa must be >= 1");
    if (rho < 1) raise(ErrorKind::IndexOutOfRange, "rho must be >= 1");
    if (global_rounds < 1) raise(ErrorKind::IndexOutOfRange, "global_rounds must be >= 1");
}

std::int64_t flatten_index(int m, int t3, int t2, int t1, int t0, const RoundSchedule& s) {
    if (m < 0 || t3 < 0 || t3 >= s.kappa3 || t2 < 0 || t2 >= s.kappa2 || t1 < 0 ||
        t1 >= s.kappa1 || t0 < 0 || t0 > s.kappa0)
        raise(ErrorKind::IndexOutOfRange, "round indices outside schedule");
    std::int64_t t = static_cast<std::int64_t>(m) * s.kappa3 + t3;
    t = t * s.kappa2 + t2;
    t = t * s.kappa1 + t1;
    t = t * s.kappa0 + t0;
    return t;
}

RoundIndices unflatten_index(std::int64_t t, const RoundSchedule& s) {
    if (t < 0) raise(ErrorKind::IndexOutOfRange, "negative iteration index");
    RoundIndices r;
    if (t == 0) return r;
    // Canonical branch: t0 in 1..kappa0.
    r.t0 = static_cast<int>((t - 1) % s.kappa0) + 1;
    std::int64_t rest = (t - r.t0) / s.kappa0;
    r.t1 = static_cast<int>(rest % s.kappa1);
    rest /= s.kappa1;
    r.t2 = static_cast<int>(rest % s.kappa2);
    rest /= s.kappa2;
    r.t3 = static_cast<int>(rest % s.kappa3);
    rest /= s.kappa3;
    r.m = static_cast<int>(rest);
    return r;
}

void ClientProfile::validate() const {
    if (!(f_max_hz > 0)) raise(ErrorKind::ConfigError, "f_max_hz must be positive");
    if (!(p_max_w > 0)) raise(ErrorKind::ConfigError, "p_max_w must be positive");
    if (!(e_th_j > 0)) raise(ErrorKind::ConfigError, "e_th_j must be positive");
    if (!(cycles_per_bit > 0)) raise(ErrorKind::ConfigError, "cycles_per_bit must be positive");
    if (!(sample_bits > 0)) raise(ErrorKind::ConfigError, "sample_bits must be positive");
    if (!(distance_m > 0)) raise(ErrorKind::ConfigError, "distance_m must be positive");
    if (batch_size < 1 || batch_count < 1)
        raise(ErrorKind::ConfigError, "batch_size and batch_count must be >= 1");
}

}  // namespace phfl
