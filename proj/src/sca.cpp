#include "phfl/sca.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace phfl {

namespace {

constexpr double kExpClamp = 700.0;  // keeps exp() finite; beyond this p is 0 anyway
constexpr double kInf = std::numeric_limits<double>::infinity();

double clamped_exp(double x) { return std::exp(std::min(x, kExpClamp)); }

double work_cycles(const ClientProfile& p) {
    return static_cast<double>(p.batch_size) * p.batch_count * p.cycles_per_bit * p.sample_bits;
}

double rate_at(const ScaClient& c, const ScaSettings& s, double tx_w) {
    const double pl = std::pow(c.profile.distance_m, -s.channel.pathloss_exponent);
    const double noise_i = s.channel.prb_width_hz * s.channel.noise_w_per_hz + c.interference_w;
    return s.channel.prb_width_hz * std::log2(1.0 + tx_w * c.gain * pl / noise_i);
}

}  // namespace

double reception_exp_term(const ScaClient& client, const ScaSettings& s, double delta,
                          double f_hz, double tx_w) {
    const double chi = chi_exponent(delta, f_hz, client.profile, s.channel.prb_width_hz, s.t_th_s,
                                    s.rho, s.kappa0, s.d_model, s.fpp_bits);
    if (std::isinf(chi)) return kInf;
    const double threshold = std::exp2(std::min(chi, 1024.0)) - 1.0;
    if (threshold <= 0.0) return 1.0;
    if (tx_w <= 0.0) return kInf;
    const double pl = std::pow(client.profile.distance_m, -s.channel.pathloss_exponent);
    const double noise_i = s.channel.prb_width_hz * s.channel.noise_w_per_hz +
                           client.interference_w;
    return clamped_exp(threshold * noise_i / (tx_w * pl));
}

double objective(const std::vector<Decision>& decisions, const std::vector<ScaClient>& clients,
                 const ScaSettings& s) {
    double total = 0.0;
    for (std::size_t i = 0; i < clients.size(); ++i) {
        const Decision& d = decisions[i];
        if (!d.feasible) continue;
        const double a = reception_exp_term(clients[i], s, d.delta, d.f_hz, d.tx_w);
        total += clients[i].weight * (s.phi1 * d.delta + s.phi2 * (a - 1.0));
    }
    return total;
}

FeasibilityReport check_exact(const ScaClient& client, const ScaSettings& s, double delta,
                              double f_hz, double tx_w, double tolerance) {
    FeasibilityReport rep;
    const ClientProfile& p = client.profile;
    if (!(f_hz > 0.0)) {
        rep.t_total_s = kInf;
        rep.e_total_j = kInf;
        return rep;  // no compute at all: C1 can never hold
    }
    const double box_tol = tolerance;
    const bool boxes_ok = delta >= -box_tol && delta <= s.delta_th + box_tol &&
                          f_hz <= p.f_max_hz * (1.0 + box_tol) && tx_w >= -box_tol &&
                          tx_w <= p.p_max_w * (1.0 + box_tol);

    const double payload = payload_bits(delta, s.d_model, s.fpp_bits);
    const double r = rate_at(client, s, tx_w);
    const ComputeTimes ct = compute_times(p, delta, f_hz, s.rho, s.kappa0);
    const double t_up = r > 0.0 ? payload / r : kInf;
    rep.t_total_s = ct.dense_s + ct.sparse_s + t_up;

    const double work = work_cycles(p);
    const double e_cp = (s.rho + s.kappa0 * (1.0 - delta)) * 0.5 * s.xi * work * f_hz * f_hz;
    const double e_up = r > 0.0 ? payload * tx_w / r : (tx_w > 0.0 ? kInf : 0.0);
    rep.e_total_j = e_cp + e_up;

    rep.c1_ok = rep.t_total_s <= s.t_th_s + tolerance * std::max(1.0, s.t_th_s);
    rep.c2_ok = rep.e_total_j <= p.e_th_j + tolerance * std::max(1.0, p.e_th_j);
    rep.feasible = boxes_ok && rep.c1_ok && rep.c2_ok;
    return rep;
}

LinearizedClient linearize(const ScaClient& client, const ScaSettings& s, double delta_q,
                           double f_q, double p_q) {
    const ClientProfile& pr = client.profile;
    const double work = work_cycles(pr);
    const double fpp1 = s.fpp_bits + 1.0;
    const double S_q = (1.0 - delta_q) * fpp1 + 1.0;
    const double d = static_cast<double>(s.d_model);
    const double omega = s.channel.prb_width_hz;

    const double slack_cycles = f_q * s.t_th_s - work * (s.rho + s.kappa0 * (1.0 - delta_q));
    if (slack_cycles <= 0.0)
        raise(ErrorKind::SingularAnchor, "compute phase exhausts the deadline at the anchor");

    const double pl = std::pow(pr.distance_m, -s.channel.pathloss_exponent);
    const double noise_i = omega * s.channel.noise_w_per_hz + client.interference_w;
    const double X = p_q * client.gain * pl / noise_i;
    if (!(X > 0.0)) raise(ErrorKind::SingularAnchor, "zero rate at the anchor");
    const double r_q = omega * std::log2(1.0 + X);

    LinearizedClient lin;
    lin.anchor_delta = delta_q;
    lin.anchor_f = f_q;
    lin.anchor_p = p_q;

    const double chi_q = d * f_q * S_q / (omega * slack_cycles);
    const double two_chi = std::exp2(std::min(chi_q, 1024.0));
    const double a_q = clamped_exp((two_chi - 1.0) * noise_i / (p_q * pl));
    lin.exp_at_anchor = a_q;

    const double ln2 = std::log(2.0);
    const double denom = omega * p_q * pl * slack_cycles * slack_cycles;
    lin.grad_delta = ln2 * two_chi * d * f_q * a_q * noise_i *
                     (work * (s.rho * fpp1 - s.kappa0) - f_q * s.t_th_s * fpp1) / denom;
    lin.grad_f = -ln2 * two_chi * work * d * a_q * noise_i * S_q *
                 (s.rho + s.kappa0 * (1.0 - delta_q)) / denom;
    lin.grad_p = -a_q * (two_chi - 1.0) * noise_i / (p_q * p_q * pl);

    // Deadline surrogate: warm-up and sparse-compute tangents plus the
    // offload delay expanded around (delta_q, P_q).
    const double ln1x = std::log1p(X);
    const double slope_tp = -ln2 * d * client.gain * pl * S_q /
                            (omega * ln1x * ln1x * (noise_i + p_q * client.gain * pl));
    lin.td = -s.kappa0 * work / f_q - d * fpp1 / r_q;
    lin.tf = -s.rho * work / (f_q * f_q) - s.kappa0 * work * (1.0 - delta_q) / (f_q * f_q);
    lin.tp = slope_tp;
    lin.t0 = 2.0 * s.rho * work / f_q + s.kappa0 * work * (2.0 - delta_q) / f_q +
             d * (s.fpp_bits + 2.0) / r_q - slope_tp * p_q;

    // Energy surrogate: warm-up energy stays exact (convex quadratic in f).
    const double log2_1x = std::log2(1.0 + X);
    const double slope_ep = d * S_q *
                            (log2_1x - p_q * client.gain * pl / (ln2 * (noise_i + p_q * client.gain * pl))) /
                            (omega * log2_1x * log2_1x);
    lin.qf = s.rho * 0.5 * s.xi * work;
    lin.ed = -0.5 * s.kappa0 * s.xi * work * f_q * f_q - d * fpp1 * p_q / r_q;
    lin.ef = s.kappa0 * s.xi * work * f_q * (1.0 - delta_q);
    lin.ep = slope_ep;
    lin.e0 = s.kappa0 * s.xi * work * f_q * f_q * (delta_q - 0.5) +
             d * (s.fpp_bits + 2.0) * p_q / r_q - slope_ep * p_q;
    return lin;
}

namespace {

// Normalized subproblem: minimize c.x over x in [0,1]^3, a1.x <= b1,
// qf*x1^2 + a2.x <= b2. Variable order: (delta, f, P).
struct NormalizedSub {
    std::array<double, 3> c{};
    std::array<double, 3> a1{};
    double b1 = 0.0;
    double qf = 0.0;
    std::array<double, 3> a2{};
    double b2 = 0.0;
};

constexpr double kFeasTol = 1e-9;

bool feasible_point(const NormalizedSub& p, const std::array<double, 3>& x) {
    for (double v : x)
        if (!(v >= -kFeasTol && v <= 1.0 + kFeasTol) || !std::isfinite(v)) return false;
    const double g1 = p.a1[0] * x[0] + p.a1[1] * x[1] + p.a1[2] * x[2];
    if (g1 > p.b1 + kFeasTol) return false;
    const double g2 = p.qf * x[1] * x[1] + p.a2[0] * x[0] + p.a2[1] * x[1] + p.a2[2] * x[2];
    return g2 <= p.b2 + kFeasTol;
}

void consider(const NormalizedSub& p, std::array<double, 3> x, std::array<double, 3>& best,
              double& best_val) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    if (!feasible_point(p, x)) return;
    const double val = p.c[0] * x[0] + p.c[1] * x[1] + p.c[2] * x[2];
    // Ties (e.g. zero objective coefficients) break toward larger f and P;
    // those never hurt the exact constraints' reception side.
    const bool better = val < best_val - 1e-12;
    const bool tie_preferred =
        std::fabs(val - best_val) <= 1e-12 && x[1] + x[2] > best[1] + best[2];
    if (better || tie_preferred) {
        best_val = val;
        best = x;
    }
}

// Roots of q*t^2 + b*t + c = 0 appended to out.
int quad_roots(double q, double b, double c, std::array<double, 2>& out) {
    if (std::fabs(q) < 1e-300) {
        if (std::fabs(b) < 1e-300) return 0;
        out[0] = -c / b;
        return 1;
    }
    const double disc = b * b - 4.0 * q * c;
    if (disc < 0.0) return 0;
    const double sq = std::sqrt(disc);
    out[0] = (-b - sq) / (2.0 * q);
    out[1] = (-b + sq) / (2.0 * q);
    return 2;
}

void enumerate_candidates(const NormalizedSub& p, const std::array<double, 3>& anchor,
                          std::array<double, 3>& best, double& best_val) {
    best = anchor;
    best_val = p.c[0] * anchor[0] + p.c[1] * anchor[1] + p.c[2] * anchor[2];

    const double faces[2] = {0.0, 1.0};

    // Box corners.
    for (double a : faces)
        for (double b : faces)
            for (double c : faces) consider(p, {a, b, c}, best, best_val);

    // Two box faces fixed; third from g1= or g2=.
    for (int free_v = 0; free_v < 3; ++free_v) {
        const int u = (free_v + 1) % 3, v = (free_v + 2) % 3;
        for (double fu : faces)
            for (double fv : faces) {
                std::array<double, 3> x{};
                x[u] = fu;
                x[v] = fv;
                // g1 equality
                const double rhs1 = p.b1 - p.a1[u] * fu - p.a1[v] * fv;
                if (std::fabs(p.a1[free_v]) > 1e-14) {
                    x[free_v] = rhs1 / p.a1[free_v];
                    consider(p, x, best, best_val);
                }
                // g2 equality
                const double rhs2 = p.b2 - p.a2[u] * fu - p.a2[v] * fv;
                if (free_v == 1) {
                    std::array<double, 2> roots{};
                    const int n = quad_roots(p.qf, p.a2[1], -rhs2, roots);
                    for (int i = 0; i < n; ++i) {
                        x[1] = roots[i];
                        consider(p, x, best, best_val);
                    }
                } else {
                    // f is fixed by one of the faces, so g2 is affine here.
                    const double quad_part = p.qf * x[1] * x[1];
                    if (std::fabs(p.a2[free_v]) > 1e-14) {
                        x[free_v] = (rhs2 - quad_part) / p.a2[free_v];
                        consider(p, x, best, best_val);
                    }
                }
            }
    }

    // One box face fixed; g1= and g2= determine the other two.
    for (int fixed = 0; fixed < 3; ++fixed) {
        const int u = (fixed + 1) % 3, v = (fixed + 2) % 3;
        for (double fw : faces) {
            const double r1 = p.b1 - p.a1[fixed] * fw;
            const double r2 = p.b2 - p.a2[fixed] * fw - (fixed == 1 ? p.qf * fw * fw : 0.0);
            // Unknowns x[u], x[v]; g1 affine, g2 affine except qf*x_f^2 when
            // f is among the unknowns.
            const bool f_unknown = (u == 1 || v == 1);
            if (!f_unknown) {
                // 2x2 linear system.
                const double det = p.a1[u] * p.a2[v] - p.a1[v] * p.a2[u];
                if (std::fabs(det) > 1e-14) {
                    std::array<double, 3> x{};
                    x[fixed] = fw;
                    x[u] = (r1 * p.a2[v] - p.a1[v] * r2) / det;
                    x[v] = (p.a1[u] * r2 - r1 * p.a2[u]) / det;
                    consider(p, x, best, best_val);
                }
            } else {
                const int fi = 1;                  // the f variable
                const int o = (u == 1) ? v : u;    // the other unknown
                // From g1: a1[o]*xo + a1[f]*xf = r1.
                if (std::fabs(p.a1[o]) > 1e-14) {
                    // xo = (r1 - a1f*xf)/a1o; substitute into g2.
                    const double k0 = r1 / p.a1[o];
                    const double k1 = -p.a1[fi] / p.a1[o];
                    // qf*xf^2 + a2f*xf + a2o*(k0 + k1*xf) - r2 = 0
                    std::array<double, 2> roots{};
                    const int n = quad_roots(p.qf, p.a2[fi] + p.a2[o] * k1,
                                             p.a2[o] * k0 - r2, roots);
                    for (int i = 0; i < n; ++i) {
                        std::array<double, 3> x{};
                        x[fixed] = fw;
                        x[fi] = roots[i];
                        x[o] = k0 + k1 * roots[i];
                        consider(p, x, best, best_val);
                    }
                } else if (std::fabs(p.a1[fi]) > 1e-14) {
                    // g1 pins xf directly.
                    const double xf = r1 / p.a1[fi];
                    if (std::fabs(p.a2[o]) > 1e-14) {
                        std::array<double, 3> x{};
                        x[fixed] = fw;
                        x[fi] = xf;
                        x[o] = (r2 - p.qf * xf * xf - p.a2[fi] * xf) / p.a2[o];
                        consider(p, x, best, best_val);
                    }
                }
            }
        }
    }

    if (std::fabs(p.qf) > 1e-300) {
        // Curved-edge tangency candidates on the g2 surface.
        // (a) delta fixed at a face: (c_f, c_P) parallel to (2qf*f + a2f, a2P).
        for (double fd : faces) {
            if (std::fabs(p.a2[2]) > 1e-14 && std::fabs(p.c[2]) > 1e-14) {
                const double lambda = p.c[2] / p.a2[2];
                const double f = (p.c[1] / lambda - p.a2[1]) / (2.0 * p.qf);
                const double rhs = p.b2 - p.a2[0] * fd - p.qf * f * f - p.a2[1] * f;
                std::array<double, 3> x{fd, f, rhs / p.a2[2]};
                consider(p, x, best, best_val);
            }
        }
        // (b) P fixed at a face: (c_d, c_f) parallel to (a2d, 2qf*f + a2f).
        for (double fp : faces) {
            if (std::fabs(p.a2[0]) > 1e-14 && std::fabs(p.c[0]) > 1e-14) {
                const double lambda = p.c[0] / p.a2[0];
                const double f = (p.c[1] / lambda - p.a2[1]) / (2.0 * p.qf);
                const double rhs = p.b2 - p.a2[2] * fp - p.qf * f * f - p.a2[1] * f;
                std::array<double, 3> x{rhs / p.a2[0], f, fp};
                consider(p, x, best, best_val);
            }
        }
        // (c) g1 and g2 both active: stationarity in the two flat directions
        // determines the multipliers, then f, then (delta, P).
        const double det = p.a1[0] * p.a2[2] - p.a1[2] * p.a2[0];
        if (std::fabs(det) > 1e-14) {
            const double l1 = (p.c[0] * p.a2[2] - p.c[2] * p.a2[0]) / det;
            const double l2 = (p.a1[0] * p.c[2] - p.a1[2] * p.c[0]) / det;
            if (std::fabs(l2) > 1e-14) {
                const double f = (p.c[1] - l1 * p.a1[1] - l2 * p.a2[1]) / (2.0 * p.qf * l2);
                const double r1 = p.b1 - p.a1[1] * f;
                const double r2 = p.b2 - p.qf * f * f - p.a2[1] * f;
                const double det2 = p.a1[0] * p.a2[2] - p.a1[2] * p.a2[0];
                if (std::fabs(det2) > 1e-14) {
                    std::array<double, 3> x{};
                    x[1] = f;
                    x[0] = (r1 * p.a2[2] - p.a1[2] * r2) / det2;
                    x[2] = (p.a1[0] * r2 - r1 * p.a2[0]) / det2;
                    consider(p, x, best, best_val);
                }
            }
        }
    }
}

}  // namespace

SubproblemResult solve_subproblem(const LinearizedClient& lin, const ScaClient& client,
                                  const ScaSettings& s, double c_delta, double c_f, double c_p) {
    // Rescale every variable to [0, 1] so tolerance checks are scale-free.
    const double sd = std::max(s.delta_th, 1e-12);
    const double sf = client.profile.f_max_hz;
    const double sp = client.profile.p_max_w;

    NormalizedSub p;
    p.c = {c_delta * sd, c_f * sf, c_p * sp};
    p.a1 = {lin.td * sd, lin.tf * sf, lin.tp * sp};
    p.b1 = s.t_th_s - lin.t0;
    p.qf = lin.qf * sf * sf;
    p.a2 = {lin.ed * sd, lin.ef * sf, lin.ep * sp};
    p.b2 = client.profile.e_th_j - lin.e0;

    // Normalize constraint rows to O(1) magnitudes.
    const double n1 = std::max({std::fabs(p.a1[0]), std::fabs(p.a1[1]), std::fabs(p.a1[2]),
                                std::fabs(p.b1), 1e-30});
    for (double& v : p.a1) v /= n1;
    p.b1 /= n1;
    const double n2 = std::max({std::fabs(p.a2[0]), std::fabs(p.a2[1]), std::fabs(p.a2[2]),
                                std::fabs(p.qf), std::fabs(p.b2), 1e-30});
    for (double& v : p.a2) v /= n2;
    p.qf /= n2;
    p.b2 /= n2;
    const double nc = std::max({std::fabs(p.c[0]), std::fabs(p.c[1]), std::fabs(p.c[2]), 1e-30});
    for (double& v : p.c) v /= nc;

    const std::array<double, 3> anchor{lin.anchor_delta / sd, lin.anchor_f / sf,
                                       lin.anchor_p / sp};
    std::array<double, 3> best{};
    double best_val = 0.0;
    enumerate_candidates(p, anchor, best, best_val);

    SubproblemResult out;
    out.delta = best[0] * sd;
    out.f_hz = best[1] * sf;
    out.tx_w = best[2] * sp;
    out.surrogate_value = best_val * nc;
    return out;
}

ScaResult sca_solve(const std::vector<ScaClient>& clients, const ScaSettings& s) {
    const std::size_t n = clients.size();
    ScaResult result;
    result.decisions.resize(n);

    auto client_true = [&](std::size_t i, double d, double f, double pw) {
        const double a = reception_exp_term(clients[i], s, d, f, pw);
        return clients[i].weight * (s.phi1 * d + s.phi2 * (a - 1.0));
    };
    auto client_surrogate = [&](std::size_t i, const LinearizedClient& lin, double d, double f,
                                double pw) {
        const double a_lin = lin.exp_at_anchor + lin.grad_delta * (d - lin.anchor_delta) +
                             lin.grad_f * (f - lin.anchor_f) + lin.grad_p * (pw - lin.anchor_p);
        return clients[i].weight * (s.phi1 * d + s.phi2 * (a_lin - 1.0));
    };

    // Start at the constraint-relaxing corner (delta_th, f_max, P_max).
    std::vector<std::array<double, 3>> anchor(n);
    std::vector<bool> active(n, false);
    bool any = false;
    double total_true = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double fm = clients[i].profile.f_max_hz;
        const double pm = clients[i].profile.p_max_w;
        const FeasibilityReport rep = check_exact(clients[i], s, s.delta_th, fm, pm);
        if (rep.feasible) {
            anchor[i] = {s.delta_th, fm, pm};
            active[i] = true;
            any = true;
            total_true += client_true(i, s.delta_th, fm, pm);
        } else {
            result.decisions[i].feasible = false;
            result.decisions[i].infeasible_constraint =
                !rep.c1_ok && !rep.c2_ok ? "C1+C2" : (!rep.c1_ok ? "C1" : "C2");
        }
    }
    if (!any) raise(ErrorKind::NoFeasibleStart, "no client is feasible at the relaxed corner");

    result.trace.objective_values.push_back(total_true);
    result.trace.surrogate_values.push_back(total_true);

    for (int q = 1; q <= s.max_iterations; ++q) {
        double next_true = 0.0;
        double next_surr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            const auto& a = anchor[i];
            const double prev = client_true(i, a[0], a[1], a[2]);

            LinearizedClient lin = linearize(clients[i], s, a[0], a[1], a[2]);
            const double w = clients[i].weight;
            const SubproblemResult sub =
                solve_subproblem(lin, clients[i], s, w * (s.phi1 + s.phi2 * lin.grad_delta),
                                 w * s.phi2 * lin.grad_f, w * s.phi2 * lin.grad_p);

            // Halve back toward the anchor until the point is feasible for
            // the original constraints and does not increase the true
            // objective; the subproblem direction is a descent direction, so
            // this terminates.
            std::array<double, 3> x{sub.delta, sub.f_hz, sub.tx_w};
            std::array<double, 3> accepted = a;
            for (int bt = 0; bt < 60; ++bt) {
                if (check_exact(clients[i], s, x[0], x[1], x[2]).feasible &&
                    client_true(i, x[0], x[1], x[2]) <= prev + 1e-15 * std::max(1.0, std::fabs(prev))) {
                    accepted = x;
                    break;
                }
                for (int v = 0; v < 3; ++v) x[v] = 0.5 * (x[v] + a[v]);
            }
            anchor[i] = accepted;
            next_true += client_true(i, accepted[0], accepted[1], accepted[2]);
            next_surr += client_surrogate(i, lin, accepted[0], accepted[1], accepted[2]);
        }
        result.trace.objective_values.push_back(next_true);
        result.trace.surrogate_values.push_back(next_surr);
        result.iterations = q;
        const double change = std::fabs(total_true - next_true);
        total_true = next_true;
        if (change < s.epsilon) break;
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        Decision& d = result.decisions[i];
        d.feasible = true;
        d.delta = anchor[i][0];
        d.f_hz = anchor[i][1];
        d.tx_w = anchor[i][2];
        d.success_p = success_probability(d.delta, d.f_hz, d.tx_w, clients[i].profile, s.channel,
                                          clients[i].interference_w, s.t_th_s, s.rho, s.kappa0,
                                          s.d_model, s.fpp_bits)
                          .p;
    }
    return result;
}

}  // namespace phfl
