#include "phfl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "phfl/rng.hpp"

namespace phfl {

Dataset make_synthetic_dataset(const SyntheticSpec& spec) {
    Dataset d;
    d.feature_dim = spec.feature_dim;
    d.num_classes = spec.num_classes;
    auto g = make_rng(spec.seed, Stream::DatasetGen);

    std::vector<double> means(static_cast<std::size_t>(spec.num_classes) * spec.feature_dim);
    for (double& m : means) m = normal(g, 0.0, spec.class_separation / std::sqrt(spec.feature_dim));

    d.x.resize(static_cast<std::size_t>(spec.samples) * spec.feature_dim);
    d.y.resize(spec.samples);
    for (int r = 0; r < spec.samples; ++r) {
        const int c = r % spec.num_classes;
        d.y[r] = c;
        double* row = d.x.data() + static_cast<std::size_t>(r) * spec.feature_dim;
        const double* mu = means.data() + static_cast<std::size_t>(c) * spec.feature_dim;
        for (int f = 0; f < spec.feature_dim; ++f) row[f] = mu[f] + normal(g, 0.0, spec.noise_sigma);
    }

    // Shuffle rows so class labels are not periodic.
    std::vector<int> order(spec.samples);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), g);
    Dataset shuffled = d;
    for (int r = 0; r < spec.samples; ++r) {
        shuffled.y[r] = d.y[order[r]];
        std::copy_n(d.row(order[r]), spec.feature_dim,
                    shuffled.x.data() + static_cast<std::size_t>(r) * spec.feature_dim);
    }
    return shuffled;
}

Dataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open dataset file " + path);
    std::string line;
    if (!std::getline(in, line)) raise(ErrorKind::IoError, "empty dataset file " + path);

    int columns = 1;
    for (char c : line)
        if (c == ',') ++columns;
    if (columns < 2) raise(ErrorKind::ConfigError, "dataset needs at least one feature and a label");

    Dataset d;
    d.feature_dim = columns - 1;
    int max_label = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        int label = -1;
        while (std::getline(ss, cell, ',')) {
            if (col < d.feature_dim)
                d.x.push_back(std::stod(cell));
            else
                label = static_cast<int>(std::lround(std::stod(cell)));
            ++col;
        }
        if (col != columns) raise(ErrorKind::IoError, "ragged CSV row in " + path);
        if (label < 0) raise(ErrorKind::ConfigError, "labels must be nonnegative integers");
        d.y.push_back(label);
        max_label = std::max(max_label, label);
    }
    if (d.y.empty()) raise(ErrorKind::TooFewSamples, "dataset has no rows");
    d.num_classes = max_label + 1;
    return d;
}

namespace {

std::vector<double> class_histogram(const Dataset& data, const std::vector<int>& rows) {
    std::vector<double> h(data.num_classes, 0.0);
    for (int r : rows) h[data.y[r]] += 1.0;
    for (double& v : h) v /= static_cast<double>(rows.size());
    return h;
}

}  // namespace

std::vector<DataShard> dirichlet_partition(const Dataset& data, int num_clients, double alpha_bar,
                                           std::uint64_t seed) {
    if (num_clients < 1) raise(ErrorKind::ConfigError, "need at least one client");
    if (!(alpha_bar > 0)) raise(ErrorKind::ConfigError, "alpha_bar must be positive");
    if (data.num_classes < 2) raise(ErrorKind::TooFewSamples, "need at least two classes");
    if (data.size() < num_clients)
        raise(ErrorKind::TooFewSamples, "fewer samples than clients");

    std::vector<std::vector<int>> by_class(data.num_classes);
    for (int r = 0; r < data.size(); ++r) by_class[data.y[r]].push_back(r);

    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        auto g = make_rng(seed, Stream::Partition, attempt);
        std::vector<std::vector<int>> assigned(num_clients);
        for (int c = 0; c < data.num_classes; ++c) {
            auto rows = by_class[c];
            std::shuffle(rows.begin(), rows.end(), g);

            std::vector<double> prop(num_clients);
            std::gamma_distribution<double> gamma(alpha_bar, 1.0);
            double sum = 0.0;
            for (double& p : prop) {
                p = gamma(g);
                sum += p;
            }
            if (sum <= 0.0) continue;  // degenerate draw; retry attempt

            // Largest-remainder rounding of proportional counts.
            const int n = static_cast<int>(rows.size());
            std::vector<int> count(num_clients, 0);
            std::vector<std::pair<double, int>> remainder(num_clients);
            int used = 0;
            for (int u = 0; u < num_clients; ++u) {
                const double exact = prop[u] / sum * n;
                count[u] = static_cast<int>(std::floor(exact));
                used += count[u];
                remainder[u] = {exact - count[u], u};
            }
            std::sort(remainder.begin(), remainder.end(),
                      [](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return a.second < b.second;
                      });
            for (int extra = 0; extra < n - used; ++extra) ++count[remainder[extra].second];

            int at = 0;
            for (int u = 0; u < num_clients; ++u)
                for (int s = 0; s < count[u]; ++s) assigned[u].push_back(rows[at++]);
        }

        const bool all_nonempty = std::all_of(assigned.begin(), assigned.end(),
                                              [](const auto& v) { return !v.empty(); });
        if (!all_nonempty) continue;

        std::vector<DataShard> shards(num_clients);
        for (int u = 0; u < num_clients; ++u) {
            std::sort(assigned[u].begin(), assigned[u].end());
            shards[u].rows = std::move(assigned[u]);
            shards[u].label_proportions = class_histogram(data, shards[u].rows);
        }
        return shards;
    }
    raise(ErrorKind::TooFewSamples, "could not find a partition with all clients nonempty");
}

std::int64_t ModelSpec::dim() const {
    switch (kind) {
        case Kind::Logistic:
            return static_cast<std::int64_t>(num_classes) * (feature_dim + 1);
        case Kind::Mlp:
            return static_cast<std::int64_t>(hidden) * (feature_dim + 1) +
                   static_cast<std::int64_t>(num_classes) * (hidden + 1);
    }
    return 0;
}

namespace {

// Softmax in place over logits; returns the log-sum-exp for the loss.
double softmax_inplace(std::vector<double>& z) {
    double zmax = z[0];
    for (double v : z) zmax = std::max(zmax, v);
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return zmax + std::log(sum);
}

struct Scratch {
    std::vector<double> hidden_pre, hidden_act, probs;
};

// Forward pass; fills probs (softmax) and, for the MLP, hidden activations.
void forward(const ModelSpec& spec, std::span<const double> w, const double* x, Scratch& s) {
    const int F = spec.feature_dim;
    const int C = spec.num_classes;
    s.probs.assign(C, 0.0);
    if (spec.kind == ModelSpec::Kind::Logistic) {
        for (int c = 0; c < C; ++c) {
            const double* row = w.data() + static_cast<std::size_t>(c) * (F + 1);
            double z = row[F];
            for (int f = 0; f < F; ++f) z += row[f] * x[f];
            s.probs[c] = z;
        }
    } else {
        const int H = spec.hidden;
        s.hidden_pre.assign(H, 0.0);
        s.hidden_act.assign(H, 0.0);
        for (int h = 0; h < H; ++h) {
            const double* row = w.data() + static_cast<std::size_t>(h) * (F + 1);
            double z = row[F];
            for (int f = 0; f < F; ++f) z += row[f] * x[f];
            s.hidden_pre[h] = z;
            s.hidden_act[h] = std::tanh(z);
        }
        const double* w2 = w.data() + static_cast<std::size_t>(H) * (F + 1);
        for (int c = 0; c < C; ++c) {
            const double* row = w2 + static_cast<std::size_t>(c) * (H + 1);
            double z = row[H];
            for (int h = 0; h < H; ++h) z += row[h] * s.hidden_act[h];
            s.probs[c] = z;
        }
    }
}

}  // namespace

double local_loss(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                  std::span<const int> rows) {
    if (rows.empty()) raise(ErrorKind::EmptyBatch, "loss over empty row set");
    Scratch s;
    double total = 0.0;
    for (int r : rows) {
        forward(spec, w, data.row(r), s);
        const double logit_y = s.probs[data.y[r]];
        const double lse = softmax_inplace(s.probs);
        total += lse - logit_y;  // -log softmax_y
    }
    return total / static_cast<double>(rows.size());
}

std::vector<double> stochastic_grad(const ModelSpec& spec, std::span<const double> w,
                                    const Dataset& data, std::span<const int> rows) {
    if (rows.empty()) raise(ErrorKind::EmptyBatch, "gradient over empty batch");
    const int F = spec.feature_dim;
    const int C = spec.num_classes;
    std::vector<double> grad(w.size(), 0.0);
    Scratch s;
    for (int r : rows) {
        const double* x = data.row(r);
        forward(spec, w, x, s);
        softmax_inplace(s.probs);
        s.probs[data.y[r]] -= 1.0;  // dL/dlogit

        if (spec.kind == ModelSpec::Kind::Logistic) {
            for (int c = 0; c < C; ++c) {
                double* row = grad.data() + static_cast<std::size_t>(c) * (F + 1);
                const double gz = s.probs[c];
                for (int f = 0; f < F; ++f) row[f] += gz * x[f];
                row[F] += gz;
            }
        } else {
            const int H = spec.hidden;
            const double* w2 = w.data() + static_cast<std::size_t>(H) * (F + 1);
            double* g2 = grad.data() + static_cast<std::size_t>(H) * (F + 1);
            std::vector<double> dh(H, 0.0);
            for (int c = 0; c < C; ++c) {
                const double gz = s.probs[c];
                const double* row = w2 + static_cast<std::size_t>(c) * (H + 1);
                double* grow = g2 + static_cast<std::size_t>(c) * (H + 1);
                for (int h = 0; h < H; ++h) {
                    grow[h] += gz * s.hidden_act[h];
                    dh[h] += gz * row[h];
                }
                grow[H] += gz;
            }
            for (int h = 0; h < H; ++h) {
                const double da = dh[h] * (1.0 - s.hidden_act[h] * s.hidden_act[h]);
                double* grow = grad.data() + static_cast<std::size_t>(h) * (F + 1);
                for (int f = 0; f < F; ++f) grow[f] += da * x[f];
                grow[F] += da;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& g : grad) g *= inv;
    return grad;
}

double accuracy(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                std::span<const int> rows) {
    if (rows.empty()) raise(ErrorKind::EmptyBatch, "accuracy over empty row set");
    Scratch s;
    int hits = 0;
    for (int r : rows) {
        forward(spec, w, data.row(r), s);
        const int pred = static_cast<int>(
            std::max_element(s.probs.begin(), s.probs.end()) - s.probs.begin());
        if (pred == data.y[r]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

std::vector<double> init_weights(const ModelSpec& spec, std::uint64_t seed) {
    auto g = make_rng(seed, Stream::ModelInit);
    std::vector<double> w(spec.dim());
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.feature_dim + 1));
    for (double& v : w) v = normal(g, 0.0, scale);
    return w;
}

std::vector<std::uint8_t> magnitude_mask(std::span<const double> w, double delta) {
    const std::int64_t d = static_cast<std::int64_t>(w.size());
    const std::int64_t dp = std::llround(delta * static_cast<double>(d));
    std::vector<std::uint8_t> mask(w.size(), 1);
    if (dp <= 0) return mask;

    std::vector<std::int64_t> idx(w.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::nth_element(idx.begin(), idx.begin() + (dp - 1), idx.end(),
                     [&](std::int64_t a, std::int64_t b) {
                         const double ma = std::fabs(w[a]), mb = std::fabs(w[b]);
                         if (ma != mb) return ma < mb;
                         return a < b;  // ties: lower index pruned first
                     });
    for (std::int64_t i = 0; i < dp; ++i) mask[idx[i]] = 0;
    return mask;
}

PrunedModel apply_mask(std::span<const double> w, std::vector<std::uint8_t> mask, double delta) {
    PrunedModel m;
    m.ratio = delta;
    m.mask = std::move(mask);
    m.weights.assign(w.begin(), w.end());
    double removed = 0.0, total = 0.0;
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
        total += m.weights[i] * m.weights[i];
        if (!m.mask[i]) {
            removed += m.weights[i] * m.weights[i];
            m.weights[i] = 0.0;
        }
    }
    m.prune_error = total > 0.0 ? removed / total : 0.0;
    return m;
}

std::vector<int> sample_batch(const DataShard& shard, int batch_size, std::mt19937_64& rng) {
    if (shard.rows.empty()) raise(ErrorKind::EmptyBatch, "shard is empty");
    std::uniform_int_distribution<int> pick(0, shard.size() - 1);
    std::vector<int> batch(batch_size);
    for (int& b : batch) b = shard.rows[pick(rng)];
    return batch;
}

PrunedModel lottery_ticket(const ModelSpec& spec, std::span<const double> w_init,
                           const Dataset& data, const DataShard& shard, int rho, double eta,
                           double delta, int batch_size, std::mt19937_64& warmup_rng) {
    std::vector<double> trained(w_init.begin(), w_init.end());
    for (int step = 0; step < rho; ++step) {
        const auto batch = sample_batch(shard, batch_size, warmup_rng);
        const auto g = stochastic_grad(spec, trained, data, batch);
        for (std::size_t i = 0; i < trained.size(); ++i) trained[i] -= eta * g[i];
    }
    auto mask = magnitude_mask(trained, delta);
    return apply_mask(w_init, std::move(mask), delta);  // winning ticket keeps initial weights
}

void masked_sgd_step(const ModelSpec& spec, PrunedModel& model, const Dataset& data,
                     std::span<const int> batch, double eta) {
    const auto g = stochastic_grad(spec, model.weights, data, batch);
    bool finite = true;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        if (model.mask[i]) {
            model.weights[i] -= eta * g[i];
            finite = finite && std::isfinite(model.weights[i]);
        }
    }
    if (!finite) raise(ErrorKind::NonFiniteLoss, "weights diverged during masked SGD");
}

void run_local_rounds(const ModelSpec& spec, PrunedModel& model, const Dataset& data,
                      const DataShard& shard, int kappa0, double eta, int batch_size,
                      std::mt19937_64& rng) {
    for (int step = 0; step < kappa0; ++step) {
        const auto batch = sample_batch(shard, batch_size, rng);
        masked_sgd_step(spec, model, data, batch, eta);
    }
}

}  // namespace phfl
