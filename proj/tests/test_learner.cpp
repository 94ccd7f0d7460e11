#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "phfl/learner.hpp"
#include "phfl/rng.hpp"

using namespace phfl;

namespace {

Dataset small_dataset(int classes, int features, int samples, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.num_classes = classes;
    spec.feature_dim = features;
    spec.samples = samples;
    spec.seed = seed;
    return make_synthetic_dataset(spec);
}

std::vector<double> finite_difference_grad(const ModelSpec& spec, std::vector<double> w,
                                           const Dataset& data, const std::vector<int>& rows,
                                           double h) {
    std::vector<double> grad(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double keep = w[i];
        w[i] = keep + h;
        const double up = local_loss(spec, w, data, rows);
        w[i] = keep - h;
        const double down = local_loss(spec, w, data, rows);
        w[i] = keep;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
    // 20-parameter logistic model: 4 classes x (4 features + bias).
    const Dataset data = small_dataset(4, 4, 64, 5);
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::Logistic;
    spec.feature_dim = 4;
    spec.num_classes = 4;
    REQUIRE(spec.dim() == 20);

    std::vector<int> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    const std::vector<double> w = init_weights(spec, 3);
    const auto g = stochastic_grad(spec, w, data, rows);
    const auto fd = finite_difference_grad(spec, w, data, rows, 1e-5);
    double max_err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) max_err = std::max(max_err, std::fabs(g[i] - fd[i]));
    CHECK(max_err <= 1e-6);
}

TEST_CASE("mlp gradients match finite differences") {
    const Dataset data = small_dataset(3, 5, 48, 11);
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::Mlp;
    spec.feature_dim = 5;
    spec.num_classes = 3;
    spec.hidden = 4;

    std::vector<int> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    const std::vector<double> w = init_weights(spec, 4);
    const auto g = stochastic_grad(spec, w, data, rows);
    const auto fd = finite_difference_grad(spec, w, data, rows, 1e-5);
    double max_err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) max_err = std::max(max_err, std::fabs(g[i] - fd[i]));
    CHECK(max_err <= 1e-6);
}

TEST_CASE("zero-weight logistic gradient has the closed softmax form") {
    // At w = 0 the softmax is uniform, so the gradient per class c is
    // mean over samples of (1/C - [y=c]) * (x, 1).
    const Dataset data = small_dataset(4, 3, 32, 7);
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::Logistic;
    spec.feature_dim = 3;
    spec.num_classes = 4;

    std::vector<int> rows(data.size());
    std::iota(rows.begin(), rows.end(), 0);
    const std::vector<double> w(spec.dim(), 0.0);
    const auto g = stochastic_grad(spec, w, data, rows);
    for (int c = 0; c < 4; ++c) {
        for (int f = 0; f <= 3; ++f) {
            double expect = 0.0;
            for (int r : rows) {
                const double xf = f < 3 ? data.row(r)[f] : 1.0;
                expect += (0.25 - (data.y[r] == c ? 1.0 : 0.0)) * xf;
            }
            expect /= static_cast<double>(rows.size());
            CHECK(g[c * 4 + f] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("empty batches are rejected") {
    const Dataset data = small_dataset(3, 4, 40, 13);
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::Logistic;
    spec.feature_dim = 4;
    spec.num_classes = 3;
    const auto w = init_weights(spec, 1);
    CHECK_THROWS_AS(stochastic_grad(spec, w, data, std::vector<int>{}), Error);
    CHECK_THROWS_AS(local_loss(spec, w, data, std::vector<int>{}), Error);
}

TEST_CASE("magnitude mask prunes the smallest entries, ties at lower index") {
    const std::vector<double> w = {0.1, -0.5, 0.3, -0.2};
    const auto mask = magnitude_mask(w, 0.5);
    CHECK(mask == std::vector<std::uint8_t>{0, 1, 1, 0});

    // Ties: equal magnitudes, lower index goes first.
    const std::vector<double> tied = {0.2, -0.2, 0.2, 0.9};
    const auto tmask = magnitude_mask(tied, 0.5);
    CHECK(tmask == std::vector<std::uint8_t>{0, 0, 1, 1});

    CHECK(magnitude_mask(w, 0.0) == std::vector<std::uint8_t>{1, 1, 1, 1});
}

TEST_CASE("pruning error obeys the ratio bound on 1000 random vectors") {
    auto g = make_rng(2024, Stream::ProfileDraw, 99);
    for (int rep = 0; rep < 1000; ++rep) {
        const int d = 50 + static_cast<int>(g() % 100) * 10;  // multiples of 10
        std::vector<double> w(d);
        for (double& v : w) v = normal(g);
        for (double delta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const PrunedModel m = apply_mask(w, magnitude_mask(w, delta), delta);
            CHECK(m.prune_error <= delta + 1e-12);
            const auto zeros = std::count(m.mask.begin(), m.mask.end(), 0);
            CHECK(zeros == std::llround(delta * d));
        }
    }
}

TEST_CASE("lottery ticket keeps initial weights on surviving entries") {
    const Dataset data = small_dataset(4, 6, 64, 21);
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::Logistic;
    spec.feature_dim = 6;
    spec.num_classes = 4;
    const auto w0 = init_weights(spec, 9);
    DataShard shard;
    shard.rows.resize(data.size());
    std::iota(shard.rows.begin(), shard.rows.end(), 0);

    auto warm = make_rng(5, Stream::WarmupBatch, 0, 0);
    const PrunedModel ticket = lottery_ticket(spec, w0, data, shard, 3, 0.05, 0.5, 8, warm);
    CHECK(ticket.ratio == 0.5);
    for (std::size_t i = 0; i < w0.size(); ++i) {
        if (ticket.mask[i])
            CHECK(ticket.weights[i] == w0[i]);  // original weights retained
        else
            CHECK(ticket.weights[i] == 0.0);
    }

    // delta = 0: identity.
    auto warm2 = make_rng(5, Stream::WarmupBatch, 0, 1);
    const PrunedModel id = lottery_ticket(spec, w0, data, shard, 2, 0.05, 0.0, 8, warm2);
    CHECK(id.weights == w0);
    CHECK(std::count(id.mask.begin(), id.mask.end(), 0) == 0);
}

TEST_CASE("masked updates never resurrect pruned coordinates") {
    const Dataset data = small_dataset(3, 5, 60, 31);
    ModelSpec spec;
    spec.kind = ModelSpec::Kind::Mlp;
    spec.feature_dim = 5;
    spec.num_classes = 3;
    spec.hidden = 6;
    DataShard shard;
    shard.rows.resize(data.size());
    std::iota(shard.rows.begin(), shard.rows.end(), 0);

    const auto w0 = init_weights(spec, 17);
    PrunedModel m = apply_mask(w0, magnitude_mask(w0, 0.4), 0.4);
    const auto mask = m.mask;
    auto rng = make_rng(5, Stream::LocalBatch, 1, 2);
    run_local_rounds(spec, m, data, shard, 12, 0.05, 8, rng);
    for (std::size_t i = 0; i < m.weights.size(); ++i)
        if (!mask[i]) CHECK(m.weights[i] == 0.0);

    // All-ones mask reproduces unmasked SGD on the same stream.
    PrunedModel dense;
    dense.weights = w0;
    dense.mask.assign(w0.size(), 1);
    auto rng_a = make_rng(6, Stream::LocalBatch, 0, 0);
    run_local_rounds(spec, dense, data, shard, 5, 0.05, 8, rng_a);
    std::vector<double> manual = w0;
    auto rng_b = make_rng(6, Stream::LocalBatch, 0, 0);
    for (int step = 0; step < 5; ++step) {
        const auto batch = sample_batch(shard, 8, rng_b);
        const auto g = stochastic_grad(spec, manual, data, batch);
        for (std::size_t i = 0; i < manual.size(); ++i) manual[i] -= 0.05 * g[i];
    }
    CHECK(dense.weights == manual);

    // All-zero mask: model frozen.
    PrunedModel frozen;
    frozen.weights.assign(w0.size(), 0.0);
    frozen.mask.assign(w0.size(), 0);
    auto rng_c = make_rng(7, Stream::LocalBatch, 0, 0);
    run_local_rounds(spec, frozen, data, shard, 3, 0.05, 8, rng_c);
    CHECK(std::all_of(frozen.weights.begin(), frozen.weights.end(),
                      [](double v) { return v == 0.0; }));
}

TEST_CASE("dirichlet partition is a partition") {
    const Dataset data = small_dataset(10, 4, 2000, 77);
    const auto shards = dirichlet_partition(data, 16, 0.5, 4);
    REQUIRE(shards.size() == 16);
    std::set<int> seen;
    std::size_t total = 0;
    for (const auto& s : shards) {
        CHECK(!s.rows.empty());
        double psum = 0.0;
        for (double p : s.label_proportions) psum += p;
        CHECK(psum == doctest::Approx(1.0).epsilon(1e-12));
        total += s.rows.size();
        seen.insert(s.rows.begin(), s.rows.end());
    }
    CHECK(total == static_cast<std::size_t>(data.size()));
    CHECK(seen.size() == total);  // disjoint
}

TEST_CASE("huge concentration approaches the global histogram") {
    const Dataset data = small_dataset(10, 4, 48000, 3);
    std::vector<double> global(10, 0.0);
    for (int y : data.y) global[y] += 1.0;
    for (double& v : global) v /= data.size();

    const auto shards = dirichlet_partition(data, 48, 1e6, 9);
    for (const auto& s : shards) {
        double tv = 0.0;
        for (int c = 0; c < 10; ++c) tv += std::fabs(s.label_proportions[c] - global[c]);
        CHECK(tv / 2.0 <= 0.02);
    }
}

TEST_CASE("tiny concentration concentrates shards on few labels") {
    const Dataset data = small_dataset(10, 4, 6000, 5);
    int dominated = 0, clients = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto shards = dirichlet_partition(data, 8, 0.01, seed);
        for (const auto& s : shards) {
            auto props = s.label_proportions;
            std::sort(props.begin(), props.end(), std::greater<>());
            if (props[0] + props[1] > 0.8) ++dominated;
            ++clients;
        }
    }
    // Median client is dominated by at most two labels.
    CHECK(dominated * 2 > clients);
}

TEST_CASE("dirichlet partition rejects impossible requests") {
    const Dataset data = small_dataset(3, 4, 10, 5);
    CHECK_THROWS_AS(dirichlet_partition(data, 11, 0.5, 1), Error);
}

TEST_CASE("accuracy improves with training on an easy task") {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.feature_dim = 8;
    spec.samples = 600;
    spec.class_separation = 4.0;
    spec.seed = 31;
    const Dataset data = make_synthetic_dataset(spec);
    ModelSpec ms;
    ms.kind = ModelSpec::Kind::Logistic;
    ms.feature_dim = 8;
    ms.num_classes = 4;
    DataShard shard;
    shard.rows.resize(400);
    std::iota(shard.rows.begin(), shard.rows.end(), 0);
    std::vector<int> test_rows(200);
    std::iota(test_rows.begin(), test_rows.end(), 400);

    PrunedModel m;
    m.weights = init_weights(ms, 2);
    m.mask.assign(ms.dim(), 1);
    const double before = accuracy(ms, m.weights, data, test_rows);
    auto rng = make_rng(8, Stream::LocalBatch, 0, 0);
    run_local_rounds(ms, m, data, shard, 300, 0.1, 16, rng);
    const double after = accuracy(ms, m.weights, data, test_rows);
    CHECK(after > before);
    CHECK(after > 0.8);
}
