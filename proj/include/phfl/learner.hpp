#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "phfl/errors.hpp"

namespace phfl {

/// In-memory classification dataset, rows stored flat (row * feature_dim).
struct Dataset {
    int feature_dim = 0;
    int num_classes = 0;
    std::vector<double> x;
    std::vector<int> y;

    int size() const { return static_cast<int>(y.size()); }
    const double* row(int r) const { return x.data() + static_cast<std::size_t>(r) * feature_dim; }
    /// Bits per sample under this schema (doubles plus a 32-bit label).
    double sample_bits() const { return 64.0 * feature_dim + 32.0; }
};

struct SyntheticSpec {
    int num_classes = 10;
    int feature_dim = 32;
    int samples = 4096;
    double class_separation = 3.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
};

/// Gaussian-mixture classification task: one seeded mean per class, equal
/// class counts, shuffled row order.
Dataset make_synthetic_dataset(const SyntheticSpec& spec);

/// CSV with a header row "f0,...,fk,label"; label is the last column.
Dataset load_csv_dataset(const std::string& path);

/// A client's slice of the dataset (row indices into the parent).
struct DataShard {
    std::vector<int> rows;
    std::vector<double> label_proportions;

    int size() const { return static_cast<int>(rows.size()); }
};

/// Per-class Dirichlet(alpha_bar) split across `num_clients`. Resamples until
/// every client is nonempty; throws TooFewSamples when that cannot happen.
std::vector<DataShard> dirichlet_partition(const Dataset& data, int num_clients, double alpha_bar,
                                           std::uint64_t seed);

struct ModelSpec {
    enum class Kind { Logistic, Mlp };
    Kind kind = Kind::Logistic;
    int feature_dim = 0;
    int num_classes = 0;
    int hidden = 0;  // MLP only

    std::int64_t dim() const;
};

/// Softmax cross-entropy over the given rows (mean).
double local_loss(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                  std::span<const int> rows);

/// Mean gradient over the given rows; unbiased for the shard gradient when
/// rows are drawn uniformly. Throws EmptyBatch.
std::vector<double> stochastic_grad(const ModelSpec& spec, std::span<const double> w,
                                    const Dataset& data, std::span<const int> rows);

/// Fraction of argmax predictions that match the labels.
double accuracy(const ModelSpec& spec, std::span<const double> w, const Dataset& data,
                std::span<const int> rows);

std::vector<double> init_weights(const ModelSpec& spec, std::uint64_t seed);

struct PrunedModel {
    std::vector<double> weights;       // w tilde = w ⊙ m
    std::vector<std::uint8_t> mask;    // 1 = keep
    double ratio = 0.0;                // delta
    double prune_error = 0.0;          // ||w - w~||^2 / ||w||^2 at construction
};

/// Mask zeroing the round(delta*d) smallest-magnitude entries; ties pruned at
/// the lower index.
std::vector<std::uint8_t> magnitude_mask(std::span<const double> w, double delta);

PrunedModel apply_mask(std::span<const double> w, std::vector<std::uint8_t> mask, double delta);

/// Uniform-with-replacement batch of `batch_size` row indices from the shard.
std::vector<int> sample_batch(const DataShard& shard, int batch_size, std::mt19937_64& rng);

/// Winning ticket: run `rho` dense SGD steps from w_init, rank magnitudes of
/// the trained vector, then mask the ORIGINAL weights (initial values kept on
/// surviving entries).
PrunedModel lottery_ticket(const ModelSpec& spec, std::span<const double> w_init,
                           const Dataset& data, const DataShard& shard, int rho, double eta,
                           double delta, int batch_size, std::mt19937_64& warmup_rng);

/// One masked SGD step: w~ <- w~ - eta * (g(w~) ⊙ m). Pruned coordinates stay
/// exactly zero. Throws NonFiniteLoss on divergence.
void masked_sgd_step(const ModelSpec& spec, PrunedModel& model, const Dataset& data,
                     std::span<const int> batch, double eta);

/// kappa0 masked steps with a fixed mask, batches drawn from `rng`.
void run_local_rounds(const ModelSpec& spec, PrunedModel& model, const Dataset& data,
                      const DataShard& shard, int kappa0, double eta, int batch_size,
                      std::mt19937_64& rng);

}  // namespace phfl
