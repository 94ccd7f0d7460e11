#pragma once

#include <cstdint>
#include <random>

namespace phfl {

/// Named random streams. Every random decision in the library draws from a
/// generator keyed by (experiment seed, stream purpose, up to two ids, e.g.
/// client and round). Streams are independent of evaluation order, so client
/// work can run on any number of threads and still reproduce the serial trace.
enum class Stream : std::uint32_t {
    ModelInit = 1,
    DatasetGen = 2,
    Partition = 3,
    Placement = 4,
    ProfileDraw = 5,
    Fading = 6,
    Reception = 7,
    WarmupBatch = 8,
    LocalBatch = 9,
    BaselineDelta = 10,
    EvalSubset = 11,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint64_t a = 0,
                                std::uint64_t b = 0) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream),
        static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
        static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
    };
    return std::mt19937_64(seq);
}

/// Unit-mean exponential draw (squared-Rayleigh channel gain).
inline double exp1(std::mt19937_64& g) {
    std::exponential_distribution<double> d(1.0);
    return d(g);
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(g);
}

inline double normal(std::mt19937_64& g, double mean = 0.0, double stddev = 1.0) {
    std::normal_distribution<double> d(mean, stddev);
    return d(g);
}

}  // namespace phfl
