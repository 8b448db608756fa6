#pragma once

#include <cstdint>
#include <random>

namespace tilln {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t z);

/// Seed of the work unit `unit` under the experiment seed `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t unit);

/// Uniform(0,1) source with a consumption counter.
///
/// Output is a fixed function of the seed (no std distributions are involved),
/// so streams are bit-reproducible across standard libraries.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    /// Stream for work unit `unit` (replication, sample, ...) of an experiment.
    static UniformStream derive(std::uint64_t seed, std::uint64_t unit) {
        return UniformStream(stream_seed(seed, unit));
    }

    /// Strictly inside (0,1).
    double next() {
        ++consumed_;
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t bits() {
        ++consumed_;
        return engine_();
    }

    std::uint64_t consumed() const { return consumed_; }
    std::uint64_t seed() const { return seed_; }

private:
    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::uint64_t consumed_ = 0;
};

}  // namespace tilln
