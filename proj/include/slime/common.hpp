#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace slime {

// Thrown when inputs violate a documented precondition (bad config keys,
// malformed data files, out-of-range hyperparameters). CLI maps this to exit 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a run fails mid-flight (non-finite loss, broken invariant).
// CLI maps this to exit 2 and dumps the attached diagnostic.
class TrainingAbort : public std::runtime_error {
public:
    TrainingAbort(const std::string& msg, std::string diagnostic)
        : std::runtime_error(msg), diagnostic_(std::move(diagnostic)) {}

    const std::string& diagnostic() const noexcept { return diagnostic_; }

private:
    std::string diagnostic_;
};

// SplitMix64. All randomness in the library flows through this generator:
// it is tiny, fully specified by its seed, and identical on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) built from the top 53 bits; exact on any
    // IEEE-754 platform.
    double next_double() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound) via the 128-bit multiply trick.
    // Integer-only, so results are bit-identical everywhere.
    std::uint64_t next_below(std::uint64_t bound) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

private:
    std::uint64_t state_;
};

// Named sub-seed streams derived from one master seed. Keeping the streams
// fixed means adding a new consumer never perturbs existing ones.
enum class SeedStream : std::uint64_t {
    data = 1,
    init = 2,
    shuffle = 3,
    eval_split = 4,
    gradcheck = 5,
    probe = 6,
};

inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream) noexcept {
    SplitMix64 rng(master ^ (0xa0761d6478bd642fULL * static_cast<std::uint64_t>(stream)));
    return rng.next();
}

}  // namespace slime
