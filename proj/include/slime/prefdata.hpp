#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slime/common.hpp"

namespace slime {

// A token-id sequence plus its valid length. Immutable once constructed;
// validation happens at ingestion so downstream code never re-checks.
struct TokenSequence {
    std::vector<std::int32_t> tokens;

    int length() const noexcept { return static_cast<int>(tokens.size()); }
};

// One training example: prompt x with winning response y_w and losing
// response y_l sharing that prompt.
struct PreferencePair {
    TokenSequence prompt;
    TokenSequence chosen;
    TokenSequence rejected;
    std::uint64_t pair_id = 0;
};

// Seed-fixed disjoint partition of a corpus into an SFT slice and a
// preference slice. Index sets are stored sorted.
struct CorpusSplit {
    double sft_fraction = 0.0;
    std::uint64_t seed = 0;
    std::vector<int> sft_indices;
    std::vector<int> pref_indices;
};

// Planted-distribution generator settings. Chosen responses draw tokens
// mostly from the lower half of the vocabulary, rejected responses from the
// upper half, so the corpus carries a preference signal of known strength.
struct SyntheticConfig {
    int n_pairs = 0;
    int vocab_size = 0;
    int max_len = 0;
    std::uint64_t seed = 0;
    // Probability that a response token comes from its on-style pool.
    // Quantized to per-mille internally to keep sampling integer-only.
    double style_strength = 0.9;

    // Expected gap between chosen and rejected on-style token frequencies.
    double planted_gap() const noexcept { return 2.0 * style_strength - 1.0; }
    // First token id of the off-style pool.
    int pool_split() const noexcept { return vocab_size / 2; }
};

// Throws ValidationError unless every token id lies in [0, vocab_size) and
// the sequence is non-empty. `what` names the offending field in messages.
void validate_sequence(const TokenSequence& seq, int vocab_size, const std::string& what);

// Full PreferencePair invariant check (sequence validity, non-degenerate
// chosen/rejected).
void validate_pair(const PreferencePair& pair, int vocab_size, const std::string& what);

// Reads one JSON object per line with integer-array fields prompt/chosen/
// rejected and an optional integer pair_id (defaults to the line index).
// Order is preserved; any malformed or invalid line aborts with a message
// naming the line.
std::vector<PreferencePair> load_jsonl(const std::string& path, int vocab_size);

// Companion writer: one object per line, keys prompt/chosen/rejected/pair_id,
// UTF-8, newline-terminated. load_jsonl(save_jsonl(pairs)) == pairs.
void save_jsonl(const std::string& path, const std::vector<PreferencePair>& pairs);

// Partitions {0..n-1} into round-half-up(sft_fraction*n) SFT indices and the
// rest, deterministically in `seed`.
CorpusSplit split_corpus(int n, double sft_fraction, std::uint64_t seed);

std::vector<PreferencePair> generate_synthetic(const SyntheticConfig& config);

inline std::vector<PreferencePair> generate_synthetic(int n_pairs, int vocab_size,
                                                      int max_len, std::uint64_t seed) {
    SyntheticConfig config;
    config.n_pairs = n_pairs;
    config.vocab_size = vocab_size;
    config.max_len = max_len;
    config.seed = seed;
    return generate_synthetic(config);
}

}  // namespace slime
