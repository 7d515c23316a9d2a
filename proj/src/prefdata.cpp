#include "slime/prefdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

namespace slime {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::int32_t> parse_token_array(const ordered_json& value,
                                            const std::string& context) {
    if (!value.is_array()) {
        throw ValidationError(context + ": expected an integer array");
    }
    std::vector<std::int32_t> tokens;
    tokens.reserve(value.size());
    for (const auto& item : value) {
        if (!item.is_number_integer()) {
            throw ValidationError(context + ": non-integer token id");
        }
        const auto id = item.get<std::int64_t>();
        if (id < 0 || id > INT32_MAX) {
            throw ValidationError(context + ": token id " + std::to_string(id) +
                                  " out of range");
        }
        tokens.push_back(static_cast<std::int32_t>(id));
    }
    return tokens;
}

}  // namespace

void validate_sequence(const TokenSequence& seq, int vocab_size, const std::string& what) {
    if (seq.tokens.empty()) {
        throw ValidationError(what + ": empty sequence");
    }
    for (const std::int32_t id : seq.tokens) {
        if (id < 0 || id >= vocab_size) {
            throw ValidationError(what + ": token id " + std::to_string(id) +
                                  " outside vocabulary of size " + std::to_string(vocab_size));
        }
    }
}

void validate_pair(const PreferencePair& pair, int vocab_size, const std::string& what) {
    validate_sequence(pair.prompt, vocab_size, what + ".prompt");
    validate_sequence(pair.chosen, vocab_size, what + ".chosen");
    validate_sequence(pair.rejected, vocab_size, what + ".rejected");
    if (pair.chosen.tokens == pair.rejected.tokens) {
        throw ValidationError(what + ": chosen and rejected responses are identical");
    }
}

std::vector<PreferencePair> load_jsonl(const std::string& path, int vocab_size) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }

    std::vector<PreferencePair> pairs;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const std::string context = path + ":" + std::to_string(line_no);

        ordered_json obj;
        try {
            obj = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError(context + ": " + e.what());
        }
        if (!obj.is_object()) {
            throw ValidationError(context + ": expected a JSON object");
        }
        for (const auto& [key, value] : obj.items()) {
            (void)value;
            if (key != "prompt" && key != "chosen" && key != "rejected" && key != "pair_id") {
                throw ValidationError(context + ": unknown key '" + key + "'");
            }
        }
        for (const char* field : {"prompt", "chosen", "rejected"}) {
            if (!obj.contains(field)) {
                throw ValidationError(context + ": missing field '" + std::string(field) + "'");
            }
        }

        PreferencePair pair;
        pair.prompt.tokens = parse_token_array(obj["prompt"], context + ".prompt");
        pair.chosen.tokens = parse_token_array(obj["chosen"], context + ".chosen");
        pair.rejected.tokens = parse_token_array(obj["rejected"], context + ".rejected");
        if (obj.contains("pair_id")) {
            if (!obj["pair_id"].is_number_unsigned() && !obj["pair_id"].is_number_integer()) {
                throw ValidationError(context + ": pair_id must be an integer");
            }
            const auto id = obj["pair_id"].get<std::int64_t>();
            if (id < 0) {
                throw ValidationError(context + ": pair_id must be non-negative");
            }
            pair.pair_id = static_cast<std::uint64_t>(id);
        } else {
            pair.pair_id = line_no - 1;
        }
        validate_pair(pair, vocab_size, context);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void save_jsonl(const std::string& path, const std::vector<PreferencePair>& pairs) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open " + path + " for writing");
    }
    for (const PreferencePair& pair : pairs) {
        ordered_json obj;
        obj["prompt"] = pair.prompt.tokens;
        obj["chosen"] = pair.chosen.tokens;
        obj["rejected"] = pair.rejected.tokens;
        obj["pair_id"] = pair.pair_id;
        out << obj.dump() << '\n';
    }
    if (!out) {
        throw ValidationError("failed writing " + path);
    }
}

CorpusSplit split_corpus(int n, double sft_fraction, std::uint64_t seed) {
    if (n < 2) {
        throw ValidationError("split_corpus: corpus size must be at least 2, got " +
                              std::to_string(n));
    }
    if (!(sft_fraction > 0.0) || !(sft_fraction < 1.0)) {
        throw ValidationError("split_corpus: sft_fraction must lie in (0,1)");
    }

    // Round-half-up on sft_fraction * n.
    const int n_sft = static_cast<int>(std::floor(sft_fraction * n + 0.5));

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    SplitMix64 rng(seed);
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    CorpusSplit split;
    split.sft_fraction = sft_fraction;
    split.seed = seed;
    split.sft_indices.assign(order.begin(), order.begin() + n_sft);
    split.pref_indices.assign(order.begin() + n_sft, order.end());
    std::sort(split.sft_indices.begin(), split.sft_indices.end());
    std::sort(split.pref_indices.begin(), split.pref_indices.end());
    return split;
}

namespace {

// Uniform token from [lo, hi). Integer-only path.
std::int32_t draw_token(SplitMix64& rng, int lo, int hi) {
    return lo + static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(hi - lo)));
}

TokenSequence draw_response(SplitMix64& rng, int len, int pool_split, int vocab_size,
                            int style_permille, bool prefer_low_pool) {
    TokenSequence seq;
    seq.tokens.reserve(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
        const bool on_style = rng.next_below(1000) < static_cast<std::uint64_t>(style_permille);
        const bool low_pool = prefer_low_pool == on_style;
        seq.tokens.push_back(low_pool ? draw_token(rng, 0, pool_split)
                                      : draw_token(rng, pool_split, vocab_size));
    }
    return seq;
}

}  // namespace

std::vector<PreferencePair> generate_synthetic(const SyntheticConfig& config) {
    if (config.n_pairs < 1) {
        throw ValidationError("generate_synthetic: n_pairs must be >= 1");
    }
    if (config.vocab_size < 4) {
        throw ValidationError("generate_synthetic: vocab_size must be >= 4, got " +
                              std::to_string(config.vocab_size));
    }
    if (config.max_len < 2) {
        throw ValidationError("generate_synthetic: max_len must be >= 2");
    }
    if (!(config.style_strength > 0.5) || !(config.style_strength <= 1.0)) {
        throw ValidationError("generate_synthetic: style_strength must lie in (0.5, 1]");
    }

    const int style_permille = static_cast<int>(std::llround(config.style_strength * 1000.0));
    const int pool_split = config.pool_split();
    // Responses of at least 4 tokens keep per-pair style frequencies well
    // separated; shorter corpora are still accepted for tiny max_len.
    const int resp_min = std::min(4, config.max_len);

    SplitMix64 rng(config.seed);
    std::vector<PreferencePair> pairs;
    pairs.reserve(static_cast<std::size_t>(config.n_pairs));
    for (int i = 0; i < config.n_pairs; ++i) {
        PreferencePair pair;
        pair.pair_id = static_cast<std::uint64_t>(i);

        const int prompt_len = 1 + static_cast<int>(rng.next_below(
                                       static_cast<std::uint64_t>(config.max_len)));
        pair.prompt.tokens.reserve(static_cast<std::size_t>(prompt_len));
        for (int t = 0; t < prompt_len; ++t) {
            pair.prompt.tokens.push_back(draw_token(rng, 0, config.vocab_size));
        }

        const auto draw_len = [&] {
            return resp_min + static_cast<int>(rng.next_below(
                                  static_cast<std::uint64_t>(config.max_len - resp_min + 1)));
        };
        pair.chosen = draw_response(rng, draw_len(), pool_split, config.vocab_size,
                                    style_permille, /*prefer_low_pool=*/true);
        do {
            pair.rejected = draw_response(rng, draw_len(), pool_split, config.vocab_size,
                                          style_permille, /*prefer_low_pool=*/false);
        } while (pair.rejected.tokens == pair.chosen.tokens);

        validate_pair(pair, config.vocab_size, "generate_synthetic pair " + std::to_string(i));
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace slime
