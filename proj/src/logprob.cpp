#include "slime/logprob.hpp"

#include "slime/common.hpp"

namespace slime {

PairLogProbs token_logprobs(const PolicyModel& policy, const PreferencePair& pair) {
    PairLogProbs result;
    result.chosen = forward(policy, pair.prompt, pair.chosen);
    result.rejected = forward(policy, pair.prompt, pair.rejected);
    return result;
}

double sequence_mean(const Eigen::VectorXd& token_logprobs, const MaskArray& mask) {
    if (mask.size() != token_logprobs.size()) {
        throw ValidationError("sequence_mean: mask size mismatch");
    }
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index t = 0; t < token_logprobs.size(); ++t) {
        if (mask[t]) {
            sum += token_logprobs[t];
            ++count;
        }
    }
    if (count == 0) {
        throw ValidationError("sequence_mean: no unmasked positions (|y| = 0)");
    }
    return sum / count;
}

double sequence_mean(const Eigen::VectorXd& token_logprobs) {
    return sequence_mean(token_logprobs, MaskArray::Constant(token_logprobs.size(), true));
}

double sequence_sum(const Eigen::VectorXd& token_logprobs, const MaskArray& mask) {
    if (mask.size() != token_logprobs.size()) {
        throw ValidationError("sequence_sum: mask size mismatch");
    }
    double sum = 0.0;
    for (Eigen::Index t = 0; t < token_logprobs.size(); ++t) {
        if (mask[t]) {
            sum += token_logprobs[t];
        }
    }
    return sum;
}

double sequence_sum(const Eigen::VectorXd& token_logprobs) {
    return sequence_sum(token_logprobs, MaskArray::Constant(token_logprobs.size(), true));
}

LogProbBatch make_logprob_batch(const PolicyModel& policy,
                                const std::vector<PreferencePair>& pairs,
                                bool length_normalize) {
    LogProbBatch batch;
    const auto n = static_cast<int>(pairs.size());
    batch.chosen.reserve(pairs.size());
    batch.rejected.reserve(pairs.size());
    batch.chosen_mask.reserve(pairs.size());
    batch.rejected_mask.reserve(pairs.size());
    batch.seq_mean_chosen.resize(n);
    batch.seq_mean_rejected.resize(n);
    batch.length_normalized = length_normalize;

    for (int i = 0; i < n; ++i) {
        PairLogProbs lp = token_logprobs(policy, pairs[static_cast<std::size_t>(i)]);
        const MaskArray mask_w = MaskArray::Constant(lp.chosen.size(), true);
        const MaskArray mask_l = MaskArray::Constant(lp.rejected.size(), true);
        batch.seq_mean_chosen[i] = length_normalize ? sequence_mean(lp.chosen, mask_w)
                                                    : sequence_sum(lp.chosen, mask_w);
        batch.seq_mean_rejected[i] = length_normalize ? sequence_mean(lp.rejected, mask_l)
                                                      : sequence_sum(lp.rejected, mask_l);
        batch.chosen.push_back(std::move(lp.chosen));
        batch.rejected.push_back(std::move(lp.rejected));
        batch.chosen_mask.push_back(mask_w);
        batch.rejected_mask.push_back(mask_l);
    }
    return batch;
}

}  // namespace slime
