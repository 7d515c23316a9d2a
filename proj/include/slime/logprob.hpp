#pragma once

#include <Eigen/Dense>
#include <vector>

#include "slime/policy.hpp"
#include "slime/prefdata.hpp"

namespace slime {

using MaskArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Per-token log-probabilities of one pair's responses under a policy.
struct PairLogProbs {
    Eigen::VectorXd chosen;
    Eigen::VectorXd rejected;
};

// Token log-probs and per-sequence aggregates for a batch of pairs.
// seq_mean_* hold the length-normalized means l̄(y) by default; with
// length_normalized = false they hold raw sums instead (the unnormalized
// reading of the margin, kept selectable for study).
struct LogProbBatch {
    std::vector<Eigen::VectorXd> chosen;
    std::vector<Eigen::VectorXd> rejected;
    std::vector<MaskArray> chosen_mask;
    std::vector<MaskArray> rejected_mask;
    Eigen::VectorXd seq_mean_chosen;    // l̄_w per pair
    Eigen::VectorXd seq_mean_rejected;  // l̄_l per pair
    bool length_normalized = true;

    int size() const noexcept { return static_cast<int>(chosen.size()); }
};

// log pi(y_t | x, y_<t) for every position of both responses.
PairLogProbs token_logprobs(const PolicyModel& policy, const PreferencePair& pair);

// Arithmetic mean over unmasked positions, accumulated strictly left to
// right so results are reproducible. Throws if nothing is unmasked.
double sequence_mean(const Eigen::VectorXd& token_logprobs, const MaskArray& mask);
double sequence_mean(const Eigen::VectorXd& token_logprobs);

double sequence_sum(const Eigen::VectorXd& token_logprobs, const MaskArray& mask);
double sequence_sum(const Eigen::VectorXd& token_logprobs);

// Delta = l̄_w - l̄_l.
inline double margin(double lbar_w, double lbar_l) { return lbar_w - lbar_l; }

LogProbBatch make_logprob_batch(const PolicyModel& policy,
                                const std::vector<PreferencePair>& pairs,
                                bool length_normalize = true);

}  // namespace slime
