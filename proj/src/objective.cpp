#include "slime/objective.hpp"

namespace slime {

const char* objective_name(Objective objective) {
    switch (objective) {
        case Objective::slime: return "slime";
        case Objective::dpo: return "dpo";
        case Objective::simpo: return "simpo";
    }
    return "unknown";
}

Objective parse_objective(const std::string& name) {
    if (name == "slime") {
        return Objective::slime;
    }
    if (name == "dpo") {
        return Objective::dpo;
    }
    if (name == "simpo") {
        return Objective::simpo;
    }
    throw ValidationError("unknown objective '" + name + "' (expected slime, dpo, or simpo)");
}

double rejected_penalty(const Eigen::VectorXd& token_logprobs, const MaskArray& mask,
                        const SlimeHyperParams& hp) {
    if (!hp.enable_rejected) {
        return 0.0;
    }
    if (mask.size() != token_logprobs.size()) {
        throw ValidationError("rejected_penalty: mask size mismatch");
    }
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index t = 0; t < token_logprobs.size(); ++t) {
        if (mask[t]) {
            sum += rejected_penalty_term(token_logprobs[t], hp);
            ++count;
        }
    }
    if (count == 0) {
        throw ValidationError("rejected_penalty: empty token set");
    }
    return hp.lambda_l * (sum / count);
}

double rejected_penalty(const Eigen::VectorXd& token_logprobs, const SlimeHyperParams& hp) {
    return rejected_penalty(token_logprobs, MaskArray::Constant(token_logprobs.size(), true),
                            hp);
}

LossBreakdown slime_total(const LogProbBatch& batch, const SlimeHyperParams& hp) {
    if (batch.size() == 0) {
        throw ValidationError("slime_total: empty batch");
    }
    hp.validate();

    const int n = batch.size();
    LossBreakdown breakdown;
    breakdown.per_pair_delta.resize(n);

    double sum_w = 0.0;
    double sum_l = 0.0;
    double sum_dist = 0.0;
    for (int i = 0; i < n; ++i) {
        const double delta_margin = margin(batch.seq_mean_chosen[i], batch.seq_mean_rejected[i]);
        breakdown.per_pair_delta[i] = delta_margin;
        sum_w += chosen_loss(batch.seq_mean_chosen[i], hp);
        sum_l += rejected_penalty(batch.rejected[static_cast<std::size_t>(i)],
                                  batch.rejected_mask[static_cast<std::size_t>(i)], hp);
        sum_dist += dual_margin_loss(delta_margin, hp);
    }
    breakdown.loss_w = sum_w / n;
    breakdown.loss_l = sum_l / n;
    breakdown.loss_dist = sum_dist / n;
    breakdown.total = breakdown.loss_w + breakdown.loss_l + breakdown.loss_dist;
    return breakdown;
}

double dpo_batch_loss(const LogProbBatch& batch, const LogProbBatch& ref_batch,
                      const BaselineHyperParams& hp) {
    if (batch.size() == 0) {
        throw ValidationError("dpo_batch_loss: empty batch");
    }
    if (ref_batch.size() != batch.size()) {
        throw ValidationError("dpo_batch_loss: reference batch size mismatch");
    }
    hp.validate();
    double sum = 0.0;
    for (int i = 0; i < batch.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const double policy_logratio =
            sequence_sum(batch.chosen[idx]) - sequence_sum(batch.rejected[idx]);
        const double ref_logratio =
            sequence_sum(ref_batch.chosen[idx]) - sequence_sum(ref_batch.rejected[idx]);
        sum += dpo_loss(policy_logratio, ref_logratio, hp);
    }
    return sum / batch.size();
}

double simpo_batch_loss(const LogProbBatch& batch, const BaselineHyperParams& hp) {
    if (batch.size() == 0) {
        throw ValidationError("simpo_batch_loss: empty batch");
    }
    hp.validate();
    double sum = 0.0;
    for (int i = 0; i < batch.size(); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        sum += simpo_loss(sequence_mean(batch.chosen[idx]), sequence_mean(batch.rejected[idx]),
                          hp);
    }
    return sum / batch.size();
}

}  // namespace slime
