#pragma once

#include <Eigen/Dense>

#include "slime/common.hpp"
#include "slime/logprob.hpp"
#include "slime/math.hpp"

namespace slime {

// Objective selector shared by trainer and CLI.
enum class Objective { slime, dpo, simpo };

const char* objective_name(Objective objective);
Objective parse_objective(const std::string& name);

// Weights and margins of the composite loss. Defaults are the reference
// configuration; the enable_* switches drive the ablation variants.
struct SlimeHyperParams {
    double lambda_w = 0.1;   // anchoring weight
    double lambda_l = 0.1;   // stabilizing penalty weight
    double lambda_d = 1.0;   // distance loss weight
    double delta = 1.25;     // stabilizer threshold shift
    double margin_hard = 1.5;  // m_h, loss is exactly zero at or beyond it
    double margin_soft = 1.0;  // m_s, center of the sigmoid gate
    double kappa = 2.5;        // soft-margin sharpness
    double exponent = 2.5;     // p, stabilizer penalty exponent

    bool enable_chosen = true;
    bool enable_rejected = true;
    bool enable_soft = true;
    bool enable_hard = true;

    void validate() const {
        if (lambda_w < 0.0 || lambda_l < 0.0 || lambda_d < 0.0) {
            throw ValidationError("slime weights lambda_w/lambda_l/lambda_d must be >= 0");
        }
        if (!(kappa > 0.0)) {
            throw ValidationError("kappa must be > 0");
        }
        if (!(exponent >= 1.0)) {
            throw ValidationError("exponent p must be >= 1");
        }
    }
};

struct BaselineHyperParams {
    double dpo_beta = 0.1;
    double simpo_beta = 2.0;
    double simpo_gamma = 0.2;

    void validate() const {
        if (!(dpo_beta > 0.0) || !(simpo_beta > 0.0)) {
            throw ValidationError("dpo_beta and simpo_beta must be > 0");
        }
    }
};

// Per-batch loss components. total is the exact floating-point sum of the
// three stored components.
struct LossBreakdown {
    double loss_w = 0.0;
    double loss_l = 0.0;
    double loss_dist = 0.0;
    double total = 0.0;
    Eigen::VectorXd per_pair_delta;
};

// L_w for one pair: -lambda_w * l̄_w, or 0 when the anchor is ablated.
inline double chosen_loss(double lbar_w, const SlimeHyperParams& hp) {
    if (!hp.enable_chosen) {
        return 0.0;
    }
    return -hp.lambda_w * lbar_w;
}

// Stabilizer integrand for a single rejected token: softplus(-l_t - delta)^p,
// without the lambda_l weight.
inline double rejected_penalty_term(double token_logprob, const SlimeHyperParams& hp) {
    return std::pow(softplus(-token_logprob - hp.delta), hp.exponent);
}

// L_l for one rejected sequence: lambda_l * mean_t softplus(-l_t - delta)^p
// over unmasked tokens. Throws on an empty token set.
double rejected_penalty(const Eigen::VectorXd& token_logprobs, const MaskArray& mask,
                        const SlimeHyperParams& hp);
double rejected_penalty(const Eigen::VectorXd& token_logprobs, const SlimeHyperParams& hp);

// L_dist for one pair: lambda_d * ReLU(m_h - Delta) * sigmoid(-kappa*(Delta - m_s)).
// Ablations replace the disabled factor by 1; with both factors disabled the
// component vanishes entirely.
inline double dual_margin_loss(double delta_margin, const SlimeHyperParams& hp) {
    if (!hp.enable_hard && !hp.enable_soft) {
        return 0.0;
    }
    const double hard = hp.enable_hard ? relu(hp.margin_hard - delta_margin) : 1.0;
    if (hard == 0.0) {
        return 0.0;
    }
    const double soft =
        hp.enable_soft ? sigmoid(-hp.kappa * (delta_margin - hp.margin_soft)) : 1.0;
    return hp.lambda_d * hard * soft;
}

// Batch objective: every component is a per-pair mean (token-level terms are
// averaged within each sequence first, so pairs contribute equally regardless
// of length).
LossBreakdown slime_total(const LogProbBatch& batch, const SlimeHyperParams& hp);

// DPO: -ln sigma(beta * (policy log-ratio - reference log-ratio)), log-ratios
// over raw sequence log-probability sums.
inline double dpo_loss(double policy_logratio, double ref_logratio,
                       const BaselineHyperParams& hp) {
    return neg_log_sigmoid(hp.dpo_beta * (policy_logratio - ref_logratio));
}

// SimPO: -ln sigma(beta * (l̄_w - l̄_l) - gamma), length-normalized.
inline double simpo_loss(double lbar_w, double lbar_l, const BaselineHyperParams& hp) {
    return neg_log_sigmoid(hp.simpo_beta * (lbar_w - lbar_l) - hp.simpo_gamma);
}

// Batch means of the baseline losses. DPO always works on raw sums (its
// log-ratios are unnormalized); SimPO always on length-normalized means.
double dpo_batch_loss(const LogProbBatch& batch, const LogProbBatch& ref_batch,
                      const BaselineHyperParams& hp);
double simpo_batch_loss(const LogProbBatch& batch, const BaselineHyperParams& hp);

}  // namespace slime
