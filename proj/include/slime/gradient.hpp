#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slime/objective.hpp"

namespace slime {

// d/d l̄_w of the anchoring term: the constant -lambda_w (0 when ablated).
inline double grad_chosen(const SlimeHyperParams& hp) {
    return hp.enable_chosen ? -hp.lambda_w : 0.0;
}

// d/d l_t of the stabilizing penalty for one rejected token:
//   -p * lambda_l * softplus(-l_t - delta)^(p-1) * sigmoid(-l_t - delta)
// divided by the token count used in the forward mean.
inline double grad_rejected_token(double token_logprob, const SlimeHyperParams& hp,
                                  int token_count = 1) {
    if (!hp.enable_rejected) {
        return 0.0;
    }
    const double u = -token_logprob - hp.delta;
    const double raw = -hp.exponent * hp.lambda_l *
                       std::pow(softplus(u), hp.exponent - 1.0) * sigmoid(u);
    return raw / token_count;
}

// d/d Delta of the distance loss. Zero on the hard-margin deadzone; below it,
//   -lambda_d * (v + kappa * u * v * (1 - v)),  u = m_h - Delta,
//   v = sigmoid(-kappa * (Delta - m_s)).
// Ablation semantics mirror dual_margin_loss: a disabled factor is the
// constant 1, and with both factors disabled the component vanishes.
inline double grad_dual_margin(double delta_margin, const SlimeHyperParams& hp) {
    if (!hp.enable_hard && !hp.enable_soft) {
        return 0.0;
    }
    if (hp.enable_hard && delta_margin >= hp.margin_hard) {
        return 0.0;
    }
    const double v = hp.enable_soft ? sigmoid(-hp.kappa * (delta_margin - hp.margin_soft)) : 1.0;
    if (!hp.enable_hard) {
        return -hp.lambda_d * hp.kappa * v * (1.0 - v);
    }
    const double u = hp.margin_hard - delta_margin;
    return -hp.lambda_d * (v + hp.kappa * u * v * (1.0 - v));
}

// Chain rule through Delta = l̄_w - l̄_l: the distance gradient lands with
// opposite signs on the two sequence means.
inline std::pair<double, double> chain_to_sequences(double d_dist_d_delta) {
    return {d_dist_d_delta, -d_dist_d_delta};
}

// Assembled per-pair gradient of the full objective with respect to the
// sequence- and token-level log-probability quantities.
struct GradientBundle {
    double d_loss_d_lbar_w = 0.0;
    double d_loss_d_lbar_l = 0.0;
    Eigen::VectorXd d_loss_d_token_l;  // stabilizer part, per rejected token
    double d_dist_d_delta = 0.0;
};

GradientBundle slime_pair_gradient(double lbar_w, double lbar_l,
                                   const Eigen::VectorXd& rejected_token_logprobs,
                                   const SlimeHyperParams& hp);

// Central difference (f(x+h) - f(x-h)) / (2h). Throws if either evaluation
// is non-finite.
double finite_difference(const std::function<double(double)>& fn, double point, double step);

struct GradcheckRow {
    std::string component;
    double point = 0.0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradcheckReport {
    std::vector<GradcheckRow> rows;
    double max_rel_error_chosen = 0.0;
    double max_rel_error_rejected = 0.0;
    double max_rel_error_dual_margin = 0.0;

    double max_rel_error() const;
    const GradcheckRow* worst_row() const;
};

struct GradcheckOptions {
    int n_points = 1000;
    std::uint64_t seed = 0;
    double fd_step = 1e-5;
    // Test hook: scales every analytic value by (1 + perturbation) inside the
    // sweep so mutation sensitivity of the check itself can be exercised.
    double analytic_perturbation = 0.0;
};

// Compares each closed-form gradient against the finite-difference oracle on
// seeded sample points: Delta in [-5, 5] (excluding the 1e-3 neighborhood of
// the hard-margin kink), l_t in [-12, 0], l̄_w in [-10, 0].
GradcheckReport gradcheck_sweep(const SlimeHyperParams& hp, const GradcheckOptions& options);

inline GradcheckReport gradcheck_sweep(const SlimeHyperParams& hp, int n_points,
                                       std::uint64_t seed) {
    GradcheckOptions options;
    options.n_points = n_points;
    options.seed = seed;
    return gradcheck_sweep(hp, options);
}

// CSV report: component, point, analytic, numeric, rel_error.
void write_gradcheck_csv(const GradcheckReport& report, const std::string& path);

}  // namespace slime
