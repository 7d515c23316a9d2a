#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slime/gradient.hpp"
#include "slime/objective.hpp"
#include "slime/policy.hpp"

namespace slime {

// Alignment-stage optimization settings. The learning-rate schedule is
// linear-to-zero with no warmup and there is no gradient clipping anywhere.
struct TrainConfig {
    Objective objective = Objective::slime;
    double lr_init = 5e-3;  // desk-scale default for the toy policy
    int epochs = 1;
    int batch_size = 16;
    int eval_every = 50;
    std::uint64_t seed = 0;
    double weight_decay = 0.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    bool length_normalize = true;   // sequence aggregate for the slime margin
    double holdout_fraction = 0.1;  // held-out evaluation slice

    int vocab_size = 64;
    int context_window = 4;
    int embed_dim = 32;

    void validate() const;
};

// One evaluation snapshot on the held-out slice. Sequence-level likelihood
// metrics are always length-normalized means so runs of different objectives
// stay comparable.
struct MetricsRow {
    int step = 0;
    double mean_delta = 0.0;
    double preference_accuracy = 0.0;
    double mean_chosen_loglik = 0.0;    // l̄_w averaged over pairs
    double mean_rejected_loglik = 0.0;  // l̄_l averaged over pairs
    double min_rejected_token_logprob = 0.0;
    double loss_w = 0.0;
    double loss_l = 0.0;
    double loss_dist = 0.0;
    double loss_total = 0.0;
};

struct OptimizerState {
    ParameterGradients first_moment;
    ParameterGradients second_moment;
    std::int64_t step = 0;
};

OptimizerState init_optimizer_state(const PolicyModel& model);

// One AdamW update: bias-corrected moments, decay decoupled from the
// gradient term, both applied against the pre-update parameters. Throws
// TrainingAbort naming the parameter block on any non-finite gradient.
void adamw_step(PolicyModel& model, const ParameterGradients& grads, OptimizerState& state,
                double lr, const TrainConfig& config);

// lr_init * (1 - step / total_steps); exact at both endpoints.
double lr_at(std::int64_t step, std::int64_t total_steps, double lr_init);

// Batch-mean loss of the selected objective. ref_batch is required for DPO
// and ignored otherwise.
double batch_loss(Objective objective, const LogProbBatch& batch, const LogProbBatch* ref_batch,
                  const SlimeHyperParams& hp, const BaselineHyperParams& bhp);

// Upstream dL/dl_t of the batch-mean loss for every token of every pair,
// assembled from the closed-form component gradients.
std::vector<PairTokenGradients> batch_token_gradients(Objective objective,
                                                      const LogProbBatch& batch,
                                                      const LogProbBatch* ref_batch,
                                                      const SlimeHyperParams& hp,
                                                      const BaselineHyperParams& bhp);

MetricsRow evaluate_metrics(int step, const PolicyModel& model, const PolicyModel* ref_model,
                            const std::vector<PreferencePair>& eval_pairs,
                            const TrainConfig& config, const SlimeHyperParams& hp,
                            const BaselineHyperParams& bhp);

struct TrainResult {
    PolicyModel model;
    std::vector<MetricsRow> history;
};

// Full alignment run: seeded shuffled mini-batches, analytic gradients,
// AdamW with the linear schedule, periodic held-out metrics. Deterministic
// for a fixed (corpus, config, hyperparameter) triple.
TrainResult train(const std::vector<PreferencePair>& corpus, const TrainConfig& config,
                  const SlimeHyperParams& hp, const BaselineHyperParams& bhp);

// Same, but starting from a caller-supplied model (shared snapshot for
// controlled comparisons and ablations).
TrainResult train_from(PolicyModel model, const std::vector<PreferencePair>& corpus,
                       const TrainConfig& config, const SlimeHyperParams& hp,
                       const BaselineHyperParams& bhp);

struct CompareResult {
    std::vector<Objective> objectives;
    std::vector<TrainResult> runs;
};

// Trains {slime, simpo, dpo} from one shared initial snapshot and seed, so
// step-0 metrics coincide across objectives.
CompareResult compare_objectives(const std::vector<PreferencePair>& corpus,
                                 const TrainConfig& config, const SlimeHyperParams& hp,
                                 const BaselineHyperParams& bhp);

void write_metrics_csv(const std::vector<MetricsRow>& history, const std::string& path);

struct EndToEndProbeRow {
    std::string component;
    std::int64_t param_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct EndToEndReport {
    std::vector<EndToEndProbeRow> rows;
    double max_rel_error = 0.0;
};

struct EndToEndOptions {
    int n_probes = 24;  // per objective
    std::uint64_t seed = 0;
    double fd_step = 1e-5;
    bool length_normalize = true;
};

// Finite-difference check of the composed loss gradient with respect to
// randomly probed model parameters, for each of the three objectives.
EndToEndReport end_to_end_gradcheck(const PolicyModel& model,
                                    const std::vector<PreferencePair>& pairs,
                                    const SlimeHyperParams& hp, const BaselineHyperParams& bhp,
                                    const EndToEndOptions& options);

void write_end_to_end_csv(const EndToEndReport& report, const std::string& path);

}  // namespace slime
