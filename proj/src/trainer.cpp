#include "slime/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace slime {

void TrainConfig::validate() const {
    if (lr_init < 0.0) {
        throw ValidationError("lr_init must be >= 0");
    }
    if (epochs < 1) {
        throw ValidationError("epochs must be >= 1");
    }
    if (batch_size < 1) {
        throw ValidationError("batch_size must be >= 1");
    }
    if (eval_every < 1) {
        throw ValidationError("eval_every must be >= 1");
    }
    if (!(holdout_fraction > 0.0) || !(holdout_fraction < 1.0)) {
        throw ValidationError("holdout_fraction must lie in (0,1)");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ValidationError("adam betas must lie in [0,1)");
    }
    if (!(adam_epsilon > 0.0)) {
        throw ValidationError("adam_epsilon must be > 0");
    }
    if (weight_decay < 0.0) {
        throw ValidationError("weight_decay must be >= 0");
    }
    if (vocab_size < 1 || context_window < 1 || embed_dim < 1) {
        throw ValidationError("model dims must all be >= 1");
    }
}

OptimizerState init_optimizer_state(const PolicyModel& model) {
    OptimizerState state;
    state.first_moment = zero_gradients(model);
    state.second_moment = zero_gradients(model);
    state.step = 0;
    return state;
}

namespace {

template <typename Block>
void adamw_update_block(Block& param, const Block& grad, Block& m, Block& v, double lr,
                        double bc1, double bc2, const TrainConfig& config, const char* name) {
    if (!grad.allFinite()) {
        const std::string what = std::string("adamw_step: non-finite gradient in block '") +
                                 name + "'";
        throw TrainingAbort(what, std::string("parameter block: ") + name);
    }
    m.array() = config.adam_beta1 * m.array() + (1.0 - config.adam_beta1) * grad.array();
    v.array() =
        config.adam_beta2 * v.array() + (1.0 - config.adam_beta2) * grad.array().square();
    // Decoupled decay first, then the moment step; both read pre-update params.
    param.array() *= (1.0 - lr * config.weight_decay);
    param.array() -=
        lr * ((m.array() / bc1) / ((v.array() / bc2).sqrt() + config.adam_epsilon));
}

}  // namespace

void adamw_step(PolicyModel& model, const ParameterGradients& grads, OptimizerState& state,
                double lr, const TrainConfig& config) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));
    adamw_update_block(model.embedding, grads.embedding, state.first_moment.embedding,
                       state.second_moment.embedding, lr, bc1, bc2, config, "embedding");
    adamw_update_block(model.agg_weights, grads.agg_weights, state.first_moment.agg_weights,
                       state.second_moment.agg_weights, lr, bc1, bc2, config, "agg_weights");
    adamw_update_block(model.projection, grads.projection, state.first_moment.projection,
                       state.second_moment.projection, lr, bc1, bc2, config, "projection");
    adamw_update_block(model.bias, grads.bias, state.first_moment.bias,
                       state.second_moment.bias, lr, bc1, bc2, config, "bias");
}

double lr_at(std::int64_t step, std::int64_t total_steps, double lr_init) {
    if (total_steps < 1) {
        throw ValidationError("lr_at: total_steps must be >= 1");
    }
    if (step < 0 || step > total_steps) {
        throw ValidationError("lr_at: step " + std::to_string(step) + " outside [0, " +
                              std::to_string(total_steps) + "]");
    }
    return lr_init *
           (static_cast<double>(total_steps - step) / static_cast<double>(total_steps));
}

double batch_loss(Objective objective, const LogProbBatch& batch, const LogProbBatch* ref_batch,
                  const SlimeHyperParams& hp, const BaselineHyperParams& bhp) {
    switch (objective) {
        case Objective::slime:
            return slime_total(batch, hp).total;
        case Objective::dpo:
            if (ref_batch == nullptr) {
                throw ValidationError("batch_loss: dpo requires a reference batch");
            }
            return dpo_batch_loss(batch, *ref_batch, bhp);
        case Objective::simpo:
            return simpo_batch_loss(batch, bhp);
    }
    throw ValidationError("batch_loss: unknown objective");
}

std::vector<PairTokenGradients> batch_token_gradients(Objective objective,
                                                      const LogProbBatch& batch,
                                                      const LogProbBatch* ref_batch,
                                                      const SlimeHyperParams& hp,
                                                      const BaselineHyperParams& bhp) {
    const int n = batch.size();
    if (n == 0) {
        throw ValidationError("batch_token_gradients: empty batch");
    }
    std::vector<PairTokenGradients> upstream(static_cast<std::size_t>(n));
    const double inv_n = 1.0 / n;

    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const auto len_w = static_cast<int>(batch.chosen[idx].size());
        const auto len_l = static_cast<int>(batch.rejected[idx].size());

        switch (objective) {
            case Objective::slime: {
                const GradientBundle bundle =
                    slime_pair_gradient(batch.seq_mean_chosen[i], batch.seq_mean_rejected[i],
                                        batch.rejected[idx], hp);
                const double w_scale = batch.length_normalized ? 1.0 / len_w : 1.0;
                const double l_scale = batch.length_normalized ? 1.0 / len_l : 1.0;
                upstream[idx].chosen = Eigen::VectorXd::Constant(
                    len_w, bundle.d_loss_d_lbar_w * w_scale * inv_n);
                upstream[idx].rejected =
                    (bundle.d_loss_d_token_l.array() + bundle.d_loss_d_lbar_l * l_scale) *
                    inv_n;
                break;
            }
            case Objective::dpo: {
                if (ref_batch == nullptr) {
                    throw ValidationError("batch_token_gradients: dpo requires a reference batch");
                }
                const double policy_logratio =
                    sequence_sum(batch.chosen[idx]) - sequence_sum(batch.rejected[idx]);
                const double ref_logratio = sequence_sum(ref_batch->chosen[idx]) -
                                            sequence_sum(ref_batch->rejected[idx]);
                const double z = bhp.dpo_beta * (policy_logratio - ref_logratio);
                const double pressure = bhp.dpo_beta * sigmoid(-z);
                upstream[idx].chosen = Eigen::VectorXd::Constant(len_w, -pressure * inv_n);
                upstream[idx].rejected = Eigen::VectorXd::Constant(len_l, pressure * inv_n);
                break;
            }
            case Objective::simpo: {
                const double z = bhp.simpo_beta * (sequence_mean(batch.chosen[idx]) -
                                                   sequence_mean(batch.rejected[idx])) -
                                 bhp.simpo_gamma;
                const double pressure = bhp.simpo_beta * sigmoid(-z);
                upstream[idx].chosen =
                    Eigen::VectorXd::Constant(len_w, -pressure / len_w * inv_n);
                upstream[idx].rejected =
                    Eigen::VectorXd::Constant(len_l, pressure / len_l * inv_n);
                break;
            }
        }
    }
    return upstream;
}

MetricsRow evaluate_metrics(int step, const PolicyModel& model, const PolicyModel* ref_model,
                            const std::vector<PreferencePair>& eval_pairs,
                            const TrainConfig& config, const SlimeHyperParams& hp,
                            const BaselineHyperParams& bhp) {
    if (eval_pairs.empty()) {
        throw ValidationError("evaluate_metrics: empty evaluation slice");
    }
    const LogProbBatch batch = make_logprob_batch(model, eval_pairs, config.length_normalize);
    const int n = batch.size();

    MetricsRow row;
    row.step = step;
    double sum_w = 0.0;
    double sum_l = 0.0;
    double sum_delta = 0.0;
    int wins = 0;
    double min_rejected = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const double mean_w = batch.length_normalized ? batch.seq_mean_chosen[i]
                                                      : sequence_mean(batch.chosen[idx]);
        const double mean_l = batch.length_normalized ? batch.seq_mean_rejected[i]
                                                      : sequence_mean(batch.rejected[idx]);
        const double delta = margin(mean_w, mean_l);
        sum_w += mean_w;
        sum_l += mean_l;
        sum_delta += delta;
        if (delta > 0.0) {
            ++wins;
        }
        min_rejected = std::min(min_rejected, batch.rejected[idx].minCoeff());
    }
    row.mean_delta = sum_delta / n;
    row.preference_accuracy = static_cast<double>(wins) / n;
    row.mean_chosen_loglik = sum_w / n;
    row.mean_rejected_loglik = sum_l / n;
    row.min_rejected_token_logprob = min_rejected;

    switch (config.objective) {
        case Objective::slime: {
            const LossBreakdown breakdown = slime_total(batch, hp);
            row.loss_w = breakdown.loss_w;
            row.loss_l = breakdown.loss_l;
            row.loss_dist = breakdown.loss_dist;
            row.loss_total = breakdown.total;
            break;
        }
        case Objective::dpo: {
            if (ref_model == nullptr) {
                throw ValidationError("evaluate_metrics: dpo requires a reference model");
            }
            const LogProbBatch ref_batch =
                make_logprob_batch(*ref_model, eval_pairs, config.length_normalize);
            row.loss_total = dpo_batch_loss(batch, ref_batch, bhp);
            break;
        }
        case Objective::simpo:
            row.loss_total = simpo_batch_loss(batch, bhp);
            break;
    }
    return row;
}

namespace {

void shuffle_indices(std::vector<int>& indices, SplitMix64& rng) {
    for (std::size_t i = indices.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(indices[i - 1], indices[j]);
    }
}

std::string batch_diagnostic(std::int64_t step, const std::vector<PreferencePair>& batch_pairs,
                             const LogProbBatch& batch, double loss) {
    std::ostringstream oss;
    oss << "non-finite loss " << loss << " at step " << step << "\npair_ids:";
    for (const PreferencePair& pair : batch_pairs) {
        oss << ' ' << pair.pair_id;
    }
    oss << "\nseq_mean_chosen:";
    for (int i = 0; i < batch.size(); ++i) {
        oss << ' ' << batch.seq_mean_chosen[i];
    }
    oss << "\nseq_mean_rejected:";
    for (int i = 0; i < batch.size(); ++i) {
        oss << ' ' << batch.seq_mean_rejected[i];
    }
    oss << '\n';
    return oss.str();
}

}  // namespace

TrainResult train_from(PolicyModel model, const std::vector<PreferencePair>& corpus,
                       const TrainConfig& config, const SlimeHyperParams& hp,
                       const BaselineHyperParams& bhp) {
    config.validate();
    hp.validate();
    bhp.validate();
    if (corpus.size() < 2) {
        throw ValidationError("train: corpus must contain at least 2 pairs");
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        validate_pair(corpus[i], config.vocab_size, "corpus pair " + std::to_string(i));
    }

    const int n = static_cast<int>(corpus.size());
    const int n_eval = std::clamp(
        static_cast<int>(std::llround(config.holdout_fraction * n)), 1, n - 1);

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    SplitMix64 eval_rng(derive_seed(config.seed, SeedStream::eval_split));
    shuffle_indices(order, eval_rng);

    std::vector<PreferencePair> eval_pairs;
    std::vector<PreferencePair> train_pairs;
    eval_pairs.reserve(static_cast<std::size_t>(n_eval));
    train_pairs.reserve(static_cast<std::size_t>(n - n_eval));
    for (int i = 0; i < n; ++i) {
        const PreferencePair& pair = corpus[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        if (i < n_eval) {
            eval_pairs.push_back(pair);
        } else {
            train_pairs.push_back(pair);
        }
    }

    const PolicyModel reference = snapshot(model);
    const int n_train = static_cast<int>(train_pairs.size());
    const std::int64_t steps_per_epoch = (n_train + config.batch_size - 1) / config.batch_size;
    const std::int64_t total_steps = static_cast<std::int64_t>(config.epochs) * steps_per_epoch;

    TrainResult result;
    result.history.push_back(
        evaluate_metrics(0, model, &reference, eval_pairs, config, hp, bhp));

    OptimizerState state = init_optimizer_state(model);
    SplitMix64 shuffle_rng(derive_seed(config.seed, SeedStream::shuffle));
    std::vector<int> train_order(static_cast<std::size_t>(n_train));
    for (int i = 0; i < n_train; ++i) {
        train_order[static_cast<std::size_t>(i)] = i;
    }

    std::int64_t global_step = 0;
    std::vector<PreferencePair> batch_pairs;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_indices(train_order, shuffle_rng);
        for (int start = 0; start < n_train; start += config.batch_size) {
            const int end = std::min(start + config.batch_size, n_train);
            batch_pairs.clear();
            for (int k = start; k < end; ++k) {
                batch_pairs.push_back(
                    train_pairs[static_cast<std::size_t>(train_order[static_cast<std::size_t>(k)])]);
            }

            const LogProbBatch batch =
                make_logprob_batch(model, batch_pairs, config.length_normalize);
            LogProbBatch ref_batch;
            const LogProbBatch* ref_ptr = nullptr;
            if (config.objective == Objective::dpo) {
                ref_batch = make_logprob_batch(reference, batch_pairs, config.length_normalize);
                ref_ptr = &ref_batch;
            }

            const double loss = batch_loss(config.objective, batch, ref_ptr, hp, bhp);
            if (!std::isfinite(loss)) {
                throw TrainingAbort("training aborted: non-finite loss at step " +
                                        std::to_string(global_step),
                                    batch_diagnostic(global_step, batch_pairs, batch, loss));
            }

            const std::vector<PairTokenGradients> upstream =
                batch_token_gradients(config.objective, batch, ref_ptr, hp, bhp);
            const ParameterGradients grads = backward(model, batch_pairs, upstream);
            const double lr = lr_at(global_step, total_steps, config.lr_init);
            adamw_step(model, grads, state, lr, config);
            ++global_step;

            if (global_step % config.eval_every == 0 && global_step != total_steps) {
                result.history.push_back(evaluate_metrics(static_cast<int>(global_step), model,
                                                          &reference, eval_pairs, config, hp,
                                                          bhp));
            }
        }
    }
    result.history.push_back(evaluate_metrics(static_cast<int>(total_steps), model, &reference,
                                              eval_pairs, config, hp, bhp));
    result.model = std::move(model);
    return result;
}

TrainResult train(const std::vector<PreferencePair>& corpus, const TrainConfig& config,
                  const SlimeHyperParams& hp, const BaselineHyperParams& bhp) {
    config.validate();
    return train_from(
        init_policy(config.vocab_size, config.context_window, config.embed_dim, config.seed),
        corpus, config, hp, bhp);
}

CompareResult compare_objectives(const std::vector<PreferencePair>& corpus,
                                 const TrainConfig& config, const SlimeHyperParams& hp,
                                 const BaselineHyperParams& bhp) {
    config.validate();
    const PolicyModel initial =
        init_policy(config.vocab_size, config.context_window, config.embed_dim, config.seed);

    CompareResult result;
    result.objectives = {Objective::slime, Objective::simpo, Objective::dpo};
    for (const Objective objective : result.objectives) {
        TrainConfig run_config = config;
        run_config.objective = objective;
        result.runs.push_back(train_from(initial, corpus, run_config, hp, bhp));
    }
    return result;
}

void write_metrics_csv(const std::vector<MetricsRow>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open " + path + " for writing");
    }
    out << "step,mean_delta,preference_accuracy,mean_chosen_loglik,mean_rejected_loglik,"
           "min_rejected_token_logprob,loss_w,loss_l,loss_dist,loss_total\n";
    char buf[512];
    for (const MetricsRow& row : history) {
        std::snprintf(buf, sizeof(buf),
                      "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.step,
                      row.mean_delta, row.preference_accuracy, row.mean_chosen_loglik,
                      row.mean_rejected_loglik, row.min_rejected_token_logprob, row.loss_w,
                      row.loss_l, row.loss_dist, row.loss_total);
        out << buf;
    }
    if (!out) {
        throw ValidationError("failed writing " + path);
    }
}

EndToEndReport end_to_end_gradcheck(const PolicyModel& model,
                                    const std::vector<PreferencePair>& pairs,
                                    const SlimeHyperParams& hp, const BaselineHyperParams& bhp,
                                    const EndToEndOptions& options) {
    if (pairs.empty()) {
        throw ValidationError("end_to_end_gradcheck: empty pair set");
    }
    if (options.n_probes < 1) {
        throw ValidationError("end_to_end_gradcheck: n_probes must be >= 1");
    }

    EndToEndReport report;
    SplitMix64 rng(derive_seed(options.seed, SeedStream::probe));
    const std::int64_t n_params = parameter_count(model);
    const double h = options.fd_step;

    // The DPO reference stays frozen at the unperturbed model.
    const LogProbBatch ref_batch = make_logprob_batch(model, pairs, options.length_normalize);

    for (const Objective objective : {Objective::slime, Objective::dpo, Objective::simpo}) {
        const LogProbBatch batch = make_logprob_batch(model, pairs, options.length_normalize);
        const std::vector<PairTokenGradients> upstream =
            batch_token_gradients(objective, batch, &ref_batch, hp, bhp);
        const ParameterGradients grads = backward(model, pairs, upstream);

        for (int k = 0; k < options.n_probes; ++k) {
            const auto index =
                static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n_params)));
            const double analytic = get_gradient_entry(grads, model, index);

            PolicyModel perturbed = model;
            const double original = get_parameter(model, index);
            set_parameter(perturbed, index, original + h);
            const double loss_hi =
                batch_loss(objective, make_logprob_batch(perturbed, pairs, options.length_normalize),
                           &ref_batch, hp, bhp);
            set_parameter(perturbed, index, original - h);
            const double loss_lo =
                batch_loss(objective, make_logprob_batch(perturbed, pairs, options.length_normalize),
                           &ref_batch, hp, bhp);
            const double numeric = (loss_hi - loss_lo) / (2.0 * h);

            EndToEndProbeRow row;
            row.component = std::string("e2e_") + objective_name(objective);
            row.param_index = index;
            row.analytic = analytic;
            row.numeric = numeric;
            // Tiny floor keeps finite-difference roundoff on near-zero
            // gradients from registering as relative error.
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            row.rel_error = std::abs(analytic - numeric) / denom;
            report.max_rel_error = std::max(report.max_rel_error, row.rel_error);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

void write_end_to_end_csv(const EndToEndReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open " + path + " for writing");
    }
    out << "component,param_index,analytic,numeric,rel_error\n";
    char buf[192];
    for (const EndToEndProbeRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%lld,%.17g,%.17g,%.17g\n", row.component.c_str(),
                      static_cast<long long>(row.param_index), row.analytic, row.numeric,
                      row.rel_error);
        out << buf;
    }
    if (!out) {
        throw ValidationError("failed writing " + path);
    }
}

}  // namespace slime
