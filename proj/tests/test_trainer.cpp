#include <doctest.h>

#include <cmath>

#include "slime/logprob.hpp"
#include "slime/trainer.hpp"

using namespace slime;

namespace {

bool models_identical(const PolicyModel& a, const PolicyModel& b) {
    return a.embedding == b.embedding && a.agg_weights == b.agg_weights &&
           a.projection == b.projection && a.bias == b.bias;
}

bool rows_identical(const MetricsRow& a, const MetricsRow& b) {
    return a.step == b.step && a.mean_delta == b.mean_delta &&
           a.preference_accuracy == b.preference_accuracy &&
           a.mean_chosen_loglik == b.mean_chosen_loglik &&
           a.mean_rejected_loglik == b.mean_rejected_loglik &&
           a.min_rejected_token_logprob == b.min_rejected_token_logprob &&
           a.loss_w == b.loss_w && a.loss_l == b.loss_l && a.loss_dist == b.loss_dist &&
           a.loss_total == b.loss_total;
}

TrainConfig small_config() {
    TrainConfig config;
    config.vocab_size = 16;
    config.context_window = 3;
    config.embed_dim = 8;
    config.batch_size = 8;
    config.eval_every = 4;
    return config;
}

}  // namespace

TEST_CASE("adamw_step fixed point on zero gradients") {
    const TrainConfig config = small_config();
    PolicyModel model = init_policy(16, 3, 8, 1);
    const PolicyModel before = model;
    OptimizerState state = init_optimizer_state(model);

    adamw_step(model, zero_gradients(model), state, 0.1, config);
    CHECK(models_identical(model, before));
    CHECK(state.step == 1);
}

TEST_CASE("adamw_step first update is roughly lr times the gradient sign") {
    const TrainConfig config = small_config();
    PolicyModel model = zero_policy(16, 3, 8);
    OptimizerState state = init_optimizer_state(model);

    ParameterGradients grads = zero_gradients(model);
    grads.bias[0] = 0.5;
    grads.bias[1] = -0.25;
    const double lr = 1e-2;
    adamw_step(model, grads, state, lr, config);

    // Bias correction makes m_hat = g and v_hat = g^2 on step one, so the
    // update is lr * g / (|g| + eps) = lr * sign(g) up to eps rounding.
    CHECK(model.bias[0] == doctest::Approx(-lr).epsilon(1e-6));
    CHECK(model.bias[1] == doctest::Approx(lr).epsilon(1e-6));
    CHECK(model.bias[2] == 0.0);
}

TEST_CASE("adamw_step decoupled decay shrinks parameters exactly") {
    TrainConfig config = small_config();
    config.weight_decay = 0.5;
    PolicyModel model = init_policy(16, 3, 8, 2);
    const PolicyModel before = model;
    OptimizerState state = init_optimizer_state(model);

    const double lr = 0.01;
    adamw_step(model, zero_gradients(model), state, lr, config);
    const double factor = 1.0 - lr * config.weight_decay;
    CHECK(model.embedding == (before.embedding * factor).eval());
    CHECK(model.projection == (before.projection * factor).eval());
}

TEST_CASE("adamw_step names the block holding a non-finite gradient") {
    const TrainConfig config = small_config();
    PolicyModel model = init_policy(16, 3, 8, 3);
    OptimizerState state = init_optimizer_state(model);
    ParameterGradients grads = zero_gradients(model);
    grads.projection(1, 2) = std::numeric_limits<double>::quiet_NaN();

    CHECK_THROWS_WITH_AS(adamw_step(model, grads, state, 0.01, config),
                         doctest::Contains("projection"), TrainingAbort);
}

TEST_CASE("lr_at follows the linear schedule exactly") {
    CHECK(lr_at(0, 100, 5e-7) == 5e-7);
    CHECK(lr_at(100, 100, 5e-7) == 0.0);
    CHECK(lr_at(50, 100, 5e-7) == 2.5e-7);

    CHECK_THROWS_AS(lr_at(101, 100, 5e-7), ValidationError);
    CHECK_THROWS_AS(lr_at(-1, 100, 5e-7), ValidationError);
    CHECK_THROWS_AS(lr_at(0, 0, 5e-7), ValidationError);

    double prev = lr_at(0, 37, 1e-3);
    for (int step = 1; step <= 37; ++step) {
        const double cur = lr_at(step, 37, 1e-3);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("train with lr_init zero leaves the model at its initialization") {
    const auto corpus = generate_synthetic(30, 16, 6, 1);
    TrainConfig config = small_config();
    config.lr_init = 0.0;

    const PolicyModel init = init_policy(config.vocab_size, config.context_window,
                                         config.embed_dim, config.seed);
    const TrainResult result = train(corpus, config, SlimeHyperParams{}, BaselineHyperParams{});
    CHECK(models_identical(result.model, init));
}

TEST_CASE("train is bit-deterministic for a fixed seed") {
    const auto corpus = generate_synthetic(60, 16, 6, 2);
    TrainConfig config = small_config();
    config.eval_every = 2;

    const TrainResult a = train(corpus, config, SlimeHyperParams{}, BaselineHyperParams{});
    const TrainResult b = train(corpus, config, SlimeHyperParams{}, BaselineHyperParams{});
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(rows_identical(a.history[i], b.history[i]));
    }
    CHECK(models_identical(a.model, b.model));
}

TEST_CASE("history brackets the run and respects eval_every") {
    const auto corpus = generate_synthetic(60, 16, 6, 2);
    TrainConfig config = small_config();  // 54 train pairs, batch 8 -> 7 steps
    config.eval_every = 3;

    const TrainResult result =
        train(corpus, config, SlimeHyperParams{}, BaselineHyperParams{});
    REQUIRE(result.history.size() >= 2);
    CHECK(result.history.front().step == 0);
    CHECK(result.history.back().step == 7);
    CHECK(result.history[1].step == 3);
    for (const MetricsRow& row : result.history) {
        CHECK(row.preference_accuracy >= 0.0);
        CHECK(row.preference_accuracy <= 1.0);
        CHECK(std::isfinite(row.mean_delta));
        CHECK(std::isfinite(row.loss_total));
    }
}

TEST_CASE("satiated batch with disabled anchors is an exact no-op") {
    // Every pair already beyond the hard margin and lambda_w = lambda_l = 0:
    // the whole gradient vanishes, so one step changes nothing (no decay).
    PolicyModel model = zero_policy(8, 2, 4);
    model.bias[0] = 12.0;
    model.bias[1] = 12.0;

    std::vector<PreferencePair> pairs(2);
    pairs[0].prompt.tokens = {2};
    pairs[0].chosen.tokens = {0, 1};
    pairs[0].rejected.tokens = {3, 4};
    pairs[0].pair_id = 0;
    pairs[1].prompt.tokens = {5};
    pairs[1].chosen.tokens = {1, 0};
    pairs[1].rejected.tokens = {6, 7};
    pairs[1].pair_id = 1;

    SlimeHyperParams hp;
    hp.lambda_w = 0.0;
    hp.lambda_l = 0.0;

    const LogProbBatch batch = make_logprob_batch(model, pairs, true);
    for (int i = 0; i < batch.size(); ++i) {
        REQUIRE(margin(batch.seq_mean_chosen[i], batch.seq_mean_rejected[i]) >=
                hp.margin_hard);
    }

    const auto upstream =
        batch_token_gradients(Objective::slime, batch, nullptr, hp, BaselineHyperParams{});
    const ParameterGradients grads = backward(model, pairs, upstream);

    const PolicyModel before = model;
    TrainConfig config = small_config();
    config.vocab_size = 8;
    OptimizerState state = init_optimizer_state(model);
    adamw_step(model, grads, state, 0.05, config);
    CHECK(models_identical(model, before));
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
    const auto corpus = generate_synthetic(30, 16, 6, 3);
    TrainConfig config = small_config();
    SlimeHyperParams hp;
    hp.exponent = 5000.0;  // overflows the stabilizer penalty immediately

    try {
        train(corpus, config, hp, BaselineHyperParams{});
        FAIL("expected TrainingAbort");
    } catch (const TrainingAbort& abort) {
        CHECK(std::string(abort.what()).find("step") != std::string::npos);
        CHECK(abort.diagnostic().find("pair_ids") != std::string::npos);
    }
}

TEST_CASE("compare_objectives shares the initial snapshot") {
    const auto corpus = generate_synthetic(60, 16, 6, 4);
    TrainConfig config = small_config();
    config.eval_every = 100;

    const CompareResult result =
        compare_objectives(corpus, config, SlimeHyperParams{}, BaselineHyperParams{});
    REQUIRE(result.runs.size() == 3);
    CHECK(result.objectives[0] == Objective::slime);
    CHECK(result.objectives[1] == Objective::simpo);
    CHECK(result.objectives[2] == Objective::dpo);

    const MetricsRow& r0 = result.runs[0].history.front();
    for (std::size_t i = 1; i < result.runs.size(); ++i) {
        const MetricsRow& ri = result.runs[i].history.front();
        CHECK(ri.step == 0);
        CHECK(ri.mean_delta == r0.mean_delta);
        CHECK(ri.preference_accuracy == r0.preference_accuracy);
        CHECK(ri.mean_chosen_loglik == r0.mean_chosen_loglik);
        CHECK(ri.mean_rejected_loglik == r0.mean_rejected_loglik);
        CHECK(ri.min_rejected_token_logprob == r0.min_rejected_token_logprob);
    }
}

TEST_CASE("slime grows the margin without degrading chosen likelihood") {
    const auto corpus = generate_synthetic(2000, 64, 16, derive_seed(0, SeedStream::data));
    const TrainConfig config;  // defaults
    const TrainResult result =
        train(corpus, config, SlimeHyperParams{}, BaselineHyperParams{});

    const MetricsRow& first = result.history.front();
    const MetricsRow& last = result.history.back();
    CHECK(last.mean_delta > first.mean_delta);
    CHECK(last.mean_chosen_loglik >= first.mean_chosen_loglik - 0.05);
}

TEST_CASE("dpo and simpo upstream gradients carry the expected signs") {
    const PolicyModel model = init_policy(16, 3, 8, 6);
    const auto pairs = generate_synthetic(3, 16, 6, 7);
    const LogProbBatch batch = make_logprob_batch(model, pairs, true);
    const LogProbBatch ref_batch = make_logprob_batch(model, pairs, true);
    const BaselineHyperParams bhp;

    for (const Objective objective : {Objective::dpo, Objective::simpo}) {
        const auto upstream = batch_token_gradients(
            objective, batch, &ref_batch, SlimeHyperParams{}, bhp);
        for (const PairTokenGradients& pair_grads : upstream) {
            for (Eigen::Index t = 0; t < pair_grads.chosen.size(); ++t) {
                CHECK(pair_grads.chosen[t] < 0.0);  // loss falls as chosen rises
            }
            for (Eigen::Index t = 0; t < pair_grads.rejected.size(); ++t) {
                CHECK(pair_grads.rejected[t] > 0.0);
            }
        }
    }
}

TEST_CASE("train rejects invalid configurations") {
    const auto corpus = generate_synthetic(10, 16, 6, 1);
    TrainConfig config = small_config();
    config.batch_size = 0;
    CHECK_THROWS_AS(train(corpus, config, SlimeHyperParams{}, BaselineHyperParams{}),
                    ValidationError);

    config = small_config();
    const std::vector<PreferencePair> single(1, corpus[0]);
    CHECK_THROWS_AS(train(single, config, SlimeHyperParams{}, BaselineHyperParams{}),
                    ValidationError);

    config = small_config();
    config.vocab_size = 4;  // corpus tokens exceed this vocabulary
    CHECK_THROWS_AS(train(corpus, config, SlimeHyperParams{}, BaselineHyperParams{}),
                    ValidationError);
}
