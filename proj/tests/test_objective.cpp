#include <doctest.h>

#include <cmath>

#include "slime/objective.hpp"

using namespace slime;

namespace {

// High-precision reference values (40-digit arithmetic, rounded to double).
constexpr double kRejPenaltyAtMinusDelta = 0.040000337218221214;  // 0.1*softplus(0)^2.5
constexpr double kRejPenaltyAtZero = 0.0031856331173018735;       // 0.1*softplus(-1.25)^2.5
constexpr double kRejPenaltyAtMinus10 = 22.648518210011287;       // 0.1*softplus(8.75)^2.5
constexpr double kDualMarginAtZero = 1.3862127299681347;          // 1.5*sigma(2.5)
constexpr double kDpoAtPoint1 = 0.31326168751822284;              // -ln sigma(1)
constexpr double kSimpoAtPoint18 = 0.15297761052607413;           // -ln sigma(1.8)

LogProbBatch single_pair_batch(double lbar_w, const Eigen::VectorXd& rejected) {
    LogProbBatch batch;
    batch.chosen.push_back(Eigen::VectorXd::Constant(1, lbar_w));
    batch.rejected.push_back(rejected);
    batch.chosen_mask.push_back(MaskArray::Constant(1, true));
    batch.rejected_mask.push_back(MaskArray::Constant(rejected.size(), true));
    batch.seq_mean_chosen = Eigen::VectorXd::Constant(1, lbar_w);
    Eigen::VectorXd mean(1);
    double sum = 0.0;
    for (Eigen::Index t = 0; t < rejected.size(); ++t) {
        sum += rejected[t];
    }
    mean[0] = sum / static_cast<double>(rejected.size());
    batch.seq_mean_rejected = mean;
    return batch;
}

}  // namespace

TEST_CASE("softplus stable branch agrees at the cutover") {
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(std::abs(softplus(31.0) - 31.0) <= 1e-13);
    // The linear branch agrees with the unbranched formula past the cutover.
    CHECK(std::abs(softplus(30.5) - std::log1p(std::exp(30.5))) <= 1e-13);
    CHECK(softplus(200.0) == 200.0);
    CHECK(softplus(-40.0) == doctest::Approx(std::exp(-40.0)).epsilon(1e-12));
}

TEST_CASE("chosen_loss examples") {
    SlimeHyperParams hp;
    CHECK(chosen_loss(0.0, hp) == 0.0);
    CHECK(chosen_loss(-2.0, hp) == doctest::Approx(0.2).epsilon(1e-15));

    hp.lambda_w = 0.0;
    CHECK(chosen_loss(-5.0, hp) == 0.0);

    hp = SlimeHyperParams{};
    hp.enable_chosen = false;
    CHECK(chosen_loss(-5.0, hp) == 0.0);
}

TEST_CASE("chosen_loss is linear") {
    const SlimeHyperParams hp;
    SplitMix64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const double x = -10.0 * rng.next_double();
        const double a = 4.0 * rng.next_double() - 2.0;
        CHECK(chosen_loss(a * x, hp) == doctest::Approx(a * chosen_loss(x, hp)).epsilon(1e-12));
    }
}

TEST_CASE("rejected_penalty spot values") {
    const SlimeHyperParams hp;
    Eigen::VectorXd one(1);

    one[0] = -1.25;
    CHECK(rejected_penalty(one, hp) ==
          doctest::Approx(kRejPenaltyAtMinusDelta).epsilon(1e-12));

    one[0] = 0.0;
    CHECK(rejected_penalty(one, hp) == doctest::Approx(kRejPenaltyAtZero).epsilon(1e-12));

    one[0] = -10.0;
    CHECK(rejected_penalty(one, hp) == doctest::Approx(kRejPenaltyAtMinus10).epsilon(1e-12));
}

TEST_CASE("rejected_penalty averages over tokens and rejects empties") {
    const SlimeHyperParams hp;
    Eigen::VectorXd tokens(3);
    tokens << -1.25, 0.0, -10.0;
    const double expected =
        (kRejPenaltyAtMinusDelta + kRejPenaltyAtZero + kRejPenaltyAtMinus10) / 3.0;
    CHECK(rejected_penalty(tokens, hp) == doctest::Approx(expected).epsilon(1e-12));

    const Eigen::VectorXd empty(0);
    CHECK_THROWS_AS(rejected_penalty(empty, hp), ValidationError);

    SlimeHyperParams off = hp;
    off.enable_rejected = false;
    CHECK(rejected_penalty(tokens, off) == 0.0);
}

TEST_CASE("rejected_penalty is non-increasing and convex in l_t") {
    const SlimeHyperParams hp;
    const auto penalty = [&](double lt) {
        Eigen::VectorXd one(1);
        one[0] = lt;
        return rejected_penalty(one, hp);
    };
    double prev = penalty(-12.0);
    for (double lt = -11.9; lt <= 0.0; lt += 0.1) {
        const double cur = penalty(lt);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
    // convexity via second differences
    const double h = 1e-3;
    for (double lt = -11.0; lt <= -0.5; lt += 0.25) {
        const double second = penalty(lt - h) - 2.0 * penalty(lt) + penalty(lt + h);
        CHECK(second >= -1e-12);
    }
}

TEST_CASE("dual_margin_loss spot values") {
    const SlimeHyperParams hp;
    CHECK(dual_margin_loss(1.5, hp) == 0.0);
    CHECK(dual_margin_loss(1.0, hp) == 0.25);  // ReLU(0.5) * sigma(0), both exact
    CHECK(dual_margin_loss(0.0, hp) == doctest::Approx(kDualMarginAtZero).epsilon(1e-12));
}

TEST_CASE("dual_margin_loss hard deadzone is bit-exact zero") {
    const SlimeHyperParams hp;
    SplitMix64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const double delta = hp.margin_hard + 10.0 * rng.next_double();
        CHECK(dual_margin_loss(delta, hp) == 0.0);
    }
}

TEST_CASE("dual_margin_loss is non-negative and strictly decreasing below m_h") {
    const SlimeHyperParams hp;
    SplitMix64 rng(3);
    double prev_point = -1e18;
    (void)prev_point;
    std::vector<double> points;
    for (int i = 0; i < 10000; ++i) {
        points.push_back(-5.0 + 6.5 * rng.next_double());  // stay below m_h
    }
    std::sort(points.begin(), points.end());
    double prev = dual_margin_loss(points.front(), hp);
    CHECK(prev >= 0.0);
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double cur = dual_margin_loss(points[i], hp);
        CHECK(cur >= 0.0);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("dual_margin_loss ablation semantics") {
    SlimeHyperParams hp;
    hp.enable_soft = false;
    CHECK(dual_margin_loss(0.0, hp) == doctest::Approx(1.5).epsilon(1e-15));  // pure hinge
    CHECK(dual_margin_loss(2.0, hp) == 0.0);

    hp = SlimeHyperParams{};
    hp.enable_hard = false;
    // pure soft gate, alive beyond m_h
    CHECK(dual_margin_loss(0.0, hp) ==
          doctest::Approx(sigmoid(2.5)).epsilon(1e-15));
    CHECK(dual_margin_loss(2.0, hp) == doctest::Approx(sigmoid(-2.5)).epsilon(1e-15));

    hp.enable_soft = false;  // both factors gone: component disabled
    CHECK(dual_margin_loss(0.0, hp) == 0.0);
}

TEST_CASE("slime_total composes boundary cases") {
    SlimeHyperParams hp;
    // Pair already beyond the hard margin, perfectly-confident chosen tokens,
    // rejected tokens at probability one.
    Eigen::VectorXd rejected = Eigen::VectorXd::Zero(2);
    LogProbBatch batch = single_pair_batch(0.0, rejected);
    batch.seq_mean_rejected[0] = -2.0;  // puts Delta = 2.0 >= m_h

    const LossBreakdown breakdown = slime_total(batch, hp);
    CHECK(breakdown.loss_w == 0.0);
    CHECK(breakdown.loss_dist == 0.0);
    CHECK(breakdown.loss_l == doctest::Approx(kRejPenaltyAtZero).epsilon(1e-12));
    CHECK(breakdown.total == breakdown.loss_l);
    CHECK(breakdown.per_pair_delta[0] == 2.0);
}

TEST_CASE("slime_total with every component ablated is zero") {
    SlimeHyperParams hp;
    hp.enable_chosen = false;
    hp.enable_rejected = false;
    hp.enable_soft = false;
    hp.enable_hard = false;

    Eigen::VectorXd rejected(2);
    rejected << -3.0, -4.0;
    const LogProbBatch batch = single_pair_batch(-1.0, rejected);
    const LossBreakdown breakdown = slime_total(batch, hp);
    CHECK(breakdown.loss_w == 0.0);
    CHECK(breakdown.loss_l == 0.0);
    CHECK(breakdown.loss_dist == 0.0);
    CHECK(breakdown.total == 0.0);
}

TEST_CASE("slime_total matches an independent scalar-loop recomputation") {
    const SlimeHyperParams hp;
    SplitMix64 rng(7);

    LogProbBatch batch;
    const int n = 6;
    batch.seq_mean_chosen.resize(n);
    batch.seq_mean_rejected.resize(n);
    for (int i = 0; i < n; ++i) {
        const int len_w = 1 + static_cast<int>(rng.next_below(6));
        const int len_l = 1 + static_cast<int>(rng.next_below(6));
        Eigen::VectorXd w(len_w);
        Eigen::VectorXd l(len_l);
        for (int t = 0; t < len_w; ++t) {
            w[t] = -9.0 * rng.next_double();
        }
        for (int t = 0; t < len_l; ++t) {
            l[t] = -9.0 * rng.next_double();
        }
        double sw = 0.0;
        double sl = 0.0;
        for (int t = 0; t < len_w; ++t) {
            sw += w[t];
        }
        for (int t = 0; t < len_l; ++t) {
            sl += l[t];
        }
        batch.seq_mean_chosen[i] = sw / len_w;
        batch.seq_mean_rejected[i] = sl / len_l;
        batch.chosen.push_back(w);
        batch.rejected.push_back(l);
        batch.chosen_mask.push_back(MaskArray::Constant(len_w, true));
        batch.rejected_mask.push_back(MaskArray::Constant(len_l, true));
    }

    const LossBreakdown breakdown = slime_total(batch, hp);

    // Oracle: plain loops and libm only.
    double acc_w = 0.0;
    double acc_l = 0.0;
    double acc_d = 0.0;
    for (int i = 0; i < n; ++i) {
        acc_w += -hp.lambda_w * batch.seq_mean_chosen[i];
        const Eigen::VectorXd& l = batch.rejected[static_cast<std::size_t>(i)];
        double token_sum = 0.0;
        for (Eigen::Index t = 0; t < l.size(); ++t) {
            const double z = -l[t] - hp.delta;
            const double sp = z > 30.0 ? z : std::log(1.0 + std::exp(z));
            token_sum += std::pow(sp, hp.exponent);
        }
        acc_l += hp.lambda_l * token_sum / static_cast<double>(l.size());
        const double delta = batch.seq_mean_chosen[i] - batch.seq_mean_rejected[i];
        const double hard = delta >= hp.margin_hard ? 0.0 : hp.margin_hard - delta;
        const double soft = 1.0 / (1.0 + std::exp(hp.kappa * (delta - hp.margin_soft)));
        acc_d += hp.lambda_d * hard * soft;
    }
    CHECK(breakdown.loss_w == doctest::Approx(acc_w / n).epsilon(1e-12));
    CHECK(breakdown.loss_l == doctest::Approx(acc_l / n).epsilon(1e-12));
    CHECK(breakdown.loss_dist == doctest::Approx(acc_d / n).epsilon(1e-12));
    CHECK(breakdown.total == breakdown.loss_w + breakdown.loss_l + breakdown.loss_dist);
}

TEST_CASE("slime_total reduces to the distance loss when anchors are off") {
    SlimeHyperParams hp;
    hp.lambda_w = 0.0;
    hp.lambda_l = 0.0;

    Eigen::VectorXd rejected(2);
    rejected << -3.0, -5.0;
    const LogProbBatch batch = single_pair_batch(-1.0, rejected);
    const LossBreakdown breakdown = slime_total(batch, hp);
    const double delta = batch.seq_mean_chosen[0] - batch.seq_mean_rejected[0];
    CHECK(breakdown.total == doctest::Approx(dual_margin_loss(delta, hp)).epsilon(1e-12));
}

TEST_CASE("slime_total rejects an empty batch") {
    const SlimeHyperParams hp;
    const LogProbBatch batch;
    CHECK_THROWS_AS(slime_total(batch, hp), ValidationError);
}

TEST_CASE("hyperparameter validation") {
    SlimeHyperParams hp;
    hp.kappa = 0.0;
    CHECK_THROWS_AS(hp.validate(), ValidationError);
    hp = SlimeHyperParams{};
    hp.exponent = 0.5;
    CHECK_THROWS_AS(hp.validate(), ValidationError);
    hp = SlimeHyperParams{};
    hp.lambda_d = -1.0;
    CHECK_THROWS_AS(hp.validate(), ValidationError);

    BaselineHyperParams bhp;
    bhp.dpo_beta = 0.0;
    CHECK_THROWS_AS(bhp.validate(), ValidationError);
}

TEST_CASE("dpo_loss examples") {
    const BaselineHyperParams hp;
    CHECK(dpo_loss(3.0, 3.0, hp) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    BaselineHyperParams tiny = hp;
    tiny.dpo_beta = 1e-12;
    CHECK(dpo_loss(40.0, -3.0, tiny) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

    CHECK(dpo_loss(10.0, 0.0, hp) == doctest::Approx(kDpoAtPoint1).epsilon(1e-12));
}

TEST_CASE("simpo_loss examples") {
    BaselineHyperParams hp;
    hp.simpo_gamma = 0.0;
    CHECK(simpo_loss(-2.0, -2.0, hp) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    hp = BaselineHyperParams{};  // beta 2.0, gamma 0.2
    CHECK(simpo_loss(-1.0, -1.1, hp) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(simpo_loss(-1.0, -2.0, hp) == doctest::Approx(kSimpoAtPoint18).epsilon(1e-12));
}

TEST_CASE("defaults match the reference configuration") {
    const SlimeHyperParams hp;
    CHECK(hp.lambda_w == 0.1);
    CHECK(hp.lambda_l == 0.1);
    CHECK(hp.lambda_d == 1.0);
    CHECK(hp.delta == 1.25);
    CHECK(hp.margin_hard == 1.5);
    CHECK(hp.margin_soft == 1.0);
    CHECK(hp.kappa == 2.5);
    CHECK(hp.exponent == 2.5);

    const BaselineHyperParams bhp;
    CHECK(bhp.dpo_beta == 0.1);
    CHECK(bhp.simpo_gamma == 0.2);
}
