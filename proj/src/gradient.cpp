#include "slime/gradient.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace slime {

GradientBundle slime_pair_gradient(double lbar_w, double lbar_l,
                                   const Eigen::VectorXd& rejected_token_logprobs,
                                   const SlimeHyperParams& hp) {
    GradientBundle bundle;
    bundle.d_dist_d_delta = grad_dual_margin(margin(lbar_w, lbar_l), hp);
    const auto [d_w, d_l] = chain_to_sequences(bundle.d_dist_d_delta);
    bundle.d_loss_d_lbar_w = grad_chosen(hp) + d_w;
    bundle.d_loss_d_lbar_l = d_l;

    const auto count = static_cast<int>(rejected_token_logprobs.size());
    bundle.d_loss_d_token_l.resize(count);
    for (int t = 0; t < count; ++t) {
        bundle.d_loss_d_token_l[t] = grad_rejected_token(rejected_token_logprobs[t], hp, count);
    }
    return bundle;
}

double finite_difference(const std::function<double(double)>& fn, double point, double step) {
    if (!(step > 0.0)) {
        throw ValidationError("finite_difference: step must be > 0");
    }
    const double hi = fn(point + step);
    const double lo = fn(point - step);
    if (!std::isfinite(hi) || !std::isfinite(lo)) {
        throw ValidationError("finite_difference: non-finite evaluation near " +
                              std::to_string(point));
    }
    return (hi - lo) / (2.0 * step);
}

double GradcheckReport::max_rel_error() const {
    return std::max({max_rel_error_chosen, max_rel_error_rejected, max_rel_error_dual_margin});
}

const GradcheckRow* GradcheckReport::worst_row() const {
    const GradcheckRow* worst = nullptr;
    for (const GradcheckRow& row : rows) {
        if (worst == nullptr || row.rel_error > worst->rel_error) {
            worst = &row;
        }
    }
    return worst;
}

namespace {

double relative_error(double analytic, double numeric) {
    const double denom = std::max(std::abs(analytic), std::abs(numeric));
    if (denom == 0.0) {
        return 0.0;
    }
    return std::abs(analytic - numeric) / denom;
}

double uniform_in(SplitMix64& rng, double lo, double hi) {
    return lo + (hi - lo) * rng.next_double();
}

}  // namespace

GradcheckReport gradcheck_sweep(const SlimeHyperParams& hp, const GradcheckOptions& options) {
    if (options.n_points < 1) {
        throw ValidationError("gradcheck_sweep: n_points must be >= 1");
    }
    hp.validate();

    SplitMix64 rng(derive_seed(options.seed, SeedStream::gradcheck));
    GradcheckReport report;
    report.rows.reserve(static_cast<std::size_t>(options.n_points) * 3);
    const double h = options.fd_step;
    const double corrupt = 1.0 + options.analytic_perturbation;

    const auto push_row = [&](const char* component, double point, double analytic,
                              double numeric, double& max_err) {
        GradcheckRow row;
        row.component = component;
        row.point = point;
        row.analytic = analytic * corrupt;
        row.numeric = numeric;
        row.rel_error = relative_error(row.analytic, row.numeric);
        max_err = std::max(max_err, row.rel_error);
        report.rows.push_back(std::move(row));
    };

    for (int i = 0; i < options.n_points; ++i) {
        // chosen anchor over l̄_w
        {
            const double point = uniform_in(rng, -10.0, 0.0);
            const double numeric = finite_difference(
                [&](double x) { return chosen_loss(x, hp); }, point, h);
            push_row("chosen", point, grad_chosen(hp), numeric, report.max_rel_error_chosen);
        }
        // stabilizing penalty over a single rejected token
        {
            const double point = uniform_in(rng, -12.0, 0.0);
            const double numeric = finite_difference(
                [&](double x) {
                    Eigen::VectorXd one(1);
                    one[0] = x;
                    return rejected_penalty(one, hp);
                },
                point, h);
            push_row("rejected_token", point, grad_rejected_token(point, hp), numeric,
                     report.max_rel_error_rejected);
        }
        // distance loss over Delta, staying clear of the hinge kink
        {
            double point = uniform_in(rng, -5.0, 5.0);
            while (std::abs(point - hp.margin_hard) < 1e-3) {
                point = uniform_in(rng, -5.0, 5.0);
            }
            const double numeric = finite_difference(
                [&](double x) { return dual_margin_loss(x, hp); }, point, h);
            push_row("dual_margin", point, grad_dual_margin(point, hp), numeric,
                     report.max_rel_error_dual_margin);
        }
    }
    return report;
}

void write_gradcheck_csv(const GradcheckReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open " + path + " for writing");
    }
    out << "component,point,analytic,numeric,rel_error\n";
    char buf[128];
    for (const GradcheckRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n", row.component.c_str(),
                      row.point, row.analytic, row.numeric, row.rel_error);
        out << buf;
    }
    if (!out) {
        throw ValidationError("failed writing " + path);
    }
}

}  // namespace slime
