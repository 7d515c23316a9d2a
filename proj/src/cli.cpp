#include "slime/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "slime/gradient.hpp"
#include "slime/logprob.hpp"
#include "slime/policy.hpp"

namespace slime {

namespace fs = std::filesystem;

namespace {

// Tolerances of the gradient verification gate. These are contract values,
// not tunables.
constexpr double kComponentTolerance = 1e-5;
constexpr double kEndToEndTolerance = 1e-4;

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double parsed = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return parsed;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': cannot parse '" + value +
                              "' as a real number");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long parsed = std::stol(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return static_cast<int>(parsed);
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': cannot parse '" + value +
                              "' as an integer");
    }
}

std::uint64_t parse_uint64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long parsed = std::stoull(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return parsed;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': cannot parse '" + value +
                              "' as an unsigned integer");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw ValidationError("config key '" + key + "': cannot parse '" + value +
                          "' as a boolean (use true/false)");
}

struct KeyBinding {
    const char* section;
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyBinding>& key_bindings() {
    static const std::vector<KeyBinding> bindings = {
        // data
        {"data", "data_source",
         [](RunConfig& c, const std::string& v) {
             if (v != "synthetic" && v != "jsonl") {
                 throw ValidationError("data_source must be 'synthetic' or 'jsonl'");
             }
             c.data_source = v;
         },
         [](const RunConfig& c) { return c.data_source; }},
        {"data", "jsonl_path",
         [](RunConfig& c, const std::string& v) { c.jsonl_path = v; },
         [](const RunConfig& c) { return c.jsonl_path; }},
        {"data", "n_pairs",
         [](RunConfig& c, const std::string& v) { c.n_pairs = parse_int("n_pairs", v); },
         [](const RunConfig& c) { return std::to_string(c.n_pairs); }},
        {"data", "vocab_size",
         [](RunConfig& c, const std::string& v) {
             c.train.vocab_size = parse_int("vocab_size", v);
         },
         [](const RunConfig& c) { return std::to_string(c.train.vocab_size); }},
        {"data", "max_len",
         [](RunConfig& c, const std::string& v) { c.max_len = parse_int("max_len", v); },
         [](const RunConfig& c) { return std::to_string(c.max_len); }},
        {"data", "style_strength",
         [](RunConfig& c, const std::string& v) {
             c.style_strength = parse_double("style_strength", v);
         },
         [](const RunConfig& c) { return format_double(c.style_strength); }},
        // model
        {"model", "context_window",
         [](RunConfig& c, const std::string& v) {
             c.train.context_window = parse_int("context_window", v);
         },
         [](const RunConfig& c) { return std::to_string(c.train.context_window); }},
        {"model", "embed_dim",
         [](RunConfig& c, const std::string& v) {
             c.train.embed_dim = parse_int("embed_dim", v);
         },
         [](const RunConfig& c) { return std::to_string(c.train.embed_dim); }},
        // train
        {"train", "objective",
         [](RunConfig& c, const std::string& v) { c.train.objective = parse_objective(v); },
         [](const RunConfig& c) { return std::string(objective_name(c.train.objective)); }},
        {"train", "lr_init",
         [](RunConfig& c, const std::string& v) { c.train.lr_init = parse_double("lr_init", v); },
         [](const RunConfig& c) { return format_double(c.train.lr_init); }},
        {"train", "epochs",
         [](RunConfig& c, const std::string& v) { c.train.epochs = parse_int("epochs", v); },
         [](const RunConfig& c) { return std::to_string(c.train.epochs); }},
        {"train", "batch_size",
         [](RunConfig& c, const std::string& v) {
             c.train.batch_size = parse_int("batch_size", v);
         },
         [](const RunConfig& c) { return std::to_string(c.train.batch_size); }},
        {"train", "eval_every",
         [](RunConfig& c, const std::string& v) {
             c.train.eval_every = parse_int("eval_every", v);
         },
         [](const RunConfig& c) { return std::to_string(c.train.eval_every); }},
        {"train", "seed",
         [](RunConfig& c, const std::string& v) { c.train.seed = parse_uint64("seed", v); },
         [](const RunConfig& c) { return std::to_string(c.train.seed); }},
        {"train", "weight_decay",
         [](RunConfig& c, const std::string& v) {
             c.train.weight_decay = parse_double("weight_decay", v);
         },
         [](const RunConfig& c) { return format_double(c.train.weight_decay); }},
        {"train", "adam_beta1",
         [](RunConfig& c, const std::string& v) {
             c.train.adam_beta1 = parse_double("adam_beta1", v);
         },
         [](const RunConfig& c) { return format_double(c.train.adam_beta1); }},
        {"train", "adam_beta2",
         [](RunConfig& c, const std::string& v) {
             c.train.adam_beta2 = parse_double("adam_beta2", v);
         },
         [](const RunConfig& c) { return format_double(c.train.adam_beta2); }},
        {"train", "adam_epsilon",
         [](RunConfig& c, const std::string& v) {
             c.train.adam_epsilon = parse_double("adam_epsilon", v);
         },
         [](const RunConfig& c) { return format_double(c.train.adam_epsilon); }},
        {"train", "length_normalize",
         [](RunConfig& c, const std::string& v) {
             c.train.length_normalize = parse_bool("length_normalize", v);
         },
         [](const RunConfig& c) {
             return std::string(c.train.length_normalize ? "true" : "false");
         }},
        {"train", "holdout_fraction",
         [](RunConfig& c, const std::string& v) {
             c.train.holdout_fraction = parse_double("holdout_fraction", v);
         },
         [](const RunConfig& c) { return format_double(c.train.holdout_fraction); }},
        // slime
        {"slime", "lambda_w",
         [](RunConfig& c, const std::string& v) {
             c.slime.lambda_w = parse_double("lambda_w", v);
         },
         [](const RunConfig& c) { return format_double(c.slime.lambda_w); }},
        {"slime", "lambda_l",
         [](RunConfig& c, const std::string& v) {
             c.slime.lambda_l = parse_double("lambda_l", v);
         },
         [](const RunConfig& c) { return format_double(c.slime.lambda_l); }},
        {"slime", "lambda_d",
         [](RunConfig& c, const std::string& v) {
             c.slime.lambda_d = parse_double("lambda_d", v);
         },
         [](const RunConfig& c) { return format_double(c.slime.lambda_d); }},
        {"slime", "delta",
         [](RunConfig& c, const std::string& v) { c.slime.delta = parse_double("delta", v); },
         [](const RunConfig& c) { return format_double(c.slime.delta); }},
        {"slime", "margin_hard",
         [](RunConfig& c, const std::string& v) {
             c.slime.margin_hard = parse_double("margin_hard", v);
         },
         [](const RunConfig& c) { return format_double(c.slime.margin_hard); }},
        {"slime", "margin_soft",
         [](RunConfig& c, const std::string& v) {
             c.slime.margin_soft = parse_double("margin_soft", v);
         },
         [](const RunConfig& c) { return format_double(c.slime.margin_soft); }},
        {"slime", "kappa",
         [](RunConfig& c, const std::string& v) { c.slime.kappa = parse_double("kappa", v); },
         [](const RunConfig& c) { return format_double(c.slime.kappa); }},
        {"slime", "p",
         [](RunConfig& c, const std::string& v) { c.slime.exponent = parse_double("p", v); },
         [](const RunConfig& c) { return format_double(c.slime.exponent); }},
        {"slime", "enable_chosen",
         [](RunConfig& c, const std::string& v) {
             c.slime.enable_chosen = parse_bool("enable_chosen", v);
         },
         [](const RunConfig& c) {
             return std::string(c.slime.enable_chosen ? "true" : "false");
         }},
        {"slime", "enable_rejected",
         [](RunConfig& c, const std::string& v) {
             c.slime.enable_rejected = parse_bool("enable_rejected", v);
         },
         [](const RunConfig& c) {
             return std::string(c.slime.enable_rejected ? "true" : "false");
         }},
        {"slime", "enable_soft",
         [](RunConfig& c, const std::string& v) {
             c.slime.enable_soft = parse_bool("enable_soft", v);
         },
         [](const RunConfig& c) { return std::string(c.slime.enable_soft ? "true" : "false"); }},
        {"slime", "enable_hard",
         [](RunConfig& c, const std::string& v) {
             c.slime.enable_hard = parse_bool("enable_hard", v);
         },
         [](const RunConfig& c) { return std::string(c.slime.enable_hard ? "true" : "false"); }},
        // baseline
        {"baseline", "dpo_beta",
         [](RunConfig& c, const std::string& v) {
             c.baseline.dpo_beta = parse_double("dpo_beta", v);
         },
         [](const RunConfig& c) { return format_double(c.baseline.dpo_beta); }},
        {"baseline", "simpo_beta",
         [](RunConfig& c, const std::string& v) {
             c.baseline.simpo_beta = parse_double("simpo_beta", v);
         },
         [](const RunConfig& c) { return format_double(c.baseline.simpo_beta); }},
        {"baseline", "simpo_gamma",
         [](RunConfig& c, const std::string& v) {
             c.baseline.simpo_gamma = parse_double("simpo_gamma", v);
         },
         [](const RunConfig& c) { return format_double(c.baseline.simpo_gamma); }},
        // gradcheck
        {"gradcheck", "gradcheck_points",
         [](RunConfig& c, const std::string& v) {
             c.gradcheck_points = parse_int("gradcheck_points", v);
         },
         [](const RunConfig& c) { return std::to_string(c.gradcheck_points); }},
        {"gradcheck", "gradcheck_probes",
         [](RunConfig& c, const std::string& v) {
             c.gradcheck_probes = parse_int("gradcheck_probes", v);
         },
         [](const RunConfig& c) { return std::to_string(c.gradcheck_probes); }},
        // output
        {"output", "out_root",
         [](RunConfig& c, const std::string& v) { c.out_root = v; },
         [](const RunConfig& c) { return c.out_root; }},
    };
    return bindings;
}

const KeyBinding* find_binding(const std::string& key) {
    for (const KeyBinding& binding : key_bindings()) {
        if (key == binding.key) {
            return &binding;
        }
    }
    return nullptr;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

bool known_section(const std::string& name) {
    for (const KeyBinding& binding : key_bindings()) {
        if (name == binding.section) {
            return true;
        }
    }
    return false;
}

}  // namespace

void RunConfig::validate() const {
    train.validate();
    slime.validate();
    baseline.validate();
    if (data_source == "synthetic") {
        if (n_pairs < 1) {
            throw ValidationError("n_pairs must be >= 1");
        }
        if (max_len < 2) {
            throw ValidationError("max_len must be >= 2");
        }
    } else if (jsonl_path.empty()) {
        throw ValidationError("data_source=jsonl requires jsonl_path");
    }
    if (gradcheck_points < 1 || gradcheck_probes < 1) {
        throw ValidationError("gradcheck_points and gradcheck_probes must be >= 1");
    }
}

RunConfig default_run_config() { return RunConfig{}; }

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config file " + path);
    }
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed[0] == '#') {
            continue;
        }
        const std::string context = path + ":" + std::to_string(line_no);
        if (trimmed.front() == '[') {
            if (trimmed.back() != ']') {
                throw ValidationError(context + ": malformed section header " + trimmed);
            }
            const std::string section = trim(trimmed.substr(1, trimmed.size() - 2));
            if (!known_section(section)) {
                throw ValidationError(context + ": unknown section '" + section + "'");
            }
            continue;
        }
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(context + ": expected key = value, got '" + trimmed + "'");
        }
        const std::string key = trim(trimmed.substr(0, eq));
        const std::string value = trim(trimmed.substr(eq + 1));
        try {
            apply_override(config, key, value);
        } catch (const ValidationError& e) {
            throw ValidationError(context + ": " + e.what());
        }
    }
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
    const KeyBinding* binding = find_binding(key);
    if (binding == nullptr) {
        throw ValidationError("unknown config key '" + key + "'");
    }
    binding->set(config, value);
}

void apply_override_kv(RunConfig& config, const std::string& key_value) {
    const auto eq = key_value.find('=');
    if (eq == std::string::npos) {
        throw ValidationError("override '" + key_value + "' is not of the form key=value");
    }
    apply_override(config, trim(key_value.substr(0, eq)), trim(key_value.substr(eq + 1)));
}

std::string resolved_config_text(const RunConfig& config) {
    std::ostringstream oss;
    std::string current_section;
    for (const KeyBinding& binding : key_bindings()) {
        if (binding.section != current_section) {
            if (!current_section.empty()) {
                oss << '\n';
            }
            current_section = binding.section;
            oss << '[' << current_section << "]\n";
        }
        oss << binding.key << " = " << binding.get(config) << '\n';
    }
    return oss.str();
}

std::vector<PreferencePair> resolve_corpus(const RunConfig& config) {
    if (config.data_source == "jsonl") {
        return load_jsonl(config.jsonl_path, config.train.vocab_size);
    }
    SyntheticConfig synth;
    synth.n_pairs = config.n_pairs;
    synth.vocab_size = config.train.vocab_size;
    synth.max_len = config.max_len;
    synth.seed = derive_seed(config.train.seed, SeedStream::data);
    synth.style_strength = config.style_strength;
    return generate_synthetic(synth);
}

namespace {

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open " + path + " for writing");
    }
    out << text;
    if (!out) {
        throw ValidationError("failed writing " + path);
    }
}

void write_resolved_config(const RunConfig& config, const std::string& run_dir) {
    write_text_file(run_dir + "/resolved_config.txt", resolved_config_text(config));
}

MetricsRow final_row(const TrainResult& result) { return result.history.back(); }

}  // namespace

std::string make_run_directory(const RunConfig& config, const std::string& subcommand,
                               const std::string& run_dir_override,
                               const std::string& out_root_override) {
    if (!run_dir_override.empty()) {
        fs::create_directories(run_dir_override);
        return run_dir_override;
    }
    std::string root = out_root_override;
    if (root.empty()) {
        if (const char* env_root = std::getenv("SLIME_OUTPUT_ROOT")) {
            root = env_root;
        }
    }
    if (root.empty()) {
        root = config.out_root;
    }

    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);

    std::string dir = root + "/" + stamp + "-" + subcommand;
    int suffix = 1;
    while (fs::exists(dir)) {
        ++suffix;
        dir = root + "/" + stamp + "-" + subcommand + "-" + std::to_string(suffix);
    }
    fs::create_directories(dir);
    return dir;
}

int cmd_train(const RunConfig& config, const std::string& run_dir) {
    config.validate();
    write_resolved_config(config, run_dir);
    const std::vector<PreferencePair> corpus = resolve_corpus(config);

    try {
        const TrainResult result = train(corpus, config.train, config.slime, config.baseline);
        write_metrics_csv(result.history, run_dir + "/metrics.csv");
        save_checkpoint(result.model, run_dir + "/checkpoint.txt");
        const MetricsRow last = final_row(result);
        std::cout << "train: objective=" << objective_name(config.train.objective)
                  << " steps=" << last.step
                  << " preference_accuracy=" << last.preference_accuracy
                  << " mean_delta=" << last.mean_delta << '\n';
    } catch (const TrainingAbort& abort) {
        write_text_file(run_dir + "/diagnostic.txt", abort.diagnostic());
        std::cerr << abort.what() << " (diagnostic written to " << run_dir
                  << "/diagnostic.txt)\n";
        return 2;
    }
    return 0;
}

int cmd_gradcheck(const RunConfig& config, const std::string& run_dir,
                  double corrupt_analytic) {
    config.validate();
    write_resolved_config(config, run_dir);

    GradcheckOptions options;
    options.n_points = config.gradcheck_points;
    options.seed = config.train.seed;
    options.analytic_perturbation = corrupt_analytic;
    const GradcheckReport sweep = gradcheck_sweep(config.slime, options);
    write_gradcheck_csv(sweep, run_dir + "/gradcheck.csv");

    // Small dedicated model/batch for the parameter probe; the corpus-scale
    // run adds nothing to the check and would only slow it down.
    const PolicyModel model = init_policy(config.train.vocab_size, config.train.context_window,
                                          config.train.embed_dim, config.train.seed);
    std::vector<PreferencePair> corpus = resolve_corpus(config);
    if (corpus.size() > 6) {
        corpus.resize(6);
    }
    EndToEndOptions e2e_options;
    e2e_options.n_probes = config.gradcheck_probes;
    e2e_options.seed = config.train.seed;
    e2e_options.length_normalize = config.train.length_normalize;
    const EndToEndReport e2e = end_to_end_gradcheck(model, corpus, config.slime,
                                                    config.baseline, e2e_options);
    write_end_to_end_csv(e2e, run_dir + "/gradcheck_e2e.csv");

    std::cout << "gradcheck: chosen=" << sweep.max_rel_error_chosen
              << " rejected_token=" << sweep.max_rel_error_rejected
              << " dual_margin=" << sweep.max_rel_error_dual_margin
              << " end_to_end=" << e2e.max_rel_error << '\n';

    const bool components_ok = sweep.max_rel_error() <= kComponentTolerance;
    const bool e2e_ok = e2e.max_rel_error <= kEndToEndTolerance;
    if (!components_ok) {
        const GradcheckRow* worst = sweep.worst_row();
        std::cerr << "gradcheck FAILED: component '" << worst->component << "' at point "
                  << worst->point << " analytic=" << worst->analytic
                  << " numeric=" << worst->numeric << " rel_error=" << worst->rel_error
                  << " > " << kComponentTolerance << '\n';
    }
    if (!e2e_ok) {
        std::cerr << "gradcheck FAILED: end-to-end max rel_error " << e2e.max_rel_error
                  << " > " << kEndToEndTolerance << '\n';
    }
    return (components_ok && e2e_ok) ? 0 : 1;
}

std::vector<std::string> ablation_variant_names() {
    return {"full_slime", "wo_chosen", "wo_rejected", "wo_soft_margin", "wo_hard_margin",
            "p_1.0",      "p_1.5",     "p_2.0",       "p_2.5",          "p_3.0"};
}

namespace {

SlimeHyperParams ablation_variant(const SlimeHyperParams& base, const std::string& name) {
    SlimeHyperParams hp = base;
    if (name == "full_slime") {
        return hp;
    }
    if (name == "wo_chosen") {
        hp.enable_chosen = false;
        return hp;
    }
    if (name == "wo_rejected") {
        hp.enable_rejected = false;
        return hp;
    }
    if (name == "wo_soft_margin") {
        hp.enable_soft = false;
        return hp;
    }
    if (name == "wo_hard_margin") {
        hp.enable_hard = false;
        return hp;
    }
    if (name.rfind("p_", 0) == 0) {
        hp.exponent = parse_double(name, name.substr(2));
        return hp;
    }
    throw ValidationError("unknown ablation variant '" + name + "'");
}

}  // namespace

int cmd_ablate(const RunConfig& config, const std::string& run_dir) {
    config.validate();
    write_resolved_config(config, run_dir);
    const std::vector<PreferencePair> corpus = resolve_corpus(config);

    TrainConfig train_config = config.train;
    train_config.objective = Objective::slime;
    const PolicyModel initial = init_policy(train_config.vocab_size,
                                            train_config.context_window,
                                            train_config.embed_dim, train_config.seed);

    std::ofstream summary(run_dir + "/ablate.csv");
    if (!summary) {
        throw ValidationError("cannot open " + run_dir + "/ablate.csv for writing");
    }
    summary << "variant,final_step,preference_accuracy,mean_delta,mean_chosen_loglik,"
               "mean_rejected_loglik,min_rejected_token_logprob,loss_w,loss_l,loss_dist,"
               "loss_total\n";

    try {
        for (const std::string& name : ablation_variant_names()) {
            const SlimeHyperParams hp = ablation_variant(config.slime, name);
            const TrainResult result =
                train_from(initial, corpus, train_config, hp, config.baseline);
            write_metrics_csv(result.history, run_dir + "/metrics_" + name + ".csv");

            const MetricsRow last = final_row(result);
            char buf[512];
            std::snprintf(buf, sizeof(buf),
                          "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          name.c_str(), last.step, last.preference_accuracy, last.mean_delta,
                          last.mean_chosen_loglik, last.mean_rejected_loglik,
                          last.min_rejected_token_logprob, last.loss_w, last.loss_l,
                          last.loss_dist, last.loss_total);
            summary << buf;
            std::cout << "ablate: " << name
                      << " preference_accuracy=" << last.preference_accuracy
                      << " mean_delta=" << last.mean_delta << '\n';
        }
    } catch (const TrainingAbort& abort) {
        write_text_file(run_dir + "/diagnostic.txt", abort.diagnostic());
        std::cerr << abort.what() << '\n';
        return 2;
    }
    return 0;
}

int cmd_compare(const RunConfig& config, const std::string& run_dir) {
    config.validate();
    write_resolved_config(config, run_dir);
    const std::vector<PreferencePair> corpus = resolve_corpus(config);

    try {
        const CompareResult result =
            compare_objectives(corpus, config.train, config.slime, config.baseline);
        for (std::size_t i = 0; i < result.runs.size(); ++i) {
            write_metrics_csv(result.runs[i].history,
                              run_dir + "/metrics_" +
                                  objective_name(result.objectives[i]) + ".csv");
        }

        std::ofstream summary(run_dir + "/compare.csv");
        if (!summary) {
            throw ValidationError("cannot open " + run_dir + "/compare.csv for writing");
        }
        summary << "metric";
        for (const Objective objective : result.objectives) {
            summary << ',' << objective_name(objective);
        }
        summary << '\n';

        const auto emit = [&](const char* metric,
                              const std::function<double(const TrainResult&)>& extract) {
            summary << metric;
            char buf[48];
            for (const TrainResult& run : result.runs) {
                std::snprintf(buf, sizeof(buf), ",%.17g", extract(run));
                summary << buf;
            }
            summary << '\n';
        };
        emit("final_preference_accuracy",
             [](const TrainResult& r) { return r.history.back().preference_accuracy; });
        emit("chosen_loglik_drift", [](const TrainResult& r) {
            return r.history.back().mean_chosen_loglik - r.history.front().mean_chosen_loglik;
        });
        emit("final_min_rejected_token_logprob",
             [](const TrainResult& r) { return r.history.back().min_rejected_token_logprob; });

        for (std::size_t i = 0; i < result.runs.size(); ++i) {
            const MetricsRow last = result.runs[i].history.back();
            std::cout << "compare: " << objective_name(result.objectives[i])
                      << " preference_accuracy=" << last.preference_accuracy
                      << " mean_chosen_loglik=" << last.mean_chosen_loglik
                      << " min_rejected_token_logprob=" << last.min_rejected_token_logprob
                      << '\n';
        }
    } catch (const TrainingAbort& abort) {
        write_text_file(run_dir + "/diagnostic.txt", abort.diagnostic());
        std::cerr << abort.what() << '\n';
        return 2;
    }
    return 0;
}

int cmd_gen_data(const RunConfig& config, const std::string& run_dir) {
    config.validate();
    if (config.data_source != "synthetic") {
        throw ValidationError("gen-data only supports data_source=synthetic");
    }
    write_resolved_config(config, run_dir);
    const std::vector<PreferencePair> corpus = resolve_corpus(config);
    save_jsonl(run_dir + "/corpus.jsonl", corpus);
    std::cout << "gen-data: wrote " << corpus.size() << " pairs to " << run_dir
              << "/corpus.jsonl\n";
    return 0;
}

}  // namespace slime
