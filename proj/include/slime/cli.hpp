#pragma once

#include <string>
#include <vector>

#include "slime/objective.hpp"
#include "slime/prefdata.hpp"
#include "slime/trainer.hpp"

namespace slime {

// Everything a run needs, resolved from defaults, an optional config file,
// and key=value overrides, in that order. Unknown keys are rejected.
struct RunConfig {
    // data
    std::string data_source = "synthetic";  // synthetic | jsonl
    std::string jsonl_path;
    int n_pairs = 2000;
    int max_len = 16;
    double style_strength = 0.9;

    TrainConfig train;  // also carries vocab_size / context_window / embed_dim
    SlimeHyperParams slime;
    BaselineHyperParams baseline;

    int gradcheck_points = 1000;
    int gradcheck_probes = 24;

    std::string out_root = "runs";

    void validate() const;
};

RunConfig default_run_config();

// Flat `key = value` file with [section] headers, '#' comments allowed.
void apply_config_file(RunConfig& config, const std::string& path);

void apply_override(RunConfig& config, const std::string& key, const std::string& value);

// "key=value" form used by --set.
void apply_override_kv(RunConfig& config, const std::string& key_value);

// Canonical snapshot of every resolved key; re-parseable by apply_config_file,
// so a run can be reproduced from its own snapshot.
std::string resolved_config_text(const RunConfig& config);

// Materializes the configured corpus (synthetic generation or JSONL load).
std::vector<PreferencePair> resolve_corpus(const RunConfig& config);

// Chooses and creates the output directory: an explicit --run-dir wins,
// otherwise a timestamped directory under the output root (--out-root flag,
// then SLIME_OUTPUT_ROOT, then the configured out_root).
std::string make_run_directory(const RunConfig& config, const std::string& subcommand,
                               const std::string& run_dir_override,
                               const std::string& out_root_override);

// Subcommands. Each writes its artifacts plus resolved_config.txt into
// run_dir and returns the process exit code (0 ok, 1 check/validation
// failure, 2 runtime abort).
int cmd_train(const RunConfig& config, const std::string& run_dir);
int cmd_gradcheck(const RunConfig& config, const std::string& run_dir,
                  double corrupt_analytic = 0.0);
int cmd_ablate(const RunConfig& config, const std::string& run_dir);
int cmd_compare(const RunConfig& config, const std::string& run_dir);
int cmd_gen_data(const RunConfig& config, const std::string& run_dir);

// Ablation variant set run by cmd_ablate, in emission order.
std::vector<std::string> ablation_variant_names();

}  // namespace slime
