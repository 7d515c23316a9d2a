#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "slime/prefdata.hpp"

namespace slime {

// Minimal trainable autoregressive policy: token embeddings are combined over
// a sliding context window by learned position weights, then projected to
// vocabulary logits. Plain value semantics; copying a model is a deep copy.
struct PolicyModel {
    int vocab_size = 0;      // V
    int context_window = 0;  // W, number of previous tokens aggregated
    int embed_dim = 0;       // E

    Eigen::MatrixXd embedding;    // V x E, one row per token id
    Eigen::VectorXd agg_weights;  // W, index 0 weights the most recent token
    Eigen::MatrixXd projection;   // E x V
    Eigen::VectorXd bias;         // V
};

// Gradient buffer shaped exactly like the model parameters.
struct ParameterGradients {
    Eigen::MatrixXd embedding;
    Eigen::VectorXd agg_weights;
    Eigen::MatrixXd projection;
    Eigen::VectorXd bias;
};

// Upstream dL/dl_t for one pair, aligned with forward() outputs.
struct PairTokenGradients {
    Eigen::VectorXd chosen;
    Eigen::VectorXd rejected;
};

// Deterministic scaled-uniform initialization: embedding and projection
// entries uniform in [-1/sqrt(E), 1/sqrt(E)), aggregation weights 1/W (so the
// initial context vector is a mean of embeddings), bias zero.
PolicyModel init_policy(int vocab_size, int context_window, int embed_dim, std::uint64_t seed);

// All parameters zero; forward() is exactly uniform over the vocabulary.
PolicyModel zero_policy(int vocab_size, int context_window, int embed_dim);

// Deep copy whose later training of the source never touches. Used as the
// frozen DPO reference.
inline PolicyModel snapshot(const PolicyModel& model) { return model; }

std::int64_t parameter_count(const PolicyModel& model);

// Position t of the result holds log pi(response[t] | prompt, response[<t]),
// from a max-subtracted log-softmax over the vocabulary.
Eigen::VectorXd forward(const PolicyModel& model, const TokenSequence& prompt,
                        const TokenSequence& response);

// Full-vocabulary log-softmax at one response position; forward() gathers
// entry response[t] of this. Exposed for tests and diagnostics.
Eigen::VectorXd position_log_softmax(const PolicyModel& model, const TokenSequence& prompt,
                                     const TokenSequence& response, int position);

ParameterGradients zero_gradients(const PolicyModel& model);

// Exact reverse-mode gradients of sum_pairs sum_t upstream[t] * l_t with
// respect to every parameter. upstream must be shape-matched to forward()
// outputs pair by pair.
ParameterGradients backward(const PolicyModel& model, const std::vector<PreferencePair>& pairs,
                            const std::vector<PairTokenGradients>& upstream);

// Flat parameter addressing in checkpoint order (embedding row-major,
// aggregation weights, projection row-major, bias). Drives the
// finite-difference parameter probes.
double get_parameter(const PolicyModel& model, std::int64_t index);
void set_parameter(PolicyModel& model, std::int64_t index, double value);
double get_gradient_entry(const ParameterGradients& grads, const PolicyModel& model,
                          std::int64_t index);

// Versioned text checkpoint; see README for the exact layout. Values are
// printed with enough digits to round-trip doubles bit-exactly.
void save_checkpoint(const PolicyModel& model, const std::string& path);
PolicyModel load_checkpoint(const std::string& path);

}  // namespace slime
