#include "slime/policy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "slime/common.hpp"

namespace slime {

namespace {

void check_dims(int vocab_size, int context_window, int embed_dim) {
    if (vocab_size < 1 || context_window < 1 || embed_dim < 1) {
        throw ValidationError("policy dims must all be >= 1 (vocab_size=" +
                              std::to_string(vocab_size) + ", context_window=" +
                              std::to_string(context_window) + ", embed_dim=" +
                              std::to_string(embed_dim) + ")");
    }
}

void check_tokens(const TokenSequence& seq, int vocab_size, const char* what) {
    for (const std::int32_t id : seq.tokens) {
        if (id < 0 || id >= vocab_size) {
            throw ValidationError(std::string(what) + ": token id " + std::to_string(id) +
                                  " outside policy vocabulary of size " +
                                  std::to_string(vocab_size));
        }
    }
}

// Ids of the up-to-W tokens preceding response position t, most recent first.
// The prompt is never empty, so there is always at least one context token.
void gather_context(const TokenSequence& prompt, const TokenSequence& response, int t,
                    int window, std::vector<std::int32_t>& out) {
    out.clear();
    for (int back = 1; back <= window; ++back) {
        const int pos = t - back;  // position within the response
        if (pos >= 0) {
            out.push_back(response.tokens[static_cast<std::size_t>(pos)]);
        } else {
            const int ppos = prompt.length() + pos;
            if (ppos < 0) {
                break;
            }
            out.push_back(prompt.tokens[static_cast<std::size_t>(ppos)]);
        }
    }
}

Eigen::VectorXd context_vector(const PolicyModel& model,
                               const std::vector<std::int32_t>& context) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(model.embed_dim);
    for (std::size_t j = 0; j < context.size(); ++j) {
        h += model.agg_weights[static_cast<Eigen::Index>(j)] *
             model.embedding.row(context[j]).transpose();
    }
    return h;
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
    const double max_logit = logits.maxCoeff();
    const double lse = max_logit + std::log((logits.array() - max_logit).exp().sum());
    return logits.array() - lse;
}

}  // namespace

PolicyModel init_policy(int vocab_size, int context_window, int embed_dim, std::uint64_t seed) {
    check_dims(vocab_size, context_window, embed_dim);

    PolicyModel model;
    model.vocab_size = vocab_size;
    model.context_window = context_window;
    model.embed_dim = embed_dim;
    model.embedding.resize(vocab_size, embed_dim);
    model.projection.resize(embed_dim, vocab_size);
    model.agg_weights = Eigen::VectorXd::Constant(context_window, 1.0 / context_window);
    model.bias = Eigen::VectorXd::Zero(vocab_size);

    const double scale = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    SplitMix64 rng(derive_seed(seed, SeedStream::init));
    for (int r = 0; r < vocab_size; ++r) {
        for (int c = 0; c < embed_dim; ++c) {
            model.embedding(r, c) = (2.0 * rng.next_double() - 1.0) * scale;
        }
    }
    for (int r = 0; r < embed_dim; ++r) {
        for (int c = 0; c < vocab_size; ++c) {
            model.projection(r, c) = (2.0 * rng.next_double() - 1.0) * scale;
        }
    }
    return model;
}

PolicyModel zero_policy(int vocab_size, int context_window, int embed_dim) {
    check_dims(vocab_size, context_window, embed_dim);
    PolicyModel model;
    model.vocab_size = vocab_size;
    model.context_window = context_window;
    model.embed_dim = embed_dim;
    model.embedding = Eigen::MatrixXd::Zero(vocab_size, embed_dim);
    model.agg_weights = Eigen::VectorXd::Zero(context_window);
    model.projection = Eigen::MatrixXd::Zero(embed_dim, vocab_size);
    model.bias = Eigen::VectorXd::Zero(vocab_size);
    return model;
}

std::int64_t parameter_count(const PolicyModel& model) {
    return static_cast<std::int64_t>(model.embedding.size()) + model.agg_weights.size() +
           model.projection.size() + model.bias.size();
}

Eigen::VectorXd position_log_softmax(const PolicyModel& model, const TokenSequence& prompt,
                                     const TokenSequence& response, int position) {
    std::vector<std::int32_t> context;
    gather_context(prompt, response, position, model.context_window, context);
    const Eigen::VectorXd h = context_vector(model, context);
    const Eigen::VectorXd logits = model.projection.transpose() * h + model.bias;
    return log_softmax(logits);
}

Eigen::VectorXd forward(const PolicyModel& model, const TokenSequence& prompt,
                        const TokenSequence& response) {
    check_tokens(prompt, model.vocab_size, "forward prompt");
    check_tokens(response, model.vocab_size, "forward response");

    Eigen::VectorXd result(response.length());
    std::vector<std::int32_t> context;
    for (int t = 0; t < response.length(); ++t) {
        gather_context(prompt, response, t, model.context_window, context);
        const Eigen::VectorXd h = context_vector(model, context);
        const Eigen::VectorXd logits = model.projection.transpose() * h + model.bias;
        const Eigen::VectorXd lp = log_softmax(logits);
        result[t] = lp[response.tokens[static_cast<std::size_t>(t)]];
    }
    return result;
}

ParameterGradients zero_gradients(const PolicyModel& model) {
    ParameterGradients grads;
    grads.embedding = Eigen::MatrixXd::Zero(model.vocab_size, model.embed_dim);
    grads.agg_weights = Eigen::VectorXd::Zero(model.context_window);
    grads.projection = Eigen::MatrixXd::Zero(model.embed_dim, model.vocab_size);
    grads.bias = Eigen::VectorXd::Zero(model.vocab_size);
    return grads;
}

namespace {

void accumulate_response(const PolicyModel& model, const TokenSequence& prompt,
                         const TokenSequence& response, const Eigen::VectorXd& upstream,
                         ParameterGradients& grads) {
    std::vector<std::int32_t> context;
    for (int t = 0; t < response.length(); ++t) {
        const double g = upstream[t];
        if (g == 0.0) {
            continue;
        }
        gather_context(prompt, response, t, model.context_window, context);
        const Eigen::VectorXd h = context_vector(model, context);
        const Eigen::VectorXd logits = model.projection.transpose() * h + model.bias;

        // d l_t / d logits = onehot(y_t) - softmax(logits)
        const double max_logit = logits.maxCoeff();
        Eigen::VectorXd probs = (logits.array() - max_logit).exp();
        probs /= probs.sum();

        Eigen::VectorXd dlogits = -g * probs;
        dlogits[response.tokens[static_cast<std::size_t>(t)]] += g;

        grads.bias += dlogits;
        grads.projection.noalias() += h * dlogits.transpose();
        const Eigen::VectorXd dh = model.projection * dlogits;
        for (std::size_t j = 0; j < context.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            grads.agg_weights[jj] += model.embedding.row(context[j]).dot(dh);
            grads.embedding.row(context[j]) += model.agg_weights[jj] * dh.transpose();
        }
    }
}

}  // namespace

ParameterGradients backward(const PolicyModel& model, const std::vector<PreferencePair>& pairs,
                            const std::vector<PairTokenGradients>& upstream) {
    if (pairs.size() != upstream.size()) {
        throw ValidationError("backward: " + std::to_string(pairs.size()) + " pairs but " +
                              std::to_string(upstream.size()) + " upstream gradient sets");
    }
    ParameterGradients grads = zero_gradients(model);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const PreferencePair& pair = pairs[i];
        if (upstream[i].chosen.size() != pair.chosen.length() ||
            upstream[i].rejected.size() != pair.rejected.length()) {
            throw ValidationError("backward: upstream gradient shape mismatch at pair " +
                                  std::to_string(i));
        }
        accumulate_response(model, pair.prompt, pair.chosen, upstream[i].chosen, grads);
        accumulate_response(model, pair.prompt, pair.rejected, upstream[i].rejected, grads);
    }
    return grads;
}

namespace {

struct FlatIndex {
    int block;  // 0 embedding, 1 agg, 2 projection, 3 bias
    Eigen::Index row;
    Eigen::Index col;
};

FlatIndex locate(const PolicyModel& model, std::int64_t index) {
    if (index < 0 || index >= parameter_count(model)) {
        throw ValidationError("parameter index " + std::to_string(index) + " out of range");
    }
    const std::int64_t n_embed = model.embedding.size();
    const std::int64_t n_agg = model.agg_weights.size();
    const std::int64_t n_proj = model.projection.size();
    if (index < n_embed) {
        return {0, static_cast<Eigen::Index>(index / model.embed_dim),
                static_cast<Eigen::Index>(index % model.embed_dim)};
    }
    index -= n_embed;
    if (index < n_agg) {
        return {1, static_cast<Eigen::Index>(index), 0};
    }
    index -= n_agg;
    if (index < n_proj) {
        return {2, static_cast<Eigen::Index>(index / model.vocab_size),
                static_cast<Eigen::Index>(index % model.vocab_size)};
    }
    index -= n_proj;
    return {3, static_cast<Eigen::Index>(index), 0};
}

}  // namespace

double get_parameter(const PolicyModel& model, std::int64_t index) {
    const FlatIndex f = locate(model, index);
    switch (f.block) {
        case 0: return model.embedding(f.row, f.col);
        case 1: return model.agg_weights[f.row];
        case 2: return model.projection(f.row, f.col);
        default: return model.bias[f.row];
    }
}

void set_parameter(PolicyModel& model, std::int64_t index, double value) {
    const FlatIndex f = locate(model, index);
    switch (f.block) {
        case 0: model.embedding(f.row, f.col) = value; break;
        case 1: model.agg_weights[f.row] = value; break;
        case 2: model.projection(f.row, f.col) = value; break;
        default: model.bias[f.row] = value; break;
    }
}

double get_gradient_entry(const ParameterGradients& grads, const PolicyModel& model,
                          std::int64_t index) {
    const FlatIndex f = locate(model, index);
    switch (f.block) {
        case 0: return grads.embedding(f.row, f.col);
        case 1: return grads.agg_weights[f.row];
        case 2: return grads.projection(f.row, f.col);
        default: return grads.bias[f.row];
    }
}

namespace {

constexpr const char* kCheckpointMagic = "slime-checkpoint";
constexpr const char* kCheckpointVersion = "v1";

void write_value(std::ofstream& out, double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    out << buf;
}

void write_matrix_rows(std::ofstream& out, const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) {
                out << ' ';
            }
            write_value(out, m(r, c));
        }
        out << '\n';
    }
}

void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) {
            out << ' ';
        }
        write_value(out, v[i]);
    }
    out << '\n';
}

void expect_line(std::ifstream& in, const std::string& expected, const std::string& path) {
    std::string line;
    if (!std::getline(in, line) || line != expected) {
        throw ValidationError(path + ": expected '" + expected + "', got '" + line + "'");
    }
}

int read_named_int(std::ifstream& in, const std::string& name, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(path + ": missing '" + name + "' line");
    }
    std::istringstream iss(line);
    std::string key;
    int value = 0;
    if (!(iss >> key >> value) || key != name) {
        throw ValidationError(path + ": malformed '" + name + "' line: " + line);
    }
    return value;
}

void read_matrix_rows(std::ifstream& in, Eigen::MatrixXd& m, const std::string& path,
                      const std::string& what) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::string line;
        if (!std::getline(in, line)) {
            throw ValidationError(path + ": truncated " + what);
        }
        std::istringstream iss(line);
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (!(iss >> m(r, c))) {
                throw ValidationError(path + ": malformed " + what + " row " +
                                      std::to_string(r));
            }
        }
    }
}

void read_vector(std::ifstream& in, Eigen::VectorXd& v, const std::string& path,
                 const std::string& what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(path + ": truncated " + what);
    }
    std::istringstream iss(line);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(iss >> v[i])) {
            throw ValidationError(path + ": malformed " + what);
        }
    }
}

}  // namespace

void save_checkpoint(const PolicyModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open " + path + " for writing");
    }
    out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    out << "vocab_size " << model.vocab_size << '\n';
    out << "context_window " << model.context_window << '\n';
    out << "embed_dim " << model.embed_dim << '\n';
    out << "embedding\n";
    write_matrix_rows(out, model.embedding);
    out << "agg_weights\n";
    write_vector(out, model.agg_weights);
    out << "projection\n";
    write_matrix_rows(out, model.projection);
    out << "bias\n";
    write_vector(out, model.bias);
    if (!out) {
        throw ValidationError("failed writing " + path);
    }
}

PolicyModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path);
    }
    expect_line(in, std::string(kCheckpointMagic) + " " + kCheckpointVersion, path);
    const int vocab_size = read_named_int(in, "vocab_size", path);
    const int context_window = read_named_int(in, "context_window", path);
    const int embed_dim = read_named_int(in, "embed_dim", path);

    PolicyModel model = zero_policy(vocab_size, context_window, embed_dim);
    expect_line(in, "embedding", path);
    read_matrix_rows(in, model.embedding, path, "embedding");
    expect_line(in, "agg_weights", path);
    read_vector(in, model.agg_weights, path, "agg_weights");
    expect_line(in, "projection", path);
    read_matrix_rows(in, model.projection, path, "projection");
    expect_line(in, "bias", path);
    read_vector(in, model.bias, path, "bias");
    return model;
}

}  // namespace slime
