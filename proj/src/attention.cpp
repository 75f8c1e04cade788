#include "rasa/attention.hpp"

#include <cmath>

#include "rasa/errors.hpp"

namespace rasa {

void validate(const AttentionConfig& cfg) {
    if (cfg.model_dim <= 0 || cfg.head_count <= 0) {
        throw InvalidConfig("attention dims must be positive");
    }
    if (cfg.model_dim % cfg.head_count != 0) {
        throw InvalidConfig("head count must divide model dim");
    }
}

namespace {

// Shared head loop for both attention flavors. mask/etypes/bias are null for
// the standard path.
AttentionResult attention_impl(Tape& tape, Value x, const AttentionWeights& w,
                               const AttentionConfig& cfg, const AttentionMask* mask,
                               const EdgeTypeMap* etypes, int layer_index, double dropout_p,
                               Rng* dropout_rng) {
    validate(cfg);
    const Tensor& xt = tape.value(x);
    if (xt.shape.size() != 2 || xt.shape[1] != cfg.model_dim) {
        throw ShapeMismatch("attention input must be n x d");
    }
    const int n = xt.shape[0];
    const int dk = cfg.head_dim();
    const AttentionMask full = mask == nullptr ? AttentionMask::all_allowed(n) : AttentionMask{};
    const AttentionMask& m = mask == nullptr ? full : *mask;
    if (m.n != n) throw ShapeMismatch("mask size does not match input");

    Value q = tape.matmul(x, tape.param(*w.wq));
    Value k = tape.matmul(x, tape.param(*w.wk));
    Value v = tape.matmul(x, tape.param(*w.wv));
    Value bias;
    if (etypes != nullptr) {
        bias = tape.gather_bias(tape.param(*w.bias_table), *etypes);
    }

    AttentionResult result;
    result.trace.layer_index = layer_index;
    std::vector<Value> head_outputs;
    for (int h = 0; h < cfg.head_count; ++h) {
        Value qh = tape.slice_cols(q, h * dk, dk);
        Value kh = tape.slice_cols(k, h * dk, dk);
        Value vh = tape.slice_cols(v, h * dk, dk);
        Value s = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dk)));
        if (bias.valid()) s = tape.add(s, bias);
        s = tape.mask_fill(s, m);
        Value weights = tape.masked_softmax_rows(s, m);
        result.trace.weights.push_back(tape.value(weights));
        if (dropout_rng != nullptr && dropout_p > 0.0) {
            weights = tape.dropout(weights, dropout_p, *dropout_rng);
        }
        head_outputs.push_back(tape.matmul(weights, vh));
    }
    Value concat = head_outputs.size() == 1 ? head_outputs[0] : tape.concat_cols(head_outputs);
    result.output = tape.matmul(concat, tape.param(*w.wo));
    return result;
}

}  // namespace

std::vector<Value> rasa_scores(Tape& tape, Value x, Parameter& wq, Parameter& wk,
                               const AttentionConfig& cfg, const AttentionMask& mask,
                               const EdgeTypeMap& etypes, Parameter& bias_table) {
    validate(cfg);
    const Tensor& xt = tape.value(x);
    if (xt.shape.size() != 2 || xt.shape[1] != cfg.model_dim) {
        throw ShapeMismatch("attention input must be n x d");
    }
    if (mask.n != xt.shape[0]) throw ShapeMismatch("mask size does not match input");
    const int dk = cfg.head_dim();
    Value q = tape.matmul(x, tape.param(wq));
    Value k = tape.matmul(x, tape.param(wk));
    Value bias = tape.gather_bias(tape.param(bias_table), etypes);
    std::vector<Value> scores;
    for (int h = 0; h < cfg.head_count; ++h) {
        Value qh = tape.slice_cols(q, h * dk, dk);
        Value kh = tape.slice_cols(k, h * dk, dk);
        Value s = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dk)));
        s = tape.add(s, bias);
        scores.push_back(tape.mask_fill(s, mask));
    }
    return scores;
}

AttentionResult rasa_attention(Tape& tape, Value x, const AttentionWeights& w,
                               const AttentionConfig& cfg, const AttentionMask& mask,
                               const EdgeTypeMap& etypes, int layer_index, double dropout_p,
                               Rng* dropout_rng) {
    if (w.bias_table == nullptr) throw InvalidConfig("relation-aware attention needs a bias table");
    return attention_impl(tape, x, w, cfg, &mask, &etypes, layer_index, dropout_p, dropout_rng);
}

AttentionResult standard_attention(Tape& tape, Value x, const AttentionWeights& w,
                                   const AttentionConfig& cfg, int layer_index, double dropout_p,
                                   Rng* dropout_rng) {
    return attention_impl(tape, x, w, cfg, nullptr, nullptr, layer_index, dropout_p, dropout_rng);
}

EntropyReport attention_entropy(const std::vector<AttentionTrace>& traces, int valid_nodes) {
    if (traces.empty()) throw EmptyTraceList("no attention traces to analyze");
    if (valid_nodes < 1) throw InvalidConfig("entropy needs at least one valid node");
    EntropyReport report;
    report.n = valid_nodes;
    for (const AttentionTrace& trace : traces) {
        double acc = 0.0;
        std::size_t rows = 0;
        for (const Tensor& w : trace.weights) {
            const int n = w.shape[0];
            if (valid_nodes > n) throw ShapeMismatch("valid_nodes exceeds trace size");
            for (int i = 0; i < valid_nodes; ++i) {
                double h = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p = w.at(i, j);
                    if (p > 0.0) h -= p * std::log(p);
                }
                acc += h;
                ++rows;
            }
        }
        report.per_layer_nats.push_back(rows == 0 ? 0.0 : acc / static_cast<double>(rows));
    }
    double mean = 0.0;
    for (double h : report.per_layer_nats) mean += h;
    mean /= static_cast<double>(report.per_layer_nats.size());
    report.normalized =
        valid_nodes > 1 ? mean / std::log(static_cast<double>(valid_nodes)) : 0.0;
    return report;
}

}  // namespace rasa
