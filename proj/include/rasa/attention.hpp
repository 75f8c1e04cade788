#pragma once

#include <vector>

#include "rasa/graph.hpp"
#include "rasa/tensor.hpp"

namespace rasa {

struct AttentionConfig {
    int model_dim = 0;   // d
    int head_count = 0;  // h
    int head_dim() const { return model_dim / head_count; }
};

// Throws InvalidConfig unless d, h are positive and h divides d.
void validate(const AttentionConfig& cfg);

// Post-softmax weights of one attention layer, one n x n matrix per head.
// Rows are stochastic; entries outside the mask are exactly zero for
// relation-aware traces.
struct AttentionTrace {
    std::vector<Tensor> weights;
    int layer_index = 0;
};

struct EntropyReport {
    std::vector<double> per_layer_nats;  // H per layer, in nats
    double normalized = 0.0;             // mean(per_layer_nats) / ln(n), 0 when n = 1
    int n = 0;
};

// Projection parameters of one attention layer. bias_table (length |R|+1,
// self slot last) may be null for the dense/standard path.
struct AttentionWeights {
    Parameter* wq = nullptr;
    Parameter* wk = nullptr;
    Parameter* wv = nullptr;
    Parameter* wo = nullptr;
    Parameter* bias_table = nullptr;
};

struct AttentionResult {
    Value output;  // n x d
    AttentionTrace trace;
};

// Per-head masked score matrices: S_ij = q_i.k_j / sqrt(d_k) + b(type(i,j))
// on allowed pairs, the mask sentinel elsewhere. wq/wk are the full d x d
// projections; heads are column slices.
std::vector<Value> rasa_scores(Tape& tape, Value x, Parameter& wq, Parameter& wk,
                               const AttentionConfig& cfg, const AttentionMask& mask,
                               const EdgeTypeMap& etypes, Parameter& bias_table);

// Full relation-aware layer: per-head masked softmax over rasa_scores, times
// the value projection, heads concatenated and output-projected. Optional
// post-softmax dropout is active only when dropout_rng is non-null and
// dropout_p > 0; the trace always records the pre-dropout weights.
AttentionResult rasa_attention(Tape& tape, Value x, const AttentionWeights& w,
                               const AttentionConfig& cfg, const AttentionMask& mask,
                               const EdgeTypeMap& etypes, int layer_index = 0,
                               double dropout_p = 0.0, Rng* dropout_rng = nullptr);

// Unmasked, bias-free attention over the same parameter layout.
AttentionResult standard_attention(Tape& tape, Value x, const AttentionWeights& w,
                                   const AttentionConfig& cfg, int layer_index = 0,
                                   double dropout_p = 0.0, Rng* dropout_rng = nullptr);

// Mean row entropy per layer (mean over heads and the first valid_nodes
// query rows, 0.ln0 := 0) plus the ln(n)-normalized cross-layer mean.
EntropyReport attention_entropy(const std::vector<AttentionTrace>& traces, int valid_nodes);

}  // namespace rasa
