#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rasa/attention.hpp"
#include "rasa/graph.hpp"
#include "rasa/tensor.hpp"

namespace rasa {

enum class Variant { rasa, dense };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ModelConfig {
    int layer_count = 3;     // L
    int model_dim = 64;      // d
    int head_count = 4;      // h
    int relation_count = 4;  // |R|
    int max_entities = 64;   // capacity of the entity table
    double dropout = 0.0;
    Variant variant = Variant::rasa;

    AttentionConfig attention() const { return {model_dim, head_count}; }
};

// One query: start at `source`, follow `path` (k relation ids); `answers`
// is the sorted set of entities reachable by exactly that typed walk.
struct KHopExample {
    int graph_id = 0;
    int source = 0;
    std::vector<int> path;
    std::vector<int> answers;
};

struct LayerParams {
    Parameter wq, wk, wv, wo;          // d x d each
    Parameter ffn_w1, ffn_b1;          // d x 4d, 4d
    Parameter ffn_w2, ffn_b2;          // 4d x d, d
    Parameter norm1, norm2;            // d (scale only)
};

struct RasaModel {
    ModelConfig config;
    std::uint64_t seed = 0;
    Parameter entity_embeddings;    // max_entities x d
    Parameter relation_embeddings;  // |R| x d
    Parameter source_flag;          // d, added to the source node input
    Parameter bias_table;           // |R|+1, self slot last
    Parameter readout_w;            // d x 1
    Parameter readout_b;            // 1
    std::vector<LayerParams> layers;

    std::vector<Parameter*> parameters();
    void zero_grads();
    std::int64_t parameter_count();
};

// Deterministic initialization from the seed: Glorot-uniform matrices,
// zero biases and bias table, unit norm scales.
RasaModel build_model(const ModelConfig& cfg, std::uint64_t seed);

struct ForwardResult {
    Value logits;  // n x 1
    std::vector<AttentionTrace> traces;
};

// Runs the stacked blocks on an existing tape so a loss can be attached.
// Input is entity embedding + source flag (source row only); layer i
// additionally receives relation path[i]'s embedding on every node while
// i < k. Each block: attention, residual, norm, feed-forward, residual,
// norm. Readout maps node states to scalar logits.
ForwardResult forward_on_tape(Tape& tape, RasaModel& model, const KnowledgeGraph& g,
                              const KHopExample& example, bool training = false,
                              Rng* dropout_rng = nullptr);

// Convenience wrapper: fresh tape, returns materialized logits and traces.
std::pair<Tensor, std::vector<AttentionTrace>> forward(RasaModel& model, const KnowledgeGraph& g,
                                                       const KHopExample& example,
                                                       bool training = false,
                                                       Rng* dropout_rng = nullptr);

enum class PredictMode { top1, threshold };

// top1: singleton argmax (lowest index wins ties). threshold: all entities
// with sigmoid(logit) > tau.
std::vector<int> predict_answers(const Tensor& logits, PredictMode mode, double tau = 0.5);

// Mean binary cross-entropy of all n logits against the multi-hot gold set.
Value multi_hot_loss(Tape& tape, Value logits, const std::vector<int>& gold, int num_entities);

}  // namespace rasa
