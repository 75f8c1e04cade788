#include "rasa/model.hpp"

#include <cmath>
#include <numeric>

#include "rasa/errors.hpp"

namespace rasa {

std::string to_string(Variant v) { return v == Variant::rasa ? "rasa" : "dense"; }

Variant variant_from_string(const std::string& s) {
    if (s == "rasa") return Variant::rasa;
    if (s == "dense") return Variant::dense;
    throw InvalidConfig("unknown variant: " + s);
}

namespace {

void validate(const ModelConfig& cfg) {
    if (cfg.layer_count < 1) throw InvalidConfig("layer count must be >= 1");
    if (cfg.relation_count < 1) throw InvalidConfig("relation count must be >= 1");
    if (cfg.max_entities < 1) throw InvalidConfig("entity capacity must be >= 1");
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw InvalidConfig("dropout must be in [0,1)");
    validate(cfg.attention());
}

Parameter make_matrix(const std::string& id, int rows, int cols, Rng& rng) {
    return Parameter(id, glorot_uniform({rows, cols}, rows, cols, rng));
}

}  // namespace

std::vector<Parameter*> RasaModel::parameters() {
    std::vector<Parameter*> out = {&entity_embeddings, &relation_embeddings, &source_flag,
                                   &bias_table,        &readout_w,           &readout_b};
    for (LayerParams& l : layers) {
        for (Parameter* p : {&l.wq, &l.wk, &l.wv, &l.wo, &l.ffn_w1, &l.ffn_b1, &l.ffn_w2,
                             &l.ffn_b2, &l.norm1, &l.norm2}) {
            out.push_back(p);
        }
    }
    return out;
}

void RasaModel::zero_grads() {
    for (Parameter* p : parameters()) p->zero_grad();
}

std::int64_t RasaModel::parameter_count() {
    std::int64_t n = 0;
    for (Parameter* p : parameters()) n += p->tensor.size();
    return n;
}

RasaModel build_model(const ModelConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    Rng rng(derive_seed(seed, 0x6d6f64656cULL));  // distinct stream per purpose
    const int d = cfg.model_dim;
    const int ff = 4 * d;
    RasaModel m;
    m.config = cfg;
    m.seed = seed;
    m.entity_embeddings = make_matrix("entity_embeddings", cfg.max_entities, d, rng);
    m.relation_embeddings = make_matrix("relation_embeddings", cfg.relation_count, d, rng);
    m.source_flag = Parameter("source_flag", glorot_uniform({d}, d, d, rng));
    m.bias_table = Parameter("bias_table", Tensor::zeros({cfg.relation_count + 1}));
    m.readout_w = Parameter("readout_w", glorot_uniform({d, 1}, d, 1, rng));
    m.readout_b = Parameter("readout_b", Tensor::zeros({1}));
    for (int l = 0; l < cfg.layer_count; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        LayerParams lp;
        lp.wq = make_matrix(p + "wq", d, d, rng);
        lp.wk = make_matrix(p + "wk", d, d, rng);
        lp.wv = make_matrix(p + "wv", d, d, rng);
        lp.wo = make_matrix(p + "wo", d, d, rng);
        lp.ffn_w1 = make_matrix(p + "ffn_w1", d, ff, rng);
        lp.ffn_b1 = Parameter(p + "ffn_b1", Tensor::zeros({ff}));
        lp.ffn_w2 = make_matrix(p + "ffn_w2", ff, d, rng);
        lp.ffn_b2 = Parameter(p + "ffn_b2", Tensor::zeros({d}));
        lp.norm1 = Parameter(p + "norm1", Tensor::full({d}, 1.0));
        lp.norm2 = Parameter(p + "norm2", Tensor::full({d}, 1.0));
        m.layers.push_back(std::move(lp));
    }
    return m;
}

ForwardResult forward_on_tape(Tape& tape, RasaModel& model, const KnowledgeGraph& g,
                              const KHopExample& example, bool training, Rng* dropout_rng) {
    const ModelConfig& cfg = model.config;
    const int n = g.num_entities;
    if (n < 1 || n > cfg.max_entities) {
        throw IndexOutOfRange("graph size exceeds the model's entity capacity");
    }
    if (g.num_relations > cfg.relation_count) {
        throw IndexOutOfRange("graph relations exceed the model's relation count");
    }
    if (example.source < 0 || example.source >= n) {
        throw IndexOutOfRange("example source outside graph");
    }
    if (example.path.empty()) throw InvalidConfig("example path must have k >= 1 relations");
    for (int r : example.path) {
        if (r < 0 || r >= cfg.relation_count) throw IndexOutOfRange("path relation out of range");
    }

    const bool rasa = cfg.variant == Variant::rasa;
    AttentionMask mask = rasa ? AttentionMask{} : AttentionMask::all_allowed(n);
    EdgeTypeMap etypes;
    if (rasa) {
        auto derived = derive_mask(g, DirectionPolicy::symmetric);
        mask = std::move(derived.first);
        etypes = std::move(derived.second);
    }

    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    Value x = tape.gather_rows(tape.param(model.entity_embeddings), ids);
    x = tape.add_row_at(x, example.source, tape.param(model.source_flag));

    const double p = training ? cfg.dropout : 0.0;
    Rng* rng = p > 0.0 ? dropout_rng : nullptr;
    const int k = static_cast<int>(example.path.size());
    ForwardResult result;
    for (int l = 0; l < cfg.layer_count; ++l) {
        if (l < k) {
            Value rel = tape.gather_rows(tape.param(model.relation_embeddings), {example.path[l]});
            x = tape.add_broadcast(x, rel);
        }
        LayerParams& lp = model.layers[l];
        AttentionWeights w{&lp.wq, &lp.wk, &lp.wv, &lp.wo, &model.bias_table};
        // pre-norm blocks: the residual stream stays un-normalized
        Value a_in = tape.layer_norm(x, tape.param(lp.norm1));
        AttentionResult attn =
            rasa ? rasa_attention(tape, a_in, w, cfg.attention(), mask, etypes, l, p, rng)
                 : standard_attention(tape, a_in, w, cfg.attention(), l, p, rng);
        result.traces.push_back(std::move(attn.trace));
        x = tape.add(x, attn.output);
        Value f_in = tape.layer_norm(x, tape.param(lp.norm2));
        Value h = tape.relu(tape.add_broadcast(tape.matmul(f_in, tape.param(lp.ffn_w1)),
                                               tape.param(lp.ffn_b1)));
        Value f = tape.add_broadcast(tape.matmul(h, tape.param(lp.ffn_w2)), tape.param(lp.ffn_b2));
        x = tape.add(x, f);
    }
    result.logits = tape.add_broadcast(tape.matmul(x, tape.param(model.readout_w)),
                                       tape.param(model.readout_b));
    return result;
}

std::pair<Tensor, std::vector<AttentionTrace>> forward(RasaModel& model, const KnowledgeGraph& g,
                                                       const KHopExample& example, bool training,
                                                       Rng* dropout_rng) {
    Tape tape;
    ForwardResult r = forward_on_tape(tape, model, g, example, training, dropout_rng);
    return {tape.value(r.logits), std::move(r.traces)};
}

std::vector<int> predict_answers(const Tensor& logits, PredictMode mode, double tau) {
    if (logits.values.empty()) throw InvalidConfig("predict_answers needs at least one logit");
    if (mode == PredictMode::top1) {
        int best = 0;
        for (int i = 1; i < static_cast<int>(logits.values.size()); ++i) {
            if (logits.values[i] > logits.values[best]) best = i;
        }
        return {best};
    }
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(logits.values.size()); ++i) {
        const double z = logits.values[i];
        const double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        if (s > tau) out.push_back(i);
    }
    return out;
}

Value multi_hot_loss(Tape& tape, Value logits, const std::vector<int>& gold, int num_entities) {
    if (gold.empty()) throw EmptyGoldSet("loss needs a non-empty gold set");
    std::vector<double> targets(static_cast<std::size_t>(num_entities), 0.0);
    for (int a : gold) {
        if (a < 0 || a >= num_entities) throw IndexOutOfRange("gold answer outside graph");
        targets[static_cast<std::size_t>(a)] = 1.0;
    }
    return tape.binary_cross_entropy_with_logits(logits, std::move(targets));
}

}  // namespace rasa
