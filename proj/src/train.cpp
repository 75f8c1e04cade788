#include "rasa/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "rasa/errors.hpp"
#include "rasa/rng.hpp"

namespace rasa {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

double stable_sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_mean(const Tensor& logits, const std::vector<int>& gold) {
    std::vector<char> is_gold(logits.values.size(), 0);
    for (int a : gold) is_gold[static_cast<std::size_t>(a)] = 1;
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.values.size(); ++i) {
        const double z = logits.values[i];
        const double t = is_gold[i] ? 1.0 : 0.0;
        loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    }
    return loss / static_cast<double>(logits.values.size());
}

const KnowledgeGraph& graph_of(const Dataset& ds, const KHopExample& ex) {
    if (ex.graph_id < 0 || ex.graph_id >= static_cast<int>(ds.graphs.size())) {
        throw IndexOutOfRange("example references unknown graph");
    }
    return ds.graphs[static_cast<std::size_t>(ex.graph_id)];
}

}  // namespace

void validate(const TrainConfig& cfg) {
    if (cfg.learning_rate <= 0.0) throw InvalidConfig("learning rate must be positive");
    if (cfg.batch_size < 1) throw InvalidConfig("batch size must be >= 1");
    if (cfg.max_epochs < 1) throw InvalidConfig("max epochs must be >= 1");
    if (cfg.patience < 1) throw InvalidConfig("patience must be >= 1");
    if (cfg.patience > cfg.max_epochs) throw InvalidConfig("patience cannot exceed max epochs");
    if (cfg.warmup_steps < 1) throw InvalidConfig("warmup steps must be >= 1");
}

AdamState AdamState::init(const std::vector<Parameter*>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Parameter* p : params) {
        s.m.push_back(Tensor::zeros(p->tensor.shape));
        s.v.push_back(Tensor::zeros(p->tensor.shape));
    }
    return s;
}

double warmup_lr(double base_lr, std::int64_t step, int warmup_steps) {
    const double frac = static_cast<double>(step) / static_cast<double>(warmup_steps);
    return base_lr * std::min(1.0, frac);
}

void adam_step(const std::vector<Parameter*>& params, AdamState& state, double lr_t) {
    if (params.size() != state.m.size()) throw ShapeMismatch("optimizer state size mismatch");
    const std::int64_t t = ++state.step;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        if (!p.gradient.same_shape(p.tensor) || !state.m[i].same_shape(p.tensor)) {
            throw ShapeMismatch("optimizer state shape mismatch for " + p.id);
        }
        double* m = state.m[i].values.data();
        double* v = state.v[i].values.data();
        double* w = p.tensor.values.data();
        const double* g = p.gradient.values.data();
        for (std::size_t j = 0; j < p.tensor.values.size(); ++j) {
            m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
            v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= lr_t * mhat / (std::sqrt(vhat) + kEps);
        }
    }
}

TrainResult train(RasaModel& model, const Dataset& dataset, const TrainConfig& cfg) {
    validate(cfg);
    if (dataset.train.examples.empty()) throw EmptySplit("train split is empty");
    if (dataset.dev.examples.empty()) throw EmptySplit("dev split is empty");

    std::vector<Parameter*> params = model.parameters();
    AdamState state = AdamState::init(params);
    Rng dropout_rng(derive_seed(cfg.seed, 0x64726f70ULL));

    TrainResult result;
    std::vector<std::vector<double>> best_values;
    int epochs_since_improve = 0;
    const std::size_t train_n = dataset.train.examples.size();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<std::size_t> order(train_n);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(derive_seed(cfg.seed, 0x73687566ULL, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t cursor = 0;
        while (cursor < train_n) {
            const std::size_t batch_end =
                std::min(train_n, cursor + static_cast<std::size_t>(cfg.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(batch_end - cursor);
            model.zero_grads();
            for (std::size_t i = cursor; i < batch_end; ++i) {
                const KHopExample& ex = dataset.train.examples[order[i]];
                Tape tape;
                ForwardResult fwd = forward_on_tape(tape, model, graph_of(dataset, ex), ex,
                                                    /*training=*/true, &dropout_rng);
                Value loss = multi_hot_loss(tape, fwd.logits, ex.answers,
                                            graph_of(dataset, ex).num_entities);
                epoch_loss += tape.value(loss).item();
                tape.backward(tape.scale(loss, inv_batch));
            }
            const double lr_t = warmup_lr(cfg.learning_rate, state.step + 1, cfg.warmup_steps);
            adam_step(params, state, lr_t);
            cursor = batch_end;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(train_n);
        rec.dev = evaluate(model, dataset, Split::dev);
        rec.dev.epoch = epoch;
        result.history.push_back(rec);

        if (result.best_epoch == 0 || rec.dev.hits_at_1 > result.best_dev_hits_at_1) {
            result.best_epoch = epoch;
            result.best_dev_hits_at_1 = rec.dev.hits_at_1;
            best_values.clear();
            for (const Parameter* p : params) best_values.push_back(p->tensor.values);
            epochs_since_improve = 0;
        } else {
            ++epochs_since_improve;
        }
        if (epochs_since_improve >= cfg.patience) break;
        if (cfg.stop_at_perfect_dev && result.best_dev_hits_at_1 >= 1.0) break;
    }

    for (std::size_t i = 0; i < params.size(); ++i) params[i]->tensor.values = best_values[i];
    return result;
}

MetricsRecord evaluate(RasaModel& model, const Dataset& dataset, Split split) {
    const DatasetSplit& ds = dataset.split(split);
    if (ds.examples.empty()) throw EmptySplit("split " + to_string(split) + " is empty");

    MetricsRecord rec;
    rec.split = to_string(split);
    double hits1 = 0.0, hits10 = 0.0, f1_sum = 0.0, loss_sum = 0.0;
    for (const KHopExample& ex : ds.examples) {
        const KnowledgeGraph& g = graph_of(dataset, ex);
        auto [logits, traces] = forward(model, g, ex);
        const auto& gold = ex.answers;
        const auto in_gold = [&gold](int e) {
            return std::binary_search(gold.begin(), gold.end(), e);
        };

        const std::vector<int> top1 = predict_answers(logits, PredictMode::top1);
        if (in_gold(top1[0])) hits1 += 1.0;

        std::vector<int> order(logits.values.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&logits](int a, int b) {
            if (logits.values[a] != logits.values[b]) return logits.values[a] > logits.values[b];
            return a < b;
        });
        const std::size_t topk = std::min<std::size_t>(10, order.size());
        for (std::size_t i = 0; i < topk; ++i) {
            if (in_gold(order[i])) {
                hits10 += 1.0;
                break;
            }
        }

        const std::vector<int> preds = predict_answers(logits, PredictMode::threshold, 0.5);
        std::size_t tp = 0;
        for (int p : preds) {
            if (in_gold(p)) ++tp;
        }
        const std::size_t fp = preds.size() - tp;
        const std::size_t fn = gold.size() - tp;
        const double denom = static_cast<double>(2 * tp + fp + fn);
        f1_sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;

        loss_sum += bce_mean(logits, gold);
    }
    const double n = static_cast<double>(ds.examples.size());
    rec.hits_at_1 = hits1 / n;
    rec.hits_at_10 = hits10 / n;
    rec.set_f1 = f1_sum / n;
    rec.loss = loss_sum / n;
    return rec;
}

ChanceBaseline chance_baseline(const Dataset& dataset, Split split) {
    if (dataset.train.examples.empty()) throw EmptySplit("train split is empty");
    const DatasetSplit& target = dataset.split(split);
    if (target.examples.empty()) throw EmptySplit("split " + to_string(split) + " is empty");

    std::map<int, std::int64_t> counts;
    for (const KHopExample& ex : dataset.train.examples) {
        for (int a : ex.answers) ++counts[a];
    }
    ChanceBaseline base;
    std::int64_t best = -1;
    for (const auto& [entity, count] : counts) {
        if (count > best) {  // map order gives lowest entity on ties
            best = count;
            base.entity = entity;
        }
    }
    double hits = 0.0;
    for (const KHopExample& ex : target.examples) {
        if (std::binary_search(ex.answers.begin(), ex.answers.end(), base.entity)) hits += 1.0;
    }
    base.hits_at_1 = hits / static_cast<double>(target.examples.size());
    return base;
}

AblationReport depth_ablation(const SyntheticSpec& base, const std::vector<int>& k_values,
                              const std::vector<int>& L_values,
                              const std::vector<Variant>& variants,
                              const std::vector<std::uint64_t>& seeds, const TrainConfig& tcfg,
                              const AblationModelSpec& mspec, int jobs) {
    if (k_values.empty() || L_values.empty() || variants.empty() || seeds.empty()) {
        throw InvalidConfig("ablation grids must be non-empty");
    }
    if (jobs < 1) throw InvalidConfig("jobs must be >= 1");

    // One dataset per (k, seed); cells differing only in L/variant train on
    // identical data so the comparisons isolate architecture.
    struct TaskData {
        Dataset dataset;
        double chance = 0.0;
    };
    std::map<std::pair<int, std::uint64_t>, TaskData> data;
    for (int k : k_values) {
        for (std::uint64_t s : seeds) {
            SyntheticSpec spec = base;
            spec.hop_count = k;
            spec.seed = derive_seed(base.seed, 0x64617461ULL, static_cast<std::uint64_t>(k), s);
            TaskData td;
            td.dataset = gen_khop_dataset(spec);
            td.chance = chance_baseline(td.dataset, Split::test).hits_at_1;
            data.emplace(std::make_pair(k, s), std::move(td));
        }
    }

    std::vector<AblationCell> cells;
    for (int k : k_values) {
        for (int L : L_values) {
            for (Variant variant : variants) {
                for (std::uint64_t s : seeds) {
                    AblationCell c;
                    c.k = k;
                    c.L = L;
                    c.variant = variant;
                    c.seed = s;
                    cells.push_back(c);
                }
            }
        }
    }

    auto run_cell = [&](AblationCell& cell) {
        const TaskData& td = data.at({cell.k, cell.seed});
        ModelConfig mcfg;
        mcfg.layer_count = cell.L;
        mcfg.model_dim = mspec.model_dim;
        mcfg.head_count = mspec.head_count;
        mcfg.relation_count = base.num_relations;
        mcfg.max_entities = base.num_entities;
        mcfg.dropout = mspec.dropout;
        mcfg.variant = cell.variant;
        const std::uint64_t vtag = cell.variant == Variant::rasa ? 1 : 2;
        RasaModel model = build_model(
            mcfg, derive_seed(cell.seed, 0x6d6f64ULL, static_cast<std::uint64_t>(cell.L) * 8 + vtag,
                              static_cast<std::uint64_t>(cell.k)));
        TrainConfig tc = tcfg;
        tc.seed = derive_seed(cell.seed, 0x7472ULL, static_cast<std::uint64_t>(cell.L) * 8 + vtag,
                              static_cast<std::uint64_t>(cell.k));
        TrainResult tr = train(model, td.dataset, tc);
        cell.best_epoch = tr.best_epoch;
        cell.dev_hits_at_1 = tr.best_dev_hits_at_1;
        cell.test_hits_at_1 = evaluate(model, td.dataset, Split::test).hits_at_1;
        cell.chance_hits_at_1 = td.chance;
    };

    if (jobs == 1) {
        for (AblationCell& cell : cells) run_cell(cell);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                run_cell(cells[i]);
            }
        };
        std::vector<std::thread> pool;
        const int nthreads = std::min<int>(jobs, static_cast<int>(cells.size()));
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    AblationReport report;
    report.rows = std::move(cells);
    return report;
}

EntropyReport entropy_report(RasaModel& model, const Dataset& dataset, Split split) {
    const DatasetSplit& ds = dataset.split(split);
    if (ds.examples.empty()) throw EmptySplit("split " + to_string(split) + " is empty");

    std::vector<double> layer_sums;
    int n = 0;
    for (const KHopExample& ex : ds.examples) {
        const KnowledgeGraph& g = graph_of(dataset, ex);
        auto [logits, traces] = forward(model, g, ex);
        EntropyReport one = attention_entropy(traces, g.num_entities);
        if (layer_sums.empty()) {
            layer_sums.assign(one.per_layer_nats.size(), 0.0);
            n = one.n;
        } else if (one.per_layer_nats.size() != layer_sums.size() || one.n != n) {
            throw ShapeMismatch("entropy traces disagree across examples");
        }
        for (std::size_t l = 0; l < layer_sums.size(); ++l) layer_sums[l] += one.per_layer_nats[l];
    }
    EntropyReport report;
    report.n = n;
    const double count = static_cast<double>(ds.examples.size());
    double mean = 0.0;
    for (double s : layer_sums) {
        report.per_layer_nats.push_back(s / count);
        mean += s / count;
    }
    mean /= static_cast<double>(layer_sums.size());
    report.normalized = n > 1 ? mean / std::log(static_cast<double>(n)) : 0.0;
    return report;
}

}  // namespace rasa
