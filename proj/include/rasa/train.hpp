#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rasa/attention.hpp"
#include "rasa/data.hpp"
#include "rasa/model.hpp"
#include "rasa/tensor.hpp"

namespace rasa {

struct TrainConfig {
    double learning_rate = 2e-5;
    int batch_size = 32;
    int max_epochs = 15;
    int patience = 3;
    int warmup_steps = 500;
    std::uint64_t seed = 0;
    // Hits@1 cannot improve past 1.0, so a perfect dev epoch would only be
    // followed by `patience` no-improvement epochs; skipping them returns
    // the identical best-dev model sooner.
    bool stop_at_perfect_dev = true;
};

void validate(const TrainConfig& cfg);

struct MetricsRecord {
    std::string split;
    double hits_at_1 = 0.0;
    double hits_at_10 = 0.0;
    double set_f1 = 0.0;
    double loss = 0.0;
    int epoch = 0;
};

// Adam with fixed beta1=0.9, beta2=0.999, eps=1e-8 and bias correction.
struct AdamState {
    std::vector<Tensor> m, v;  // first/second moments, aligned with params
    std::int64_t step = 0;

    static AdamState init(const std::vector<Parameter*>& params);
};

// Linear warmup to the base rate over warmup_steps, then constant.
double warmup_lr(double base_lr, std::int64_t step, int warmup_steps);

// One update from the gradients currently stored in the parameters.
// Increments state.step; lr_t is the already-scheduled rate for this step.
void adam_step(const std::vector<Parameter*>& params, AdamState& state, double lr_t);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    MetricsRecord dev;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_dev_hits_at_1 = 0.0;
};

// Mini-batch epochs with seeded shuffling; dev Hits@1 after every epoch;
// stops once dev fails to improve for cfg.patience epochs and restores the
// parameters of the best dev epoch (earliest on ties).
TrainResult train(RasaModel& model, const Dataset& dataset, const TrainConfig& cfg);

// Hits@1 (argmax in gold), Hits@10 (top 10 by logit, lower index on ties),
// mean per-example set F1 of threshold-0.5 predictions, mean loss.
MetricsRecord evaluate(RasaModel& model, const Dataset& dataset, Split split);

// Always-predict-the-most-frequent-train-answer baseline, scored on `split`.
struct ChanceBaseline {
    int entity = 0;
    double hits_at_1 = 0.0;
};
ChanceBaseline chance_baseline(const Dataset& dataset, Split split);

struct AblationCell {
    int k = 0;
    int L = 0;
    Variant variant = Variant::rasa;
    std::uint64_t seed = 0;
    double test_hits_at_1 = 0.0;
    double dev_hits_at_1 = 0.0;
    double chance_hits_at_1 = 0.0;
    int best_epoch = 0;
};

struct AblationReport {
    std::vector<AblationCell> rows;
};

// Model shape knobs for ablation cells; layer count comes from the grid.
struct AblationModelSpec {
    int model_dim = 48;
    int head_count = 4;
    double dropout = 0.0;
};

// Trains one model per (k, L, variant, seed) cell. Datasets are generated
// per (k, seed) and shared by the cells that differ only in L/variant, so
// variants compete on identical data; parameters are never reused across
// cells. jobs > 1 fans cells out to threads; per-cell seeding keeps every
// cell's result independent of scheduling.
AblationReport depth_ablation(const SyntheticSpec& base, const std::vector<int>& k_values,
                              const std::vector<int>& L_values,
                              const std::vector<Variant>& variants,
                              const std::vector<std::uint64_t>& seeds, const TrainConfig& tcfg,
                              const AblationModelSpec& mspec, int jobs = 1);

// Attention entropy aggregated uniformly over the split's examples.
EntropyReport entropy_report(RasaModel& model, const Dataset& dataset, Split split);

}  // namespace rasa
