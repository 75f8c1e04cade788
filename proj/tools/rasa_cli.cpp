#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rasa/checkpoint.hpp"
#include "rasa/data.hpp"
#include "rasa/errors.hpp"
#include "rasa/io.hpp"
#include "rasa/model.hpp"
#include "rasa/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_out_dir() {
    const char* env = std::getenv("RASA_OUT_DIR");
    return env != nullptr && *env != '\0' ? env : ".";
}

std::string timestamp_utc() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Every command drops a manifest into its output directory before doing any
// work; `argv` is enough to replay the run via `rasa --replay`.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config_path, const json& resolved, std::uint64_t seed,
                    const std::vector<std::string>& argv, const json& inputs = json::object()) {
    fs::create_directories(out_dir);
    json doc{{"command", command},     {"config_path", config_path}, {"config", resolved},
             {"seed", seed},           {"output_dir", out_dir},      {"started_at", timestamp_utc()},
             {"argv", argv},           {"inputs", inputs}};
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw rasa::Error("cannot write manifest in " + out_dir);
    out << doc.dump(2) << '\n';
}

json dataset_input_hashes(const std::string& data_dir) {
    json inputs = json::object();
    for (const char* name : {"train.json", "dev.json", "test.json"}) {
        const fs::path p = fs::path(data_dir) / name;
        if (fs::exists(p)) inputs[name] = rasa::content_hash_hex(p.string());
    }
    return inputs;
}

char parse_delimiter(const std::string& s) {
    if (s == "tab") return '\t';
    if (s == "pipe") return '|';
    if (s.size() == 1) return s[0];
    throw rasa::InvalidConfig("delimiter must be 'tab', 'pipe', or a single character");
}

// --- shared option bags ----------------------------------------------------

struct GenOpts {
    int entities = 32;
    double degree = 3.0;
    int relations = 4;
    int hops = 1;
    int count = 1000;
    std::uint64_t seed = 0;
    std::string out = default_out_dir();
};

struct ModelOpts {
    int layers = 3;
    int dim = 64;
    int heads = 4;
    double dropout = 0.0;
    std::string variant = "rasa";
};

struct OptimOpts {
    double lr = 2e-5;
    int batch = 32;
    int epochs = 15;
    int patience = 3;
    int warmup = 500;
};

struct TrainOpts {
    std::string data;
    std::string out = default_out_dir();
    std::uint64_t seed = 0;
    ModelOpts model;
    OptimOpts optim;
};

struct EvalOpts {
    std::string data;
    std::string checkpoint;
    std::string split = "test";
    std::string out = default_out_dir();
};

struct AblateOpts {
    int entities = 32;
    double degree = 3.0;
    int relations = 4;
    int count = 2857;  // ~2000 train examples after the 70% split
    std::uint64_t seed = 0;
    std::vector<int> hops_list = {1, 2, 3};
    std::vector<int> layers_list = {1, 2, 3};
    std::vector<std::string> variants = {"rasa"};
    std::vector<std::uint64_t> seeds = {0};
    int dim = 48;
    int heads = 4;
    double dropout = 0.0;
    OptimOpts optim;
    int jobs = 1;
    std::string out = default_out_dir();
};

struct SearchOpts {
    std::string triples;
    std::string delim = "tab";
    std::string out = default_out_dir();
};

struct StatsOpts {
    std::string kb;
    std::string q1, q2, q3;
    std::string out = default_out_dir();
};

// --- checkpoint plumbing ----------------------------------------------------

json model_config_json(const rasa::ModelConfig& cfg, std::uint64_t seed) {
    return {{"layer_count", cfg.layer_count},       {"model_dim", cfg.model_dim},
            {"head_count", cfg.head_count},         {"relation_count", cfg.relation_count},
            {"max_entities", cfg.max_entities},     {"dropout", cfg.dropout},
            {"variant", rasa::to_string(cfg.variant)}, {"seed", seed}};
}

std::pair<rasa::ModelConfig, std::uint64_t> model_config_from_json(const json& j) {
    rasa::ModelConfig cfg;
    cfg.layer_count = j.at("layer_count").get<int>();
    cfg.model_dim = j.at("model_dim").get<int>();
    cfg.head_count = j.at("head_count").get<int>();
    cfg.relation_count = j.at("relation_count").get<int>();
    cfg.max_entities = j.at("max_entities").get<int>();
    cfg.dropout = j.at("dropout").get<double>();
    cfg.variant = rasa::variant_from_string(j.at("variant").get<std::string>());
    return {cfg, j.at("seed").get<std::uint64_t>()};
}

// Accepts either a run directory or a direct path to the .bin file; the
// config sidecar must sit next to the binary.
std::pair<fs::path, fs::path> resolve_checkpoint(const std::string& arg) {
    fs::path bin(arg);
    if (fs::is_directory(bin)) bin /= "checkpoint.bin";
    const fs::path sidecar = bin.parent_path() / "model-config.json";
    if (!fs::exists(bin)) throw rasa::CheckpointMismatch("no checkpoint at " + bin.string());
    if (!fs::exists(sidecar)) {
        throw rasa::CheckpointMismatch("missing config sidecar " + sidecar.string());
    }
    return {bin, sidecar};
}

rasa::RasaModel load_model(const fs::path& bin, const fs::path& sidecar) {
    std::ifstream in(sidecar);
    json j;
    in >> j;
    auto [cfg, seed] = model_config_from_json(j);
    rasa::RasaModel model = rasa::build_model(cfg, seed);
    rasa::load_checkpoint(bin.string(), model.parameters());
    return model;
}

void check_model_fits(const rasa::ModelConfig& cfg, const rasa::Dataset& ds) {
    for (const rasa::KnowledgeGraph& g : ds.graphs) {
        if (g.num_relations > cfg.relation_count) {
            throw rasa::CheckpointMismatch("dataset has " + std::to_string(g.num_relations) +
                                           " relations, model supports " +
                                           std::to_string(cfg.relation_count));
        }
        if (g.num_entities > cfg.max_entities) {
            throw rasa::CheckpointMismatch("dataset graph has " + std::to_string(g.num_entities) +
                                           " entities, model capacity is " +
                                           std::to_string(cfg.max_entities));
        }
    }
}

// --- commands ----------------------------------------------------------------

int cmd_gen_data(const GenOpts& o, const std::string& config_path,
                 const std::vector<std::string>& argv) {
    rasa::SyntheticSpec spec;
    spec.num_entities = o.entities;
    spec.avg_out_degree = o.degree;
    spec.num_relations = o.relations;
    spec.hop_count = o.hops;
    spec.num_examples = o.count;
    spec.seed = o.seed;
    rasa::validate(spec);

    json resolved{{"entities", o.entities}, {"degree", o.degree}, {"relations", o.relations},
                  {"hops", o.hops},         {"count", o.count},   {"seed", o.seed},
                  {"out", o.out}};
    write_manifest(o.out, "gen-data", config_path, resolved, o.seed, argv);

    rasa::Dataset ds = rasa::gen_khop_dataset(spec);
    std::size_t verified = 0;
    for (const rasa::DatasetSplit* split : {&ds.train, &ds.dev, &ds.test}) {
        for (const rasa::KHopExample& ex : split->examples) {
            if (rasa::khop_answers(ds.graphs.at(ex.graph_id), ex.source, ex.path) != ex.answers) {
                throw rasa::Error("generated example failed oracle verification");
            }
            ++verified;
        }
    }
    rasa::save_dataset(o.out, ds);
    std::cout << "graph: n=" << ds.graphs[0].num_entities << " m=" << ds.graphs[0].num_edges()
              << " |R|=" << ds.graphs[0].num_relations << "\n"
              << "examples: train=" << ds.train.examples.size()
              << " dev=" << ds.dev.examples.size() << " test=" << ds.test.examples.size() << " ("
              << verified << " oracle-verified)\n"
              << "wrote " << o.out << "/{train,dev,test}.json\n";
    return 0;
}

int cmd_train(const TrainOpts& o, const std::string& config_path,
              const std::vector<std::string>& argv) {
    rasa::Dataset ds = rasa::load_dataset(o.data);
    rasa::ModelConfig mcfg;
    mcfg.layer_count = o.model.layers;
    mcfg.model_dim = o.model.dim;
    mcfg.head_count = o.model.heads;
    mcfg.dropout = o.model.dropout;
    mcfg.variant = rasa::variant_from_string(o.model.variant);
    mcfg.relation_count = 1;
    mcfg.max_entities = 1;
    for (const rasa::KnowledgeGraph& g : ds.graphs) {
        mcfg.relation_count = std::max(mcfg.relation_count, g.num_relations);
        mcfg.max_entities = std::max(mcfg.max_entities, g.num_entities);
    }

    rasa::TrainConfig tcfg;
    tcfg.learning_rate = o.optim.lr;
    tcfg.batch_size = o.optim.batch;
    tcfg.max_epochs = o.optim.epochs;
    tcfg.patience = o.optim.patience;
    tcfg.warmup_steps = o.optim.warmup;
    tcfg.seed = o.seed;

    json resolved{{"data", o.data},
                  {"out", o.out},
                  {"seed", o.seed},
                  {"model", model_config_json(mcfg, o.seed)},
                  {"optim",
                   {{"lr", o.optim.lr},
                    {"batch", o.optim.batch},
                    {"epochs", o.optim.epochs},
                    {"patience", o.optim.patience},
                    {"warmup", o.optim.warmup}}}};
    write_manifest(o.out, "train", config_path, resolved, o.seed, argv,
                   dataset_input_hashes(o.data));

    rasa::RasaModel model = rasa::build_model(mcfg, o.seed);
    rasa::TrainResult result = rasa::train(model, ds, tcfg);

    const fs::path out(o.out);
    rasa::save_checkpoint((out / "checkpoint.bin").string(), model.parameters());
    {
        std::ofstream sidecar(out / "model-config.json", std::ios::binary | std::ios::trunc);
        sidecar << model_config_json(mcfg, o.seed).dump(2) << '\n';
    }
    rasa::write_history_csv((out / "history.csv").string(), result.history);
    std::cout << "trained " << model.parameter_count() << " parameters ("
              << rasa::to_string(mcfg.variant) << ", L=" << mcfg.layer_count << ")\n"
              << "best dev hits@1 " << rasa::format_console(result.best_dev_hits_at_1)
              << " at epoch " << result.best_epoch << " (" << result.history.size()
              << " epochs run)\n"
              << "wrote " << (out / "checkpoint.bin").string() << "\n";
    return 0;
}

int cmd_eval(const EvalOpts& o, const std::string& config_path,
             const std::vector<std::string>& argv) {
    json resolved{{"data", o.data}, {"checkpoint", o.checkpoint}, {"split", o.split},
                  {"out", o.out}};
    write_manifest(o.out, "eval", config_path, resolved, 0, argv, dataset_input_hashes(o.data));

    rasa::Dataset ds = rasa::load_dataset(o.data);
    auto [bin, sidecar] = resolve_checkpoint(o.checkpoint);
    rasa::RasaModel model = load_model(bin, sidecar);
    check_model_fits(model.config, ds);
    rasa::MetricsRecord rec = rasa::evaluate(model, ds, rasa::split_from_string(o.split));
    rasa::write_metrics_csv((fs::path(o.out) / "metrics.csv").string(), rec);
    std::cout << rec.split << ": hits@1 " << rasa::format_console(rec.hits_at_1) << "  hits@10 "
              << rasa::format_console(rec.hits_at_10) << "  set-F1 "
              << rasa::format_console(rec.set_f1) << "  loss " << rasa::format_console(rec.loss)
              << "\n";
    return 0;
}

int cmd_ablate(const AblateOpts& o, const std::string& config_path,
               const std::vector<std::string>& argv) {
    rasa::SyntheticSpec base;
    base.num_entities = o.entities;
    base.avg_out_degree = o.degree;
    base.num_relations = o.relations;
    base.num_examples = o.count;
    base.seed = o.seed;
    base.hop_count = 1;  // per-cell hops come from the grid

    std::vector<rasa::Variant> variants;
    for (const std::string& v : o.variants) variants.push_back(rasa::variant_from_string(v));

    rasa::TrainConfig tcfg;
    tcfg.learning_rate = o.optim.lr;
    tcfg.batch_size = o.optim.batch;
    tcfg.max_epochs = o.optim.epochs;
    tcfg.patience = o.optim.patience;
    tcfg.warmup_steps = o.optim.warmup;
    tcfg.seed = o.seed;

    rasa::AblationModelSpec mspec{o.dim, o.heads, o.dropout};

    json resolved{{"entities", o.entities},
                  {"degree", o.degree},
                  {"relations", o.relations},
                  {"count", o.count},
                  {"seed", o.seed},
                  {"hops_list", o.hops_list},
                  {"layers_list", o.layers_list},
                  {"variants", o.variants},
                  {"seeds", o.seeds},
                  {"dim", o.dim},
                  {"heads", o.heads},
                  {"dropout", o.dropout},
                  {"jobs", o.jobs},
                  {"optim",
                   {{"lr", o.optim.lr},
                    {"batch", o.optim.batch},
                    {"epochs", o.optim.epochs},
                    {"patience", o.optim.patience},
                    {"warmup", o.optim.warmup}}},
                  {"out", o.out}};
    write_manifest(o.out, "ablate", config_path, resolved, o.seed, argv);

    rasa::AblationReport report = rasa::depth_ablation(base, o.hops_list, o.layers_list, variants,
                                                       o.seeds, tcfg, mspec, o.jobs);
    rasa::write_ablation_csv((fs::path(o.out) / "ablation.csv").string(), report);

    std::map<std::tuple<int, int, rasa::Variant>, std::vector<double>> grouped;
    std::map<std::tuple<int, int, rasa::Variant>, double> chances;
    for (const rasa::AblationCell& c : report.rows) {
        std::cout << "k=" << c.k << " L=" << c.L << " " << rasa::to_string(c.variant)
                  << " seed=" << c.seed << "  test hits@1 "
                  << rasa::format_console(c.test_hits_at_1) << " (chance "
                  << rasa::format_console(c.chance_hits_at_1) << ")\n";
        grouped[{c.k, c.L, c.variant}].push_back(c.test_hits_at_1);
        chances[{c.k, c.L, c.variant}] = c.chance_hits_at_1;
    }
    for (auto& [key, vals] : grouped) {
        std::sort(vals.begin(), vals.end());
        const double median = vals[vals.size() / 2];
        std::cout << "median k=" << std::get<0>(key) << " L=" << std::get<1>(key) << " "
                  << rasa::to_string(std::get<2>(key)) << ": "
                  << rasa::format_console(median) << "\n";
    }
    std::cout << "wrote " << (fs::path(o.out) / "ablation.csv").string() << "\n";
    return 0;
}

int cmd_entropy(const EvalOpts& o, const std::string& config_path,
                const std::vector<std::string>& argv) {
    json resolved{{"data", o.data}, {"checkpoint", o.checkpoint}, {"split", o.split},
                  {"out", o.out}};
    write_manifest(o.out, "entropy", config_path, resolved, 0, argv, dataset_input_hashes(o.data));

    rasa::Dataset ds = rasa::load_dataset(o.data);
    auto [bin, sidecar] = resolve_checkpoint(o.checkpoint);
    rasa::RasaModel model = load_model(bin, sidecar);
    check_model_fits(model.config, ds);
    rasa::EntropyReport report =
        rasa::entropy_report(model, ds, rasa::split_from_string(o.split));
    const std::string name = "entropy-" + rasa::to_string(model.config.variant) + ".csv";
    rasa::write_entropy_csv((fs::path(o.out) / name).string(), report);
    for (std::size_t l = 0; l < report.per_layer_nats.size(); ++l) {
        std::cout << "layer " << l << ": " << rasa::format_console(report.per_layer_nats[l])
                  << " nats\n";
    }
    std::cout << "normalized (H/ln n, n=" << report.n << "): "
              << rasa::format_console(report.normalized) << "\n"
              << "wrote " << (fs::path(o.out) / name).string() << "\n";
    return 0;
}

int cmd_search_space(const SearchOpts& o, const std::string& config_path,
                     const std::vector<std::string>& argv) {
    json resolved{{"triples", o.triples}, {"delim", o.delim}, {"out", o.out}};
    json inputs = json::object();
    if (fs::exists(o.triples)) inputs["triples"] = rasa::content_hash_hex(o.triples);
    write_manifest(o.out, "search-space", config_path, resolved, 0, argv, inputs);

    rasa::NamedGraph ng = rasa::load_triples(o.triples, parse_delimiter(o.delim));
    rasa::SearchSpaceReport report = rasa::search_space(ng.graph);
    rasa::write_search_space_json((fs::path(o.out) / "search-space.json").string(), report);
    std::cout << "n=" << report.n << " m=" << report.m << "\n"
              << "log2 attention patterns: standard=" << report.standard_log2_patterns
              << " rasa=" << report.rasa_log2_patterns
              << " rasa+self=" << report.rasa_with_self_log2_patterns << "\n";
    return 0;
}

int cmd_metaqa_stats(const StatsOpts& o, const std::string& config_path,
                     const std::vector<std::string>& argv) {
    json resolved{{"kb", o.kb}, {"q1", o.q1}, {"q2", o.q2}, {"q3", o.q3}, {"out", o.out}};
    write_manifest(o.out, "metaqa-stats", config_path, resolved, 0, argv);

    rasa::NamedGraph kb = rasa::load_metaqa_kb(o.kb);
    std::cout << "kb: entities=" << kb.graph.num_entities << " edges=" << kb.graph.num_edges()
              << " relations=" << kb.graph.num_relations << "\n";
    const std::pair<const std::string*, int> files[] = {{&o.q1, 1}, {&o.q2, 2}, {&o.q3, 3}};
    for (const auto& [path, hop] : files) {
        if (path->empty()) continue;
        std::int64_t unresolved = 0;
        const auto questions = rasa::load_metaqa_questions(*path, hop, &kb, &unresolved);
        std::cout << hop << "-hop questions: " << questions.size();
        if (unresolved > 0) std::cout << " (" << unresolved << " unresolved answer names)";
        std::cout << "\n";
    }
    return 0;
}

// --- dispatch ----------------------------------------------------------------

int dispatch(std::vector<std::string> args) {
    CLI::App app{"relation-aware sparse attention research kit"};
    app.require_subcommand(1);

    GenOpts gen;
    CLI::App* sub_gen = app.add_subcommand("gen-data", "generate a synthetic k-hop dataset");
    sub_gen->set_config("--config");
    sub_gen->add_option("--entities", gen.entities, "graph size n");
    sub_gen->add_option("--degree", gen.degree, "average out-degree");
    sub_gen->add_option("--relations", gen.relations, "relation vocabulary size");
    sub_gen->add_option("--hops", gen.hops, "query hop count k");
    sub_gen->add_option("--count", gen.count, "total number of examples");
    sub_gen->add_option("--seed", gen.seed, "generation seed");
    sub_gen->add_option("--out", gen.out, "output directory");

    TrainOpts tr;
    CLI::App* sub_train = app.add_subcommand("train", "train a model on a dataset directory");
    sub_train->set_config("--config");
    sub_train->add_option("--data", tr.data, "dataset directory")->required();
    sub_train->add_option("--out", tr.out, "output directory");
    sub_train->add_option("--seed", tr.seed, "training/init seed");
    sub_train->add_option("--layers", tr.model.layers, "number of blocks L");
    sub_train->add_option("--dim", tr.model.dim, "model width d");
    sub_train->add_option("--heads", tr.model.heads, "attention heads");
    sub_train->add_option("--dropout", tr.model.dropout, "post-softmax dropout");
    sub_train->add_option("--variant", tr.model.variant, "rasa | dense")
        ->check(CLI::IsMember({"rasa", "dense"}));
    sub_train->add_option("--lr", tr.optim.lr, "learning rate");
    sub_train->add_option("--batch", tr.optim.batch, "batch size");
    sub_train->add_option("--epochs", tr.optim.epochs, "max epochs");
    sub_train->add_option("--patience", tr.optim.patience, "early-stopping patience");
    sub_train->add_option("--warmup", tr.optim.warmup, "linear warmup steps");

    EvalOpts ev;
    CLI::App* sub_eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    sub_eval->set_config("--config");
    sub_eval->add_option("--data", ev.data, "dataset directory")->required();
    sub_eval->add_option("--checkpoint", ev.checkpoint, "run directory or checkpoint.bin")
        ->required();
    sub_eval->add_option("--split", ev.split, "train | dev | test")
        ->check(CLI::IsMember({"train", "dev", "test"}));
    sub_eval->add_option("--out", ev.out, "output directory");

    AblateOpts ab;
    CLI::App* sub_ablate = app.add_subcommand("ablate", "depth-ablation grid of training runs");
    sub_ablate->set_config("--config");
    sub_ablate->add_option("--entities", ab.entities, "graph size n");
    sub_ablate->add_option("--degree", ab.degree, "average out-degree");
    sub_ablate->add_option("--relations", ab.relations, "relation vocabulary size");
    sub_ablate->add_option("--count", ab.count, "examples per generated dataset");
    sub_ablate->add_option("--seed", ab.seed, "base seed");
    sub_ablate->add_option("--hops-list", ab.hops_list, "k grid")->delimiter(',');
    sub_ablate->add_option("--layers-list", ab.layers_list, "L grid")->delimiter(',');
    sub_ablate->add_option("--variants", ab.variants, "variant grid")->delimiter(',');
    sub_ablate->add_option("--seeds", ab.seeds, "training seeds")->delimiter(',');
    sub_ablate->add_option("--dim", ab.dim, "model width d");
    sub_ablate->add_option("--heads", ab.heads, "attention heads");
    sub_ablate->add_option("--dropout", ab.dropout, "post-softmax dropout");
    sub_ablate->add_option("--lr", ab.optim.lr, "learning rate");
    sub_ablate->add_option("--batch", ab.optim.batch, "batch size");
    sub_ablate->add_option("--epochs", ab.optim.epochs, "max epochs");
    sub_ablate->add_option("--patience", ab.optim.patience, "early-stopping patience");
    sub_ablate->add_option("--warmup", ab.optim.warmup, "linear warmup steps");
    sub_ablate->add_option("--jobs", ab.jobs, "parallel cells");
    sub_ablate->add_option("--out", ab.out, "output directory");

    EvalOpts en;
    CLI::App* sub_entropy = app.add_subcommand("entropy", "attention-entropy report");
    sub_entropy->set_config("--config");
    sub_entropy->add_option("--data", en.data, "dataset directory")->required();
    sub_entropy->add_option("--checkpoint", en.checkpoint, "run directory or checkpoint.bin")
        ->required();
    sub_entropy->add_option("--split", en.split, "train | dev | test")
        ->check(CLI::IsMember({"train", "dev", "test"}));
    sub_entropy->add_option("--out", en.out, "output directory");

    SearchOpts se;
    CLI::App* sub_search = app.add_subcommand("search-space", "attention-pattern accounting");
    sub_search->set_config("--config");
    sub_search->add_option("--triples", se.triples, "triple file")->required();
    sub_search->add_option("--delim", se.delim, "tab | pipe | single char");
    sub_search->add_option("--out", se.out, "output directory");

    StatsOpts st;
    CLI::App* sub_stats = app.add_subcommand("metaqa-stats", "MetaQA ingestion counts");
    sub_stats->set_config("--config");
    sub_stats->add_option("--kb", st.kb, "kb.txt (pipe-separated)")->required();
    sub_stats->add_option("--q1", st.q1, "1-hop question file");
    sub_stats->add_option("--q2", st.q2, "2-hop question file");
    sub_stats->add_option("--q3", st.q3, "3-hop question file");
    sub_stats->add_option("--out", st.out, "output directory");

    const std::vector<std::string> original = args;
    try {
        std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const auto config_of = [](CLI::App* sub) -> std::string {
        const CLI::Option* opt = sub->get_config_ptr();
        return opt != nullptr && opt->count() > 0 ? opt->as<std::string>() : std::string();
    };

    try {
        if (sub_gen->parsed()) return cmd_gen_data(gen, config_of(sub_gen), original);
        if (sub_train->parsed()) return cmd_train(tr, config_of(sub_train), original);
        if (sub_eval->parsed()) return cmd_eval(ev, config_of(sub_eval), original);
        if (sub_ablate->parsed()) return cmd_ablate(ab, config_of(sub_ablate), original);
        if (sub_entropy->parsed()) return cmd_entropy(en, config_of(sub_entropy), original);
        if (sub_search->parsed()) return cmd_search_space(se, config_of(sub_search), original);
        if (sub_stats->parsed()) return cmd_metaqa_stats(st, config_of(sub_stats), original);
    } catch (const rasa::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 5;
    } catch (const rasa::DegreeInfeasible& e) {
        std::cerr << "generation error: " << e.what() << "\n";
        return 3;
    } catch (const rasa::GenerationStalled& e) {
        std::cerr << "generation error: " << e.what() << "\n";
        return 3;
    } catch (const rasa::CheckpointMismatch& e) {
        std::cerr << "artifact mismatch: " << e.what() << "\n";
        return 4;
    } catch (const rasa::InvalidConfig& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const rasa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (!args.empty() && args[0] == "--replay") {
        if (args.size() != 2) {
            std::cerr << "usage: rasa --replay <manifest.json>\n";
            return 2;
        }
        std::ifstream in(args[1]);
        if (!in) {
            std::cerr << "cannot open manifest: " << args[1] << "\n";
            return 2;
        }
        json manifest;
        try {
            in >> manifest;
            args = manifest.at("argv").get<std::vector<std::string>>();
        } catch (const json::exception& e) {
            std::cerr << "bad manifest: " << e.what() << "\n";
            return 5;
        }
    }
    return dispatch(std::move(args));
}
