#include "rasa/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "rasa/errors.hpp"
#include "rasa/rng.hpp"

namespace rasa {

using nlohmann::json;

void validate(const SyntheticSpec& spec) {
    if (spec.num_entities < 2) throw InvalidConfig("need at least 2 entities");
    if (spec.avg_out_degree <= 0.0) throw InvalidConfig("avg_out_degree must be positive");
    if (spec.num_relations < 1) throw InvalidConfig("num_relations must be >= 1");
    if (spec.hop_count < 1) throw InvalidConfig("hop_count must be >= 1");
    if (spec.num_examples < 1) throw InvalidConfig("num_examples must be >= 1");
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        default: return "test";
    }
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw InvalidConfig("unknown split: " + s);
}

const DatasetSplit& Dataset::split(Split s) const {
    switch (s) {
        case Split::train: return train;
        case Split::dev: return dev;
        default: return test;
    }
}

KnowledgeGraph gen_random_graph(const SyntheticSpec& spec, std::uint64_t graph_seed) {
    validate(spec);
    const int n = spec.num_entities;
    const int nr = spec.num_relations;
    const auto m = static_cast<std::int64_t>(std::llround(n * spec.avg_out_degree));
    const std::int64_t capacity =
        static_cast<std::int64_t>(n) * (n - 1) * static_cast<std::int64_t>(nr);
    if (m > capacity) {
        throw DegreeInfeasible("requested " + std::to_string(m) + " edges, capacity " +
                               std::to_string(capacity));
    }
    Rng rng(graph_seed);
    std::set<Triple> chosen;
    std::int64_t tries = 0;
    const std::int64_t try_cap = 30 * m + 1000;
    while (static_cast<std::int64_t>(chosen.size()) < m && tries < try_cap) {
        ++tries;
        const int h = rng.index(n);
        const int r = rng.index(nr);
        int t = rng.index(n - 1);
        if (t >= h) ++t;  // uniform over tails != head
        chosen.insert({h, r, t});
    }
    if (static_cast<std::int64_t>(chosen.size()) < m) {
        // Near-capacity densities make rejection sampling crawl; enumerate
        // the remaining free slots and draw without replacement instead.
        std::vector<Triple> free_slots;
        for (int h = 0; h < n; ++h) {
            for (int r = 0; r < nr; ++r) {
                for (int t = 0; t < n; ++t) {
                    if (t == h) continue;
                    Triple cand{h, r, t};
                    if (!chosen.count(cand)) free_slots.push_back(cand);
                }
            }
        }
        rng.shuffle(free_slots);
        for (std::size_t i = 0; static_cast<std::int64_t>(chosen.size()) < m; ++i) {
            chosen.insert(free_slots[i]);
        }
    }
    return build_graph({chosen.begin(), chosen.end()}, n, nr);
}

Dataset gen_khop_dataset(const SyntheticSpec& spec) {
    validate(spec);
    Dataset ds;
    ds.spec = spec;
    ds.graphs.push_back(gen_random_graph(spec, derive_seed(spec.seed, 0x677261706830ULL)));
    const KnowledgeGraph& g = ds.graphs[0];

    Rng rng(derive_seed(spec.seed, 0x6578616d706cULL));
    constexpr int kRetryCap = 1000;
    std::vector<KHopExample> all;
    all.reserve(static_cast<std::size_t>(spec.num_examples));
    for (int i = 0; i < spec.num_examples; ++i) {
        KHopExample ex;
        ex.graph_id = 0;
        int attempt = 0;
        for (;; ++attempt) {
            if (attempt == kRetryCap) {
                throw GenerationStalled("no non-empty " + std::to_string(spec.hop_count) +
                                        "-hop query found after " + std::to_string(kRetryCap) +
                                        " draws; graph too sparse");
            }
            ex.source = rng.index(spec.num_entities);
            ex.path.clear();
            for (int hop = 0; hop < spec.hop_count; ++hop) {
                ex.path.push_back(rng.index(spec.num_relations));
            }
            ex.answers = khop_answers(g, ex.source, ex.path);
            if (!ex.answers.empty()) break;
        }
        all.push_back(std::move(ex));
    }

    // Group repeated draws of the same (source, path) so a query never spans
    // splits; keys are dealt out in seeded shuffled order, filling train to
    // 70% of examples, then dev to 15%, remainder test.
    std::map<std::pair<int, std::vector<int>>, std::vector<std::size_t>> by_key;
    for (std::size_t i = 0; i < all.size(); ++i) {
        by_key[{all[i].source, all[i].path}].push_back(i);
    }
    std::vector<const std::vector<std::size_t>*> groups;
    groups.reserve(by_key.size());
    for (const auto& [key, idxs] : by_key) groups.push_back(&idxs);
    Rng split_rng(derive_seed(spec.seed, 0x73706c6974ULL));
    split_rng.shuffle(groups);

    const double total = static_cast<double>(all.size());
    for (const auto* group : groups) {
        DatasetSplit* target;
        if (static_cast<double>(ds.train.examples.size()) < 0.70 * total) {
            target = &ds.train;
        } else if (static_cast<double>(ds.dev.examples.size()) < 0.15 * total) {
            target = &ds.dev;
        } else {
            target = &ds.test;
        }
        for (std::size_t i : *group) target->examples.push_back(all[i]);
    }
    return ds;
}

namespace {

json graph_to_json(const KnowledgeGraph& g) {
    json triples = json::array();
    for (const Triple& t : g.edges) triples.push_back({t.head, t.relation, t.tail});
    return {{"num_entities", g.num_entities},
            {"num_relations", g.num_relations},
            {"triples", std::move(triples)}};
}

KnowledgeGraph graph_from_json(const json& j) {
    std::vector<Triple> triples;
    for (const auto& t : j.at("triples")) {
        triples.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
    }
    return build_graph(std::move(triples), j.at("num_entities").get<int>(),
                       j.at("num_relations").get<int>());
}

json spec_to_json(const SyntheticSpec& s) {
    return {{"num_entities", s.num_entities},   {"avg_out_degree", s.avg_out_degree},
            {"num_relations", s.num_relations}, {"hop_count", s.hop_count},
            {"num_examples", s.num_examples},   {"seed", s.seed}};
}

SyntheticSpec spec_from_json(const json& j) {
    SyntheticSpec s;
    s.num_entities = j.at("num_entities").get<int>();
    s.avg_out_degree = j.at("avg_out_degree").get<double>();
    s.num_relations = j.at("num_relations").get<int>();
    s.hop_count = j.at("hop_count").get<int>();
    s.num_examples = j.at("num_examples").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

void write_split_file(const std::filesystem::path& path, const Dataset& ds, Split which) {
    json doc;
    doc["split"] = to_string(which);
    doc["spec"] = spec_to_json(ds.spec);
    json graphs = json::array();
    for (const KnowledgeGraph& g : ds.graphs) graphs.push_back(graph_to_json(g));
    doc["graphs"] = std::move(graphs);
    json examples = json::array();
    for (const KHopExample& ex : ds.split(which).examples) {
        examples.push_back({{"graph", ex.graph_id},
                            {"source", ex.source},
                            {"path", ex.path},
                            {"answers", ex.answers}});
    }
    doc["examples"] = std::move(examples);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& dataset) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_split_file(base / "train.json", dataset, Split::train);
    write_split_file(base / "dev.json", dataset, Split::dev);
    write_split_file(base / "test.json", dataset, Split::test);
}

Dataset load_dataset(const std::string& dir) {
    const std::filesystem::path base(dir);
    Dataset ds;
    bool first = true;
    for (Split which : {Split::train, Split::dev, Split::test}) {
        const auto path = base / (to_string(which) + ".json");
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open " + path.string());
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad dataset JSON: ") + e.what(), 0, path.string());
        }
        if (first) {
            ds.spec = spec_from_json(doc.at("spec"));
            for (const auto& gj : doc.at("graphs")) ds.graphs.push_back(graph_from_json(gj));
            first = false;
        }
        DatasetSplit& split = which == Split::train ? ds.train
                              : which == Split::dev ? ds.dev
                                                    : ds.test;
        for (const auto& ej : doc.at("examples")) {
            KHopExample ex;
            ex.graph_id = ej.at("graph").get<int>();
            ex.source = ej.at("source").get<int>();
            ex.path = ej.at("path").get<std::vector<int>>();
            ex.answers = ej.at("answers").get<std::vector<int>>();
            if (ex.graph_id < 0 || ex.graph_id >= static_cast<int>(ds.graphs.size())) {
                throw Error("example references unknown graph " + std::to_string(ex.graph_id));
            }
            if (khop_answers(ds.graphs[ex.graph_id], ex.source, ex.path) != ex.answers) {
                throw Error("dataset example failed oracle re-verification in " + path.string());
            }
            split.examples.push_back(std::move(ex));
        }
    }
    return ds;
}

NamedGraph load_metaqa_kb(const std::string& path, char delimiter) {
    return load_triples(path, delimiter);
}

std::vector<MetaQAQuestion> load_metaqa_questions(const std::string& path, int hop,
                                                  const NamedGraph* kb,
                                                  std::int64_t* unresolved_answers) {
    if (hop < 1 || hop > 3) throw InvalidConfig("hop must be 1, 2, or 3");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);

    std::unordered_map<std::string, int> entity_ids;
    if (kb != nullptr) {
        entity_ids.reserve(kb->entity_names.size());
        for (std::size_t i = 0; i < kb->entity_names.size(); ++i) {
            entity_ids.emplace(kb->entity_names[i], static_cast<int>(i));
        }
    }
    if (unresolved_answers != nullptr) *unresolved_answers = 0;

    std::vector<MetaQAQuestion> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("missing answer column", line_no, line);
        }
        std::string question = line.substr(0, tab);
        const std::string answer_part = line.substr(tab + 1);
        const auto lb = question.find('[');
        const auto rb = question.find(']', lb == std::string::npos ? 0 : lb);
        if (lb == std::string::npos || rb == std::string::npos || rb <= lb + 1) {
            throw ParseError("no bracketed head entity", line_no, line);
        }
        MetaQAQuestion q;
        q.hop = hop;
        q.head = question.substr(lb + 1, rb - lb - 1);
        q.text = question.substr(0, lb) + q.head + question.substr(rb + 1);
        if (answer_part.empty()) throw ParseError("empty answer set", line_no, line);
        std::size_t start = 0;
        while (start <= answer_part.size()) {
            const auto bar = answer_part.find('|', start);
            const std::string ans =
                answer_part.substr(start, bar == std::string::npos ? std::string::npos
                                                                   : bar - start);
            if (ans.empty()) throw ParseError("empty answer name", line_no, line);
            q.answers.push_back(ans);
            if (bar == std::string::npos) break;
            start = bar + 1;
        }
        if (kb != nullptr) {
            if (!entity_ids.count(q.head)) {
                throw UnknownEntity("head entity not in knowledge base: " + q.head);
            }
            if (unresolved_answers != nullptr) {
                for (const std::string& a : q.answers) {
                    if (!entity_ids.count(a)) ++*unresolved_answers;
                }
            }
        }
        out.push_back(std::move(q));
    }
    return out;
}

std::pair<KnowledgeGraph, std::vector<int>> sample_subgraph(const KnowledgeGraph& g, int center,
                                                            int radius, int max_nodes) {
    if (center < 0 || center >= g.num_entities) throw IndexOutOfRange("subgraph center");
    if (radius < 1) throw InvalidConfig("radius must be >= 1");
    if (max_nodes < 1) throw InvalidConfig("max_nodes must be >= 1");

    std::vector<std::vector<int>> nbr(static_cast<std::size_t>(g.num_entities));
    for (const Triple& t : g.edges) {
        nbr[static_cast<std::size_t>(t.head)].push_back(t.tail);
        nbr[static_cast<std::size_t>(t.tail)].push_back(t.head);
    }
    for (auto& v : nbr) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    std::vector<int> kept = {center};
    std::vector<char> seen(static_cast<std::size_t>(g.num_entities), 0);
    seen[static_cast<std::size_t>(center)] = 1;
    std::vector<int> frontier = {center};
    for (int depth = 0; depth < radius && static_cast<int>(kept.size()) < max_nodes; ++depth) {
        std::vector<int> next;
        for (int u : frontier) {
            for (int v : nbr[static_cast<std::size_t>(u)]) {
                if (!seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    next.push_back(v);
                }
            }
        }
        std::sort(next.begin(), next.end());
        std::vector<int> admitted;
        for (int v : next) {
            if (static_cast<int>(kept.size()) == max_nodes) break;
            kept.push_back(v);
            admitted.push_back(v);
        }
        frontier = std::move(admitted);
        if (frontier.empty()) break;
    }

    std::vector<int> new_id(static_cast<std::size_t>(g.num_entities), -1);
    for (std::size_t i = 0; i < kept.size(); ++i) new_id[static_cast<std::size_t>(kept[i])] =
        static_cast<int>(i);
    std::vector<Triple> induced;
    for (const Triple& t : g.edges) {
        const int h = new_id[static_cast<std::size_t>(t.head)];
        const int tl = new_id[static_cast<std::size_t>(t.tail)];
        if (h >= 0 && tl >= 0) induced.push_back({h, t.relation, tl});
    }
    return {build_graph(std::move(induced), static_cast<int>(kept.size()), g.num_relations),
            std::move(kept)};
}

}  // namespace rasa
