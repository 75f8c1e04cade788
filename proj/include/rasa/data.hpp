#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rasa/graph.hpp"
#include "rasa/model.hpp"

namespace rasa {

struct SyntheticSpec {
    int num_entities = 32;
    double avg_out_degree = 3.0;
    int num_relations = 4;
    int hop_count = 1;  // k
    int num_examples = 1000;
    std::uint64_t seed = 0;
};

void validate(const SyntheticSpec& spec);

enum class Split { train, dev, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct DatasetSplit {
    std::vector<KHopExample> examples;
};

// One generated task: a shared graph list plus 70/15/15 example splits.
// Synthetic generation emits a single graph (graph_id 0) so that per-graph
// entity embeddings are meaningful across splits.
struct Dataset {
    SyntheticSpec spec;
    std::vector<KnowledgeGraph> graphs;
    DatasetSplit train, dev, test;

    const DatasetSplit& split(Split s) const;
};

// Typed digraph with round(n * avg_out_degree) distinct edges drawn
// uniformly over (head, relation, tail != head); deterministic in the seed.
KnowledgeGraph gen_random_graph(const SyntheticSpec& spec, std::uint64_t graph_seed);

// Uniform (source, path) queries labeled by the reachability oracle;
// empty-answer draws are rejected and redrawn. Distinct (source, path) keys
// never span splits; repeated draws of one key stay together.
Dataset gen_khop_dataset(const SyntheticSpec& spec);

// JSON round trip, one document per split (train.json / dev.json /
// test.json under dir). Loading re-verifies every example against the
// oracle. Byte-identical output for identical datasets.
void save_dataset(const std::string& dir, const Dataset& dataset);
Dataset load_dataset(const std::string& dir);

// MetaQA knowledge base: `subject|relation|object` lines (delimiter
// configurable), ids dense in first-appearance order.
NamedGraph load_metaqa_kb(const std::string& path, char delimiter = '|');

struct MetaQAQuestion {
    std::string text;                  // full question with brackets stripped
    std::string head;                  // the bracketed entity
    std::vector<std::string> answers;  // pipe-separated gold names
    int hop = 1;
};

// Lines of `question with [head entity]<TAB>ans1|ans2|...`. When kb is
// non-null the head entity must resolve (UnknownEntity otherwise);
// unresolved answer names are counted in *unresolved_answers if given.
std::vector<MetaQAQuestion> load_metaqa_questions(const std::string& path, int hop,
                                                  const NamedGraph* kb = nullptr,
                                                  std::int64_t* unresolved_answers = nullptr);

// Breadth-first ball of `radius` undirected hops around center, truncated
// at max_nodes in BFS order (ties broken by ascending original index);
// keeps exactly the induced edges. index_map[new_id] = original id.
std::pair<KnowledgeGraph, std::vector<int>> sample_subgraph(const KnowledgeGraph& g, int center,
                                                            int radius, int max_nodes);

}  // namespace rasa
