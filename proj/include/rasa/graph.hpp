#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rasa {

struct Triple {
    int head = 0;
    int relation = 0;
    int tail = 0;
    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

// Typed directed multigraph over dense entity/relation ids. Immutable after
// build_graph; oracles below are pure functions over it.
struct KnowledgeGraph {
    int num_entities = 0;
    int num_relations = 0;
    std::vector<Triple> edges;

    // adjacency built once by build_graph: per head, (relation, tail) pairs
    std::vector<std::vector<std::pair<int, int>>> out_edges;

    std::int64_t num_edges() const { return static_cast<std::int64_t>(edges.size()); }
};

// Validates indices, rejects exact duplicate triples, builds adjacency.
KnowledgeGraph build_graph(std::vector<Triple> triples, int num_entities, int num_relations);

enum class DirectionPolicy { directed, symmetric };

// Binary n x n attention constraint; diagonal always allowed.
struct AttentionMask {
    int n = 0;
    std::vector<std::uint8_t> allowed;  // row-major n*n

    bool at(int i, int j) const { return allowed[static_cast<std::size_t>(i) * n + j] != 0; }
    static AttentionMask all_allowed(int n);
};

// Relation index per (i,j) pair, with sentinels for the diagonal and for
// pairs outside the mask. Non-sentinel entries index the relation vocabulary.
struct EdgeTypeMap {
    static constexpr int kSelf = -1;
    static constexpr int kNone = -2;

    int n = 0;
    std::vector<int> type_of;  // row-major n*n

    int at(int i, int j) const { return type_of[static_cast<std::size_t>(i) * n + j]; }
};

// Mask + type map per the chosen direction policy. Under symmetric, i may
// attend to j when an edge exists in either direction. When several relations
// connect a pair, the lowest relation index wins (order-independent).
std::pair<AttentionMask, EdgeTypeMap> derive_mask(const KnowledgeGraph& g, DirectionPolicy policy);

// Answer set of a k-hop query: frontier expansion F_0 = {source},
// F_t = { v : (u, path[t-1], v) in E, u in F_{t-1} }. Returns F_k sorted
// ascending (possibly empty).
std::vector<int> khop_answers(const KnowledgeGraph& g, int source, const std::vector<int>& path);

// True iff a relation-agnostic directed walk of length exactly k leads from s
// to t (vertex revisits allowed). k = 0 means s == t.
bool exact_k_reachable(const KnowledgeGraph& g, int s, int t, int k);

// k+1 layers of the vertex set, (v, i) -> v + i*n, with edges only from layer
// i to layer i+1 wherever g has an edge; single relation type.
KnowledgeGraph layered_graph(const KnowledgeGraph& g, int k);

// Directed reachability from (s, 0) to (t, k) in layered_graph(g, k).
// Agrees with exact_k_reachable on every input.
bool layered_connectivity(const KnowledgeGraph& g, int s, int t, int k);

// log2 counts of binary attention patterns; exact integers, never floats.
struct SearchSpaceReport {
    std::int64_t n = 0;
    std::int64_t m = 0;
    std::int64_t standard_log2_patterns = 0;       // n^2
    std::int64_t rasa_log2_patterns = 0;           // m
    std::int64_t rasa_with_self_log2_patterns = 0;  // m + n
};

SearchSpaceReport search_space_counts(std::int64_t n, std::int64_t m);
SearchSpaceReport search_space(const KnowledgeGraph& g);

// --- flat-file interface -----------------------------------------------

// Graph whose entities/relations carry external string names; ids are dense
// in first-appearance order.
struct NamedGraph {
    KnowledgeGraph graph;
    std::vector<std::string> entity_names;
    std::vector<std::string> relation_names;
};

// One edge per line, head<delim>relation<delim>tail. Duplicate lines are
// collapsed before validation. Throws ParseError with the offending line.
NamedGraph load_triples(const std::filesystem::path& path, char delim = '\t');

// Sidecar id map, one `name<TAB>id` line per entry in id order.
void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& names);

}  // namespace rasa
