#include "rasa/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include "rasa/errors.hpp"

namespace rasa {

KnowledgeGraph build_graph(std::vector<Triple> triples, int num_entities, int num_relations) {
    if (num_entities < 0 || num_relations < 0) {
        throw InvalidConfig("entity/relation counts must be non-negative");
    }
    std::set<Triple> seen;
    for (const Triple& t : triples) {
        if (t.head < 0 || t.head >= num_entities || t.tail < 0 || t.tail >= num_entities) {
            throw IndexOutOfRange("entity index out of range in triple (" +
                                  std::to_string(t.head) + "," + std::to_string(t.relation) +
                                  "," + std::to_string(t.tail) + ")");
        }
        if (t.relation < 0 || t.relation >= num_relations) {
            throw IndexOutOfRange("relation index out of range in triple (" +
                                  std::to_string(t.head) + "," + std::to_string(t.relation) +
                                  "," + std::to_string(t.tail) + ")");
        }
        if (!seen.insert(t).second) {
            throw DuplicateEdge("duplicate triple (" + std::to_string(t.head) + "," +
                                std::to_string(t.relation) + "," + std::to_string(t.tail) + ")");
        }
    }
    KnowledgeGraph g;
    g.num_entities = num_entities;
    g.num_relations = num_relations;
    g.edges = std::move(triples);
    g.out_edges.resize(static_cast<std::size_t>(num_entities));
    for (const Triple& t : g.edges) {
        g.out_edges[static_cast<std::size_t>(t.head)].emplace_back(t.relation, t.tail);
    }
    return g;
}

AttentionMask AttentionMask::all_allowed(int n) {
    AttentionMask m;
    m.n = n;
    m.allowed.assign(static_cast<std::size_t>(n) * n, 1);
    return m;
}

std::pair<AttentionMask, EdgeTypeMap> derive_mask(const KnowledgeGraph& g,
                                                  DirectionPolicy policy) {
    const int n = g.num_entities;
    AttentionMask mask;
    mask.n = n;
    mask.allowed.assign(static_cast<std::size_t>(n) * n, 0);
    EdgeTypeMap types;
    types.n = n;
    types.type_of.assign(static_cast<std::size_t>(n) * n, EdgeTypeMap::kNone);

    auto admit = [&](int i, int j, int r) {
        if (i == j) return;  // diagonal stays SELF
        const std::size_t idx = static_cast<std::size_t>(i) * n + j;
        mask.allowed[idx] = 1;
        int& slot = types.type_of[idx];
        if (slot == EdgeTypeMap::kNone || r < slot) slot = r;
    };

    for (const Triple& t : g.edges) {
        admit(t.head, t.tail, t.relation);
        if (policy == DirectionPolicy::symmetric) admit(t.tail, t.head, t.relation);
    }
    for (int i = 0; i < n; ++i) {
        const std::size_t idx = static_cast<std::size_t>(i) * n + i;
        mask.allowed[idx] = 1;
        types.type_of[idx] = EdgeTypeMap::kSelf;
    }
    return {std::move(mask), std::move(types)};
}

std::vector<int> khop_answers(const KnowledgeGraph& g, int source, const std::vector<int>& path) {
    if (source < 0 || source >= g.num_entities) {
        throw IndexOutOfRange("khop source " + std::to_string(source) + " out of range");
    }
    if (path.empty()) throw InvalidConfig("khop path must be non-empty");
    for (int r : path) {
        if (r < 0 || r >= g.num_relations) {
            throw IndexOutOfRange("khop relation " + std::to_string(r) + " out of range");
        }
    }
    std::vector<char> frontier(static_cast<std::size_t>(g.num_entities), 0);
    std::vector<char> next(frontier.size(), 0);
    frontier[static_cast<std::size_t>(source)] = 1;
    for (int r : path) {
        std::fill(next.begin(), next.end(), 0);
        for (int u = 0; u < g.num_entities; ++u) {
            if (!frontier[static_cast<std::size_t>(u)]) continue;
            for (const auto& [rel, v] : g.out_edges[static_cast<std::size_t>(u)]) {
                if (rel == r) next[static_cast<std::size_t>(v)] = 1;
            }
        }
        frontier.swap(next);
    }
    std::vector<int> out;
    for (int v = 0; v < g.num_entities; ++v) {
        if (frontier[static_cast<std::size_t>(v)]) out.push_back(v);
    }
    return out;
}

bool exact_k_reachable(const KnowledgeGraph& g, int s, int t, int k) {
    if (s < 0 || s >= g.num_entities || t < 0 || t >= g.num_entities) {
        throw IndexOutOfRange("exact_k_reachable endpoint out of range");
    }
    if (k < 0) throw InvalidConfig("hop count must be >= 0");
    std::vector<char> frontier(static_cast<std::size_t>(g.num_entities), 0);
    std::vector<char> next(frontier.size(), 0);
    frontier[static_cast<std::size_t>(s)] = 1;
    for (int step = 0; step < k; ++step) {
        std::fill(next.begin(), next.end(), 0);
        bool any = false;
        for (int u = 0; u < g.num_entities; ++u) {
            if (!frontier[static_cast<std::size_t>(u)]) continue;
            for (const auto& [rel, v] : g.out_edges[static_cast<std::size_t>(u)]) {
                (void)rel;
                next[static_cast<std::size_t>(v)] = 1;
                any = true;
            }
        }
        if (!any) return false;
        frontier.swap(next);
    }
    return frontier[static_cast<std::size_t>(t)] != 0;
}

KnowledgeGraph layered_graph(const KnowledgeGraph& g, int k) {
    if (k < 1) throw InvalidConfig("layered_graph needs k >= 1");
    const int n = g.num_entities;
    std::vector<Triple> edges;
    edges.reserve(g.edges.size() * static_cast<std::size_t>(k));
    for (int layer = 0; layer < k; ++layer) {
        for (const Triple& t : g.edges) {
            edges.push_back({t.head + layer * n, 0, t.tail + (layer + 1) * n});
        }
    }
    // distinct (u,v) duplicates from multi-relation pairs collapse to one edge
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return build_graph(std::move(edges), n * (k + 1), 1);
}

bool layered_connectivity(const KnowledgeGraph& g, int s, int t, int k) {
    if (s < 0 || s >= g.num_entities || t < 0 || t >= g.num_entities) {
        throw IndexOutOfRange("layered_connectivity endpoint out of range");
    }
    if (k < 0) throw InvalidConfig("hop count must be >= 0");
    if (k == 0) return s == t;
    const KnowledgeGraph layered = layered_graph(g, k);
    const int target = t + k * g.num_entities;
    std::vector<char> visited(static_cast<std::size_t>(layered.num_entities), 0);
    std::vector<int> stack = {s};
    visited[static_cast<std::size_t>(s)] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        if (u == target) return true;
        for (const auto& [rel, v] : layered.out_edges[static_cast<std::size_t>(u)]) {
            (void)rel;
            if (!visited[static_cast<std::size_t>(v)]) {
                visited[static_cast<std::size_t>(v)] = 1;
                stack.push_back(v);
            }
        }
    }
    return false;
}

SearchSpaceReport search_space_counts(std::int64_t n, std::int64_t m) {
    SearchSpaceReport r;
    r.n = n;
    r.m = m;
    r.standard_log2_patterns = n * n;
    r.rasa_log2_patterns = m;
    r.rasa_with_self_log2_patterns = m + n;
    return r;
}

SearchSpaceReport search_space(const KnowledgeGraph& g) {
    return search_space_counts(g.num_entities, g.num_edges());
}

NamedGraph load_triples(const std::filesystem::path& path, char delim) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open triple file: " + path.string());

    NamedGraph out;
    std::unordered_map<std::string, int> entity_ids;
    std::unordered_map<std::string, int> relation_ids;
    auto intern = [](std::unordered_map<std::string, int>& ids, std::vector<std::string>& names,
                     const std::string& name) {
        auto [it, inserted] = ids.emplace(name, static_cast<int>(names.size()));
        if (inserted) names.push_back(name);
        return it->second;
    };

    std::set<Triple> seen;
    std::vector<Triple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t p1 = line.find(delim);
        const std::size_t p2 = p1 == std::string::npos ? std::string::npos
                                                       : line.find(delim, p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos ||
            line.find(delim, p2 + 1) != std::string::npos) {
            throw ParseError("expected head<delim>relation<delim>tail", line_no, line);
        }
        const std::string head = line.substr(0, p1);
        const std::string rel = line.substr(p1 + 1, p2 - p1 - 1);
        const std::string tail = line.substr(p2 + 1);
        if (head.empty() || rel.empty() || tail.empty()) {
            throw ParseError("empty field in triple", line_no, line);
        }
        Triple t;
        t.head = intern(entity_ids, out.entity_names, head);
        t.relation = intern(relation_ids, out.relation_names, rel);
        t.tail = intern(entity_ids, out.entity_names, tail);
        if (seen.insert(t).second) triples.push_back(t);
    }
    out.graph = build_graph(std::move(triples), static_cast<int>(out.entity_names.size()),
                            static_cast<int>(out.relation_names.size()));
    return out;
}

void write_id_map(const std::filesystem::path& path, const std::vector<std::string>& names) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw Error("cannot write id map: " + path.string());
    for (std::size_t i = 0; i < names.size(); ++i) {
        outf << names[i] << '\t' << i << '\n';
    }
}

}  // namespace rasa
