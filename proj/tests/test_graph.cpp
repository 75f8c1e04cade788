#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "rasa/errors.hpp"
#include "rasa/graph.hpp"
#include "rasa/rng.hpp"

using namespace rasa;
namespace fs = std::filesystem;

namespace {

// Independent reference: enumerate every typed walk recursively.
void walk_collect(const KnowledgeGraph& g, int node, const std::vector<int>& path, std::size_t pos,
                  std::set<int>& out) {
    if (pos == path.size()) {
        out.insert(node);
        return;
    }
    for (const Triple& t : g.edges) {
        if (t.head == node && t.relation == path[pos]) walk_collect(g, t.tail, path, pos + 1, out);
    }
}

std::vector<int> brute_khop(const KnowledgeGraph& g, int source, const std::vector<int>& path) {
    std::set<int> out;
    walk_collect(g, source, path, 0, out);
    return {out.begin(), out.end()};
}

// Independent reference: untyped walks of exact length k, dynamic programming
// over reachable sets.
bool brute_exact_k(const KnowledgeGraph& g, int s, int t, int k) {
    std::set<int> frontier = {s};
    for (int step = 0; step < k; ++step) {
        std::set<int> next;
        for (int u : frontier) {
            for (const Triple& e : g.edges) {
                if (e.head == u) next.insert(e.tail);
            }
        }
        frontier = std::move(next);
    }
    return frontier.count(t) > 0;
}

KnowledgeGraph random_graph(Rng& rng, int n, int max_edges, int nr) {
    std::set<Triple> edges;
    const int m = max_edges > 0 ? rng.index(max_edges + 1) : 0;
    for (int e = 0; e < m; ++e) {
        const int h = rng.index(n);
        int t = rng.index(n - 1);
        if (t >= h) ++t;
        edges.insert({h, rng.index(nr), t});
    }
    return build_graph({edges.begin(), edges.end()}, n, nr);
}

}  // namespace

TEST_CASE("build_graph validates and indexes") {
    KnowledgeGraph g = build_graph({{0, 0, 1}, {1, 1, 2}}, 3, 2);
    CHECK(g.num_entities == 3);
    CHECK(g.num_edges() == 2);
    REQUIRE(g.out_edges[0].size() == 1);
    CHECK(g.out_edges[0][0] == std::pair<int, int>{0, 1});

    CHECK_THROWS_AS(build_graph({{0, 0, 3}}, 3, 1), IndexOutOfRange);
    CHECK_THROWS_AS(build_graph({{0, 2, 1}}, 3, 2), IndexOutOfRange);
    CHECK_THROWS_AS(build_graph({{0, 0, 1}, {0, 0, 1}}, 3, 1), DuplicateEdge);
}

TEST_CASE("derive_mask on a chain, both policies") {
    KnowledgeGraph g = build_graph({{0, 0, 1}, {1, 0, 2}}, 3, 1);

    auto [mask_d, types_d] = derive_mask(g, DirectionPolicy::directed);
    CHECK(mask_d.at(0, 1));
    CHECK(mask_d.at(1, 2));
    CHECK_FALSE(mask_d.at(1, 0));
    CHECK_FALSE(mask_d.at(2, 1));
    CHECK_FALSE(mask_d.at(0, 2));
    for (int i = 0; i < 3; ++i) {
        CHECK(mask_d.at(i, i));
        CHECK(types_d.at(i, i) == EdgeTypeMap::kSelf);
    }
    CHECK(types_d.at(0, 1) == 0);
    CHECK(types_d.at(1, 0) == EdgeTypeMap::kNone);

    auto [mask_s, types_s] = derive_mask(g, DirectionPolicy::symmetric);
    CHECK(mask_s.at(0, 1));
    CHECK(mask_s.at(1, 0));
    CHECK(mask_s.at(2, 1));
    CHECK_FALSE(mask_s.at(0, 2));
    CHECK(types_s.at(1, 0) == 0);
}

TEST_CASE("derive_mask picks the lowest relation index on multi-edges") {
    KnowledgeGraph g = build_graph({{0, 2, 1}, {0, 1, 1}}, 2, 3);
    auto [mask, types] = derive_mask(g, DirectionPolicy::directed);
    CHECK(types.at(0, 1) == 1);
}

TEST_CASE("mask and type map stay consistent on random graphs") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + rng.index(9);
        KnowledgeGraph g = random_graph(rng, n, 3 * n, 1 + rng.index(4));
        for (DirectionPolicy policy : {DirectionPolicy::directed, DirectionPolicy::symmetric}) {
            auto [mask, types] = derive_mask(g, policy);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    if (i == j) {
                        CHECK(mask.at(i, j));
                        CHECK(types.at(i, j) == EdgeTypeMap::kSelf);
                    } else {
                        CHECK(mask.at(i, j) == (types.at(i, j) != EdgeTypeMap::kNone));
                        if (policy == DirectionPolicy::symmetric) {
                            CHECK(mask.at(i, j) == mask.at(j, i));
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("khop_answers matches hand-worked chains") {
    // 0 -r0-> 1 -r1-> 2, plus a distractor 0 -r1-> 2
    KnowledgeGraph g = build_graph({{0, 0, 1}, {1, 1, 2}, {0, 1, 2}}, 3, 2);
    CHECK(khop_answers(g, 0, {0}) == std::vector<int>{1});
    CHECK(khop_answers(g, 0, {0, 1}) == std::vector<int>{2});
    CHECK(khop_answers(g, 0, {1}) == std::vector<int>{2});
    CHECK(khop_answers(g, 0, {1, 1}).empty());
    CHECK_THROWS_AS(khop_answers(g, 5, {0}), IndexOutOfRange);
    CHECK_THROWS_AS(khop_answers(g, 0, {7}), IndexOutOfRange);
}

TEST_CASE("khop_answers equals brute-force walk enumeration") {
    Rng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + rng.index(7);
        const int nr = 1 + rng.index(3);
        KnowledgeGraph g = random_graph(rng, n, 2 * n, nr);
        const int k = 1 + rng.index(3);
        std::vector<int> path;
        for (int i = 0; i < k; ++i) path.push_back(rng.index(nr));
        const int source = rng.index(n);
        CHECK(khop_answers(g, source, path) == brute_khop(g, source, path));
    }
}

TEST_CASE("exact_k_reachable equals brute-force frontier expansion") {
    Rng rng(37);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + rng.index(7);
        KnowledgeGraph g = random_graph(rng, n, 2 * n, 2);
        for (int k = 0; k <= 3; ++k) {
            for (int s = 0; s < n; ++s) {
                for (int t = 0; t < n; ++t) {
                    CHECK(exact_k_reachable(g, s, t, k) == brute_exact_k(g, s, t, k));
                }
            }
        }
    }
}

TEST_CASE("layered_graph structure") {
    KnowledgeGraph g = build_graph({{0, 0, 1}, {0, 1, 1}, {1, 0, 2}}, 3, 2);
    const int k = 2;
    KnowledgeGraph lg = layered_graph(g, k);
    CHECK(lg.num_entities == 3 * (k + 1));
    CHECK(lg.num_relations == 1);
    // (0,1) has two relations but contributes one layered edge per layer.
    CHECK(lg.num_edges() == 2 * k);
    for (const Triple& e : lg.edges) {
        const int from_layer = e.head / 3;
        const int to_layer = e.tail / 3;
        CHECK(to_layer == from_layer + 1);
        CHECK(e.relation == 0);
    }
}

TEST_CASE("layered connectivity agrees with exact k-step reachability") {
    Rng rng(41);
    for (int trial = 0; trial < 150; ++trial) {
        const int n = 2 + rng.index(9);
        KnowledgeGraph g = random_graph(rng, n, 3 * n, 2);
        for (int k = 0; k <= 4; ++k) {
            for (int s = 0; s < n; ++s) {
                for (int t = 0; t < n; ++t) {
                    CHECK(layered_connectivity(g, s, t, k) == exact_k_reachable(g, s, t, k));
                }
            }
        }
    }
}

TEST_CASE("search space counts are exact integers") {
    SearchSpaceReport toy = search_space_counts(5, 6);
    CHECK(toy.standard_log2_patterns == 25);
    CHECK(toy.rasa_log2_patterns == 6);
    CHECK(toy.rasa_with_self_log2_patterns == 11);

    SearchSpaceReport big = search_space_counts(43234, 186213);
    CHECK(big.standard_log2_patterns == 1869178756LL);
    CHECK(big.rasa_log2_patterns == 186213);
    CHECK(big.rasa_with_self_log2_patterns == 186213 + 43234);

    KnowledgeGraph g = build_graph({{0, 0, 1}, {1, 0, 2}}, 4, 1);
    SearchSpaceReport from_graph = search_space(g);
    CHECK(from_graph.n == 4);
    CHECK(from_graph.m == 2);
    CHECK(from_graph.standard_log2_patterns == 16);

    // adding one edge adds exactly one bit to the sparse pattern count
    for (std::int64_t m = 0; m < 20; ++m) {
        CHECK(search_space_counts(6, m + 1).rasa_log2_patterns ==
              search_space_counts(6, m).rasa_log2_patterns + 1);
    }
}

TEST_CASE("load_triples interns names in first-appearance order") {
    const fs::path dir = fs::temp_directory_path() / "rasa_graph_test";
    fs::create_directories(dir);
    const fs::path file = dir / "triples.tsv";
    {
        std::ofstream out(file, std::ios::binary);
        out << "alice\tknows\tbob\n";
        out << "bob\tknows\tcarol\r\n";  // CRLF tolerated
        out << "\n";                     // blank line skipped
        out << "alice\tlikes\tcarol\n";
        out << "alice\tknows\tbob\n";  // duplicate line collapses
    }
    NamedGraph ng = load_triples(file);
    CHECK(ng.entity_names == std::vector<std::string>{"alice", "bob", "carol"});
    CHECK(ng.relation_names == std::vector<std::string>{"knows", "likes"});
    CHECK(ng.graph.num_edges() == 3);

    const fs::path ids = dir / "entity-ids.tsv";
    write_id_map(ids, ng.entity_names);
    std::ifstream in(ids, std::ios::binary);
    std::string line;
    std::getline(in, line);
    CHECK(line == "alice\t0");

    {
        std::ofstream out(file, std::ios::binary);
        out << "only\ttwo\n";
    }
    CHECK_THROWS_AS(load_triples(file), ParseError);
    {
        std::ofstream out(file, std::ios::binary);
        out << "a\tb\tc\td\n";
    }
    CHECK_THROWS_AS(load_triples(file), ParseError);
    {
        std::ofstream out(file, std::ios::binary);
        out << "a\t\tc\n";
    }
    CHECK_THROWS_AS(load_triples(file), ParseError);
    try {
        std::ofstream(file, std::ios::binary) << "ok\tok\tok\nbroken line\n";
        load_triples(file);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 2);
        CHECK(e.line == "broken line");
    }

    // empty file: a valid 0-entity graph
    std::ofstream(file, std::ios::binary) << "";
    NamedGraph empty = load_triples(file);
    CHECK(empty.graph.num_entities == 0);
    CHECK(empty.graph.num_edges() == 0);
    fs::remove_all(dir);
}
