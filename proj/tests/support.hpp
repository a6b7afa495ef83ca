#pragma once

#include <random>
#include <string>
#include <vector>

#include "amr/graph.hpp"
#include "amr/sequence.hpp"

namespace amr::testing {

inline const std::vector<std::string> kNamePool = {
    "want-01", "believe-01", "boy", "girl", "dog", "cat", "run-02",
    "see-01",  "alpha",      "beta", "gamma", "node", "thing"};
inline const std::vector<std::string> kLabelPool = {"ARG0", "ARG1", "ARG2", "mod",
                                                    "op1",  "time", "poss"};

/// Random rooted graph with dense ids (root at 0), a connecting tree spine,
/// plus extra edges that create re-entrancies and parallel edges. Cycles only
/// when allowed; never self-loops.
inline AmrGraph random_graph(std::mt19937_64& rng, int max_concepts = 12, int max_edges = 20,
                             bool allow_cycles = false) {
    int n = 1 + static_cast<int>(rng() % max_concepts);
    AmrGraph g;
    g.root = 0;
    for (int i = 0; i < n; ++i) g.add_concept(kNamePool[rng() % kNamePool.size()]);
    for (int i = 1; i < n; ++i) {
        int parent = static_cast<int>(rng() % i);
        g.add_edge(parent, i, kLabelPool[rng() % kLabelPool.size()]);
    }
    int budget = max_edges - (n - 1);
    if (budget > 0) {
        int extras = static_cast<int>(rng() % (budget + 1));
        for (int e = 0; e < extras && n >= 2; ++e) {
            int a = static_cast<int>(rng() % n);
            int b = static_cast<int>(rng() % n);
            if (a == b) continue;
            if (!allow_cycles && a > b) std::swap(a, b);
            std::string label = kLabelPool[rng() % kLabelPool.size()];
            if (g.has_edge(a, b, label)) continue;
            g.add_edge(a, b, label);
        }
    }
    return g;
}

/// The running example graph ("The boy wants the girl to believe him"),
/// with display names as in the linearization example.
inline AmrGraph example_graph(bool sense_tags = false) {
    AmrGraph g;
    NodeId want = g.add_concept(sense_tags ? "want-01" : "want");
    NodeId boy = g.add_concept("boy");
    NodeId believe = g.add_concept(sense_tags ? "believe-01" : "believe");
    NodeId girl = g.add_concept("girl");
    g.root = want;
    g.add_edge(want, boy, "ARG0");
    g.add_edge(want, believe, "ARG1");
    g.add_edge(believe, girl, "ARG0");
    g.add_edge(believe, boy, "ARG1");
    return g;
}

inline std::vector<std::string> entry_names(const NodeSequence& seq) {
    std::vector<std::string> out;
    for (const auto& e : seq.entries) out.push_back(e.name);
    return out;
}

}  // namespace amr::testing
