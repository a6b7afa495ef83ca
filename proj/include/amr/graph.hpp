#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace amr {

using NodeId = int;

/// A single AMR node. Attribute constants (numbers, quoted strings, "-")
/// are ordinary concepts here.
struct Concept {
    NodeId id = -1;
    std::string name;

    bool operator==(const Concept&) const = default;
};

struct AmrEdge {
    NodeId head = -1;
    NodeId dependent = -1;
    std::string label;

    bool operator==(const AmrEdge&) const = default;
};

/// Rooted directed labeled graph of concepts. Concepts are kept in insertion
/// order; in canonical form ids are dense (id == position) and the root sits
/// at position 0.
struct AmrGraph {
    std::vector<Concept> concepts;
    std::vector<AmrEdge> edges;
    NodeId root = -1;

    NodeId add_concept(const std::string& name);
    void add_edge(NodeId head, NodeId dependent, const std::string& label);

    /// Position of a node id in `concepts`, or -1.
    int index_of(NodeId id) const;
    const Concept& concept_at(NodeId id) const;

    bool has_edge(NodeId head, NodeId dependent, const std::string& label) const;
};

struct GraphError : std::runtime_error {
    explicit GraphError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidateOptions {
    bool strict = false;           // require connectivity from the root
    bool cyclic_tolerant = true;   // tolerate cycles and self-loops
};

/// Checks the structural invariants: unique ids, nonempty names, edge
/// endpoints present, no duplicate (head, dependent, label) triples, root
/// present. Throws GraphError on violation.
void validate(const AmrGraph& g, const ValidateOptions& opts = {});

/// True when every concept is reachable from the root over undirected edges.
bool root_connected(const AmrGraph& g);

/// Relabels a root-connected graph into canonical form: ids become dense in
/// BFS visit order (root first), neighbors ordered by (name, label, position).
/// Edge list is rewritten in (head position, dependent position, label) order.
AmrGraph canonicalize(const AmrGraph& g);

/// Exact equality: concept list (names, in order), root position and the edge
/// multiset. Ids are compared by position so two canonical graphs match iff
/// they are the same graph.
bool equal_exact(const AmrGraph& a, const AmrGraph& b);

/// Name-preserving isomorphism (bijection of nodes preserving names, the
/// root and the labeled edge multiset). Backtracking search; intended for
/// small graphs in tests and roundtrip checks.
bool isomorphic(const AmrGraph& a, const AmrGraph& b);

}  // namespace amr
