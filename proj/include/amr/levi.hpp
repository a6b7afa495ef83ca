#pragma once

#include <string>
#include <vector>

#include "amr/graph.hpp"

namespace amr {

enum class LeviKind { Concept, Label };

struct LeviNode {
    LeviKind kind = LeviKind::Concept;
    std::string name;       // label names keep the "_R" suffix when reversed
    bool reversed = false;  // true iff name carries the "_R" convention

    bool operator==(const LeviNode&) const = default;
};

/// Unlabeled directed graph whose nodes are concepts and relation labels.
/// Every label node must have exactly one incoming and one outgoing arc,
/// both to concept nodes.
struct LeviGraph {
    std::vector<LeviNode> nodes;
    std::vector<std::pair<int, int>> arcs;  // (from index, to index)
};

struct MalformedLevi : std::runtime_error {
    int node_index;
    MalformedLevi(const std::string& msg, int idx)
        : std::runtime_error(msg + " (node " + std::to_string(idx) + ")"), node_index(idx) {}
};

/// Checks the Levi invariants: label in/out degree exactly 1, no
/// concept-concept or label-label arcs. Throws MalformedLevi.
void validate_levi(const LeviGraph& lv);

/// Expands each edge (h, d, l) into CONCEPT(h) -> LABEL(l) -> CONCEPT(d).
/// Node order: the root concept first, remaining concepts in list order;
/// each label is placed after the later of its two endpoint concepts,
/// most-recent other endpoint first.
LeviGraph to_levi(const AmrGraph& g);

/// Collapses label nodes back into labeled edges. Concept ids are assigned
/// densely in node order; reversed labels flip head/dependent and drop the
/// "_R" suffix. from_levi(to_levi(g)) == g for canonical-id graphs.
AmrGraph from_levi(const LeviGraph& lv);

/// "ARG0" -> "ARG0_R" and back.
std::string reverse_label(const std::string& label);
bool is_reversed_label(const std::string& label);
std::string strip_reversal(const std::string& label);

}  // namespace amr
