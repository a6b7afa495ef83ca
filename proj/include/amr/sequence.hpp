#pragma once

#include <map>
#include <string>
#include <vector>

#include "amr/graph.hpp"

namespace amr {

enum class EntryKind { Root, Concept, Label };
enum class LinearizeMode { Concepts, Levi };

struct SeqEntry {
    EntryKind kind = EntryKind::Concept;
    std::string name;

    bool operator==(const SeqEntry&) const = default;
};

/// Heterogeneous autoregressive output sequence. Entry 0 is always ROOT.
/// arcs[t] holds the earlier indices j < t connected to entry t (strictly
/// lower-triangular). In CONCEPTS mode arc_labels carries the edge labels
/// per arc slot ("_R" marks a flipped edge); a slot may carry several labels
/// (parallel edges, two-cycles).
struct NodeSequence {
    std::vector<SeqEntry> entries;
    std::vector<std::vector<int>> arcs;
    std::map<std::pair<int, int>, std::vector<std::string>> arc_labels;

    size_t size() const { return entries.size(); }
};

struct RepairLog {
    std::vector<std::string> entries;
    void note(const std::string& what) { entries.push_back(what); }
    bool empty() const { return entries.empty(); }
};

/// Orders concepts by breadth-first traversal from the root (neighbors
/// sorted by name, then label). CONCEPTS mode yields one entry per concept
/// with gold arcs into the generated prefix; LEVI mode follows each new
/// concept with the labels of edges that connect it to already-generated
/// concepts, most recent head first. A label whose later-generated endpoint
/// is the gold head gets the "_R" suffix.
NodeSequence linearize(const AmrGraph& g, LinearizeMode mode, bool strict = false);

/// Inverse of linearize. LEVI mode: a label entry's dependent is its nearest
/// preceding concept among its arc set, its head every other concept in the
/// set; labels with no usable endpoints are dropped into the repair log.
/// Cycles are tolerated.
AmrGraph restore(const NodeSequence& seq, LinearizeMode mode, RepairLog* log = nullptr);

void check_lower_triangular(const NodeSequence& seq);

}  // namespace amr
