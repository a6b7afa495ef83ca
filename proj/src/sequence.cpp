#include "amr/sequence.hpp"

#include <algorithm>
#include <queue>
#include <unordered_map>

#include "amr/levi.hpp"

namespace amr {

void check_lower_triangular(const NodeSequence& seq) {
    if (seq.entries.empty() || seq.entries[0].kind != EntryKind::Root)
        throw GraphError("sequence must start with a ROOT entry");
    if (seq.arcs.size() != seq.entries.size())
        throw GraphError("arc table size mismatch");
    for (size_t t = 0; t < seq.arcs.size(); ++t)
        for (int j : seq.arcs[t])
            if (j < 0 || j >= static_cast<int>(t))
                throw GraphError("arc (" + std::to_string(t) + "," + std::to_string(j) +
                                 ") not lower-triangular");
}

namespace {

struct BfsResult {
    std::vector<int> order;                    // concept positions in visit order
    std::vector<int> gen_rank;                 // concept position -> rank in order
};

// Undirected BFS from the root. Neighbors are visited label-descending
// (ARG1 subtrees before ARG0), then by name, then by position; this keeps
// the generation order stable across sentences and reproduces the
// documented "want believe ARG1 boy ARG1 ARG0 girl ARG0" order.
BfsResult bfs_order(const AmrGraph& g, bool strict) {
    std::unordered_map<NodeId, int> pos;
    for (size_t i = 0; i < g.concepts.size(); ++i) pos[g.concepts[i].id] = static_cast<int>(i);
    std::vector<std::vector<std::tuple<std::string, std::string, int>>> nbrs(g.concepts.size());
    for (const auto& e : g.edges) {
        int h = pos.at(e.head), d = pos.at(e.dependent);
        nbrs[h].emplace_back(e.label, g.concepts[d].name, d);
        if (d != h) nbrs[d].emplace_back(e.label, g.concepts[h].name, h);
    }
    for (auto& v : nbrs)
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
            return std::tie(std::get<0>(b), std::get<1>(a), std::get<2>(a)) <
                   std::tie(std::get<0>(a), std::get<1>(b), std::get<2>(b));
        });

    BfsResult r;
    r.gen_rank.assign(g.concepts.size(), -1);
    std::queue<int> q;
    int root_pos = g.index_of(g.root);
    q.push(root_pos);
    r.gen_rank[root_pos] = 0;
    int next = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        r.order.push_back(u);
        for (const auto& [label, name, v] : nbrs[u]) {
            (void)label;
            (void)name;
            if (r.gen_rank[v] < 0) {
                r.gen_rank[v] = next++;
                q.push(v);
            }
        }
    }
    if (r.order.size() != g.concepts.size()) {
        if (strict) throw GraphError("disconnected graph: linearize requires root connectivity");
        // unreachable concepts are appended in list order so nothing is lost
        for (size_t i = 0; i < g.concepts.size(); ++i)
            if (r.gen_rank[i] < 0) {
                r.gen_rank[i] = next++;
                r.order.push_back(static_cast<int>(i));
            }
    }
    return r;
}

}  // namespace

NodeSequence linearize(const AmrGraph& g, LinearizeMode mode, bool strict) {
    validate(g);
    BfsResult bfs = bfs_order(g, strict);
    std::unordered_map<NodeId, int> pos;
    for (size_t i = 0; i < g.concepts.size(); ++i) pos[g.concepts[i].id] = static_cast<int>(i);

    NodeSequence seq;
    seq.entries.push_back({EntryKind::Root, "<root>"});
    seq.arcs.push_back({});

    // entry index of each concept, filled as it is generated
    std::vector<int> entry_of(g.concepts.size(), -1);

    struct Conn {
        int other_rank;   // generation rank of the earlier endpoint
        int other_entry;  // its sequence index
        std::string label;
        bool new_is_head;
        int edge_idx;
    };

    for (int rank = 0; rank < static_cast<int>(bfs.order.size()); ++rank) {
        int cpos = bfs.order[rank];
        int t = static_cast<int>(seq.entries.size());
        entry_of[cpos] = t;
        seq.entries.push_back({EntryKind::Concept, g.concepts[cpos].name});
        seq.arcs.push_back({});

        // edges between this concept and already-generated ones
        std::vector<Conn> conns;
        for (size_t k = 0; k < g.edges.size(); ++k) {
            const auto& e = g.edges[k];
            int h = pos.at(e.head), d = pos.at(e.dependent);
            if (h == cpos && d == cpos) continue;  // self-loops carry no prefix arc
            int other = -1;
            bool new_is_head = false;
            if (h == cpos && bfs.gen_rank[d] < rank) {
                other = d;
                new_is_head = true;
            } else if (d == cpos && bfs.gen_rank[h] < rank) {
                other = h;
                new_is_head = false;
            } else {
                continue;
            }
            conns.push_back({bfs.gen_rank[other], entry_of[other], e.label, new_is_head,
                             static_cast<int>(k)});
        }
        std::sort(conns.begin(), conns.end(), [](const Conn& a, const Conn& b) {
            return std::tie(b.other_rank, a.label, a.edge_idx) <
                   std::tie(a.other_rank, b.label, b.edge_idx);
        });

        for (const auto& c : conns) {
            // LEVI: the label follows its dependent-side concept, so a plain
            // label means the new concept is the dependent. CONCEPTS: an arc
            // (t, j) claims j as a dependent of t, so a gold edge pointing at
            // the new concept is reversed with the _R tag.
            std::string lbl = (mode == LinearizeMode::Levi)
                                  ? (c.new_is_head ? reverse_label(c.label) : c.label)
                                  : (c.new_is_head ? c.label : reverse_label(c.label));
            if (mode == LinearizeMode::Levi) {
                seq.entries.push_back({EntryKind::Label, lbl});
                seq.arcs.push_back({c.other_entry, t});
            } else {
                seq.arcs[t].push_back(c.other_entry);
                seq.arc_labels[{t, c.other_entry}].push_back(lbl);
            }
        }
        if (mode == LinearizeMode::Concepts) {
            std::sort(seq.arcs[t].begin(), seq.arcs[t].end());
            seq.arcs[t].erase(std::unique(seq.arcs[t].begin(), seq.arcs[t].end()), seq.arcs[t].end());
        }
    }
    check_lower_triangular(seq);
    return seq;
}

AmrGraph restore(const NodeSequence& seq, LinearizeMode mode, RepairLog* log) {
    check_lower_triangular(seq);
    RepairLog scratch;
    RepairLog& rep = log ? *log : scratch;

    AmrGraph g;
    std::vector<int> concept_of(seq.entries.size(), -1);  // entry index -> node id
    for (size_t t = 1; t < seq.entries.size(); ++t)
        if (seq.entries[t].kind == EntryKind::Concept)
            concept_of[t] = g.add_concept(seq.entries[t].name);
    if (g.concepts.empty()) throw GraphError("sequence contains no concept entries");
    g.root = g.concepts.front().id;

    for (size_t t = 1; t < seq.entries.size(); ++t) {
        const SeqEntry& ent = seq.entries[t];
        if (ent.kind == EntryKind::Label) {
            if (mode != LinearizeMode::Levi) {
                rep.note("label entry " + std::to_string(t) + " in CONCEPTS mode, dropped");
                continue;
            }
            // concepts in the arc set, ascending; dependent is the nearest one
            std::vector<int> cs;
            for (int j : seq.arcs[t])
                if (j > 0 && concept_of[j] >= 0) cs.push_back(j);
            std::sort(cs.begin(), cs.end());
            if (cs.empty()) {
                rep.note("orphan label '" + ent.name + "' at entry " + std::to_string(t) +
                         ", dropped");
                continue;
            }
            int dep_entry = cs.back();
            if (cs.size() == 1) {
                rep.note("label '" + ent.name + "' at entry " + std::to_string(t) +
                         " has no head concept, dropped");
                continue;
            }
            if (cs.size() > 2)
                rep.note("label '" + ent.name + "' at entry " + std::to_string(t) + " has " +
                         std::to_string(cs.size() - 1) + " heads, emitting one edge per head");
            bool rev = is_reversed_label(ent.name);
            std::string lbl = strip_reversal(ent.name);
            for (size_t i = 0; i + 1 < cs.size(); ++i) {
                NodeId head = concept_of[cs[i]];
                NodeId dep = concept_of[dep_entry];
                if (rev) g.add_edge(dep, head, lbl);
                else g.add_edge(head, dep, lbl);
            }
        } else if (ent.kind == EntryKind::Concept && mode == LinearizeMode::Concepts) {
            for (int j : seq.arcs[t]) {
                if (j <= 0 || concept_of[j] < 0) continue;
                auto it = seq.arc_labels.find({static_cast<int>(t), j});
                if (it == seq.arc_labels.end() || it->second.empty()) {
                    rep.note("arc (" + std::to_string(t) + "," + std::to_string(j) +
                             ") has no label, using <unk>");
                    g.add_edge(concept_of[t], concept_of[j], "<unk>");
                    continue;
                }
                for (const std::string& lbl : it->second) {
                    if (is_reversed_label(lbl))
                        g.add_edge(concept_of[j], concept_of[t], strip_reversal(lbl));
                    else
                        g.add_edge(concept_of[t], concept_of[j], lbl);
                }
            }
        }
    }
    return g;
}

}  // namespace amr
