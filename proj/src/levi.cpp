#include "amr/levi.hpp"

#include <algorithm>
#include <unordered_map>

namespace amr {

std::string reverse_label(const std::string& label) { return label + "_R"; }

bool is_reversed_label(const std::string& label) {
    return label.size() > 2 && label.ends_with("_R");
}

std::string strip_reversal(const std::string& label) {
    return is_reversed_label(label) ? label.substr(0, label.size() - 2) : label;
}

void validate_levi(const LeviGraph& lv) {
    std::vector<int> in(lv.nodes.size(), 0), out(lv.nodes.size(), 0);
    for (const auto& [f, t] : lv.arcs) {
        if (f < 0 || t < 0 || f >= static_cast<int>(lv.nodes.size()) ||
            t >= static_cast<int>(lv.nodes.size()))
            throw MalformedLevi("arc endpoint out of range", std::max(f, t));
        if (lv.nodes[f].kind == lv.nodes[t].kind)
            throw MalformedLevi(lv.nodes[f].kind == LeviKind::Concept
                                    ? "concept-to-concept arc forbidden"
                                    : "label-to-label arc forbidden",
                                f);
        out[f]++;
        in[t]++;
    }
    for (size_t i = 0; i < lv.nodes.size(); ++i) {
        if (lv.nodes[i].kind != LeviKind::Label) continue;
        if (in[i] != 1)
            throw MalformedLevi("label node in-degree " + std::to_string(in[i]) + ", expected 1",
                                static_cast<int>(i));
        if (out[i] != 1)
            throw MalformedLevi("label node out-degree " + std::to_string(out[i]) + ", expected 1",
                                static_cast<int>(i));
    }
}

LeviGraph to_levi(const AmrGraph& g) {
    validate(g);
    // concept order: root first, then remaining concepts in list order
    std::vector<int> concept_order;
    int root_pos = g.index_of(g.root);
    concept_order.push_back(root_pos);
    for (size_t i = 0; i < g.concepts.size(); ++i)
        if (static_cast<int>(i) != root_pos) concept_order.push_back(static_cast<int>(i));

    std::unordered_map<NodeId, int> rank;  // concept id -> order position
    for (size_t r = 0; r < concept_order.size(); ++r)
        rank[g.concepts[concept_order[r]].id] = static_cast<int>(r);

    // for each edge, the later endpoint hosts the label node
    struct Pending {
        int other_rank;  // rank of the earlier endpoint (or same, for self-loops)
        std::string label;
        int edge_idx;
    };
    std::vector<std::vector<Pending>> after(concept_order.size());
    for (size_t k = 0; k < g.edges.size(); ++k) {
        const auto& e = g.edges[k];
        int rh = rank.at(e.head), rd = rank.at(e.dependent);
        int host = std::max(rh, rd);
        after[host].push_back({std::min(rh, rd), e.label, static_cast<int>(k)});
    }
    for (auto& v : after)
        std::sort(v.begin(), v.end(), [](const Pending& a, const Pending& b) {
            // most recently placed other endpoint first
            return std::tie(b.other_rank, a.label, a.edge_idx) <
                   std::tie(a.other_rank, b.label, b.edge_idx);
        });

    LeviGraph lv;
    std::vector<int> concept_node(concept_order.size(), -1);
    std::vector<std::pair<int, int>> label_node_of_edge(g.edges.size(), {-1, -1});
    for (size_t r = 0; r < concept_order.size(); ++r) {
        concept_node[r] = static_cast<int>(lv.nodes.size());
        lv.nodes.push_back({LeviKind::Concept, g.concepts[concept_order[r]].name, false});
        for (const auto& p : after[r]) {
            int ln = static_cast<int>(lv.nodes.size());
            lv.nodes.push_back({LeviKind::Label, p.label, false});
            label_node_of_edge[p.edge_idx] = {ln, 0};
        }
    }
    for (size_t k = 0; k < g.edges.size(); ++k) {
        const auto& e = g.edges[k];
        int ln = label_node_of_edge[k].first;
        lv.arcs.emplace_back(concept_node[rank.at(e.head)], ln);
        lv.arcs.emplace_back(ln, concept_node[rank.at(e.dependent)]);
    }
    std::sort(lv.arcs.begin(), lv.arcs.end());
    return lv;
}

AmrGraph from_levi(const LeviGraph& lv) {
    validate_levi(lv);
    AmrGraph g;
    std::vector<NodeId> concept_id(lv.nodes.size(), -1);
    for (size_t i = 0; i < lv.nodes.size(); ++i)
        if (lv.nodes[i].kind == LeviKind::Concept) concept_id[i] = g.add_concept(lv.nodes[i].name);
    if (g.concepts.empty()) throw MalformedLevi("no concept nodes", 0);
    g.root = g.concepts.front().id;

    std::vector<int> in_of(lv.nodes.size(), -1), out_of(lv.nodes.size(), -1);
    for (const auto& [f, t] : lv.arcs) {
        if (lv.nodes[t].kind == LeviKind::Label) in_of[t] = f;
        if (lv.nodes[f].kind == LeviKind::Label) out_of[f] = t;
    }
    for (size_t i = 0; i < lv.nodes.size(); ++i) {
        if (lv.nodes[i].kind != LeviKind::Label) continue;
        NodeId head = concept_id[in_of[i]];
        NodeId dep = concept_id[out_of[i]];
        const std::string& name = lv.nodes[i].name;
        if (lv.nodes[i].reversed || is_reversed_label(name))
            g.add_edge(dep, head, strip_reversal(name));
        else
            g.add_edge(head, dep, name);
    }
    return g;
}

}  // namespace amr
