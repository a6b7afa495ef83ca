#include "amr/graph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace amr {

NodeId AmrGraph::add_concept(const std::string& name) {
    NodeId id = concepts.empty() ? 0 : concepts.back().id + 1;
    concepts.push_back({id, name});
    return id;
}

void AmrGraph::add_edge(NodeId head, NodeId dependent, const std::string& label) {
    edges.push_back({head, dependent, label});
}

int AmrGraph::index_of(NodeId id) const {
    for (size_t i = 0; i < concepts.size(); ++i)
        if (concepts[i].id == id) return static_cast<int>(i);
    return -1;
}

const Concept& AmrGraph::concept_at(NodeId id) const {
    int i = index_of(id);
    if (i < 0) throw GraphError("unknown node id " + std::to_string(id));
    return concepts[i];
}

bool AmrGraph::has_edge(NodeId head, NodeId dependent, const std::string& label) const {
    for (const auto& e : edges)
        if (e.head == head && e.dependent == dependent && e.label == label) return true;
    return false;
}

void validate(const AmrGraph& g, const ValidateOptions& opts) {
    if (g.concepts.empty()) throw GraphError("graph has no concepts");
    std::unordered_set<NodeId> ids;
    for (const auto& c : g.concepts) {
        if (c.name.empty()) throw GraphError("concept " + std::to_string(c.id) + " has empty name");
        if (!ids.insert(c.id).second)
            throw GraphError("duplicate node id " + std::to_string(c.id));
    }
    if (!ids.count(g.root)) throw GraphError("root id " + std::to_string(g.root) + " not in concepts");
    std::set<std::tuple<NodeId, NodeId, std::string>> seen;
    for (const auto& e : g.edges) {
        if (e.label.empty()) throw GraphError("edge with empty label");
        if (!ids.count(e.head) || !ids.count(e.dependent))
            throw GraphError("edge endpoint not in concepts: " + std::to_string(e.head) + "->" +
                             std::to_string(e.dependent));
        if (!opts.cyclic_tolerant && e.head == e.dependent)
            throw GraphError("self-loop on node " + std::to_string(e.head));
        if (!seen.insert({e.head, e.dependent, e.label}).second)
            throw GraphError("duplicate edge triple " + std::to_string(e.head) + " -" + e.label +
                             "-> " + std::to_string(e.dependent));
    }
    if (opts.strict && !root_connected(g)) throw GraphError("graph not connected from root");
}

bool root_connected(const AmrGraph& g) {
    if (g.concepts.empty()) return false;
    std::unordered_map<NodeId, std::vector<NodeId>> adj;
    for (const auto& e : g.edges) {
        adj[e.head].push_back(e.dependent);
        adj[e.dependent].push_back(e.head);
    }
    std::unordered_set<NodeId> seen{g.root};
    std::queue<NodeId> q;
    q.push(g.root);
    while (!q.empty()) {
        NodeId u = q.front();
        q.pop();
        for (NodeId v : adj[u])
            if (seen.insert(v).second) q.push(v);
    }
    return seen.size() == g.concepts.size();
}

namespace {

// Undirected adjacency with deterministic neighbor order: label descending,
// then neighbor name, then position — the same order linearization uses.
struct Adjacency {
    // per concept position: (edge label, neighbor name, neighbor position, edge index)
    std::vector<std::vector<std::tuple<std::string, std::string, int, int>>> nbrs;
};

Adjacency build_adjacency(const AmrGraph& g) {
    std::unordered_map<NodeId, int> pos;
    for (size_t i = 0; i < g.concepts.size(); ++i) pos[g.concepts[i].id] = static_cast<int>(i);
    Adjacency a;
    a.nbrs.resize(g.concepts.size());
    for (size_t k = 0; k < g.edges.size(); ++k) {
        const auto& e = g.edges[k];
        int h = pos.at(e.head), d = pos.at(e.dependent);
        a.nbrs[h].emplace_back(e.label, g.concepts[d].name, d, static_cast<int>(k));
        if (d != h) a.nbrs[d].emplace_back(e.label, g.concepts[h].name, h, static_cast<int>(k));
    }
    for (auto& v : a.nbrs)
        std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
            return std::tie(std::get<0>(y), std::get<1>(x), std::get<2>(x), std::get<3>(x)) <
                   std::tie(std::get<0>(x), std::get<1>(y), std::get<2>(y), std::get<3>(y));
        });
    return a;
}

}  // namespace

AmrGraph canonicalize(const AmrGraph& g) {
    validate(g);
    if (!root_connected(g)) throw GraphError("canonicalize requires a root-connected graph");
    Adjacency adj = build_adjacency(g);
    int root_pos = g.index_of(g.root);
    std::vector<int> order;           // old position in visit order
    std::vector<int> new_pos(g.concepts.size(), -1);
    std::queue<int> q;
    q.push(root_pos);
    new_pos[root_pos] = 0;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        order.push_back(u);
        for (const auto& [label, name, v, k] : adj.nbrs[u]) {
            (void)label;
            (void)name;
            (void)k;
            if (new_pos[v] < 0) {
                new_pos[v] = static_cast<int>(order.size()) + static_cast<int>(q.size());
                q.push(v);
            }
        }
    }
    AmrGraph out;
    out.root = 0;
    for (int old : order) out.concepts.push_back({static_cast<NodeId>(out.concepts.size()), g.concepts[old].name});
    std::unordered_map<NodeId, int> pos;
    for (size_t i = 0; i < g.concepts.size(); ++i) pos[g.concepts[i].id] = static_cast<int>(i);
    for (const auto& e : g.edges)
        out.edges.push_back({new_pos[pos.at(e.head)], new_pos[pos.at(e.dependent)], e.label});
    std::sort(out.edges.begin(), out.edges.end(), [](const AmrEdge& a, const AmrEdge& b) {
        return std::tie(a.head, a.dependent, a.label) < std::tie(b.head, b.dependent, b.label);
    });
    return out;
}

bool equal_exact(const AmrGraph& a, const AmrGraph& b) {
    if (a.concepts.size() != b.concepts.size() || a.edges.size() != b.edges.size()) return false;
    if (a.index_of(a.root) != b.index_of(b.root)) return false;
    std::unordered_map<NodeId, int> pa, pb;
    for (size_t i = 0; i < a.concepts.size(); ++i) {
        if (a.concepts[i].name != b.concepts[i].name) return false;
        pa[a.concepts[i].id] = static_cast<int>(i);
        pb[b.concepts[i].id] = static_cast<int>(i);
    }
    auto key = [](int h, int d, const std::string& l) { return std::make_tuple(h, d, l); };
    std::multiset<std::tuple<int, int, std::string>> ea, eb;
    for (const auto& e : a.edges) ea.insert(key(pa.at(e.head), pa.at(e.dependent), e.label));
    for (const auto& e : b.edges) eb.insert(key(pb.at(e.head), pb.at(e.dependent), e.label));
    return ea == eb;
}

namespace {

struct IsoState {
    const AmrGraph* a;
    const AmrGraph* b;
    std::vector<int> map;   // a position -> b position or -1
    std::vector<bool> used; // b positions taken
    // edge multisets keyed by positions, for candidate filtering
    std::multiset<std::tuple<int, int, std::string>> eb;
};

bool extend(IsoState& st, size_t i, const std::vector<std::vector<std::tuple<int, int, std::string>>>& ea_by_node) {
    const AmrGraph& a = *st.a;
    const AmrGraph& b = *st.b;
    if (i == a.concepts.size()) return true;
    for (size_t j = 0; j < b.concepts.size(); ++j) {
        if (st.used[j]) continue;
        if (a.concepts[i].name != b.concepts[j].name) continue;
        if ((a.index_of(a.root) == static_cast<int>(i)) != (b.index_of(b.root) == static_cast<int>(j)))
            continue;
        // every a-edge with both endpoints mapped must exist in b
        bool ok = true;
        std::vector<std::tuple<int, int, std::string>> need;
        for (const auto& [h, d, l] : ea_by_node[i]) {
            int hm = (h == static_cast<int>(i)) ? static_cast<int>(j) : st.map[h];
            int dm = (d == static_cast<int>(i)) ? static_cast<int>(j) : st.map[d];
            if (hm < 0 || dm < 0) continue;
            need.emplace_back(hm, dm, l);
        }
        std::multiset<std::tuple<int, int, std::string>> taken;
        for (const auto& t : need) {
            auto it = st.eb.find(t);
            if (it == st.eb.end()) {
                ok = false;
                break;
            }
            taken.insert(*it);
            st.eb.erase(it);
        }
        if (ok) {
            st.map[i] = static_cast<int>(j);
            st.used[j] = true;
            if (extend(st, i + 1, ea_by_node)) return true;
            st.map[i] = -1;
            st.used[j] = false;
        }
        for (const auto& t : taken) st.eb.insert(t);
    }
    return false;
}

}  // namespace

bool isomorphic(const AmrGraph& a, const AmrGraph& b) {
    if (a.concepts.size() != b.concepts.size() || a.edges.size() != b.edges.size()) return false;
    std::multiset<std::string> na, nb;
    for (const auto& c : a.concepts) na.insert(c.name);
    for (const auto& c : b.concepts) nb.insert(c.name);
    if (na != nb) return false;

    std::unordered_map<NodeId, int> pa, pb;
    for (size_t i = 0; i < a.concepts.size(); ++i) pa[a.concepts[i].id] = static_cast<int>(i);
    for (size_t i = 0; i < b.concepts.size(); ++i) pb[b.concepts[i].id] = static_cast<int>(i);

    IsoState st;
    st.a = &a;
    st.b = &b;
    st.map.assign(a.concepts.size(), -1);
    st.used.assign(b.concepts.size(), false);
    for (const auto& e : b.edges) st.eb.insert({pb.at(e.head), pb.at(e.dependent), e.label});

    std::vector<std::vector<std::tuple<int, int, std::string>>> ea_by_node(a.concepts.size());
    for (const auto& e : a.edges) {
        int h = pa.at(e.head), d = pa.at(e.dependent);
        ea_by_node[h].emplace_back(h, d, e.label);
        if (d != h) ea_by_node[d].emplace_back(h, d, e.label);
    }
    return extend(st, 0, ea_by_node);
}

}  // namespace amr
