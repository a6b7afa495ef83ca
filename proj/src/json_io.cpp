#include "amr/json_io.hpp"

namespace amr {

using nlohmann::json;

json to_json(const AmrGraph& g) {
    json j;
    j["concepts"] = json::array();
    for (const auto& c : g.concepts) j["concepts"].push_back({{"id", c.id}, {"name", c.name}});
    j["edges"] = json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back({{"head", e.head}, {"dependent", e.dependent}, {"label", e.label}});
    j["root"] = g.root;
    return j;
}

json to_json(const LeviGraph& lv) {
    json j;
    j["nodes"] = json::array();
    for (const auto& n : lv.nodes)
        j["nodes"].push_back({{"kind", n.kind == LeviKind::Concept ? "concept" : "label"},
                              {"name", n.name},
                              {"reversed", n.reversed}});
    j["arcs"] = json::array();
    for (const auto& [f, t] : lv.arcs) j["arcs"].push_back({f, t});
    return j;
}

json to_json(const NodeSequence& seq) {
    json j;
    j["entries"] = json::array();
    for (const auto& e : seq.entries) {
        const char* k = e.kind == EntryKind::Root ? "root"
                        : e.kind == EntryKind::Concept ? "concept"
                                                       : "label";
        j["entries"].push_back({{"kind", k}, {"name", e.name}});
    }
    j["arcs"] = seq.arcs;
    j["arc_labels"] = json::array();
    for (const auto& [key, labels] : seq.arc_labels)
        j["arc_labels"].push_back({{"from", key.first}, {"to", key.second}, {"labels", labels}});
    return j;
}

AmrGraph graph_from_json(const json& j) {
    AmrGraph g;
    for (const auto& c : j.at("concepts"))
        g.concepts.push_back({c.at("id").get<NodeId>(), c.at("name").get<std::string>()});
    for (const auto& e : j.at("edges"))
        g.edges.push_back({e.at("head").get<NodeId>(), e.at("dependent").get<NodeId>(),
                           e.at("label").get<std::string>()});
    g.root = j.at("root").get<NodeId>();
    validate(g);
    return g;
}

LeviGraph levi_from_json(const json& j) {
    LeviGraph lv;
    for (const auto& n : j.at("nodes")) {
        LeviNode node;
        node.kind = n.at("kind").get<std::string>() == "concept" ? LeviKind::Concept : LeviKind::Label;
        node.name = n.at("name").get<std::string>();
        node.reversed = n.value("reversed", false);
        lv.nodes.push_back(node);
    }
    for (const auto& a : j.at("arcs")) lv.arcs.emplace_back(a.at(0).get<int>(), a.at(1).get<int>());
    validate_levi(lv);
    return lv;
}

NodeSequence sequence_from_json(const json& j) {
    NodeSequence seq;
    for (const auto& e : j.at("entries")) {
        std::string k = e.at("kind").get<std::string>();
        EntryKind kind = k == "root" ? EntryKind::Root : k == "label" ? EntryKind::Label : EntryKind::Concept;
        seq.entries.push_back({kind, e.at("name").get<std::string>()});
    }
    seq.arcs = j.at("arcs").get<std::vector<std::vector<int>>>();
    if (j.contains("arc_labels"))
        for (const auto& a : j.at("arc_labels"))
            seq.arc_labels[{a.at("from").get<int>(), a.at("to").get<int>()}] =
                a.at("labels").get<std::vector<std::string>>();
    check_lower_triangular(seq);
    return seq;
}

}  // namespace amr
