#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "amr/graph.hpp"
#include "amr/json_io.hpp"
#include "amr/levi.hpp"
#include "amr/penman.hpp"
#include "amr/sequence.hpp"
#include "support.hpp"

using namespace amr;
using amr::testing::entry_names;
using amr::testing::example_graph;
using amr::testing::random_graph;

namespace {

struct PenmanCase {
    std::string text;
    std::vector<std::string> concepts;                       // names in parse order
    std::vector<std::tuple<int, int, std::string>> edges;    // position-indexed
    int root = 0;
};

// Hand-checked expectations, independent of the parser: each case was worked
// out on paper from the Penman text.
const std::vector<PenmanCase> kPenmanCases = {
    {"(w / want-01 :ARG0 (b / boy) :ARG1 (b2 / believe-01 :ARG0 (g / girl) :ARG1 b))",
     {"want-01", "boy", "believe-01", "girl"},
     {{0, 1, "ARG0"}, {0, 2, "ARG1"}, {2, 3, "ARG0"}, {2, 1, "ARG1"}},
     0},
    {"(a / alpha)", {"alpha"}, {}, 0},
    {"(a / alpha :mod-of (b / beta))", {"alpha", "beta"}, {{1, 0, "mod"}}, 0},
    {"(a / alpha :ARG0 (b / beta) :ARG1 (c / gamma))",
     {"alpha", "beta", "gamma"},
     {{0, 1, "ARG0"}, {0, 2, "ARG1"}},
     0},
    {"(a / alpha :ARG0 (b / beta) :ARG1 b)", {"alpha", "beta"}, {{0, 1, "ARG0"}, {0, 1, "ARG1"}}, 0},
    {"(a / alpha :quant 3)", {"alpha", "3"}, {{0, 1, "quant"}}, 0},
    {"(a / alpha :polarity -)", {"alpha", "-"}, {{0, 1, "polarity"}}, 0},
    {"(a / alpha :op1 \"Bob Dylan\")", {"alpha", "Bob Dylan"}, {{0, 1, "op1"}}, 0},
    {"(a / alpha :ARG0-of (b / beta :ARG1 (c / gamma)))",
     {"alpha", "beta", "gamma"},
     {{1, 0, "ARG0"}, {1, 2, "ARG1"}},
     0},
    {"(a / alpha :op1 (b / beta) :op2 (c / gamma))",
     {"alpha", "beta", "gamma"},
     {{0, 1, "op1"}, {0, 2, "op2"}},
     0},
    {"(a / a1 :x (b / b1 :y (c / c1 :z (d / d1))))",
     {"a1", "b1", "c1", "d1"},
     {{0, 1, "x"}, {1, 2, "y"}, {2, 3, "z"}},
     0},
    {"(w / w1 :a (x / x1) :b (y / y1 :c x) :d x)",
     {"w1", "x1", "y1"},
     {{0, 1, "a"}, {0, 2, "b"}, {2, 1, "c"}, {0, 1, "d"}},
     0},
    {"(a / alpha :ARG0 (b / beta) :mod-of b)",
     {"alpha", "beta"},
     {{0, 1, "ARG0"}, {1, 0, "mod"}},
     0},
    {"(a / alpha\n   :ARG0 (b / beta))", {"alpha", "beta"}, {{0, 1, "ARG0"}}, 0},
    {"(a1 / alpha :x (a2 / beta))", {"alpha", "beta"}, {{0, 1, "x"}}, 0},
    {"(a / alpha :op1 (b / beta) :op10 (c / gamma))",
     {"alpha", "beta", "gamma"},
     {{0, 1, "op1"}, {0, 2, "op10"}},
     0},
    {"(a / alpha :wiki \"Q\\\"42\")", {"alpha", "Q\"42"}, {{0, 1, "wiki"}}, 0},
    {"(r / run-02 :ARG0 (d / dog))", {"run-02", "dog"}, {{0, 1, "ARG0"}}, 0},
    {"(a / alpha :domain zzz)", {"alpha", "zzz"}, {{0, 1, "domain"}}, 0},
    {"(s / see-01 :ARG0 (i / i) :time (n / now))",
     {"see-01", "i", "now"},
     {{0, 1, "ARG0"}, {0, 2, "time"}},
     0},
};

void check_case(const PenmanCase& pc) {
    CAPTURE(pc.text);
    AmrGraph g = parse_penman(pc.text);
    REQUIRE(g.concepts.size() == pc.concepts.size());
    for (size_t i = 0; i < pc.concepts.size(); ++i) CHECK(g.concepts[i].name == pc.concepts[i]);
    REQUIRE(g.edges.size() == pc.edges.size());
    std::multiset<std::tuple<int, int, std::string>> got, want;
    for (const auto& e : g.edges) got.insert({g.index_of(e.head), g.index_of(e.dependent), e.label});
    for (const auto& e : pc.edges) want.insert(e);
    CHECK(got == want);
    CHECK(g.index_of(g.root) == pc.root);
}

}  // namespace

TEST_CASE("parse_penman: hand-written corpus of cases") {
    for (const auto& pc : kPenmanCases) check_case(pc);
}

TEST_CASE("parse_penman: error reporting with offsets") {
    CHECK_THROWS_AS(parse_penman("(a / alpha"), PenmanError);
    CHECK_THROWS_AS(parse_penman("(a / alpha))"), PenmanError);
    CHECK_THROWS_AS(parse_penman(""), PenmanError);
    CHECK_THROWS_AS(parse_penman("(a / alpha :x (a / beta))"), PenmanError);
    CHECK_THROWS_AS(parse_penman("(a / alpha :ARG0 b :ARG1 (b / beta))"), PenmanError);

    try {
        parse_penman("(a / alpha :ARG0 b :ARG1 (b / beta))");
        FAIL("expected PenmanError");
    } catch (const PenmanError& e) {
        CHECK(std::string(e.what()).find("before definition") != std::string::npos);
        CHECK(e.offset == 17);  // offset of the bare 'b'
    }
    try {
        parse_penman("(a / alpha :x (a / beta))");
        FAIL("expected PenmanError");
    } catch (const PenmanError& e) {
        CHECK(std::string(e.what()).find("duplicate instance") != std::string::npos);
    }
}

TEST_CASE("emit_penman: minimal graph") {
    AmrGraph g;
    g.root = g.add_concept("alpha");
    CHECK(emit_penman(g) == "(v0 / alpha)");
}

TEST_CASE("emit_penman: example graph reparses isomorphically") {
    AmrGraph g = example_graph(true);
    AmrGraph back = parse_penman(emit_penman(g));
    CHECK(isomorphic(g, back));
}

TEST_CASE("emit_penman: strict mode rejects unreachable nodes") {
    AmrGraph g;
    g.root = g.add_concept("alpha");
    g.add_concept("orphan");
    CHECK_THROWS_AS(emit_penman(g, true), GraphError);
}

TEST_CASE("emit/parse roundtrip is isomorphic on 500 random graphs") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        AmrGraph g = random_graph(rng);
        AmrGraph back = parse_penman(emit_penman(g));
        CAPTURE(i);
        CAPTURE(emit_penman(g));
        REQUIRE(isomorphic(g, back));
    }
}

TEST_CASE("to_levi: example graph has |concepts| + |edges| nodes") {
    LeviGraph lv = to_levi(example_graph());
    CHECK(lv.nodes.size() == 8);
    int labels = 0;
    for (const auto& n : lv.nodes)
        if (n.kind == LeviKind::Label) labels++;
    CHECK(labels == 4);
    validate_levi(lv);
}

TEST_CASE("to_levi: edge-free graph keeps the node set") {
    AmrGraph g;
    g.root = g.add_concept("alpha");
    g.add_concept("beta");
    g.add_edge(0, 1, "mod");
    AmrGraph noedge;
    noedge.root = noedge.add_concept("alpha");
    LeviGraph lv = to_levi(noedge);
    CHECK(lv.nodes.size() == 1);
    CHECK(lv.arcs.empty());
}

TEST_CASE("to_levi: parallel edges become two distinct label nodes") {
    AmrGraph g;
    NodeId want = g.add_concept("want");
    NodeId boy = g.add_concept("boy");
    g.root = want;
    g.add_edge(want, boy, "ARG0");
    g.add_edge(want, boy, "ARG2");
    LeviGraph lv = to_levi(g);
    REQUIRE(lv.nodes.size() == 4);
    // both paths CONCEPT(want) -> LABEL -> CONCEPT(boy) must exist
    std::set<std::string> seen;
    for (size_t i = 0; i < lv.nodes.size(); ++i) {
        if (lv.nodes[i].kind != LeviKind::Label) continue;
        int in = -1, out = -1;
        for (auto [f, tt] : lv.arcs) {
            if (tt == static_cast<int>(i)) in = f;
            if (f == static_cast<int>(i)) out = tt;
        }
        CHECK(lv.nodes[in].name == "want");
        CHECK(lv.nodes[out].name == "boy");
        seen.insert(lv.nodes[i].name);
    }
    CHECK(seen == std::set<std::string>{"ARG0", "ARG2"});
}

TEST_CASE("from_levi: inverse of to_levi on the example graph") {
    AmrGraph g = example_graph();
    CHECK(equal_exact(from_levi(to_levi(g)), g));
}

TEST_CASE("from_levi: malformed label degrees carry the node index") {
    LeviGraph lv;
    lv.nodes.push_back({LeviKind::Concept, "a", false});
    lv.nodes.push_back({LeviKind::Label, "ARG0", false});
    lv.arcs.emplace_back(0, 1);  // label has no outgoing arc
    try {
        from_levi(lv);
        FAIL("expected MalformedLevi");
    } catch (const MalformedLevi& e) {
        CHECK(e.node_index == 1);
        CHECK(std::string(e.what()).find("out-degree") != std::string::npos);
    }
    LeviGraph lv2;
    lv2.nodes.push_back({LeviKind::Concept, "a", false});
    lv2.nodes.push_back({LeviKind::Concept, "b", false});
    lv2.arcs.emplace_back(0, 1);
    CHECK_THROWS_AS(from_levi(lv2), MalformedLevi);
}

TEST_CASE("from_levi(to_levi(g)) == g on 500 random graphs") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        AmrGraph g = random_graph(rng);
        CAPTURE(i);
        LeviGraph lv = to_levi(g);
        CHECK(lv.nodes.size() == g.concepts.size() + g.edges.size());
        REQUIRE(equal_exact(from_levi(lv), g));
    }
}

TEST_CASE("linearize: example graph in LEVI mode matches the documented order") {
    NodeSequence seq = linearize(example_graph(), LinearizeMode::Levi);
    CHECK(entry_names(seq) == std::vector<std::string>{"<root>", "want", "believe", "ARG1", "boy",
                                                       "ARG1", "ARG0", "girl", "ARG0"});
    CHECK(seq.arcs[3] == std::vector<int>{1, 2});  // ARG1 connects want, believe
    CHECK(seq.arcs[5] == std::vector<int>{2, 4});  // ARG1 connects believe, boy
    CHECK(seq.arcs[6] == std::vector<int>{1, 4});  // ARG0 connects want, boy
    CHECK(seq.arcs[8] == std::vector<int>{2, 7});  // ARG0 connects believe, girl
    // restoring the sequence yields the original graph (concepts in BFS order)
    AmrGraph back = restore(seq, LinearizeMode::Levi);
    CHECK(isomorphic(back, example_graph()));
    CHECK(equal_exact(back, canonicalize(example_graph())));
}

TEST_CASE("linearize: single concept") {
    AmrGraph g;
    g.root = g.add_concept("alpha");
    for (auto mode : {LinearizeMode::Concepts, LinearizeMode::Levi}) {
        NodeSequence seq = linearize(g, mode);
        CHECK(entry_names(seq) == std::vector<std::string>{"<root>", "alpha"});
        CHECK(seq.arcs[1].empty());
    }
}

TEST_CASE("linearize: strict mode rejects disconnected graphs") {
    AmrGraph g;
    g.root = g.add_concept("alpha");
    g.add_concept("orphan");
    CHECK_THROWS_AS(linearize(g, LinearizeMode::Concepts, true), GraphError);
}

TEST_CASE("restore(linearize(g)) == g in both modes on 500 random graphs") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 500; ++i) {
        AmrGraph g = canonicalize(random_graph(rng));
        CAPTURE(i);
        for (auto mode : {LinearizeMode::Concepts, LinearizeMode::Levi}) {
            NodeSequence seq = linearize(g, mode);
            check_lower_triangular(seq);
            AmrGraph back = restore(seq, mode);
            REQUIRE(equal_exact(back, g));
            REQUIRE(isomorphic(back, g));
        }
    }
}

TEST_CASE("linearize/restore tolerate cycles") {
    AmrGraph g;
    NodeId a = g.add_concept("alpha");
    NodeId b = g.add_concept("beta");
    g.root = a;
    g.add_edge(a, b, "ARG0");
    g.add_edge(b, a, "ARG1");
    for (auto mode : {LinearizeMode::Concepts, LinearizeMode::Levi}) {
        AmrGraph back = restore(linearize(g, mode), mode);
        CHECK(equal_exact(back, g));
    }
    CHECK(equal_exact(from_levi(to_levi(g)), g));
}

TEST_CASE("restore: single entry and reversal semantics") {
    NodeSequence seq;
    seq.entries = {{EntryKind::Root, "<root>"}, {EntryKind::Concept, "alpha"}};
    seq.arcs = {{}, {}};
    AmrGraph g = restore(seq, LinearizeMode::Concepts);
    CHECK(g.concepts.size() == 1);
    CHECK(g.concepts[0].name == "alpha");

    // ARG0 vs ARG0_R flip the edge direction
    auto build = [](const std::string& label) {
        NodeSequence s;
        s.entries = {{EntryKind::Root, "<root>"},
                     {EntryKind::Concept, "a"},
                     {EntryKind::Concept, "b"},
                     {EntryKind::Label, label}};
        s.arcs = {{}, {}, {}, {1, 2}};
        return restore(s, LinearizeMode::Levi);
    };
    AmrGraph plain = build("ARG0");
    REQUIRE(plain.edges.size() == 1);
    CHECK(plain.concepts[plain.index_of(plain.edges[0].head)].name == "a");
    CHECK(plain.concepts[plain.index_of(plain.edges[0].dependent)].name == "b");
    CHECK(plain.edges[0].label == "ARG0");
    AmrGraph rev = build("ARG0_R");
    REQUIRE(rev.edges.size() == 1);
    CHECK(rev.concepts[rev.index_of(rev.edges[0].head)].name == "b");
    CHECK(rev.concepts[rev.index_of(rev.edges[0].dependent)].name == "a");
    CHECK(rev.edges[0].label == "ARG0");
}

TEST_CASE("restore: orphan labels are dropped into the repair log") {
    NodeSequence seq;
    seq.entries = {{EntryKind::Root, "<root>"},
                   {EntryKind::Concept, "a"},
                   {EntryKind::Label, "ARG0"}};
    seq.arcs = {{}, {}, {}};
    RepairLog log;
    AmrGraph g = restore(seq, LinearizeMode::Levi, &log);
    CHECK(g.concepts.size() == 1);
    CHECK(g.edges.empty());
    REQUIRE(log.entries.size() == 1);
    CHECK(log.entries[0].find("orphan label") != std::string::npos);
}

TEST_CASE("restore: lower-triangularity is enforced") {
    NodeSequence seq;
    seq.entries = {{EntryKind::Root, "<root>"},
                   {EntryKind::Concept, "a"},
                   {EntryKind::Concept, "b"}};
    seq.arcs = {{}, {2}, {}};
    CHECK_THROWS_AS(restore(seq, LinearizeMode::Concepts), GraphError);
}

TEST_CASE("canonicalize is idempotent and root-first") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 100; ++i) {
        AmrGraph g = random_graph(rng);
        AmrGraph c1 = canonicalize(g);
        CHECK(c1.index_of(c1.root) == 0);
        CHECK(isomorphic(c1, g));
        CHECK(equal_exact(canonicalize(c1), c1));
    }
}

TEST_CASE("graph json roundtrip") {
    AmrGraph g = example_graph(true);
    CHECK(equal_exact(graph_from_json(to_json(g)), g));
    LeviGraph lv = to_levi(g);
    nlohmann::json j = to_json(lv);
    LeviGraph lv2 = levi_from_json(j);
    CHECK(lv2.nodes.size() == lv.nodes.size());
    CHECK(lv2.arcs == lv.arcs);
    NodeSequence seq = linearize(g, LinearizeMode::Concepts);
    NodeSequence seq2 = sequence_from_json(to_json(seq));
    CHECK(seq2.entries.size() == seq.entries.size());
    CHECK(seq2.arcs == seq.arcs);
    CHECK(seq2.arc_labels == seq.arc_labels);
}

TEST_CASE("validate rejects invariant violations") {
    AmrGraph g;
    g.root = g.add_concept("a");
    NodeId b = g.add_concept("b");
    g.add_edge(g.root, b, "x");
    g.add_edge(g.root, b, "x");  // duplicate triple
    CHECK_THROWS_AS(validate(g), GraphError);

    AmrGraph g2;
    g2.root = 99;
    g2.add_concept("a");
    CHECK_THROWS_AS(validate(g2), GraphError);

    AmrGraph g3;
    g3.root = g3.add_concept("a");
    g3.add_edge(0, 0, "self");
    CHECK_THROWS_AS(validate(g3, {.strict = false, .cyclic_tolerant = false}), GraphError);
    CHECK_NOTHROW(validate(g3));
}
