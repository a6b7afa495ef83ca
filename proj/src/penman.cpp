#include "amr/penman.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace amr {

namespace {

enum class TokKind { LParen, RParen, Slash, Role, Atom, Str };

struct Tok {
    TokKind kind;
    std::string text;  // role text excludes the leading ':'
    size_t offset;
};

std::vector<Tok> tokenize(const std::string& s) {
    std::vector<Tok> out;
    size_t i = 0;
    auto issep = [](char c) {
        return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '/';
    };
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '(') {
            out.push_back({TokKind::LParen, "(", i++});
        } else if (c == ')') {
            out.push_back({TokKind::RParen, ")", i++});
        } else if (c == '/') {
            out.push_back({TokKind::Slash, "/", i++});
        } else if (c == '"') {
            size_t start = i++;
            std::string val;
            bool closed = false;
            while (i < s.size()) {
                if (s[i] == '\\' && i + 1 < s.size()) {
                    val += s[i + 1];
                    i += 2;
                } else if (s[i] == '"') {
                    ++i;
                    closed = true;
                    break;
                } else {
                    val += s[i++];
                }
            }
            if (!closed) throw PenmanError("unterminated string literal", start);
            out.push_back({TokKind::Str, val, start});
        } else if (c == ':') {
            size_t start = i++;
            std::string role;
            while (i < s.size() && !issep(s[i])) role += s[i++];
            if (role.empty()) throw PenmanError("empty role name", start);
            out.push_back({TokKind::Role, role, start});
        } else {
            size_t start = i;
            std::string atom;
            while (i < s.size() && !issep(s[i])) atom += s[i++];
            out.push_back({TokKind::Atom, atom, start});
        }
    }
    return out;
}

struct Parser {
    const std::vector<Tok>& toks;
    size_t pos = 0;
    AmrGraph g;
    std::unordered_map<std::string, NodeId> var_to_id;
    // first definition offset of each variable, from the pre-pass
    std::unordered_map<std::string, size_t> def_offset;

    const Tok& peek() const {
        if (pos >= toks.size()) throw PenmanError("unexpected end of input", toks.empty() ? 0 : toks.back().offset + 1);
        return toks[pos];
    }
    Tok take() {
        Tok t = peek();
        ++pos;
        return t;
    }
    void expect(TokKind k, const char* what) {
        if (peek().kind != k) throw PenmanError(std::string("expected ") + what, peek().offset);
        ++pos;
    }

    NodeId parse_node() {
        size_t open_off = peek().offset;
        expect(TokKind::LParen, "'('");
        if (peek().kind != TokKind::Atom) throw PenmanError("expected variable name", peek().offset);
        Tok var = take();
        if (var_to_id.count(var.text))
            throw PenmanError("duplicate instance assignment for variable '" + var.text + "'", var.offset);
        if (peek().kind != TokKind::Slash) throw PenmanError("expected '/' after variable", peek().offset);
        take();
        if (peek().kind != TokKind::Atom && peek().kind != TokKind::Str)
            throw PenmanError("expected concept name after '/'", peek().offset);
        Tok name = take();
        NodeId id = g.add_concept(name.text);
        var_to_id[var.text] = id;

        while (peek().kind == TokKind::Role) {
            Tok role = take();
            NodeId target;
            if (peek().kind == TokKind::LParen) {
                target = parse_node();
            } else if (peek().kind == TokKind::Atom || peek().kind == TokKind::Str) {
                Tok t = take();
                auto it = var_to_id.find(t.text);
                if (it != var_to_id.end() && t.kind == TokKind::Atom) {
                    target = it->second;  // re-entrancy
                } else if (t.kind == TokKind::Atom && def_offset.count(t.text) &&
                           def_offset[t.text] > t.offset) {
                    throw PenmanError("variable '" + t.text + "' used before definition", t.offset);
                } else {
                    target = g.add_concept(t.text);  // attribute constant
                }
            } else {
                throw PenmanError("expected relation target", peek().offset);
            }
            attach(id, target, role.text);
        }
        if (peek().kind != TokKind::RParen)
            throw PenmanError("unbalanced parentheses: '(' not closed", open_off);
        take();
        return id;
    }

    void attach(NodeId src, NodeId tgt, const std::string& role) {
        // ":X-of" inverts: the target is the head.
        if (role.size() > 3 && role.ends_with("-of")) {
            g.add_edge(tgt, src, role.substr(0, role.size() - 3));
        } else {
            g.add_edge(src, tgt, role);
        }
    }
};

}  // namespace

AmrGraph parse_penman(const std::string& text) {
    std::vector<Tok> toks = tokenize(text);
    if (toks.empty()) throw PenmanError("empty input", 0);

    Parser p{toks, 0, {}, {}, {}};
    // pre-pass: collect variable definitions "( atom /" so forward references
    // can be told apart from constants
    for (size_t i = 0; i + 2 < toks.size(); ++i) {
        if (toks[i].kind == TokKind::LParen && toks[i + 1].kind == TokKind::Atom &&
            toks[i + 2].kind == TokKind::Slash) {
            if (!p.def_offset.count(toks[i + 1].text)) p.def_offset[toks[i + 1].text] = toks[i + 1].offset;
        }
    }
    p.g.root = p.parse_node();
    if (p.pos != toks.size())
        throw PenmanError("unbalanced parentheses: trailing input", toks[p.pos].offset);
    validate(p.g);
    return p.g;
}

namespace {

struct Emitter {
    const AmrGraph& g;
    bool strict;
    std::unordered_map<NodeId, int> pos;
    std::vector<bool> edge_done;
    std::unordered_map<NodeId, std::string> var_of;
    int next_var = 0;
    std::ostringstream out;

    explicit Emitter(const AmrGraph& graph, bool strict_mode) : g(graph), strict(strict_mode) {
        for (size_t i = 0; i < g.concepts.size(); ++i) pos[g.concepts[i].id] = static_cast<int>(i);
        edge_done.assign(g.edges.size(), false);
    }

    // incident edges of u not yet emitted: (role text, neighbor, edge idx)
    std::vector<std::tuple<std::string, NodeId, int>> pending(NodeId u) {
        std::vector<std::tuple<std::string, NodeId, int>> v;
        for (size_t k = 0; k < g.edges.size(); ++k) {
            if (edge_done[k]) continue;
            const auto& e = g.edges[k];
            if (e.head == u) v.emplace_back(e.label, e.dependent, static_cast<int>(k));
            else if (e.dependent == u) v.emplace_back(e.label + "-of", e.head, static_cast<int>(k));
        }
        std::sort(v.begin(), v.end(), [&](const auto& a, const auto& b) {
            const std::string &na = g.concept_at(std::get<1>(a)).name, &nb = g.concept_at(std::get<1>(b)).name;
            return std::tie(std::get<0>(a), na, std::get<1>(a)) < std::tie(std::get<0>(b), nb, std::get<1>(b));
        });
        return v;
    }

    void emit_node(NodeId u) {
        std::string var = "v" + std::to_string(next_var++);
        var_of[u] = var;
        out << "(" << var << " / " << g.concept_at(u).name;
        // grab edges one at a time; emitting a child may consume edges of u
        while (true) {
            auto v = pending(u);
            if (v.empty()) break;
            auto [role, nbr, k] = v.front();
            edge_done[k] = true;
            out << " :" << role << " ";
            if (var_of.count(nbr)) out << var_of.at(nbr);
            else emit_node(nbr);
        }
        out << ")";
    }
};

}  // namespace

std::string emit_penman(const AmrGraph& g, bool strict) {
    validate(g);
    Emitter em(g, strict);
    em.emit_node(g.root);
    if (em.var_of.size() != g.concepts.size()) {
        if (strict)
            throw GraphError("strict emit: " +
                             std::to_string(g.concepts.size() - em.var_of.size()) +
                             " node(s) unreachable from root");
    }
    return em.out.str();
}

std::vector<CorpusBlock> read_corpus_blocks(const std::string& body) {
    std::vector<CorpusBlock> blocks;
    CorpusBlock cur;
    bool any = false;
    std::istringstream in(body);
    std::string line;
    auto flush = [&]() {
        if (any) {
            blocks.push_back(cur);
            cur = CorpusBlock{};
            any = false;
        }
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed = line;
        trimmed.erase(0, trimmed.find_first_not_of(" \t"));
        if (trimmed.empty()) {
            // a blank line only separates blocks once some graph text was seen
            if (!cur.graph_text.empty()) flush();
            continue;
        }
        any = true;
        if (trimmed[0] == '#') {
            cur.metadata.push_back(line);
        } else {
            if (!cur.graph_text.empty()) cur.graph_text += "\n";
            cur.graph_text += line;
        }
    }
    flush();
    return blocks;
}

bool metadata_value(const CorpusBlock& block, const std::string& key, std::string& out) {
    std::string prefix = "# ::" + key;
    for (const auto& m : block.metadata) {
        if (m.rfind(prefix, 0) == 0) {
            size_t p = prefix.size();
            if (p < m.size() && m[p] == ' ') ++p;
            else if (p < m.size()) continue;  // longer key, e.g. ::tok vs ::tok2
            out = m.substr(p);
            return true;
        }
    }
    return false;
}

}  // namespace amr
