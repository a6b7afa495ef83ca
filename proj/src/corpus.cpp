#include "amr/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "amr/levi.hpp"
#include "amr/penman.hpp"

namespace amr {

int SymbolTable::add(const std::string& s) {
    auto it = index.find(s);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(symbols.size());
    symbols.push_back(s);
    index[s] = id;
    return id;
}

int SymbolTable::lookup(const std::string& s) const {
    auto it = index.find(s);
    return it == index.end() ? -1 : it->second;
}

int SymbolTable::lookup_or_unk(const std::string& s) const {
    int i = lookup(s);
    if (i >= 0) return i;
    int u = lookup(kUnkSym);
    if (u < 0) throw CorpusError("symbol table has no <unk> entry");
    return u;
}

Vocabulary Vocabulary::with_specials(LinearizeMode mode) {
    Vocabulary v;
    v.mode = mode;
    for (const auto& s : {kRootSym, kEndSym, kUnkSym, kPadSym}) v.concepts.add(s);
    v.is_label.assign(v.concepts.size(), false);
    for (const auto& s : {kPadSym, kUnkSym}) {
        v.tokens.add(s);
        v.lemmas.add(s);
        v.pos.add(s);
        v.ner.add(s);
        v.chars.add(s);
    }
    v.tokens.add(kTargetSym);
    return v;
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// feature sidecar: one sentence per blank-line-separated group of rows
std::vector<std::vector<TokenFeatures>> read_features(const std::string& path) {
    std::vector<std::vector<TokenFeatures>> groups;
    std::vector<TokenFeatures> cur;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (!cur.empty()) groups.push_back(std::move(cur));
            cur = {};
            continue;
        }
        std::vector<std::string> cols;
        std::string col;
        std::istringstream ls(line);
        while (std::getline(ls, col, '\t')) cols.push_back(col);
        if (cols.size() != 4) throw CorpusError("features row must have 4 tab-separated columns: " + line);
        cur.push_back({cols[0], cols[1], cols[2], cols[3]});
    }
    if (!cur.empty()) groups.push_back(std::move(cur));
    return groups;
}

}  // namespace

Sentence sentence_from_line(const std::string& line) {
    Sentence s;
    for (const auto& tok : split_ws(line)) s.tokens.push_back({tok});
    return s;
}

TrainingExample make_example(const Sentence& s, LinearizeMode mode) {
    TrainingExample ex;
    ex.sentence = s;
    if (s.gold) {
        ex.target = linearize(*s.gold, mode);
        ex.target.entries.push_back({EntryKind::Concept, kEndSym});
        ex.target.arcs.push_back({});
    }
    for (size_t j = 0; j < s.tokens.size(); ++j) {
        ex.token_positions[s.tokens[j].token].push_back(static_cast<int>(j));
        if (s.tokens[j].lemma != kFeatAbsent)
            ex.lemma_positions[s.tokens[j].lemma].push_back(static_cast<int>(j));
    }
    return ex;
}

std::vector<TrainingExample> load_corpus(const std::string& penman_path,
                                         const std::string& features_path,
                                         LinearizeMode mode, LoadReport* report) {
    LoadReport scratch;
    LoadReport& rep = report ? *report : scratch;

    auto blocks = read_corpus_blocks(read_file(penman_path));
    std::vector<std::vector<TokenFeatures>> features;
    bool have_features = !features_path.empty();
    if (have_features) features = read_features(features_path);
    if (have_features && features.size() != blocks.size())
        throw CorpusError("features file has " + std::to_string(features.size()) +
                          " sentence groups, corpus has " + std::to_string(blocks.size()));

    std::vector<TrainingExample> out;
    for (size_t b = 0; b < blocks.size(); ++b) {
        const CorpusBlock& blk = blocks[b];
        Sentence s;
        metadata_value(blk, "id", s.id);
        std::string tok_line;
        if (metadata_value(blk, "tok", tok_line) ||
            metadata_value(blk, "snt", tok_line)) {
            for (const auto& t : split_ws(tok_line)) s.tokens.push_back({t});
        }
        try {
            if (blk.graph_text.empty()) throw CorpusError("block has no graph");
            s.gold = parse_penman(blk.graph_text);
        } catch (const std::exception& e) {
            rep.skipped++;
            rep.diagnostics.push_back("sentence " + std::to_string(b) + " (" + s.id +
                                      "): bad graph: " + e.what());
            continue;
        }
        if (s.tokens.empty()) {
            rep.skipped++;
            rep.diagnostics.push_back("sentence " + std::to_string(b) + " (" + s.id +
                                      "): no ::tok or ::snt line");
            continue;
        }
        if (have_features) {
            const auto& feats = features[b];
            if (feats.size() != s.tokens.size()) {
                rep.skipped++;
                rep.diagnostics.push_back("sentence " + std::to_string(b) + " (" + s.id +
                                          "): feature/token length mismatch (" +
                                          std::to_string(feats.size()) + " vs " +
                                          std::to_string(s.tokens.size()) + ")");
                continue;
            }
            bool aligned = true;
            for (size_t j = 0; j < feats.size(); ++j)
                if (feats[j].token != s.tokens[j].token) aligned = false;
            if (!aligned) {
                rep.skipped++;
                rep.diagnostics.push_back("sentence " + std::to_string(b) + " (" + s.id +
                                          "): feature tokens do not match ::tok line");
                continue;
            }
            s.tokens = feats;
        }
        out.push_back(make_example(s, mode));
        rep.loaded++;
    }
    return out;
}

Vocabulary build_vocab(const std::vector<TrainingExample>& examples, LinearizeMode mode) {
    if (examples.empty()) throw CorpusError("cannot build vocabulary from an empty corpus");
    Vocabulary v = Vocabulary::with_specials(mode);

    std::map<std::string, long> concept_freq, label_freq;
    std::map<std::string, long> tok_freq, lem_freq, pos_freq, ner_freq;
    std::map<char, long> char_freq;
    for (const auto& ex : examples) {
        for (const auto& e : ex.target.entries) {
            if (e.kind == EntryKind::Concept && e.name != kEndSym) concept_freq[e.name]++;
            if (e.kind == EntryKind::Label) label_freq[strip_reversal(e.name)]++;
        }
        for (const auto& [key, labels] : ex.target.arc_labels)
            for (const auto& l : labels) label_freq[strip_reversal(l)]++;
        for (const auto& t : ex.sentence.tokens) {
            tok_freq[t.token]++;
            lem_freq[t.lemma]++;
            pos_freq[t.pos]++;
            ner_freq[t.ner]++;
            for (char c : t.token) char_freq[c]++;
        }
        if (ex.sentence.gold)
            for (const auto& c : ex.sentence.gold->concepts)
                for (char ch : c.name) char_freq[ch]++;
    }

    auto by_freq = [](const std::map<std::string, long>& freq) {
        std::vector<std::pair<std::string, long>> v(freq.begin(), freq.end());
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
            return std::tie(b.second, a.first) < std::tie(a.second, b.first);
        });
        return v;
    };

    for (const auto& [name, f] : by_freq(concept_freq)) {
        (void)f;
        v.concepts.add(name);
        v.is_label.push_back(false);
    }
    v.base_concept_count = v.concepts.size();

    std::vector<std::string> rel_names;
    for (const auto& [name, f] : by_freq(label_freq)) {
        (void)f;
        rel_names.push_back(name);
    }
    for (const auto& name : rel_names) {
        v.relations.add(name);
        v.relations.add(reverse_label(name));
    }
    if (mode == LinearizeMode::Levi) {
        for (const auto& name : rel_names) {
            for (const std::string& n : {name, reverse_label(name)}) {
                if (v.concepts.lookup(n) < 0) {
                    v.concepts.add(n);
                    v.is_label.push_back(true);
                } else {
                    v.is_label[v.concepts.lookup(n)] = true;
                }
            }
        }
    }

    for (const auto& [s, f] : by_freq(tok_freq)) (void)f, v.tokens.add(s);
    for (const auto& [s, f] : by_freq(lem_freq)) (void)f, v.lemmas.add(s);
    for (const auto& [s, f] : by_freq(pos_freq)) (void)f, v.pos.add(s);
    for (const auto& [s, f] : by_freq(ner_freq)) (void)f, v.ner.add(s);
    {
        std::vector<std::pair<char, long>> cf(char_freq.begin(), char_freq.end());
        std::sort(cf.begin(), cf.end(), [](const auto& a, const auto& b) {
            return std::tie(b.second, a.first) < std::tie(a.second, b.first);
        });
        for (const auto& [c, f] : cf) (void)f, v.chars.add(std::string(1, c));
    }
    return v;
}

Oracle make_oracle(const TrainingExample& ex, const Vocabulary& vocab) {
    Oracle o;
    const NodeSequence& seq = ex.target;
    if (seq.entries.empty()) throw CorpusError("example has no target sequence");
    for (size_t t = 1; t < seq.entries.size(); ++t) {
        OracleStep step;
        step.gold_name = seq.entries[t].name;
        step.kind = seq.entries[t].kind;
        step.concept_index = vocab.concepts.lookup(step.gold_name);
        step.copyable_token = ex.token_positions.count(step.gold_name) > 0;
        step.copyable_lemma = ex.lemma_positions.count(step.gold_name) > 0;
        if (step.concept_index < 0 && !step.copyable_token && !step.copyable_lemma) {
            o.unk_targets++;
        }
        step.arc_bits.assign(t, 0);
        for (int j : seq.arcs[t]) {
            step.arc_bits[j] = 1;
            auto it = seq.arc_labels.find({static_cast<int>(t), j});
            if (it != seq.arc_labels.end())
                for (const auto& l : it->second) step.rel_labels.emplace_back(j, l);
        }
        o.steps.push_back(std::move(step));
    }
    return o;
}

nlohmann::json vocab_to_json(const Vocabulary& v) {
    nlohmann::json j;
    j["mode"] = v.mode == LinearizeMode::Levi ? "levi" : "concepts";
    j["concepts"] = v.concepts.symbols;
    j["is_label"] = v.is_label;
    j["base_concept_count"] = v.base_concept_count;
    j["relations"] = v.relations.symbols;
    j["tokens"] = v.tokens.symbols;
    j["lemmas"] = v.lemmas.symbols;
    j["pos"] = v.pos.symbols;
    j["ner"] = v.ner.symbols;
    j["chars"] = v.chars.symbols;
    return j;
}

Vocabulary vocab_from_json(const nlohmann::json& j) {
    Vocabulary v;
    v.mode = j.at("mode").get<std::string>() == "levi" ? LinearizeMode::Levi
                                                       : LinearizeMode::Concepts;
    auto fill = [](SymbolTable& t, const nlohmann::json& arr) {
        for (const auto& s : arr) t.add(s.get<std::string>());
    };
    fill(v.concepts, j.at("concepts"));
    v.is_label = j.at("is_label").get<std::vector<bool>>();
    v.base_concept_count = j.at("base_concept_count").get<size_t>();
    fill(v.relations, j.at("relations"));
    fill(v.tokens, j.at("tokens"));
    fill(v.lemmas, j.at("lemmas"));
    fill(v.pos, j.at("pos"));
    fill(v.ner, j.at("ner"));
    fill(v.chars, j.at("chars"));
    return v;
}

CorpusStats corpus_stats(const std::string& penman_path) {
    CorpusStats st;
    auto blocks = read_corpus_blocks(read_file(penman_path));
    for (const auto& blk : blocks) {
        if (blk.graph_text.empty()) continue;
        AmrGraph g = parse_penman(blk.graph_text);
        st.sentences++;
        std::string tok_line;
        if (metadata_value(blk, "tok", tok_line) || metadata_value(blk, "snt", tok_line))
            st.tokens += static_cast<long>(split_ws(tok_line).size());
        st.concepts += static_cast<long>(g.concepts.size());
        st.relations += static_cast<long>(g.edges.size());
    }
    return st;
}

}  // namespace amr
