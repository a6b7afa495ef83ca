#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "amr/graph.hpp"
#include "amr/sequence.hpp"

namespace amr {

// special symbols shared across vocabularies
inline const std::string kRootSym = "<root>";
inline const std::string kEndSym = "<end>";
inline const std::string kUnkSym = "<unk>";
inline const std::string kPadSym = "<pad>";
inline const std::string kTargetSym = "<tgt>";    // w0, the target-node query token
inline const std::string kFeatAbsent = "_";       // sentinel for a missing feature

struct TokenFeatures {
    std::string token;
    std::string lemma = kFeatAbsent;
    std::string pos = kFeatAbsent;
    std::string ner = kFeatAbsent;
};

struct Sentence {
    std::vector<TokenFeatures> tokens;  // w1..wn; w0 is implicit
    std::optional<AmrGraph> gold;
    std::string id;

    size_t size() const { return tokens.size(); }
};

/// Indexed symbol table with reserved specials at the front.
struct SymbolTable {
    std::vector<std::string> symbols;
    std::unordered_map<std::string, int> index;

    int add(const std::string& s);
    int lookup(const std::string& s) const;  // -1 when absent
    int lookup_or_unk(const std::string& s) const;
    size_t size() const { return symbols.size(); }
};

/// Concept/relation vocabulary. In LEVI mode `concepts` is C' = C plus every
/// distinct relation label and its "_R" twin; `is_label[i]` marks those
/// entries. `relations` is the biaffine label inventory R.
struct Vocabulary {
    LinearizeMode mode = LinearizeMode::Concepts;
    SymbolTable concepts;
    std::vector<bool> is_label;
    SymbolTable relations;
    size_t base_concept_count = 0;  // |C| before label entries were added

    SymbolTable tokens;
    SymbolTable lemmas;
    SymbolTable pos;
    SymbolTable ner;
    SymbolTable chars;

    static Vocabulary with_specials(LinearizeMode mode);
};

struct TrainingExample {
    Sentence sentence;
    NodeSequence target;  // linearized gold with an <end> entry appended
    // candidate copy-index sets: distinct surface string -> token positions (0-based)
    std::map<std::string, std::vector<int>> token_positions;
    std::map<std::string, std::vector<int>> lemma_positions;
};

/// Per-step supervision assembled from the gold sequence.
struct OracleStep {
    std::string gold_name;
    EntryKind kind = EntryKind::Concept;
    int concept_index = -1;           // index into vocabulary concepts, -1 if UNK
    bool copyable_token = false;
    bool copyable_lemma = false;
    std::vector<uint8_t> arc_bits;    // length t: positions v0..v_{t-1}
    std::vector<std::pair<int, std::string>> rel_labels;  // (position j, label) per gold arc
};

struct Oracle {
    std::vector<OracleStep> steps;  // one per target entry after ROOT, incl. <end>
    int unk_targets = 0;
};

struct CorpusError : std::runtime_error {
    explicit CorpusError(const std::string& m) : std::runtime_error(m) {}
};

struct LoadReport {
    int loaded = 0;
    int skipped = 0;
    std::vector<std::string> diagnostics;
};

/// Reads a Penman corpus plus an optional aligned features sidecar
/// (token<TAB>lemma<TAB>pos<TAB>ner per line, blank line between sentences).
/// Sentences whose feature rows mismatch the token line are skipped with a
/// diagnostic, not fatal. `mode` fixes the target linearization.
std::vector<TrainingExample> load_corpus(const std::string& penman_path,
                                         const std::string& features_path,
                                         LinearizeMode mode, LoadReport* report = nullptr);

/// Tokenizes one raw sentence line (whitespace split) without gold.
Sentence sentence_from_line(const std::string& line);

TrainingExample make_example(const Sentence& s, LinearizeMode mode);

/// Deterministic vocabulary: frequency-descending then lexicographic. LEVI
/// mode appends each distinct relation label and its "_R" twin to C'.
Vocabulary build_vocab(const std::vector<TrainingExample>& examples, LinearizeMode mode);

Oracle make_oracle(const TrainingExample& ex, const Vocabulary& vocab);

nlohmann::json vocab_to_json(const Vocabulary& v);
Vocabulary vocab_from_json(const nlohmann::json& j);

struct CorpusStats {
    long sentences = 0;
    long tokens = 0;
    long concepts = 0;
    long relations = 0;
};

CorpusStats corpus_stats(const std::string& penman_path);

}  // namespace amr
