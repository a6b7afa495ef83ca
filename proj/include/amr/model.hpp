#pragma once

#include <json.hpp>

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "amr/corpus.hpp"
#include "amr/sequence.hpp"
#include "amr/tensor.hpp"

namespace amr {

enum class Variant { NdBdBd, NdAdBd, NdAdLv };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& s);
inline LinearizeMode variant_mode(Variant v) {
    return v == Variant::NdAdLv ? LinearizeMode::Levi : LinearizeMode::Concepts;
}

struct ParserConfig {
    int d = 512;
    int heads = 8;
    int text_layers = 4;
    int graph_layers = 2;
    int gt_layers = 2;           // attention stack feeding alpha/beta
    int ff = 1024;               // encoder feed-forward hidden size
    int gt_ff = 1024;
    int biaffine_hidden = 100;
    int token_emb = 300;
    int lemma_emb = 300;
    int pos_emb = 32;
    int ner_emb = 16;
    int concept_emb = 300;
    int char_emb = 32;
    int char_filters = 256;
    int char_ngram = 3;
    int char_out = 128;
    Variant variant = Variant::NdAdLv;
    double arc_threshold = 0.5;
    int max_decode_length = 120;

    nlohmann::json to_json() const;
    static ParserConfig from_json(const nlohmann::json& j);
    void validate_fields() const;
};

/// Distinct copy candidates of one sentence, in first-occurrence order.
struct Candidates {
    std::vector<std::string> token_strings;
    std::vector<std::vector<int>> token_positions;   // 0-based token indices
    std::vector<std::string> lemma_strings;
    std::vector<std::vector<int>> lemma_positions;
    std::unordered_map<std::string, int> token_index;
    std::unordered_map<std::string, int> lemma_index;

    static Candidates of(const Sentence& s);
};

/// Last-layer attention state of the graph transformer for one step.
struct AttentionOut {
    Tape::V head_alphas;  // h x k, row i = alpha^i
    Tape::V beta_plus;    // 1 x d
    Tape::V alpha_token;  // 1 x n  (head-1 slice over tokens, unnormalized)
    Tape::V alpha_arc;    // 1 x (m+1), dimension-wise max over heads
    int n = 0, m = 0;
};

struct NodeDecodeOut {
    Tape::V gates;   // 1 x 3: g(C), g(W), g(L)
    Tape::V o_node;  // 1 x (|C| + |Wd| + |Ld|)
    int concept_count = 0;
    int token_count = 0;  // distinct token strings
    int lemma_count = 0;  // distinct lemma strings
};

struct BiaffineOut {
    Tape::V o_arc;      // 1 x m raw scores (sigmoid applied by callers)
    Tape::V o_rel;      // m x |R| softmax-normalized rows
    bool has_arc = false;
    bool has_rel = false;
    int m = 0;
};

struct StepPrediction {
    std::string name;
    EntryKind kind = EntryKind::Concept;
    bool is_end = false;
    std::vector<double> arc_scores;               // per position 0..m
    std::vector<std::string> position_label;      // best relation per position (biaffine variants)
    std::vector<int> arc_positions;               // positions with score >= threshold
    std::map<int, std::string> arc_label_of;      // position -> relation label
};

struct ParseResult {
    AmrGraph graph;
    NodeSequence sequence;
    RepairLog repairs;
};

struct AttentionDump {
    std::vector<std::string> tokens;                     // incl. w0 slot name
    std::vector<std::string> nodes;                      // v0..vS names
    std::vector<std::vector<double>> token_token;        // (n+1) x (n+1) head-avg
    std::vector<std::vector<double>> node_token;         // S x n
    std::vector<std::vector<double>> node_node;          // S x (S+1), lower-tri w/ diagonal
};

class Model {
  public:
    Model(const ParserConfig& cfg, const Vocabulary& vocab);

    void init_params(uint64_t seed);

    const ParserConfig& config() const { return cfg_; }
    const Vocabulary& vocab() const { return vocab_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// E^t rows 0..n. Optionally captures the last layer's per-head
    /// attention matrices.
    Tape::V encode_text(Tape& t, const Sentence& s,
                        std::vector<Tape::V>* attn_out = nullptr) const;

    /// E^v rows for the prefix (entry 0 must be ROOT).
    Tape::V encode_graph(Tape& t, const std::vector<SeqEntry>& prefix) const;

    AttentionOut graph_attention(Tape& t, Tape::V Et, Tape::V Ev) const;

    NodeDecodeOut node_decode(Tape& t, const AttentionOut& attn, const Candidates& cand) const;

    BiaffineOut biaffine_decode(Tape& t, Tape::V beta_plus, Tape::V Ev) const;

    /// Index of a candidate name inside o_node's candidate layout
    /// (every section that contains it), used for loss and merged argmax.
    std::vector<int> candidate_slots(const std::string& name, const Candidates& cand) const;

    /// Name with the highest merged (summed over duplicate slots) probability.
    /// ROOT and PAD are never predicted.
    std::string predict_name(const std::vector<double>& o_node_values, const Candidates& cand,
                             double* prob = nullptr) const;

    /// α^⊗/o_arc threshold rule. Returns positions with score >= threshold.
    static std::vector<int> threshold_positions(const std::vector<double>& scores, double thr);

    /// One greedy decode step on an existing tape (teacher-free).
    StepPrediction decode_step(Tape& t, Tape::V Et, const Candidates& cand,
                               const std::vector<SeqEntry>& prefix) const;

    ParseResult parse_sentence(const Sentence& s) const;

    AttentionDump dump_attention(const Sentence& s, const NodeSequence& seq) const;

    /// Closed-form-verifiable per-component parameter counts plus the
    /// decoder aggregate used by the size-reduction claim.
    std::map<std::string, long> count_parameters() const;

  private:
    struct EncCache {
        std::unordered_map<std::string, Tape::V> char_feat;
    };

    Tape::V char_feature(Tape& t, const std::string& surface, EncCache& cache) const;
    void fill_labels(Tape& t, const BiaffineOut& bf, StepPrediction& p) const;
    Tape::V transformer_layer(Tape& t, Tape::V x, const std::string& prefix,
                              std::vector<Tape::V>* attn_out = nullptr) const;
    Tape::V positional(Tape& t, int rows) const;
    std::vector<int> char_ids(const std::string& surface) const;

    ParserConfig cfg_;
    Vocabulary vocab_;
    ParamStore params_;
    bool use_arc_biaffine_ = false;
    bool use_rel_biaffine_ = false;
};

}  // namespace amr
