#include "amr/model.hpp"

#include <algorithm>
#include <cmath>

#include "amr/levi.hpp"

namespace amr {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::NdBdBd: return "nd-bd-bd";
        case Variant::NdAdBd: return "nd-ad-bd";
        case Variant::NdAdLv: return "nd-ad-lv";
    }
    return "?";
}

Variant variant_from_name(const std::string& s) {
    if (s == "nd-bd-bd") return Variant::NdBdBd;
    if (s == "nd-ad-bd") return Variant::NdAdBd;
    if (s == "nd-ad-lv") return Variant::NdAdLv;
    throw std::invalid_argument("unknown variant: " + s + " (expected nd-bd-bd, nd-ad-bd or nd-ad-lv)");
}

void ParserConfig::validate_fields() const {
    auto pos = [](int v, const char* what) {
        if (v <= 0) throw std::invalid_argument(std::string(what) + " must be positive");
    };
    pos(d, "d");
    pos(heads, "heads");
    pos(text_layers, "text_layers");
    pos(graph_layers, "graph_layers");
    pos(gt_layers, "gt_layers");
    pos(ff, "ff");
    pos(gt_ff, "gt_ff");
    pos(biaffine_hidden, "biaffine_hidden");
    pos(char_ngram, "char_ngram");
    pos(max_decode_length, "max_decode_length");
    if (d % heads != 0) throw std::invalid_argument("d must be divisible by heads");
    if (arc_threshold < 0.0 || arc_threshold > 1.0)
        throw std::invalid_argument("arc_threshold must be in [0, 1]");
}

nlohmann::json ParserConfig::to_json() const {
    return {{"d", d},
            {"heads", heads},
            {"text_layers", text_layers},
            {"graph_layers", graph_layers},
            {"gt_layers", gt_layers},
            {"ff", ff},
            {"gt_ff", gt_ff},
            {"biaffine_hidden", biaffine_hidden},
            {"token_emb", token_emb},
            {"lemma_emb", lemma_emb},
            {"pos_emb", pos_emb},
            {"ner_emb", ner_emb},
            {"concept_emb", concept_emb},
            {"char_emb", char_emb},
            {"char_filters", char_filters},
            {"char_ngram", char_ngram},
            {"char_out", char_out},
            {"variant", variant_name(variant)},
            {"arc_threshold", arc_threshold},
            {"max_decode_length", max_decode_length}};
}

ParserConfig ParserConfig::from_json(const nlohmann::json& j) {
    ParserConfig c;
    c.d = j.value("d", c.d);
    c.heads = j.value("heads", c.heads);
    c.text_layers = j.value("text_layers", c.text_layers);
    c.graph_layers = j.value("graph_layers", c.graph_layers);
    c.gt_layers = j.value("gt_layers", c.gt_layers);
    c.ff = j.value("ff", c.ff);
    c.gt_ff = j.value("gt_ff", c.gt_ff);
    c.biaffine_hidden = j.value("biaffine_hidden", c.biaffine_hidden);
    c.token_emb = j.value("token_emb", c.token_emb);
    c.lemma_emb = j.value("lemma_emb", c.lemma_emb);
    c.pos_emb = j.value("pos_emb", c.pos_emb);
    c.ner_emb = j.value("ner_emb", c.ner_emb);
    c.concept_emb = j.value("concept_emb", c.concept_emb);
    c.char_emb = j.value("char_emb", c.char_emb);
    c.char_filters = j.value("char_filters", c.char_filters);
    c.char_ngram = j.value("char_ngram", c.char_ngram);
    c.char_out = j.value("char_out", c.char_out);
    if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
    c.arc_threshold = j.value("arc_threshold", c.arc_threshold);
    c.max_decode_length = j.value("max_decode_length", c.max_decode_length);
    c.validate_fields();
    return c;
}

Candidates Candidates::of(const Sentence& s) {
    Candidates c;
    for (size_t j = 0; j < s.tokens.size(); ++j) {
        const auto& tf = s.tokens[j];
        auto it = c.token_index.find(tf.token);
        if (it == c.token_index.end()) {
            c.token_index[tf.token] = static_cast<int>(c.token_strings.size());
            c.token_strings.push_back(tf.token);
            c.token_positions.push_back({static_cast<int>(j)});
        } else {
            c.token_positions[it->second].push_back(static_cast<int>(j));
        }
        if (tf.lemma != kFeatAbsent) {
            auto lt = c.lemma_index.find(tf.lemma);
            if (lt == c.lemma_index.end()) {
                c.lemma_index[tf.lemma] = static_cast<int>(c.lemma_strings.size());
                c.lemma_strings.push_back(tf.lemma);
                c.lemma_positions.push_back({static_cast<int>(j)});
            } else {
                c.lemma_positions[lt->second].push_back(static_cast<int>(j));
            }
        }
    }
    return c;
}

Model::Model(const ParserConfig& cfg, const Vocabulary& vocab) : cfg_(cfg), vocab_(vocab) {
    cfg_.validate_fields();
    use_arc_biaffine_ = cfg_.variant == Variant::NdBdBd;
    use_rel_biaffine_ = cfg_.variant == Variant::NdBdBd || cfg_.variant == Variant::NdAdBd;

    const int d = cfg_.d;
    auto& P = params_;

    P.create("feat.token_emb", static_cast<int>(vocab_.tokens.size()), cfg_.token_emb);
    P.create("feat.lemma_emb", static_cast<int>(vocab_.lemmas.size()), cfg_.lemma_emb);
    P.create("feat.pos_emb", static_cast<int>(vocab_.pos.size()), cfg_.pos_emb);
    P.create("feat.ner_emb", static_cast<int>(vocab_.ner.size()), cfg_.ner_emb);

    P.create("char_cnn.emb", static_cast<int>(vocab_.chars.size()), cfg_.char_emb);
    P.create("char_cnn.w", cfg_.char_ngram * cfg_.char_emb, cfg_.char_filters);
    P.create("char_cnn.b", 1, cfg_.char_filters);
    P.create("char_cnn.proj", cfg_.char_filters, cfg_.char_out);
    P.create("char_cnn.proj_b", 1, cfg_.char_out);

    int text_in = cfg_.token_emb + cfg_.lemma_emb + cfg_.pos_emb + cfg_.ner_emb + cfg_.char_out;
    P.create("text_enc.proj", text_in, d);
    P.create("text_enc.proj_b", 1, d);
    auto make_layer = [&](const std::string& prefix, int ffdim) {
        P.create(prefix + ".wq", d, d);
        P.create(prefix + ".bq", 1, d);
        // no key bias: softmax scores are invariant to a shared key offset
        P.create(prefix + ".wk", d, d);
        P.create(prefix + ".wv", d, d);
        P.create(prefix + ".bv", 1, d);
        P.create(prefix + ".wo", d, d);
        P.create(prefix + ".bo", 1, d);
        P.create(prefix + ".ln1_g", 1, d);
        P.create(prefix + ".ln1_b", 1, d);
        P.create(prefix + ".ff_w1", d, ffdim);
        P.create(prefix + ".ff_b1", 1, ffdim);
        P.create(prefix + ".ff_w2", ffdim, d);
        P.create(prefix + ".ff_b2", 1, d);
        P.create(prefix + ".ln2_g", 1, d);
        P.create(prefix + ".ln2_b", 1, d);
    };
    for (int i = 0; i < cfg_.text_layers; ++i) make_layer("text_enc.l" + std::to_string(i), cfg_.ff);

    P.create("graph_enc.concept_emb", static_cast<int>(vocab_.concepts.size()), cfg_.concept_emb);
    P.create("graph_enc.proj", cfg_.concept_emb + cfg_.char_out, d);
    P.create("graph_enc.proj_b", 1, d);
    for (int i = 0; i < cfg_.graph_layers; ++i) make_layer("graph_enc.l" + std::to_string(i), cfg_.ff);

    for (int l = 0; l < cfg_.gt_layers; ++l) {
        std::string lp = "gt.l" + std::to_string(l);
        for (int h = 0; h < cfg_.heads; ++h) {
            std::string hp = lp + ".h" + std::to_string(h);
            P.create(hp + ".wq", d, d);
            P.create(hp + ".wk", d, d);
            P.create(hp + ".wv", d, d);
        }
        P.create(lp + ".wplus", cfg_.heads * d, d);
        if (l + 1 < cfg_.gt_layers) {
            P.create(lp + ".ln1_g", 1, d);
            P.create(lp + ".ln1_b", 1, d);
            P.create(lp + ".ff_w1", d, cfg_.gt_ff);
            P.create(lp + ".ff_b1", 1, cfg_.gt_ff);
            P.create(lp + ".ff_w2", cfg_.gt_ff, d);
            P.create(lp + ".ff_b2", 1, d);
            P.create(lp + ".ln2_g", 1, d);
            P.create(lp + ".ln2_b", 1, d);
        }
    }

    P.create("node_dec.gate_c", d, 1);
    P.create("node_dec.gate_w", d, 1);
    P.create("node_dec.gate_l", d, 1);
    P.create("node_dec.wg", d, static_cast<int>(vocab_.concepts.size()));

    const int H = cfg_.biaffine_hidden;
    if (use_arc_biaffine_) {
        P.create("biaffine.arc_head_w", d, H);
        P.create("biaffine.arc_head_b", 1, H);
        P.create("biaffine.arc_dep_w", d, H);
        P.create("biaffine.arc_dep_b", 1, H);
        P.create("biaffine.arc_u", H + 1, H + 1);
    }
    if (use_rel_biaffine_) {
        P.create("biaffine.rel_head_w", d, H);
        P.create("biaffine.rel_head_b", 1, H);
        P.create("biaffine.rel_dep_w", d, H);
        P.create("biaffine.rel_dep_b", 1, H);
        P.create("biaffine.rel_u", H + 1, (H + 1) * static_cast<int>(vocab_.relations.size()));
    }
}

void Model::init_params(uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& p : params_.all()) {
        const std::string& n = p->name;
        bool is_emb = n.ends_with("_emb") || n == "char_cnn.emb";
        bool is_gain = n.ends_with("ln1_g") || n.ends_with("ln2_g");
        bool is_bias = n.ends_with("_b") || n.ends_with(".b") || n.ends_with("bq") ||
                       n.ends_with("bk") || n.ends_with("bv") || n.ends_with("bo");
        if (is_gain) init_ones(*p);
        else if (is_bias) init_zeros(*p);
        else if (is_emb) init_normal(*p, rng, 0.1);
        else init_xavier(*p, rng);
    }
}

std::vector<int> Model::char_ids(const std::string& surface) const {
    std::vector<int> ids;
    // special symbols (<root>, <end>, ...) carry no useful characters
    if (!(surface.size() >= 2 && surface.front() == '<' && surface.back() == '>'))
        for (char c : surface) ids.push_back(vocab_.chars.lookup_or_unk(std::string(1, c)));
    int pad = vocab_.chars.lookup(kPadSym);
    while (static_cast<int>(ids.size()) < cfg_.char_ngram) ids.push_back(pad);
    return ids;
}

Tape::V Model::char_feature(Tape& t, const std::string& surface, EncCache& cache) const {
    auto it = cache.char_feat.find(surface);
    if (it != cache.char_feat.end()) return it->second;
    auto& P = const_cast<ParamStore&>(params_);
    Tape::V emb = t.embedding_rows(t.param(*P.find("char_cnn.emb")), char_ids(surface));
    Tape::V conv = t.relu(t.conv1d_rows(emb, t.param(*P.find("char_cnn.w")),
                                        t.param(*P.find("char_cnn.b")), cfg_.char_ngram));
    Tape::V pooled = t.max_over_rows(conv);
    Tape::V out = t.add_rowvec(t.matmul(pooled, t.param(*P.find("char_cnn.proj"))),
                               t.param(*P.find("char_cnn.proj_b")));
    cache.char_feat[surface] = out;
    return out;
}

Tape::V Model::positional(Tape& t, int rows) const {
    std::vector<double> pe(static_cast<size_t>(rows) * cfg_.d);
    for (int r = 0; r < rows; ++r)
        for (int i = 0; i < cfg_.d; ++i) {
            double angle = r / std::pow(10000.0, 2.0 * (i / 2) / cfg_.d);
            pe[r * cfg_.d + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    return t.input(rows, cfg_.d, std::move(pe));
}

Tape::V Model::transformer_layer(Tape& t, Tape::V x, const std::string& prefix,
                                 std::vector<Tape::V>* attn_out) const {
    auto& P = const_cast<ParamStore&>(params_);
    auto p = [&](const std::string& s) { return t.param(*P.find(prefix + "." + s)); };
    const int dh = cfg_.d / cfg_.heads;

    Tape::V Q = t.add_rowvec(t.matmul(x, p("wq")), p("bq"));
    Tape::V K = t.matmul(x, p("wk"));
    Tape::V Vv = t.add_rowvec(t.matmul(x, p("wv")), p("bv"));
    std::vector<Tape::V> heads;
    for (int h = 0; h < cfg_.heads; ++h) {
        Tape::V Qh = t.slice_cols(Q, h * dh, (h + 1) * dh);
        Tape::V Kh = t.slice_cols(K, h * dh, (h + 1) * dh);
        Tape::V Vh = t.slice_cols(Vv, h * dh, (h + 1) * dh);
        Tape::V A = t.softmax_rows(t.scale(t.matmul_nt(Qh, Kh), 1.0 / std::sqrt(double(dh))));
        if (attn_out) attn_out->push_back(A);
        heads.push_back(t.matmul(A, Vh));
    }
    Tape::V O = t.add_rowvec(t.matmul(t.concat_cols(heads), p("wo")), p("bo"));
    x = t.layernorm_rows(t.add(x, O), p("ln1_g"), p("ln1_b"));
    Tape::V f = t.relu(t.add_rowvec(t.matmul(x, p("ff_w1")), p("ff_b1")));
    f = t.add_rowvec(t.matmul(f, p("ff_w2")), p("ff_b2"));
    return t.layernorm_rows(t.add(x, f), p("ln2_g"), p("ln2_b"));
}

Tape::V Model::encode_text(Tape& t, const Sentence& s, std::vector<Tape::V>* attn_out) const {
    if (s.tokens.empty()) throw CorpusError("cannot encode an empty sentence");
    auto& P = const_cast<ParamStore&>(params_);
    EncCache cache;
    const int n = static_cast<int>(s.tokens.size());

    std::vector<int> tok_ids{vocab_.tokens.lookup_or_unk(kTargetSym)};
    std::vector<int> lem_ids{vocab_.lemmas.lookup(kPadSym)};
    std::vector<int> pos_ids{vocab_.pos.lookup(kPadSym)};
    std::vector<int> ner_ids{vocab_.ner.lookup(kPadSym)};
    std::vector<Tape::V> char_rows{char_feature(t, kPadSym, cache)};
    for (const auto& tf : s.tokens) {
        tok_ids.push_back(vocab_.tokens.lookup_or_unk(tf.token));
        lem_ids.push_back(vocab_.lemmas.lookup_or_unk(tf.lemma));
        pos_ids.push_back(vocab_.pos.lookup_or_unk(tf.pos));
        ner_ids.push_back(vocab_.ner.lookup_or_unk(tf.ner));
        char_rows.push_back(char_feature(t, tf.token, cache));
    }
    Tape::V tok = t.embedding_rows(t.param(*P.find("feat.token_emb")), tok_ids);
    Tape::V lem = t.embedding_rows(t.param(*P.find("feat.lemma_emb")), lem_ids);
    Tape::V pos = t.embedding_rows(t.param(*P.find("feat.pos_emb")), pos_ids);
    Tape::V ner = t.embedding_rows(t.param(*P.find("feat.ner_emb")), ner_ids);
    Tape::V chars = t.concat_rows(char_rows);

    Tape::V x = t.concat_cols({tok, lem, pos, ner, chars});
    x = t.add_rowvec(t.matmul(x, t.param(*P.find("text_enc.proj"))),
                     t.param(*P.find("text_enc.proj_b")));
    x = t.add(x, positional(t, n + 1));
    for (int i = 0; i < cfg_.text_layers; ++i) {
        bool last = i + 1 == cfg_.text_layers;
        x = transformer_layer(t, x, "text_enc.l" + std::to_string(i), last ? attn_out : nullptr);
    }
    return x;
}

Tape::V Model::encode_graph(Tape& t, const std::vector<SeqEntry>& prefix) const {
    if (prefix.empty() || prefix[0].kind != EntryKind::Root)
        throw CorpusError("graph prefix must begin with the ROOT entry");
    auto& P = const_cast<ParamStore&>(params_);
    EncCache cache;

    std::vector<int> ids;
    std::vector<Tape::V> char_rows;
    for (const auto& e : prefix) {
        ids.push_back(vocab_.concepts.lookup_or_unk(e.name));
        char_rows.push_back(char_feature(t, e.name, cache));
    }
    Tape::V emb = t.embedding_rows(t.param(*P.find("graph_enc.concept_emb")), ids);
    Tape::V x = t.concat_cols({emb, t.concat_rows(char_rows)});
    x = t.add_rowvec(t.matmul(x, t.param(*P.find("graph_enc.proj"))),
                     t.param(*P.find("graph_enc.proj_b")));
    x = t.add(x, positional(t, static_cast<int>(prefix.size())));
    for (int i = 0; i < cfg_.graph_layers; ++i)
        x = transformer_layer(t, x, "graph_enc.l" + std::to_string(i));
    return x;
}

AttentionOut Model::graph_attention(Tape& t, Tape::V Et, Tape::V Ev) const {
    auto& P = const_cast<ParamStore&>(params_);
    const int n = t.rows(Et) - 1;
    const int m = t.rows(Ev) - 1;
    const int k = n + m + 1;

    Tape::V q = t.slice_rows(Et, 0, 1);
    std::vector<Tape::V> kparts;
    if (n > 0) kparts.push_back(t.slice_rows(Et, 1, n + 1));
    kparts.push_back(Ev);
    Tape::V K = kparts.size() == 1 ? kparts[0] : t.concat_rows(kparts);

    std::vector<Tape::V> alphas;
    Tape::V beta_plus{};
    for (int l = 0; l < cfg_.gt_layers; ++l) {
        std::string lp = "gt.l" + std::to_string(l);
        alphas.clear();
        std::vector<Tape::V> betas;
        for (int h = 0; h < cfg_.heads; ++h) {
            std::string hp = lp + ".h" + std::to_string(h);
            Tape::V qh = t.matmul(q, t.param(*P.find(hp + ".wq")));
            Tape::V kh = t.matmul(K, t.param(*P.find(hp + ".wk")));
            Tape::V a = t.softmax_rows(t.scale(t.matmul_nt(qh, kh), 1.0 / std::sqrt(double(cfg_.d))));
            alphas.push_back(a);
            betas.push_back(t.matmul(t.matmul(a, K), t.param(*P.find(hp + ".wv"))));
        }
        beta_plus = t.matmul(t.concat_cols(betas), t.param(*P.find(lp + ".wplus")));
        if (l + 1 < cfg_.gt_layers) {
            auto p = [&](const std::string& s) { return t.param(*P.find(lp + "." + s)); };
            q = t.layernorm_rows(t.add(q, beta_plus), p("ln1_g"), p("ln1_b"));
            Tape::V f = t.relu(t.add_rowvec(t.matmul(q, p("ff_w1")), p("ff_b1")));
            f = t.add_rowvec(t.matmul(f, p("ff_w2")), p("ff_b2"));
            q = t.layernorm_rows(t.add(q, f), p("ln2_g"), p("ln2_b"));
        }
    }

    AttentionOut out;
    out.n = n;
    out.m = m;
    out.head_alphas = t.concat_rows(alphas);
    out.beta_plus = beta_plus;
    Tape::V alpha1 = t.slice_rows(out.head_alphas, 0, 1);
    out.alpha_token = n > 0 ? t.slice_cols(alpha1, 0, n) : Tape::V{};
    out.alpha_arc = t.max_over_rows(t.slice_cols(out.head_alphas, n, k));
    return out;
}

NodeDecodeOut Model::node_decode(Tape& t, const AttentionOut& attn, const Candidates& cand) const {
    auto& P = const_cast<ParamStore&>(params_);
    NodeDecodeOut out;
    out.concept_count = static_cast<int>(vocab_.concepts.size());
    out.token_count = static_cast<int>(cand.token_strings.size());
    out.lemma_count = static_cast<int>(cand.lemma_strings.size());

    Tape::V bp = attn.beta_plus;
    std::vector<Tape::V> gate_logits{t.matmul(bp, t.param(*P.find("node_dec.gate_c"))),
                                     t.matmul(bp, t.param(*P.find("node_dec.gate_w")))};
    bool has_lemmas = out.lemma_count > 0;
    if (has_lemmas) gate_logits.push_back(t.matmul(bp, t.param(*P.find("node_dec.gate_l"))));
    Tape::V gates_active = t.softmax_rows(t.concat_cols(gate_logits));
    // expose gates as a fixed 1x3 row; a missing lemma section gets gate 0
    out.gates = has_lemmas ? gates_active : t.concat_cols({gates_active, t.zeros(1, 1)});

    Tape::V gen = t.softmax_rows(t.matmul(bp, t.param(*P.find("node_dec.wg"))));
    Tape::V gC = t.slice_cols(gates_active, 0, 1);
    Tape::V gW = t.slice_cols(gates_active, 1, 2);

    std::vector<Tape::V> sections{t.mul_by_scalar(gen, gC)};

    // renormalized token attention
    Tape::V ahat = t.div_by_scalar(attn.alpha_token, t.sum_all(attn.alpha_token));
    {
        std::vector<double> sel(static_cast<size_t>(attn.n) * out.token_count, 0.0);
        for (int i = 0; i < out.token_count; ++i)
            for (int j : cand.token_positions[i]) sel[static_cast<size_t>(j) * out.token_count + i] = 1.0;
        Tape::V copy_w = t.matmul(ahat, t.input(attn.n, out.token_count, std::move(sel)));
        sections.push_back(t.mul_by_scalar(copy_w, gW));
    }
    if (has_lemmas) {
        Tape::V gL = t.slice_cols(gates_active, 2, 3);
        std::vector<double> sel(static_cast<size_t>(attn.n) * out.lemma_count, 0.0);
        for (int i = 0; i < out.lemma_count; ++i)
            for (int j : cand.lemma_positions[i]) sel[static_cast<size_t>(j) * out.lemma_count + i] = 1.0;
        Tape::V copy_l = t.matmul(ahat, t.input(attn.n, out.lemma_count, std::move(sel)));
        sections.push_back(t.mul_by_scalar(copy_l, gL));
    }
    out.o_node = t.concat_cols(sections);
    return out;
}

BiaffineOut Model::biaffine_decode(Tape& t, Tape::V beta_plus, Tape::V Ev) const {
    auto& P = const_cast<ParamStore&>(params_);
    BiaffineOut out;
    out.m = t.rows(Ev) - 1;
    out.has_arc = use_arc_biaffine_;
    out.has_rel = use_rel_biaffine_;
    if (out.m < 1) return out;
    Tape::V deps = t.slice_rows(Ev, 1, out.m + 1);
    Tape::V ones_m = t.input(out.m, 1, std::vector<double>(out.m, 1.0));
    Tape::V one = t.input(1, 1, {1.0});

    if (use_arc_biaffine_) {
        Tape::V h = t.relu(t.add_rowvec(t.matmul(beta_plus, t.param(*P.find("biaffine.arc_head_w"))),
                                        t.param(*P.find("biaffine.arc_head_b"))));
        Tape::V dmat = t.relu(t.add_rowvec(t.matmul(deps, t.param(*P.find("biaffine.arc_dep_w"))),
                                           t.param(*P.find("biaffine.arc_dep_b"))));
        Tape::V hh = t.concat_cols({h, one});
        Tape::V dd = t.concat_cols({dmat, ones_m});
        out.o_arc = t.matmul_nt(t.matmul(hh, t.param(*P.find("biaffine.arc_u"))), dd);
    }
    if (use_rel_biaffine_) {
        const int R = static_cast<int>(vocab_.relations.size());
        const int H1 = cfg_.biaffine_hidden + 1;
        Tape::V h = t.relu(t.add_rowvec(t.matmul(beta_plus, t.param(*P.find("biaffine.rel_head_w"))),
                                        t.param(*P.find("biaffine.rel_head_b"))));
        Tape::V dmat = t.relu(t.add_rowvec(t.matmul(deps, t.param(*P.find("biaffine.rel_dep_w"))),
                                           t.param(*P.find("biaffine.rel_dep_b"))));
        Tape::V hh = t.concat_cols({h, one});
        Tape::V dd = t.concat_cols({dmat, ones_m});
        Tape::V g = t.matmul(hh, t.param(*P.find("biaffine.rel_u")));  // 1 x (H+1)*R
        std::vector<Tape::V> cols;
        for (int r = 0; r < R; ++r)
            cols.push_back(t.matmul_nt(dd, t.slice_cols(g, r * H1, (r + 1) * H1)));
        out.o_rel = t.softmax_rows(t.concat_cols(cols));
    }
    return out;
}

std::vector<int> Model::candidate_slots(const std::string& name, const Candidates& cand) const {
    std::vector<int> slots;
    int ci = vocab_.concepts.lookup(name);
    if (ci >= 0) slots.push_back(ci);
    int base = static_cast<int>(vocab_.concepts.size());
    auto wt = cand.token_index.find(name);
    if (wt != cand.token_index.end()) slots.push_back(base + wt->second);
    base += static_cast<int>(cand.token_strings.size());
    auto lt = cand.lemma_index.find(name);
    if (lt != cand.lemma_index.end()) slots.push_back(base + lt->second);
    return slots;
}

std::string Model::predict_name(const std::vector<double>& o, const Candidates& cand,
                                double* prob) const {
    std::unordered_map<std::string, double> mass;
    std::vector<std::string> order;
    auto bump = [&](const std::string& name, double v) {
        auto it = mass.find(name);
        if (it == mass.end()) {
            mass[name] = v;
            order.push_back(name);
        } else {
            it->second += v;
        }
    };
    const size_t C = vocab_.concepts.size();
    for (size_t i = 0; i < C; ++i) {
        const std::string& name = vocab_.concepts.symbols[i];
        if (name == kRootSym || name == kPadSym) continue;
        bump(name, o[i]);
    }
    for (size_t i = 0; i < cand.token_strings.size(); ++i) bump(cand.token_strings[i], o[C + i]);
    for (size_t i = 0; i < cand.lemma_strings.size(); ++i)
        bump(cand.lemma_strings[i], o[C + cand.token_strings.size() + i]);

    std::string best;
    double best_v = -1;
    for (const auto& name : order) {
        double v = mass[name];
        if (v > best_v) {
            best_v = v;
            best = name;
        }
    }
    if (prob) *prob = best_v;
    return best;
}

std::vector<int> Model::threshold_positions(const std::vector<double>& scores, double thr) {
    std::vector<int> out;
    for (size_t i = 0; i < scores.size(); ++i)
        if (scores[i] >= thr) out.push_back(static_cast<int>(i));
    return out;
}

StepPrediction Model::decode_step(Tape& t, Tape::V Et, const Candidates& cand,
                                  const std::vector<SeqEntry>& prefix) const {
    Tape::V Ev = encode_graph(t, prefix);
    AttentionOut attn = graph_attention(t, Et, Ev);
    NodeDecodeOut nd = node_decode(t, attn, cand);

    StepPrediction p;
    p.name = predict_name(t.values(nd.o_node), cand);
    p.is_end = p.name == kEndSym;
    int ci = vocab_.concepts.lookup(p.name);
    p.kind = (cfg_.variant == Variant::NdAdLv && ci >= 0 && vocab_.is_label[ci])
                 ? EntryKind::Label
                 : EntryKind::Concept;
    if (p.is_end) return p;

    const int m = attn.m;
    p.arc_scores.assign(m + 1, 0.0);
    p.position_label.assign(m + 1, "");
    if (cfg_.variant == Variant::NdBdBd) {
        BiaffineOut bf = biaffine_decode(t, attn.beta_plus, Ev);
        if (m >= 1) {
            const auto& raw = t.values(bf.o_arc);
            for (int j = 0; j < m; ++j)  // o_arc index j scores node v_{j+1}
                p.arc_scores[j + 1] = 1.0 / (1.0 + std::exp(-raw[j]));
            fill_labels(t, bf, p);
        }
    } else {
        p.arc_scores = t.values(attn.alpha_arc);
        if (cfg_.variant == Variant::NdAdBd && m >= 1) {
            BiaffineOut bf = biaffine_decode(t, attn.beta_plus, Ev);
            fill_labels(t, bf, p);
        }
    }
    for (int j : threshold_positions(p.arc_scores, cfg_.arc_threshold)) {
        p.arc_positions.push_back(j);
        if (j >= 1 && !p.position_label[j].empty()) p.arc_label_of[j] = p.position_label[j];
    }
    return p;
}

void Model::fill_labels(Tape& t, const BiaffineOut& bf, StepPrediction& p) const {
    if (!bf.has_rel || bf.m < 1) return;
    const auto& rel = t.values(bf.o_rel);
    const int R = static_cast<int>(vocab_.relations.size());
    for (int pos = 1; pos <= bf.m; ++pos) {
        const double* row = &rel[static_cast<size_t>(pos - 1) * R];
        int best = 0;
        for (int r = 1; r < R; ++r)
            if (row[r] > row[best]) best = r;
        p.position_label[pos] = vocab_.relations.symbols[best];
    }
}

ParseResult Model::parse_sentence(const Sentence& s) const {
    ParseResult res;
    Candidates cand = Candidates::of(s);
    Tape t;
    Tape::V Et = encode_text(t, s);

    NodeSequence& seq = res.sequence;
    seq.entries.push_back({EntryKind::Root, kRootSym});
    seq.arcs.push_back({});
    std::vector<SeqEntry> prefix = seq.entries;

    while (static_cast<int>(seq.entries.size()) - 1 < cfg_.max_decode_length) {
        StepPrediction p = decode_step(t, Et, cand, prefix);
        if (p.is_end) break;
        int idx = static_cast<int>(seq.entries.size());
        seq.entries.push_back({p.kind, p.name});

        bool needs_arc = idx > 1 && (cfg_.variant != Variant::NdAdLv
                                         ? p.kind == EntryKind::Concept
                                         : p.kind == EntryKind::Label);
        bool has_real_arc = false;
        for (int j : p.arc_positions)
            if (j >= 1) has_real_arc = true;
        if (needs_arc && !has_real_arc && p.arc_scores.size() > 1) {
            // attach to the best-scoring node as a repair; the paper gives no fallback
            int best = 1;
            for (size_t j = 2; j < p.arc_scores.size(); ++j)
                if (p.arc_scores[j] > p.arc_scores[best]) best = static_cast<int>(j);
            p.arc_positions.push_back(best);
            if (best < static_cast<int>(p.position_label.size()) &&
                !p.position_label[best].empty())
                p.arc_label_of[best] = p.position_label[best];
            res.repairs.note("step " + std::to_string(idx) + " ('" + p.name +
                             "') predicted no arcs; attached to node " + std::to_string(best));
        }
        std::sort(p.arc_positions.begin(), p.arc_positions.end());
        p.arc_positions.erase(std::unique(p.arc_positions.begin(), p.arc_positions.end()),
                              p.arc_positions.end());
        seq.arcs.push_back(p.arc_positions);
        for (const auto& [pos, lbl] : p.arc_label_of)
            seq.arc_labels[{idx, pos}].push_back(lbl);
        prefix.push_back(seq.entries.back());
    }

    bool any_concept = false;
    for (const auto& e : seq.entries)
        if (e.kind == EntryKind::Concept) any_concept = true;
    if (!any_concept) {
        res.repairs.note("decoder produced no concepts; emitting a single <unk> concept");
        seq.entries.push_back({EntryKind::Concept, kUnkSym});
        seq.arcs.push_back({});
    }
    res.graph = restore(seq, variant_mode(cfg_.variant), &res.repairs);
    return res;
}

AttentionDump Model::dump_attention(const Sentence& s, const NodeSequence& seq) const {
    AttentionDump dump;
    dump.tokens.push_back(kTargetSym);
    for (const auto& tf : s.tokens) dump.tokens.push_back(tf.token);
    for (const auto& e : seq.entries) dump.nodes.push_back(e.name);

    Tape t;
    std::vector<Tape::V> text_attn;
    Tape::V Et = encode_text(t, s, &text_attn);
    const int n1 = static_cast<int>(s.tokens.size()) + 1;
    dump.token_token.assign(n1, std::vector<double>(n1, 0.0));
    for (const auto& a : text_attn) {
        const auto& v = t.values(a);
        for (int r = 0; r < n1; ++r)
            for (int c = 0; c < n1; ++c) dump.token_token[r][c] += v[r * n1 + c] / text_attn.size();
    }

    const int S = static_cast<int>(seq.entries.size()) - 1;
    dump.node_token.assign(S, std::vector<double>(s.tokens.size(), 0.0));
    dump.node_node.assign(S, std::vector<double>(S + 1, 0.0));
    for (int step = 1; step <= S; ++step) {
        // prefix includes the step's own node so the diagonal carries its
        // self-attention; those cells are never turned into graph edges
        std::vector<SeqEntry> prefix(seq.entries.begin(), seq.entries.begin() + step + 1);
        Tape::V Ev = encode_graph(t, prefix);
        AttentionOut attn = graph_attention(t, Et, Ev);
        const auto& atok = t.values(attn.alpha_token);
        for (size_t j = 0; j < s.tokens.size(); ++j) dump.node_token[step - 1][j] = atok[j];
        const auto& aarc = t.values(attn.alpha_arc);
        for (int j = 0; j <= step; ++j) dump.node_node[step - 1][j] = aarc[j];
    }
    return dump;
}

std::map<std::string, long> Model::count_parameters() const {
    std::map<std::string, long> counts;
    for (const auto& p : params_.all()) {
        std::string comp = p->name.substr(0, p->name.find('.'));
        counts[comp] += static_cast<long>(p->size());
    }
    counts["encoder"] = counts["feat"] + counts["char_cnn"] + counts["text_enc"] +
                        counts["graph_enc"];
    counts["decoder"] = counts["gt"] + counts["node_dec"] + counts["biaffine"];
    long total = 0;
    for (const auto& p : params_.all()) total += static_cast<long>(p->size());
    counts["total"] = total;
    return counts;
}

}  // namespace amr
