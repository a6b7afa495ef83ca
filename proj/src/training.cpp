#include "amr/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "amr/smatch.hpp"

namespace amr {

namespace {

constexpr double kArcClamp = 1e-7;
constexpr double kProbClamp = 1e-12;

Tape::V bernoulli_nll(Tape& t, Tape::V probs, const std::vector<uint8_t>& bits) {
    int k = t.cols(probs);
    std::vector<double> y(k, 0.0), yinv(k, 0.0);
    for (int i = 0; i < k; ++i) {
        y[i] = bits[i] ? 1.0 : 0.0;
        yinv[i] = bits[i] ? 0.0 : 1.0;
    }
    Tape::V clamped = t.clamp(probs, kArcClamp, 1.0 - kArcClamp);
    Tape::V ones = t.input(1, k, std::vector<double>(k, 1.0));
    Tape::V pos = t.mul(t.input(1, k, std::move(y)), t.log(clamped));
    Tape::V neg = t.mul(t.input(1, k, std::move(yinv)), t.log(t.sub(ones, clamped)));
    return t.scale(t.sum_all(t.add(pos, neg)), -1.0);
}

}  // namespace

StepLossNodes build_step_loss(Tape& t, const Model& model, const AttentionOut& attn,
                              const NodeDecodeOut& nd, const BiaffineOut* bf,
                              const OracleStep& step, const Candidates& cand,
                              const LossWeights& w) {
    StepLossNodes out;
    const Vocabulary& vocab = model.vocab();

    // node loss: -log of the total probability mass on the gold name
    std::vector<int> slots = model.candidate_slots(step.gold_name, cand);
    if (slots.empty()) slots.push_back(vocab.concepts.lookup(kUnkSym));
    int N = t.cols(nd.o_node);
    std::vector<double> sel(N, 0.0);
    for (int s : slots)
        if (s >= 0 && s < N) sel[s] = 1.0;
    Tape::V mass = t.matmul_nt(nd.o_node, t.input(1, N, std::move(sel)));
    out.node = t.scale(t.log(t.clamp(mass, kProbClamp, 1e9)), -1.0);

    // arc loss
    const int m = attn.m;
    if (model.config().variant == Variant::NdBdBd) {
        if (m >= 1 && bf && bf->has_arc) {
            std::vector<uint8_t> bits(step.arc_bits.begin() + 1, step.arc_bits.end());
            out.arc = bernoulli_nll(t, t.sigmoid(bf->o_arc), bits);
        }
    } else {
        out.arc = bernoulli_nll(t, attn.alpha_arc, step.arc_bits);
    }

    // relation loss at gold arcs (biaffine variants)
    bool want_rel = model.config().variant != Variant::NdAdLv;
    if (want_rel && bf && bf->has_rel && m >= 1 && !step.rel_labels.empty()) {
        const int R = static_cast<int>(vocab.relations.size());
        std::vector<double> mask(static_cast<size_t>(m) * R, 0.0);
        bool any = false;
        std::vector<bool> taken(m, false);
        for (const auto& [pos, label] : step.rel_labels) {
            if (pos < 1 || pos > m) continue;
            if (taken[pos - 1]) continue;  // o_rel predicts one label per pair
            int r = vocab.relations.lookup(label);
            if (r < 0) continue;
            mask[static_cast<size_t>(pos - 1) * R + r] = 1.0;
            taken[pos - 1] = true;
            any = true;
        }
        if (any) {
            Tape::V logp = t.log(t.clamp(bf->o_rel, kProbClamp, 1e9));
            out.rel = t.scale(t.sum_all(t.mul(t.input(m, R, std::move(mask)), logp)), -1.0);
        }
    }

    Tape::V total = t.scale(out.node, w.node);
    if (out.arc.valid()) total = t.add(total, t.scale(out.arc, w.arc));
    if (out.rel.valid()) total = t.add(total, t.scale(out.rel, w.rel));
    out.total = total;
    return out;
}

Tape::V sentence_loss(Tape& t, const Model& model, const TrainingExample& ex,
                      const Oracle& oracle, const LossWeights& w, LossBreakdown* breakdown) {
    Candidates cand = Candidates::of(ex.sentence);
    Tape::V Et = model.encode_text(t, ex.sentence);

    std::vector<SeqEntry> prefix{ex.target.entries[0]};
    Tape::V total{};
    for (size_t i = 0; i < oracle.steps.size(); ++i) {
        Tape::V Ev = model.encode_graph(t, prefix);
        AttentionOut attn = model.graph_attention(t, Et, Ev);
        NodeDecodeOut nd = model.node_decode(t, attn, cand);
        BiaffineOut bf;
        bool need_bf = model.config().variant != Variant::NdAdLv;
        if (need_bf) bf = model.biaffine_decode(t, attn.beta_plus, Ev);
        StepLossNodes sl =
            build_step_loss(t, model, attn, nd, need_bf ? &bf : nullptr, oracle.steps[i], cand, w);
        if (breakdown) {
            breakdown->node_loss += t.scalar(sl.node);
            if (sl.arc.valid()) breakdown->arc_loss += t.scalar(sl.arc);
            if (sl.rel.valid()) breakdown->rel_loss += t.scalar(sl.rel);
            breakdown->total += t.scalar(sl.total);
            breakdown->steps++;
        }
        total = total.valid() ? t.add(total, sl.total) : sl.total;
        // teacher forcing: the gold entry extends the prefix
        prefix.push_back(ex.target.entries[i + 1]);
    }
    return total;
}

AdamOptimizer::AdamOptimizer(double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

void AdamOptimizer::step(ParamStore& params, double clip_norm) {
    auto& all = params.all();
    if (m_.size() != all.size()) {
        m_.resize(all.size());
        v_.resize(all.size());
        for (size_t i = 0; i < all.size(); ++i) {
            m_[i].assign(all[i]->size(), 0.0);
            v_[i].assign(all[i]->size(), 0.0);
        }
    }
    double norm_sq = 0;
    for (auto& p : all) {
        if (!p->trainable) continue;
        for (double g : p->grad) norm_sq += g * g;
    }
    double scale = 1.0;
    if (clip_norm > 0 && norm_sq > clip_norm * clip_norm)
        scale = clip_norm / std::sqrt(norm_sq);

    t_++;
    double bc1 = 1.0 - std::pow(b1_, t_);
    double bc2 = 1.0 - std::pow(b2_, t_);
    for (size_t i = 0; i < all.size(); ++i) {
        Parameter& p = *all[i];
        if (!p.trainable) continue;
        for (size_t j = 0; j < p.size(); ++j) {
            double g = p.grad[j] * scale;
            m_[i][j] = b1_ * m_[i][j] + (1 - b1_) * g;
            v_[i][j] = b2_ * v_[i][j] + (1 - b2_) * g * g;
            double mhat = m_[i][j] / bc1;
            double vhat = v_[i][j] / bc2;
            p.value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

nlohmann::json EpochMetrics::to_json() const {
    nlohmann::json j{{"epoch", epoch},
                     {"node_loss", loss.node_loss},
                     {"arc_loss", loss.arc_loss},
                     {"rel_loss", loss.rel_loss},
                     {"total", loss.total},
                     {"steps", loss.steps}};
    if (smatch >= 0) j["smatch"] = smatch;
    return j;
}

double evaluate_smatch(const Model& model, const std::vector<TrainingExample>& examples,
                       int restarts) {
    std::vector<AmrGraph> pred, gold;
    for (const auto& ex : examples) {
        if (!ex.sentence.gold) continue;
        pred.push_back(model.parse_sentence(ex.sentence).graph);
        gold.push_back(*ex.sentence.gold);
    }
    if (pred.empty()) return 0.0;
    return smatch_corpus(pred, gold, restarts).f1;
}

TrainResult train(Model& model, const std::vector<TrainingExample>& corpus,
                  const TrainOptions& opts, const std::vector<TrainingExample>* eval_set,
                  const std::string& metrics_path) {
    if (corpus.empty()) throw CorpusError("training corpus is empty");
    TrainResult res;
    std::vector<Oracle> oracles;
    oracles.reserve(corpus.size());
    for (const auto& ex : corpus) oracles.push_back(make_oracle(ex, model.vocab()));

    AdamOptimizer adam(opts.lr, opts.beta1, opts.beta2);
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::ofstream metrics_out;
    if (!metrics_path.empty()) {
        metrics_out.open(metrics_path, std::ios::binary);
        if (!metrics_out) throw CorpusError("cannot open metrics log for write: " + metrics_path);
    }

    const std::vector<TrainingExample>& eval_examples = eval_set ? *eval_set : corpus;
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        adam.set_lr(opts.lr * std::pow(opts.lr_decay, epoch - 1));
        if (opts.shuffle) {
            std::mt19937_64 rng(opts.seed * 0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(epoch));
            std::shuffle(order.begin(), order.end(), rng);
        }
        EpochMetrics em;
        em.epoch = epoch;
        for (size_t oi : order) {
            Tape t;
            LossBreakdown bd;
            Tape::V loss = sentence_loss(t, model, corpus[oi], oracles[oi], opts.weights, &bd);
            double lv = t.scalar(loss);
            if (!std::isfinite(lv) || lv > opts.divergence_loss) {
                res.diverged = true;
                double pnorm = 0;
                for (const auto& p : model.params().all())
                    for (double v : p->value) pnorm += v * v;
                res.divergence_report =
                    "training diverged at epoch " + std::to_string(epoch) + " (sentence " +
                    std::to_string(oi) + "): loss=" + std::to_string(lv) +
                    " parameter_norm=" + std::to_string(std::sqrt(pnorm));
                res.epochs_run = epoch;
                return res;
            }
            em.loss.node_loss += bd.node_loss;
            em.loss.arc_loss += bd.arc_loss;
            em.loss.rel_loss += bd.rel_loss;
            em.loss.total += bd.total;
            em.loss.steps += bd.steps;
            model.params().zero_grads();
            t.backward(loss);
            adam.step(model.params(), opts.clip_norm);
        }
        if (em.loss.steps > 0) {
            em.loss.node_loss /= em.loss.steps;
            em.loss.arc_loss /= em.loss.steps;
            em.loss.rel_loss /= em.loss.steps;
            em.loss.total /= em.loss.steps;
        }
        bool eval_now = opts.eval_every > 0 &&
                        (epoch % opts.eval_every == 0 || epoch == opts.epochs);
        if (eval_now) {
            em.smatch = evaluate_smatch(model, eval_examples, opts.smatch_restarts);
            res.best_smatch = std::max(res.best_smatch, em.smatch);
        }
        res.log.push_back(em);
        if (metrics_out) metrics_out << em.to_json().dump() << "\n";
        res.epochs_run = epoch;
        if (eval_now && opts.stop_smatch >= 0 && em.smatch >= opts.stop_smatch) break;
    }
    return res;
}

}  // namespace amr
