#pragma once

#include <optional>
#include <string>
#include <vector>

#include "amr/corpus.hpp"
#include "amr/model.hpp"
#include "amr/tensor.hpp"

namespace amr {

struct LossBreakdown {
    double node_loss = 0;
    double arc_loss = 0;
    double rel_loss = 0;
    double total = 0;
    long steps = 0;
};

struct StepLossNodes {
    Tape::V node;
    Tape::V arc;   // invalid when m == 0 at the first step (biaffine variant)
    Tape::V rel;   // invalid unless the variant trains relation labels here
    Tape::V total;
};

/// Loss weights, 1:1:1 by default.
struct LossWeights {
    double node = 1.0, arc = 1.0, rel = 1.0;
};

/// Builds the per-step training loss on the tape: pointer-generator NLL for
/// the node, Bernoulli NLL (clamped at 1e-7) for the arcs, cross-entropy
/// over relations at gold arcs for biaffine variants.
StepLossNodes build_step_loss(Tape& t, const Model& model, const AttentionOut& attn,
                              const NodeDecodeOut& nd, const BiaffineOut* bf,
                              const OracleStep& step, const Candidates& cand,
                              const LossWeights& w = {});

/// Teacher-forced loss over every step of one example. Returns the scalar
/// total-loss node; fills the breakdown with per-component sums.
Tape::V sentence_loss(Tape& t, const Model& model, const TrainingExample& ex,
                      const Oracle& oracle, const LossWeights& w, LossBreakdown* breakdown);

class AdamOptimizer {
  public:
    AdamOptimizer(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    /// Clips gradients by global norm, then applies one Adam update.
    void step(ParamStore& params, double clip_norm);
    void set_lr(double lr) { lr_ = lr; }

  private:
    double lr_, b1_, b2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct TrainOptions {
    int epochs = 200;
    double lr = 1e-3;
    double lr_decay = 1.0;  // per-epoch multiplicative decay
    double beta1 = 0.9, beta2 = 0.999;
    double clip_norm = 1.0;
    LossWeights weights;
    uint64_t seed = 1;
    int eval_every = 10;        // epochs between Smatch evaluations; 0 = never
    double stop_smatch = -1.0;  // early stop threshold; < 0 disables
    double divergence_loss = 1e4;
    int smatch_restarts = 4;
    bool shuffle = true;
};

struct EpochMetrics {
    int epoch = 0;
    LossBreakdown loss;
    double smatch = -1.0;  // -1 when not evaluated this epoch

    nlohmann::json to_json() const;
};

struct TrainResult {
    std::vector<EpochMetrics> log;
    bool diverged = false;
    std::string divergence_report;
    int epochs_run = 0;
    double best_smatch = -1.0;
};

/// Scheduled per-step teacher forcing: each gold prefix is one training
/// instance; one Adam update per sentence. Deterministic under a fixed seed.
/// `eval_set` defaults to the training corpus when null.
TrainResult train(Model& model, const std::vector<TrainingExample>& corpus,
                  const TrainOptions& opts,
                  const std::vector<TrainingExample>* eval_set = nullptr,
                  const std::string& metrics_path = "");

/// Smatch of greedy decoding against gold over a corpus slice.
double evaluate_smatch(const Model& model, const std::vector<TrainingExample>& examples,
                       int restarts = 4);

}  // namespace amr
