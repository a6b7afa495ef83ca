#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "amr/graph.hpp"

namespace amr {

/// Triple view of a graph for Smatch scoring: one instance triple per
/// variable, relation triples per edge, plus the root triple.
struct TripleSet {
    std::vector<std::string> instance_of;                  // var position -> concept name
    std::vector<std::tuple<int, std::string, int>> relations;  // (head var, label, dep var)
    int root_var = 0;

    long total() const { return static_cast<long>(instance_of.size() + relations.size()) + 1; }
};

TripleSet triples_of(const AmrGraph& g);

struct SmatchScore {
    double precision = 0, recall = 0, f1 = 0;
    long matched = 0, pred_total = 0, gold_total = 0;
};

SmatchScore score_from_counts(long matched, long pred_total, long gold_total);

/// Greedy hill-climbing over variable mappings with `restarts` random
/// restarts plus one smart initialization. Deterministic for a given pair.
SmatchScore smatch(const AmrGraph& pred, const AmrGraph& gold, int restarts = 4);

/// Relation labels replaced by a single dummy before scoring.
SmatchScore smatch_unlabeled(const AmrGraph& pred, const AmrGraph& gold, int restarts = 4);

/// Number of matched triples under a specific mapping (pred var -> gold var
/// or -1). Exposed for the exhaustive test oracle.
long matched_triples(const TripleSet& pred, const TripleSet& gold, const std::vector<int>& mapping);

/// Micro-averaged corpus score: triple counts summed over aligned pairs.
/// `jobs` > 1 scores pairs in a worker pool; the reduction is order-stable.
SmatchScore smatch_corpus(const std::vector<AmrGraph>& pred, const std::vector<AmrGraph>& gold,
                          int restarts = 4, int jobs = 1);

}  // namespace amr
