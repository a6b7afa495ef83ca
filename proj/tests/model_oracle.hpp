#pragma once

// Plain-loop reimplementation of the graph-transformer attention and the
// pointer-generator node scores, independent of the tape engine. Used as the
// equation oracle in model tests.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "amr/model.hpp"

namespace amr::testing {

using Mat = std::vector<std::vector<double>>;

inline Mat mat_of(const Tape& t, Tape::V v) {
    Mat m(t.rows(v), std::vector<double>(t.cols(v)));
    const auto& vals = t.values(v);
    for (int r = 0; r < t.rows(v); ++r)
        for (int c = 0; c < t.cols(v); ++c) m[r][c] = vals[r * t.cols(v) + c];
    return m;
}

inline Mat param_mat(const Model& model, const std::string& name) {
    const Parameter* p = model.params().find(name);
    Mat m(p->rows, std::vector<double>(p->cols));
    for (int r = 0; r < p->rows; ++r)
        for (int c = 0; c < p->cols; ++c) m[r][c] = p->value[r * p->cols + c];
    return m;
}

inline std::vector<double> vec_mat(const std::vector<double>& v, const Mat& w) {
    std::vector<double> out(w[0].size(), 0.0);
    for (size_t k = 0; k < v.size(); ++k)
        for (size_t c = 0; c < out.size(); ++c) out[c] += v[k] * w[k][c];
    return out;
}

inline std::vector<double> softmax_vec(std::vector<double> x) {
    double m = x[0];
    for (double v : x) m = std::max(m, v);
    double z = 0;
    for (auto& v : x) {
        v = std::exp(v - m);
        z += v;
    }
    for (auto& v : x) v /= z;
    return x;
}

struct BruteAttention {
    std::vector<std::vector<double>> alphas;  // h rows of length k
    std::vector<double> beta_plus;            // d
    std::vector<double> alpha_token;          // n
    std::vector<double> alpha_arc;            // m+1
};

/// Single-layer evaluation of the attention equations from explicit E^t and
/// E^v matrices: alpha^i = softmax(q W^Q_i (K W^K_i)^T / sqrt(d)),
/// beta^i = alpha^i K W^V_i, beta^+ = [beta^1 .. beta^h] W^+,
/// alpha_arc_j = max_i alpha^i_{n+j}.
inline BruteAttention brute_attention(const Model& model, const Mat& Et, const Mat& Ev) {
    const int d = model.config().d;
    const int h = model.config().heads;
    const int n = static_cast<int>(Et.size()) - 1;
    const int m = static_cast<int>(Ev.size()) - 1;
    const int k = n + m + 1;

    std::vector<double> q = Et[0];
    Mat K;
    for (int i = 1; i <= n; ++i) K.push_back(Et[i]);
    for (int i = 0; i <= m; ++i) K.push_back(Ev[i]);

    BruteAttention out;
    std::vector<double> beta_cat;
    for (int i = 0; i < h; ++i) {
        std::string hp = "gt.l0.h" + std::to_string(i);
        Mat Wq = param_mat(model, hp + ".wq");
        Mat Wk = param_mat(model, hp + ".wk");
        Mat Wv = param_mat(model, hp + ".wv");
        std::vector<double> qh = vec_mat(q, Wq);
        std::vector<double> scores(k, 0.0);
        for (int j = 0; j < k; ++j) {
            std::vector<double> kh = vec_mat(K[j], Wk);
            double s = 0;
            for (int c = 0; c < d; ++c) s += qh[c] * kh[c];
            scores[j] = s / std::sqrt(static_cast<double>(d));
        }
        std::vector<double> alpha = softmax_vec(scores);
        out.alphas.push_back(alpha);
        std::vector<double> av(d, 0.0);
        for (int j = 0; j < k; ++j)
            for (int c = 0; c < d; ++c) av[c] += alpha[j] * K[j][c];
        std::vector<double> beta = vec_mat(av, Wv);
        beta_cat.insert(beta_cat.end(), beta.begin(), beta.end());
    }
    out.beta_plus = vec_mat(beta_cat, param_mat(model, "gt.l0.wplus"));
    out.alpha_token.assign(out.alphas[0].begin(), out.alphas[0].begin() + n);
    out.alpha_arc.assign(m + 1, 0.0);
    for (int j = 0; j <= m; ++j) {
        double best = out.alphas[0][n + j];
        for (int i = 1; i < h; ++i) best = std::max(best, out.alphas[i][n + j]);
        out.alpha_arc[j] = best;
    }
    return out;
}

/// p(x_i) per the gate-mixed pointer-generator equations, from an explicit
/// beta^+ and token attention. Copy attention renormalized over tokens.
inline std::vector<double> brute_node_scores(const Model& model,
                                             const std::vector<double>& beta_plus,
                                             const std::vector<double>& alpha_token,
                                             const Candidates& cand) {
    auto dot_col = [&](const std::string& pname) {
        Mat w = param_mat(model, pname);
        double s = 0;
        for (size_t i = 0; i < beta_plus.size(); ++i) s += beta_plus[i] * w[i][0];
        return s;
    };
    bool has_lemmas = !cand.lemma_strings.empty();
    std::vector<double> gl{dot_col("node_dec.gate_c"), dot_col("node_dec.gate_w")};
    if (has_lemmas) gl.push_back(dot_col("node_dec.gate_l"));
    std::vector<double> gates = softmax_vec(gl);

    std::vector<double> gen = softmax_vec(vec_mat(beta_plus, param_mat(model, "node_dec.wg")));

    double z = 0;
    for (double a : alpha_token) z += a;
    std::vector<double> ahat;
    for (double a : alpha_token) ahat.push_back(a / z);

    std::vector<double> o;
    for (double g : gen) o.push_back(gates[0] * g);
    for (const auto& positions : cand.token_positions) {
        double s = 0;
        for (int j : positions) s += ahat[j];
        o.push_back(gates[1] * s);
    }
    if (has_lemmas)
        for (const auto& positions : cand.lemma_positions) {
            double s = 0;
            for (int j : positions) s += ahat[j];
            o.push_back(gates[2] * s);
        }
    return o;
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double denom = std::max({1e-30, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace amr::testing
