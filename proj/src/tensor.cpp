#include "amr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace amr {

Parameter& ParamStore::create(const std::string& name, int rows, int cols) {
    if (byname_.count(name)) throw TensorError("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->rows = rows;
    p->cols = cols;
    p->value.assign(static_cast<size_t>(rows) * cols, 0.0);
    p->grad.assign(static_cast<size_t>(rows) * cols, 0.0);
    byname_[name] = static_cast<int>(params_.size());
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
    auto it = byname_.find(name);
    return it == byname_.end() ? nullptr : params_[it->second].get();
}

const Parameter* ParamStore::find(const std::string& name) const {
    auto it = byname_.find(name);
    return it == byname_.end() ? nullptr : params_[it->second].get();
}

void ParamStore::zero_grads() {
    for (auto& p : params_) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

long ParamStore::total_count(const std::string& prefix) const {
    long n = 0;
    for (const auto& p : params_)
        if (prefix.empty() || p->name.rfind(prefix, 0) == 0) n += static_cast<long>(p->size());
    return n;
}

void Tape::check(bool cond, const std::string& msg) const {
    if (!cond) throw TensorError(msg);
}

std::string Tape::shape_str(V v) const {
    return "(" + std::to_string(node(v).rows) + "x" + std::to_string(node(v).cols) + ")";
}

Tape::V Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return V{static_cast<int>(nodes_.size()) - 1};
}

Tape::V Tape::input(int rows, int cols, std::vector<double> vals) {
    check(static_cast<size_t>(rows) * cols == vals.size(), "input size mismatch");
    Node n;
    n.op = Op::Input;
    n.rows = rows;
    n.cols = cols;
    n.val = std::move(vals);
    return push(std::move(n));
}

Tape::V Tape::zeros(int rows, int cols) {
    return input(rows, cols, std::vector<double>(static_cast<size_t>(rows) * cols, 0.0));
}

Tape::V Tape::param(Parameter& p) {
    Node n;
    n.op = Op::Param;
    n.rows = p.rows;
    n.cols = p.cols;
    n.val = p.value;
    n.par = &p;
    return push(std::move(n));
}

Tape::V Tape::add(V a, V b) {
    check(node(a).rows == node(b).rows && node(a).cols == node(b).cols,
          "add shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.rows = node(a).rows;
    n.cols = node(a).cols;
    n.val.resize(node(a).val.size());
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = node(a).val[i] + node(b).val[i];
    return push(std::move(n));
}

Tape::V Tape::sub(V a, V b) { return add(a, scale(b, -1.0)); }

Tape::V Tape::mul(V a, V b) {
    check(node(a).rows == node(b).rows && node(a).cols == node(b).cols,
          "mul shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.rows = node(a).rows;
    n.cols = node(a).cols;
    n.val.resize(node(a).val.size());
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = node(a).val[i] * node(b).val[i];
    return push(std::move(n));
}

Tape::V Tape::add_rowvec(V x, V b) {
    check(node(b).rows == 1 && node(b).cols == node(x).cols,
          "add_rowvec shape mismatch " + shape_str(x) + " vs " + shape_str(b));
    Node n;
    n.op = Op::AddRowvec;
    n.a = x.id;
    n.b = b.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    for (int r = 0; r < n.rows; ++r)
        for (int c = 0; c < n.cols; ++c)
            n.val[r * n.cols + c] = node(x).val[r * n.cols + c] + node(b).val[c];
    return push(std::move(n));
}

Tape::V Tape::scale(V x, double c) {
    Node n;
    n.op = Op::Scale;
    n.a = x.id;
    n.c0 = c;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = node(x).val[i] * c;
    return push(std::move(n));
}

Tape::V Tape::matmul(V a, V b) {
    check(node(a).cols == node(b).rows,
          "matmul shape mismatch " + shape_str(a) + " · " + shape_str(b));
    int R = node(a).rows, K = node(a).cols, C = node(b).cols;
    Node n;
    n.op = Op::Matmul;
    n.a = a.id;
    n.b = b.id;
    n.rows = R;
    n.cols = C;
    n.val.assign(static_cast<size_t>(R) * C, 0.0);
    const auto& av = node(a).val;
    const auto& bv = node(b).val;
    for (int r = 0; r < R; ++r)
        for (int k = 0; k < K; ++k) {
            double arv = av[r * K + k];
            if (arv == 0.0) continue;
            const double* brow = &bv[k * C];
            double* orow = &n.val[r * C];
            for (int c = 0; c < C; ++c) orow[c] += arv * brow[c];
        }
    return push(std::move(n));
}

Tape::V Tape::matmul_nt(V a, V b) {
    check(node(a).cols == node(b).cols,
          "matmul_nt shape mismatch " + shape_str(a) + " · " + shape_str(b) + "^T");
    int R = node(a).rows, K = node(a).cols, C = node(b).rows;
    Node n;
    n.op = Op::MatmulNT;
    n.a = a.id;
    n.b = b.id;
    n.rows = R;
    n.cols = C;
    n.val.assign(static_cast<size_t>(R) * C, 0.0);
    const auto& av = node(a).val;
    const auto& bv = node(b).val;
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) {
            double s = 0;
            const double* arow = &av[r * K];
            const double* brow = &bv[c * K];
            for (int k = 0; k < K; ++k) s += arow[k] * brow[k];
            n.val[r * C + c] = s;
        }
    return push(std::move(n));
}

Tape::V Tape::transpose(V x) {
    Node n;
    n.op = Op::Transpose;
    n.a = x.id;
    n.rows = node(x).cols;
    n.cols = node(x).rows;
    n.val.resize(node(x).val.size());
    for (int r = 0; r < node(x).rows; ++r)
        for (int c = 0; c < node(x).cols; ++c)
            n.val[c * n.cols + r] = node(x).val[r * node(x).cols + c];
    return push(std::move(n));
}

Tape::V Tape::concat_rows(const std::vector<V>& xs) {
    check(!xs.empty(), "concat_rows of nothing");
    int C = node(xs[0]).cols, R = 0;
    for (V x : xs) {
        check(node(x).cols == C, "concat_rows col mismatch " + shape_str(xs[0]) + " vs " + shape_str(x));
        R += node(x).rows;
    }
    Node n;
    n.op = Op::ConcatRows;
    n.rows = R;
    n.cols = C;
    for (V x : xs) {
        n.srcs.push_back(x.id);
        n.val.insert(n.val.end(), node(x).val.begin(), node(x).val.end());
    }
    return push(std::move(n));
}

Tape::V Tape::concat_cols(const std::vector<V>& xs) {
    check(!xs.empty(), "concat_cols of nothing");
    int R = node(xs[0]).rows, C = 0;
    for (V x : xs) {
        check(node(x).rows == R, "concat_cols row mismatch " + shape_str(xs[0]) + " vs " + shape_str(x));
        C += node(x).cols;
    }
    Node n;
    n.op = Op::ConcatCols;
    n.rows = R;
    n.cols = C;
    n.val.assign(static_cast<size_t>(R) * C, 0.0);
    int off = 0;
    for (V x : xs) {
        n.srcs.push_back(x.id);
        int xc = node(x).cols;
        for (int r = 0; r < R; ++r)
            std::copy_n(&node(x).val[r * xc], xc, &n.val[r * C + off]);
        off += xc;
    }
    return push(std::move(n));
}

Tape::V Tape::slice_rows(V x, int r0, int r1) {
    check(0 <= r0 && r0 < r1 && r1 <= node(x).rows, "slice_rows range out of bounds for " + shape_str(x));
    Node n;
    n.op = Op::SliceRows;
    n.a = x.id;
    n.i0 = r0;
    n.i1 = r1;
    n.rows = r1 - r0;
    n.cols = node(x).cols;
    n.val.assign(node(x).val.begin() + static_cast<size_t>(r0) * n.cols,
                 node(x).val.begin() + static_cast<size_t>(r1) * n.cols);
    return push(std::move(n));
}

Tape::V Tape::slice_cols(V x, int c0, int c1) {
    check(0 <= c0 && c0 < c1 && c1 <= node(x).cols, "slice_cols range out of bounds for " + shape_str(x));
    Node n;
    n.op = Op::SliceCols;
    n.a = x.id;
    n.i0 = c0;
    n.i1 = c1;
    n.rows = node(x).rows;
    n.cols = c1 - c0;
    n.val.resize(static_cast<size_t>(n.rows) * n.cols);
    for (int r = 0; r < n.rows; ++r)
        std::copy_n(&node(x).val[r * node(x).cols + c0], n.cols, &n.val[r * n.cols]);
    return push(std::move(n));
}

Tape::V Tape::softmax_rows(V x) {
    Node n;
    n.op = Op::SoftmaxRows;
    n.a = x.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    for (int r = 0; r < n.rows; ++r) {
        const double* in = &node(x).val[r * n.cols];
        double* out = &n.val[r * n.cols];
        double m = *std::max_element(in, in + n.cols);
        double z = 0;
        for (int c = 0; c < n.cols; ++c) {
            out[c] = std::exp(in[c] - m);
            z += out[c];
        }
        for (int c = 0; c < n.cols; ++c) out[c] /= z;
    }
    return push(std::move(n));
}

Tape::V Tape::sigmoid(V x) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = x.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    for (size_t i = 0; i < n.val.size(); ++i) {
        double v = node(x).val[i];
        n.val[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return push(std::move(n));
}

Tape::V Tape::relu(V x) {
    Node n;
    n.op = Op::Relu;
    n.a = x.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::max(0.0, node(x).val[i]);
    return push(std::move(n));
}

Tape::V Tape::log(V x) {
    Node n;
    n.op = Op::Log;
    n.a = x.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::log(node(x).val[i]);
    return push(std::move(n));
}

Tape::V Tape::clamp(V x, double lo, double hi) {
    Node n;
    n.op = Op::Clamp;
    n.a = x.id;
    n.c0 = lo;
    n.c1 = hi;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = std::clamp(node(x).val[i], lo, hi);
    return push(std::move(n));
}

Tape::V Tape::max_over_rows(V x) {
    Node n;
    n.op = Op::MaxOverRows;
    n.a = x.id;
    n.rows = 1;
    n.cols = node(x).cols;
    n.val.assign(n.cols, 0.0);
    n.srcs.assign(n.cols, 0);  // argmax row per column
    for (int c = 0; c < n.cols; ++c) {
        double best = node(x).val[c];
        int arg = 0;
        for (int r = 1; r < node(x).rows; ++r) {
            double v = node(x).val[r * node(x).cols + c];
            if (v > best) {
                best = v;
                arg = r;
            }
        }
        n.val[c] = best;
        n.srcs[c] = arg;
    }
    return push(std::move(n));
}

Tape::V Tape::sum_all(V x) {
    Node n;
    n.op = Op::SumAll;
    n.a = x.id;
    n.rows = 1;
    n.cols = 1;
    double s = 0;
    for (double v : node(x).val) s += v;
    n.val = {s};
    return push(std::move(n));
}

Tape::V Tape::mul_by_scalar(V x, V s) {
    check(node(s).rows == 1 && node(s).cols == 1, "mul_by_scalar needs a 1x1 scalar, got " + shape_str(s));
    Node n;
    n.op = Op::MulScalar;
    n.a = x.id;
    n.b = s.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    double sv = node(s).val[0];
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = node(x).val[i] * sv;
    return push(std::move(n));
}

Tape::V Tape::div_by_scalar(V x, V s) {
    check(node(s).rows == 1 && node(s).cols == 1, "div_by_scalar needs a 1x1 scalar, got " + shape_str(s));
    Node n;
    n.op = Op::DivScalar;
    n.a = x.id;
    n.b = s.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    double sv = node(s).val[0];
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = node(x).val[i] / sv;
    return push(std::move(n));
}

Tape::V Tape::layernorm_rows(V x, V gain, V bias) {
    check(node(gain).rows == 1 && node(gain).cols == node(x).cols, "layernorm gain shape mismatch");
    check(node(bias).rows == 1 && node(bias).cols == node(x).cols, "layernorm bias shape mismatch");
    Node n;
    n.op = Op::LayernormRows;
    n.a = x.id;
    n.b = gain.id;
    n.c = bias.id;
    n.rows = node(x).rows;
    n.cols = node(x).cols;
    n.val.resize(node(x).val.size());
    const double eps = 1e-5;
    for (int r = 0; r < n.rows; ++r) {
        const double* in = &node(x).val[r * n.cols];
        double mu = 0;
        for (int c = 0; c < n.cols; ++c) mu += in[c];
        mu /= n.cols;
        double var = 0;
        for (int c = 0; c < n.cols; ++c) var += (in[c] - mu) * (in[c] - mu);
        var /= n.cols;
        double inv = 1.0 / std::sqrt(var + eps);
        for (int c = 0; c < n.cols; ++c)
            n.val[r * n.cols + c] =
                (in[c] - mu) * inv * node(gain).val[c] + node(bias).val[c];
    }
    return push(std::move(n));
}

Tape::V Tape::embedding_rows(V table, const std::vector<int>& ids) {
    check(!ids.empty(), "embedding_rows with no ids");
    for (int id : ids)
        check(0 <= id && id < node(table).rows,
              "embedding id " + std::to_string(id) + " out of range for " + shape_str(table));
    Node n;
    n.op = Op::EmbeddingRows;
    n.a = table.id;
    n.rows = static_cast<int>(ids.size());
    n.cols = node(table).cols;
    n.srcs = ids;
    n.val.resize(static_cast<size_t>(n.rows) * n.cols);
    for (size_t i = 0; i < ids.size(); ++i)
        std::copy_n(&node(table).val[static_cast<size_t>(ids[i]) * n.cols], n.cols,
                    &n.val[i * n.cols]);
    return push(std::move(n));
}

Tape::V Tape::conv1d_rows(V x, V w, V b, int k) {
    int T = node(x).rows, ci = node(x).cols, co = node(w).cols;
    check(k >= 1 && T >= k, "conv1d needs at least " + std::to_string(k) + " rows, got " + shape_str(x));
    check(node(w).rows == k * ci, "conv1d filter shape mismatch: " + shape_str(w) +
                                      " expected rows " + std::to_string(k * ci));
    check(node(b).rows == 1 && node(b).cols == co, "conv1d bias shape mismatch");
    Node n;
    n.op = Op::Conv1dRows;
    n.a = x.id;
    n.b = w.id;
    n.c = b.id;
    n.i0 = k;
    n.rows = T - k + 1;
    n.cols = co;
    n.val.assign(static_cast<size_t>(n.rows) * co, 0.0);
    for (int t = 0; t < n.rows; ++t) {
        for (int kk = 0; kk < k; ++kk) {
            const double* xr = &node(x).val[(t + kk) * ci];
            for (int i = 0; i < ci; ++i) {
                double xv = xr[i];
                if (xv == 0.0) continue;
                const double* wr = &node(w).val[(kk * ci + i) * co];
                double* orow = &n.val[t * co];
                for (int c = 0; c < co; ++c) orow[c] += xv * wr[c];
            }
        }
        for (int c = 0; c < co; ++c) n.val[t * co + c] += node(b).val[c];
    }
    return push(std::move(n));
}

int Tape::rows(V v) const { return node(v).rows; }
int Tape::cols(V v) const { return node(v).cols; }
const std::vector<double>& Tape::values(V v) const { return node(v).val; }

double Tape::scalar(V v) const {
    check(node(v).rows == 1 && node(v).cols == 1, "scalar() on non-1x1 node " + shape_str(v));
    return node(v).val[0];
}

void Tape::backward(V loss) {
    check(node(loss).rows == 1 && node(loss).cols == 1, "backward needs a scalar loss");
    for (auto& n : nodes_) n.grad.assign(n.val.size(), 0.0);
    nodes_[loss.id].grad[0] = 1.0;

    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[id];
        bool any = false;
        for (double g : n.grad)
            if (g != 0.0) {
                any = true;
                break;
            }
        if (!any) continue;
        switch (n.op) {
            case Op::Input:
                break;
            case Op::Param:
                for (size_t i = 0; i < n.grad.size(); ++i) n.par->grad[i] += n.grad[i];
                break;
            case Op::Add: {
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    nodes_[n.a].grad[i] += n.grad[i];
                    nodes_[n.b].grad[i] += n.grad[i];
                }
                break;
            }
            case Op::Mul: {
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    nodes_[n.a].grad[i] += n.grad[i] * nodes_[n.b].val[i];
                    nodes_[n.b].grad[i] += n.grad[i] * nodes_[n.a].val[i];
                }
                break;
            }
            case Op::AddRowvec: {
                for (int r = 0; r < n.rows; ++r)
                    for (int c = 0; c < n.cols; ++c) {
                        nodes_[n.a].grad[r * n.cols + c] += n.grad[r * n.cols + c];
                        nodes_[n.b].grad[c] += n.grad[r * n.cols + c];
                    }
                break;
            }
            case Op::Scale: {
                for (size_t i = 0; i < n.grad.size(); ++i) nodes_[n.a].grad[i] += n.grad[i] * n.c0;
                break;
            }
            case Op::Matmul: {
                // C = A·B: dA += G·B^T, dB += A^T·G
                Node& A = nodes_[n.a];
                Node& B = nodes_[n.b];
                int R = A.rows, K = A.cols, C = B.cols;
                for (int r = 0; r < R; ++r)
                    for (int k = 0; k < K; ++k) {
                        double s = 0;
                        const double* grow = &n.grad[r * C];
                        const double* brow = &B.val[k * C];
                        for (int c = 0; c < C; ++c) s += grow[c] * brow[c];
                        A.grad[r * K + k] += s;
                    }
                for (int k = 0; k < K; ++k)
                    for (int c = 0; c < C; ++c) {
                        double s = 0;
                        for (int r = 0; r < R; ++r) s += A.val[r * K + k] * n.grad[r * C + c];
                        B.grad[k * C + c] += s;
                    }
                break;
            }
            case Op::MatmulNT: {
                // C = A·B^T: dA += G·B, dB += G^T·A
                Node& A = nodes_[n.a];
                Node& B = nodes_[n.b];
                int R = A.rows, K = A.cols, C = B.rows;
                for (int r = 0; r < R; ++r)
                    for (int k = 0; k < K; ++k) {
                        double s = 0;
                        for (int c = 0; c < C; ++c) s += n.grad[r * C + c] * B.val[c * K + k];
                        A.grad[r * K + k] += s;
                    }
                for (int c = 0; c < C; ++c)
                    for (int k = 0; k < K; ++k) {
                        double s = 0;
                        for (int r = 0; r < R; ++r) s += n.grad[r * C + c] * A.val[r * K + k];
                        B.grad[c * K + k] += s;
                    }
                break;
            }
            case Op::Transpose: {
                Node& A = nodes_[n.a];
                for (int r = 0; r < n.rows; ++r)
                    for (int c = 0; c < n.cols; ++c)
                        A.grad[c * A.cols + r] += n.grad[r * n.cols + c];
                break;
            }
            case Op::ConcatRows: {
                size_t off = 0;
                for (int src : n.srcs) {
                    Node& S = nodes_[src];
                    for (size_t i = 0; i < S.val.size(); ++i) S.grad[i] += n.grad[off + i];
                    off += S.val.size();
                }
                break;
            }
            case Op::ConcatCols: {
                int off = 0;
                for (int src : n.srcs) {
                    Node& S = nodes_[src];
                    for (int r = 0; r < S.rows; ++r)
                        for (int c = 0; c < S.cols; ++c)
                            S.grad[r * S.cols + c] += n.grad[r * n.cols + off + c];
                    off += S.cols;
                }
                break;
            }
            case Op::SliceRows: {
                Node& A = nodes_[n.a];
                for (int r = 0; r < n.rows; ++r)
                    for (int c = 0; c < n.cols; ++c)
                        A.grad[(n.i0 + r) * A.cols + c] += n.grad[r * n.cols + c];
                break;
            }
            case Op::SliceCols: {
                Node& A = nodes_[n.a];
                for (int r = 0; r < n.rows; ++r)
                    for (int c = 0; c < n.cols; ++c)
                        A.grad[r * A.cols + n.i0 + c] += n.grad[r * n.cols + c];
                break;
            }
            case Op::SoftmaxRows: {
                Node& A = nodes_[n.a];
                for (int r = 0; r < n.rows; ++r) {
                    const double* y = &n.val[r * n.cols];
                    const double* g = &n.grad[r * n.cols];
                    double dot = 0;
                    for (int c = 0; c < n.cols; ++c) dot += g[c] * y[c];
                    for (int c = 0; c < n.cols; ++c)
                        A.grad[r * n.cols + c] += y[c] * (g[c] - dot);
                }
                break;
            }
            case Op::Sigmoid: {
                Node& A = nodes_[n.a];
                for (size_t i = 0; i < n.grad.size(); ++i)
                    A.grad[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
                break;
            }
            case Op::Relu: {
                Node& A = nodes_[n.a];
                for (size_t i = 0; i < n.grad.size(); ++i)
                    if (A.val[i] > 0) A.grad[i] += n.grad[i];
                break;
            }
            case Op::Log: {
                Node& A = nodes_[n.a];
                for (size_t i = 0; i < n.grad.size(); ++i) A.grad[i] += n.grad[i] / A.val[i];
                break;
            }
            case Op::Clamp: {
                Node& A = nodes_[n.a];
                for (size_t i = 0; i < n.grad.size(); ++i)
                    if (A.val[i] > n.c0 && A.val[i] < n.c1) A.grad[i] += n.grad[i];
                break;
            }
            case Op::MaxOverRows: {
                Node& A = nodes_[n.a];
                for (int c = 0; c < n.cols; ++c) A.grad[n.srcs[c] * A.cols + c] += n.grad[c];
                break;
            }
            case Op::SumAll: {
                Node& A = nodes_[n.a];
                for (size_t i = 0; i < A.grad.size(); ++i) A.grad[i] += n.grad[0];
                break;
            }
            case Op::MulScalar: {
                Node& A = nodes_[n.a];
                Node& S = nodes_[n.b];
                double sv = S.val[0];
                double acc = 0;
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    A.grad[i] += n.grad[i] * sv;
                    acc += n.grad[i] * A.val[i];
                }
                S.grad[0] += acc;
                break;
            }
            case Op::DivScalar: {
                Node& A = nodes_[n.a];
                Node& S = nodes_[n.b];
                double sv = S.val[0];
                double acc = 0;
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    A.grad[i] += n.grad[i] / sv;
                    acc += n.grad[i] * n.val[i];
                }
                S.grad[0] -= acc / sv;
                break;
            }
            case Op::LayernormRows: {
                Node& A = nodes_[n.a];
                Node& G = nodes_[n.b];
                Node& B = nodes_[n.c];
                const double eps = 1e-5;
                for (int r = 0; r < n.rows; ++r) {
                    const double* in = &A.val[r * n.cols];
                    const double* g = &n.grad[r * n.cols];
                    double mu = 0;
                    for (int c = 0; c < n.cols; ++c) mu += in[c];
                    mu /= n.cols;
                    double var = 0;
                    for (int c = 0; c < n.cols; ++c) var += (in[c] - mu) * (in[c] - mu);
                    var /= n.cols;
                    double inv = 1.0 / std::sqrt(var + eps);
                    double mean_h = 0, mean_hx = 0;
                    std::vector<double> xhat(n.cols), h(n.cols);
                    for (int c = 0; c < n.cols; ++c) {
                        xhat[c] = (in[c] - mu) * inv;
                        h[c] = g[c] * G.val[c];
                        mean_h += h[c];
                        mean_hx += h[c] * xhat[c];
                        G.grad[c] += g[c] * xhat[c];
                        B.grad[c] += g[c];
                    }
                    mean_h /= n.cols;
                    mean_hx /= n.cols;
                    for (int c = 0; c < n.cols; ++c)
                        A.grad[r * n.cols + c] += inv * (h[c] - mean_h - xhat[c] * mean_hx);
                }
                break;
            }
            case Op::EmbeddingRows: {
                Node& T = nodes_[n.a];
                for (size_t i = 0; i < n.srcs.size(); ++i)
                    for (int c = 0; c < n.cols; ++c)
                        T.grad[static_cast<size_t>(n.srcs[i]) * n.cols + c] +=
                            n.grad[i * n.cols + c];
                break;
            }
            case Op::Conv1dRows: {
                Node& X = nodes_[n.a];
                Node& W = nodes_[n.b];
                Node& B = nodes_[n.c];
                int k = n.i0, ci = X.cols, co = n.cols;
                for (int t = 0; t < n.rows; ++t) {
                    const double* g = &n.grad[t * co];
                    for (int c = 0; c < co; ++c) B.grad[c] += g[c];
                    for (int kk = 0; kk < k; ++kk)
                        for (int i = 0; i < ci; ++i) {
                            double xv = X.val[(t + kk) * ci + i];
                            const double* wr = &W.val[(kk * ci + i) * co];
                            double* wg = &W.grad[(kk * ci + i) * co];
                            double s = 0;
                            for (int c = 0; c < co; ++c) {
                                wg[c] += g[c] * xv;
                                s += g[c] * wr[c];
                            }
                            X.grad[(t + kk) * ci + i] += s;
                        }
                }
                break;
            }
        }
    }
}

void init_xavier(Parameter& p, std::mt19937_64& rng) {
    double limit = std::sqrt(6.0 / (p.rows + p.cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : p.value) v = dist(rng);
}

void init_normal(Parameter& p, std::mt19937_64& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : p.value) v = dist(rng);
}

void init_zeros(Parameter& p) { std::fill(p.value.begin(), p.value.end(), 0.0); }
void init_ones(Parameter& p) { std::fill(p.value.begin(), p.value.end(), 1.0); }

GradCheckResult grad_check(ParamStore& params,
                           const std::function<Tape::V(Tape&)>& build_loss,
                           const GradCheckOptions& opts) {
    GradCheckResult res;
    params.zero_grads();
    {
        Tape t;
        Tape::V loss = build_loss(t);
        double lv = t.scalar(loss);
        if (!std::isfinite(lv)) {
            res.nonfinite_loss = true;
            return res;
        }
        t.backward(loss);
    }
    auto eval = [&]() {
        Tape t;
        return t.scalar(build_loss(t));
    };
    std::mt19937_64 rng(opts.seed);
    for (auto& p : params.all()) {
        if (!p->trainable) continue;
        std::vector<size_t> coords;
        if (static_cast<int>(p->size()) <= opts.max_coords_per_param) {
            for (size_t i = 0; i < p->size(); ++i) coords.push_back(i);
        } else {
            std::uniform_int_distribution<size_t> dist(0, p->size() - 1);
            while (coords.size() < static_cast<size_t>(opts.max_coords_per_param)) {
                size_t c = dist(rng);
                if (std::find(coords.begin(), coords.end(), c) == coords.end()) coords.push_back(c);
            }
        }
        for (size_t c : coords) {
            double keep = p->value[c];
            p->value[c] = keep + opts.eps;
            double up = eval();
            p->value[c] = keep - opts.eps;
            double dn = eval();
            p->value[c] = keep;
            if (!std::isfinite(up) || !std::isfinite(dn)) {
                res.nonfinite_loss = true;
                continue;
            }
            double numeric = (up - dn) / (2 * opts.eps);
            double analytic = p->grad[c];
            double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
            res.max_rel_error = std::max(res.max_rel_error, rel);
            res.checked++;
        }
    }
    return res;
}

namespace {

constexpr char kMagic[8] = {'A', 'M', 'R', 'T', 'C', 'K', 'P', 'T'};

template <typename T>
void write_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path, bool as_float32) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TensorError("cannot open checkpoint for write: " + path);
    out.write(kMagic, 8);
    write_le<uint8_t>(out, 1);  // version
    write_le<uint8_t>(out, as_float32 ? 2 : 1);
    write_le<uint32_t>(out, static_cast<uint32_t>(params.all().size()));
    for (const auto& p : params.all()) {
        write_le<uint16_t>(out, static_cast<uint16_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_le<uint32_t>(out, static_cast<uint32_t>(p->rows));
        write_le<uint32_t>(out, static_cast<uint32_t>(p->cols));
        if (as_float32)
            for (double v : p->value) write_le<float>(out, static_cast<float>(v));
        else
            for (double v : p->value) write_le<double>(out, v);
    }
    if (!out) throw TensorError("checkpoint write failed: " + path);
}

void load_checkpoint(ParamStore& params, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TensorError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw TensorError("bad checkpoint magic in " + path);
    uint8_t version = read_le<uint8_t>(in);
    if (version != 1) throw TensorError("unsupported checkpoint version " + std::to_string(version));
    uint8_t dtype = read_le<uint8_t>(in);
    if (dtype != 1 && dtype != 2) throw TensorError("unsupported checkpoint dtype");
    uint32_t count = read_le<uint32_t>(in);
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t len = read_le<uint16_t>(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        uint32_t rows = read_le<uint32_t>(in);
        uint32_t cols = read_le<uint32_t>(in);
        Parameter* p = params.find(name);
        if (!p) p = &params.create(name, static_cast<int>(rows), static_cast<int>(cols));
        if (p->rows != static_cast<int>(rows) || p->cols != static_cast<int>(cols))
            throw TensorError("checkpoint shape mismatch for " + name);
        for (auto& v : p->value)
            v = dtype == 1 ? read_le<double>(in) : static_cast<double>(read_le<float>(in));
        if (!in) throw TensorError("truncated checkpoint: " + path);
    }
}

}  // namespace amr
