#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <random>
#include <unordered_map>
#include <vector>

namespace amr {

struct TensorError : std::runtime_error {
    explicit TensorError(const std::string& m) : std::runtime_error(m) {}
};

/// Named trainable tensor living outside any tape. All tensors are 2-D
/// (scalars are 1x1, row vectors 1xN).
struct Parameter {
    std::string name;
    int rows = 0, cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    bool trainable = true;

    size_t size() const { return value.size(); }
};

class ParamStore {
  public:
    Parameter& create(const std::string& name, int rows, int cols);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;
    void zero_grads();
    long total_count(const std::string& prefix = "") const;

    std::vector<std::unique_ptr<Parameter>>& all() { return params_; }
    const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }

  private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, int> byname_;
};

/// Reverse-mode tape. Forward values are computed eagerly as nodes are
/// created; backward() accumulates gradients into Parameter::grad for every
/// param leaf. One tape per training step; not thread-safe.
class Tape {
  public:
    struct V {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    V input(int rows, int cols, std::vector<double> vals);
    V zeros(int rows, int cols);
    V param(Parameter& p);

    V add(V a, V b);
    V sub(V a, V b);
    V mul(V a, V b);                 // elementwise
    V add_rowvec(V x, V b);          // b is 1 x cols, broadcast over rows
    V scale(V x, double c);
    V matmul(V a, V b);
    V matmul_nt(V a, V b);           // a · b^T
    V transpose(V x);
    V concat_rows(const std::vector<V>& xs);
    V concat_cols(const std::vector<V>& xs);
    V slice_rows(V x, int r0, int r1);  // half-open [r0, r1)
    V slice_cols(V x, int c0, int c1);
    V softmax_rows(V x);
    V sigmoid(V x);
    V relu(V x);
    V log(V x);
    V clamp(V x, double lo, double hi);
    V max_over_rows(V x);            // column-wise maxima -> 1 x cols
    V sum_all(V x);                  // -> 1 x 1
    V mul_by_scalar(V x, V s);       // s is 1 x 1
    V div_by_scalar(V x, V s);
    V layernorm_rows(V x, V gain, V bias);
    V embedding_rows(V table, const std::vector<int>& ids);
    V conv1d_rows(V x, V w, V b, int k);  // valid convolution over rows

    int rows(V v) const;
    int cols(V v) const;
    const std::vector<double>& values(V v) const;
    double scalar(V v) const;

    void backward(V loss);
    size_t size() const { return nodes_.size(); }

  private:
    enum class Op {
        Input, Param, Add, Mul, AddRowvec, Scale, Matmul, MatmulNT, Transpose,
        ConcatRows, ConcatCols, SliceRows, SliceCols, SoftmaxRows, Sigmoid, Relu,
        Log, Clamp, MaxOverRows, SumAll, MulScalar, DivScalar, LayernormRows,
        EmbeddingRows, Conv1dRows
    };
    struct Node {
        Op op;
        int a = -1, b = -1, c = -1;
        int rows = 0, cols = 0;
        std::vector<double> val;
        std::vector<double> grad;
        std::vector<int> srcs;   // concat inputs / embedding ids / argmax rows
        int i0 = 0, i1 = 0;
        double c0 = 0, c1 = 0;
        Parameter* par = nullptr;
    };

    Node& node(V v) { return nodes_[v.id]; }
    const Node& node(V v) const { return nodes_[v.id]; }
    V push(Node n);
    void check(bool cond, const std::string& msg) const;
    std::string shape_str(V v) const;

    std::vector<Node> nodes_;
};

/// Per-component parameter initialization helpers (deterministic).
void init_xavier(Parameter& p, std::mt19937_64& rng);
void init_normal(Parameter& p, std::mt19937_64& rng, double stddev);
void init_zeros(Parameter& p);
void init_ones(Parameter& p);

struct GradCheckOptions {
    double eps = 1e-5;
    int max_coords_per_param = 6;
    uint64_t seed = 12345;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    long checked = 0;
    bool nonfinite_loss = false;
};

/// Central-difference check of tape gradients. `build_loss` must construct
/// the loss from the current parameter values on the given tape and be
/// deterministic. Relative error per coordinate:
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
GradCheckResult grad_check(ParamStore& params,
                           const std::function<Tape::V(Tape&)>& build_loss,
                           const GradCheckOptions& opts = {});

/// Checkpoint file: magic + version byte + dtype byte, then ordered
/// (name, shape, little-endian values) records. dtype 1 = float64,
/// dtype 2 = float32 (inference; values are quantized on save).
void save_checkpoint(const ParamStore& params, const std::string& path, bool as_float32 = false);
void load_checkpoint(ParamStore& params, const std::string& path);

}  // namespace amr
