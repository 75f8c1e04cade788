#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rasa/graph.hpp"
#include "rasa/rng.hpp"

namespace rasa {

// Large finite stand-in for -inf in masked scores. Finite so that
// max-subtracted softmax never produces (-inf) - (-inf) = NaN; the masked
// outputs are overwritten to exact 0 after the softmax anyway.
inline constexpr double kMaskNeg = -1e30;

// Dense row-major array of 64-bit floats. Rank 0 (scalar), 1 or 2.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;

    Tensor() = default;

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double v);
    static Tensor scalar(double v);
    static Tensor from(std::vector<int> shape, std::vector<double> values);

    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
    int rows() const { return shape.empty() ? 1 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(int i, int j) { return values[static_cast<std::size_t>(i) * cols() + j]; }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * cols() + j]; }
    double item() const;  // requires size() == 1

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

// Named trainable tensor with an accumulating gradient of the same shape.
struct Parameter {
    std::string id;
    Tensor tensor;
    Tensor gradient;

    Parameter() = default;
    Parameter(std::string id, Tensor t)
        : id(std::move(id)), tensor(std::move(t)), gradient(Tensor::zeros(tensor.shape)) {}

    void zero_grad() { std::fill(gradient.values.begin(), gradient.values.end(), 0.0); }
};

// Glorot-uniform entries in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng);

class Tape;

// Handle to a node on a tape; only meaningful for the tape that created it.
class Value {
public:
    Value() = default;
    bool valid() const { return index_ >= 0; }

private:
    friend class Tape;
    explicit Value(int index) : index_(index) {}
    int index_ = -1;
};

// Reverse-mode Wengert list. Each call appends a node holding the forward
// result plus a closure that routes gradients to its inputs. backward() may
// run exactly once; parameter leaves accumulate into Parameter::gradient
// additively, so batch accumulation is a sequence of tapes.
class Tape {
public:
    Value constant(Tensor t);
    Value param(Parameter& p);

    Value matmul(Value a, Value b);     // (n,k) x (k,m)
    Value matmul_nt(Value a, Value b);  // a . b^T, (n,k) x (m,k)
    Value add(Value a, Value b);
    // m (n,d) plus row vector (d) broadcast over all rows
    Value add_broadcast(Value m, Value row);
    // adds vec (d) to a single row of m (n,d)
    Value add_row_at(Value m, int row, Value vec);
    Value elementwise_mul(Value a, Value b);
    Value scale(Value a, double c);
    Value relu(Value a);
    Value sigmoid(Value a);
    Value slice_cols(Value a, int start, int count);
    Value concat_cols(std::span<const Value> parts);
    // rows of table (R,d) selected by ids, duplicates allowed
    Value gather_rows(Value table, std::vector<int> ids);
    // row-wise standardize then multiply by gamma (d); no shift term
    Value layer_norm(Value x, Value gamma, double epsilon = 1e-5);
    // disallowed entries forced to kMaskNeg; gradient is zero there
    Value mask_fill(Value scores, const AttentionMask& mask);
    // row softmax with max-subtraction; disallowed outputs exactly 0; rows
    // sum to 1 over the allowed support
    Value masked_softmax_rows(Value scores, const AttentionMask& mask);
    // n x n bias matrix from a (|R|+1) table: relation r -> table[r], SELF ->
    // table[|R|], NONE -> 0
    Value gather_bias(Value bias_table, const EdgeTypeMap& types);
    // inverted dropout; scales kept entries by 1/(1-p)
    Value dropout(Value a, double p, Rng& rng);
    Value sum(Value a);
    // mean over all entries of softplus(z) - t*z against a multi-hot target
    Value binary_cross_entropy_with_logits(Value logits, std::vector<double> targets);

    // Seeds d(loss)/d(loss) = 1, replays the list in reverse, and deposits
    // gradients into every Parameter leaf. Throws TapeReplayed on reuse.
    void backward(Value loss);

    const Tensor& value(Value v) const { return node(v).value; }
    const Tensor& grad(Value v) const { return node(v).grad; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> back;  // empty for leaves without inputs
        Parameter* parameter = nullptr;
    };

    Node& node(Value v);
    const Node& node(Value v) const;
    Value push(Tensor value, std::function<void()> back = {}, Parameter* p = nullptr);
    Tensor& grad_ref(Value v) { return node(v).grad; }

    std::vector<Node> nodes_;
    bool replayed_ = false;
};

// Max over coordinates of |analytic - central difference| /
// max(1e-8, |analytic| + |numeric|). f must recompute the scalar loss from
// the parameter's current values and be deterministic. Throws NonFinite when
// f produces NaN/inf.
double finite_diff_check(const std::function<double()>& f, Parameter& p, const Tensor& analytic,
                         double epsilon = 1e-5);

}  // namespace rasa
