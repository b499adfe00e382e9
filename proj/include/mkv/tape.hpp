#pragma once

#include <deque>
#include <vector>

#include "mkv/common.hpp"

namespace mkv::ad {

// Reverse-mode automatic differentiation over batched dense values.
//
// Every node carries a matrix whose rows are the samples of a batch, so one
// recorded operation covers the whole batch (an affine map, an elementwise
// tanh, a reduction, ...). The tape is append-only: parents always precede
// children, and the reverse sweep is a single pass from the loss node down
// to index 0. Nodes are evaluated through the same eval_node() used by
// replay(), so replaying the tape reproduces the recorded values bit for bit.

enum class Op : std::uint8_t {
    Const,         // data leaf, no gradient stored
    Param,         // trainable leaf
    Affine,        // x (B×n), W (m×n), bias (1×m)  ->  x W^T + bias
    Tanh,
    Add,
    Sub,
    Mul,           // elementwise
    Div,           // elementwise
    Square,
    Log,
    Atan,
    ScalarAffine,  // s0 * x + s1
    BcastRows,     // 1×n -> B×n
    BcastCols,     // B×1 -> B×n
    BcastScalar,   // 1×1 -> r×c
    ColMean,       // B×n -> 1×n   (mean over the batch)
    RowSum,        // B×n -> B×1
    RowMean,       // B×n -> B×1
    SumAll,        // B×n -> 1×1
    SqNormRows,    // B×n -> B×1   (squared Euclidean norm per sample)
    CMul,          // elementwise multiply by a constant matrix
    ContractKD,    // z (B×(k·d)) with constant D (B×d) -> B×k, per-sample z·D
    ConcatCols,
    SliceCols,
};

class Tape;

/// Lightweight handle to a tape node; free functions and operators below
/// build expressions from these.
struct Expr {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Mat& val() const;
    const Mat& grad() const;
    int rows() const;
    int cols() const;
};

class Tape {
public:
    struct Node {
        Op op = Op::Const;
        int a = -1, b = -1, c = -1;  // parent indices
        Real s0 = 0, s1 = 0;         // scalar payload
        int i0 = 0, i1 = 0;          // integer payload (slice bounds, contract k)
        Mat val;
        Mat grad;  // empty until the reverse sweep reaches this node
        Mat aux;   // constant payload for CMul / ContractKD
    };

    Expr constant(Mat value);
    Expr param(const Mat& value);

    /// Reverse sweep seeding d(loss)/d(loss) = 1. loss must be 1×1.
    /// One sweep per epoch; clear() resets. With release_memory, values and
    /// gradients of interior nodes are freed as soon as the sweep has passed
    /// them (leaf gradients stay readable); long rollouts then peak at the
    /// forward-pass footprint.
    void backward(Expr loss, bool release_memory = false);

    /// Recompute every non-leaf value in recording order from its parents.
    /// Shares eval_node() with the forward construction, so recorded and
    /// replayed values are identical.
    void replay();

    void clear();

    const Mat& val(int id) const { return nodes_[id].val; }
    const Mat& grad(int id) const { return nodes_[id].grad; }
    /// Gradient of a node, zero-filled if the sweep never reached it.
    Mat grad_or_zero(int id) const;

    std::size_t size() const { return nodes_.size(); }
    long epoch() const { return epoch_; }

    // -- node construction (shape-checked) --
    Expr affine(Expr x, Expr W, Expr bias);
    Expr unary(Op op, Expr x);
    Expr binary(Op op, Expr a, Expr b);
    Expr scalar_affine(Expr x, Real scale, Real shift);
    Expr bcast_rows(Expr row, int nrows);
    Expr bcast_cols(Expr col, int ncols);
    Expr bcast_scalar(Expr s, int nrows, int ncols);
    Expr reduce(Op op, Expr x);
    Expr cmul(Expr x, Mat constant);
    Expr contract_kd(Expr z, Mat d_const, int k);
    Expr concat_cols(Expr a, Expr b);
    Expr slice_cols(Expr x, int first, int count);

private:
    Expr push(Node n);
    void eval_node(Node& n) const;
    void backprop_node(Node& n);
    Mat& grad_ref(int id);

    // deque: values and gradients keep stable addresses while the tape
    // grows, so callers may hold val() references across node creation
    std::deque<Node> nodes_;
    long epoch_ = 0;
    bool swept_ = false;
};

// Elementwise operators (shapes must match exactly; broadcast explicitly).
Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator*(Real c, Expr x);
Expr operator*(Expr x, Real c);
Expr operator+(Expr x, Real c);
Expr operator+(Real c, Expr x);
Expr operator-(Expr x, Real c);
Expr operator-(Real c, Expr x);
Expr operator-(Expr x);

Expr tanh(Expr x);
Expr square(Expr x);
Expr log(Expr x);
Expr atan(Expr x);

Expr batch_mean(Expr x);        // B×n -> 1×n
Expr row_sum(Expr x);           // B×n -> B×1
Expr row_mean(Expr x);          // B×n -> B×1
Expr sum_all(Expr x);           // -> 1×1
Expr squared_norm_rows(Expr x); // B×n -> B×1

}  // namespace mkv::ad
