#include "mkv/tape.hpp"

namespace mkv::ad {

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw UsageError(what);
}

}  // namespace

const Mat& Expr::val() const { return tape->val(id); }
const Mat& Expr::grad() const { return tape->grad(id); }
int Expr::rows() const { return static_cast<int>(val().rows()); }
int Expr::cols() const { return static_cast<int>(val().cols()); }

Expr Tape::push(Node n) {
    if (n.op != Op::Const && n.op != Op::Param) eval_node(n);
    nodes_.push_back(std::move(n));
    return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

Expr Tape::constant(Mat value) {
    Node n;
    n.op = Op::Const;
    n.val = std::move(value);
    return push(std::move(n));
}

Expr Tape::param(const Mat& value) {
    Node n;
    n.op = Op::Param;
    n.val = value;
    return push(std::move(n));
}

Expr Tape::affine(Expr x, Expr W, Expr bias) {
    require(x.cols() == W.cols(), "affine: input width != weight fan-in");
    require(bias.rows() == 1 && bias.cols() == W.rows(), "affine: bias shape mismatch");
    Node n;
    n.op = Op::Affine;
    n.a = x.id;
    n.b = W.id;
    n.c = bias.id;
    return push(std::move(n));
}

Expr Tape::unary(Op op, Expr x) {
    Node n;
    n.op = op;
    n.a = x.id;
    return push(std::move(n));
}

Expr Tape::binary(Op op, Expr a, Expr b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(),
            "elementwise op: shape mismatch (broadcast explicitly)");
    Node n;
    n.op = op;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

Expr Tape::scalar_affine(Expr x, Real scale, Real shift) {
    Node n;
    n.op = Op::ScalarAffine;
    n.a = x.id;
    n.s0 = scale;
    n.s1 = shift;
    return push(std::move(n));
}

Expr Tape::bcast_rows(Expr row, int nrows) {
    require(row.rows() == 1, "bcast_rows: expected a 1×n row");
    Node n;
    n.op = Op::BcastRows;
    n.a = row.id;
    n.i0 = nrows;
    return push(std::move(n));
}

Expr Tape::bcast_cols(Expr col, int ncols) {
    require(col.cols() == 1, "bcast_cols: expected a B×1 column");
    Node n;
    n.op = Op::BcastCols;
    n.a = col.id;
    n.i0 = ncols;
    return push(std::move(n));
}

Expr Tape::bcast_scalar(Expr s, int nrows, int ncols) {
    require(s.rows() == 1 && s.cols() == 1, "bcast_scalar: expected a 1×1 node");
    Node n;
    n.op = Op::BcastScalar;
    n.a = s.id;
    n.i0 = nrows;
    n.i1 = ncols;
    return push(std::move(n));
}

Expr Tape::reduce(Op op, Expr x) {
    Node n;
    n.op = op;
    n.a = x.id;
    return push(std::move(n));
}

Expr Tape::cmul(Expr x, Mat constant) {
    require(x.rows() == constant.rows() && x.cols() == constant.cols(),
            "cmul: constant shape mismatch");
    Node n;
    n.op = Op::CMul;
    n.a = x.id;
    n.aux = std::move(constant);
    return push(std::move(n));
}

Expr Tape::contract_kd(Expr z, Mat d_const, int k) {
    const int d = static_cast<int>(d_const.cols());
    require(z.rows() == d_const.rows(), "contract_kd: batch mismatch");
    require(z.cols() == k * d, "contract_kd: z width must be k·d");
    Node n;
    n.op = Op::ContractKD;
    n.a = z.id;
    n.i0 = k;
    n.i1 = d;
    n.aux = std::move(d_const);
    return push(std::move(n));
}

Expr Tape::concat_cols(Expr a, Expr b) {
    require(a.rows() == b.rows(), "concat_cols: row mismatch");
    Node n;
    n.op = Op::ConcatCols;
    n.a = a.id;
    n.b = b.id;
    return push(std::move(n));
}

Expr Tape::slice_cols(Expr x, int first, int count) {
    require(first >= 0 && count >= 1 && first + count <= x.cols(), "slice_cols: out of range");
    Node n;
    n.op = Op::SliceCols;
    n.a = x.id;
    n.i0 = first;
    n.i1 = count;
    return push(std::move(n));
}

void Tape::eval_node(Node& n) const {
    const auto v = [this](int id) -> const Mat& { return nodes_[id].val; };
    switch (n.op) {
        case Op::Const:
        case Op::Param:
            break;
        case Op::Affine:
            n.val.noalias() = v(n.a) * v(n.b).transpose();
            n.val.rowwise() += v(n.c).row(0);
            break;
        case Op::Tanh:
            n.val = v(n.a).array().tanh();
            break;
        case Op::Add:
            n.val = v(n.a) + v(n.b);
            break;
        case Op::Sub:
            n.val = v(n.a) - v(n.b);
            break;
        case Op::Mul:
            n.val = v(n.a).cwiseProduct(v(n.b));
            break;
        case Op::Div:
            n.val = v(n.a).cwiseQuotient(v(n.b));
            break;
        case Op::Square:
            n.val = v(n.a).array().square();
            break;
        case Op::Log:
            n.val = v(n.a).array().log();
            break;
        case Op::Atan:
            n.val = v(n.a).array().atan();
            break;
        case Op::ScalarAffine:
            n.val = (n.s0 * v(n.a)).array() + n.s1;
            break;
        case Op::BcastRows:
            n.val = v(n.a).replicate(n.i0, 1);
            break;
        case Op::BcastCols:
            n.val = v(n.a).replicate(1, n.i0);
            break;
        case Op::BcastScalar:
            n.val = Mat::Constant(n.i0, n.i1, v(n.a)(0, 0));
            break;
        case Op::ColMean:
            n.val = v(n.a).colwise().mean();
            break;
        case Op::RowSum:
            n.val = v(n.a).rowwise().sum();
            break;
        case Op::RowMean:
            n.val = v(n.a).rowwise().mean();
            break;
        case Op::SumAll:
            n.val = Mat::Constant(1, 1, v(n.a).sum());
            break;
        case Op::SqNormRows:
            n.val = v(n.a).array().square().rowwise().sum();
            break;
        case Op::CMul:
            n.val = v(n.a).cwiseProduct(n.aux);
            break;
        case Op::ContractKD: {
            const Mat& z = v(n.a);
            const int k = n.i0, d = n.i1;
            n.val.resize(z.rows(), k);
            for (int l = 0; l < k; ++l)
                n.val.col(l) = z.middleCols(l * d, d).cwiseProduct(n.aux).rowwise().sum();
            break;
        }
        case Op::ConcatCols: {
            const Mat& a = v(n.a);
            const Mat& b = v(n.b);
            n.val.resize(a.rows(), a.cols() + b.cols());
            n.val.leftCols(a.cols()) = a;
            n.val.rightCols(b.cols()) = b;
            break;
        }
        case Op::SliceCols:
            n.val = v(n.a).middleCols(n.i0, n.i1);
            break;
    }
}

Mat& Tape::grad_ref(int id) {
    Node& p = nodes_[id];
    if (p.grad.size() == 0) p.grad = Mat::Zero(p.val.rows(), p.val.cols());
    return p.grad;
}

void Tape::backward(Expr loss, bool release_memory) {
    require(loss.tape == this, "backward: expression from another tape");
    require(loss.val().rows() == 1 && loss.val().cols() == 1, "backward: loss must be scalar");
    require(!swept_, "backward: one reverse sweep per tape epoch");
    swept_ = true;

    nodes_[loss.id].grad = Mat::Ones(1, 1);
    for (int u = loss.id; u >= 0; --u) {
        Node& n = nodes_[u];
        if (n.grad.size() != 0) backprop_node(n);
        if (release_memory && n.op != Op::Const && n.op != Op::Param) {
            // every consumer of n sits above u and has been processed
            n.grad = Mat();
            n.val = Mat();
            n.aux = Mat();
        }
    }
}

void Tape::backprop_node(Node& n) {
    const Mat& g = n.grad;
    // Constants are gradient sinks.
    const auto touch = [this](int id) -> bool { return nodes_[id].op != Op::Const; };
    switch (n.op) {
            case Op::Const:
            case Op::Param:
                break;
            case Op::Affine: {
                const Mat& x = nodes_[n.a].val;
                const Mat& W = nodes_[n.b].val;
                if (touch(n.a)) grad_ref(n.a).noalias() += g * W;
                if (touch(n.b)) grad_ref(n.b).noalias() += g.transpose() * x;
                if (touch(n.c)) grad_ref(n.c).row(0) += g.colwise().sum();
                break;
            }
            case Op::Tanh:
                if (touch(n.a)) grad_ref(n.a).array() += g.array() * (1.0 - n.val.array().square());
                break;
            case Op::Add:
                if (touch(n.a)) grad_ref(n.a) += g;
                if (touch(n.b)) grad_ref(n.b) += g;
                break;
            case Op::Sub:
                if (touch(n.a)) grad_ref(n.a) += g;
                if (touch(n.b)) grad_ref(n.b) -= g;
                break;
            case Op::Mul:
                if (touch(n.a)) grad_ref(n.a).array() += g.array() * nodes_[n.b].val.array();
                if (touch(n.b)) grad_ref(n.b).array() += g.array() * nodes_[n.a].val.array();
                break;
            case Op::Div:
                if (touch(n.a)) grad_ref(n.a).array() += g.array() / nodes_[n.b].val.array();
                if (touch(n.b))
                    grad_ref(n.b).array() -= g.array() * n.val.array() / nodes_[n.b].val.array();
                break;
            case Op::Square:
                if (touch(n.a)) grad_ref(n.a).array() += 2.0 * g.array() * nodes_[n.a].val.array();
                break;
            case Op::Log:
                if (touch(n.a)) grad_ref(n.a).array() += g.array() / nodes_[n.a].val.array();
                break;
            case Op::Atan:
                if (touch(n.a))
                    grad_ref(n.a).array() += g.array() / (1.0 + nodes_[n.a].val.array().square());
                break;
            case Op::ScalarAffine:
                if (touch(n.a)) grad_ref(n.a) += n.s0 * g;
                break;
            case Op::BcastRows:
                if (touch(n.a)) grad_ref(n.a).row(0) += g.colwise().sum();
                break;
            case Op::BcastCols:
                if (touch(n.a)) grad_ref(n.a).col(0) += g.rowwise().sum();
                break;
            case Op::BcastScalar:
                if (touch(n.a)) grad_ref(n.a)(0, 0) += g.sum();
                break;
            case Op::ColMean:
                if (touch(n.a)) {
                    Mat& gx = grad_ref(n.a);
                    gx.array().rowwise() += g.row(0).array() / static_cast<Real>(gx.rows());
                }
                break;
            case Op::RowSum:
                if (touch(n.a)) grad_ref(n.a).array().colwise() += g.col(0).array();
                break;
            case Op::RowMean:
                if (touch(n.a)) {
                    Mat& gx = grad_ref(n.a);
                    gx.array().colwise() += g.col(0).array() / static_cast<Real>(gx.cols());
                }
                break;
            case Op::SumAll:
                if (touch(n.a)) grad_ref(n.a).array() += g(0, 0);
                break;
            case Op::SqNormRows:
                if (touch(n.a)) {
                    const Mat& x = nodes_[n.a].val;
                    grad_ref(n.a).array() += 2.0 * (x.array().colwise() * g.col(0).array());
                }
                break;
            case Op::CMul:
                if (touch(n.a)) grad_ref(n.a).array() += g.array() * n.aux.array();
                break;
            case Op::ContractKD:
                if (touch(n.a)) {
                    Mat& gz = grad_ref(n.a);
                    const int k = n.i0, d = n.i1;
                    for (int l = 0; l < k; ++l)
                        gz.middleCols(l * d, d).array() +=
                            n.aux.array().colwise() * g.col(l).array();
                }
                break;
            case Op::ConcatCols: {
                const int na = static_cast<int>(nodes_[n.a].val.cols());
                const int nb = static_cast<int>(nodes_[n.b].val.cols());
                if (touch(n.a)) grad_ref(n.a) += g.leftCols(na);
                if (touch(n.b)) grad_ref(n.b) += g.rightCols(nb);
                break;
            }
            case Op::SliceCols:
                if (touch(n.a)) grad_ref(n.a).middleCols(n.i0, n.i1) += g;
                break;
        }
}

void Tape::replay() {
    for (Node& n : nodes_)
        if (n.op != Op::Const && n.op != Op::Param) eval_node(n);
}

void Tape::clear() {
    nodes_.clear();
    swept_ = false;
    ++epoch_;
}

Mat Tape::grad_or_zero(int id) const {
    const Node& n = nodes_[id];
    if (n.grad.size() == 0) return Mat::Zero(n.val.rows(), n.val.cols());
    return n.grad;
}

// -- operator sugar -----------------------------------------------------

Expr operator+(Expr a, Expr b) { return a.tape->binary(Op::Add, a, b); }
Expr operator-(Expr a, Expr b) { return a.tape->binary(Op::Sub, a, b); }
Expr operator*(Expr a, Expr b) { return a.tape->binary(Op::Mul, a, b); }
Expr operator/(Expr a, Expr b) { return a.tape->binary(Op::Div, a, b); }
Expr operator*(Real c, Expr x) { return x.tape->scalar_affine(x, c, 0.0); }
Expr operator*(Expr x, Real c) { return x.tape->scalar_affine(x, c, 0.0); }
Expr operator+(Expr x, Real c) { return x.tape->scalar_affine(x, 1.0, c); }
Expr operator+(Real c, Expr x) { return x.tape->scalar_affine(x, 1.0, c); }
Expr operator-(Expr x, Real c) { return x.tape->scalar_affine(x, 1.0, -c); }
Expr operator-(Real c, Expr x) { return x.tape->scalar_affine(x, -1.0, c); }
Expr operator-(Expr x) { return x.tape->scalar_affine(x, -1.0, 0.0); }

Expr tanh(Expr x) { return x.tape->unary(Op::Tanh, x); }
Expr square(Expr x) { return x.tape->unary(Op::Square, x); }
Expr log(Expr x) { return x.tape->unary(Op::Log, x); }
Expr atan(Expr x) { return x.tape->unary(Op::Atan, x); }

Expr batch_mean(Expr x) { return x.tape->reduce(Op::ColMean, x); }
Expr row_sum(Expr x) { return x.tape->reduce(Op::RowSum, x); }
Expr row_mean(Expr x) { return x.tape->reduce(Op::RowMean, x); }
Expr sum_all(Expr x) { return x.tape->reduce(Op::SumAll, x); }
Expr squared_norm_rows(Expr x) { return x.tape->reduce(Op::SqNormRows, x); }

}  // namespace mkv::ad
