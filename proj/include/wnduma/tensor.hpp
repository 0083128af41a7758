#ifndef WNDUMA_TENSOR_HPP
#define WNDUMA_TENSOR_HPP

// Dense row-major tensors with tape-based reverse-mode differentiation.
//
// Every tensor is a 2-D Eigen matrix; vectors are 1 x n rows. Sequences use
// the sequence position as the leading (row) axis, so an encoding of l tokens
// in d_model features is an l x d_model matrix. This is the transpose of the
// feature-leading d_model x l notation common in the attention literature.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wnduma/errors.hpp"

namespace wnduma {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Element-wise boolean mask, same shape as the tensor it masks.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// One flag per sequence position.
using RowMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

template <typename Derived>
std::string shape_string(const Eigen::EigenBase<Derived>& m) {
    return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

/// A named learnable weight living outside any tape.
template <typename Scalar>
struct Parameter {
    std::string name;
    Matrix<Scalar> value;
    Matrix<Scalar> grad;
    /// Whether AdamW applies decoupled weight decay to this tensor.
    bool decay = true;

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename Scalar>
class Tape;

/// Handle to a node on a tape. Cheap to copy; valid until the tape is reset.
template <typename Scalar>
class Var {
public:
    Var() = default;

    const Matrix<Scalar>& value() const;
    const Matrix<Scalar>& grad() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    bool requires_grad() const;
    Tape<Scalar>* tape() const { return tape_; }
    std::size_t id() const { return id_; }

private:
    friend class Tape<Scalar>;
    Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape<Scalar>* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Ordered record of executed ops. Nodes are appended in execution order, so
/// walking the vector backwards is a reverse topological traversal.
template <typename Scalar>
class Tape {
public:
    using Mat = Matrix<Scalar>;
    using Backward = std::function<void(Tape&, const Mat&)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<Scalar> constant(Mat value) { return push(std::move(value), false, {}, nullptr); }

    Var<Scalar> variable(Mat value) { return push(std::move(value), true, {}, nullptr); }

    /// Leaf bound to a parameter. Repeated calls return the same node, and
    /// backward() adds the node's gradient into `p.grad`.
    Var<Scalar> param(Parameter<Scalar>& p) {
        if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var<Scalar>(this, it->second);
        Var<Scalar> v = push(p.value, true, {}, &p);
        param_nodes_.emplace(&p, v.id());
        return v;
    }

    /// Appends the result of an op. `fn` receives the output gradient and
    /// must route it to the inputs via accumulate().
    Var<Scalar> record(Mat value, std::initializer_list<Var<Scalar>> inputs, Backward fn) {
        bool needs = false;
        for (const auto& in : inputs) {
            check_owner(in);
            needs = needs || nodes_[in.id()].requires_grad;
        }
        return push(std::move(value), needs, needs ? std::move(fn) : Backward{}, nullptr);
    }

    Var<Scalar> record(Mat value, std::span<const Var<Scalar>> inputs, Backward fn) {
        bool needs = false;
        for (const auto& in : inputs) {
            check_owner(in);
            needs = needs || nodes_[in.id()].requires_grad;
        }
        return push(std::move(value), needs, needs ? std::move(fn) : Backward{}, nullptr);
    }

    template <typename Derived>
    void accumulate(const Var<Scalar>& v, const Eigen::MatrixBase<Derived>& g) {
        Node& n = nodes_[v.id()];
        if (!n.requires_grad) return;
        if (n.grad.size() == 0) {
            n.grad = g;
        } else {
            n.grad += g;
        }
    }

    void backward(const Var<Scalar>& loss) {
        check_owner(loss);
        if (backward_done_) throw TapeError("backward called twice on the same tape; reset() first");
        const Node& root = nodes_[loss.id()];
        if (root.value.rows() != 1 || root.value.cols() != 1)
            throw DimensionError("backward: loss must be scalar, got " + shape_string(root.value));
        backward_done_ = true;
        nodes_[loss.id()].grad = Mat::Ones(1, 1);
        for (std::size_t i = loss.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.requires_grad || n.grad.size() == 0) continue;
            if (n.backward) n.backward(*this, n.grad);
        }
        for (auto& n : nodes_) {
            if (n.param == nullptr || n.grad.size() == 0) continue;
            if (n.param->grad.rows() != n.grad.rows() || n.param->grad.cols() != n.grad.cols())
                n.param->zero_grad();
            n.param->grad += n.grad;
        }
    }

    void reset() {
        nodes_.clear();
        param_nodes_.clear();
        backward_done_ = false;
    }

    std::size_t size() const { return nodes_.size(); }

    const Mat& value(const Var<Scalar>& v) const { return nodes_.at(v.id()).value; }

    /// Gradient after backward(); a zero matrix for nodes the loss never reached.
    const Mat& grad(const Var<Scalar>& v) const {
        const Node& n = nodes_.at(v.id());
        if (n.grad.size() == 0) {
            n.grad.setZero(n.value.rows(), n.value.cols());
        }
        return n.grad;
    }

    bool requires_grad(const Var<Scalar>& v) const { return nodes_.at(v.id()).requires_grad; }

    void check_owner(const Var<Scalar>& v) const {
        if (v.tape() != this || v.id() >= nodes_.size()) throw TapeError("tensor does not belong to this tape");
    }

private:
    struct Node {
        Mat value;
        mutable Mat grad;
        bool requires_grad = false;
        Backward backward;
        Parameter<Scalar>* param = nullptr;
    };

    Var<Scalar> push(Mat value, bool requires_grad, Backward fn, Parameter<Scalar>* p) {
        if (backward_done_) throw TapeError("cannot record ops after backward; reset() first");
        nodes_.push_back(Node{std::move(value), Mat{}, requires_grad, std::move(fn), p});
        return Var<Scalar>(this, nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter<Scalar>*, std::size_t> param_nodes_;
    bool backward_done_ = false;
};

template <typename Scalar>
const Matrix<Scalar>& Var<Scalar>::value() const {
    return tape_->value(*this);
}

template <typename Scalar>
const Matrix<Scalar>& Var<Scalar>::grad() const {
    return tape_->grad(*this);
}

template <typename Scalar>
bool Var<Scalar>::requires_grad() const {
    return tape_->requires_grad(*this);
}

namespace detail {

template <typename Scalar>
Tape<Scalar>& common_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
    if (a.tape() == nullptr || a.tape() != b.tape()) throw TapeError("operands live on different tapes");
    return *a.tape();
}

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
    auto& tape = detail::common_tape(a, b);
    if (a.cols() != b.rows())
        throw DimensionError("matmul: " + shape_string(a.value()) + " x " + shape_string(b.value()));
    return tape.record(a.value() * b.value(), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
        if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
    });
}

/// a * b^T without materializing the transpose.
template <typename Scalar>
Var<Scalar> matmul_nt(const Var<Scalar>& a, const Var<Scalar>& b) {
    auto& tape = detail::common_tape(a, b);
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: " + shape_string(a.value()) + " x " + shape_string(b.value()) + "^T");
    return tape.record(a.value() * b.value().transpose(), {a, b},
                       [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                           if (a.requires_grad()) t.accumulate(a, g * b.value());
                           if (b.requires_grad()) t.accumulate(b, g.transpose() * a.value());
                       });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
    auto& tape = detail::common_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("add: " + shape_string(a.value()) + " vs " + shape_string(b.value()));
    return tape.record(a.value() + b.value(), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

/// Adds a 1 x n row to every row of `a`.
template <typename Scalar>
Var<Scalar> add_row(const Var<Scalar>& a, const Var<Scalar>& row) {
    auto& tape = detail::common_tape(a, row);
    if (row.rows() != 1 || row.cols() != a.cols())
        throw DimensionError("add_row: " + shape_string(a.value()) + " + " + shape_string(row.value()));
    Matrix<Scalar> out = a.value().rowwise() + row.value().row(0);
    return tape.record(std::move(out), {a, row}, [a, row](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        t.accumulate(a, g);
        if (row.requires_grad()) t.accumulate(row, g.colwise().sum());
    });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
    return a.tape()->record(a.value() * s, {a}, [a, s](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        t.accumulate(a, g * s);
    });
}

/// Sum of all entries as a 1 x 1 tensor.
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
    Matrix<Scalar> out(1, 1);
    out(0, 0) = a.value().sum();
    return a.tape()->record(std::move(out), {a}, [a](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        t.accumulate(a, Matrix<Scalar>::Constant(a.rows(), a.cols(), g(0, 0)));
    });
}

/// Element-wise product, used only by tests and gradient probes.
template <typename Scalar>
Var<Scalar> hadamard(const Var<Scalar>& a, const Var<Scalar>& b) {
    auto& tape = detail::common_tape(a, b);
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("hadamard: " + shape_string(a.value()) + " vs " + shape_string(b.value()));
    return tape.record(a.value().cwiseProduct(b.value()), {a, b},
                       [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                           if (a.requires_grad()) t.accumulate(a, g.cwiseProduct(b.value()));
                           if (b.requires_grad()) t.accumulate(b, g.cwiseProduct(a.value()));
                       });
}

// ---------------------------------------------------------------------------
// Shape manipulation

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& a, Index start, Index count) {
    if (start < 0 || count <= 0 || start + count > a.cols())
        throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
                             ") out of " + shape_string(a.value()));
    Matrix<Scalar> out = a.value().middleCols(start, count);
    return a.tape()->record(std::move(out), {a}, [a, start, count](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        Matrix<Scalar> full = Matrix<Scalar>::Zero(a.rows(), a.cols());
        full.middleCols(start, count) = g;
        t.accumulate(a, full);
    });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no operands");
    Tape<Scalar>* tape = parts.front().tape();
    const Index rows = parts.front().rows();
    Index cols = 0;
    for (const auto& p : parts) {
        if (p.tape() != tape) throw TapeError("operands live on different tapes");
        if (p.rows() != rows)
            throw DimensionError("concat_cols: " + shape_string(parts.front().value()) + " vs " +
                                 shape_string(p.value()));
        cols += p.cols();
    }
    Matrix<Scalar> out(rows, cols);
    Index at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    std::vector<Var<Scalar>> keep(parts.begin(), parts.end());
    return tape->record(std::move(out), parts, [keep](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        Index offset = 0;
        for (const auto& p : keep) {
            if (p.requires_grad()) t.accumulate(p, g.middleCols(offset, p.cols()));
            offset += p.cols();
        }
    });
}

/// Selects rows by index. Backward scatter-adds, so repeated indices are fine;
/// this doubles as the embedding lookup.
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& a, std::span<const Index> rows) {
    Matrix<Scalar> out(static_cast<Index>(rows.size()), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= a.rows())
            throw IndexError("gather_rows: row " + std::to_string(rows[i]) + " out of " + shape_string(a.value()));
        out.row(static_cast<Index>(i)) = a.value().row(rows[i]);
    }
    std::vector<Index> idx(rows.begin(), rows.end());
    return a.tape()->record(std::move(out), {a}, [a, idx](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        Matrix<Scalar> full = Matrix<Scalar>::Zero(a.rows(), a.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Index>(i));
        t.accumulate(a, full);
    });
}

// ---------------------------------------------------------------------------
// Nonlinearities and normalization

/// GELU, tanh approximation. Smooth everywhere, which keeps finite-difference
/// checks meaningful (unlike ReLU's kink).
template <typename Scalar>
Var<Scalar> gelu(const Var<Scalar>& a) {
    const Scalar c = std::sqrt(Scalar(2) / Scalar(EIGEN_PI));
    Matrix<Scalar> out = a.value().unaryExpr([c](Scalar x) {
        return Scalar(0.5) * x * (Scalar(1) + std::tanh(c * (x + Scalar(0.044715) * x * x * x)));
    });
    return a.tape()->record(std::move(out), {a}, [a, c](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        Matrix<Scalar> d = a.value().unaryExpr([c](Scalar x) {
            const Scalar u = c * (x + Scalar(0.044715) * x * x * x);
            const Scalar th = std::tanh(u);
            const Scalar du = c * (Scalar(1) + Scalar(3 * 0.044715) * x * x);
            return Scalar(0.5) * (Scalar(1) + th) + Scalar(0.5) * x * (Scalar(1) - th * th) * du;
        });
        t.accumulate(a, g.cwiseProduct(d));
    });
}

/// Row-wise softmax with max subtraction. Positions where `mask` is false get
/// probability exactly 0; every row needs at least one true entry.
template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& x, const Mask& mask) {
    const auto& v = x.value();
    if (mask.rows() != v.rows() || mask.cols() != v.cols())
        throw DimensionError("softmax_rows: input " + shape_string(v) + " vs mask " + shape_string(mask));
    Matrix<Scalar> out = Matrix<Scalar>::Zero(v.rows(), v.cols());
    for (Index r = 0; r < v.rows(); ++r) {
        Scalar mx = -std::numeric_limits<Scalar>::infinity();
        for (Index c = 0; c < v.cols(); ++c)
            if (mask(r, c)) mx = std::max(mx, v(r, c));
        if (mx == -std::numeric_limits<Scalar>::infinity())
            throw ValidationError("softmax_rows: row " + std::to_string(r) + " is fully masked");
        Scalar total = 0;
        for (Index c = 0; c < v.cols(); ++c) {
            if (!mask(r, c)) continue;
            out(r, c) = std::exp(v(r, c) - mx);
            total += out(r, c);
        }
        out.row(r) /= total;
    }
    Matrix<Scalar> y = out;
    return x.tape()->record(std::move(out), {x}, [x, y = std::move(y)](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dot = g.cwiseProduct(y).rowwise().sum();
        Matrix<Scalar> dx = y.cwiseProduct(g - dot.replicate(1, g.cols()));
        t.accumulate(x, dx);
    });
}

template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& x) {
    return softmax_rows(x, Mask::Constant(x.rows(), x.cols(), true));
}

/// Per row: (x - mean) / sqrt(population variance + eps), then gamma * . + beta.
template <typename Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta, Scalar eps) {
    const Index d = x.cols();
    if (d < 2) throw DimensionError("layer_norm: need at least 2 features, got " + shape_string(x.value()));
    if (!(eps > 0)) throw ParameterError("layer_norm: eps must be positive");
    if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d)
        throw DimensionError("layer_norm: input " + shape_string(x.value()) + " with gamma " +
                             shape_string(gamma.value()) + ", beta " + shape_string(beta.value()));
    if (x.tape() != gamma.tape() || x.tape() != beta.tape()) throw TapeError("operands live on different tapes");

    const auto& v = x.value();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = v.rowwise().mean();
    Matrix<Scalar> centered = v.colwise() - mean;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std =
        ((centered.array().square().rowwise().sum() / Scalar(d)) + eps).rsqrt().matrix();
    Matrix<Scalar> xhat = centered.array().colwise() * inv_std.array();
    Matrix<Scalar> out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
                         beta.value().row(0).array();

    return x.tape()->record(
        std::move(out), {x, gamma, beta},
        [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<Scalar>& t,
                                                                               const Matrix<Scalar>& g) {
            if (gamma.requires_grad()) t.accumulate(gamma, g.cwiseProduct(xhat).colwise().sum());
            if (beta.requires_grad()) t.accumulate(beta, g.colwise().sum());
            if (x.requires_grad()) {
                Matrix<Scalar> dxhat = g.array().rowwise() * gamma.value().row(0).array();
                const Scalar n = Scalar(xhat.cols());
                Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m1 = dxhat.rowwise().sum() / n;
                Eigen::Matrix<Scalar, Eigen::Dynamic, 1> m2 = dxhat.cwiseProduct(xhat).rowwise().sum() / n;
                Matrix<Scalar> dx = dxhat.colwise() - m1;
                dx -= (xhat.array().colwise() * m2.array()).matrix();
                dx = dx.array().colwise() * inv_std.array();
                t.accumulate(x, dx);
            }
        });
}

/// Inverted dropout. Eval mode (or p == 0) returns `x` itself.
template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double p, bool training, std::mt19937_64& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw ParameterError("dropout: p must lie in [0, 1), got " + std::to_string(p));
    if (!training || p == 0.0) return x;
    const Scalar keep_scale = Scalar(1) / Scalar(1.0 - p);
    Matrix<Scalar> mask(x.rows(), x.cols());
    for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = detail::uniform01(rng) < p ? Scalar(0) : keep_scale;
    Matrix<Scalar> out = x.value().cwiseProduct(mask);
    return x.tape()->record(std::move(out), {x}, [x, mask = std::move(mask)](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        t.accumulate(x, g.cwiseProduct(mask));
    });
}

/// Mean over the rows selected by `mask`, as a 1 x d row.
template <typename Scalar>
Var<Scalar> mean_pool_masked(const Var<Scalar>& x, const RowMask& mask) {
    if (mask.size() != x.rows())
        throw DimensionError("mean_pool_masked: input " + shape_string(x.value()) + " vs mask of " +
                             std::to_string(mask.size()));
    const Index count = mask.count();
    if (count == 0) throw ValidationError("mean_pool_masked: empty segment (mask has no true entry)");
    Matrix<Scalar> out = Matrix<Scalar>::Zero(1, x.cols());
    for (Index r = 0; r < x.rows(); ++r)
        if (mask(r)) out += x.value().row(r);
    out /= Scalar(count);
    return x.tape()->record(std::move(out), {x}, [x, mask, count](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        Matrix<Scalar> dx = Matrix<Scalar>::Zero(x.rows(), x.cols());
        for (Index r = 0; r < x.rows(); ++r)
            if (mask(r)) dx.row(r) = g.row(0) / Scalar(count);
        t.accumulate(x, dx);
    });
}

/// -log softmax(logits)[gold] for a 1 x n row of logits.
template <typename Scalar>
Var<Scalar> cross_entropy_softmax(const Var<Scalar>& logits, Index gold) {
    if (logits.rows() != 1) throw DimensionError("cross_entropy_softmax: logits must be a row, got " +
                                                 shape_string(logits.value()));
    if (gold < 0 || gold >= logits.cols())
        throw IndexError("cross_entropy_softmax: gold " + std::to_string(gold) + " outside [0, " +
                         std::to_string(logits.cols()) + ")");
    const auto row = logits.value().row(0);
    const Scalar mx = row.maxCoeff();
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> shifted = (row.array() - mx).exp().matrix();
    const Scalar total = shifted.sum();
    Matrix<Scalar> loss(1, 1);
    loss(0, 0) = std::log(total) - (row(gold) - mx);
    Matrix<Scalar> probs = shifted / total;
    return logits.tape()->record(std::move(loss), {logits},
                                 [logits, gold, probs = std::move(probs)](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                                     Matrix<Scalar> d = probs;
                                     d(0, gold) -= Scalar(1);
                                     t.accumulate(logits, d * g(0, 0));
                                 });
}

}  // namespace wnduma

#endif  // WNDUMA_TENSOR_HPP
