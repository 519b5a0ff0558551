#include "hiest/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

namespace hiest {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

namespace {

using NodePtr = std::shared_ptr<detail::TensorNode>;

NodePtr make_node(std::vector<std::size_t> shape) {
    auto n = std::make_shared<detail::TensorNode>();
    n->value.assign(shape_numel(shape), 0.0);
    n->shape = std::move(shape);
    return n;
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": operand shapes disagree, " +
                             shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    }
}

void check_rank(const char* op, const Tensor& t, std::size_t rank) {
    if (t.rank() != rank) {
        throw RankError(std::string(op) + ": expected rank " + std::to_string(rank) +
                        ", got shape " + shape_to_string(t.shape()));
    }
}

bool recording(std::initializer_list<const Tensor*> inputs) {
    if (!Tape::active()) return false;
    for (const Tensor* t : inputs)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

// Row-major strides for a shape.
std::vector<std::size_t> strides_of(const std::vector<std::size_t>& shape) {
    std::vector<std::size_t> s(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    auto n = make_node(std::move(shape));
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double fill, bool requires_grad) {
    auto n = make_node(std::move(shape));
    std::fill(n->value.begin(), n->value.end(), fill);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::from_data(std::vector<std::size_t> shape, std::vector<double> data,
                         bool requires_grad) {
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("from_data: shape " + shape_to_string(shape) + " wants " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(data.size()));
    }
    auto n = std::make_shared<detail::TensorNode>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({1}, {v}, requires_grad);
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.mutable_data()[i * n + i] = 1.0;
    return t;
}

Tensor Tensor::uniform(std::vector<std::size_t> shape, double lo, double hi,
                       std::mt19937_64& rng, bool requires_grad) {
    auto n = make_node(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : n->value) v = dist(rng);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank())
        throw AxisError("dim: axis " + std::to_string(axis) + " out of rank " +
                        std::to_string(rank()));
    return node_->shape[axis];
}

double Tensor::item() const {
    if (size() != 1)
        throw RankError("item: tensor is not scalar, shape " + shape_to_string(shape()));
    return node_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != rank())
        throw RankError("at: index rank " + std::to_string(idx.size()) + " vs tensor rank " +
                        std::to_string(rank()));
    auto st = strides_of(node_->shape);
    std::size_t off = 0, k = 0;
    for (std::size_t i : idx) {
        if (i >= node_->shape[k]) throw AxisError("at: index out of bounds");
        off += i * st[k++];
    }
    return node_->value[off];
}

Tensor Tensor::clone_detached() const {
    return Tensor::from_data(node_->shape, node_->value, false);
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() {
    parent_ = g_active_tape;
    g_active_tape = this;
}

Tape::~Tape() { g_active_tape = parent_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::push(std::function<void()> rule) {
    if (g_active_tape) g_active_tape->ops_.push_back(std::move(rule));
}

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw RankError("backward: loss must be scalar, got shape " +
                        shape_to_string(loss.shape()));
    if (consumed_) throw std::logic_error("backward: tape already backpropagated");
    consumed_ = true;
    auto n = loss.node();
    n->ensure_grad();
    n->grad[0] += 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

namespace {

// Shared skeleton for unary pointwise ops: dy/dx evaluated from the *input*
// value (the few ops keyed on the output capture it themselves).
template <class Fwd, class Bwd>
Tensor unary_pointwise(const Tensor& x, Fwd fwd, Bwd dfdx) {
    Tensor out = Tensor::zeros(x.shape());
    const auto xv = x.data();
    auto ov = out.mutable_data();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = fwd(xv[i]);
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node(), dfdx] {
            if (on->grad.empty()) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < xn->value.size(); ++i)
                xn->grad[i] += on->grad[i] * dfdx(xn->value[i]);
        });
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    Tensor out = Tensor::zeros(a.shape());
    const auto av = a.data(), bv = b.data();
    auto ov = out.mutable_data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
    if (recording({&a, &b})) {
        out.set_requires_grad(true);
        Tape::push([an = a.node(), bn = b.node(), on = out.node()] {
            if (on->grad.empty()) return;
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += on->grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < bn->grad.size(); ++i) bn->grad[i] += on->grad[i];
            }
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    Tensor out = Tensor::zeros(a.shape());
    const auto av = a.data(), bv = b.data();
    auto ov = out.mutable_data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
    if (recording({&a, &b})) {
        out.set_requires_grad(true);
        Tape::push([an = a.node(), bn = b.node(), on = out.node()] {
            if (on->grad.empty()) return;
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += on->grad[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < bn->grad.size(); ++i) bn->grad[i] -= on->grad[i];
            }
        });
    }
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("mul", a, b);
    Tensor out = Tensor::zeros(a.shape());
    const auto av = a.data(), bv = b.data();
    auto ov = out.mutable_data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    if (recording({&a, &b})) {
        out.set_requires_grad(true);
        Tape::push([an = a.node(), bn = b.node(), on = out.node()] {
            if (on->grad.empty()) return;
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < an->grad.size(); ++i)
                    an->grad[i] += on->grad[i] * bn->value[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < bn->grad.size(); ++i)
                    bn->grad[i] += on->grad[i] * an->value[i];
            }
        });
    }
    return out;
}

Tensor div(const Tensor& a, const Tensor& b) {
    check_same_shape("div", a, b);
    Tensor out = Tensor::zeros(a.shape());
    const auto av = a.data(), bv = b.data();
    auto ov = out.mutable_data();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] / bv[i];
    if (recording({&a, &b})) {
        out.set_requires_grad(true);
        Tape::push([an = a.node(), bn = b.node(), on = out.node()] {
            if (on->grad.empty()) return;
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < an->grad.size(); ++i)
                    an->grad[i] += on->grad[i] / bn->value[i];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < bn->grad.size(); ++i)
                    bn->grad[i] -= on->grad[i] * an->value[i] / (bn->value[i] * bn->value[i]);
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& x, double c) {
    return unary_pointwise(
        x, [c](double v) { return v * c; }, [c](double) { return c; });
}

Tensor add_scalar(const Tensor& x, double c) {
    return unary_pointwise(
        x, [c](double v) { return v + c; }, [](double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
    // Subgradient at 0 is 0.
    return unary_pointwise(
        x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_pointwise(
        x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double v) {
            double s = 1.0 / (1.0 + std::exp(-v));
            return s * (1.0 - s);
        });
}

Tensor tanh(const Tensor& x) {
    return unary_pointwise(
        x, [](double v) { return std::tanh(v); },
        [](double v) {
            double t = std::tanh(v);
            return 1.0 - t * t;
        });
}

Tensor abs(const Tensor& x) {
    // Subgradient at 0 is 0.
    return unary_pointwise(
        x, [](double v) { return std::fabs(v); },
        [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor log(const Tensor& x) {
    return unary_pointwise(
        x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
    // Gradient passes only through the unclamped interior.
    return unary_pointwise(
        x, [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
        [lo, hi](double v) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_rank("matmul", a, 2);
    check_rank("matmul", b, 2);
    const std::size_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2)
        throw DimensionError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) +
                             " vs " + shape_to_string(b.shape()));
    Tensor out = Tensor::zeros({m, n});
    MapM(out.mutable_data().data(), m, n).noalias() =
        CMapM(a.data().data(), m, k) * CMapM(b.data().data(), k, n);
    if (recording({&a, &b})) {
        out.set_requires_grad(true);
        Tape::push([an = a.node(), bn = b.node(), on = out.node(), m, k, n] {
            if (on->grad.empty()) return;
            CMapM dc(on->grad.data(), m, n);
            if (an->requires_grad) {
                an->ensure_grad();
                MapM(an->grad.data(), m, k).noalias() +=
                    dc * CMapM(bn->value.data(), k, n).transpose();
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                MapM(bn->grad.data(), k, n).noalias() +=
                    CMapM(an->value.data(), m, k).transpose() * dc;
            }
        });
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    check_rank("transpose", a, 2);
    const std::size_t m = a.dim(0), n = a.dim(1);
    Tensor out = Tensor::zeros({n, m});
    MapM(out.mutable_data().data(), n, m) = CMapM(a.data().data(), m, n).transpose();
    if (recording({&a})) {
        out.set_requires_grad(true);
        Tape::push([an = a.node(), on = out.node(), m, n] {
            if (on->grad.empty()) return;
            an->ensure_grad();
            MapM(an->grad.data(), m, n).noalias() += CMapM(on->grad.data(), n, m).transpose();
        });
    }
    return out;
}

Tensor gram(const Tensor& x) {
    check_rank("gram", x, 2);
    const std::size_t n = x.dim(0), d = x.dim(1);
    Tensor out = Tensor::zeros({n, n});
    const double* xp = x.data().data();
    auto ov = out.mutable_data();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < d; ++c) acc += xp[i * d + c] * xp[j * d + c];
            ov[i * n + j] = acc;
            ov[j * n + i] = acc;
        }
    }
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node(), n, d] {
            if (on->grad.empty()) return;
            xn->ensure_grad();
            CMapM dg(on->grad.data(), n, n);
            // dX += (dG + dGᵀ)·X
            MapM(xn->grad.data(), n, d).noalias() +=
                (dg + dg.transpose()) * CMapM(xn->value.data(), n, d);
        });
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    check_rank("linear", w, 2);
    if (x.rank() < 1)
        throw RankError("linear: input must have rank >= 1");
    const std::size_t k = w.dim(0), n = w.dim(1);
    if (x.shape().back() != k)
        throw DimensionError("linear: last axis of " + shape_to_string(x.shape()) +
                             " does not match weight " + shape_to_string(w.shape()));
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != n))
        throw DimensionError("linear: bias shape " + shape_to_string(bias.shape()) +
                             " does not match weight " + shape_to_string(w.shape()));
    std::vector<std::size_t> out_shape = x.shape();
    out_shape.back() = n;
    const std::size_t rows = x.size() / k;
    Tensor out = Tensor::zeros(out_shape);
    MapM o(out.mutable_data().data(), rows, n);
    o.noalias() = CMapM(x.data().data(), rows, k) * CMapM(w.data().data(), k, n);
    if (bias.defined()) o.rowwise() += CMapV(bias.data().data(), n).transpose();
    if (recording({&x, &w, &bias})) {
        out.set_requires_grad(true);
        auto bnode = bias.defined() ? bias.node() : nullptr;
        Tape::push([xn = x.node(), wn = w.node(), bn = bnode, on = out.node(), rows, k, n] {
            if (on->grad.empty()) return;
            CMapM dc(on->grad.data(), rows, n);
            if (xn->requires_grad) {
                xn->ensure_grad();
                MapM(xn->grad.data(), rows, k).noalias() +=
                    dc * CMapM(wn->value.data(), k, n).transpose();
            }
            if (wn->requires_grad) {
                wn->ensure_grad();
                MapM(wn->grad.data(), k, n).noalias() +=
                    CMapM(xn->value.data(), rows, k).transpose() * dc;
            }
            if (bn && bn->requires_grad) {
                bn->ensure_grad();
                MapV(bn->grad.data(), n) += dc.colwise().sum().transpose();
            }
        });
    }
    return out;
}

Tensor node_matmul(const Tensor& m, const Tensor& h) {
    check_rank("node_matmul", m, 2);
    if (h.rank() < 2)
        throw RankError("node_matmul: feature tensor must have rank >= 2");
    const std::size_t p = m.dim(0), q = m.dim(1);
    const std::size_t hq = h.shape()[h.rank() - 2], d = h.shape().back();
    if (hq != q)
        throw DimensionError("node_matmul: node axis of " + shape_to_string(h.shape()) +
                             " does not match mapping " + shape_to_string(m.shape()));
    const std::size_t slices = h.size() / (q * d);
    std::vector<std::size_t> out_shape = h.shape();
    out_shape[out_shape.size() - 2] = p;
    Tensor out = Tensor::zeros(out_shape);
    {
        CMapM mm(m.data().data(), p, q);
        for (std::size_t s = 0; s < slices; ++s) {
            MapM(out.mutable_data().data() + s * p * d, p, d).noalias() =
                mm * CMapM(h.data().data() + s * q * d, q, d);
        }
    }
    if (recording({&m, &h})) {
        out.set_requires_grad(true);
        Tape::push([mn = m.node(), hn = h.node(), on = out.node(), p, q, d, slices] {
            if (on->grad.empty()) return;
            if (mn->requires_grad) {
                mn->ensure_grad();
                MapM dm(mn->grad.data(), p, q);
                for (std::size_t s = 0; s < slices; ++s) {
                    dm.noalias() += CMapM(on->grad.data() + s * p * d, p, d) *
                                    CMapM(hn->value.data() + s * q * d, q, d).transpose();
                }
            }
            if (hn->requires_grad) {
                hn->ensure_grad();
                CMapM mm(mn->value.data(), p, q);
                for (std::size_t s = 0; s < slices; ++s) {
                    MapM(hn->grad.data() + s * q * d, q, d).noalias() +=
                        mm.transpose() * CMapM(on->grad.data() + s * p * d, p, d);
                }
            }
        });
    }
    return out;
}

Tensor div_colvec(const Tensor& a, const Tensor& v) {
    check_rank("div_colvec", a, 2);
    check_rank("div_colvec", v, 1);
    const std::size_t n = a.dim(0), m = a.dim(1);
    if (v.dim(0) != n)
        throw DimensionError("div_colvec: rows of " + shape_to_string(a.shape()) +
                             " vs vector " + shape_to_string(v.shape()));
    Tensor out = Tensor::zeros({n, m});
    const auto av = a.data(), vv = v.data();
    auto ov = out.mutable_data();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) ov[i * m + j] = av[i * m + j] / vv[i];
    if (recording({&a, &v})) {
        out.set_requires_grad(true);
        Tape::push([an = a.node(), vn = v.node(), on = out.node(), n, m] {
            if (on->grad.empty()) return;
            if (an->requires_grad) {
                an->ensure_grad();
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < m; ++j)
                        an->grad[i * m + j] += on->grad[i * m + j] / vn->value[i];
            }
            if (vn->requires_grad) {
                vn->ensure_grad();
                for (std::size_t i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j)
                        acc += on->grad[i * m + j] * an->value[i * m + j];
                    vn->grad[i] -= acc / (vn->value[i] * vn->value[i]);
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structure ops
// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& x, std::vector<std::size_t> new_shape) {
    if (shape_numel(new_shape) != x.size())
        throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) + " as " +
                             shape_to_string(new_shape));
    Tensor out = Tensor::from_data(std::move(new_shape),
                                   std::vector<double>(x.data().begin(), x.data().end()));
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node()] {
            if (on->grad.empty()) return;
            xn->ensure_grad();
            for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += on->grad[i];
        });
    }
    return out;
}

namespace {

// out[i0,..] = in[axes[i0],..]: gather positions for a permutation.
std::vector<std::size_t> permute_index_map(const std::vector<std::size_t>& in_shape,
                                           const std::vector<std::size_t>& axes) {
    const std::size_t r = in_shape.size();
    std::vector<std::size_t> out_shape(r);
    for (std::size_t i = 0; i < r; ++i) out_shape[i] = in_shape[axes[i]];
    auto in_strides = strides_of(in_shape);
    auto out_strides = strides_of(out_shape);
    const std::size_t total = shape_numel(in_shape);
    std::vector<std::size_t> src(total);
    std::vector<std::size_t> idx(r, 0);
    for (std::size_t o = 0; o < total; ++o) {
        std::size_t in_off = 0;
        for (std::size_t i = 0; i < r; ++i) in_off += idx[i] * in_strides[axes[i]];
        src[o] = in_off;
        // increment out-index odometer
        for (std::size_t i = r; i-- > 0;) {
            if (++idx[i] < out_shape[i]) break;
            idx[i] = 0;
        }
    }
    return src;
}

}  // namespace

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
    const std::size_t r = x.rank();
    if (axes.size() != r) throw AxisError("permute: axes size does not match rank");
    std::vector<bool> seen(r, false);
    for (std::size_t a : axes) {
        if (a >= r || seen[a]) throw AxisError("permute: invalid axis permutation");
        seen[a] = true;
    }
    std::vector<std::size_t> out_shape(r);
    for (std::size_t i = 0; i < r; ++i) out_shape[i] = x.shape()[axes[i]];
    Tensor out = Tensor::zeros(out_shape);
    auto src = permute_index_map(x.shape(), axes);
    const auto xv = x.data();
    auto ov = out.mutable_data();
    for (std::size_t o = 0; o < src.size(); ++o) ov[o] = xv[src[o]];
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node(), src = std::move(src)] {
            if (on->grad.empty()) return;
            xn->ensure_grad();
            for (std::size_t o = 0; o < src.size(); ++o) xn->grad[src[o]] += on->grad[o];
        });
    }
    return out;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t len) {
    if (axis >= x.rank())
        throw AxisError("slice: axis " + std::to_string(axis) + " out of rank " +
                        std::to_string(x.rank()));
    if (start + len > x.dim(axis))
        throw DimensionError("slice: [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") exceeds axis length " +
                             std::to_string(x.dim(axis)));
    std::vector<std::size_t> out_shape = x.shape();
    out_shape[axis] = len;
    Tensor out = Tensor::zeros(out_shape);
    // View the array as [outer, axis_len, inner].
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
    for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
    const std::size_t alen = x.dim(axis);
    const auto xv = x.data();
    auto ov = out.mutable_data();
    for (std::size_t a = 0; a < outer; ++a)
        for (std::size_t t = 0; t < len; ++t)
            std::copy_n(xv.data() + (a * alen + start + t) * inner, inner,
                        ov.data() + (a * len + t) * inner);
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node(), outer, inner, alen, len, start] {
            if (on->grad.empty()) return;
            xn->ensure_grad();
            for (std::size_t a = 0; a < outer; ++a)
                for (std::size_t t = 0; t < len; ++t) {
                    double* dst = xn->grad.data() + (a * alen + start + t) * inner;
                    const double* g = on->grad.data() + (a * len + t) * inner;
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += g[i];
                }
        });
    }
    return out;
}

Tensor pad_front(const Tensor& x, std::size_t axis, std::size_t n) {
    if (axis >= x.rank())
        throw AxisError("pad_front: axis " + std::to_string(axis) + " out of rank " +
                        std::to_string(x.rank()));
    if (n == 0) return x;
    std::vector<std::size_t> out_shape = x.shape();
    out_shape[axis] += n;
    Tensor out = Tensor::zeros(out_shape);
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
    for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
    const std::size_t alen = x.dim(axis), olen = alen + n;
    const auto xv = x.data();
    auto ov = out.mutable_data();
    for (std::size_t a = 0; a < outer; ++a)
        for (std::size_t t = 0; t < alen; ++t)
            std::copy_n(xv.data() + (a * alen + t) * inner, inner,
                        ov.data() + (a * olen + n + t) * inner);
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node(), outer, inner, alen, olen, n] {
            if (on->grad.empty()) return;
            xn->ensure_grad();
            for (std::size_t a = 0; a < outer; ++a)
                for (std::size_t t = 0; t < alen; ++t) {
                    double* dst = xn->grad.data() + (a * alen + t) * inner;
                    const double* g = on->grad.data() + (a * olen + n + t) * inner;
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += g[i];
                }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Causal dilated convolution
// ---------------------------------------------------------------------------

Tensor dilated_causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& bias,
                             std::size_t dilation) {
    check_rank("dilated_causal_conv1d", x, 3);
    check_rank("dilated_causal_conv1d", w, 3);
    if (dilation == 0) throw AxisError("dilated_causal_conv1d: dilation must be positive");
    const std::size_t batch = x.dim(0), cin = x.dim(1), t_in = x.dim(2);
    const std::size_t cout = w.dim(0), wcin = w.dim(1), k = w.dim(2);
    if (cin != wcin)
        throw DimensionError("dilated_causal_conv1d: channel mismatch, input " +
                             shape_to_string(x.shape()) + " vs weight " +
                             shape_to_string(w.shape()));
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout))
        throw DimensionError("dilated_causal_conv1d: bias shape " +
                             shape_to_string(bias.shape()) + " vs weight " +
                             shape_to_string(w.shape()));
    const std::size_t span = (k - 1) * dilation;
    if (t_in < span + 1)
        throw LengthError("dilated_causal_conv1d: window spans " + std::to_string(span + 1) +
                          " steps but series has " + std::to_string(t_in));
    const std::size_t t_out = t_in - span;

    Tensor out = Tensor::zeros({batch, cout, t_out});
    {
        // Per tap k: out_n += W_k · x_n[:, off_k : off_k + t_out], where
        // off_k = (K−1−k)·dilation keeps w[..,..,k] on the sample k·dilation
        // steps in the past.
        RowMat wk(cout, cin);
        for (std::size_t kk = 0; kk < k; ++kk) {
            const std::size_t off = (k - 1 - kk) * dilation;
            for (std::size_t co = 0; co < cout; ++co)
                for (std::size_t ci = 0; ci < cin; ++ci)
                    wk(co, ci) = w.data()[(co * cin + ci) * k + kk];
            for (std::size_t n = 0; n < batch; ++n) {
                Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> xs(
                    x.data().data() + n * cin * t_in + off, cin, t_out,
                    Eigen::OuterStride<>(static_cast<Eigen::Index>(t_in)));
                MapM(out.mutable_data().data() + n * cout * t_out, cout, t_out).noalias() +=
                    wk * xs;
            }
        }
        if (bias.defined()) {
            auto ov = out.mutable_data();
            for (std::size_t n = 0; n < batch; ++n)
                for (std::size_t co = 0; co < cout; ++co) {
                    const double b = bias.data()[co];
                    double* row = ov.data() + (n * cout + co) * t_out;
                    for (std::size_t t = 0; t < t_out; ++t) row[t] += b;
                }
        }
    }

    if (recording({&x, &w, &bias})) {
        out.set_requires_grad(true);
        auto bnode = bias.defined() ? bias.node() : nullptr;
        Tape::push([xn = x.node(), wn = w.node(), bn = bnode, on = out.node(), batch, cin,
                    t_in, cout, k, t_out, dilation] {
            if (on->grad.empty()) return;
            RowMat wk(cout, cin), dwk(cout, cin);
            for (std::size_t kk = 0; kk < k; ++kk) {
                const std::size_t off = (k - 1 - kk) * dilation;
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    for (std::size_t co = 0; co < cout; ++co)
                        for (std::size_t ci = 0; ci < cin; ++ci)
                            wk(co, ci) = wn->value[(co * cin + ci) * k + kk];
                    for (std::size_t n = 0; n < batch; ++n) {
                        Eigen::Map<RowMat, 0, Eigen::OuterStride<>> dxs(
                            xn->grad.data() + n * cin * t_in + off, cin, t_out,
                            Eigen::OuterStride<>(static_cast<Eigen::Index>(t_in)));
                        dxs.noalias() += wk.transpose() *
                                         CMapM(on->grad.data() + n * cout * t_out, cout, t_out);
                    }
                }
                if (wn->requires_grad) {
                    dwk.setZero();
                    for (std::size_t n = 0; n < batch; ++n) {
                        Eigen::Map<const RowMat, 0, Eigen::OuterStride<>> xs(
                            xn->value.data() + n * cin * t_in + off, cin, t_out,
                            Eigen::OuterStride<>(static_cast<Eigen::Index>(t_in)));
                        dwk.noalias() += CMapM(on->grad.data() + n * cout * t_out, cout, t_out) *
                                         xs.transpose();
                    }
                    wn->ensure_grad();
                    for (std::size_t co = 0; co < cout; ++co)
                        for (std::size_t ci = 0; ci < cin; ++ci)
                            wn->grad[(co * cin + ci) * k + kk] += dwk(co, ci);
                }
            }
            if (bn && bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t n = 0; n < batch; ++n)
                    for (std::size_t co = 0; co < cout; ++co) {
                        const double* row = on->grad.data() + (n * cout + co) * t_out;
                        double acc = 0.0;
                        for (std::size_t t = 0; t < t_out; ++t) acc += row[t];
                        bn->grad[co] += acc;
                    }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    Tensor out = Tensor::scalar(acc);
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node()] {
            if (on->grad.empty()) return;
            xn->ensure_grad();
            const double g = on->grad[0];
            for (double& gv : xn->grad) gv += g;
        });
    }
    return out;
}

Tensor sum(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank())
        throw AxisError("sum: axis " + std::to_string(axis) + " out of rank " +
                        std::to_string(x.rank()));
    std::vector<std::size_t> out_shape;
    for (std::size_t i = 0; i < x.rank(); ++i)
        if (i != axis) out_shape.push_back(x.dim(i));
    if (out_shape.empty()) out_shape.push_back(1);  // reduce rank-1 to scalar
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
    for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
    const std::size_t alen = x.dim(axis);
    Tensor out = Tensor::zeros(out_shape);
    const auto xv = x.data();
    auto ov = out.mutable_data();
    for (std::size_t a = 0; a < outer; ++a)
        for (std::size_t t = 0; t < alen; ++t) {
            const double* src = xv.data() + (a * alen + t) * inner;
            double* dst = ov.data() + a * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node(), outer, inner, alen] {
            if (on->grad.empty()) return;
            xn->ensure_grad();
            for (std::size_t a = 0; a < outer; ++a)
                for (std::size_t t = 0; t < alen; ++t) {
                    double* dst = xn->grad.data() + (a * alen + t) * inner;
                    const double* g = on->grad.data() + a * inner;
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += g[i];
                }
        });
    }
    return out;
}

Tensor mean(const Tensor& x) {
    if (x.size() == 0) return Tensor::scalar(0.0);
    return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor mean(const Tensor& x, std::size_t axis) {
    Tensor s = sum(x, axis);
    const std::size_t alen = x.dim(axis);
    return scale(s, alen == 0 ? 0.0 : 1.0 / static_cast<double>(alen));
}

Tensor mean_abs(const Tensor& x) { return mean(abs(x)); }

Tensor l2_norm(const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v * v;
    const double norm = std::sqrt(acc);
    Tensor out = Tensor::scalar(norm);
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node(), norm] {
            if (on->grad.empty() || norm == 0.0) return;
            xn->ensure_grad();
            const double g = on->grad[0] / norm;
            for (std::size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += g * xn->value[i];
        });
    }
    return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank())
        throw AxisError("softmax: axis " + std::to_string(axis) + " out of rank " +
                        std::to_string(x.rank()));
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
    for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
    const std::size_t alen = x.dim(axis);
    Tensor out = Tensor::zeros(x.shape());
    const auto xv = x.data();
    auto ov = out.mutable_data();
    for (std::size_t a = 0; a < outer; ++a)
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = a * alen * inner + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t t = 0; t < alen; ++t) mx = std::max(mx, xv[base + t * inner]);
            double z = 0.0;
            for (std::size_t t = 0; t < alen; ++t) {
                const double e = std::exp(xv[base + t * inner] - mx);
                ov[base + t * inner] = e;
                z += e;
            }
            for (std::size_t t = 0; t < alen; ++t) ov[base + t * inner] /= z;
        }
    if (recording({&x})) {
        out.set_requires_grad(true);
        Tape::push([xn = x.node(), on = out.node(), outer, inner, alen] {
            if (on->grad.empty()) return;
            xn->ensure_grad();
            for (std::size_t a = 0; a < outer; ++a)
                for (std::size_t i = 0; i < inner; ++i) {
                    const std::size_t base = a * alen * inner + i;
                    double dot = 0.0;
                    for (std::size_t t = 0; t < alen; ++t)
                        dot += on->grad[base + t * inner] * on->value[base + t * inner];
                    for (std::size_t t = 0; t < alen; ++t) {
                        const std::size_t o = base + t * inner;
                        xn->grad[o] += on->value[o] * (on->grad[o] - dot);
                    }
                }
        });
    }
    return out;
}

}  // namespace hiest
