#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hiest/errors.hpp"

namespace hiest {

namespace detail {

struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until a backward pass touches it
    bool requires_grad = false;
    std::string name;

    std::size_t size() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

}  // namespace detail

std::string shape_to_string(const std::vector<std::size_t>& shape);
std::size_t shape_numel(const std::vector<std::size_t>& shape);

/// Handle to a dense float64 array living on the autodiff tape.
/// Copying a Tensor copies the handle, not the storage.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double fill, bool requires_grad = false);
    static Tensor from_data(std::vector<std::size_t> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor identity(std::size_t n);
    /// Uniform fill in [lo, hi) drawn from rng.
    static Tensor uniform(std::vector<std::size_t> shape, double lo, double hi,
                          std::mt19937_64& rng, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->value.size(); }
    std::size_t dim(std::size_t axis) const;

    std::span<const double> data() const { return node_->value; }
    std::span<double> mutable_data() { return node_->value; }
    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool rg) { node_->requires_grad = rg; }

    /// Gradient buffer; empty span if no backward pass has reached this tensor.
    std::span<const double> grad() const { return node_->grad; }
    /// Gradient buffer, allocating (zero-filled) on first use.
    std::span<double> grad_mutable() {
        node_->ensure_grad();
        return node_->grad;
    }
    void zero_grad() {
        if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
    }

    const std::string& name() const { return node_->name; }
    void set_name(std::string n) { node_->name = std::move(n); }

    double item() const;
    double at(std::initializer_list<std::size_t> idx) const;

    /// Detached deep copy (constant, no grad).
    Tensor clone_detached() const;

    std::shared_ptr<detail::TensorNode> node() const { return node_; }
    static Tensor wrap(std::shared_ptr<detail::TensorNode> n) { return Tensor(std::move(n)); }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::TensorNode> node_;
};

/// Define-by-run gradient tape. Constructing a Tape makes it the active
/// recorder for the current thread; ops executed while it is active append
/// their backward rules. Each tape may be backpropagated once.
///
/// Tapes and their tensors are single-owner: never share one across threads.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Reverse sweep from a scalar loss. Seeds d(loss)/d(loss) = 1 and runs
    /// every recorded rule exactly once, newest first. Gradients accumulate
    /// into .grad buffers; call zero_grad between optimizer steps.
    void backward(const Tensor& loss);

    std::size_t num_ops() const { return ops_.size(); }

    static Tape* active();
    /// Append a backward rule to the active tape, if any.
    static void push(std::function<void()> rule);

private:
    std::vector<std::function<void()>> ops_;
    Tape* parent_ = nullptr;
    bool consumed_ = false;
};

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor log(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Symmetric Gram matrix X·Xᵀ for X [n×d]; symmetry is structural.
Tensor gram(const Tensor& x);
/// Contract the last axis of x with the rows of w: [..., k] × [k×n] -> [..., n].
/// Optional bias [n] is broadcast over the leading axes.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias = Tensor());
/// Per-slice left product m·h over the node axis:
/// m [p×q], h [..., q, d] -> [..., p, d].
Tensor node_matmul(const Tensor& m, const Tensor& h);
/// Divide each row i of a [n×m] by v[i].
Tensor div_colvec(const Tensor& a, const Tensor& v);

// ---- structure ----
Tensor reshape(const Tensor& x, std::vector<std::size_t> new_shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t len);
Tensor pad_front(const Tensor& x, std::size_t axis, std::size_t n);

// ---- temporal convolution ----
/// Causal dilated 1-D convolution. x [N×Cin×T], w [Cout×Cin×K], optional
/// bias [Cout]. Output [N×Cout×T'] with T' = T − (K−1)·dilation; output step
/// j is aligned with input step j + (K−1)·dilation, so w[..,..,k] taps the
/// sample k·dilation steps back.
Tensor dilated_causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& bias,
                             std::size_t dilation);

// ---- reductions ----
Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, std::size_t axis);
Tensor mean_abs(const Tensor& x);
/// Euclidean norm of all entries; returns 0 for the zero tensor (callers
/// guard the nondifferentiable point).
Tensor l2_norm(const Tensor& x);

/// Max-subtracted softmax along one axis. NaN inputs propagate.
Tensor softmax(const Tensor& x, std::size_t axis);

}  // namespace hiest
