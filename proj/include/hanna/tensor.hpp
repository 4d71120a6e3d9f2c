#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hanna {

struct TensorImpl;

// Dense f64 tensor with reverse-mode autodiff. Value-semantic handle over a
// shared node; ops build a tape that backward() replays in reverse
// topological order. Gradients accumulate until explicitly zeroed.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const;
    std::size_t size() const;
    std::vector<double>& data();
    const std::vector<double>& data() const;
    // Allocated lazily; empty until a backward pass touches this tensor.
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    bool has_grad() const;
    bool requires_grad() const;
    void set_requires_grad(bool v);
    void zero_grad();

    // Value of a one-element tensor.
    double item() const;

    TensorImpl* impl() const { return impl_.get(); }
    const std::shared_ptr<TensorImpl>& node() const { return impl_; }

    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

private:
    std::shared_ptr<TensorImpl> impl_;
};

struct TensorImpl {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until needed
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorImpl>> parents;
    std::function<void(TensorImpl&)> backprop;  // reads this->grad, accumulates into parents

    std::size_t numel() const;
    void ensure_grad();
};

// Runs reverse-mode AD from a scalar loss. Seeds d(loss)/d(loss) = 1 and
// accumulates into every reachable tensor's grad.
void backward(const Tensor& loss);

// ---- operations -----------------------------------------------------------

// Cross-correlation. x: [N,Cin,H,W], w: [Cout,Cin/groups,K,K],
// bias: [Cout] or undefined.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
              int stride, int padding, int groups);

Tensor relu(const Tensor& x);

// (groups, C/groups) reshape-transpose-flatten channel permutation.
Tensor channel_shuffle(const Tensor& x, int groups);

// x: [N,F], w: [F,O], b: [O] -> [N,O]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// [N,C,H,W] -> [N,C]
Tensor global_avg_pool(const Tensor& x);

// Equal shapes, no broadcasting.
Tensor add(const Tensor& x, const Tensor& y);

Tensor mul(const Tensor& x, const Tensor& y);

// Mean over the batch of -log softmax(logits)[label], max-stabilized.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

Tensor sum(const Tensor& x);

// x scaled by a scalar tensor s; differentiable in both.
Tensor scale(const Tensor& x, const Tensor& s);

Tensor scale_const(const Tensor& x, double c);

// Scalar tensor holding x.data[i].
Tensor index(const Tensor& x, int i);

// Elementwise x^p for constant p; entries must be positive when p is not
// a non-negative integer.
Tensor pow_const(const Tensor& x, double p);

// Inner product with a constant vector.
Tensor dot_const(const Tensor& x, const std::vector<double>& v);

// Elementwise max(x, lo); gradient passes only where x > lo.
Tensor clamp_min(const Tensor& x, double lo);

// Softmax over the admissible entries of (logits + noise)/tau; entries with
// logit == -inf are inadmissible and map to exactly 0. Differentiable in
// logits with the noise held fixed.
Tensor gumbel_softmax(const Tensor& logits_row, const std::vector<double>& noise,
                      double tau);

std::string shape_str(const std::vector<int>& shape);

}  // namespace hanna
