#include "hanna/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "hanna/errors.hpp"

namespace hanna {

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

std::size_t TensorImpl::numel() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

void TensorImpl::ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
}

namespace {

std::shared_ptr<TensorImpl> make_leaf(std::vector<int> shape, std::vector<double> data,
                                      bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    return impl;
}

bool any_grad(const std::vector<std::shared_ptr<TensorImpl>>& parents) {
    for (const auto& p : parents)
        if (p->requires_grad) return true;
    return false;
}

Tensor make_node(std::vector<int> shape, std::vector<double> data,
                 std::vector<std::shared_ptr<TensorImpl>> parents,
                 std::function<void(TensorImpl&)> backprop) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = any_grad(parents);
    impl->parents = std::move(parents);
    impl->backprop = std::move(backprop);
    return Tensor(impl);
}

void check_defined(const Tensor& t, const char* who) {
    if (!t.defined()) throw ValidationError(std::string(who) + ": undefined tensor");
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ValidationError("tensor: non-positive dimension in " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw ValidationError("tensor: non-positive dimension in " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    if (n != data.size())
        throw ValidationError("tensor: shape " + shape_str(shape) + " needs " + std::to_string(n) +
                              " values, got " + std::to_string(data.size()));
    return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(make_leaf({1}, {value}, requires_grad));
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.data().begin(), t.data().end(), value);
    return t;
}

const std::vector<int>& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::size() const { return impl_->numel(); }
std::vector<double>& Tensor::data() { return impl_->data; }
const std::vector<double>& Tensor::data() const { return impl_->data; }
std::vector<double>& Tensor::grad() {
    impl_->ensure_grad();
    return impl_->grad;
}
const std::vector<double>& Tensor::grad() const {
    impl_->ensure_grad();
    return impl_->grad;
}
bool Tensor::has_grad() const { return !impl_->grad.empty(); }
bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool v) { impl_->requires_grad = v; }
void Tensor::zero_grad() { impl_->grad.assign(impl_->data.size(), 0.0); }

double Tensor::item() const {
    if (impl_->numel() != 1)
        throw ValidationError("item: tensor has shape " + shape_str(impl_->shape) +
                              ", expected a single element");
    return impl_->data[0];
}

void backward(const Tensor& loss) {
    check_defined(loss, "backward");
    if (loss.size() != 1)
        throw ValidationError("backward: loss has shape " + shape_str(loss.shape()) +
                              ", expected scalar");

    // Iterative post-order DFS gives a topological order of the tape.
    std::vector<TensorImpl*> order;
    std::unordered_set<TensorImpl*> visited;
    struct Frame {
        TensorImpl* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({loss.impl(), 0});
    visited.insert(loss.impl());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            TensorImpl* p = f.node->parents[f.next_parent++].get();
            if (visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    loss.impl()->ensure_grad();
    loss.impl()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* node = *it;
        if (node->backprop && !node->grad.empty()) node->backprop(*node);
    }
}

// ---- conv2d ---------------------------------------------------------------

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, int padding,
              int groups) {
    check_defined(x, "conv2d");
    check_defined(w, "conv2d");
    if (x.shape().size() != 4)
        throw ValidationError("conv2d: input must be [N,C,H,W], got " + shape_str(x.shape()));
    if (w.shape().size() != 4)
        throw ValidationError("conv2d: weight must be [Cout,Cin/g,K,K], got " + shape_str(w.shape()));
    const int N = x.shape()[0], Cin = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    const int Cout = w.shape()[0], Cpg = w.shape()[1], K = w.shape()[2];
    if (w.shape()[3] != K)
        throw ValidationError("conv2d: kernel must be square, got " + shape_str(w.shape()));
    if (K % 2 == 0) throw ValidationError("conv2d: kernel size must be odd, got " + std::to_string(K));
    if (groups < 1 || Cin % groups != 0)
        throw ValidationError("conv2d: input channels " + std::to_string(Cin) +
                              " not divisible by groups " + std::to_string(groups));
    if (Cout % groups != 0)
        throw ValidationError("conv2d: output channels " + std::to_string(Cout) +
                              " not divisible by groups " + std::to_string(groups));
    if (Cpg != Cin / groups)
        throw ValidationError("conv2d: weight dim 1 is " + std::to_string(Cpg) + ", expected Cin/g = " +
                              std::to_string(Cin / groups));
    if (stride < 1) throw ValidationError("conv2d: stride must be >= 1");
    if (padding < 0) throw ValidationError("conv2d: padding must be >= 0");
    const int Ho = (H + 2 * padding - K) / stride + 1;
    const int Wo = (W + 2 * padding - K) / stride + 1;
    if (Ho < 1 || Wo < 1)
        throw ValidationError("conv2d: output spatial size " + std::to_string(Ho) + "x" +
                              std::to_string(Wo) + " from input " + shape_str(x.shape()));
    if (bias.defined() && (bias.shape().size() != 1 || bias.shape()[0] != Cout))
        throw ValidationError("conv2d: bias must be [" + std::to_string(Cout) + "], got " +
                              shape_str(bias.shape()));

    const int Copg = Cout / groups;
    std::vector<double> out(static_cast<std::size_t>(N) * Cout * Ho * Wo, 0.0);
    const double* xd = x.data().data();
    const double* wd = w.data().data();
    for (int n = 0; n < N; ++n) {
        for (int oc = 0; oc < Cout; ++oc) {
            const int g = oc / Copg;
            const double b = bias.defined() ? bias.data()[oc] : 0.0;
            for (int oh = 0; oh < Ho; ++oh) {
                for (int ow = 0; ow < Wo; ++ow) {
                    double acc = b;
                    for (int ic = 0; ic < Cpg; ++ic) {
                        const int c = g * Cpg + ic;
                        const double* xrow = xd + ((static_cast<std::size_t>(n) * Cin + c) * H) * W;
                        const double* wrow = wd + ((static_cast<std::size_t>(oc) * Cpg + ic) * K) * K;
                        for (int kh = 0; kh < K; ++kh) {
                            const int ih = oh * stride - padding + kh;
                            if (ih < 0 || ih >= H) continue;
                            for (int kw = 0; kw < K; ++kw) {
                                const int iw = ow * stride - padding + kw;
                                if (iw < 0 || iw >= W) continue;
                                acc += xrow[ih * W + iw] * wrow[kh * K + kw];
                            }
                        }
                    }
                    out[((static_cast<std::size_t>(n) * Cout + oc) * Ho + oh) * Wo + ow] = acc;
                }
            }
        }
    }

    std::vector<std::shared_ptr<TensorImpl>> parents{x.node(), w.node()};
    if (bias.defined()) parents.push_back(bias.node());
    auto xi = x.node();
    auto wi = w.node();
    auto bi = bias.defined() ? bias.node() : nullptr;
    auto bp = [=](TensorImpl& self) {
        const double* go = self.grad.data();
        xi->ensure_grad();
        wi->ensure_grad();
        if (bi) bi->ensure_grad();
        double* dx = xi->grad.data();
        double* dw = wi->grad.data();
        const double* xd2 = xi->data.data();
        const double* wd2 = wi->data.data();
        for (int n = 0; n < N; ++n) {
            for (int oc = 0; oc < Cout; ++oc) {
                const int g = oc / Copg;
                for (int oh = 0; oh < Ho; ++oh) {
                    for (int ow = 0; ow < Wo; ++ow) {
                        const double gv =
                            go[((static_cast<std::size_t>(n) * Cout + oc) * Ho + oh) * Wo + ow];
                        if (gv == 0.0) continue;
                        if (bi) bi->grad[oc] += gv;
                        for (int ic = 0; ic < Cpg; ++ic) {
                            const int c = g * Cpg + ic;
                            const std::size_t xbase = ((static_cast<std::size_t>(n) * Cin + c) * H) * W;
                            const std::size_t wbase =
                                ((static_cast<std::size_t>(oc) * Cpg + ic) * K) * K;
                            for (int kh = 0; kh < K; ++kh) {
                                const int ih = oh * stride - padding + kh;
                                if (ih < 0 || ih >= H) continue;
                                for (int kw = 0; kw < K; ++kw) {
                                    const int iw = ow * stride - padding + kw;
                                    if (iw < 0 || iw >= W) continue;
                                    dx[xbase + ih * W + iw] += gv * wd2[wbase + kh * K + kw];
                                    dw[wbase + kh * K + kw] += gv * xd2[xbase + ih * W + iw];
                                }
                            }
                        }
                    }
                }
            }
        }
    };
    return make_node({N, Cout, Ho, Wo}, std::move(out), std::move(parents), std::move(bp));
}

// ---- elementwise ----------------------------------------------------------

Tensor relu(const Tensor& x) {
    check_defined(x, "relu");
    std::vector<double> out(x.data());
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    auto xi = x.node();
    auto bp = [xi](TensorImpl& self) {
        xi->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (xi->data[i] > 0.0) xi->grad[i] += self.grad[i];
    };
    return make_node(x.shape(), std::move(out), {x.node()}, std::move(bp));
}

Tensor add(const Tensor& x, const Tensor& y) {
    check_defined(x, "add");
    check_defined(y, "add");
    if (x.shape() != y.shape())
        throw ValidationError("add: shape mismatch " + shape_str(x.shape()) + " vs " +
                              shape_str(y.shape()));
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] + y.data()[i];
    auto xi = x.node();
    auto yi = y.node();
    auto bp = [xi, yi](TensorImpl& self) {
        xi->ensure_grad();
        yi->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            xi->grad[i] += self.grad[i];
            yi->grad[i] += self.grad[i];
        }
    };
    return make_node(x.shape(), std::move(out), {x.node(), y.node()}, std::move(bp));
}

Tensor mul(const Tensor& x, const Tensor& y) {
    check_defined(x, "mul");
    check_defined(y, "mul");
    if (x.shape() != y.shape())
        throw ValidationError("mul: shape mismatch " + shape_str(x.shape()) + " vs " +
                              shape_str(y.shape()));
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * y.data()[i];
    auto xi = x.node();
    auto yi = y.node();
    auto bp = [xi, yi](TensorImpl& self) {
        xi->ensure_grad();
        yi->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            xi->grad[i] += self.grad[i] * yi->data[i];
            yi->grad[i] += self.grad[i] * xi->data[i];
        }
    };
    return make_node(x.shape(), std::move(out), {x.node(), y.node()}, std::move(bp));
}

Tensor channel_shuffle(const Tensor& x, int groups) {
    check_defined(x, "channel_shuffle");
    if (x.shape().size() != 4)
        throw ValidationError("channel_shuffle: input must be [N,C,H,W], got " +
                              shape_str(x.shape()));
    const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    if (groups < 1 || C % groups != 0)
        throw ValidationError("channel_shuffle: channels " + std::to_string(C) +
                              " not divisible by groups " + std::to_string(groups));
    const int per = C / groups;
    // out channel j = b*groups + a reads in channel a*per + b
    std::vector<int> src(C);
    for (int a = 0; a < groups; ++a)
        for (int b = 0; b < per; ++b) src[b * groups + a] = a * per + b;

    const std::size_t plane = static_cast<std::size_t>(H) * W;
    std::vector<double> out(x.size());
    for (int n = 0; n < N; ++n)
        for (int j = 0; j < C; ++j)
            std::copy_n(x.data().begin() + (static_cast<std::size_t>(n) * C + src[j]) * plane, plane,
                        out.begin() + (static_cast<std::size_t>(n) * C + j) * plane);
    auto xi = x.node();
    auto bp = [xi, src, N, C, plane](TensorImpl& self) {
        xi->ensure_grad();
        for (int n = 0; n < N; ++n)
            for (int j = 0; j < C; ++j) {
                const std::size_t o = (static_cast<std::size_t>(n) * C + j) * plane;
                const std::size_t s = (static_cast<std::size_t>(n) * C + src[j]) * plane;
                for (std::size_t k = 0; k < plane; ++k) xi->grad[s + k] += self.grad[o + k];
            }
    };
    return make_node(x.shape(), std::move(out), {x.node()}, std::move(bp));
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    check_defined(x, "linear");
    check_defined(w, "linear");
    check_defined(b, "linear");
    if (x.shape().size() != 2)
        throw ValidationError("linear: input must be [N,F], got " + shape_str(x.shape()));
    if (w.shape().size() != 2)
        throw ValidationError("linear: weight must be [F,O], got " + shape_str(w.shape()));
    const int N = x.shape()[0], F = x.shape()[1], O = w.shape()[1];
    if (w.shape()[0] != F)
        throw ValidationError("linear: weight rows " + std::to_string(w.shape()[0]) +
                              " != input features " + std::to_string(F));
    if (b.shape().size() != 1 || b.shape()[0] != O)
        throw ValidationError("linear: bias must be [" + std::to_string(O) + "], got " +
                              shape_str(b.shape()));
    std::vector<double> out(static_cast<std::size_t>(N) * O);
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < O; ++o) {
            double acc = b.data()[o];
            for (int f = 0; f < F; ++f) acc += x.data()[n * F + f] * w.data()[f * O + o];
            out[n * O + o] = acc;
        }
    auto xi = x.node();
    auto wi = w.node();
    auto bi = b.node();
    auto bp = [xi, wi, bi, N, F, O](TensorImpl& self) {
        xi->ensure_grad();
        wi->ensure_grad();
        bi->ensure_grad();
        for (int n = 0; n < N; ++n)
            for (int o = 0; o < O; ++o) {
                const double g = self.grad[n * O + o];
                if (g == 0.0) continue;
                bi->grad[o] += g;
                for (int f = 0; f < F; ++f) {
                    xi->grad[n * F + f] += g * wi->data[f * O + o];
                    wi->grad[f * O + o] += g * xi->data[n * F + f];
                }
            }
    };
    return make_node({N, O}, std::move(out), {x.node(), w.node(), b.node()}, std::move(bp));
}

Tensor global_avg_pool(const Tensor& x) {
    check_defined(x, "global_avg_pool");
    if (x.shape().size() != 4)
        throw ValidationError("global_avg_pool: input must be [N,C,H,W], got " +
                              shape_str(x.shape()));
    const int N = x.shape()[0], C = x.shape()[1];
    const std::size_t plane = static_cast<std::size_t>(x.shape()[2]) * x.shape()[3];
    std::vector<double> out(static_cast<std::size_t>(N) * C);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            double acc = 0.0;
            const std::size_t base = (static_cast<std::size_t>(n) * C + c) * plane;
            for (std::size_t k = 0; k < plane; ++k) acc += x.data()[base + k];
            out[n * C + c] = acc / static_cast<double>(plane);
        }
    auto xi = x.node();
    auto bp = [xi, N, C, plane](TensorImpl& self) {
        xi->ensure_grad();
        const double inv = 1.0 / static_cast<double>(plane);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const double g = self.grad[n * C + c] * inv;
                const std::size_t base = (static_cast<std::size_t>(n) * C + c) * plane;
                for (std::size_t k = 0; k < plane; ++k) xi->grad[base + k] += g;
            }
    };
    return make_node({N, C}, std::move(out), {x.node()}, std::move(bp));
}

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    check_defined(logits, "softmax_cross_entropy");
    if (logits.shape().size() != 2)
        throw ValidationError("softmax_cross_entropy: logits must be [N,K], got " +
                              shape_str(logits.shape()));
    const int N = logits.shape()[0], K = logits.shape()[1];
    if (static_cast<int>(labels.size()) != N)
        throw ValidationError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                              " labels for batch of " + std::to_string(N));
    for (int n = 0; n < N; ++n)
        if (labels[n] < 0 || labels[n] >= K)
            throw ValidationError("softmax_cross_entropy: label " + std::to_string(labels[n]) +
                                  " at index " + std::to_string(n) + " out of range [0," +
                                  std::to_string(K) + ")");
    std::vector<double> probs(static_cast<std::size_t>(N) * K);
    double loss = 0.0;
    for (int n = 0; n < N; ++n) {
        const double* row = logits.data().data() + static_cast<std::size_t>(n) * K;
        double mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        double denom = 0.0;
        for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
        const double log_denom = std::log(denom);
        for (int k = 0; k < K; ++k) probs[n * K + k] = std::exp(row[k] - mx) / denom;
        loss -= (row[labels[n]] - mx - log_denom);
    }
    loss /= static_cast<double>(N);
    auto li = logits.node();
    auto bp = [li, probs, labels, N, K](TensorImpl& self) {
        li->ensure_grad();
        const double g = self.grad[0] / static_cast<double>(N);
        for (int n = 0; n < N; ++n)
            for (int k = 0; k < K; ++k) {
                double d = probs[n * K + k] - (labels[n] == k ? 1.0 : 0.0);
                li->grad[n * K + k] += g * d;
            }
    };
    return make_node({1}, {loss}, {logits.node()}, std::move(bp));
}

Tensor sum(const Tensor& x) {
    check_defined(x, "sum");
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    auto xi = x.node();
    auto bp = [xi](TensorImpl& self) {
        xi->ensure_grad();
        for (double& g : xi->grad) g += self.grad[0];
    };
    return make_node({1}, {acc}, {x.node()}, std::move(bp));
}

Tensor scale(const Tensor& x, const Tensor& s) {
    check_defined(x, "scale");
    check_defined(s, "scale");
    if (s.size() != 1)
        throw ValidationError("scale: scale factor must be scalar, got " + shape_str(s.shape()));
    const double sv = s.data()[0];
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * sv;
    auto xi = x.node();
    auto si = s.node();
    auto bp = [xi, si](TensorImpl& self) {
        xi->ensure_grad();
        si->ensure_grad();
        const double sv2 = si->data[0];
        double acc = 0.0;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            xi->grad[i] += self.grad[i] * sv2;
            acc += self.grad[i] * xi->data[i];
        }
        si->grad[0] += acc;
    };
    return make_node(x.shape(), std::move(out), {x.node(), s.node()}, std::move(bp));
}

Tensor scale_const(const Tensor& x, double c) {
    check_defined(x, "scale_const");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * c;
    auto xi = x.node();
    auto bp = [xi, c](TensorImpl& self) {
        xi->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) xi->grad[i] += self.grad[i] * c;
    };
    return make_node(x.shape(), std::move(out), {x.node()}, std::move(bp));
}

Tensor index(const Tensor& x, int i) {
    check_defined(x, "index");
    if (i < 0 || static_cast<std::size_t>(i) >= x.size())
        throw ValidationError("index: position " + std::to_string(i) + " out of range for " +
                              shape_str(x.shape()));
    auto xi = x.node();
    auto bp = [xi, i](TensorImpl& self) {
        xi->ensure_grad();
        xi->grad[i] += self.grad[0];
    };
    return make_node({1}, {x.data()[i]}, {x.node()}, std::move(bp));
}

Tensor pow_const(const Tensor& x, double p) {
    check_defined(x, "pow_const");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(x.data()[i], p);
    auto xi = x.node();
    auto bp = [xi, p](TensorImpl& self) {
        xi->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            xi->grad[i] += self.grad[i] * p * std::pow(xi->data[i], p - 1.0);
    };
    return make_node(x.shape(), std::move(out), {x.node()}, std::move(bp));
}

Tensor dot_const(const Tensor& x, const std::vector<double>& v) {
    check_defined(x, "dot_const");
    if (x.size() != v.size())
        throw ValidationError("dot_const: tensor " + shape_str(x.shape()) + " vs vector of " +
                              std::to_string(v.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += x.data()[i] * v[i];
    auto xi = x.node();
    auto bp = [xi, v](TensorImpl& self) {
        xi->ensure_grad();
        for (std::size_t i = 0; i < v.size(); ++i) xi->grad[i] += self.grad[0] * v[i];
    };
    return make_node({1}, {acc}, {x.node()}, std::move(bp));
}

Tensor clamp_min(const Tensor& x, double lo) {
    check_defined(x, "clamp_min");
    std::vector<double> out(x.data());
    for (double& v : out) v = v > lo ? v : lo;
    auto xi = x.node();
    auto bp = [xi, lo](TensorImpl& self) {
        xi->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (xi->data[i] > lo) xi->grad[i] += self.grad[i];
    };
    return make_node(x.shape(), std::move(out), {x.node()}, std::move(bp));
}

Tensor gumbel_softmax(const Tensor& logits_row, const std::vector<double>& noise, double tau) {
    check_defined(logits_row, "gumbel_softmax");
    if (logits_row.shape().size() != 1)
        throw ValidationError("gumbel_softmax: logits must be 1-D, got " +
                              shape_str(logits_row.shape()));
    const std::size_t n = logits_row.size();
    if (noise.size() != n)
        throw ValidationError("gumbel_softmax: noise length " + std::to_string(noise.size()) +
                              " vs logits length " + std::to_string(n));
    if (!(tau > 0.0)) throw ValidationError("gumbel_softmax: temperature must be > 0");

    std::vector<bool> admissible(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = logits_row.data()[i];
        admissible[i] = !(std::isinf(l) && l < 0.0);
        any = any || admissible[i];
    }
    if (!any) throw ValidationError("gumbel_softmax: no admissible candidates in row");

    std::vector<double> out(n, 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        if (admissible[i]) mx = std::max(mx, (logits_row.data()[i] + noise[i]) / tau);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (admissible[i]) denom += std::exp((logits_row.data()[i] + noise[i]) / tau - mx);
    for (std::size_t i = 0; i < n; ++i)
        if (admissible[i]) out[i] = std::exp((logits_row.data()[i] + noise[i]) / tau - mx) / denom;

    auto li = logits_row.node();
    auto m = out;  // saved mask values
    auto bp = [li, m, admissible, tau, n](TensorImpl& self) {
        li->ensure_grad();
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (admissible[i]) dot += self.grad[i] * m[i];
        for (std::size_t i = 0; i < n; ++i)
            if (admissible[i]) li->grad[i] += m[i] * (self.grad[i] - dot) / tau;
    };
    return make_node({static_cast<int>(n)}, std::move(out), {logits_row.node()}, std::move(bp));
}

}  // namespace hanna
