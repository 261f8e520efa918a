#include "sketchpix/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sketchpix/kernels.hpp"

namespace sketchpix {

using detail::Node;

namespace {

const kernels::KernelTable& K() { return kernels::active(); }

// Per-output-element source offsets for a broadcast binary op.
struct BroadcastMap {
    Shape out;
    std::vector<std::size_t> off_a;
    std::vector<std::size_t> off_b;
};

std::vector<std::size_t> broadcast_offsets(const Shape& src, const Shape& out) {
    const std::size_t r = out.size();
    const std::size_t rs = src.size();
    std::vector<std::size_t> strides(r, 0);
    std::size_t stride = 1;
    for (std::size_t i = 0; i < rs; ++i) {
        const std::size_t d = rs - 1 - i;
        const std::size_t od = r - 1 - i;
        strides[od] = src[d] == 1 ? 0 : stride;
        stride *= src[d];
    }
    const std::size_t n = shape_numel(out);
    std::vector<std::size_t> offsets(n);
    std::vector<std::size_t> idx(r, 0);
    std::size_t off = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
        offsets[flat] = off;
        for (std::size_t d = r; d-- > 0;) {
            ++idx[d];
            off += strides[d];
            if (idx[d] < out[d]) break;
            off -= strides[d] * idx[d];
            idx[d] = 0;
        }
    }
    return offsets;
}

BroadcastMap make_broadcast(const Shape& a, const Shape& b, const char* op) {
    BroadcastMap map;
    map.out = broadcast_shape(a, b, op);
    map.off_a = broadcast_offsets(a, map.out);
    map.off_b = broadcast_offsets(b, map.out);
    return map;
}

void accumulate(Node& parent, const double* g, std::size_t n) {
    if (!parent.requires_grad) return;
    K().axpy(n, 1.0, g, parent.ensure_grad().data());
}

template <typename Fwd, typename Bwd>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Bwd local_grad) {
    const auto x = a.data();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
    return Tensor::make_result(op, a.shape(), std::move(y), {a}, [local_grad](Node& o) {
        Node& p = *o.parents[0];
        if (!p.requires_grad) return;
        auto& pg = p.ensure_grad();
        for (std::size_t i = 0; i < o.data.size(); ++i)
            pg[i] += o.grad[i] * local_grad(p.data[i], o.data[i]);
    });
}

struct AxisSplit {
    std::size_t outer = 1;
    std::size_t extent = 1;
    std::size_t inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
    AxisSplit r;
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    r.extent = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

void require_rank_at_least(const Tensor& a, std::size_t r, const char* op) {
    if (a.rank() < r)
        throw ShapeError(std::string(op) + ": needs rank >= " + std::to_string(r) +
                         ", got " + shape_str(a.shape()));
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        const std::size_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da != db && da != 1 && db != 1) throw ShapeError(op, a, b);
        out[r - 1 - i] = std::max(da, db);
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {
        const std::size_t n = a.numel();
        std::vector<double> out(n);
        K().add(n, a.data().data(), b.data().data(), out.data());
        return Tensor::make_result("add", a.shape(), std::move(out), {a, b}, [n](Node& o) {
            accumulate(*o.parents[0], o.grad.data(), n);
            accumulate(*o.parents[1], o.grad.data(), n);
        });
    }
    auto map = make_broadcast(a.shape(), b.shape(), "add");
    const std::size_t n = shape_numel(map.out);
    std::vector<double> out(n);
    const auto x = a.data();
    const auto y = b.data();
    for (std::size_t i = 0; i < n; ++i) out[i] = x[map.off_a[i]] + y[map.off_b[i]];
    Shape shape = map.out;
    return Tensor::make_result("add", std::move(shape), std::move(out), {a, b},
                               [map = std::move(map)](Node& o) {
        Node& pa = *o.parents[0];
        Node& pb = *o.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) g[map.off_a[i]] += o.grad[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) g[map.off_b[i]] += o.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {
        const std::size_t n = a.numel();
        std::vector<double> out(n);
        const auto x = a.data();
        const auto y = b.data();
        for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - y[i];
        return Tensor::make_result("sub", a.shape(), std::move(out), {a, b}, [n](Node& o) {
            accumulate(*o.parents[0], o.grad.data(), n);
            Node& pb = *o.parents[1];
            if (pb.requires_grad) K().axpy(n, -1.0, o.grad.data(), pb.ensure_grad().data());
        });
    }
    return add(a, neg(b));
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {
        const std::size_t n = a.numel();
        std::vector<double> out(n);
        K().mul(n, a.data().data(), b.data().data(), out.data());
        return Tensor::make_result("mul", a.shape(), std::move(out), {a, b}, [n](Node& o) {
            Node& pa = *o.parents[0];
            Node& pb = *o.parents[1];
            if (pa.requires_grad)
                K().fma_acc(n, o.grad.data(), pb.data.data(), pa.ensure_grad().data());
            if (pb.requires_grad)
                K().fma_acc(n, o.grad.data(), pa.data.data(), pb.ensure_grad().data());
        });
    }
    auto map = make_broadcast(a.shape(), b.shape(), "mul");
    const std::size_t n = shape_numel(map.out);
    std::vector<double> out(n);
    const auto x = a.data();
    const auto y = b.data();
    for (std::size_t i = 0; i < n; ++i) out[i] = x[map.off_a[i]] * y[map.off_b[i]];
    Shape shape = map.out;
    return Tensor::make_result("mul", std::move(shape), std::move(out), {a, b},
                               [map = std::move(map)](Node& o) {
        Node& pa = *o.parents[0];
        Node& pb = *o.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i)
                g[map.off_a[i]] += o.grad[i] * pb.data[map.off_b[i]];
        }
        if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i)
                g[map.off_b[i]] += o.grad[i] * pa.data[map.off_a[i]];
        }
    });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double factor) {
    const auto x = a.data();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = factor * x[i];
    return Tensor::make_result("scale", a.shape(), std::move(out), {a}, [factor](Node& o) {
        Node& p = *o.parents[0];
        if (p.requires_grad)
            K().axpy(o.grad.size(), factor, o.grad.data(), p.ensure_grad().data());
    });
}

Tensor add_scalar(const Tensor& a, double value) {
    const auto x = a.data();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + value;
    return Tensor::make_result("add_scalar", a.shape(), std::move(out), {a}, [](Node& o) {
        accumulate(*o.parents[0], o.grad.data(), o.grad.size());
    });
}

Tensor square(const Tensor& a) {
    return unary("square", a, [](double x) { return x * x; },
                 [](double x, double) { return 2.0 * x; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul", a.shape(), b.shape());
    const std::size_t m = a.dim(0);
    const std::size_t k = a.dim(1);
    const std::size_t n = b.dim(1);
    std::vector<double> out(m * n);
    K().gemm(false, false, m, n, k, a.data().data(), k, b.data().data(), n, out.data(), n,
             false);
    return Tensor::make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& o) {
        Node& pa = *o.parents[0];
        Node& pb = *o.parents[1];
        if (pa.requires_grad)  // dA = dC * B^T
            K().gemm(false, true, m, k, n, o.grad.data(), n, pb.data.data(), n,
                     pa.ensure_grad().data(), k, true);
        if (pb.requires_grad)  // dB = A^T * dC
            K().gemm(true, false, k, n, m, pa.data.data(), k, o.grad.data(), n,
                     pb.ensure_grad().data(), n, true);
    });
}

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride,
                             Padding padding) {
    if (stride == 0 || kernel == 0) return 0;
    if (padding == Padding::Same) return (in + stride - 1) / stride;
    if (in < kernel) return 0;
    return (in - kernel) / stride + 1;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Conv2dOptions options) {
    if (input.rank() != 4 || weight.rank() != 4 || weight.dim(1) != input.dim(1))
        throw ShapeError("conv2d", input.shape(), weight.shape());
    if (bias.rank() != 1 || bias.dim(0) != weight.dim(0))
        throw ShapeError("conv2d bias", weight.shape(), bias.shape());
    const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::size_t O = weight.dim(0), KH = weight.dim(2), KW = weight.dim(3);
    const std::size_t S = options.stride;
    const std::size_t OH = conv_output_size(H, KH, S, options.padding);
    const std::size_t OW = conv_output_size(W, KW, S, options.padding);
    if (OH == 0 || OW == 0)
        throw ShapeError("conv2d: output collapses for input " + shape_str(input.shape()) +
                         " and kernel " + shape_str(weight.shape()));
    std::size_t pad_top = 0, pad_left = 0;
    if (options.padding == Padding::Same) {
        const std::size_t need_h = (OH - 1) * S + KH;
        const std::size_t need_w = (OW - 1) * S + KW;
        pad_top = need_h > H ? (need_h - H) / 2 : 0;
        pad_left = need_w > W ? (need_w - W) / 2 : 0;
    }
    const std::size_t Kdim = C * KH * KW;
    const std::size_t P = OH * OW;

    std::vector<double> cols(N * Kdim * P, 0.0);
    const auto x = input.data();
    for (std::size_t n = 0; n < N; ++n) {
        double* col = cols.data() + n * Kdim * P;
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t ki = 0; ki < KH; ++ki)
                for (std::size_t kj = 0; kj < KW; ++kj) {
                    const std::size_t row = (c * KH + ki) * KW + kj;
                    for (std::size_t oi = 0; oi < OH; ++oi) {
                        const long ii = static_cast<long>(oi * S + ki) - static_cast<long>(pad_top);
                        if (ii < 0 || ii >= static_cast<long>(H)) continue;
                        for (std::size_t oj = 0; oj < OW; ++oj) {
                            const long jj =
                                static_cast<long>(oj * S + kj) - static_cast<long>(pad_left);
                            if (jj < 0 || jj >= static_cast<long>(W)) continue;
                            col[row * P + oi * OW + oj] =
                                x[((n * C + c) * H + ii) * W + jj];
                        }
                    }
                }
    }

    std::vector<double> out(N * O * P);
    const auto w = weight.data();
    const auto bv = bias.data();
    for (std::size_t n = 0; n < N; ++n) {
        double* dst = out.data() + n * O * P;
        K().gemm(false, false, O, P, Kdim, w.data(), Kdim, cols.data() + n * Kdim * P, P, dst,
                 P, false);
        for (std::size_t o = 0; o < O; ++o)
            for (std::size_t p = 0; p < P; ++p) dst[o * P + p] += bv[o];
    }

    return Tensor::make_result(
        "conv2d", {N, O, OH, OW}, std::move(out), {input, weight, bias},
        [=, cols = std::move(cols)](Node& o) {
            Node& pin = *o.parents[0];
            Node& pw = *o.parents[1];
            Node& pb = *o.parents[2];
            for (std::size_t n = 0; n < N; ++n) {
                const double* gout = o.grad.data() + n * O * P;
                if (pw.requires_grad)
                    K().gemm(false, true, O, Kdim, P, gout, P, cols.data() + n * Kdim * P, P,
                             pw.ensure_grad().data(), Kdim, true);
                if (pb.requires_grad) {
                    auto& gb = pb.ensure_grad();
                    for (std::size_t oc = 0; oc < O; ++oc)
                        for (std::size_t p = 0; p < P; ++p) gb[oc] += gout[oc * P + p];
                }
                if (pin.requires_grad) {
                    std::vector<double> dcol(Kdim * P);
                    K().gemm(true, false, Kdim, P, O, pw.data.data(), Kdim, gout, P,
                             dcol.data(), P, false);
                    auto& gin = pin.ensure_grad();
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t ki = 0; ki < KH; ++ki)
                            for (std::size_t kj = 0; kj < KW; ++kj) {
                                const std::size_t row = (c * KH + ki) * KW + kj;
                                for (std::size_t oi = 0; oi < OH; ++oi) {
                                    const long ii = static_cast<long>(oi * S + ki) -
                                                    static_cast<long>(pad_top);
                                    if (ii < 0 || ii >= static_cast<long>(H)) continue;
                                    for (std::size_t oj = 0; oj < OW; ++oj) {
                                        const long jj = static_cast<long>(oj * S + kj) -
                                                        static_cast<long>(pad_left);
                                        if (jj < 0 || jj >= static_cast<long>(W)) continue;
                                        gin[((n * C + c) * H + ii) * W + jj] +=
                                            dcol[row * P + oi * OW + oj];
                                    }
                                }
                            }
                }
            }
        });
}

Tensor tanh(const Tensor& a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary("sigmoid", a,
                 [](double x) {
                     if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
                     const double e = std::exp(x);
                     return e / (1.0 + e);
                 },
                 [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
    return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
    return unary("exp", a, [](double x) { return std::exp(x); },
                 [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary("log", a, [](double x) { return std::log(x); },
                 [](double x, double) { return 1.0 / x; });
}

Tensor reciprocal(const Tensor& a) {
    return unary("reciprocal", a, [](double x) { return 1.0 / x; },
                 [](double, double y) { return -y * y; });
}

Tensor div(const Tensor& a, const Tensor& b) { return mul(a, reciprocal(b)); }

Tensor softmax(const Tensor& a) {
    require_rank_at_least(a, 1, "softmax");
    const std::size_t cols = a.shape().back();
    const std::size_t rows = cols == 0 ? 0 : a.numel() / cols;
    const auto x = a.data();
    std::vector<double> y(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * cols;
        double* yr = y.data() + r * cols;
        const double mx = *std::max_element(xr, xr + cols);
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += (yr[c] = std::exp(xr[c] - mx));
        for (std::size_t c = 0; c < cols; ++c) yr[c] /= s;
    }
    return Tensor::make_result("softmax", a.shape(), std::move(y), {a}, [rows, cols](Node& o) {
        Node& p = *o.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* yr = o.data.data() + r * cols;
            const double* gr = o.grad.data() + r * cols;
            double dotv = 0.0;
            for (std::size_t c = 0; c < cols; ++c) dotv += gr[c] * yr[c];
            for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += yr[c] * (gr[c] - dotv);
        }
    });
}

Tensor log_softmax(const Tensor& a) {
    require_rank_at_least(a, 1, "log_softmax");
    const std::size_t cols = a.shape().back();
    const std::size_t rows = cols == 0 ? 0 : a.numel() / cols;
    const auto x = a.data();
    std::vector<double> y(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * cols;
        const double mx = *std::max_element(xr, xr + cols);
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += std::exp(xr[c] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = xr[c] - lse;
    }
    return Tensor::make_result("log_softmax", a.shape(), std::move(y), {a},
                               [rows, cols](Node& o) {
        Node& p = *o.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* yr = o.data.data() + r * cols;
            const double* gr = o.grad.data() + r * cols;
            double gs = 0.0;
            for (std::size_t c = 0; c < cols; ++c) gs += gr[c];
            for (std::size_t c = 0; c < cols; ++c)
                g[r * cols + c] += gr[c] - std::exp(yr[c]) * gs;
        }
    });
}

Tensor logsumexp(const Tensor& a) {
    require_rank_at_least(a, 1, "logsumexp");
    const std::size_t cols = a.shape().back();
    if (cols == 0) throw ShapeError("logsumexp over an empty axis");
    const std::size_t rows = a.numel() / cols;
    const auto x = a.data();
    std::vector<double> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * cols;
        const double mx = *std::max_element(xr, xr + cols);
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += std::exp(xr[c] - mx);
        y[r] = mx + std::log(s);
    }
    Shape shape(a.shape().begin(), a.shape().end() - 1);
    return Tensor::make_result("logsumexp", std::move(shape), std::move(y), {a},
                               [rows, cols](Node& o) {
        Node& p = *o.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                g[r * cols + c] += o.grad[r] * std::exp(p.data[r * cols + c] - o.data[r]);
    });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat of an empty list");
    const Shape& first = parts.front().shape();
    if (axis >= first.size())
        throw ShapeError("concat axis " + std::to_string(axis) + " out of range for " +
                         shape_str(first));
    Shape out_shape = first;
    out_shape[axis] = 0;
    std::vector<std::size_t> extents;
    for (const auto& t : parts) {
        const Shape& s = t.shape();
        bool ok = s.size() == first.size();
        for (std::size_t d = 0; ok && d < s.size(); ++d)
            if (d != axis && s[d] != first[d]) ok = false;
        if (!ok) throw ShapeError("concat", first, s);
        out_shape[axis] += s[axis];
        extents.push_back(s[axis]);
    }
    const AxisSplit split = split_at(out_shape, axis);
    std::vector<double> out(shape_numel(out_shape));
    std::size_t offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto src = parts[i].data();
        const std::size_t block = extents[i] * split.inner;
        for (std::size_t o = 0; o < split.outer; ++o)
            std::copy_n(src.data() + o * block, block,
                        out.data() + o * split.extent * split.inner + offset);
        offset += block;
    }
    return Tensor::make_result("concat", std::move(out_shape), std::move(out), parts,
                               [split, extents](Node& o) {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < o.parents.size(); ++i) {
            Node& p = *o.parents[i];
            const std::size_t block = extents[i] * split.inner;
            if (p.requires_grad) {
                auto& g = p.ensure_grad();
                for (std::size_t q = 0; q < split.outer; ++q)
                    K().axpy(block, 1.0,
                             o.grad.data() + q * split.extent * split.inner + offset,
                             g.data() + q * block);
            }
            offset += block;
        }
    });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
    if (axis >= a.rank() || begin > end || end > a.dim(axis))
        throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") on axis " + std::to_string(axis) + " of " + shape_str(a.shape()));
    const AxisSplit split = split_at(a.shape(), axis);
    const std::size_t len = end - begin;
    Shape out_shape = a.shape();
    out_shape[axis] = len;
    std::vector<double> out(shape_numel(out_shape));
    const auto src = a.data();
    const std::size_t block = len * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o)
        std::copy_n(src.data() + (o * split.extent + begin) * split.inner, block,
                    out.data() + o * block);
    return Tensor::make_result("slice", std::move(out_shape), std::move(out), {a},
                               [split, begin, block](Node& o) {
        Node& p = *o.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t q = 0; q < split.outer; ++q)
            K().axpy(block, 1.0, o.grad.data() + q * block,
                     g.data() + (q * split.extent + begin) * split.inner);
    });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return Tensor::make_result("sum", {}, {s}, {a}, [](Node& o) {
        Node& p = *o.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        const double go = o.grad[0];
        for (double& v : g) v += go;
    });
}

Tensor sum(const Tensor& a, std::size_t axis) {
    if (axis >= a.rank())
        throw ShapeError("sum axis " + std::to_string(axis) + " out of range for " +
                         shape_str(a.shape()));
    const AxisSplit split = split_at(a.shape(), axis);
    Shape out_shape = a.shape();
    out_shape.erase(out_shape.begin() + static_cast<long>(axis));
    std::vector<double> out(split.outer * split.inner, 0.0);
    const auto x = a.data();
    for (std::size_t o = 0; o < split.outer; ++o)
        for (std::size_t e = 0; e < split.extent; ++e)
            for (std::size_t i = 0; i < split.inner; ++i)
                out[o * split.inner + i] += x[(o * split.extent + e) * split.inner + i];
    return Tensor::make_result("sum_axis", std::move(out_shape), std::move(out), {a},
                               [split](Node& o) {
        Node& p = *o.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t q = 0; q < split.outer; ++q)
            for (std::size_t e = 0; e < split.extent; ++e)
                K().axpy(split.inner, 1.0, o.grad.data() + q * split.inner,
                         g.data() + (q * split.extent + e) * split.inner);
    });
}

Tensor mean(const Tensor& a) {
    if (a.numel() == 0) throw ShapeError("mean of an empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor broadcast_to(const Tensor& a, const Shape& shape) {
    if (broadcast_shape(a.shape(), shape, "broadcast_to") != shape)
        throw ShapeError("broadcast_to", a.shape(), shape);
    auto offsets = broadcast_offsets(a.shape(), shape);
    std::vector<double> out(offsets.size());
    const auto x = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[offsets[i]];
    return Tensor::make_result("broadcast_to", shape, std::move(out), {a},
                               [offsets = std::move(offsets)](Node& o) {
        Node& p = *o.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < offsets.size(); ++i) g[offsets[i]] += o.grad[i];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) throw ShapeError("reshape", a.shape(), shape);
    std::vector<double> out(a.data().begin(), a.data().end());
    return Tensor::make_result("reshape", std::move(shape), std::move(out), {a}, [](Node& o) {
        accumulate(*o.parents[0], o.grad.data(), o.grad.size());
    });
}

}  // namespace sketchpix
