#include "rf/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace rf {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

std::shared_ptr<TensorData> fresh(Shape shape, std::vector<double> values) {
    auto d = std::make_shared<TensorData>();
    d->shape = std::move(shape);
    d->values = std::move(values);
    return d;
}

bool any_requires_grad(const std::vector<Tensor>& ts) {
    for (const auto& t : ts)
        if (t.requires_grad()) return true;
    return false;
}

// Records the op on the active tape when tracking applies and marks the
// output as gradient-carrying.
Tensor finish(const char* op, const std::vector<Tensor>& inputs,
              std::shared_ptr<TensorData> out,
              std::function<void(TapeNode&)> backward) {
    Tape* tape = Tape::active();
    if (tape != nullptr && any_requires_grad(inputs)) {
        out->requires_grad = true;
        TapeNode node;
        node.op = op;
        for (const auto& t : inputs) node.inputs.push_back(t.impl());
        node.out = out;
        node.backward = std::move(backward);
        tape->record(std::move(node));
    }
    return Tensor(std::move(out));
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}

// Right-operand broadcast: identical shape, or equal rank with a matching
// prefix and singleton trailing axes. Returns the contiguous block size of
// the left operand covered by one right element.
int64_t broadcast_block(const char* op, const Shape& a, const Shape& b) {
    if (a == b) return 1;
    if (a.size() != b.size()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
    }
    size_t p = 0;
    while (p < a.size() && a[p] == b[p]) ++p;
    int64_t block = 1;
    for (size_t i = p; i < b.size(); ++i) {
        if (b[i] != 1) {
            throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                             shape_str(b) + " (only trailing singleton axes broadcast)");
        }
        block *= a[i];
    }
    return block;
}

struct AxisSplit {
    int64_t outer, n, inner;
};

AxisSplit split_axis(const char* op, const Shape& s, int64_t axis) {
    if (axis < 0 || axis >= static_cast<int64_t>(s.size())) {
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(s));
    }
    AxisSplit sp{1, s[static_cast<size_t>(axis)], 1};
    for (int64_t i = 0; i < axis; ++i) sp.outer *= s[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i) sp.inner *= s[i];
    return sp;
}

Tensor unary_map(const char* op, const Tensor& x, double (*f)(double),
                 double (*df_from_in_out)(double, double)) {
    const auto& xv = x.impl()->values;
    std::vector<double> out(xv.size());
    for (size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
    auto od = fresh(x.shape(), std::move(out));
    return finish(op, {x}, od, [df_from_in_out](TapeNode& n) {
        const auto& g = n.out->grad;
        const auto& xin = n.inputs[0]->values;
        const auto& yout = n.out->values;
        n.inputs[0]->ensure_grad();
        auto& gx = n.inputs[0]->grad;
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df_from_in_out(xin[i], yout[i]);
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    const auto& av = a.impl()->values;
    const auto& bv = b.impl()->values;
    std::vector<double> out(av.size());
    for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    auto od = fresh(a.shape(), std::move(out));
    return finish("add", {a, b}, od, [](TapeNode& n) {
        const auto& g = n.out->grad;
        for (int k = 0; k < 2; ++k) {
            if (!n.inputs[static_cast<size_t>(k)]->requires_grad) continue;
            n.inputs[static_cast<size_t>(k)]->accumulate(g);
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    const auto& av = a.impl()->values;
    const auto& bv = b.impl()->values;
    std::vector<double> out(av.size());
    for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
    auto od = fresh(a.shape(), std::move(out));
    return finish("sub", {a, b}, od, [](TapeNode& n) {
        const auto& g = n.out->grad;
        if (n.inputs[0]->requires_grad) n.inputs[0]->accumulate(g);
        if (n.inputs[1]->requires_grad) {
            n.inputs[1]->ensure_grad();
            auto& gb = n.inputs[1]->grad;
            for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    const int64_t block = broadcast_block("mul", a.shape(), b.shape());
    const auto& av = a.impl()->values;
    const auto& bv = b.impl()->values;
    std::vector<double> out(av.size());
    for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[static_cast<size_t>(i / block)];
    auto od = fresh(a.shape(), std::move(out));
    return finish("mul", {a, b}, od, [block](TapeNode& n) {
        const auto& g = n.out->grad;
        const auto& av = n.inputs[0]->values;
        const auto& bv = n.inputs[1]->values;
        if (n.inputs[0]->requires_grad) {
            n.inputs[0]->ensure_grad();
            auto& ga = n.inputs[0]->grad;
            for (size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] * bv[static_cast<size_t>(static_cast<int64_t>(i) / block)];
        }
        if (n.inputs[1]->requires_grad) {
            n.inputs[1]->ensure_grad();
            auto& gb = n.inputs[1]->grad;
            for (size_t i = 0; i < g.size(); ++i)
                gb[static_cast<size_t>(static_cast<int64_t>(i) / block)] += g[i] * av[i];
        }
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    const int64_t block = broadcast_block("div", a.shape(), b.shape());
    const auto& av = a.impl()->values;
    const auto& bv = b.impl()->values;
    std::vector<double> out(av.size());
    for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] / bv[static_cast<size_t>(i / block)];
    auto od = fresh(a.shape(), std::move(out));
    return finish("div", {a, b}, od, [block](TapeNode& n) {
        const auto& g = n.out->grad;
        const auto& av = n.inputs[0]->values;
        const auto& bv = n.inputs[1]->values;
        if (n.inputs[0]->requires_grad) {
            n.inputs[0]->ensure_grad();
            auto& ga = n.inputs[0]->grad;
            for (size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] / bv[static_cast<size_t>(static_cast<int64_t>(i) / block)];
        }
        if (n.inputs[1]->requires_grad) {
            n.inputs[1]->ensure_grad();
            auto& gb = n.inputs[1]->grad;
            for (size_t i = 0; i < g.size(); ++i) {
                const auto j = static_cast<size_t>(static_cast<int64_t>(i) / block);
                gb[j] -= g[i] * av[i] / (bv[j] * bv[j]);
            }
        }
    });
}

Tensor affine(const Tensor& x, double a, double b) {
    const auto& xv = x.impl()->values;
    std::vector<double> out(xv.size());
    for (size_t i = 0; i < xv.size(); ++i) out[i] = a * xv[i] + b;
    auto od = fresh(x.shape(), std::move(out));
    return finish("affine", {x}, od, [a](TapeNode& n) {
        const auto& g = n.out->grad;
        n.inputs[0]->ensure_grad();
        auto& gx = n.inputs[0]->grad;
        for (size_t i = 0; i < g.size(); ++i) gx[i] += a * g[i];
    });
}

static void check_row_vector(const char* op, const Tensor& x, const Tensor& v) {
    if (v.rank() != 1 || x.rank() < 1 || x.shape().back() != v.shape()[0]) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(x.shape()) +
                         " vs " + shape_str(v.shape()));
    }
}

Tensor add_rowwise(const Tensor& x, const Tensor& bias) {
    check_row_vector("add_rowwise", x, bias);
    const auto& xv = x.impl()->values;
    const auto& bv = bias.impl()->values;
    const size_t d = bv.size();
    std::vector<double> out(xv.size());
    for (size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] + bv[i % d];
    auto od = fresh(x.shape(), std::move(out));
    return finish("add_rowwise", {x, bias}, od, [d](TapeNode& n) {
        const auto& g = n.out->grad;
        if (n.inputs[0]->requires_grad) n.inputs[0]->accumulate(g);
        if (n.inputs[1]->requires_grad) {
            n.inputs[1]->ensure_grad();
            auto& gb = n.inputs[1]->grad;
            for (size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i];
        }
    });
}

Tensor mul_rowwise(const Tensor& x, const Tensor& scale) {
    check_row_vector("mul_rowwise", x, scale);
    const auto& xv = x.impl()->values;
    const auto& sv = scale.impl()->values;
    const size_t d = sv.size();
    std::vector<double> out(xv.size());
    for (size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * sv[i % d];
    auto od = fresh(x.shape(), std::move(out));
    return finish("mul_rowwise", {x, scale}, od, [d](TapeNode& n) {
        const auto& g = n.out->grad;
        const auto& xv = n.inputs[0]->values;
        const auto& sv = n.inputs[1]->values;
        if (n.inputs[0]->requires_grad) {
            n.inputs[0]->ensure_grad();
            auto& gx = n.inputs[0]->grad;
            for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * sv[i % d];
        }
        if (n.inputs[1]->requires_grad) {
            n.inputs[1]->ensure_grad();
            auto& gs = n.inputs[1]->grad;
            for (size_t i = 0; i < g.size(); ++i) gs[i % d] += g[i] * xv[i];
        }
    });
}

namespace {

// C[MxN] += A[MxK] * B[KxN]
void gemm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[MxK] += G[MxN] * B^T, with B[KxN]
void gemm_nt(const double* g, const double* b, double* c, int64_t m, int64_t n, int64_t k) {
    for (int64_t i = 0; i < m; ++i) {
        const double* grow = g + i * n;
        double* crow = c + i * k;
        for (int64_t p = 0; p < k; ++p) {
            const double* brow = b + p * n;
            double s = 0.0;
            for (int64_t j = 0; j < n; ++j) s += grow[j] * brow[j];
            crow[p] += s;
        }
    }
}

// C[KxN] += A^T * G, with A[MxK], G[MxN]
void gemm_tn(const double* a, const double* g, double* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        const double* grow = g + i * n;
        for (int64_t p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * grow[j];
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    }
    const int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out(static_cast<size_t>(m * n), 0.0);
    gemm_nn(a.impl()->values.data(), b.impl()->values.data(), out.data(), m, k, n);
    auto od = fresh({m, n}, std::move(out));
    return finish("matmul", {a, b}, od, [m, k, n](TapeNode& nd) {
        const auto& g = nd.out->grad;
        if (nd.inputs[0]->requires_grad) {
            nd.inputs[0]->ensure_grad();
            gemm_nt(g.data(), nd.inputs[1]->values.data(), nd.inputs[0]->grad.data(), m, n, k);
        }
        if (nd.inputs[1]->requires_grad) {
            nd.inputs[1]->ensure_grad();
            gemm_tn(nd.inputs[0]->values.data(), g.data(), nd.inputs[1]->grad.data(), m, k, n);
        }
    });
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) {
        throw ShapeError("transpose2d: expected rank-2 tensor, got " + shape_str(a.shape()));
    }
    const int64_t m = a.shape()[0], n = a.shape()[1];
    const auto& av = a.impl()->values;
    std::vector<double> out(av.size());
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j)
            out[static_cast<size_t>(j * m + i)] = av[static_cast<size_t>(i * n + j)];
    auto od = fresh({n, m}, std::move(out));
    return finish("transpose2d", {a}, od, [m, n](TapeNode& nd) {
        const auto& g = nd.out->grad;
        nd.inputs[0]->ensure_grad();
        auto& ga = nd.inputs[0]->grad;
        for (int64_t j = 0; j < n; ++j)
            for (int64_t i = 0; i < m; ++i)
                ga[static_cast<size_t>(i * n + j)] += g[static_cast<size_t>(j * m + i)];
    });
}

Tensor reshape(const Tensor& x, Shape new_shape) {
    if (shape_numel(new_shape) != x.numel()) {
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(new_shape));
    }
    auto od = fresh(std::move(new_shape), x.impl()->values);
    return finish("reshape", {x}, od, [](TapeNode& n) {
        n.inputs[0]->accumulate(n.out->grad);
    });
}

Tensor concat(const std::vector<Tensor>& parts, int64_t axis) {
    if (parts.empty()) throw UsageError("concat: no operands");
    const Shape& first = parts[0].shape();
    AxisSplit sp = split_axis("concat", first, axis);
    int64_t total_axis = 0;
    for (const auto& p : parts) {
        if (p.rank() != parts[0].rank()) {
            throw ShapeError("concat: rank mismatch " + shape_str(first) + " vs " +
                             shape_str(p.shape()));
        }
        for (int64_t i = 0; i < p.rank(); ++i) {
            if (i != axis && p.shape()[static_cast<size_t>(i)] != first[static_cast<size_t>(i)]) {
                throw ShapeError("concat: shape mismatch " + shape_str(first) + " vs " +
                                 shape_str(p.shape()));
            }
        }
        total_axis += p.shape()[static_cast<size_t>(axis)];
    }
    Shape out_shape = first;
    out_shape[static_cast<size_t>(axis)] = total_axis;
    std::vector<double> out(static_cast<size_t>(shape_numel(out_shape)));
    std::vector<int64_t> offsets;
    int64_t off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        const int64_t pn = p.shape()[static_cast<size_t>(axis)];
        const auto& pv = p.impl()->values;
        for (int64_t o = 0; o < sp.outer; ++o) {
            std::memcpy(out.data() + (o * total_axis + off) * sp.inner,
                        pv.data() + o * pn * sp.inner,
                        static_cast<size_t>(pn * sp.inner) * sizeof(double));
        }
        off += pn;
    }
    auto od = fresh(std::move(out_shape), std::move(out));
    std::vector<Tensor> inputs = parts;
    return finish("concat", inputs, od, [sp, total_axis, offsets](TapeNode& n) {
        const auto& g = n.out->grad;
        for (size_t pi = 0; pi < n.inputs.size(); ++pi) {
            auto& in = n.inputs[pi];
            if (!in->requires_grad) continue;
            in->ensure_grad();
            const int64_t pn = static_cast<int64_t>(in->values.size()) / (sp.outer * sp.inner);
            for (int64_t o = 0; o < sp.outer; ++o) {
                const double* src = g.data() + (o * total_axis + offsets[pi]) * sp.inner;
                double* dst = in->grad.data() + o * pn * sp.inner;
                for (int64_t i = 0; i < pn * sp.inner; ++i) dst[i] += src[i];
            }
        }
    });
}

Tensor slice(const Tensor& x, int64_t axis, int64_t start, int64_t len) {
    AxisSplit sp = split_axis("slice", x.shape(), axis);
    if (start < 0 || len < 0 || start + len > sp.n) {
        throw ShapeError("slice: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") out of bounds for axis extent " +
                         std::to_string(sp.n));
    }
    Shape out_shape = x.shape();
    out_shape[static_cast<size_t>(axis)] = len;
    std::vector<double> out(static_cast<size_t>(sp.outer * len * sp.inner));
    const auto& xv = x.impl()->values;
    for (int64_t o = 0; o < sp.outer; ++o) {
        std::memcpy(out.data() + o * len * sp.inner,
                    xv.data() + (o * sp.n + start) * sp.inner,
                    static_cast<size_t>(len * sp.inner) * sizeof(double));
    }
    auto od = fresh(std::move(out_shape), std::move(out));
    return finish("slice", {x}, od, [sp, start, len](TapeNode& n) {
        const auto& g = n.out->grad;
        n.inputs[0]->ensure_grad();
        auto& gx = n.inputs[0]->grad;
        for (int64_t o = 0; o < sp.outer; ++o) {
            const double* src = g.data() + o * len * sp.inner;
            double* dst = gx.data() + (o * sp.n + start) * sp.inner;
            for (int64_t i = 0; i < len * sp.inner; ++i) dst[i] += src[i];
        }
    });
}

Tensor reduce_sum(const Tensor& x) {
    const auto& xv = x.impl()->values;
    double s = 0.0;
    for (double v : xv) s += v;
    auto od = fresh({1}, {s});
    return finish("reduce_sum", {x}, od, [](TapeNode& n) {
        const double g = n.out->grad[0];
        n.inputs[0]->ensure_grad();
        for (auto& gv : n.inputs[0]->grad) gv += g;
    });
}

Tensor reduce_sum(const Tensor& x, int64_t axis, bool keepdim) {
    AxisSplit sp = split_axis("reduce_sum", x.shape(), axis);
    Shape out_shape;
    for (int64_t i = 0; i < x.rank(); ++i) {
        if (i == axis) {
            if (keepdim) out_shape.push_back(1);
        } else {
            out_shape.push_back(x.shape()[static_cast<size_t>(i)]);
        }
    }
    if (out_shape.empty()) out_shape.push_back(1);
    std::vector<double> out(static_cast<size_t>(sp.outer * sp.inner), 0.0);
    const auto& xv = x.impl()->values;
    for (int64_t o = 0; o < sp.outer; ++o)
        for (int64_t a = 0; a < sp.n; ++a)
            for (int64_t i = 0; i < sp.inner; ++i)
                out[static_cast<size_t>(o * sp.inner + i)] +=
                    xv[static_cast<size_t>((o * sp.n + a) * sp.inner + i)];
    auto od = fresh(std::move(out_shape), std::move(out));
    return finish("reduce_sum_axis", {x}, od, [sp](TapeNode& n) {
        const auto& g = n.out->grad;
        n.inputs[0]->ensure_grad();
        auto& gx = n.inputs[0]->grad;
        for (int64_t o = 0; o < sp.outer; ++o)
            for (int64_t a = 0; a < sp.n; ++a)
                for (int64_t i = 0; i < sp.inner; ++i)
                    gx[static_cast<size_t>((o * sp.n + a) * sp.inner + i)] +=
                        g[static_cast<size_t>(o * sp.inner + i)];
    });
}

Tensor reduce_mean(const Tensor& x) {
    Tensor s = reduce_sum(x);
    return affine(s, 1.0 / static_cast<double>(x.numel()), 0.0);
}

Tensor reduce_mean(const Tensor& x, int64_t axis, bool keepdim) {
    const int64_t n = x.shape()[static_cast<size_t>(axis)];
    Tensor s = reduce_sum(x, axis, keepdim);
    return affine(s, 1.0 / static_cast<double>(n), 0.0);
}

Tensor exp(const Tensor& x) {
    return unary_map("exp", x, [](double v) { return std::exp(v); },
                     [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
    for (double v : x.impl()->values) {
        if (v <= 0.0) {
            throw UsageError("log: non-positive input " + std::to_string(v));
        }
    }
    return unary_map("log", x, [](double v) { return std::log(v); },
                     [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(const Tensor& x) {
    for (double v : x.impl()->values) {
        if (v < 0.0) {
            throw UsageError("sqrt: negative input " + std::to_string(v));
        }
    }
    return unary_map("sqrt", x, [](double v) { return std::sqrt(v); },
                     [](double, double y) { return 0.5 / y; });
}

Tensor tanh(const Tensor& x) {
    return unary_map("tanh", x, [](double v) { return std::tanh(v); },
                     [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& x) {
    return unary_map(
        "gelu", x,
        [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
        [](double v, double) {
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            return cdf + v * pdf;
        });
}

Tensor softmax(const Tensor& x, int64_t axis) {
    AxisSplit sp = split_axis("softmax", x.shape(), axis);
    const auto& xv = x.impl()->values;
    std::vector<double> out(xv.size());
    for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t i = 0; i < sp.inner; ++i) {
            const int64_t base = o * sp.n * sp.inner + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (int64_t a = 0; a < sp.n; ++a)
                mx = std::max(mx, xv[static_cast<size_t>(base + a * sp.inner)]);
            double sum = 0.0;
            for (int64_t a = 0; a < sp.n; ++a) {
                const double e = std::exp(xv[static_cast<size_t>(base + a * sp.inner)] - mx);
                out[static_cast<size_t>(base + a * sp.inner)] = e;
                sum += e;
            }
            for (int64_t a = 0; a < sp.n; ++a)
                out[static_cast<size_t>(base + a * sp.inner)] /= sum;
        }
    }
    auto od = fresh(x.shape(), std::move(out));
    return finish("softmax", {x}, od, [sp](TapeNode& n) {
        const auto& g = n.out->grad;
        const auto& y = n.out->values;
        n.inputs[0]->ensure_grad();
        auto& gx = n.inputs[0]->grad;
        for (int64_t o = 0; o < sp.outer; ++o) {
            for (int64_t i = 0; i < sp.inner; ++i) {
                const int64_t base = o * sp.n * sp.inner + i;
                double dot = 0.0;
                for (int64_t a = 0; a < sp.n; ++a) {
                    const auto idx = static_cast<size_t>(base + a * sp.inner);
                    dot += g[idx] * y[idx];
                }
                for (int64_t a = 0; a < sp.n; ++a) {
                    const auto idx = static_cast<size_t>(base + a * sp.inner);
                    gx[idx] += y[idx] * (g[idx] - dot);
                }
            }
        }
    });
}

Tensor gather_rows(const Tensor& x, const std::vector<int64_t>& idx) {
    if (x.rank() < 1) throw ShapeError("gather_rows: rank-0 input");
    const int64_t rows = x.shape()[0];
    const int64_t stride = x.numel() / rows;
    for (int64_t i : idx) {
        if (i < 0 || i >= rows) {
            throw UsageError("gather_rows: index " + std::to_string(i) +
                             " out of range [0," + std::to_string(rows) + ")");
        }
    }
    Shape out_shape = x.shape();
    out_shape[0] = static_cast<int64_t>(idx.size());
    std::vector<double> out(static_cast<size_t>(stride) * idx.size());
    const auto& xv = x.impl()->values;
    for (size_t r = 0; r < idx.size(); ++r) {
        std::memcpy(out.data() + r * static_cast<size_t>(stride),
                    xv.data() + static_cast<size_t>(idx[r] * stride),
                    static_cast<size_t>(stride) * sizeof(double));
    }
    auto od = fresh(std::move(out_shape), std::move(out));
    return finish("gather_rows", {x}, od, [idx, stride](TapeNode& n) {
        const auto& g = n.out->grad;
        n.inputs[0]->ensure_grad();
        auto& gx = n.inputs[0]->grad;
        for (size_t r = 0; r < idx.size(); ++r) {
            const double* src = g.data() + r * static_cast<size_t>(stride);
            double* dst = gx.data() + static_cast<size_t>(idx[r] * stride);
            for (int64_t i = 0; i < stride; ++i) dst[i] += src[i];
        }
    });
}

Tensor rope_rotate(const Tensor& x, const Tensor& cos_v, const Tensor& sin_v) {
    if (x.rank() < 1 || x.shape().back() % 2 != 0) {
        throw ShapeError("rope_rotate: last axis must be even, got " + shape_str(x.shape()));
    }
    if (cos_v.shape() != sin_v.shape() || cos_v.numel() * 2 != x.numel()) {
        throw ShapeError("rope_rotate: phase shape " + shape_str(cos_v.shape()) +
                         " does not pair with " + shape_str(x.shape()));
    }
    if (cos_v.requires_grad() || sin_v.requires_grad()) {
        throw UsageError("rope_rotate: phases are constants and cannot carry gradients");
    }
    const auto& xv = x.impl()->values;
    const auto& cv = cos_v.impl()->values;
    const auto& sv = sin_v.impl()->values;
    std::vector<double> out(xv.size());
    for (size_t p = 0; p < cv.size(); ++p) {
        const double e = xv[2 * p], o = xv[2 * p + 1];
        out[2 * p] = e * cv[p] - o * sv[p];
        out[2 * p + 1] = e * sv[p] + o * cv[p];
    }
    auto od = fresh(x.shape(), std::move(out));
    return finish("rope_rotate", {x, cos_v, sin_v}, od, [](TapeNode& n) {
        const auto& g = n.out->grad;
        const auto& cv = n.inputs[1]->values;
        const auto& sv = n.inputs[2]->values;
        n.inputs[0]->ensure_grad();
        auto& gx = n.inputs[0]->grad;
        for (size_t p = 0; p < cv.size(); ++p) {
            const double ge = g[2 * p], go = g[2 * p + 1];
            gx[2 * p] += ge * cv[p] + go * sv[p];
            gx[2 * p + 1] += -ge * sv[p] + go * cv[p];
        }
    });
}

bool all_finite(const Tensor& x) {
    for (double v : x.impl()->values)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace rf
