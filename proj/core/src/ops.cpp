#include "polyhuman/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace polyhuman {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

std::vector<double> copy_of(std::span<const double> s) { return {s.begin(), s.end()}; }

// Index plan mapping each output element of a broadcast to its source elements.
struct BroadcastPlan {
    enum class Kind { Same, ScalarB, ScalarA, SuffixB, SuffixA, General };
    Kind kind = Kind::Same;
    Shape out;
    std::size_t na = 0;
    std::size_t nb = 0;
    std::vector<std::size_t> ia;
    std::vector<std::size_t> ib;

    std::size_t a_index(std::size_t i) const {
        switch (kind) {
        case Kind::Same:
        case Kind::ScalarB:
        case Kind::SuffixB: return i;
        case Kind::ScalarA: return 0;
        case Kind::SuffixA: return i % na;
        case Kind::General: return ia[i];
        }
        return 0;
    }
    std::size_t b_index(std::size_t i) const {
        switch (kind) {
        case Kind::Same:
        case Kind::ScalarA:
        case Kind::SuffixA: return i;
        case Kind::ScalarB: return 0;
        case Kind::SuffixB: return i % nb;
        case Kind::General: return ib[i];
        }
        return 0;
    }
};

Shape strip_leading_ones(const Shape& s) {
    std::size_t k = 0;
    while (k + 1 < s.size() && s[k] == 1) ++k;
    return Shape(s.begin() + static_cast<std::ptrdiff_t>(k), s.end());
}

bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

BroadcastPlan plan_broadcast(const Shape& sa, const Shape& sb) {
    BroadcastPlan p;
    p.out = broadcast_shape(sa, sb);
    p.na = shape_numel(sa);
    p.nb = shape_numel(sb);
    const std::size_t n = shape_numel(p.out);
    using K = BroadcastPlan::Kind;
    if (sa == sb) {
        p.kind = K::Same;
    } else if (p.nb == 1 && p.na == n) {
        p.kind = K::ScalarB;
    } else if (p.na == 1 && p.nb == n) {
        p.kind = K::ScalarA;
    } else if (p.na == n && is_suffix(strip_leading_ones(sb), p.out)) {
        p.kind = K::SuffixB;
    } else if (p.nb == n && is_suffix(strip_leading_ones(sa), p.out)) {
        p.kind = K::SuffixA;
    } else {
        p.kind = K::General;
        const std::size_t rank = p.out.size();
        auto strides_for = [&](const Shape& s) {
            std::vector<std::size_t> st(rank, 0);
            std::size_t acc = 1;
            for (std::size_t i = 0; i < s.size(); ++i) {
                const std::size_t d = s.size() - 1 - i;
                const std::size_t o = rank - 1 - i;
                st[o] = s[d] == 1 ? 0 : acc;
                acc *= s[d];
            }
            return st;
        };
        const auto sta = strides_for(sa);
        const auto stb = strides_for(sb);
        p.ia.resize(n);
        p.ib.resize(n);
        std::vector<std::size_t> idx(rank, 0);
        std::size_t oa = 0;
        std::size_t ob = 0;
        for (std::size_t i = 0; i < n; ++i) {
            p.ia[i] = oa;
            p.ib[i] = ob;
            for (std::size_t d = rank; d-- > 0;) {
                ++idx[d];
                oa += sta[d];
                ob += stb[d];
                if (idx[d] < p.out[d]) break;
                oa -= sta[d] * idx[d];
                ob -= stb[d] * idx[d];
                idx[d] = 0;
            }
        }
    }
    return p;
}

Tensor unary(const Tensor& x, std::string_view name, auto&& f, auto&& df) {
    const auto in = x.data();
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    return make_result(name, x.shape(), std::move(out), {x},
                       [x, df](std::span<const double> y, std::span<const double> g,
                               std::span<const std::span<double>> grads) {
                           const auto xin = x.data();
                           auto gx = grads[0];
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xin[i], y[i]);
                       });
}

double stable_sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

std::size_t prod(const Shape& s, std::size_t begin, std::size_t end) {
    std::size_t p = 1;
    for (std::size_t i = begin; i < end; ++i) p *= s[i];
    return p;
}

void check_axis(const Tensor& x, std::size_t axis, std::string_view op) {
    if (axis >= x.rank()) {
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for " +
                         shape_to_string(x.shape()));
    }
}

} // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank, 1);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t ea = i < a.size() ? a[a.size() - 1 - i] : 1;
        const std::size_t eb = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (ea != eb && ea != 1 && eb != 1) {
            throw ShapeError("shapes " + shape_to_string(a) + " and " + shape_to_string(b) +
                             " are not broadcast-compatible");
        }
        out[rank - 1 - i] = std::max(ea, eb);
    }
    return out;
}

Tensor elementwise(const Tensor& a, const Tensor& b, BinaryOp op) {
    auto plan = std::make_shared<BroadcastPlan>(plan_broadcast(a.shape(), b.shape()));
    const auto da = a.data();
    const auto db = b.data();
    const std::size_t n = shape_numel(plan->out);
    std::vector<double> out(n);
    const char* name = "add";
    switch (op) {
    case BinaryOp::Add:
        for (std::size_t i = 0; i < n; ++i) out[i] = da[plan->a_index(i)] + db[plan->b_index(i)];
        break;
    case BinaryOp::Sub:
        name = "sub";
        for (std::size_t i = 0; i < n; ++i) out[i] = da[plan->a_index(i)] - db[plan->b_index(i)];
        break;
    case BinaryOp::Mul:
        name = "mul";
        for (std::size_t i = 0; i < n; ++i) out[i] = da[plan->a_index(i)] * db[plan->b_index(i)];
        break;
    case BinaryOp::Div:
        name = "div";
        if (finite_checks()) {
            for (double v : db) {
                if (v == 0.0) throw NonFiniteError("div: zero divisor");
            }
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = da[plan->a_index(i)] / db[plan->b_index(i)];
        break;
    }
    return make_result(name, plan->out, std::move(out), {a, b},
                       [a, b, plan, op](std::span<const double>, std::span<const double> g,
                                        std::span<const std::span<double>> grads) {
                           auto ga = grads[0];
                           auto gb = grads[1];
                           const auto va = a.data();
                           const auto vb = b.data();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               const std::size_t ia = plan->a_index(i);
                               const std::size_t ib = plan->b_index(i);
                               switch (op) {
                               case BinaryOp::Add:
                                   if (!ga.empty()) ga[ia] += g[i];
                                   if (!gb.empty()) gb[ib] += g[i];
                                   break;
                               case BinaryOp::Sub:
                                   if (!ga.empty()) ga[ia] += g[i];
                                   if (!gb.empty()) gb[ib] -= g[i];
                                   break;
                               case BinaryOp::Mul:
                                   if (!ga.empty()) ga[ia] += g[i] * vb[ib];
                                   if (!gb.empty()) gb[ib] += g[i] * va[ia];
                                   break;
                               case BinaryOp::Div:
                                   if (!ga.empty()) ga[ia] += g[i] / vb[ib];
                                   if (!gb.empty()) gb[ib] -= g[i] * va[ia] / (vb[ib] * vb[ib]);
                                   break;
                               }
                           }
                       });
}

Tensor add_scalar(const Tensor& x, double s) {
    return unary(x, "add_scalar", [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Tensor scale(const Tensor& x, double s) {
    return unary(x, "scale", [s](double v) { return v * s; }, [s](double, double) { return s; });
}

Tensor activation(const Tensor& x, Activation kind) {
    switch (kind) {
    case Activation::Relu:
        return unary(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
                     [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::Sigmoid:
        return unary(x, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
    case Activation::Softplus:
        return unary(x, "softplus",
                     [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
                     [](double v, double) { return stable_sigmoid(v); });
    case Activation::Sin:
        return unary(x, "sin", [](double v) { return std::sin(v); },
                     [](double v, double) { return std::cos(v); });
    case Activation::Cos:
        return unary(x, "cos", [](double v) { return std::cos(v); },
                     [](double v, double) { return -std::sin(v); });
    case Activation::Exp:
        return unary(x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
    }
    throw std::invalid_argument("unknown activation");
}

Tensor log(const Tensor& x) {
    return unary(x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor square(const Tensor& x) {
    return unary(x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor abs(const Tensor& x) {
    return unary(x, "abs", [](double v) { return std::abs(v); },
                 [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: inner dimensions differ for " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
    }
    const auto m = static_cast<Eigen::Index>(a.dim(0));
    const auto k = static_cast<Eigen::Index>(a.dim(1));
    const auto n = static_cast<Eigen::Index>(b.dim(1));
    std::vector<double> out(static_cast<std::size_t>(m * n));
    MatMap c(out.data(), m, n);
    c.noalias() = ConstMatMap(a.data().data(), m, k) * ConstMatMap(b.data().data(), k, n);
    return make_result("matmul", {a.dim(0), b.dim(1)}, std::move(out), {a, b},
                       [a, b, m, k, n](std::span<const double>, std::span<const double> g,
                                       std::span<const std::span<double>> grads) {
                           ConstMatMap gc(g.data(), m, n);
                           if (!grads[0].empty()) {
                               MatMap ga(grads[0].data(), m, k);
                               ga.noalias() += gc * ConstMatMap(b.data().data(), k, n).transpose();
                           }
                           if (!grads[1].empty()) {
                               MatMap gb(grads[1].data(), k, n);
                               gb.noalias() += ConstMatMap(a.data().data(), m, k).transpose() * gc;
                           }
                       });
}

Tensor transpose(const Tensor& x) {
    if (x.rank() != 2) throw ShapeError("transpose: expected a matrix, got " + shape_to_string(x.shape()));
    const std::size_t r = x.dim(0);
    const std::size_t c = x.dim(1);
    const auto in = x.data();
    std::vector<double> out(r * c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
    return make_result("transpose", {c, r}, std::move(out), {x},
                       [r, c](std::span<const double>, std::span<const double> g,
                              std::span<const std::span<double>> grads) {
                           auto gx = grads[0];
                           for (std::size_t i = 0; i < r; ++i)
                               for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
                       });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    check_axis(x, axis, "softmax");
    const auto& s = x.shape();
    const std::size_t outer = prod(s, 0, axis);
    const std::size_t len = s[axis];
    const std::size_t inner = prod(s, axis + 1, s.size());
    const auto in = x.data();
    std::vector<double> out(in.size());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * len * inner + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < len; ++j) mx = std::max(mx, in[base + j * inner]);
            double total = 0.0;
            for (std::size_t j = 0; j < len; ++j) {
                const double e = std::exp(in[base + j * inner] - mx);
                out[base + j * inner] = e;
                total += e;
            }
            for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= total;
        }
    }
    return make_result("softmax", s, std::move(out), {x},
                       [outer, len, inner](std::span<const double> y, std::span<const double> g,
                                           std::span<const std::span<double>> grads) {
                           auto gx = grads[0];
                           for (std::size_t o = 0; o < outer; ++o) {
                               for (std::size_t i = 0; i < inner; ++i) {
                                   const std::size_t base = o * len * inner + i;
                                   double dot = 0.0;
                                   for (std::size_t j = 0; j < len; ++j)
                                       dot += g[base + j * inner] * y[base + j * inner];
                                   for (std::size_t j = 0; j < len; ++j) {
                                       const std::size_t p = base + j * inner;
                                       gx[p] += y[p] * (g[p] - dot);
                                   }
                               }
                           }
                       });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no parts");
    std::vector<Tensor> live;
    for (const auto& p : parts) {
        if (p.numel() > 0) live.push_back(p);
    }
    if (live.empty()) return parts.front();
    if (live.size() == 1) return live.front();
    check_axis(live.front(), axis, "concat");
    Shape out_shape = live.front().shape();
    std::size_t total = 0;
    for (const auto& p : live) {
        if (p.rank() != out_shape.size()) throw ShapeError("concat: rank mismatch");
        for (std::size_t d = 0; d < out_shape.size(); ++d) {
            if (d != axis && p.shape()[d] != out_shape[d]) {
                throw ShapeError("concat: extent mismatch on axis " + std::to_string(d) + " between " +
                                 shape_to_string(out_shape) + " and " + shape_to_string(p.shape()));
            }
        }
        total += p.shape()[axis];
    }
    out_shape[axis] = total;
    const std::size_t outer = prod(out_shape, 0, axis);
    const std::size_t inner = prod(out_shape, axis + 1, out_shape.size());
    std::vector<std::size_t> widths;
    for (const auto& p : live) widths.push_back(p.shape()[axis] * inner);
    const std::size_t row = total * inner;
    std::vector<double> out(outer * row);
    std::size_t offset = 0;
    for (std::size_t pi = 0; pi < live.size(); ++pi) {
        const auto src = live[pi].data();
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(o * widths[pi]), widths[pi],
                        out.begin() + static_cast<std::ptrdiff_t>(o * row + offset));
        offset += widths[pi];
    }
    return make_result("concat", out_shape, std::move(out), live,
                       [outer, row, widths](std::span<const double>, std::span<const double> g,
                                            std::span<const std::span<double>> grads) {
                           std::size_t off = 0;
                           for (std::size_t pi = 0; pi < widths.size(); ++pi) {
                               auto gp = grads[pi];
                               if (!gp.empty()) {
                                   for (std::size_t o = 0; o < outer; ++o)
                                       for (std::size_t j = 0; j < widths[pi]; ++j)
                                           gp[o * widths[pi] + j] += g[o * row + off + j];
                               }
                               off += widths[pi];
                           }
                       });
}

Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
    check_axis(x, axis, "narrow");
    const auto& s = x.shape();
    if (start + length > s[axis]) {
        throw ShapeError("narrow: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                         ") exceeds extent " + std::to_string(s[axis]));
    }
    Shape out_shape = s;
    out_shape[axis] = length;
    const std::size_t outer = prod(s, 0, axis);
    const std::size_t inner = prod(s, axis + 1, s.size());
    const std::size_t src_row = s[axis] * inner;
    const std::size_t dst_row = length * inner;
    const std::size_t off = start * inner;
    const auto in = x.data();
    std::vector<double> out(outer * dst_row);
    for (std::size_t o = 0; o < outer; ++o)
        std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(o * src_row + off), dst_row,
                    out.begin() + static_cast<std::ptrdiff_t>(o * dst_row));
    return make_result("narrow", out_shape, std::move(out), {x},
                       [outer, src_row, dst_row, off](std::span<const double>, std::span<const double> g,
                                                      std::span<const std::span<double>> grads) {
                           auto gx = grads[0];
                           for (std::size_t o = 0; o < outer; ++o)
                               for (std::size_t j = 0; j < dst_row; ++j) gx[o * src_row + off + j] += g[o * dst_row + j];
                       });
}

std::vector<Tensor> split(const Tensor& x, std::size_t axis, const std::vector<std::size_t>& sizes) {
    check_axis(x, axis, "split");
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total != x.dim(axis)) {
        throw ShapeError("split: sizes sum to " + std::to_string(total) + " but extent is " +
                         std::to_string(x.dim(axis)));
    }
    std::vector<Tensor> out;
    std::size_t start = 0;
    for (auto n : sizes) {
        out.push_back(narrow(x, axis, start, n));
        start += n;
    }
    return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        throw ShapeError("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
    }
    return make_result("reshape", std::move(shape), copy_of(x.data()), {x},
                       [](std::span<const double>, std::span<const double> g,
                          std::span<const std::span<double>> grads) {
                           auto gx = grads[0];
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                       });
}

Tensor reduce(const Tensor& x, Reduction op, std::optional<std::size_t> axis, bool keepdim) {
    const auto& s = x.shape();
    std::size_t outer = 1;
    std::size_t len = x.numel();
    std::size_t inner = 1;
    Shape out_shape{1};
    if (axis) {
        check_axis(x, *axis, "reduce");
        outer = prod(s, 0, *axis);
        len = s[*axis];
        inner = prod(s, *axis + 1, s.size());
        out_shape = s;
        if (keepdim) {
            out_shape[*axis] = 1;
        } else {
            out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(*axis));
            if (out_shape.empty()) out_shape = {1};
        }
    }
    if (len == 0) throw ShapeError("reduce: empty extent");
    const auto in = x.data();
    std::vector<double> out(outer * inner);
    auto argmax = std::make_shared<std::vector<std::size_t>>();
    if (op == Reduction::Max) argmax->resize(outer * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * len * inner + i;
            double acc = op == Reduction::Max ? -std::numeric_limits<double>::infinity() : 0.0;
            std::size_t best = 0;
            for (std::size_t j = 0; j < len; ++j) {
                const double v = in[base + j * inner];
                if (op == Reduction::Max) {
                    if (v > acc) {
                        acc = v;
                        best = j;
                    }
                } else {
                    acc += v;
                }
            }
            if (op == Reduction::Mean) acc /= static_cast<double>(len);
            out[o * inner + i] = acc;
            if (op == Reduction::Max) (*argmax)[o * inner + i] = best;
        }
    }
    const char* name = op == Reduction::Sum ? "sum" : (op == Reduction::Mean ? "mean" : "max");
    return make_result(name, std::move(out_shape), std::move(out), {x},
                       [op, outer, len, inner, argmax](std::span<const double>, std::span<const double> g,
                                                       std::span<const std::span<double>> grads) {
                           auto gx = grads[0];
                           const double w = op == Reduction::Mean ? 1.0 / static_cast<double>(len) : 1.0;
                           for (std::size_t o = 0; o < outer; ++o) {
                               for (std::size_t i = 0; i < inner; ++i) {
                                   const double gi = g[o * inner + i];
                                   const std::size_t base = o * len * inner + i;
                                   if (op == Reduction::Max) {
                                       gx[base + (*argmax)[o * inner + i] * inner] += gi;
                                   } else {
                                       for (std::size_t j = 0; j < len; ++j) gx[base + j * inner] += gi * w;
                                   }
                               }
                           }
                       });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices) {
    if (x.rank() == 0) throw ShapeError("gather_rows: scalar input");
    const std::size_t rows = x.dim(0);
    const std::size_t width = rows ? x.numel() / rows : 0;
    Shape out_shape = x.shape();
    out_shape[0] = indices.size();
    const auto in = x.data();
    std::vector<double> out(indices.size() * width);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= rows) throw ShapeError("gather_rows: index out of range");
        std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(indices[r] * width), width,
                    out.begin() + static_cast<std::ptrdiff_t>(r * width));
    }
    return make_result("gather_rows", std::move(out_shape), std::move(out), {x},
                       [indices, width](std::span<const double>, std::span<const double> g,
                                        std::span<const std::span<double>> grads) {
                           auto gx = grads[0];
                           for (std::size_t r = 0; r < indices.size(); ++r)
                               for (std::size_t j = 0; j < width; ++j) gx[indices[r] * width + j] += g[r * width + j];
                       });
}

Tensor scatter_rows(const Tensor& x, const std::vector<std::size_t>& indices, std::size_t rows) {
    if (x.rank() == 0 || x.dim(0) != indices.size()) {
        throw ShapeError("scatter_rows: need one index per row of " + shape_to_string(x.shape()));
    }
    const std::size_t width = indices.empty() ? shape_numel(Shape(x.shape().begin() + 1, x.shape().end()))
                                              : x.numel() / indices.size();
    Shape out_shape = x.shape();
    out_shape[0] = rows;
    const auto in = x.data();
    std::vector<double> out(rows * width, 0.0);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= rows) throw ShapeError("scatter_rows: index out of range");
        std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(r * width), width,
                    out.begin() + static_cast<std::ptrdiff_t>(indices[r] * width));
    }
    return make_result("scatter_rows", std::move(out_shape), std::move(out), {x},
                       [indices, width](std::span<const double>, std::span<const double> g,
                                        std::span<const std::span<double>> grads) {
                           auto gx = grads[0];
                           for (std::size_t r = 0; r < indices.size(); ++r)
                               for (std::size_t j = 0; j < width; ++j) gx[r * width + j] += g[indices[r] * width + j];
                       });
}

} // namespace polyhuman
