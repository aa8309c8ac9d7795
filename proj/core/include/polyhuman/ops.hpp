#pragma once

#include "polyhuman/tensor.hpp"

#include <optional>
#include <vector>

namespace polyhuman {

// Binary elementwise ops broadcast on trailing dimensions: shapes are aligned
// at the right and an extent may pair with 1 (or be missing on the left).
enum class BinaryOp { Add, Sub, Mul, Div };

Tensor elementwise(const Tensor& a, const Tensor& b, BinaryOp op);
Shape broadcast_shape(const Shape& a, const Shape& b);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, BinaryOp::Add); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, BinaryOp::Sub); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, BinaryOp::Mul); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(a, b, BinaryOp::Div); }

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

Tensor add_scalar(const Tensor& x, double s);
Tensor scale(const Tensor& x, double s);
inline Tensor neg(const Tensor& x) { return scale(x, -1.0); }
inline Tensor operator-(const Tensor& x) { return neg(x); }
inline Tensor operator*(const Tensor& x, double s) { return scale(x, s); }
inline Tensor operator*(double s, const Tensor& x) { return scale(x, s); }
inline Tensor operator+(const Tensor& x, double s) { return add_scalar(x, s); }

enum class Activation { Relu, Sigmoid, Softplus, Sin, Cos, Exp };

Tensor activation(const Tensor& x, Activation kind);
inline Tensor relu(const Tensor& x) { return activation(x, Activation::Relu); }
inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::Sigmoid); }
inline Tensor softplus(const Tensor& x) { return activation(x, Activation::Softplus); }
inline Tensor sin(const Tensor& x) { return activation(x, Activation::Sin); }
inline Tensor cos(const Tensor& x) { return activation(x, Activation::Cos); }
inline Tensor exp(const Tensor& x) { return activation(x, Activation::Exp); }

Tensor log(const Tensor& x);
Tensor square(const Tensor& x);
/// |x| with subgradient 0 at 0.
Tensor abs(const Tensor& x);

/// Plain 2-D matrix product [m x k] . [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

/// Max-subtracted softmax along `axis`.
Tensor softmax(const Tensor& x, std::size_t axis);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
std::vector<Tensor> split(const Tensor& x, std::size_t axis, const std::vector<std::size_t>& sizes);
Tensor reshape(const Tensor& x, Shape shape);

enum class Reduction { Sum, Mean, Max };

/// Reduction over one axis (dropped from the shape unless keepdim) or, with no
/// axis, over everything into shape [1]. Max routes its gradient to the first
/// maximal element.
Tensor reduce(const Tensor& x, Reduction op, std::optional<std::size_t> axis = std::nullopt,
              bool keepdim = false);
inline Tensor sum(const Tensor& x) { return reduce(x, Reduction::Sum); }
inline Tensor mean(const Tensor& x) { return reduce(x, Reduction::Mean); }
inline Tensor max(const Tensor& x) { return reduce(x, Reduction::Max); }
inline Tensor sum(const Tensor& x, std::size_t axis, bool keepdim = false) {
    return reduce(x, Reduction::Sum, axis, keepdim);
}

/// Rows (leading-axis slices) selected by `indices`, in order.
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& indices);
/// Inverse of gather_rows for distinct indices: result has `rows` rows, row
/// indices[i] holds x's row i and all other rows are zero.
Tensor scatter_rows(const Tensor& x, const std::vector<std::size_t>& indices, std::size_t rows);

} // namespace polyhuman
