#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polyhuman {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Backward rule of a recorded op. Receives the op's own output value and its
// incoming gradient. `input_grads[i]` is empty when input i does not take part
// in differentiation; otherwise the rule accumulates (+=) into it.
using BackwardFn = std::function<void(std::span<const double> out_value,
                                      std::span<const double> out_grad,
                                      std::span<const std::span<double>> input_grads)>;

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    bool is_leaf = true;
    std::string name;
    std::vector<std::shared_ptr<Node>> inputs;
    BackwardFn backward;
};

} // namespace detail

/// Dense row-major array of doubles with optional reverse-mode gradient tracking.
///
/// A Tensor is a cheap shared handle. Values of non-leaf tensors are never
/// mutated after construction; leaves (parameters) may be updated in place by
/// the optimizer or by finite-difference probing.
class Tensor {
public:
    Tensor() = default;

    static Tensor from(Shape shape, std::vector<double> values);
    static Tensor zeros(Shape shape);
    static Tensor ones(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor scalar(double value);
    static Tensor zeros_like(const Tensor& t) { return zeros(t.shape()); }
    static Tensor ones_like(const Tensor& t) { return ones(t.shape()); }

    /// Leaf tensor that accumulates gradients.
    static Tensor parameter(Shape shape, std::vector<double> values, std::string name = {});

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const double> data() const;
    std::span<double> mutable_data();
    double operator[](std::size_t i) const { return data()[i]; }
    double item() const;
    std::vector<double> to_vector() const;

    bool requires_grad() const;
    bool is_leaf() const;
    const std::string& name() const;
    void set_name(std::string name);

    bool has_grad() const;
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    /// Copy of the values with no graph history.
    Tensor detach() const;

    /// Reverse pass from a scalar. Every reachable grad-requiring tensor ends up
    /// holding d(this)/d(tensor); grads of reachable leaves are overwritten.
    void backward() const;

    bool same_node(const Tensor& other) const { return node_ == other.node_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

    std::shared_ptr<detail::Node> node_;

    friend Tensor make_result(std::string_view, Shape, std::vector<double>,
                              std::span<const Tensor>, BackwardFn);
};

/// Records an op result. The backward rule is kept only when grad mode is on
/// and at least one input requires grad.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                   std::span<const Tensor> inputs, BackwardFn backward);

inline Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                          std::initializer_list<Tensor> inputs, BackwardFn backward) {
    return make_result(op, std::move(shape), std::move(values),
                       std::span<const Tensor>(inputs.begin(), inputs.size()), std::move(backward));
}

bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

/// Debug mode: every op result is checked for NaN/Inf and divisions flag zero
/// divisors. Off by default.
void set_finite_checks(bool enabled);
bool finite_checks();

/// Test fixture: ops named `op` created afterwards scale their incoming
/// gradient by `scale`, i.e. carry a wrong backward rule. Empty name clears it.
void set_backward_fault(std::string op, double scale = 1.5);

} // namespace polyhuman
