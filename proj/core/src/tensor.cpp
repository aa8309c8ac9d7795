#include "polyhuman/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace polyhuman {

namespace {

thread_local bool t_grad_enabled = true;
bool g_finite_checks = false;
std::string g_fault_op;
double g_fault_scale = 1.0;

} // namespace

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

void set_finite_checks(bool enabled) { g_finite_checks = enabled; }
bool finite_checks() { return g_finite_checks; }

void set_backward_fault(std::string op, double scale) {
    g_fault_op = std::move(op);
    g_fault_scale = scale;
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("tensor shape " + shape_to_string(shape) + " does not hold " +
                         std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }
Tensor Tensor::ones(Shape shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(Shape shape, double value) {
    const auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values, std::string name) {
    Tensor t = from(std::move(shape), std::move(values));
    t.node_->requires_grad = true;
    t.node_->name = std::move(name);
    return t;
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= node_->shape.size()) {
        throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                         shape_to_string(node_->shape));
    }
    return node_->shape[axis];
}

std::size_t Tensor::numel() const { return node_->value.size(); }
std::span<const double> Tensor::data() const { return node_->value; }
std::span<double> Tensor::mutable_data() { return node_->value; }

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_to_string(shape()));
    return node_->value[0];
}

std::vector<double> Tensor::to_vector() const { return node_->value; }
bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::is_leaf() const { return node_->is_leaf; }
const std::string& Tensor::name() const { return node_->name; }
void Tensor::set_name(std::string name) { node_->name = std::move(name); }
bool Tensor::has_grad() const { return !node_->grad.empty(); }
std::span<const double> Tensor::grad() const { return node_->grad; }

std::span<double> Tensor::mutable_grad() {
    if (node_->grad.size() != node_->value.size()) node_->grad.assign(node_->value.size(), 0.0);
    return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor Tensor::detach() const { return from(shape(), node_->value); }

void Tensor::backward() const {
    if (numel() != 1) {
        throw ShapeError("backward() needs a scalar, got " + shape_to_string(shape()));
    }
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a deterministic topological order.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            detail::Node* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (auto* n : order) n->grad.assign(n->value.size(), 0.0);
    node_->grad[0] = 1.0;

    std::vector<std::span<double>> sinks;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (!n->backward) continue;
        sinks.clear();
        for (auto& in : n->inputs) {
            if (in->requires_grad) sinks.emplace_back(in->grad);
            else sinks.emplace_back();
        }
        n->backward(n->value, n->grad, sinks);
    }
}

Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                   std::span<const Tensor> inputs, BackwardFn backward) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError(std::string(op) + ": result shape " + shape_to_string(shape) +
                         " does not match " + std::to_string(values.size()) + " values");
    }
    if (g_finite_checks) {
        for (double v : values) {
            if (!std::isfinite(v)) throw NonFiniteError(std::string(op) + " produced a non-finite value");
        }
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->name = std::string(op);
    node->is_leaf = false;

    const bool any_grad = t_grad_enabled &&
        std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (any_grad && backward) {
        node->requires_grad = true;
        node->inputs.reserve(inputs.size());
        for (const auto& t : inputs) node->inputs.push_back(t.node_);
        if (!g_fault_op.empty() && op == g_fault_op) {
            node->backward = [inner = std::move(backward), k = g_fault_scale](
                                 std::span<const double> value, std::span<const double> grad,
                                 std::span<const std::span<double>> sinks) {
                std::vector<double> scaled(grad.begin(), grad.end());
                for (double& g : scaled) g *= k;
                inner(value, scaled, sinks);
            };
        } else {
            node->backward = std::move(backward);
        }
    }
    return Tensor(std::move(node));
}

} // namespace polyhuman
