#include "polyhuman/gradcheck.hpp"

#include "polyhuman/ops.hpp"
#include "polyhuman/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace polyhuman {

double relative_error(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-5});
    return std::abs(a - b) / denom;
}

GradCheckResult grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<Tensor, std::size_t>>& probes, double eps) {
    // Leaves not reached by this loss keep whatever grad they had, so clear first.
    for (auto [t, i] : probes) t.zero_grad();
    const Tensor loss = f();
    loss.backward();
    std::vector<double> analytic;
    analytic.reserve(probes.size());
    for (const auto& [t, i] : probes) analytic.push_back(t.grad()[i]);

    GradCheckResult out;
    out.coordinates = probes.size();
    NoGradGuard no_grad;
    for (std::size_t p = 0; p < probes.size(); ++p) {
        Tensor t = probes[p].first;
        const std::size_t i = probes[p].second;
        auto values = t.mutable_data();
        const double orig = values[i];
        values[i] = orig + eps;
        const double up = f().item();
        values[i] = orig - eps;
        const double down = f().item();
        values[i] = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double err = relative_error(analytic[p], numeric);
        if (p == 0 || err > out.max_rel_error) {
            out.max_rel_error = err;
            out.worst_coordinate = p;
            out.analytic = analytic[p];
            out.numeric = numeric;
        }
    }
    return out;
}

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
    std::vector<std::pair<Tensor, std::size_t>> probes;
    for (std::size_t i = 0; i < x.numel(); ++i) probes.emplace_back(x, i);
    return grad_check([&] { return f(x); }, probes, eps);
}

GradCheckReport run_grad_checks(const std::vector<GradCheckCase>& cases) {
    GradCheckReport report;
    double worst_ratio = -1.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        GradCheckRow row;
        row.name = cases[i].name;
        row.tolerance = cases[i].tolerance;
        double ratio = 0.0;
        try {
            row.result = cases[i].run();
            row.passed = std::isfinite(row.result.max_rel_error) && row.result.max_rel_error < row.tolerance;
            ratio = row.passed ? row.result.max_rel_error / row.tolerance : 1e300;
        } catch (const std::exception& e) {
            row.error = e.what();
            row.passed = false;
            ratio = 1e308;
        }
        if (!row.passed) report.all_passed = false;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            report.worst = i;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

Tensor random_param(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::parameter(std::move(shape), std::move(v));
}

Tensor random_const(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from(std::move(shape), std::move(v));
}

// Weighted sum keeps every output coordinate visible in the scalar loss.
Tensor weighted(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

GradCheckCase unary_case(std::string name, std::uint64_t seed, Tensor (*op)(const Tensor&), double lo = -2.0,
                         double hi = 2.0) {
    return {std::move(name), [=] {
                Rng rng(seed);
                Tensor x = random_param(rng, {3, 4}, lo, hi);
                Tensor w = random_const(rng, {3, 4});
                return grad_check([&](const Tensor& t) { return weighted(op(t), w); }, x);
            }};
}

} // namespace

std::vector<GradCheckCase> engine_grad_checks(std::uint64_t seed) {
    std::vector<GradCheckCase> cases;
    auto s = [&](std::uint64_t k) { return mix_seed(seed, "gradcheck", k); };

    auto binary = [&](std::string name, BinaryOp op, Shape sa, Shape sb, std::uint64_t k) {
        cases.push_back({std::move(name), [=] {
                             Rng rng(s(k));
                             Tensor a = random_param(rng, sa);
                             Tensor b = random_param(rng, sb);
                             if (op == BinaryOp::Div) {
                                 for (auto& v : b.mutable_data()) v = (v < 0 ? -1.0 : 1.0) * (0.5 + std::abs(v));
                             }
                             Tensor w = random_const(rng, broadcast_shape(sa, sb));
                             auto f = [&] { return weighted(elementwise(a, b, op), w); };
                             std::vector<std::pair<Tensor, std::size_t>> probes;
                             for (std::size_t i = 0; i < a.numel(); ++i) probes.emplace_back(a, i);
                             for (std::size_t i = 0; i < b.numel(); ++i) probes.emplace_back(b, i);
                             return grad_check(f, probes);
                         }});
    };
    binary("add", BinaryOp::Add, {3, 4}, {3, 4}, 1);
    binary("sub_broadcast", BinaryOp::Sub, {3, 4}, {4}, 2);
    binary("mul_broadcast_column", BinaryOp::Mul, {3, 4}, {3, 1}, 3);
    binary("div_broadcast", BinaryOp::Div, {2, 3, 1}, {3, 4}, 4);

    cases.push_back(unary_case("relu", s(5), relu));
    cases.push_back(unary_case("sigmoid", s(6), sigmoid));
    cases.push_back(unary_case("softplus", s(7), softplus));
    cases.push_back(unary_case("sin", s(8), sin));
    cases.push_back(unary_case("cos", s(9), cos));
    cases.push_back(unary_case("exp", s(10), exp));
    cases.push_back(unary_case("log", s(11), log, 0.5, 2.0));
    cases.push_back(unary_case("square", s(12), square));
    cases.push_back(unary_case("abs", s(13), abs));

    cases.push_back({"matmul", [=] {
                         Rng rng(s(14));
                         Tensor a = random_param(rng, {4, 5});
                         Tensor b = random_param(rng, {5, 3});
                         Tensor w = random_const(rng, {4, 3});
                         auto f = [&] { return weighted(matmul(a, b), w); };
                         std::vector<std::pair<Tensor, std::size_t>> probes;
                         for (std::size_t i = 0; i < a.numel(); ++i) probes.emplace_back(a, i);
                         for (std::size_t i = 0; i < b.numel(); ++i) probes.emplace_back(b, i);
                         return grad_check(f, probes);
                     }});
    cases.push_back({"transpose", [=] {
                         Rng rng(s(15));
                         Tensor x = random_param(rng, {3, 5});
                         Tensor w = random_const(rng, {5, 3});
                         return grad_check([&](const Tensor& t) { return weighted(transpose(t), w); }, x);
                     }});
    cases.push_back({"softmax", [=] {
                         Rng rng(s(16));
                         Tensor x = random_param(rng, {2, 4, 3});
                         Tensor w = random_const(rng, {2, 4, 3});
                         return grad_check([&](const Tensor& t) { return weighted(softmax(t, 1), w); }, x);
                     }});
    cases.push_back({"concat", [=] {
                         Rng rng(s(17));
                         Tensor a = random_param(rng, {3, 2});
                         Tensor b = random_param(rng, {3, 4});
                         Tensor w = random_const(rng, {3, 6});
                         auto f = [&] { return weighted(concat({a, b}, 1), w); };
                         std::vector<std::pair<Tensor, std::size_t>> probes;
                         for (std::size_t i = 0; i < a.numel(); ++i) probes.emplace_back(a, i);
                         for (std::size_t i = 0; i < b.numel(); ++i) probes.emplace_back(b, i);
                         return grad_check(f, probes);
                     }});
    cases.push_back({"narrow", [=] {
                         Rng rng(s(18));
                         Tensor x = random_param(rng, {4, 5});
                         Tensor w = random_const(rng, {4, 2});
                         return grad_check([&](const Tensor& t) { return weighted(narrow(t, 1, 2, 2), w); }, x);
                     }});
    cases.push_back({"reshape", [=] {
                         Rng rng(s(19));
                         Tensor x = random_param(rng, {4, 3});
                         Tensor w = random_const(rng, {2, 6});
                         return grad_check([&](const Tensor& t) { return weighted(reshape(t, {2, 6}), w); }, x);
                     }});
    auto reduction = [&](std::string name, Reduction op, std::uint64_t k) {
        cases.push_back({std::move(name), [=] {
                             Rng rng(s(k));
                             Tensor x = random_param(rng, {3, 4, 2});
                             Tensor w = random_const(rng, {3, 2});
                             return grad_check([&](const Tensor& t) { return weighted(reduce(t, op, 1), w); }, x);
                         }});
    };
    reduction("sum_axis", Reduction::Sum, 20);
    reduction("mean_axis", Reduction::Mean, 21);
    reduction("max_axis", Reduction::Max, 22);
    cases.push_back({"gather_scatter_rows", [=] {
                         Rng rng(s(23));
                         Tensor x = random_param(rng, {5, 3});
                         Tensor w = random_const(rng, {6, 3});
                         const std::vector<std::size_t> pick{4, 0, 2};
                         const std::vector<std::size_t> place{5, 1, 3};
                         return grad_check(
                             [&](const Tensor& t) { return weighted(scatter_rows(gather_rows(t, pick), place, 6), w); },
                             x);
                     }});
    return cases;
}

} // namespace polyhuman
