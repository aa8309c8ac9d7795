#pragma once

#include "polyhuman/tensor.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace polyhuman {

/// |a - b| / max(|a|, |b|, 1e-5). The floor absorbs central-difference
/// round-off on coordinates whose true gradient is exactly zero.
double relative_error(double a, double b);

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_coordinate = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t coordinates = 0;
};

/// Compares backward() of the scalar `f()` against central differences, one
/// coordinate at a time. Each probe is a (leaf tensor, flat index) pair; the
/// leaf's value is perturbed in place and restored.
GradCheckResult grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<Tensor, std::size_t>>& probes, double eps = 1e-5);

/// All coordinates of a single leaf `x`, with `f` reading x through capture.
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps = 1e-5);

/// A named gradient check. `run` returns the max relative error.
struct GradCheckCase {
    std::string name;
    std::function<GradCheckResult()> run;
    double tolerance = 1e-6;
};

struct GradCheckRow {
    std::string name;
    GradCheckResult result;
    double tolerance = 0.0;
    bool passed = false;
    std::string error;
};

struct GradCheckReport {
    std::vector<GradCheckRow> rows;
    bool all_passed = true;
    /// Index of the row with the largest error-to-tolerance ratio (or the first
    /// failing-by-exception row).
    std::size_t worst = 0;
};

GradCheckReport run_grad_checks(const std::vector<GradCheckCase>& cases);

/// Finite-difference cases for every differentiable op of the engine.
std::vector<GradCheckCase> engine_grad_checks(std::uint64_t seed);

} // namespace polyhuman
