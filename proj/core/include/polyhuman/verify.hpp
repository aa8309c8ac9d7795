#pragma once

#include "polyhuman/gradcheck.hpp"

namespace polyhuman {

/// Finite-difference cases for the renderer-level ops (compositing, encoding,
/// rotations, losses) at double precision.
std::vector<GradCheckCase> pipeline_grad_checks(std::uint64_t seed);

/// Pixel loss of a small multi-identity model rendered end to end, probed on
/// `probes` sampled parameter coordinates. Identity codes and all four
/// attention projections are always among them.
GradCheckCase end_to_end_grad_check(std::uint64_t seed, std::size_t probes = 48);

/// Engine, pipeline and end-to-end cases together.
std::vector<GradCheckCase> full_grad_suite(std::uint64_t seed);

} // namespace polyhuman
