#pragma once

#include "polyhuman/camera.hpp"
#include "polyhuman/geometry.hpp"
#include "polyhuman/nn.hpp"
#include "polyhuman/tensor.hpp"

#include <span>
#include <vector>

namespace polyhuman {

/// Joint tree. Joint 0 is the root; parent[k] < k for every other joint.
/// rest_offsets[k] is joint k's canonical (T-pose) position relative to its
/// parent; for the root it is the canonical root position itself.
struct SkeletonTopology {
    std::vector<int> parent;
    std::vector<Vec3> rest_offsets;

    std::size_t joints() const { return parent.size(); }
    /// Throws std::invalid_argument naming the first offending joint.
    void validate() const;
    std::vector<Vec3> canonical_joints() const;
    bool operator==(const SkeletonTopology&) const = default;
};

/// One frame of body pose: joint world positions J, local axis-angle
/// orientations (root orientation is global), and the viewing camera.
struct PoseFrame {
    std::vector<Vec3> joints;
    std::vector<Vec3> orientations;
    CameraModel camera;
};

/// Per-bone maps from observation to canonical space, x_c = R_k x + t_k, plus
/// the posed joint positions they were derived from.
struct BoneTransforms {
    Tensor rotations;     // [K x 9], row-major R_k
    Tensor translations;  // [K x 3]
    Tensor joints;        // [K x 3], posed world positions

    std::size_t size() const { return rotations.dim(0); }
    Mat3 rotation(std::size_t k) const;
    Vec3 translation(std::size_t k) const;
};

Mat3 rodrigues(const Vec3& axis_angle);
/// Batched, differentiable: [K x 3] axis-angles to [K x 9] row-major rotations.
Tensor rodrigues(const Tensor& axis_angles);
/// Per-row product of 3x3 matrices stored as [K x 9].
Tensor batched_matmul3(const Tensor& a, const Tensor& b);

Tensor axis_angles_tensor(const std::vector<Vec3>& v);

/// Poses the skeleton from local rotations [K x 9] and the root position, then
/// inverts each bone's canonical-to-observation transform.
BoneTransforms forward_kinematics(const SkeletonTopology& topology, const Tensor& local_rotations,
                                  const Vec3& root_position);
BoneTransforms forward_kinematics(const SkeletonTopology& topology, const PoseFrame& pose);

struct CorrectedPose {
    Tensor delta;      // [K x 3] axis-angle offsets
    Tensor rotations;  // [K x 9], R(Omega_k) R(delta_k)
};

/// MLP predicting axis-angle offsets for every joint from the flattened pose.
/// The output layer starts at zero, so the correction is exactly the identity
/// until trained.
struct PoseCorrector {
    std::vector<Linear> layers;

    static PoseCorrector create(std::size_t joints, std::size_t width, std::size_t depth, Rng& rng,
                                const std::string& name);
    CorrectedPose operator()(const Tensor& axis_angles) const;
    void collect(ParameterList& out) const;
};

/// Learnable canonical skinning weights: logits on a G^3 lattice spanning
/// `box`, K bone channels followed by one background channel. Vertex (ix, iy,
/// iz) is row (iz G + iy) G + ix and sits at lo + (hi - lo) i / (G - 1).
struct SkinningField {
    std::size_t grid = 0;
    std::size_t bones = 0;
    Box box;
    Tensor logits;  // [G^3 x (K + 1)]

    static SkinningField create(std::size_t grid, std::size_t bones, const Box& box, Rng& rng,
                                const std::string& name, double background_logit = 2.0, double noise = 0.01);
    /// Adds log of a Gaussian falloff around each canonical bone segment to the
    /// bone logits. Bone k spans its joint to the joint's children and to
    /// tips[k] when given; leaves without a tip get a short stub.
    void add_bone_prior(const SkeletonTopology& topology, double sigma, std::span<const Vec3> tips = {});

    /// Channel softmax over the lattice, [G^3 x (K + 1)].
    Tensor weights() const;
    Vec3 vertex(std::size_t ix, std::size_t iy, std::size_t iz) const;
};

/// y[p, 3k..3k+2] = R_k x_p + t_k. Shapes [P x 3], [K x 9], [K x 3] -> [P x 3K].
Tensor transform_points(const Tensor& points, const Tensor& rotations, const Tensor& translations);

/// Trilinear lookup of bone channel k at y[p, 3k..3k+2] in the softmaxed grid,
/// zero outside the box. [P x 3K] -> [P x K]. Differentiable in both inputs.
Tensor sample_bone_weights(const Tensor& canonical_points, const Tensor& grid_weights, std::size_t grid,
                           const Box& box);

struct ObservationWeights {
    Tensor weights;  // [P x K], rows sum to 1, or all zero where mass is zero
    Tensor mass;     // [P x 1], sum of canonical bone weights
};

/// Row normalization w_k / sum_j w_j. Rows with zero mass get zero weights.
ObservationWeights normalize_weights(const Tensor& canonical_weights);

ObservationWeights observation_weights(const Tensor& points, const BoneTransforms& transforms,
                                       const SkinningField& field, const Tensor& grid_weights);
inline ObservationWeights observation_weights(const Tensor& points, const BoneTransforms& transforms,
                                              const SkinningField& field) {
    return observation_weights(points, transforms, field, field.weights());
}

/// sum_k w[p, k] y[p, 3k..3k+2]. [P x 3K], [P x K] -> [P x 3].
Tensor blend_points(const Tensor& transformed, const Tensor& weights);

/// x_c = sum_k w_k (R_k x + t_k).
Tensor inverse_lbs(const Tensor& points, const BoneTransforms& transforms, const Tensor& weights);

} // namespace polyhuman
