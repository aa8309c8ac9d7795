#pragma once

#include "polyhuman/fields.hpp"
#include "polyhuman/identity.hpp"
#include "polyhuman/image.hpp"
#include "polyhuman/renderer.hpp"
#include "polyhuman/skeleton.hpp"

#include <optional>
#include <string>
#include <vector>

namespace polyhuman {

struct ModelConfig {
    std::size_t code_dim = 256;
    int joint_bands = 6;
    bool scale_attention = false;
    double code_init_std = 0.1;
    NonRigidConfig nonrigid;
    CanonicalConfig canonical;
    std::size_t pose_width = 128;
    std::size_t pose_depth = 2;
    bool per_identity_pose_correction = false;
    std::size_t skinning_grid = 32;
    double background_logit = 2.0;
    double skinning_noise = 0.01;
    /// Width of the Gaussian bone prior added to the skinning logits; 0 disables it.
    double bone_prior_sigma = 0.0;
    double foreground_threshold = 1e-4;
    bool use_identity_codes = true;
    bool use_pose_condition = true;
    Vec3 background = Vec3::Ones();
};

/// Skeleton and canonical volume of one identity.
struct SubjectSpec {
    SkeletonTopology topology;
    Box canonical_box;
    /// Canonical far end of each bone; empty when unknown.
    std::vector<Vec3> bone_tips;
    bool operator==(const SubjectSpec&) const = default;
};

/// Every learnable piece of the multi-identity renderer.
class Model {
public:
    static Model create(const ModelConfig& config, std::vector<SubjectSpec> subjects, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const std::vector<SubjectSpec>& subjects() const { return subjects_; }
    std::size_t identities() const { return subjects_.size(); }
    std::size_t joints() const { return subjects_.front().topology.joints(); }

    /// All parameters under stable names, in a fixed order.
    ParameterList parameters() const;
    /// Parameters owned by one identity (code row excluded; the table is one tensor).
    std::size_t per_identity_parameter_count() const;

    /// S_i as [1 x D], or a constant zero row when identity codes are disabled.
    Tensor identity_code(std::size_t identity) const;
    const PoseCorrector& pose_corrector(std::size_t identity) const;

    IdentityTable identity_table;
    AttentionParams attention;
    NonRigidField nonrigid;
    CanonicalField canonical;
    std::vector<PoseCorrector> pose_correctors;
    std::vector<SkinningField> skinning;

private:
    ModelConfig config_;
    std::vector<SubjectSpec> subjects_;
};

/// Pose-dependent state shared by all rays of one frame.
struct FrameState {
    std::size_t identity = 0;
    BoneTransforms transforms;
    Tensor joints_row;     // [1 x 3K] root-relative posed joints
    Tensor code;           // S_i
    Tensor pose_code;      // F_i, the code driving the offset field
    Tensor attention;      // [1 x K] or undefined when the pose condition is off
    Tensor grid_weights;   // softmaxed skinning lattice
};

FrameState prepare_frame(const Model& model, std::size_t identity, const PoseFrame& pose);

struct RenderOptions {
    std::size_t samples = 128;
    bool jitter = true;
    std::optional<double> anneal_alpha;
};

struct RenderOutput {
    Tensor rgb;    // [R x 3], composited over the background
    Tensor alpha;  // [R x 1]
    std::size_t evaluated_samples = 0;
};

/// Volume-renders rays for a prepared frame.
RenderOutput render_rays(const Model& model, const FrameState& frame, std::span<const Ray> rays,
                         const RenderOptions& options, Rng& rng);

RenderOutput render_pixels(const Model& model, std::size_t identity, const PoseFrame& pose,
                           std::span<const Pixel> pixels, const Box& scene, const RenderOptions& options, Rng& rng);

/// Full-frame render without gradient tracking, in chunks of rays.
Image render_image(const Model& model, std::size_t identity, const PoseFrame& pose, const Box& scene,
                   const RenderOptions& options, std::uint64_t seed, std::size_t chunk = 1024);

/// Motion transfer: `identity` driven by a pose sequence (typically another
/// identity's), every frame seen from `camera`.
std::vector<Image> render_sequence(const Model& model, std::size_t identity, std::span<const PoseFrame> poses,
                                   const CameraModel& camera, const Box& scene, const RenderOptions& options,
                                   std::uint64_t seed);

} // namespace polyhuman
