#pragma once

#include "polyhuman/camera.hpp"
#include "polyhuman/image.hpp"
#include "polyhuman/model.hpp"
#include "polyhuman/skeleton.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace polyhuman {

/// Segment from a to b (canonical coordinates) thickened by `radius`.
struct Capsule {
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    double radius = 0.1;
};

/// Procedural articulated body: one capsule and one color per bone.
struct ToyIdentity {
    std::uint64_t seed = 0;
    SkeletonTopology topology;
    std::vector<Capsule> capsules;
    std::vector<Vec3> colors;
    double amplitude = 40.0;
    double softness = 0.03;

    /// Canonical box holding every capsule with its soft rim plus `margin`.
    Box canonical_box(double margin = 0.05) const;
    /// Far capsule end of each bone.
    std::vector<Vec3> bone_tips() const;
    SubjectSpec subject() const { return {topology, canonical_box(), bone_tips()}; }
};

/// Bones 0..7 are pelvis, chest, head, left/right upper arm, left/right leg and
/// left forearm; a K-bone body keeps the first K.
ToyIdentity make_identity(std::uint64_t seed, std::size_t bones = 8, double amplitude = 40.0,
                          double softness = 0.03);

/// Per-bone posed rigid maps of a toy body, observation to canonical.
struct PosedBody {
    const ToyIdentity* identity = nullptr;
    std::vector<Mat3> rotations;
    std::vector<Vec3> translations;
    Box bounds;  // observation-space box around every posed capsule
};
PosedBody pose_body(const ToyIdentity& identity, const PoseFrame& pose);

struct FieldSample {
    Vec3 color = Vec3::Zero();
    double density = 0.0;
};
/// Closed-form density (sum of per-capsule smoothstep profiles) and
/// density-weighted color.
FieldSample analytic_field(const Vec3& x, const PosedBody& body);
FieldSample analytic_field(const Vec3& x, const PoseFrame& pose, const ToyIdentity& identity);

double smoothstep(double s);

enum class OracleQuality { Fast, Reference };
std::size_t oracle_samples(OracleQuality quality);

/// Dense uniform quadrature (bin centers) of the analytic field along one ray.
RayColor oracle_ray(const Ray& ray, const PosedBody& body, std::size_t samples);
/// Image with alpha; mask = alpha > 0.5.
Image oracle_render(const CameraModel& camera, const PoseFrame& pose, const ToyIdentity& identity, const Box& scene,
                    const Vec3& background, std::size_t samples);
inline Image oracle_render(const CameraModel& camera, const PoseFrame& pose, const ToyIdentity& identity,
                           const Box& scene, const Vec3& background, OracleQuality quality) {
    return oracle_render(camera, pose, identity, scene, background, oracle_samples(quality));
}

/// Per-frame sinusoidal joint swings; every identity gets its own rates and
/// phases. Joint positions follow from forward kinematics.
std::vector<PoseFrame> make_motion(const ToyIdentity& identity, std::size_t frames, std::uint64_t seed);

struct SynthConfig {
    std::size_t identities = 2;
    std::size_t frames = 30;
    std::size_t bones = 8;
    int width = 64;
    int height = 64;
    std::size_t test_cameras = 2;
    std::size_t test_frame_stride = 5;
    double camera_distance = 3.0;
    double camera_height = 0.3;
    double focal = 80.0;
    double test_azimuth_deg = 30.0;
    double amplitude = 40.0;
    double softness = 0.03;
    std::size_t reference_samples = 1024;
    Vec3 background = Vec3::Ones();
    std::uint64_t seed = 0;
};

enum class Split { Train, Test };
std::string split_name(Split s);

struct FrameRecord {
    std::size_t identity = 0;
    std::size_t frame = 0;
    std::size_t camera = 0;
    Split split = Split::Train;
    std::string image;  // relative to the dataset root
    std::string mask;
    bool operator==(const FrameRecord&) const = default;
};

struct IdentityRecord {
    std::uint64_t seed = 0;
    SubjectSpec subject;
    /// Joint positions and orientations per frame; the camera field is unused.
    std::vector<PoseFrame> poses;
};

struct DatasetManifest {
    int format_version = 1;
    int width = 64;
    int height = 64;
    Box scene_box;
    Vec3 background = Vec3::Ones();
    double amplitude = 40.0;
    double softness = 0.03;
    std::vector<IdentityRecord> identities;
    std::vector<CameraModel> cameras;
    std::vector<FrameRecord> records;
    std::filesystem::path root;

    std::vector<SubjectSpec> subjects() const;
    std::vector<const FrameRecord*> split(Split s) const;
    /// Pose of a record with its camera attached.
    PoseFrame pose(const FrameRecord& r) const;
    /// Regenerates the toy body behind identity i.
    ToyIdentity toy_identity(std::size_t i) const;
};

bool operator==(const DatasetManifest& a, const DatasetManifest& b);

/// Generates and writes images, masks, poses, cameras and manifest.json.
DatasetManifest export_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);
DatasetManifest load_dataset(const std::filesystem::path& dir);

} // namespace polyhuman
