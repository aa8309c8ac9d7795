#include "polyhuman/model.hpp"

#include "polyhuman/ops.hpp"

#include <stdexcept>

namespace polyhuman {

Model Model::create(const ModelConfig& config, std::vector<SubjectSpec> subjects, std::uint64_t seed) {
    if (subjects.empty()) throw std::invalid_argument("model needs at least one identity");
    const std::size_t joints = subjects.front().topology.joints();
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        subjects[i].topology.validate();
        if (subjects[i].topology.joints() != joints) {
            throw std::invalid_argument("identity " + std::to_string(i) + " has " +
                                        std::to_string(subjects[i].topology.joints()) + " joints, expected " +
                                        std::to_string(joints));
        }
    }
    Model m;
    m.config_ = config;
    m.subjects_ = std::move(subjects);
    const std::size_t n = m.subjects_.size();
    const std::size_t d = config.code_dim;

    Rng codes_rng = Rng::substream(seed, "init.identity.codes");
    m.identity_table = IdentityTable::create(n, d, codes_rng, config.code_init_std);
    Rng attn_rng = Rng::substream(seed, "init.identity.attention");
    m.attention = AttentionParams::create(d, attn_rng, config.joint_bands);
    Rng nr_rng = Rng::substream(seed, "init.fields.nonrigid");
    m.nonrigid = NonRigidField::create(config.nonrigid, joints, d, nr_rng);
    Rng c_rng = Rng::substream(seed, "init.fields.canonical");
    m.canonical = CanonicalField::create(config.canonical, d, c_rng);

    const std::size_t correctors = config.per_identity_pose_correction ? n : 1;
    for (std::size_t i = 0; i < correctors; ++i) {
        Rng rng = Rng::substream(seed, "init.pose", i);
        const std::string name = config.per_identity_pose_correction ? "pose.identity" + std::to_string(i) : "pose.shared";
        m.pose_correctors.push_back(PoseCorrector::create(joints, config.pose_width, config.pose_depth, rng, name));
    }
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::substream(seed, "init.skinning", i);
        auto field = SkinningField::create(config.skinning_grid, joints, m.subjects_[i].canonical_box, rng,
                                           "skinning.identity" + std::to_string(i) + ".logits",
                                           config.background_logit, config.skinning_noise);
        if (config.bone_prior_sigma > 0.0) field.add_bone_prior(m.subjects_[i].topology, config.bone_prior_sigma, m.subjects_[i].bone_tips);
        m.skinning.push_back(std::move(field));
    }
    return m;
}

ParameterList Model::parameters() const {
    ParameterList out;
    identity_table.collect(out);
    attention.collect(out);
    nonrigid.collect(out);
    canonical.collect(out);
    for (const auto& pc : pose_correctors) pc.collect(out);
    for (const auto& s : skinning) out.push_back({s.logits.name(), s.logits});
    return out;
}

std::size_t Model::per_identity_parameter_count() const {
    const std::size_t g = config_.skinning_grid;
    std::size_t n = config_.code_dim + g * g * g * (joints() + 1);
    if (config_.per_identity_pose_correction) {
        ParameterList pc;
        pose_correctors.front().collect(pc);
        n += parameter_count(pc);
    }
    return n;
}

Tensor Model::identity_code(std::size_t identity) const {
    if (identity >= identities()) {
        throw std::out_of_range("identity " + std::to_string(identity) + " out of range [0, " +
                                std::to_string(identities()) + ")");
    }
    if (!config_.use_identity_codes) return Tensor::zeros({1, config_.code_dim});
    return identity_table.get_code(identity);
}

const PoseCorrector& Model::pose_corrector(std::size_t identity) const {
    return pose_correctors[config_.per_identity_pose_correction ? identity : 0];
}

FrameState prepare_frame(const Model& model, std::size_t identity, const PoseFrame& pose) {
    FrameState f;
    f.identity = identity;
    f.code = model.identity_code(identity);
    const auto& topology = model.subjects()[identity].topology;
    if (pose.orientations.size() != topology.joints() || pose.joints.empty()) {
        throw std::invalid_argument("pose has " + std::to_string(pose.orientations.size()) + " orientations for a " +
                                    std::to_string(topology.joints()) + "-joint skeleton");
    }
    const auto corrected = model.pose_corrector(identity)(axis_angles_tensor(pose.orientations));
    f.transforms = forward_kinematics(topology, corrected.rotations, pose.joints[0]);
    const Tensor relative = sub(f.transforms.joints, narrow(f.transforms.joints, 0, 0, 1));
    f.joints_row = reshape(relative, {1, relative.numel()});
    if (model.config().use_pose_condition) {
        auto pc = pose_conditioned_code(f.code, pose_code(relative, model.attention), model.attention,
                                        model.config().scale_attention);
        f.pose_code = pc.code;
        f.attention = pc.attention;
    } else {
        f.pose_code = f.code;
    }
    f.grid_weights = model.skinning[identity].weights();
    return f;
}

RenderOutput render_rays(const Model& model, const FrameState& frame, std::span<const Ray> rays,
                         const RenderOptions& options, Rng& rng) {
    const std::size_t R = rays.size();
    const std::size_t M = options.samples;
    const auto& field = model.skinning[frame.identity];

    std::vector<double> deltas(R * M, 0.0);
    std::vector<double> points;
    std::vector<std::size_t> slots;
    points.reserve(R * M * 3);
    slots.reserve(R * M);
    for (std::size_t r = 0; r < R; ++r) {
        const Ray& ray = rays[r];
        if (ray.empty) continue;
        const auto depths = stratified_sample(ray, M, rng, options.jitter);
        const auto d = sample_deltas(depths, ray.near, ray.far);
        for (std::size_t m = 0; m < M; ++m) {
            const Vec3 x = ray.origin + depths[m] * ray.direction;
            points.insert(points.end(), {x.x(), x.y(), x.z()});
            slots.push_back(r * M + m);
            deltas[r * M + m] = d[m];
        }
    }

    RenderOutput out;
    Tensor colors, densities;
    std::vector<std::size_t> active;
    Tensor y, wc;
    if (!slots.empty()) {
        const Tensor x = Tensor::from({slots.size(), 3}, std::move(points));
        y = transform_points(x, frame.transforms.rotations, frame.transforms.translations);
        wc = sample_bone_weights(y, frame.grid_weights, field.grid, field.box);
        const std::size_t K = field.bones;
        const auto w = wc.data();
        for (std::size_t p = 0; p < slots.size(); ++p) {
            double mass = 0.0;
            for (std::size_t k = 0; k < K; ++k) mass += w[p * K + k];
            if (mass >= model.config().foreground_threshold) active.push_back(p);
        }
    }
    if (active.empty()) {
        colors = Tensor::zeros({R * M, 3});
        densities = Tensor::zeros({R * M, 1});
    } else {
        const Tensor ya = gather_rows(y, active);
        const Tensor weights = normalize_weights(gather_rows(wc, active)).weights;
        Tensor xc = blend_points(ya, weights);
        xc = add(xc, model.nonrigid.offset(xc, frame.joints_row, frame.pose_code, options.anneal_alpha));
        const Radiance rad = model.canonical.radiance(xc, frame.code);
        std::vector<std::size_t> target(active.size());
        for (std::size_t i = 0; i < active.size(); ++i) target[i] = slots[active[i]];
        colors = scatter_rows(rad.color, target, R * M);
        densities = scatter_rows(rad.density, target, R * M);
    }
    out.evaluated_samples = active.size();
    const Tensor rgba = composite(colors, densities, deltas, R, M);
    out.rgb = over_background(rgba, model.config().background);
    out.alpha = narrow(rgba, 1, 3, 1);
    return out;
}

RenderOutput render_pixels(const Model& model, std::size_t identity, const PoseFrame& pose,
                           std::span<const Pixel> pixels, const Box& scene, const RenderOptions& options, Rng& rng) {
    const FrameState frame = prepare_frame(model, identity, pose);
    const auto rays = generate_rays(pose.camera, pixels, scene);
    return render_rays(model, frame, rays, options, rng);
}

Image render_image(const Model& model, std::size_t identity, const PoseFrame& pose, const Box& scene,
                   const RenderOptions& options, std::uint64_t seed, std::size_t chunk) {
    NoGradGuard no_grad;
    const FrameState frame = prepare_frame(model, identity, pose);
    const auto& cam = pose.camera;
    const auto pixels = image_pixels(cam.width, cam.height);
    Image img = Image::filled(cam.width, cam.height, model.config().background);
    for (std::size_t start = 0, c = 0; start < pixels.size(); start += chunk, ++c) {
        const std::size_t n = std::min(chunk, pixels.size() - start);
        const auto rays = generate_rays(cam, std::span(pixels).subspan(start, n), scene);
        Rng rng = Rng::substream(seed, "render", c);
        const auto out = render_rays(model, frame, rays, options, rng);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t ch = 0; ch < 3; ++ch) img.rgb[(start + i) * 3 + ch] = out.rgb[i * 3 + ch];
            img.alpha[start + i] = out.alpha[i];
        }
    }
    return img;
}

std::vector<Image> render_sequence(const Model& model, std::size_t identity, std::span<const PoseFrame> poses,
                                   const CameraModel& camera, const Box& scene, const RenderOptions& options,
                                   std::uint64_t seed) {
    std::vector<Image> out;
    out.reserve(poses.size());
    for (PoseFrame pose : poses) {
        pose.camera = camera;
        out.push_back(render_image(model, identity, pose, scene, options, seed));
    }
    return out;
}

} // namespace polyhuman
