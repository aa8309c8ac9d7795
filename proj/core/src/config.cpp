#include "polyhuman/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace polyhuman {

namespace {

std::string number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

PerceptualKind parse_perceptual(const std::string& s, const std::string& path) {
    if (s == "off") return PerceptualKind::Off;
    if (s == "gradient_l1") return PerceptualKind::GradientL1;
    throw ConfigError(path + ": expected off or gradient_l1, got '" + s + "'");
}

class Reader {
public:
    Reader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(where() + "expected a mapping");
    }

    template <typename T>
    void field(const char* key, T& out) {
        seen_.insert(key);
        if (!node_ || node_.IsNull()) return;
        const YAML::Node v = node_[key];
        if (!v) return;
        const std::string at = path_.empty() ? key : path_ + "." + key;
        try {
            if constexpr (std::is_same_v<T, Vec3>) {
                if (!v.IsSequence() || v.size() != 3) throw ConfigError(at + ": expected a list of 3 numbers");
                out = Vec3(v[0].as<double>(), v[1].as<double>(), v[2].as<double>());
            } else if constexpr (std::is_same_v<T, PerceptualKind>) {
                out = parse_perceptual(v.as<std::string>(), at);
            } else if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
                const auto s = v.as<std::string>();
                if (!s.empty() && s[0] == '-') throw ConfigError(at + ": expected a nonnegative integer, got " + s);
                out = v.as<T>();
            } else {
                out = v.as<T>();
            }
        } catch (const YAML::Exception& e) {
            throw ConfigError(at + ": " + e.msg);
        }
    }

    template <typename F>
    void section(const char* key, F&& body) {
        seen_.insert(key);
        Reader sub(node_ && node_.IsMap() ? node_[key] : YAML::Node(), path_.empty() ? key : path_ + "." + key);
        body(sub);
        sub.finish();
    }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) throw ConfigError("unknown config key '" + (path_.empty() ? key : path_ + "." + key) + "'");
        }
    }

private:
    std::string where() const { return path_.empty() ? "" : path_ + ": "; }
    YAML::Node node_;
    std::string path_;
    std::set<std::string> seen_;
};

class Writer {
public:
    explicit Writer(YAML::Emitter& out) : out_(out) {}

    template <typename T>
    void field(const char* key, const T& v) {
        out_ << YAML::Key << key << YAML::Value;
        if constexpr (std::is_same_v<T, Vec3>) {
            out_ << YAML::Flow << YAML::BeginSeq << number(v.x()) << number(v.y()) << number(v.z()) << YAML::EndSeq;
        } else if constexpr (std::is_same_v<T, PerceptualKind>) {
            out_ << perceptual_name(v);
        } else if constexpr (std::is_same_v<T, bool>) {
            out_ << (v ? "true" : "false");
        } else if constexpr (std::is_floating_point_v<T>) {
            out_ << number(v);
        } else {
            out_ << v;
        }
    }

    template <typename F>
    void section(const char* key, F&& body) {
        out_ << YAML::Key << key << YAML::Value << YAML::BeginMap;
        body(*this);
        out_ << YAML::EndMap;
    }

private:
    YAML::Emitter& out_;
};

template <typename V, typename C>
void visit(V& v, C& c) {
    v.field("seed", c.seed);
    v.field("output_dir", c.output_dir);
    v.section("dataset", [&](auto& s) {
        auto& d = c.dataset;
        s.field("identities", d.identities);
        s.field("frames", d.frames);
        s.field("bones", d.bones);
        s.field("width", d.width);
        s.field("height", d.height);
        s.field("test_cameras", d.test_cameras);
        s.field("test_frame_stride", d.test_frame_stride);
        s.field("camera_distance", d.camera_distance);
        s.field("camera_height", d.camera_height);
        s.field("focal", d.focal);
        s.field("test_azimuth_deg", d.test_azimuth_deg);
        s.field("amplitude", d.amplitude);
        s.field("softness", d.softness);
        s.field("reference_samples", d.reference_samples);
        s.field("background", d.background);
    });
    v.section("model", [&](auto& s) {
        auto& m = c.model;
        s.field("code_dim", m.code_dim);
        s.field("joint_bands", m.joint_bands);
        s.field("scale_attention", m.scale_attention);
        s.field("code_init_std", m.code_init_std);
        s.field("pose_width", m.pose_width);
        s.field("pose_depth", m.pose_depth);
        s.field("per_identity_pose_correction", m.per_identity_pose_correction);
        s.field("skinning_grid", m.skinning_grid);
        s.field("background_logit", m.background_logit);
        s.field("skinning_noise", m.skinning_noise);
        s.field("bone_prior_sigma", m.bone_prior_sigma);
        s.field("foreground_threshold", m.foreground_threshold);
        s.field("use_identity_codes", m.use_identity_codes);
        s.field("use_pose_condition", m.use_pose_condition);
        s.field("background", m.background);
        s.section("nonrigid", [&](auto& n) {
            n.field("depth", m.nonrigid.depth);
            n.field("width", m.nonrigid.width);
            n.field("inject_layer", m.nonrigid.inject_layer);
            n.field("point_bands", m.nonrigid.point_bands);
        });
        s.section("canonical", [&](auto& n) {
            n.field("depth", m.canonical.depth);
            n.field("width", m.canonical.width);
            n.field("inject_layer", m.canonical.inject_layer);
            n.field("point_bands", m.canonical.point_bands);
            n.field("density_bias", m.canonical.density_bias);
            n.field("density_scale", m.canonical.density_scale);
        });
    });
    v.section("loss", [&](auto& s) {
        s.field("lambda", c.loss.lambda);
        s.field("perceptual", c.loss.perceptual);
        s.field("scales", c.loss.scales);
    });
    v.section("train", [&](auto& s) {
        auto& t = c.train;
        s.field("iterations", t.iterations);
        s.field("patches_per_iter", t.patches_per_iter);
        s.field("patch_size", t.patch_size);
        s.field("samples", t.samples);
        s.field("lr_fast", t.lr_fast);
        s.field("lr_slow", t.lr_slow);
        s.field("lr_decay", t.lr_decay);
        s.field("beta1", t.beta1);
        s.field("beta2", t.beta2);
        s.field("canonical_in_fast_group", t.canonical_in_fast_group);
        s.field("snapshot_every", t.snapshot_every);
        s.field("log_every", t.log_every);
        s.field("mask_dilation", t.mask_dilation);
        s.field("anneal_iterations", t.anneal_iterations);
        s.field("single_precision_storage", t.single_precision_storage);
        s.field("eval_samples", t.eval_samples);
    });
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

} // namespace

std::string perceptual_name(PerceptualKind kind) { return kind == PerceptualKind::Off ? "off" : "gradient_l1"; }

void RunConfig::validate() const {
    require(dataset.identities > 0, "dataset.identities must be positive");
    require(dataset.frames > 0, "dataset.frames must be positive");
    require(dataset.bones >= 2 && dataset.bones <= 8, "dataset.bones must be between 2 and 8");
    require(dataset.width > 0 && dataset.height > 0, "dataset image extents must be positive");
    require(dataset.test_frame_stride > 0, "dataset.test_frame_stride must be positive");
    require(dataset.reference_samples > 0, "dataset.reference_samples must be positive");
    require(model.code_dim > 0, "model.code_dim must be positive");
    require(model.skinning_grid >= 2, "model.skinning_grid must be at least 2");
    require(model.nonrigid.width > 0 && model.nonrigid.depth > 0, "model.nonrigid needs positive width and depth");
    require(model.canonical.width > 0 && model.canonical.depth > 0, "model.canonical needs positive width and depth");
    require(model.nonrigid.inject_layer < model.nonrigid.depth, "model.nonrigid.inject_layer must be below depth");
    require(model.canonical.inject_layer < model.canonical.depth, "model.canonical.inject_layer must be below depth");
    require(model.canonical.density_scale > 0, "model.canonical.density_scale must be positive");
    require(loss.lambda >= 0, "loss.lambda must be nonnegative");
    require(loss.scales > 0, "loss.scales must be positive");
    require(train.iterations > 0, "train.iterations must be positive");
    require(train.patches_per_iter > 0, "train.patches_per_iter must be positive");
    require(train.patch_size > 0, "train.patch_size must be positive");
    require(train.samples > 0, "train.samples must be positive");
    require(train.eval_samples > 0, "train.eval_samples must be positive");
    require(train.lr_fast > 0 && train.lr_slow > 0, "learning rates must be positive");
    require(train.lr_decay > 0 && train.lr_decay <= 1, "train.lr_decay must be in (0, 1]");
    require(train.beta1 >= 0 && train.beta1 < 1 && train.beta2 >= 0 && train.beta2 < 1, "betas must lie in [0, 1)");
    require(train.log_every > 0, "train.log_every must be positive");
    require(static_cast<int>(train.patch_size) <= dataset.width && static_cast<int>(train.patch_size) <= dataset.height,
            "train.patch_size exceeds the image extents");
}

RunConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError("malformed config: " + e.msg);
    }
    RunConfig c;
    Reader r(root, "");
    visit(r, c);
    r.finish();
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string dump_config(const RunConfig& config) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    Writer w(out);
    visit(w, config);
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace polyhuman
