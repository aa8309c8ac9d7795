#include "polyhuman/synthdata.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace polyhuman {

namespace {

using json = nlohmann::json;

Vec3 hsv(double h, double s, double v) {
    const double hh = (h - std::floor(h)) * 6.0;
    const int sector = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
    }
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + s * ab)).norm();
}

std::string number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(std::string_view s, const std::filesystem::path& path) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("bad number '" + std::string(s) + "' in " + path.string());
    }
    return v;
}

std::vector<std::string> tokens(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

std::string frame_name(std::size_t frame, std::size_t camera) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu_c%zu.png", frame, camera);
    return buf;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 json_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }
json box_json(const Box& b) { return {{"lo", vec_json(b.lo)}, {"hi", vec_json(b.hi)}}; }
Box json_box(const json& j) { return {json_vec(j.at("lo")), json_vec(j.at("hi"))}; }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(line);
    }
    return lines;
}

} // namespace

double smoothstep(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s * s * (3.0 - 2.0 * s);
}

Box ToyIdentity::canonical_box(double margin) const {
    Box b = Box::empty_box();
    for (const auto& c : capsules) {
        const Vec3 pad = Vec3::Constant(c.radius + margin);
        b.include(c.a - pad);
        b.include(c.a + pad);
        b.include(c.b - pad);
        b.include(c.b + pad);
    }
    return b;
}

std::vector<Vec3> ToyIdentity::bone_tips() const {
    std::vector<Vec3> out;
    for (const auto& c : capsules) out.push_back(c.b);
    return out;
}

ToyIdentity make_identity(std::uint64_t seed, std::size_t bones, double amplitude, double softness) {
    if (bones < 2 || bones > 8) throw std::invalid_argument("toy bodies have between 2 and 8 bones");
    Rng rng = Rng::substream(seed, "identity");
    const double H = rng.uniform(0.9, 1.1);
    const double rs = rng.uniform(0.85, 1.15);
    const double arm = rng.uniform(0.9, 1.1);
    const double sw = rng.uniform(0.15, 0.2);
    const double hw = rng.uniform(0.08, 0.11);
    // Six hues a sixth of a turn apart, then a darker tier: any twelve
    // consecutive seeds get pairwise distinct palettes.
    const double hue = static_cast<double>(seed % 6) / 6.0 + 0.08;
    const double value = (seed / 6) % 2 == 0 ? 0.95 : 0.6;

    const Vec3 dl(std::cos(-55.0 * std::numbers::pi / 180), std::sin(-55.0 * std::numbers::pi / 180), 0.0);
    const Vec3 dr(-dl.x(), dl.y(), 0.0);
    const double upper = bones >= 8 ? 0.27 * arm : 0.52 * arm;

    std::vector<Vec3> c(8);
    c[0] = Vec3::Zero();
    c[1] = Vec3(0, 0.3 * H, 0);
    c[2] = c[1] + Vec3(0, 0.25 * H, 0);
    c[3] = c[1] + Vec3(sw, 0.2 * H, 0);
    c[4] = c[1] + Vec3(-sw, 0.2 * H, 0);
    c[5] = Vec3(hw, -0.05, 0);
    c[6] = Vec3(-hw, -0.05, 0);
    c[7] = c[3] + upper * dl;
    const std::vector<int> parent{-1, 0, 1, 1, 1, 0, 0, 3};
    const std::vector<Capsule> caps{
        {c[0], c[1], 0.12 * rs},
        {c[1], c[1] + Vec3(0, 0.18 * H, 0), 0.14 * rs},
        {c[2] + Vec3(0, 0.08, 0), c[2] + Vec3(0, 0.14, 0), 0.09 * rs},
        {c[3], c[3] + upper * dl, 0.05 * rs},
        {c[4], c[4] + 0.52 * arm * dr, 0.05 * rs},
        {c[5], c[5] + Vec3(0, -0.8 * H, 0), 0.065 * rs},
        {c[6], c[6] + Vec3(0, -0.8 * H, 0), 0.065 * rs},
        {c[7], c[7] + 0.25 * arm * dl, 0.042 * rs},
    };

    ToyIdentity id;
    id.seed = seed;
    id.amplitude = amplitude;
    id.softness = softness;
    for (std::size_t k = 0; k < bones; ++k) {
        id.topology.parent.push_back(parent[k]);
        id.topology.rest_offsets.push_back(parent[k] < 0 ? c[k] : c[k] - c[static_cast<std::size_t>(parent[k])]);
        id.capsules.push_back(caps[k]);
        const double shift = 0.04 * (static_cast<double>(k % 3) - 1.0);
        id.colors.push_back(hsv(hue + shift, 0.8, value - 0.05 * static_cast<double>(k % 2)));
    }
    return id;
}

PosedBody pose_body(const ToyIdentity& identity, const PoseFrame& pose) {
    const auto& topo = identity.topology;
    const std::size_t K = topo.joints();
    if (pose.orientations.size() != K || pose.joints.empty()) {
        throw std::invalid_argument("pose does not match the " + std::to_string(K) + "-bone toy body");
    }
    const auto canonical = topo.canonical_joints();
    std::vector<Mat3> world(K);
    std::vector<Vec3> pos(K);
    PosedBody body;
    body.identity = &identity;
    body.bounds = Box::empty_box();
    for (std::size_t k = 0; k < K; ++k) {
        const Mat3 local = rodrigues(pose.orientations[k]);
        if (topo.parent[k] < 0) {
            world[k] = local;
            pos[k] = pose.joints[0];
        } else {
            const auto p = static_cast<std::size_t>(topo.parent[k]);
            world[k] = world[p] * local;
            pos[k] = pos[p] + world[p] * topo.rest_offsets[k];
        }
        body.rotations.push_back(world[k].transpose());
        body.translations.push_back(canonical[k] - world[k].transpose() * pos[k]);
        const auto& cap = identity.capsules[k];
        const Vec3 pad = Vec3::Constant(cap.radius);
        for (const Vec3& e : {cap.a, cap.b}) {
            const Vec3 x = world[k] * (e - canonical[k]) + pos[k];
            body.bounds.include(x - pad);
            body.bounds.include(x + pad);
        }
    }
    return body;
}

FieldSample analytic_field(const Vec3& x, const PosedBody& body) {
    const ToyIdentity& id = *body.identity;
    FieldSample out;
    for (std::size_t k = 0; k < id.capsules.size(); ++k) {
        const auto& cap = id.capsules[k];
        const Vec3 y = body.rotations[k] * x + body.translations[k];
        const double d = segment_distance(y, cap.a, cap.b);
        if (d >= cap.radius) continue;
        const double s = id.amplitude * smoothstep((cap.radius - d) / id.softness);
        out.density += s;
        out.color += s * id.colors[k];
    }
    if (out.density > 0.0) out.color /= out.density;
    return out;
}

FieldSample analytic_field(const Vec3& x, const PoseFrame& pose, const ToyIdentity& identity) {
    return analytic_field(x, pose_body(identity, pose));
}

std::size_t oracle_samples(OracleQuality quality) { return quality == OracleQuality::Reference ? 1024 : 256; }

RayColor oracle_ray(const Ray& ray, const PosedBody& body, std::size_t samples) {
    if (ray.empty) return {};
    Rng unused(0);
    const auto depths = stratified_sample(ray, samples, unused, false);
    const auto deltas = sample_deltas(depths, ray.near, ray.far);
    std::vector<Vec3> colors(samples, Vec3::Zero());
    std::vector<double> dens(samples, 0.0);
    const auto hit = body.bounds.intersect(ray.origin, ray.direction);
    if (!hit) return {};
    for (std::size_t m = 0; m < samples; ++m) {
        if (depths[m] < hit->first || depths[m] > hit->second) continue;
        const auto f = analytic_field(ray.origin + depths[m] * ray.direction, body);
        colors[m] = f.color;
        dens[m] = f.density;
    }
    return composite_ray(colors, dens, deltas);
}

Image oracle_render(const CameraModel& camera, const PoseFrame& pose, const ToyIdentity& identity, const Box& scene,
                    const Vec3& background, std::size_t samples) {
    const PosedBody body = pose_body(identity, pose);
    Image img = Image::filled(camera.width, camera.height, background);
    for (int v = 0; v < camera.height; ++v) {
        for (int u = 0; u < camera.width; ++u) {
            const auto rc = oracle_ray(pixel_ray(camera, u, v, scene), body, samples);
            img.set_pixel(u, v, rc.color + (1.0 - rc.alpha) * background);
            img.alpha[static_cast<std::size_t>(v) * camera.width + u] = rc.alpha;
        }
    }
    return img;
}

std::vector<PoseFrame> make_motion(const ToyIdentity& identity, std::size_t frames, std::uint64_t seed) {
    // Swing amplitudes per joint and axis; the norm of each row stays below 1 so
    // that with rates under 0.18 rad/frame no joint turns more than 0.18 rad per frame.
    static const Vec3 kAmplitude[8] = {{0.1, 0.6, 0.05}, {0.25, 0.3, 0.15}, {0.35, 0.4, 0.1}, {0.6, 0.3, 0.6},
                                       {0.6, 0.3, 0.6},  {0.6, 0.1, 0.15},  {0.6, 0.1, 0.15}, {0.2, 0.1, 0.8}};
    const std::size_t K = identity.topology.joints();
    Rng rng = Rng::substream(seed, "motion");
    std::vector<Vec3> amp(K), phase(K);
    std::vector<double> rate(K);
    for (std::size_t k = 0; k < K; ++k) {
        amp[k] = kAmplitude[k] * rng.uniform(0.7, 1.0);
        phase[k] = Vec3(rng.uniform(0, 2 * std::numbers::pi), rng.uniform(0, 2 * std::numbers::pi),
                        rng.uniform(0, 2 * std::numbers::pi));
        rate[k] = rng.uniform(0.10, 0.18);
    }
    const double bob_rate = rng.uniform(0.1, 0.2);
    std::vector<PoseFrame> out(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const double t = static_cast<double>(f);
        PoseFrame& p = out[f];
        p.orientations.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
            for (int a = 0; a < 3; ++a) p.orientations[k][a] = amp[k][a] * std::sin(rate[k] * t + phase[k][a]);
        }
        const Vec3 root(0.03 * std::sin(bob_rate * t), 0.02 * std::sin(2 * bob_rate * t + 1.0),
                        0.03 * std::cos(bob_rate * t));
        p.joints.assign(1, root);
        const auto bt = forward_kinematics(identity.topology, p);
        p.joints.resize(K);
        for (std::size_t k = 0; k < K; ++k) p.joints[k] = Vec3(bt.joints[k * 3], bt.joints[k * 3 + 1], bt.joints[k * 3 + 2]);
    }
    return out;
}

std::string split_name(Split s) { return s == Split::Train ? "train" : "test"; }

std::vector<SubjectSpec> DatasetManifest::subjects() const {
    std::vector<SubjectSpec> out;
    for (const auto& id : identities) out.push_back(id.subject);
    return out;
}

std::vector<const FrameRecord*> DatasetManifest::split(Split s) const {
    std::vector<const FrameRecord*> out;
    for (const auto& r : records)
        if (r.split == s) out.push_back(&r);
    return out;
}

PoseFrame DatasetManifest::pose(const FrameRecord& r) const {
    PoseFrame p = identities.at(r.identity).poses.at(r.frame);
    p.camera = cameras.at(r.camera);
    return p;
}

ToyIdentity DatasetManifest::toy_identity(std::size_t i) const {
    return make_identity(identities.at(i).seed, identities.at(i).subject.topology.joints(), amplitude, softness);
}

bool operator==(const DatasetManifest& a, const DatasetManifest& b) {
    if (a.format_version != b.format_version || a.width != b.width || a.height != b.height ||
        !(a.scene_box == b.scene_box) || a.background != b.background || a.amplitude != b.amplitude ||
        a.softness != b.softness || a.records != b.records || a.identities.size() != b.identities.size() ||
        a.cameras.size() != b.cameras.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.cameras.size(); ++i)
        if (!(a.cameras[i] == b.cameras[i])) return false;
    for (std::size_t i = 0; i < a.identities.size(); ++i) {
        const auto& x = a.identities[i];
        const auto& y = b.identities[i];
        if (x.seed != y.seed || !(x.subject == y.subject) || x.poses.size() != y.poses.size()) return false;
        for (std::size_t f = 0; f < x.poses.size(); ++f) {
            if (x.poses[f].joints != y.poses[f].joints || x.poses[f].orientations != y.poses[f].orientations) {
                return false;
            }
        }
    }
    return true;
}

DatasetManifest export_dataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    if (config.identities == 0 || config.frames == 0) throw std::invalid_argument("need identities and frames");
    if (config.test_frame_stride == 0) throw std::invalid_argument("test_frame_stride must be positive");
    DatasetManifest m;
    m.width = config.width;
    m.height = config.height;
    m.background = config.background;
    m.amplitude = config.amplitude;
    m.softness = config.softness;
    m.root = out_dir;

    std::vector<ToyIdentity> toys;
    m.scene_box = Box::empty_box();
    for (std::size_t i = 0; i < config.identities; ++i) {
        toys.push_back(make_identity(config.seed + i, config.bones, config.amplitude, config.softness));
        IdentityRecord rec;
        rec.seed = config.seed + i;
        rec.subject = toys.back().subject();
        rec.poses = make_motion(toys.back(), config.frames, mix_seed(config.seed, "motion", i));
        for (const auto& p : rec.poses) {
            const Box b = pose_body(toys.back(), p).bounds;
            m.scene_box.include(b.lo);
            m.scene_box.include(b.hi);
        }
        m.identities.push_back(std::move(rec));
    }
    m.scene_box = m.scene_box.expanded(0.05);

    for (std::size_t c = 0; c <= config.test_cameras; ++c) {
        const double step = std::ceil(static_cast<double>(c) / 2.0);
        const double az = (c % 2 == 1 ? 1.0 : -1.0) * step * config.test_azimuth_deg * std::numbers::pi / 180.0;
        const Vec3 eye(config.camera_distance * std::sin(az), config.camera_height, config.camera_distance * std::cos(az));
        m.cameras.push_back(CameraModel::look_at(eye, Vec3::Zero(), Vec3::UnitY(), config.focal, config.width, config.height));
    }

    try {
        for (std::size_t i = 0; i < config.identities; ++i) {
            fs::create_directories(out_dir / "images" / std::to_string(i));
            fs::create_directories(out_dir / "masks" / std::to_string(i));
        }
        fs::create_directories(out_dir / "poses");
    } catch (const fs::filesystem_error& e) {
        throw std::runtime_error("cannot create dataset directories under " + out_dir.string() + ": " + e.what());
    }

    for (std::size_t i = 0; i < config.identities; ++i) {
        for (std::size_t f = 0; f < config.frames; ++f) {
            for (std::size_t c = 0; c <= config.test_cameras; ++c) {
                if (c > 0 && f % config.test_frame_stride != 0) continue;
                FrameRecord r;
                r.identity = i;
                r.frame = f;
                r.camera = c;
                r.split = c == 0 ? Split::Train : Split::Test;
                r.image = "images/" + std::to_string(i) + "/" + frame_name(f, c);
                r.mask = "masks/" + std::to_string(i) + "/" + frame_name(f, c);
                const Image img = oracle_render(m.cameras[c], m.identities[i].poses[f], toys[i], m.scene_box,
                                                config.background, config.reference_samples);
                write_png(out_dir / r.image, img);
                write_mask_png(out_dir / r.mask, threshold_alpha(img));
                m.records.push_back(r);
            }
        }
    }

    for (std::size_t i = 0; i < config.identities; ++i) {
        std::string text = "# frame, then K joint positions (x y z), then K axis-angle orientations (x y z)\n";
        for (std::size_t f = 0; f < config.frames; ++f) {
            const auto& p = m.identities[i].poses[f];
            text += std::to_string(f);
            for (const auto& v : p.joints)
                for (int a = 0; a < 3; ++a) text += " " + number(v[a]);
            for (const auto& v : p.orientations)
                for (int a = 0; a < 3; ++a) text += " " + number(v[a]);
            text += "\n";
        }
        write_text(out_dir / "poses" / (std::to_string(i) + ".txt"), text);
    }
    std::string cams = "# index width height fx fy cx cy r00 r01 r02 r10 r11 r12 r20 r21 r22 t0 t1 t2 (world to camera)\n";
    for (std::size_t c = 0; c < m.cameras.size(); ++c) {
        const auto& cam = m.cameras[c];
        cams += std::to_string(c) + " " + std::to_string(cam.width) + " " + std::to_string(cam.height);
        for (double v : {cam.fx, cam.fy, cam.cx, cam.cy}) cams += " " + number(v);
        for (int i = 0; i < 9; ++i) cams += " " + number(cam.rotation(i / 3, i % 3));
        for (int i = 0; i < 3; ++i) cams += " " + number(cam.translation[i]);
        cams += "\n";
    }
    write_text(out_dir / "cameras.txt", cams);

    json j;
    j["format_version"] = m.format_version;
    j["width"] = m.width;
    j["height"] = m.height;
    j["background"] = vec_json(m.background);
    j["amplitude"] = m.amplitude;
    j["softness"] = m.softness;
    j["scene_box"] = box_json(m.scene_box);
    j["cameras"] = "cameras.txt";
    j["identities"] = json::array();
    for (std::size_t i = 0; i < m.identities.size(); ++i) {
        const auto& id = m.identities[i];
        json offsets = json::array();
        for (const auto& o : id.subject.topology.rest_offsets) offsets.push_back(vec_json(o));
        json tips = json::array();
        for (const auto& t : id.subject.bone_tips) tips.push_back(vec_json(t));
        j["identities"].push_back({{"seed", id.seed},
                                   {"parent", id.subject.topology.parent},
                                   {"rest_offsets", offsets},
                                   {"canonical_box", box_json(id.subject.canonical_box)},
                                   {"bone_tips", tips},
                                   {"frames", id.poses.size()},
                                   {"poses", "poses/" + std::to_string(i) + ".txt"}});
    }
    j["records"] = json::array();
    for (const auto& r : m.records) {
        j["records"].push_back({{"identity", r.identity},
                                {"frame", r.frame},
                                {"camera", r.camera},
                                {"split", split_name(r.split)},
                                {"image", r.image},
                                {"mask", r.mask}});
    }
    write_text(out_dir / "manifest.json", j.dump(2) + "\n");
    return m;
}

DatasetManifest load_dataset(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
    }
    DatasetManifest m;
    m.root = dir;
    try {
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != 1) {
            throw std::runtime_error("unsupported manifest format_version " + std::to_string(m.format_version));
        }
        m.width = j.at("width").get<int>();
        m.height = j.at("height").get<int>();
        m.background = json_vec(j.at("background"));
        m.amplitude = j.at("amplitude").get<double>();
        m.softness = j.at("softness").get<double>();
        m.scene_box = json_box(j.at("scene_box"));

        const auto cam_path = dir / j.at("cameras").get<std::string>();
        for (const auto& line : read_lines(cam_path)) {
            const auto t = tokens(line);
            if (t.size() != 19) throw std::runtime_error("camera line with " + std::to_string(t.size()) + " fields in " + cam_path.string());
            CameraModel cam;
            cam.width = std::stoi(t[1]);
            cam.height = std::stoi(t[2]);
            cam.fx = parse_number(t[3], cam_path);
            cam.fy = parse_number(t[4], cam_path);
            cam.cx = parse_number(t[5], cam_path);
            cam.cy = parse_number(t[6], cam_path);
            for (int i = 0; i < 9; ++i) cam.rotation(i / 3, i % 3) = parse_number(t[7 + static_cast<std::size_t>(i)], cam_path);
            for (int i = 0; i < 3; ++i) cam.translation[i] = parse_number(t[16 + static_cast<std::size_t>(i)], cam_path);
            cam.validate();
            m.cameras.push_back(cam);
        }

        for (const auto& ji : j.at("identities")) {
            IdentityRecord rec;
            rec.seed = ji.at("seed").get<std::uint64_t>();
            rec.subject.topology.parent = ji.at("parent").get<std::vector<int>>();
            for (const auto& o : ji.at("rest_offsets")) rec.subject.topology.rest_offsets.push_back(json_vec(o));
            rec.subject.topology.validate();
            rec.subject.canonical_box = json_box(ji.at("canonical_box"));
            if (ji.contains("bone_tips"))
                for (const auto& t : ji.at("bone_tips")) rec.subject.bone_tips.push_back(json_vec(t));
            const std::size_t K = rec.subject.topology.joints();
            const auto pose_path = dir / ji.at("poses").get<std::string>();
            for (const auto& line : read_lines(pose_path)) {
                const auto t = tokens(line);
                if (t.size() != 1 + 6 * K) throw std::runtime_error("pose line with " + std::to_string(t.size()) + " fields in " + pose_path.string());
                PoseFrame p;
                p.joints.resize(K);
                p.orientations.resize(K);
                for (std::size_t k = 0; k < K; ++k)
                    for (int a = 0; a < 3; ++a) {
                        p.joints[k][a] = parse_number(t[1 + k * 3 + static_cast<std::size_t>(a)], pose_path);
                        p.orientations[k][a] = parse_number(t[1 + 3 * K + k * 3 + static_cast<std::size_t>(a)], pose_path);
                    }
                rec.poses.push_back(std::move(p));
            }
            if (rec.poses.size() != ji.at("frames").get<std::size_t>()) {
                throw std::runtime_error(pose_path.string() + " does not hold the declared frame count");
            }
            m.identities.push_back(std::move(rec));
        }

        for (const auto& jr : j.at("records")) {
            FrameRecord r;
            r.identity = jr.at("identity").get<std::size_t>();
            r.frame = jr.at("frame").get<std::size_t>();
            r.camera = jr.at("camera").get<std::size_t>();
            const auto split = jr.at("split").get<std::string>();
            if (split != "train" && split != "test") throw std::runtime_error("unknown split '" + split + "'");
            r.split = split == "train" ? Split::Train : Split::Test;
            r.image = jr.at("image").get<std::string>();
            r.mask = jr.at("mask").get<std::string>();
            if (r.identity >= m.identities.size() || r.frame >= m.identities[r.identity].poses.size() ||
                r.camera >= m.cameras.size()) {
                throw std::runtime_error("record " + r.image + " refers to a missing identity, frame or camera");
            }
            for (const auto& rel : {r.image, r.mask}) {
                if (!std::filesystem::exists(dir / rel)) throw std::runtime_error("missing file " + (dir / rel).string());
            }
            m.records.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
    }
    return m;
}

} // namespace polyhuman
