#include "polyhuman/skeleton.hpp"

#include "polyhuman/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace polyhuman {

namespace {

// Forward-mode scalar carrying one tangent, used to differentiate rodrigues.
struct Dual {
    double v = 0.0;
    double d = 0.0;
};
Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }
Dual operator+(double s, Dual a) { return {s + a.v, a.d}; }
Dual operator-(double s, Dual a) { return {s - a.v, -a.d}; }
Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
Dual sqrt(Dual a) {
    const double r = std::sqrt(a.v);
    return {r, a.d / (2.0 * r)};
}
double value_of(double x) { return x; }
double value_of(Dual x) { return x.v; }

template <class T>
std::array<T, 9> rodrigues_impl(T x, T y, T z) {
    using std::sin;
    using std::sqrt;
    const T t2 = x * x + y * y + z * z;
    T a, b;
    if (value_of(t2) < 1e-16) {
        a = 1.0 - (1.0 / 6.0) * t2;
        b = 0.5 - (1.0 / 24.0) * t2;
    } else {
        const T t = sqrt(t2);
        const T h = sin(0.5 * t);
        a = sin(t) / t;
        b = 2.0 * (h * h) / t2;
    }
    return {1.0 + b * (x * x - t2), b * (x * y) - a * z,     b * (x * z) + a * y,
            b * (x * y) + a * z,     1.0 + b * (y * y - t2), b * (y * z) - a * x,
            b * (x * z) - a * y,     b * (y * z) + a * x,     1.0 + b * (z * z - t2)};
}

void require_rows(const Tensor& t, std::size_t cols, const char* what) {
    if (t.rank() != 2 || t.dim(1) != cols) {
        throw ShapeError(std::string(what) + ": expected [N x " + std::to_string(cols) + "], got " +
                         shape_to_string(t.shape()));
    }
}

struct Trilinear {
    std::size_t corner[8];
    double w[8];
    double dw[3][8];  // d w / d (grid coordinate)
};

bool locate(const double* y, std::size_t grid, const Box& box, Trilinear& out) {
    std::size_t i0[3];
    double f[3];
    const double cells = static_cast<double>(grid - 1);
    for (int a = 0; a < 3; ++a) {
        const double g = (y[a] - box.lo[a]) / (box.hi[a] - box.lo[a]) * cells;
        if (!(g >= 0.0 && g <= cells)) return false;
        i0[a] = std::min(static_cast<std::size_t>(g), grid - 2);
        f[a] = g - static_cast<double>(i0[a]);
    }
    for (int c = 0; c < 8; ++c) {
        const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
        const double wx = bx ? f[0] : 1.0 - f[0];
        const double wy = by ? f[1] : 1.0 - f[1];
        const double wz = bz ? f[2] : 1.0 - f[2];
        out.corner[c] = ((i0[2] + bz) * grid + (i0[1] + by)) * grid + (i0[0] + bx);
        out.w[c] = wx * wy * wz;
        out.dw[0][c] = (bx ? 1.0 : -1.0) * wy * wz;
        out.dw[1][c] = wx * (by ? 1.0 : -1.0) * wz;
        out.dw[2][c] = wx * wy * (bz ? 1.0 : -1.0);
    }
    return true;
}

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + s * ab)).norm();
}

} // namespace

void SkeletonTopology::validate() const {
    if (parent.empty()) throw std::invalid_argument("malformed skeleton: no joints");
    if (rest_offsets.size() != parent.size()) {
        throw std::invalid_argument("malformed skeleton: " + std::to_string(parent.size()) + " parents but " +
                                    std::to_string(rest_offsets.size()) + " rest offsets");
    }
    if (parent[0] != -1) throw std::invalid_argument("malformed skeleton: joint 0 must be the root");
    for (std::size_t k = 1; k < parent.size(); ++k) {
        if (parent[k] < 0 || static_cast<std::size_t>(parent[k]) >= k) {
            throw std::invalid_argument("malformed skeleton: joint " + std::to_string(k) + " has parent " +
                                        std::to_string(parent[k]) + ", expected an earlier joint");
        }
    }
    for (std::size_t k = 0; k < parent.size(); ++k) {
        if (!rest_offsets[k].allFinite()) {
            throw std::invalid_argument("malformed skeleton: joint " + std::to_string(k) + " offset is not finite");
        }
    }
}

std::vector<Vec3> SkeletonTopology::canonical_joints() const {
    std::vector<Vec3> c(joints());
    for (std::size_t k = 0; k < joints(); ++k) {
        c[k] = parent[k] < 0 ? rest_offsets[k] : c[static_cast<std::size_t>(parent[k])] + rest_offsets[k];
    }
    return c;
}

Mat3 BoneTransforms::rotation(std::size_t k) const {
    Mat3 r;
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = rotations[k * 9 + static_cast<std::size_t>(i)];
    return r;
}

Vec3 BoneTransforms::translation(std::size_t k) const {
    return {translations[k * 3], translations[k * 3 + 1], translations[k * 3 + 2]};
}

Mat3 rodrigues(const Vec3& aa) {
    const auto r = rodrigues_impl<double>(aa.x(), aa.y(), aa.z());
    Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
    return m;
}

Tensor rodrigues(const Tensor& aa) {
    require_rows(aa, 3, "rodrigues");
    const std::size_t k = aa.dim(0);
    const auto in = aa.data();
    std::vector<double> out(k * 9);
    for (std::size_t r = 0; r < k; ++r) {
        const auto m = rodrigues_impl<double>(in[r * 3], in[r * 3 + 1], in[r * 3 + 2]);
        std::copy(m.begin(), m.end(), out.begin() + static_cast<std::ptrdiff_t>(r * 9));
    }
    std::vector<double> saved(in.begin(), in.end());
    return make_result("rodrigues", {k, 9}, std::move(out), {aa},
                       [k, saved](std::span<const double>, std::span<const double> g,
                                  std::span<const std::span<double>> grads) {
                           auto gx = grads[0];
                           for (std::size_t r = 0; r < k; ++r) {
                               for (int axis = 0; axis < 3; ++axis) {
                                   Dual v[3];
                                   for (int a = 0; a < 3; ++a) v[a] = {saved[r * 3 + a], a == axis ? 1.0 : 0.0};
                                   const auto m = rodrigues_impl<Dual>(v[0], v[1], v[2]);
                                   double acc = 0.0;
                                   for (std::size_t i = 0; i < 9; ++i) acc += g[r * 9 + i] * m[i].d;
                                   gx[r * 3 + static_cast<std::size_t>(axis)] += acc;
                               }
                           }
                       });
}

Tensor batched_matmul3(const Tensor& a, const Tensor& b) {
    require_rows(a, 9, "batched_matmul3");
    require_rows(b, 9, "batched_matmul3");
    if (a.dim(0) != b.dim(0)) {
        throw ShapeError("batched_matmul3: batch mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    }
    const std::size_t k = a.dim(0);
    const auto x = a.data();
    const auto y = b.data();
    std::vector<double> out(k * 9, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
        const double* A = x.data() + r * 9;
        const double* B = y.data() + r * 9;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int l = 0; l < 3; ++l) s += A[i * 3 + l] * B[l * 3 + j];
                out[r * 9 + static_cast<std::size_t>(i * 3 + j)] = s;
            }
    }
    return make_result("batched_matmul3", {k, 9}, std::move(out), {a, b},
                       [k, a, b](std::span<const double>, std::span<const double> g,
                                 std::span<const std::span<double>> grads) {
                           const auto x = a.data();
                           const auto y = b.data();
                           for (std::size_t r = 0; r < k; ++r) {
                               const double* A = x.data() + r * 9;
                               const double* B = y.data() + r * 9;
                               const double* G = g.data() + r * 9;
                               for (int i = 0; i < 3; ++i)
                                   for (int j = 0; j < 3; ++j)
                                       for (int l = 0; l < 3; ++l) {
                                           if (!grads[0].empty()) grads[0][r * 9 + i * 3 + l] += G[i * 3 + j] * B[l * 3 + j];
                                           if (!grads[1].empty()) grads[1][r * 9 + l * 3 + j] += A[i * 3 + l] * G[i * 3 + j];
                                       }
                           }
                       });
}

Tensor axis_angles_tensor(const std::vector<Vec3>& v) {
    std::vector<double> out(v.size() * 3);
    for (std::size_t k = 0; k < v.size(); ++k)
        for (int a = 0; a < 3; ++a) out[k * 3 + static_cast<std::size_t>(a)] = v[k][a];
    return Tensor::from({v.size(), 3}, std::move(out));
}

BoneTransforms forward_kinematics(const SkeletonTopology& topology, const Tensor& local_rotations,
                                  const Vec3& root_position) {
    topology.validate();
    const std::size_t joints = topology.joints();
    if (local_rotations.shape() != Shape{joints, 9}) {
        throw ShapeError("forward_kinematics: expected [" + std::to_string(joints) + " x 9] rotations, got " +
                         shape_to_string(local_rotations.shape()));
    }
    const auto canonical = topology.canonical_joints();
    auto column = [](const Vec3& v) { return Tensor::from({3, 1}, {v.x(), v.y(), v.z()}); };

    std::vector<Tensor> world_rot(joints), world_pos(joints);
    std::vector<Tensor> rot_rows, trans_rows, joint_rows;
    for (std::size_t k = 0; k < joints; ++k) {
        const Tensor local = reshape(narrow(local_rotations, 0, k, 1), {3, 3});
        if (topology.parent[k] < 0) {
            world_rot[k] = local;
            world_pos[k] = column(root_position);
        } else {
            const auto p = static_cast<std::size_t>(topology.parent[k]);
            world_rot[k] = matmul(world_rot[p], local);
            world_pos[k] = add(world_pos[p], matmul(world_rot[p], column(topology.rest_offsets[k])));
        }
        const Tensor inv = transpose(world_rot[k]);
        const Tensor t = sub(column(canonical[k]), matmul(inv, world_pos[k]));
        rot_rows.push_back(reshape(inv, {1, 9}));
        trans_rows.push_back(reshape(t, {1, 3}));
        joint_rows.push_back(reshape(world_pos[k], {1, 3}));
    }
    return {concat(rot_rows, 0), concat(trans_rows, 0), concat(joint_rows, 0)};
}

BoneTransforms forward_kinematics(const SkeletonTopology& topology, const PoseFrame& pose) {
    if (pose.orientations.size() != topology.joints() || pose.joints.empty()) {
        throw std::invalid_argument("forward_kinematics: pose has " + std::to_string(pose.orientations.size()) +
                                    " orientations for a " + std::to_string(topology.joints()) + "-joint skeleton");
    }
    return forward_kinematics(topology, rodrigues(axis_angles_tensor(pose.orientations)), pose.joints[0]);
}

PoseCorrector PoseCorrector::create(std::size_t joints, std::size_t width, std::size_t depth, Rng& rng,
                                    const std::string& name) {
    if (depth < 1) throw std::invalid_argument("pose corrector needs at least one hidden layer");
    PoseCorrector pc;
    std::size_t in = joints * 3;
    for (std::size_t l = 0; l < depth; ++l) {
        pc.layers.push_back(Linear::create(in, width, rng, name + ".layer" + std::to_string(l)));
        in = width;
    }
    pc.layers.push_back(Linear::create(in, joints * 3, rng, name + ".out", true));
    return pc;
}

CorrectedPose PoseCorrector::operator()(const Tensor& axis_angles) const {
    require_rows(axis_angles, 3, "pose corrector");
    const std::size_t joints = axis_angles.dim(0);
    Tensor h = reshape(axis_angles, {1, joints * 3});
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) h = relu(layers[l](h));
    const Tensor delta = reshape(layers.back()(h), {joints, 3});
    return {delta, batched_matmul3(rodrigues(axis_angles), rodrigues(delta))};
}

void PoseCorrector::collect(ParameterList& out) const {
    for (const auto& l : layers) l.collect(out);
}

SkinningField SkinningField::create(std::size_t grid, std::size_t bones, const Box& box, Rng& rng,
                                    const std::string& name, double background_logit, double noise) {
    if (grid < 2) throw std::invalid_argument("skinning grid needs at least 2 vertices per axis");
    if (bones < 1) throw std::invalid_argument("skinning field needs at least one bone");
    if (!((box.hi - box.lo).array() > 0.0).all()) throw std::invalid_argument("skinning box is empty");
    SkinningField f;
    f.grid = grid;
    f.bones = bones;
    f.box = box;
    const std::size_t rows = grid * grid * grid;
    std::vector<double> v(rows * (bones + 1));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < bones; ++c) v[r * (bones + 1) + c] = rng.normal(0.0, noise);
        v[r * (bones + 1) + bones] = background_logit;
    }
    f.logits = Tensor::parameter({rows, bones + 1}, std::move(v), name);
    return f;
}

void SkinningField::add_bone_prior(const SkeletonTopology& topology, double sigma, std::span<const Vec3> tips) {
    if (topology.joints() != bones) throw std::invalid_argument("bone prior: topology does not match field");
    if (!tips.empty() && tips.size() != bones) throw std::invalid_argument("bone prior: one tip per bone expected");
    const auto joints = topology.canonical_joints();
    std::vector<std::vector<std::pair<Vec3, Vec3>>> segments(bones);
    for (std::size_t k = 1; k < bones; ++k) {
        const auto p = static_cast<std::size_t>(topology.parent[k]);
        segments[p].emplace_back(joints[p], joints[k]);
    }
    for (std::size_t k = 0; k < tips.size(); ++k) segments[k].emplace_back(joints[k], tips[k]);
    for (std::size_t k = 0; k < bones; ++k) {
        if (segments[k].empty()) segments[k].emplace_back(joints[k], joints[k] + 0.5 * topology.rest_offsets[k]);
    }
    auto values = logits.mutable_data();
    for (std::size_t iz = 0; iz < grid; ++iz)
        for (std::size_t iy = 0; iy < grid; ++iy)
            for (std::size_t ix = 0; ix < grid; ++ix) {
                const Vec3 p = vertex(ix, iy, iz);
                const std::size_t row = (iz * grid + iy) * grid + ix;
                for (std::size_t k = 0; k < bones; ++k) {
                    double d = std::numeric_limits<double>::infinity();
                    for (const auto& [a, b] : segments[k]) d = std::min(d, segment_distance(p, a, b));
                    values[row * (bones + 1) + k] -= d * d / (2.0 * sigma * sigma);
                }
            }
}

Tensor SkinningField::weights() const { return softmax(logits, 1); }

Vec3 SkinningField::vertex(std::size_t ix, std::size_t iy, std::size_t iz) const {
    const double s = 1.0 / static_cast<double>(grid - 1);
    return box.lo + (box.hi - box.lo).cwiseProduct(Vec3(ix * s, iy * s, iz * s));
}

Tensor transform_points(const Tensor& points, const Tensor& rotations, const Tensor& translations) {
    require_rows(points, 3, "transform_points");
    require_rows(rotations, 9, "transform_points");
    require_rows(translations, 3, "transform_points");
    const std::size_t n = points.dim(0);
    const std::size_t k = rotations.dim(0);
    if (translations.dim(0) != k) throw ShapeError("transform_points: rotation/translation count mismatch");
    const auto x = points.data();
    const auto R = rotations.data();
    const auto t = translations.data();
    std::vector<double> out(n * 3 * k);
    for (std::size_t p = 0; p < n; ++p) {
        const double* xp = x.data() + p * 3;
        double* yp = out.data() + p * 3 * k;
        for (std::size_t b = 0; b < k; ++b) {
            const double* Rb = R.data() + b * 9;
            for (int i = 0; i < 3; ++i) {
                yp[b * 3 + i] = Rb[i * 3] * xp[0] + Rb[i * 3 + 1] * xp[1] + Rb[i * 3 + 2] * xp[2] + t[b * 3 + i];
            }
        }
    }
    return make_result("transform_points", {n, 3 * k}, std::move(out), {points, rotations, translations},
                       [n, k, points, rotations](std::span<const double>, std::span<const double> g,
                                                 std::span<const std::span<double>> grads) {
                           const auto x = points.data();
                           const auto R = rotations.data();
                           auto gx = grads[0];
                           auto gR = grads[1];
                           auto gt = grads[2];
                           for (std::size_t p = 0; p < n; ++p) {
                               const double* xp = x.data() + p * 3;
                               const double* gp = g.data() + p * 3 * k;
                               for (std::size_t b = 0; b < k; ++b) {
                                   const double* Rb = R.data() + b * 9;
                                   for (std::size_t i = 0; i < 3; ++i) {
                                       const double gi = gp[b * 3 + i];
                                       if (gi == 0.0) continue;
                                       if (!gx.empty())
                                           for (std::size_t j = 0; j < 3; ++j) gx[p * 3 + j] += gi * Rb[i * 3 + j];
                                       if (!gR.empty())
                                           for (std::size_t j = 0; j < 3; ++j) gR[b * 9 + i * 3 + j] += gi * xp[j];
                                       if (!gt.empty()) gt[b * 3 + i] += gi;
                                   }
                               }
                           }
                       });
}

Tensor sample_bone_weights(const Tensor& canonical_points, const Tensor& grid_weights, std::size_t grid,
                           const Box& box) {
    const std::size_t n = canonical_points.dim(0);
    const std::size_t channels = grid_weights.rank() == 2 ? grid_weights.dim(1) : 0;
    if (channels < 2 || grid_weights.dim(0) != grid * grid * grid) {
        throw ShapeError("sample_bone_weights: grid weights " + shape_to_string(grid_weights.shape()) +
                         " do not match a " + std::to_string(grid) + "^3 lattice");
    }
    const std::size_t k = channels - 1;
    require_rows(canonical_points, 3 * k, "sample_bone_weights");
    const auto y = canonical_points.data();
    const auto W = grid_weights.data();
    std::vector<double> out(n * k, 0.0);
    Trilinear tri;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t b = 0; b < k; ++b) {
            if (!locate(y.data() + p * 3 * k + b * 3, grid, box, tri)) continue;
            double v = 0.0;
            for (int c = 0; c < 8; ++c) v += tri.w[c] * W[tri.corner[c] * channels + b];
            out[p * k + b] = v;
        }
    }
    return make_result(
        "sample_bone_weights", {n, k}, std::move(out), {canonical_points, grid_weights},
        [n, k, channels, grid, box, canonical_points, grid_weights](
            std::span<const double>, std::span<const double> g, std::span<const std::span<double>> grads) {
            const auto y = canonical_points.data();
            const auto W = grid_weights.data();
            auto gy = grads[0];
            auto gW = grads[1];
            const Vec3 scale = Vec3::Constant(static_cast<double>(grid - 1)).cwiseQuotient(box.hi - box.lo);
            Trilinear tri;
            for (std::size_t p = 0; p < n; ++p) {
                for (std::size_t b = 0; b < k; ++b) {
                    const double gv = g[p * k + b];
                    if (gv == 0.0) continue;
                    if (!locate(y.data() + p * 3 * k + b * 3, grid, box, tri)) continue;
                    if (!gW.empty())
                        for (int c = 0; c < 8; ++c) gW[tri.corner[c] * channels + b] += gv * tri.w[c];
                    if (!gy.empty()) {
                        for (int a = 0; a < 3; ++a) {
                            double d = 0.0;
                            for (int c = 0; c < 8; ++c) d += tri.dw[a][c] * W[tri.corner[c] * channels + b];
                            gy[p * 3 * k + b * 3 + static_cast<std::size_t>(a)] += gv * d * scale[a];
                        }
                    }
                }
            }
        });
}

ObservationWeights normalize_weights(const Tensor& wc) {
    if (wc.rank() != 2) throw ShapeError("normalize_weights: expected [P x K], got " + shape_to_string(wc.shape()));
    const std::size_t n = wc.dim(0);
    const std::size_t k = wc.dim(1);
    const Tensor mass = sum(wc, 1, true);
    const auto w = wc.data();
    const auto m = mass.data();
    std::vector<double> out(n * k, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        if (m[p] <= 0.0) continue;
        for (std::size_t b = 0; b < k; ++b) out[p * k + b] = w[p * k + b] / m[p];
    }
    std::vector<double> masses(m.begin(), m.end());
    Tensor normalized = make_result("normalize_weights", {n, k}, std::move(out), {wc},
                                    [n, k, masses](std::span<const double> y, std::span<const double> g,
                                                   std::span<const std::span<double>> grads) {
                                        auto gw = grads[0];
                                        for (std::size_t p = 0; p < n; ++p) {
                                            if (masses[p] <= 0.0) continue;
                                            double dot = 0.0;
                                            for (std::size_t b = 0; b < k; ++b) dot += g[p * k + b] * y[p * k + b];
                                            for (std::size_t b = 0; b < k; ++b)
                                                gw[p * k + b] += (g[p * k + b] - dot) / masses[p];
                                        }
                                    });
    return {normalized, mass};
}

ObservationWeights observation_weights(const Tensor& points, const BoneTransforms& transforms,
                                       const SkinningField& field, const Tensor& grid_weights) {
    if (transforms.size() != field.bones) {
        throw ShapeError("observation_weights: " + std::to_string(transforms.size()) + " transforms for a " +
                         std::to_string(field.bones) + "-bone field");
    }
    const Tensor y = transform_points(points, transforms.rotations, transforms.translations);
    return normalize_weights(sample_bone_weights(y, grid_weights, field.grid, field.box));
}

Tensor blend_points(const Tensor& y, const Tensor& w) {
    require_rows(y, 3 * (w.rank() == 2 ? w.dim(1) : 0), "blend_points");
    if (w.dim(0) != y.dim(0)) throw ShapeError("blend_points: row count mismatch");
    const std::size_t n = y.dim(0);
    const std::size_t k = w.dim(1);
    const auto yv = y.data();
    const auto wv = w.data();
    std::vector<double> out(n * 3, 0.0);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t b = 0; b < k; ++b) {
            const double wb = wv[p * k + b];
            for (std::size_t i = 0; i < 3; ++i) out[p * 3 + i] += wb * yv[p * 3 * k + b * 3 + i];
        }
    return make_result("blend_points", {n, 3}, std::move(out), {y, w},
                       [n, k, y, w](std::span<const double>, std::span<const double> g,
                                    std::span<const std::span<double>> grads) {
                           const auto yv = y.data();
                           const auto wv = w.data();
                           auto gy = grads[0];
                           auto gw = grads[1];
                           for (std::size_t p = 0; p < n; ++p)
                               for (std::size_t b = 0; b < k; ++b) {
                                   double acc = 0.0;
                                   for (std::size_t i = 0; i < 3; ++i) {
                                       const double gi = g[p * 3 + i];
                                       if (!gy.empty()) gy[p * 3 * k + b * 3 + i] += gi * wv[p * k + b];
                                       acc += gi * yv[p * 3 * k + b * 3 + i];
                                   }
                                   if (!gw.empty()) gw[p * k + b] += acc;
                               }
                       });
}

Tensor inverse_lbs(const Tensor& points, const BoneTransforms& transforms, const Tensor& weights) {
    return blend_points(transform_points(points, transforms.rotations, transforms.translations), weights);
}

} // namespace polyhuman
