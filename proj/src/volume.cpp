#include "cephforge/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cephforge/io.hpp"

namespace cephforge {

namespace {

constexpr double kSnap = 1e-9;

double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < kSnap ? r : x;
}

}  // namespace

Volume::Volume(Dims3 dims, Vec3 spacing, Vec3 origin, std::vector<double> data)
    : dims_(dims), spacing_(spacing), origin_(origin), data_(std::move(data)) {
    if (dims_.nx < 1 || dims_.ny < 1 || dims_.nz < 1) throw ValidationError("volume dims must be >= 1");
    if (!(spacing_.x > 0 && spacing_.y > 0 && spacing_.z > 0))
        throw ValidationError("volume spacing must be positive");
    if (data_.size() != dims_.count())
        throw ValidationError("volume payload holds " + std::to_string(data_.size()) + " scalars, dims require " +
                              std::to_string(dims_.count()));
    if (!std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); }))
        throw ValidationError("volume contains non-finite values");
}

Volume Volume::filled(Dims3 dims, Vec3 spacing, Vec3 origin, double value) {
    return Volume(dims, spacing, origin, std::vector<double>(dims.count(), value));
}

Vec3 Volume::centered_origin(Dims3 dims, Vec3 spacing) {
    return {-0.5 * static_cast<double>(dims.nx - 1) * spacing.x, -0.5 * static_cast<double>(dims.ny - 1) * spacing.y,
            -0.5 * static_cast<double>(dims.nz - 1) * spacing.z};
}

Vec3 Volume::world_of(double i, double j, double k) const {
    return {origin_.x + i * spacing_.x, origin_.y + j * spacing_.y, origin_.z + k * spacing_.z};
}

Vec3 Volume::index_of(const Vec3& w) const {
    return {(w.x - origin_.x) / spacing_.x, (w.y - origin_.y) / spacing_.y, (w.z - origin_.z) / spacing_.z};
}

Volume Volume::with_data(std::vector<double> data) const { return Volume(dims_, spacing_, origin_, std::move(data)); }

bool Volume::same_grid(const Volume& o) const {
    return dims_ == o.dims_ && spacing_ == o.spacing_ && origin_ == o.origin_;
}

RigidTransform RigidTransform::rotation_z(double degrees, Vec3 translation) {
    const double a = degrees * std::numbers::pi / 180.0;
    RigidTransform t;
    t.rotation = Mat3{{std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0}};
    t.translation = translation;
    return t;
}

void RigidTransform::validate() const {
    const Mat3 rtr = rotation.transposed() * rotation;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) > 1e-9)
                throw ValidationError("rotation is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-9) throw ValidationError("rotation determinant is not +1");
    if (!std::isfinite(translation.x) || !std::isfinite(translation.y) || !std::isfinite(translation.z))
        throw ValidationError("translation is not finite");
}

Volume resample_rigid(const Volume& v, const RigidTransform& t, Interpolation interp) {
    t.validate();
    const Dims3& d = v.dims();
    std::vector<double> out(d.count(), kAirHu);
    const double hi[3] = {static_cast<double>(d.nx - 1), static_cast<double>(d.ny - 1),
                          static_cast<double>(d.nz - 1)};

    for (std::size_t k = 0; k < d.nz; ++k)
        for (std::size_t j = 0; j < d.ny; ++j)
            for (std::size_t i = 0; i < d.nx; ++i) {
                const Vec3 src = v.index_of(t.apply_inverse(v.world_of(double(i), double(j), double(k))));
                double f[3] = {snap(src.x), snap(src.y), snap(src.z)};
                bool inside = true;
                for (int a = 0; a < 3; ++a) inside = inside && f[a] >= 0.0 && f[a] <= hi[a];
                if (!inside) continue;

                double& dst = out[v.index(i, j, k)];
                if (interp == Interpolation::nearest) {
                    dst = v.at(static_cast<std::size_t>(std::lround(f[0])), static_cast<std::size_t>(std::lround(f[1])),
                               static_cast<std::size_t>(std::lround(f[2])));
                    continue;
                }
                std::size_t i0[3];
                double w[3];
                for (int a = 0; a < 3; ++a) {
                    const double fl = std::floor(f[a]);
                    i0[a] = static_cast<std::size_t>(fl);
                    w[a] = f[a] - fl;
                    // keep the upper neighbour in range on the last voxel plane
                    if (w[a] == 0.0 || i0[a] + 1 > static_cast<std::size_t>(hi[a])) w[a] = 0.0;
                }
                double acc = 0.0;
                for (int c = 0; c < 8; ++c) {
                    const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
                    const double wt = (bx ? w[0] : 1 - w[0]) * (by ? w[1] : 1 - w[1]) * (bz ? w[2] : 1 - w[2]);
                    if (wt == 0.0) continue;
                    acc += wt * v.at(i0[0] + bx, i0[1] + by, i0[2] + bz);
                }
                dst = acc;
            }
    return v.with_data(std::move(out));
}

void EnhanceParams::validate() const {
    if (!(air_threshold < bone_threshold)) throw ValidationError("air_threshold must be below bone_threshold");
    if (!(bone_weight > 0.0)) throw ValidationError("bone weight must be positive");
}

double enhance_value(double hu, const EnhanceParams& p) {
    if (hu > p.bone_threshold) return hu * p.bone_weight;
    if (hu < p.air_threshold) return kAirHu;
    return hu;
}

Volume enhance_skeleton(const Volume& v, const EnhanceParams& p) {
    p.validate();
    std::vector<double> out(v.data().size());
    std::transform(v.data().begin(), v.data().end(), out.begin(), [&](double hu) { return enhance_value(hu, p); });
    return v.with_data(std::move(out));
}

namespace {

Dims3 parse_dims3(const std::string& text) {
    const auto vals = io::parse_doubles(text, 3);
    Dims3 d;
    std::size_t* slots[3] = {&d.nx, &d.ny, &d.nz};
    for (int a = 0; a < 3; ++a) {
        if (vals[a] < 1 || vals[a] != std::floor(vals[a])) throw ValidationError("dims must be positive integers");
        *slots[a] = static_cast<std::size_t>(vals[a]);
    }
    return d;
}

const std::string& require(const io::KeyValues& kv, const std::string& key, const std::filesystem::path& p) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError(p.string() + ": missing key '" + key + "'");
    return it->second;
}

}  // namespace

Volume load_volume(const std::filesystem::path& path) {
    const auto meta_path = io::meta_path_for(path);
    const auto kv = io::read_key_values(meta_path);
    const Dims3 dims = parse_dims3(require(kv, "dims", meta_path));
    const auto sp = io::parse_doubles(require(kv, "spacing_mm", meta_path), 3);
    if (!(sp[0] > 0 && sp[1] > 0 && sp[2] > 0)) throw ValidationError(meta_path.string() + ": spacing must be positive");
    const auto org = kv.contains("origin_mm") ? io::parse_doubles(kv.at("origin_mm"), 3) : std::vector<double>(3, 0.0);
    const std::string dtype = kv.contains("dtype") ? kv.at("dtype") : "int16le";
    if (dtype != "int16le") throw ValidationError(meta_path.string() + ": unsupported dtype '" + dtype + "'");

    const auto raw_path = kv.contains("data_file") ? meta_path.parent_path() / kv.at("data_file") : io::raw_path_for(path);
    const auto bytes = io::read_bytes(raw_path);
    if (bytes.size() != dims.count() * 2)
        throw ValidationError(raw_path.string() + ": payload holds " + std::to_string(bytes.size() / 2) +
                              " scalars (" + std::to_string(bytes.size()) + " bytes), metadata declares " +
                              std::to_string(dims.count()));

    std::vector<double> data(dims.count());
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto lo = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[2 * n]));
        const auto hi = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[2 * n + 1]));
        const auto raw = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
        data[n] = std::max(kHuFloor, static_cast<double>(raw));
    }
    return Volume(dims, {sp[0], sp[1], sp[2]}, {org[0], org[1], org[2]}, std::move(data));
}

void save_volume(const std::filesystem::path& path, const Volume& v) {
    std::vector<char> bytes(v.data().size() * 2);
    for (std::size_t n = 0; n < v.data().size(); ++n) {
        const double r = std::clamp(std::round(v.data()[n]), -32768.0, 32767.0);
        const auto word = static_cast<std::uint16_t>(static_cast<std::int16_t>(r));
        bytes[2 * n] = static_cast<char>(word & 0xff);
        bytes[2 * n + 1] = static_cast<char>(word >> 8);
    }
    io::write_bytes(io::raw_path_for(path), bytes);
    const auto& d = v.dims();
    const double dims[3] = {double(d.nx), double(d.ny), double(d.nz)};
    const double sp[3] = {v.spacing().x, v.spacing().y, v.spacing().z};
    const double org[3] = {v.origin().x, v.origin().y, v.origin().z};
    io::write_key_values(io::meta_path_for(path), {{"dims", io::format_doubles(dims)},
                                                   {"spacing_mm", io::format_doubles(sp)},
                                                   {"origin_mm", io::format_doubles(org)},
                                                   {"dtype", "int16le"}});
}

}  // namespace cephforge
